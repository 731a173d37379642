import json
from importlib import resources

import httpx
import pytest
from hypothesis import given, strategies as st

from resprefine import constraints as C
from resprefine.analyzer import entities as E
from resprefine.analyzer.backend import InferenceService, RuleBased
from resprefine.analyzer.normalize import extract_message, normalize_message
from resprefine.analyzer.rules import classify_text
from resprefine.analyzer.verdict import Action, Analyzer, apply_verdict
from resprefine.constraints import ConstraintCategory as Cat
from resprefine.errors import BackendUnavailable, NoProducerFound, NoTargetFound
from resprefine.failures import FailureRecord
from resprefine.loader import load_spec
from resprefine.model import InputParameter, Loc, Operation, SpecModel, param_id


def _params(op: str, *names: str, loc: Loc = Loc.QUERY) -> list[InputParameter]:
    out = []
    for n in names:
        p = InputParameter(n, "string", False, loc)
        p.id = param_id(op, loc, n)
        out.append(p)
    return out


def _op(name: str, *params: str, method: str = "GET", path: str = "/x") -> Operation:
    return Operation(name, path, method, inputs=_params(name, *params))


def _model(*ops: Operation) -> SpecModel:
    m = SpecModel(operations={o.opname: o for o in ops})
    m.original_operations = tuple(m.operations)
    return m


def _corpus() -> list[dict]:
    text = resources.files("resprefine.corpus").joinpath("samples.jsonl").read_text()
    return [json.loads(line) for line in text.splitlines() if line.strip()]


# -- classification ----------------------------------------------------------


@pytest.mark.parametrize(
    "message,status,expected",
    [
        ("Either city or zipcode is required, not both.", 400, Cat.ONE),
        ("API key not valid. Please pass a valid API key.", 401, Cat.CONFIGURATION_AUTHENTICATION),
        ("Internal Server Error", 500, Cat.UNHANDLED),
        ("Method Not Allowed Request method 'POST' not supported", 405, Cat.UNSUPPORTED_OPERATION),
    ],
)
def test_classify_samples(message, status, expected):
    assert RuleBased().classify(message, status) is expected


def test_corpus_covers_every_row_and_classifies():
    records = _corpus()
    rows = {r["row"] for r in records}
    assert rows == set(range(1, 15))
    assert all(sum(1 for r in records if r["row"] == row) >= 3 for row in rows)
    wrong = [r for r in records if classify_text(r["message"], r["status"])[0].name != r["expected_category"]]
    assert wrong == []


# -- target identification ---------------------------------------------------


def test_email_paraphrase_picks_email_id():
    cands = _params("signup", "gender", "linkedin", "password", "emailId", "country")
    assert E.identify_target_parameters("This email beulalingo@yahoo.com is already in use.", cands)[0] == "signup.query.emailId"


def test_storage_paraphrase_picks_storage_cap():
    cands = _params("vol", "storageCap", "name")
    assert E.identify_target_parameters("Storage capacity cannot be less than zero", cands) == ["vol.query.storageCap"]


def test_quoted_exact_name():
    cands = _params("scores", "points", "score")
    assert E.identify_target_parameters('"points" is a required parameter.', cands)[0] == "scores.query.points"


def test_no_target():
    with pytest.raises(NoTargetFound):
        E.identify_target_parameters("Something went wrong", _params("x", "alpha", "beta"))


# -- relational extraction ---------------------------------------------------


def test_param_vs_param_comparison():
    cands = _params("ev", "afterTimestamp", "beforeTimestamp")
    ids = [p.id for p in cands]
    c = E.extract_relational_constraint("afterTimestamp must be greater than beforeTimestamp", ids, cands)
    assert c == C.DataArithmetic("ev.query.afterTimestamp", ">", "ev.query.beforeTimestamp", True)


def test_surpass_comparison():
    cands = _params("fin", "gain", "expenditure")
    c = E.extract_relational_constraint("gain should surpass expenditure", [p.id for p in cands], cands)
    assert c == C.DataArithmetic("fin.query.gain", ">", "fin.query.expenditure", True)


def test_constant_with_number_word():
    cands = _params("vol", "storageCap")
    c = E.extract_relational_constraint("Storage capacity cannot be less than zero", ["vol.query.storageCap"], cands)
    assert c == C.DataArithmetic("vol.query.storageCap", ">=", 0)


def test_categorical_values():
    cands = _params("prof", "gender")
    msg = "`PL' is not a valid gender. Supported values are `Male' , `Female', `Other'."
    c = E.extract_relational_constraint(msg, ["prof.query.gender"], cands)
    assert c == C.DataNonArithmetic("prof.query.gender", "categorical", ("Male", "Female", "Other"))


def test_unique_property():
    cands = _params("acct", "emailId")
    c = E.extract_relational_constraint("This email a@b.io is already in use.", ["acct.query.emailId"], cands)
    assert c == C.DataNonArithmetic("acct.query.emailId", "unique")


# -- nested --------------------------------------------------------------------


def test_nested_data_influenced_selection():
    op = _op("media", "type", "url", "file")
    c = E.split_nested_constraint("If type is 'audio', only one of the other two parameters is required", op)
    assert c == C.DataInfluencedParamSelection(
        C.DataArithmetic("media.query.type", "=", "audio"), C.One(("media.query.url", "media.query.file"))
    )


def test_nested_parameter_influenced_data():
    op = _op("post", "thumbnail", "type", "title")
    c = E.split_nested_constraint("If thumbnail is present, type must be 'link'.", op)
    assert c == C.ParameterInfluencedDataValues(C.Present("post.query.thumbnail"), C.DataArithmetic("post.query.type", "=", "link"))


def test_nested_conditional_required():
    op = _op("geo", "longitude", "latitude")
    c = E.split_nested_constraint("If longitude specified then latitude should be too", op)
    assert c == C.ConditionalParameterRequired("geo.query.latitude", True, "geo.query.longitude", True)


# -- producer / consumer --------------------------------------------------------


def test_order_not_found(petstore):
    pc = E.infer_producer_consumer("Order Not Found", petstore.operations["deleteOrder"], petstore)
    assert pc == C.ProducerConsumer("placeOrder", "placeOrder.200.id", "deleteOrder", "deleteorder.path.orderId")


def test_pet_not_found_on_order(petstore):
    pc = E.infer_producer_consumer("Pet not found", petstore.operations["placeOrder"], petstore)
    assert pc == C.ProducerConsumer("addPet", "addPet.200.id", "placeOrder", "placeorder.body.petId")


def test_no_post_producer():
    getter = Operation("getWidget", "/widgets/{widgetId}", "GET", inputs=_params("getWidget", "widgetId", loc=Loc.PATH))
    with pytest.raises(NoProducerFound):
        E.infer_producer_consumer("Widget not found", getter, _model(getter))


# -- normalization -------------------------------------------------------------


def test_normalize_examples():
    assert normalize_message("This email beulalingo@yahoo.com is already in use.") == "This email ⟨EMAIL⟩ is already in use."
    assert normalize_message("Order Not Found") == "Order Not Found"
    assert normalize_message("'PL' is not a valid gender.").startswith("⟨STR⟩ is not a valid gender")


@given(st.text(max_size=80))
def test_normalize_is_idempotent(text):
    once = normalize_message(text)
    assert normalize_message(once) == once


def test_extract_message_from_json_and_html():
    assert extract_message('{"error": {"message": "Order Not Found"}}') == "Order Not Found"
    assert "Not Found" in extract_message("<html><body><h1>Not Found</h1></body></html>")


# -- verdicts --------------------------------------------------------------------


def _failure(op, status, message, sent=()):
    return FailureRecord(op, status, message, normalize_message(message), {"params": {s: 1 for s in sent}})


def test_blank_404_becomes_dependency(petstore):
    v = Analyzer().analyze(_failure("getPetById", 404, ""), petstore)
    assert v.category is Cat.PRODUCER_CONSUMER and v.action is Action.ADD_CONSTRAINT
    assert v.constraint == C.ProducerConsumer("addPet", "addPet.200.id", "getPetById", "getpetbyid.path.petId")


def test_blank_400_and_422_regenerate(petstore):
    for status, op in ((400, "addPet"), (422, "getInventory")):
        v = Analyzer().analyze(_failure(op, status, ""), petstore)
        assert v.action is Action.REGENERATE_DATA and v.constraint is None


def test_actions_follow_categories(petstore):
    a = Analyzer()
    auth = a.analyze(_failure("getInventory", 401, "API key not valid. Please pass a valid API key."), petstore)
    assert auth.action is Action.REQUEST_USER_INPUT
    crash = a.analyze(_failure("getInventory", 500, "Internal Server Error"), petstore)
    assert crash.category is Cat.UNHANDLED and crash.action is Action.REPORT_DEFECT
    gone = a.analyze(_failure("addPet", 405, "Method Not Allowed Request method `POST' not supported"), petstore)
    assert gone.action is Action.REMOVE_OPERATION and gone.target == "addPet"


def test_unknown_parameter_is_tombstoned():
    m = _model(_op("search", "q", "url"))
    v = Analyzer().analyze(_failure("search", 400, "Received unknown parameter: url", sent=["search.query.url"]), m)
    assert v.action is Action.REMOVE_PARAMETER and v.target == "search.query.url"
    assert apply_verdict(m, v)
    assert not m.is_live_input("search.query.url")


def test_mandatory_targets_params_not_sent():
    m = _model(_op("scores", "points", "score"))
    v = Analyzer().analyze(_failure("scores", 400, '"points" is a required parameter.'), m)
    assert v.constraint == C.AdditionalMandatory("scores.query.points")


def test_group_needs_two_targets():
    m = _model(_op("w", "city", "units"))
    v = Analyzer().analyze(_failure("w", 400, "Either city or zipcode is required, not both."), m)
    assert v.category is Cat.UNHANDLED


# -- external backend ------------------------------------------------------------


def _service(handler, retries=0):
    return InferenceService("http://inference.test/v1", api_key="k", retries=retries, client=httpx.Client(transport=httpx.MockTransport(handler)))


def test_inference_service_fills_in_unhandled():
    seen = []

    def handler(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        seen.append((body["task"], request.headers.get("authorization")))
        return httpx.Response(200, json={"category": "ONE"})

    m = _model(_op("w", "a", "b"))
    f = _failure("w", 400, "Something went wrong")
    assert Analyzer([_service(handler)]).classify_failure(f, m.operations["w"]) is Cat.ONE
    assert seen == [("classify", "Bearer k")]


def test_unavailable_backend_falls_back_to_rules():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(503)

    svc = _service(handler, retries=1)
    with pytest.raises(BackendUnavailable):
        svc.classify("x", 400)
    assert len(calls) == 2
    f = _failure("w", 400, "Something went wrong")
    assert Analyzer([svc]).classify_failure(f) is Cat.UNHANDLED


def test_from_env(monkeypatch):
    monkeypatch.delenv("RESPREFINE_INFERENCE_URL", raising=False)
    assert InferenceService.from_env() is None
    monkeypatch.setenv("RESPREFINE_INFERENCE_URL", "http://inference.test")
    monkeypatch.setenv("RESPREFINE_INFERENCE_KEY", "secret")
    svc = InferenceService.from_env()
    assert svc.url == "http://inference.test" and svc.api_key == "secret"


def test_fixture_documents_load():
    from resprefine.fixtures import CATALOG

    for name, factory in CATALOG.items():
        assert load_spec(factory().document).operations, name
