import httpx
import pytest

from resprefine import constraints as C
from resprefine.analyzer.backend import RuleBased
from resprefine.constraints import ConstraintCategory as Cat
from resprefine.errors import BindError
from resprefine.fixtures import CATALOG, get_fixture, ground_truth_check, serve_fixture
from resprefine.fixtures.server import Route, error, reply, start_server


def test_catalog_names_match():
    for name, factory in CATALOG.items():
        assert factory().name == name and get_fixture(name).description


def test_unknown_fixture():
    with pytest.raises(KeyError):
        get_fixture("nope")


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_scripted_messages_classify_as_labelled(name):
    rb = RuleBased()
    for message, status, category in get_fixture(name).messages:
        assert rb.classify(message, status) is category, message


def test_catalog_exercises_every_category():
    seen = set().union(*(get_fixture(n).categories for n in CATALOG))
    assert seen == set(Cat)


def test_langtool_one_of_text_or_data():
    with serve_fixture("langtool") as h:
        both = httpx.post(h.url + "/check", data={"text": "hi", "data": "{}", "language": "en"})
        one = httpx.post(h.url + "/check", data={"text": "hi", "language": "en"})
        bad = httpx.post(h.url + "/check", data={"text": "hi", "language": "xx"})
    assert both.status_code == 400 and "not both" in both.json()["message"]
    assert one.status_code == 200
    assert bad.status_code == 400 and "not a valid language" in bad.json()["message"]


def test_petstore_order_lifecycle():
    with serve_fixture("petstore") as h:
        missing = httpx.delete(h.url + "/store/order/5")
        order = httpx.post(h.url + "/store/order", json={"petId": 1, "quantity": 1}).json()
        gone = httpx.delete(f"{h.url}/store/order/{order['id']}")
    assert missing.status_code == 404 and missing.json()["message"] == "Order Not Found"
    assert gone.status_code == 200


def test_blank_404_has_empty_body():
    with serve_fixture("blank404") as h:
        r = httpx.get(h.url + "/widgets/999")
        made = httpx.post(h.url + "/widgets", json={}).json()
        ok = httpx.get(f"{h.url}/widgets/{made['id']}")
    assert r.status_code == 404 and r.content == b""
    assert ok.status_code == 200


def test_state_resets_between_starts():
    def first_message():
        with serve_fixture("noisy") as h:
            return [httpx.get(h.url + "/flaky").json()["message"] for _ in range(2)]

    a, b = first_message(), first_message()
    assert a == b and a[0] != a[1]


def test_unmatched_routes():
    with serve_fixture("all_ok") as h:
        assert httpx.get(h.url + "/nothing").status_code == 404
        assert httpx.delete(h.url + "/ping").status_code == 405


def test_handler_crash_is_500():
    def boom(req):
        raise RuntimeError("bad")

    with start_server([Route("GET", "/x", boom), Route("GET", "/y/{id}", lambda r: reply(200, {"id": r.path_params["id"]}))]) as h:
        assert httpx.get(h.url + "/x").status_code == 500
        assert httpx.get(h.url + "/y/abc").json() == {"id": "abc"}


def test_port_in_use():
    with start_server([Route("GET", "/", lambda r: error(400, "x"))]) as h:
        with pytest.raises(BindError):
            start_server([], h.port)


def test_ground_truth_check():
    one = C.One(("c.formdata.text", "c.formdata.data"))
    cat = C.DataNonArithmetic("c.formdata.language", "categorical", ("en", "fr"))
    report = ground_truth_check([C.One(("c.formdata.data", "c.formdata.text"))], [one, cat])
    assert report.equivalent == [one] and report.missing == [cat] and report.extra == []
    assert not report.complete
    extra = ground_truth_check([one, cat, C.AdditionalMandatory("c.formdata.text")], [one, cat])
    assert extra.complete and extra.extra == [C.AdditionalMandatory("c.formdata.text")]
    assert ground_truth_check([], []).complete
