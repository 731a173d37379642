import json
from collections import Counter

import pytest

from resprefine import constraints as C
from resprefine.errors import ParseError, UnknownOperation, UnresolvedEntity
from resprefine.loader import load_spec, unroll_schema
from resprefine.model import Loc, Schema, SchemaField, SpecModel, param_id


def _doc(paths=None, schemas=None):
    doc = {"openapi": "3.0.0", "info": {"title": "t", "version": "1"}, "paths": paths or {}}
    if schemas:
        doc["components"] = {"schemas": schemas}
    return doc


def _check_op():
    form = {
        "type": "object",
        "properties": {"text": {"type": "string"}, "data": {"type": "string"}, "language": {"type": "string"}},
    }
    body = {"content": {"application/x-www-form-urlencoded": {"schema": form}}, "required": True}
    return load_spec(_doc({"/check": {"post": {"operationId": "check", "requestBody": body, "responses": {"200": {"description": "ok"}}}}}))


def test_petstore_operation_mix(petstore):
    assert len(petstore.operations) == 20
    assert Counter(op.method for op in petstore.operations.values()) == {"GET": 8, "POST": 7, "PUT": 2, "DELETE": 3}


def test_petstore_ids_and_path_params(petstore):
    op = petstore.operations["deleteOrder"]
    (p,) = op.live_inputs
    assert p.id == "deleteorder.path.orderId"
    assert p.is_required
    assert petstore.operations["placeOrder"].output("placeOrder.200.id") is not None
    for op in petstore.operations.values():
        paths = [q.pname for q in op.inputs if q.loc is Loc.PATH]
        assert sorted(paths) == sorted(set(paths))


def test_empty_document():
    m = load_spec(_doc())
    assert m.operations == {} and list(m.constraints()) == []


def test_yaml_and_malformed_input():
    yaml_text = "openapi: 3.0.0\ninfo: {title: t, version: '1'}\npaths:\n  /ping:\n    get:\n      responses: {'200': {description: ok}}\n"
    m = load_spec(yaml_text, format="yaml")
    assert list(m.operations) == ["getPing"]
    with pytest.raises(ParseError):
        load_spec("{not json", format="json")
    with pytest.raises(ParseError):
        load_spec({"paths": {}})


def test_unroll_two_level_composition():
    m = SpecModel()
    m.schemas["Address"] = Schema("Address", [SchemaField("city", "string", True)])
    order = Schema("Order", [SchemaField("id", "integer", True), SchemaField("ship", "object", True, ref="Address")])
    leaves = unroll_schema(order, m, 3)
    assert [(p.pname, p.is_required) for p in leaves] == [("order.id", True), ("order.ship.city", True)]


def test_unroll_optional_parent_makes_child_optional():
    m = SpecModel()
    m.schemas["Address"] = Schema("Address", [SchemaField("city", "string", True)])
    order = Schema("Order", [SchemaField("ship", "object", False, ref="Address")])
    (leaf,) = unroll_schema(order, m, 3)
    assert leaf.pname == "order.ship.city" and not leaf.is_required
    assert leaf.required_chain == (False, True)


def test_self_reference_stops_at_depth_limit():
    m = SpecModel()
    node = Schema("Node", [SchemaField("value", "string", True), SchemaField("next", "object", False, ref="Node")])
    m.schemas["Node"] = node
    leaves = unroll_schema(node, m, 3)
    # hand expansion: node.value, node.next.value, node.next.next.value
    assert [p.pname for p in leaves] == ["node.value", "node.next.value", "node.next.next.value"]
    assert m.recursive_refs


def test_mutual_recursion_is_flagged():
    schemas = {
        "A": {"type": "object", "properties": {"name": {"type": "string"}, "b": {"$ref": "#/components/schemas/B"}}},
        "B": {"type": "object", "properties": {"label": {"type": "string"}, "a": {"$ref": "#/components/schemas/A"}}},
    }
    body = {"content": {"application/json": {"schema": {"$ref": "#/components/schemas/A"}}}, "required": True}
    m = load_spec(_doc({"/a": {"post": {"operationId": "makeA", "requestBody": body, "responses": {}}}}, schemas), depth_limit=2)
    names = [p.pname for p in m.operations["makeA"].inputs]
    assert names == ["name", "b.label"]
    assert m.recursive_refs


def test_add_constraint_is_idempotent():
    m = _check_op()
    one = C.One(("check.formdata.text", "check.formdata.data"))
    assert m.add_constraint(one)
    assert not m.add_constraint(C.One(("check.formdata.data", "check.formdata.text")))
    assert m.operations["check"].local_constraints == [one]


def test_producer_consumer_is_global(petstore):
    pc = C.ProducerConsumer("placeOrder", "placeOrder.200.id", "deleteOrder", "deleteorder.path.orderId")
    petstore.add_constraint(pc)
    assert petstore.global_constraints == [pc]
    assert petstore.extract_dependencies() == [pc]


def test_unresolvable_constraint_rejected(petstore):
    with pytest.raises(UnresolvedEntity):
        petstore.add_constraint(C.One(("nosuch.query.a", "nosuch.query.b")))
    with pytest.raises(UnresolvedEntity):
        petstore.add_constraint(C.ProducerConsumer("placeOrder", "placeOrder.200.nothing", "deleteOrder", "deleteorder.path.orderId"))


def test_remove_operation_drops_its_dependencies(petstore):
    pc = C.ProducerConsumer("placeOrder", "placeOrder.200.id", "deleteOrder", "deleteorder.path.orderId")
    petstore.add_constraint(pc)
    petstore.remove_operation("placeOrder")
    assert "placeOrder" not in petstore.operations
    assert petstore.extract_dependencies() == []
    assert len(petstore.original_operations) == 20
    with pytest.raises(UnknownOperation):
        petstore.remove_operation("placeOrder")


def test_remove_parameter_shrinks_or_drops_groups():
    m = _check_op()
    text, data, lang = "check.formdata.text", "check.formdata.data", "check.formdata.language"
    m.add_constraint(C.One((text, data, lang)))
    m.remove_parameter(lang)
    assert m.operations["check"].local_constraints == [C.One((text, data))]
    m.remove_parameter(text)
    assert m.operations["check"].local_constraints == []
    assert not m.is_live_input(text)
    assert m.operations["check"].input(text).deleted


def test_dependencies_keep_insertion_order(petstore):
    a = C.ProducerConsumer("addPet", "addPet.200.id", "getPetById", "getpetbyid.path.petId")
    b = C.ProducerConsumer("addPet", "addPet.200.id", "deletePet", "deletepet.path.petId")
    assert petstore.extract_dependencies() == []
    petstore.add_constraint(a)
    assert petstore.extract_dependencies() == [a]
    petstore.add_constraint(b)
    assert petstore.extract_dependencies() == [a, b]


def test_learned_constraints_survive_a_reload(petstore):
    pc = C.ProducerConsumer("placeOrder", "placeOrder.200.id", "deleteOrder", "deleteorder.path.orderId")
    petstore.add_constraint(pc)
    petstore.remove_parameter("deletepet.header.api_key")
    again = load_spec(json.loads(petstore.dumps()))
    assert again.extract_dependencies() == [pc]
    assert not again.is_live_input("deletepet.header.api_key")


def test_param_id_lowercases_operation():
    assert param_id("deleteOrder", Loc.PATH, "orderId") == "deleteorder.path.orderId"


def test_constraint_dict_round_trip():
    items = [
        C.One(("a.query.x", "a.query.y")),
        C.DataArithmetic("a.query.x", ">", "a.query.y", True),
        C.DataNonArithmetic("a.query.g", "categorical", ("M", "F")),
        C.DataInfluencedParamSelection(C.DataArithmetic("a.query.t", "=", "audio"), C.One(("a.query.u", "a.query.f"))),
        C.ParameterInfluencedDataValues(C.Present("a.query.th"), C.DataArithmetic("a.query.t", "=", "link")),
        C.ConditionalParameterRequired("a.query.lat", True, "a.query.lon", True),
        C.ProducerConsumer("p", "p.200.id", "c", "c.path.id"),
    ]
    for c in items:
        assert C.from_dict(json.loads(json.dumps(C.to_dict(c)))) == c
