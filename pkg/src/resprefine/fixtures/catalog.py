"""Scripted fixture services, each enforcing a known set of constraints.

Every factory builds fresh handler state, so restarting a fixture resets its
resource stores. Error messages follow the canonical sample for their category.
"""

from __future__ import annotations

import itertools
import json
import random
import string
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Optional

from resprefine import constraints as C
from resprefine.constraints import ConstraintCategory as Cat
from resprefine.fixtures.server import Request, Response, Route, error, reply

# -- document helpers --------------------------------------------------------


def _doc(title: str, paths: dict) -> dict:
    return {"openapi": "3.0.3", "info": {"title": title, "version": "1.0"}, "paths": paths}


def _param(name: str, where: str = "query", type: str = "string", required: bool = False, example: Any = None, **schema) -> dict:
    p = {"name": name, "in": where, "required": required or where == "path", "schema": {"type": type, **schema}}
    if example is not None:
        p["example"] = example
    return p


def _obj(props: dict, required: tuple = ()) -> dict:
    out: dict = {"type": "object", "properties": props}
    if required:
        out["required"] = list(required)
    return out


def _body(schema: dict, media: str = "application/json") -> dict:
    return {"required": True, "content": {media: {"schema": schema}}}


def _ok(schema: Optional[dict] = None, code: str = "200") -> dict:
    resp: dict = {"description": "ok"}
    if schema is not None:
        resp["content"] = {"application/json": {"schema": schema}}
    return {code: resp}


def _op(op_id: str, params: tuple = (), body: Optional[dict] = None, responses: Optional[dict] = None) -> dict:
    op: dict = {"operationId": op_id, "responses": responses or _ok()}
    if params:
        op["parameters"] = list(params)
    if body is not None:
        op["requestBody"] = body
    return op


_ID_OBJ = _obj({"id": {"type": "integer"}})


class Store:
    """In-memory resources keyed by monotonically increasing integer ids."""

    def __init__(self) -> None:
        self.items: dict[int, dict] = {}
        self._ids = itertools.count(1)

    def create(self, data: Optional[dict] = None) -> dict:
        item = dict(data or {})
        item["id"] = next(self._ids)
        self.items[item["id"]] = item
        return item

    def get(self, raw: Any) -> Optional[dict]:
        try:
            return self.items.get(int(raw))
        except (TypeError, ValueError):
            return None


def _present(value: Any) -> bool:
    return value is not None and value != ""


# -- fixture description ----------------------------------------------------


@dataclass
class FixtureSpec:
    name: str
    document: dict
    routes: Callable[[], list[Route]]
    ground_truth: list = field(default_factory=list)
    description: str = ""
    categories: frozenset = frozenset()
    # (message, status, category) for every scripted error
    messages: list[tuple[str, int, Cat]] = field(default_factory=list)
    headers: dict[str, str] = field(default_factory=dict)
    multi_constraint: bool = False

    @property
    def operation_count(self) -> int:
        return sum(
            1 for item in self.document.get("paths", {}).values() for m in item if m in ("get", "post", "put", "delete", "patch")
        )


# -- langtool ----------------------------------------------------------------

LANGUAGES = ("ar", "de", "en", "es", "fr")
_LANG_MSG = "'{v}' is not a valid language. Supported values are " + ", ".join(f"'{x}'" for x in LANGUAGES) + "."
_ONE_TEXT = "Either text or data is required, not both."


def langtool() -> FixtureSpec:
    form = _obj(
        {
            "text": {"type": "string", "example": "The cat sat on the mat."},
            "data": {"type": "string"},
            "language": {"type": "string"},
        },
        required=("language",),
    )
    doc = _doc(
        "langtool",
        {
            "/check": {"post": _op("check", body=_body(form, "application/x-www-form-urlencoded"), responses=_ok(_obj({"matches": {"type": "array", "items": {"type": "string"}}})))},
            "/languages": {"get": _op("getLanguages", responses=_ok({"type": "array", "items": {"type": "string"}}))},
        },
    )

    def routes() -> list[Route]:
        def check(req: Request) -> Response:
            if _present(req.arg("text")) and _present(req.arg("data")):
                return error(400, _ONE_TEXT)
            lang = req.arg("language")
            if lang not in LANGUAGES:
                return error(400, _LANG_MSG.format(v=lang))
            return reply(200, {"matches": []})

        return [Route("POST", "/check", check), Route("GET", "/languages", lambda r: reply(200, list(LANGUAGES)))]

    return FixtureSpec(
        "langtool",
        doc,
        routes,
        ground_truth=[
            C.One(("check.formdata.text", "check.formdata.data")),
            C.DataNonArithmetic("check.formdata.language", "categorical", LANGUAGES),
        ],
        description="One(text, data) plus a categorical language parameter",
        categories=frozenset({Cat.ONE, Cat.DATA_NON_ARITHMETIC}),
        messages=[(_ONE_TEXT, 400, Cat.ONE), (_LANG_MSG.format(v="xx"), 400, Cat.DATA_NON_ARITHMETIC)],
        multi_constraint=True,
    )


# -- petstore ----------------------------------------------------------------

_TRACE = (
    "java.lang.NullPointerException: file part missing\n"
    "\tat io.swagger.petstore.PetResource.uploadFile(PetResource.java:118)\n"
    "\tat sun.reflect.NativeMethodAccessorImpl.invoke0(Native Method)\n"
    "\tat org.glassfish.jersey.server.ServerRuntime.process(ServerRuntime.java:254)\n"
)


def petstore() -> FixtureSpec:
    doc = json.loads(resources.files("resprefine.fixtures").joinpath("data/petstore.json").read_text())

    def routes() -> list[Route]:
        pets, orders = Store(), Store()
        users: dict[str, dict] = {}

        def pet_or_404(raw: Any) -> Optional[dict]:
            return pets.get(raw)

        def add_pet(req: Request) -> Response:
            data = req.json if isinstance(req.json, dict) else {}
            return reply(200, pets.create({k: v for k, v in data.items() if k != "id"}))

        def update_pet(req: Request) -> Response:
            data = req.json if isinstance(req.json, dict) else {}
            pet = pet_or_404(data.get("id"))
            if pet is None:
                return error(404, "Pet not found")
            pet.update(data)
            return reply(200, pet)

        def get_pet(req: Request) -> Response:
            pet = pet_or_404(req.path_params["petId"])
            return reply(200, pet) if pet else error(404, "Pet not found")

        def delete_pet(req: Request) -> Response:
            pet = pet_or_404(req.path_params["petId"])
            if pet is None:
                return error(404, "Pet not found")
            del pets.items[pet["id"]]
            return reply(200, {"message": str(pet["id"])})

        def place_order(req: Request) -> Response:
            data = req.json if isinstance(req.json, dict) else {}
            return reply(200, orders.create({k: v for k, v in data.items() if k != "id"}))

        def get_order(req: Request) -> Response:
            order = orders.get(req.path_params["orderId"])
            return reply(200, order) if order else error(404, "Order Not Found")

        def delete_order(req: Request) -> Response:
            order = orders.get(req.path_params["orderId"])
            if order is None:
                return error(404, "Order Not Found")
            del orders.items[order["id"]]
            return reply(200, {"message": str(order["id"])})

        def create_user(req: Request) -> Response:
            data = req.json if isinstance(req.json, dict) else {}
            if data.get("username"):
                users[str(data["username"])] = data
            return reply(200, {"message": "ok"})

        def create_many(req: Request) -> Response:
            for u in req.json if isinstance(req.json, list) else []:
                if isinstance(u, dict) and u.get("username"):
                    users[str(u["username"])] = u
            return reply(200, {"message": "ok"})

        def user_op(action: str) -> Callable[[Request], Response]:
            def handle(req: Request) -> Response:
                name = req.path_params["username"]
                if name not in users:
                    return error(404, "User not found")
                if action == "delete":
                    del users[name]
                elif action == "update" and isinstance(req.json, dict):
                    users[name].update(req.json)
                return reply(200, users.get(name, {"message": "ok"}))

            return handle

        return [
            Route("GET", "/pet/findByStatus", lambda r: reply(200, list(pets.items.values()))),
            Route("GET", "/pet/findByTags", lambda r: reply(200, [])),
            Route("POST", "/pet/{petId}/uploadImage", lambda r: reply(500, _TRACE)),
            Route("POST", "/pet", add_pet),
            Route("PUT", "/pet", update_pet),
            Route("GET", "/pet/{petId}", get_pet),
            Route("POST", "/pet/{petId}", lambda r: error(500, "Internal Server Error")),
            Route("DELETE", "/pet/{petId}", delete_pet),
            Route("GET", "/store/inventory", lambda r: reply(200, {"available": len(pets.items)})),
            Route("POST", "/store/order", place_order),
            Route("GET", "/store/order/{orderId}", get_order),
            Route("DELETE", "/store/order/{orderId}", delete_order),
            Route("POST", "/user/createWithList", create_many),
            Route("POST", "/user/createWithArray", create_many),
            Route("GET", "/user/login", lambda r: reply(200, "logged in user session:1")),
            Route("GET", "/user/logout", lambda r: reply(200, {"message": "ok"})),
            Route("POST", "/user", create_user),
            Route("GET", "/user/{username}", user_op("get")),
            Route("PUT", "/user/{username}", user_op("update")),
            Route("DELETE", "/user/{username}", user_op("delete")),
        ]

    pc = C.ProducerConsumer
    truth = [
        pc("placeOrder", "placeOrder.200.id", "deleteOrder", "deleteorder.path.orderId"),
        pc("placeOrder", "placeOrder.200.id", "getOrderById", "getorderbyid.path.orderId"),
        pc("addPet", "addPet.200.id", "getPetById", "getpetbyid.path.petId"),
        pc("addPet", "addPet.200.id", "deletePet", "deletepet.path.petId"),
        pc("addPet", "addPet.200.id", "updatePet", "updatepet.body.id"),
        pc("createUser", "createuser.body.username", "getUserByName", "getuserbyname.path.username"),
        pc("createUser", "createuser.body.username", "updateUser", "updateuser.path.username"),
        pc("createUser", "createuser.body.username", "deleteUser", "deleteuser.path.username"),
    ]
    return FixtureSpec(
        "petstore",
        doc,
        routes,
        ground_truth=truth,
        description="20 operations; two of them only ever answer 500",
        categories=frozenset({Cat.PRODUCER_CONSUMER, Cat.UNHANDLED}),
        messages=[
            ("Order Not Found", 404, Cat.PRODUCER_CONSUMER),
            ("Pet not found", 404, Cat.PRODUCER_CONSUMER),
            ("User not found", 404, Cat.PRODUCER_CONSUMER),
            ("Internal Server Error", 500, Cat.UNHANDLED),
        ],
        multi_constraint=True,
    )


# -- staged: producer-consumer, then One, then categorical --------------------

VISIBILITIES = ("private", "public")
_VIS_MSG = "'{v}' is not a valid visibility. Supported values are " + ", ".join(f"'{x}'" for x in VISIBILITIES) + "."
_ONE_TASK = "Either assignee or team is required, not both."


def staged() -> FixtureSpec:
    project = _obj({"id": {"type": "integer"}, "name": {"type": "string"}})
    doc = _doc(
        "staged",
        {
            "/projects": {
                "post": _op(
                    "createProject",
                    body=_body(_obj({"name": {"type": "string"}}, required=("name",))),
                    responses=_ok(project, "201"),
                )
            },
            "/projects/{projectId}": {
                "get": _op("getProject", (_param("projectId", "path", "integer"),), responses=_ok(project)),
                "put": _op(
                    "updateProject",
                    (_param("projectId", "path", "integer"),),
                    body=_body(_obj({"name": {"type": "string"}, "visibility": {"type": "string"}})),
                    responses=_ok(project),
                ),
            },
            "/projects/{projectId}/tasks": {
                "post": _op(
                    "createTask",
                    (_param("projectId", "path", "integer"), _param("assignee"), _param("team")),
                    responses=_ok(_ID_OBJ, "201"),
                )
            },
            "/tasks/{taskId}": {"get": _op("getTask", (_param("taskId", "path", "integer"),), responses=_ok(_ID_OBJ))},
        },
    )

    def routes() -> list[Route]:
        projects, tasks = Store(), Store()

        def create_project(req: Request) -> Response:
            return reply(201, projects.create({"name": req.field("name")}))

        def get_project(req: Request) -> Response:
            p = projects.get(req.path_params["projectId"])
            return reply(200, p) if p else error(404, "Project not found")

        def update_project(req: Request) -> Response:
            p = projects.get(req.path_params["projectId"])
            if p is None:
                return error(404, "Project not found")
            vis = req.field("visibility")
            if vis is not None and vis not in VISIBILITIES:
                return error(400, _VIS_MSG.format(v=vis))
            return reply(200, p)

        def create_task(req: Request) -> Response:
            p = projects.get(req.path_params["projectId"])
            if p is None:
                return error(404, "Project not found")
            if _present(req.arg("assignee")) and _present(req.arg("team")):
                return error(400, _ONE_TASK)
            return reply(201, tasks.create({"project": p["id"]}))

        def get_task(req: Request) -> Response:
            t = tasks.get(req.path_params["taskId"])
            return reply(200, t) if t else error(404, "Task not found")

        return [
            Route("POST", "/projects", create_project),
            Route("GET", "/projects/{projectId}", get_project),
            Route("PUT", "/projects/{projectId}", update_project),
            Route("POST", "/projects/{projectId}/tasks", create_task),
            Route("GET", "/tasks/{taskId}", get_task),
        ]

    pc = C.ProducerConsumer
    return FixtureSpec(
        "staged",
        doc,
        routes,
        ground_truth=[
            pc("createProject", "createProject.201.id", "getProject", "getproject.path.projectId"),
            pc("createProject", "createProject.201.id", "updateProject", "updateproject.path.projectId"),
            pc("createProject", "createProject.201.id", "createTask", "createtask.path.projectId"),
            pc("createTask", "createTask.201.id", "getTask", "gettask.path.taskId"),
            C.One(("createtask.query.assignee", "createtask.query.team")),
            C.DataNonArithmetic("updateproject.body.visibility", "categorical", VISIBILITIES),
        ],
        description="five operations whose constraints only surface one layer at a time",
        categories=frozenset({Cat.PRODUCER_CONSUMER, Cat.ONE, Cat.DATA_NON_ARITHMETIC}),
        messages=[
            ("Project not found", 404, Cat.PRODUCER_CONSUMER),
            ("Task not found", 404, Cat.PRODUCER_CONSUMER),
            (_ONE_TASK, 400, Cat.ONE),
            (_VIS_MSG.format(v="xx"), 400, Cat.DATA_NON_ARITHMETIC),
        ],
        multi_constraint=True,
    )


# -- termination fixtures ----------------------------------------------------


def all_ok() -> FixtureSpec:
    doc = _doc(
        "all-ok",
        {
            "/ping": {"get": _op("ping")},
            "/echo": {"get": _op("echo", (_param("text"), _param("times", type="integer")))},
            "/notes": {"post": _op("createNote", body=_body(_obj({"title": {"type": "string"}, "body": {"type": "string"}})), responses=_ok(_ID_OBJ))},
        },
    )

    def routes() -> list[Route]:
        notes = Store()
        return [
            Route("GET", "/ping", lambda r: reply(200, {"ok": True})),
            Route("GET", "/echo", lambda r: reply(200, {"text": r.arg("text")})),
            Route("POST", "/notes", lambda r: reply(200, notes.create())),
        ]

    return FixtureSpec("all_ok", doc, routes, description="every request succeeds")


def noisy(seed: int = 7) -> FixtureSpec:
    doc = _doc("noisy", {"/flaky": {"get": _op("flaky", (_param("q"),))}})

    def routes() -> list[Route]:
        rng = random.Random(seed)

        def flaky(req: Request) -> Response:
            word = "".join(rng.choice(string.ascii_lowercase) for _ in range(8))
            return error(400, f"Something went wrong near {word}")

        return [Route("GET", "/flaky", flaky)]

    return FixtureSpec(
        "noisy",
        doc,
        routes,
        description="a fresh unexplained 400 on every request",
        categories=frozenset({Cat.UNHANDLED}),
        messages=[("Something went wrong near abcdefgh", 400, Cat.UNHANDLED)],
    )


# -- blank responses ---------------------------------------------------------


def blank404() -> FixtureSpec:
    doc = _doc(
        "blank404",
        {
            "/widgets": {"post": _op("createWidget", body=_body(_obj({"label": {"type": "string"}})), responses=_ok(_ID_OBJ, "201"))},
            "/widgets/{widgetId}": {"get": _op("getWidget", (_param("widgetId", "path", "integer"),), responses=_ok(_ID_OBJ))},
        },
    )

    def routes() -> list[Route]:
        widgets = Store()

        def get(req: Request) -> Response:
            w = widgets.get(req.path_params["widgetId"])
            return reply(200, w) if w else reply(404)

        return [Route("POST", "/widgets", lambda r: reply(201, widgets.create())), Route("GET", "/widgets/{widgetId}", get)]

    return FixtureSpec(
        "blank404",
        doc,
        routes,
        ground_truth=[C.ProducerConsumer("createWidget", "createWidget.201.id", "getWidget", "getwidget.path.widgetId")],
        description="missing resources answer 404 with an empty body",
        categories=frozenset({Cat.PRODUCER_CONSUMER}),
    )


_BAD_TITLE = "placeholder title"


def blank400() -> FixtureSpec:
    doc = _doc(
        "blank400",
        {
            "/memos": {
                "post": _op(
                    "createMemo",
                    body=_body(_obj({"title": {"type": "string", "example": _BAD_TITLE}}, required=("title",))),
                    responses=_ok(_ID_OBJ),
                )
            }
        },
    )

    def routes() -> list[Route]:
        memos = Store()

        def create(req: Request) -> Response:
            if req.field("title") == _BAD_TITLE:
                return reply(400)
            return reply(200, memos.create())

        return [Route("POST", "/memos", create)]

    return FixtureSpec("blank400", doc, routes, description="the documented example value is rejected with an empty 400")


# -- one fixture per remaining category -------------------------------------

API_KEY = "fixture-key"
_AUTH_MSG = "API key not valid. Please pass a valid API key."


def auth() -> FixtureSpec:
    doc = _doc("auth", {"/reports": {"get": _op("listReports", (_param("year", type="integer"),))}, "/health": {"get": _op("health")}})

    def routes() -> list[Route]:
        def reports(req: Request) -> Response:
            if req.header("x-api-key") != API_KEY:
                return error(401, _AUTH_MSG)
            return reply(200, [])

        return [Route("GET", "/reports", reports), Route("GET", "/health", lambda r: reply(200, {"ok": True}))]

    return FixtureSpec(
        "auth",
        doc,
        routes,
        description="a static API key guards one operation",
        categories=frozenset({Cat.CONFIGURATION_AUTHENTICATION}),
        messages=[(_AUTH_MSG, 401, Cat.CONFIGURATION_AUTHENTICATION)],
        headers={"X-Api-Key": API_KEY},
    )


_UNSUPPORTED_MSG = "Method Not Allowed Request method `POST' not supported"


def unsupported() -> FixtureSpec:
    doc = _doc("unsupported", {"/items": {"get": _op("listItems"), "post": _op("createItem", body=_body(_obj({"name": {"type": "string"}})))}})

    def routes() -> list[Route]:
        return [Route("GET", "/items", lambda r: reply(200, [])), Route("POST", "/items", lambda r: error(405, _UNSUPPORTED_MSG))]

    return FixtureSpec(
        "unsupported",
        doc,
        routes,
        description="a documented operation the server does not implement",
        categories=frozenset({Cat.UNSUPPORTED_OPERATION}),
        messages=[(_UNSUPPORTED_MSG, 405, Cat.UNSUPPORTED_OPERATION)],
    )


_POINTS_MSG = '"points" is a required parameter.'


def mandatory() -> FixtureSpec:
    doc = _doc("mandatory", {"/scores": {"get": _op("getScores", (_param("points", type="integer"), _param("player")))}})

    def routes() -> list[Route]:
        def scores(req: Request) -> Response:
            if not _present(req.arg("points")):
                return error(400, _POINTS_MSG)
            return reply(200, [])

        return [Route("GET", "/scores", scores)]

    return FixtureSpec(
        "mandatory",
        doc,
        routes,
        description="a parameter the document marks optional but the server needs",
        ground_truth=[C.AdditionalMandatory("getscores.query.points")],
        categories=frozenset({Cat.ADDITIONAL_MANDATORY}),
        messages=[(_POINTS_MSG, 400, Cat.ADDITIONAL_MANDATORY)],
    )


_OR_MSG = "You must specify either the `source' or `destination' parameter."


def or_fixture() -> FixtureSpec:
    doc = _doc("or", {"/routes": {"get": _op("findRoutes", (_param("source"), _param("destination"), _param("mode")))}})

    def routes() -> list[Route]:
        def find(req: Request) -> Response:
            if not (_present(req.arg("source")) or _present(req.arg("destination"))):
                return error(400, _OR_MSG)
            return reply(200, [])

        return [Route("GET", "/routes", find)]

    return FixtureSpec(
        "or",
        doc,
        routes,
        description="at least one of two parameters is needed",
        ground_truth=[C.Or(("findroutes.query.source", "findroutes.query.destination"))],
        categories=frozenset({Cat.OR}),
        messages=[(_OR_MSG, 400, Cat.OR)],
    )


_ONE_MSG = "Either city or zipcode is required, not both."


def one() -> FixtureSpec:
    doc = _doc("one", {"/weather": {"get": _op("getWeather", (_param("city"), _param("zipcode"), _param("units")))}})

    def routes() -> list[Route]:
        def weather(req: Request) -> Response:
            if _present(req.arg("city")) and _present(req.arg("zipcode")):
                return error(400, _ONE_MSG)
            return reply(200, {"temp": 21})

        return [Route("GET", "/weather", weather)]

    return FixtureSpec(
        "one",
        doc,
        routes,
        description="exactly one of two parameters may be sent",
        ground_truth=[C.One(("getweather.query.city", "getweather.query.zipcode"))],
        categories=frozenset({Cat.ONE}),
        messages=[(_ONE_MSG, 400, Cat.ONE)],
    )


_ADDRESS_MSG = "Address should be specified with street, city and pincode."


def allornone() -> FixtureSpec:
    body = _obj(
        {"name": {"type": "string"}, "street": {"type": "string"}, "city": {"type": "string"}, "pincode": {"type": "string"}},
        required=("name", "street"),
    )
    doc = _doc("allornone", {"/addresses": {"post": _op("createAddress", body=_body(body), responses=_ok(_ID_OBJ))}})

    def routes() -> list[Route]:
        store = Store()

        def create(req: Request) -> Response:
            given = [_present(req.field(k)) for k in ("street", "city", "pincode")]
            if any(given) and not all(given):
                return error(400, _ADDRESS_MSG)
            return reply(200, store.create())

        return [Route("POST", "/addresses", create)]

    return FixtureSpec(
        "allornone",
        doc,
        routes,
        description="address fields travel together",
        ground_truth=[C.AllOrNone(("createaddress.body.street", "createaddress.body.city", "createaddress.body.pincode"))],
        categories=frozenset({Cat.ALL_OR_NONE}),
        messages=[(_ADDRESS_MSG, 400, Cat.ALL_OR_NONE)],
    )


_GEO_MSG = "If longitude specified then latitude should be too"


def conditional() -> FixtureSpec:
    params = (_param("longitude", type="number", required=True), _param("latitude", type="number"), _param("name"))
    doc = _doc("conditional", {"/places": {"get": _op("findPlaces", params)}})

    def routes() -> list[Route]:
        def places(req: Request) -> Response:
            if _present(req.arg("longitude")) and not _present(req.arg("latitude")):
                return error(400, _GEO_MSG)
            return reply(200, [])

        return [Route("GET", "/places", places)]

    return FixtureSpec(
        "conditional",
        doc,
        routes,
        description="one parameter needs another",
        ground_truth=[C.ConditionalParameterRequired("findplaces.query.latitude", True, "findplaces.query.longitude", True)],
        categories=frozenset({Cat.CONDITIONAL_PARAMETER_REQUIRED}),
        messages=[(_GEO_MSG, 400, Cat.CONDITIONAL_PARAMETER_REQUIRED)],
    )


_UNKNOWN_MSG = "Received unknown parameter: url"


def unknown() -> FixtureSpec:
    doc = _doc("unknown", {"/search": {"get": _op("search", (_param("q"), _param("url")))}})

    def routes() -> list[Route]:
        def search(req: Request) -> Response:
            if "url" in req.query:
                return error(400, _UNKNOWN_MSG)
            return reply(200, [])

        return [Route("GET", "/search", search)]

    return FixtureSpec(
        "unknown",
        doc,
        routes,
        description="the document lists a parameter the server rejects",
        categories=frozenset({Cat.PARAMETER_UNKNOWN}),
        messages=[(_UNKNOWN_MSG, 400, Cat.PARAMETER_UNKNOWN)],
    )


_TS_MSG = "afterTimestamp must be greater than beforeTimestamp"
_CAP_MSG = "Storage capacity cannot be less than zero"


def arithmetic() -> FixtureSpec:
    params = (
        _param("afterTimestamp", type="integer", example=1000),
        _param("beforeTimestamp", type="integer", example=2000),
        _param("storageCap", type="integer", example=-5),
    )
    doc = _doc("arithmetic", {"/volumes": {"get": _op("listVolumes", params)}})

    def routes() -> list[Route]:
        def volumes(req: Request) -> Response:
            cap = req.arg("storageCap")
            if _present(cap) and float(cap) < 0:
                return error(400, _CAP_MSG)
            after, before = req.arg("afterTimestamp"), req.arg("beforeTimestamp")
            if _present(after) and _present(before) and not float(after) > float(before):
                return error(400, _TS_MSG)
            return reply(200, [])

        return [Route("GET", "/volumes", volumes)]

    return FixtureSpec(
        "arithmetic",
        doc,
        routes,
        ground_truth=[
            C.DataArithmetic("listvolumes.query.afterTimestamp", ">", "listvolumes.query.beforeTimestamp", True),
            C.DataArithmetic("listvolumes.query.storageCap", ">=", 0),
        ],
        description="a parameter comparison and a paraphrased bound",
        categories=frozenset({Cat.DATA_ARITHMETIC}),
        messages=[(_TS_MSG, 400, Cat.DATA_ARITHMETIC), (_CAP_MSG, 400, Cat.DATA_ARITHMETIC)],
        multi_constraint=True,
    )


GENDERS = ("Male", "Female", "Other")
_GENDER_MSG = "`{v}' is not a valid gender. Supported values are `Male' , `Female', `Other'."


def categorical() -> FixtureSpec:
    body = _obj({"name": {"type": "string"}, "gender": {"type": "string", "example": "PL"}}, required=("name",))
    doc = _doc("categorical", {"/profiles": {"post": _op("createProfile", body=_body(body), responses=_ok(_ID_OBJ))}})

    def routes() -> list[Route]:
        store = Store()

        def create(req: Request) -> Response:
            g = req.field("gender")
            if g is not None and g not in GENDERS:
                return error(400, _GENDER_MSG.format(v=g))
            return reply(200, store.create())

        return [Route("POST", "/profiles", create)]

    return FixtureSpec(
        "categorical",
        doc,
        routes,
        description="a closed set of accepted values",
        ground_truth=[C.DataNonArithmetic("createprofile.body.gender", "categorical", GENDERS)],
        categories=frozenset({Cat.DATA_NON_ARITHMETIC}),
        messages=[(_GENDER_MSG.format(v="PL"), 400, Cat.DATA_NON_ARITHMETIC)],
    )


def unique() -> FixtureSpec:
    body = _obj({"emailId": {"type": "string", "format": "email"}, "nickname": {"type": "string"}}, required=("emailId",))
    doc = _doc("unique", {"/accounts": {"post": _op("createAccount", body=_body(body), responses=_ok(_ID_OBJ))}})

    def routes() -> list[Route]:
        store = Store()
        taken: set[str] = set()

        def create(req: Request) -> Response:
            email = req.field("emailId")
            if email in taken:
                # the service forgets to map its own conflict to a 4xx
                return error(500, f"Internal Server Error: This email {email} is already in use.")
            taken.add(email)
            return reply(200, store.create())

        return [Route("POST", "/accounts", create)]

    return FixtureSpec(
        "unique",
        doc,
        routes,
        ground_truth=[C.DataNonArithmetic("createaccount.body.emailId", "unique")],
        description="a uniqueness rule that surfaces as a 500",
        categories=frozenset({Cat.DATA_NON_ARITHMETIC}),
        messages=[("Internal Server Error: This email a@b.io is already in use.", 500, Cat.DATA_NON_ARITHMETIC)],
    )


_MEDIA_MSG = "If type is 'audio', only one of the other two parameters is required"


def nested12() -> FixtureSpec:
    params = (
        _param("type", required=True, example="audio", enum=["audio", "video"]),
        _param("url"),
        _param("file"),
    )
    doc = _doc("nested12", {"/media": {"post": _op("uploadMedia", params, responses=_ok(_ID_OBJ))}})

    def routes() -> list[Route]:
        store = Store()

        def upload(req: Request) -> Response:
            if req.arg("type") == "audio" and _present(req.arg("url")) and _present(req.arg("file")):
                return error(400, _MEDIA_MSG)
            return reply(200, store.create())

        return [Route("POST", "/media", upload)]

    return FixtureSpec(
        "nested12",
        doc,
        routes,
        ground_truth=[
            C.DataInfluencedParamSelection(
                C.DataArithmetic("uploadmedia.query.type", "=", "audio"),
                C.One(("uploadmedia.query.file", "uploadmedia.query.url")),
            )
        ],
        description="a value of one parameter restricts which others may be sent",
        categories=frozenset({Cat.DATA_INFLUENCED_PARAM_SELECTION}),
        messages=[(_MEDIA_MSG, 400, Cat.DATA_INFLUENCED_PARAM_SELECTION)],
    )


_THUMB_MSG = "If thumbnail is present, type must be `link'."


def nested13() -> FixtureSpec:
    params = (
        _param("title", required=True),
        _param("type", example="image", enum=["image", "link", "text"]),
        _param("thumbnail"),
    )
    doc = _doc("nested13", {"/posts": {"post": _op("createPost", params, responses=_ok(_ID_OBJ))}})

    def routes() -> list[Route]:
        store = Store()

        def create(req: Request) -> Response:
            if _present(req.arg("thumbnail")) and req.arg("type") != "link":
                return error(400, _THUMB_MSG)
            return reply(200, store.create())

        return [Route("POST", "/posts", create)]

    return FixtureSpec(
        "nested13",
        doc,
        routes,
        ground_truth=[
            C.ParameterInfluencedDataValues(
                C.Present("createpost.query.thumbnail", True),
                C.DataArithmetic("createpost.query.type", "=", "link"),
            )
        ],
        description="sending one parameter restricts another's value",
        categories=frozenset({Cat.PARAMETER_INFLUENCED_DATA_VALUES}),
        messages=[(_THUMB_MSG, 400, Cat.PARAMETER_INFLUENCED_DATA_VALUES)],
    )


def unhandled() -> FixtureSpec:
    doc = _doc("unhandled", {"/crash": {"get": _op("crash", (_param("depth", type="integer"),))}, "/fine": {"get": _op("fine")}})

    def routes() -> list[Route]:
        return [
            Route("GET", "/crash", lambda r: reply(500, "Internal Server Error")),
            Route("GET", "/fine", lambda r: reply(200, {"ok": True})),
        ]

    return FixtureSpec(
        "unhandled",
        doc,
        routes,
        description="an operation that always fails without explanation",
        categories=frozenset({Cat.UNHANDLED}),
        messages=[("Internal Server Error", 500, Cat.UNHANDLED)],
    )


CATALOG: dict[str, Callable[[], FixtureSpec]] = {
    "langtool": langtool,
    "petstore": petstore,
    "staged": staged,
    "all_ok": all_ok,
    "noisy": noisy,
    "blank404": blank404,
    "blank400": blank400,
    "auth": auth,
    "unsupported": unsupported,
    "mandatory": mandatory,
    "or": or_fixture,
    "one": one,
    "allornone": allornone,
    "conditional": conditional,
    "unknown": unknown,
    "arithmetic": arithmetic,
    "categorical": categorical,
    "unique": unique,
    "nested12": nested12,
    "nested13": nested13,
    "unhandled": unhandled,
}


def get_fixture(name: str) -> FixtureSpec:
    try:
        return CATALOG[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(CATALOG)}") from None
