"""Parse OpenAPI 2.0 / 3.x documents into a :class:`SpecModel`.

Both the 2.0 ``parameters`` + ``body`` style and the 3.x ``requestBody`` style
end up as the same flat list of :class:`InputParameter`; object bodies are
unrolled into dotted field names (``ship.city``).
"""

from __future__ import annotations

import json
import logging
import re
from pathlib import Path
from typing import Any, Optional
from urllib.parse import urlparse

import yaml

from resprefine import constraints as C
from resprefine.errors import ParseError, RefineError
from resprefine.model import (
    LEARNED_KEY,
    METHODS,
    PRIMITIVES,
    InputParameter,
    Loc,
    Operation,
    OutputParameter,
    Schema,
    SchemaField,
    SpecModel,
    output_id,
    param_id,
)

log = logging.getLogger(__name__)

DEFAULT_DEPTH_LIMIT = 3

_PC_KEYS = (
    "enum",
    "minimum",
    "maximum",
    "exclusiveMinimum",
    "exclusiveMaximum",
    "format",
    "pattern",
    "minLength",
    "maxLength",
    "minItems",
    "maxItems",
    "default",
)
_PLACEHOLDER = re.compile(r"\{([^}/]+)\}")
_FORM_TYPES = ("application/x-www-form-urlencoded", "multipart/form-data")


class UnsupportedFeature(RefineError):
    """Raised internally for constructs that are skipped with a warning."""


def _lower_first(name: str) -> str:
    return name[:1].lower() + name[1:]


class _Loader:
    def __init__(self, doc: dict, depth_limit: int) -> None:
        self.doc = doc
        self.depth_limit = depth_limit
        self.v2 = str(doc.get("swagger", "")).startswith("2")
        self.model = SpecModel(document=doc)

    # -- helpers ------------------------------------------------------------

    def warn(self, msg: str) -> None:
        log.warning(msg)
        self.model.warnings.append(msg)

    def deref(self, node: Any, seen: Optional[set] = None) -> Any:
        """Follow local ``$ref`` pointers; remote references are left unresolved."""
        seen = seen or set()
        while isinstance(node, dict) and "$ref" in node:
            ref = node["$ref"]
            if not ref.startswith("#/") or ref in seen:
                if not ref.startswith("#/"):
                    self.warn(f"remote reference not supported: {ref}")
                return {}
            seen.add(ref)
            target: Any = self.doc
            for part in ref[2:].split("/"):
                part = part.replace("~1", "/").replace("~0", "~")
                if not isinstance(target, dict) or part not in target:
                    raise ParseError(f"dangling reference {ref}")
                target = target[part]
            node = target
        return node

    @staticmethod
    def ref_name(node: Any) -> Optional[str]:
        if isinstance(node, dict) and isinstance(node.get("$ref"), str):
            return node["$ref"].rsplit("/", 1)[-1]
        return None

    def merged(self, raw: Any) -> dict:
        raw = self.deref(raw)
        if not isinstance(raw, dict):
            return {}
        if "allOf" in raw:
            out: dict = {k: v for k, v in raw.items() if k != "allOf"}
            props = dict(out.get("properties", {}))
            required = list(out.get("required", []))
            for part in raw["allOf"]:
                part = self.merged(part)
                props.update(part.get("properties", {}))
                required += part.get("required", [])
                for k, v in part.items():
                    if k not in ("properties", "required"):
                        out.setdefault(k, v)
            out["properties"] = props
            out["required"] = required
            out.setdefault("type", "object")
            return out
        for key in ("oneOf", "anyOf"):
            if key in raw and raw[key]:
                self.warn(f"{key} collapsed to its first alternative")
                first = self.merged(raw[key][0])
                rest = {k: v for k, v in raw.items() if k != key}
                return {**first, **rest}
        return raw

    @staticmethod
    def _kind(raw: dict) -> str:
        t = raw.get("type")
        if isinstance(t, list):
            t = next((x for x in t if x != "null"), "string")
        if t in PRIMITIVES or t in ("array", "object"):
            return t
        if "properties" in raw:
            return "object"
        if "items" in raw:
            return "array"
        return "object" if not raw.get("format") and "enum" not in raw else "string"

    @staticmethod
    def pc_of(raw: dict) -> dict:
        pc = {k: raw[k] for k in _PC_KEYS if k in raw}
        return pc

    # -- schemas ------------------------------------------------------------

    def schema_sources(self) -> dict:
        if self.v2:
            return self.doc.get("definitions", {}) or {}
        return (self.doc.get("components", {}) or {}).get("schemas", {}) or {}

    def load_schemas(self) -> None:
        for name, raw in self.schema_sources().items():
            self.ensure_schema(name, raw)

    def ensure_schema(self, name: str, raw: Any) -> None:
        if name in self.model.schemas:
            return
        schema = Schema(sname=name)
        # register first so self-references terminate
        self.model.schemas[name] = schema
        raw = self.merged(raw)
        required = set(raw.get("required", []) or [])
        for fname, fraw in (raw.get("properties", {}) or {}).items():
            schema.fields.append(self.make_field(f"{name}.{fname}", fname, fraw, fname in required))

    def make_field(self, ctx: str, fname: str, fraw: Any, required: bool) -> SchemaField:
        ftype, ref, pc = self.type_of(ctx, fraw)
        return SchemaField(fname=fname, ftype=ftype, is_required=required, fieldconstraint=pc, ref=ref)

    def type_of(self, ctx: str, raw: Any) -> tuple[str, Optional[str], dict]:
        """Classify a schema node as (type, referenced schema name, constraints)."""
        name = self.ref_name(raw)
        node = self.merged(raw)
        kind = self._kind(node)
        pc = self.pc_of(node)
        if "example" in node:
            pc["example"] = node["example"]
        if kind == "object":
            if not node.get("properties") and "allOf" not in (self.deref(raw) or {}):
                return "object", None, pc
            sname = name or ctx
            self.ensure_schema(sname, raw if name else node)
            return "object", sname, pc
        if kind == "array":
            itype, iref, ipc = self.type_of(f"{ctx}[]", node.get("items", {}))
            pc["items"] = {"type": itype, "ref": iref, **ipc}
            return "array", None, pc
        return kind, None, pc

    # -- unrolling ----------------------------------------------------------

    def unroll(self, schema: Schema, prefix: str, loc: Loc) -> list[InputParameter]:
        return unroll_schema(schema, self.model, self.depth_limit, prefix=prefix, loc=loc)

    # -- operations ---------------------------------------------------------

    def load(self) -> SpecModel:
        self.load_schemas()
        if self.v2:
            self.model.base_path = (self.doc.get("basePath") or "").rstrip("/")
        else:
            servers = self.doc.get("servers") or []
            if servers and isinstance(servers[0], dict):
                self.model.base_path = urlparse(servers[0].get("url", "")).path.rstrip("/")
        if self.doc.get("webhooks"):
            self.warn("webhooks are not supported and were skipped")
        paths = self.doc.get("paths") or {}
        if not isinstance(paths, dict):
            raise ParseError("'paths' must be a mapping")
        for path, item in paths.items():
            item = self.deref(item)
            if not isinstance(item, dict):
                continue
            shared = item.get("parameters", []) or []
            for method in METHODS:
                raw = item.get(method.lower())
                if raw is None:
                    continue
                try:
                    op = self.load_operation(path, method, raw, shared)
                except UnsupportedFeature as exc:
                    self.warn(str(exc))
                    continue
                self.model.operations[op.opname] = op
        self.model.original_operations = tuple(self.model.operations)
        self.restore_learned()
        return self.model

    def opname_for(self, path: str, method: str, raw: dict) -> str:
        name = raw.get("operationId")
        if not name:
            parts = [p for p in re.split(r"[^A-Za-z0-9]+", path) if p]
            name = method.lower() + "".join(p[:1].upper() + p[1:] for p in parts)
        base, n = name, 2
        while name in self.model.operations:
            name = f"{base}_{n}"
            n += 1
        return name

    def load_operation(self, path: str, method: str, raw: dict, shared: list) -> Operation:
        if raw.get("callbacks"):
            self.warn(f"callbacks on {method} {path} skipped")
        opname = self.opname_for(path, method, raw)
        op = Operation(opname=opname, path=path, method=method, tag=list(raw.get("tags", []) or []))
        merged: dict[tuple[str, str], dict] = {}
        for p in list(shared) + list(raw.get("parameters", []) or []):
            p = self.deref(p)
            if isinstance(p, dict) and "name" in p and "in" in p:
                merged[(p["name"], p["in"])] = p
        consumes = raw.get("consumes") or self.doc.get("consumes") or []
        form_media = next((m for m in consumes if m in _FORM_TYPES), "application/x-www-form-urlencoded")
        for (_, where), p in merged.items():
            op.inputs.extend(self.params_from(opname, where, p))
            if where == "formData":
                op.media_type = form_media
        if not self.v2 and raw.get("requestBody"):
            op.inputs.extend(self.request_body(op, self.deref(raw["requestBody"])))
        self.ensure_path_params(op)
        for p in op.inputs:
            p.id = param_id(opname, p.loc, p.pname)
        self.load_outputs(op, raw.get("responses", {}) or {})
        return op

    def examples_of(self, p: dict, schema: dict) -> list:
        out = []
        for src in (p, schema):
            for key in ("example", "x-example"):
                if key in src:
                    out.append(src[key])
            ex = src.get("examples")
            if isinstance(ex, dict):
                out.extend(v.get("value") if isinstance(v, dict) and "value" in v else v for v in ex.values())
            elif isinstance(ex, list):
                out.extend(ex)
        return out

    def params_from(self, opname: str, where: str, p: dict) -> list[InputParameter]:
        if where == "body":
            schema_raw = p.get("schema", {})
            return self.body_params(opname, p.get("name", "body"), schema_raw, bool(p.get("required")))
        loc = {"path": Loc.PATH, "query": Loc.QUERY, "header": Loc.HEADER, "formData": Loc.FORMDATA}.get(where)
        if loc is None:
            self.warn(f"parameter location {where!r} not supported ({p.get('name')})")
            return []
        schema = self.merged(p.get("schema", {})) if "schema" in p else p
        ptype = self._kind(schema) if schema.get("type") or schema.get("properties") else "string"
        if ptype == "file" or schema.get("type") == "file":
            ptype = "file"
        pc = self.pc_of(schema)
        if ptype == "array":
            itype, iref, ipc = self.type_of(f"{opname}.{p['name']}[]", schema.get("items", {}))
            pc["items"] = {"type": itype, "ref": iref, **ipc}
        required = bool(p.get("required")) or loc is Loc.PATH
        return [
            InputParameter(
                pname=p["name"],
                ptype=ptype,
                is_required=required,
                loc=loc,
                pc=pc,
                examples=self.examples_of(p, schema),
                required_chain=(required,),
            )
        ]

    def body_params(self, opname: str, name: str, schema_raw: Any, required: bool, loc: Loc = Loc.BODY) -> list[InputParameter]:
        ftype, ref, pc = self.type_of(f"{opname}.{name}", schema_raw)
        if ftype == "object" and ref:
            params = self.unroll(self.model.schemas[ref], "", loc)
            if not required:
                for q in params:
                    q.is_required = False
            return params
        examples = [pc.pop("example")] if "example" in pc else []
        # the whole payload is this one value rather than an object of fields
        pc["whole_body"] = True
        return [
            InputParameter(
                pname=name,
                ptype=ftype,
                is_required=required,
                loc=loc,
                pc=pc,
                examples=examples,
                required_chain=(required,),
            )
        ]

    def request_body(self, op: Operation, body: dict) -> list[InputParameter]:
        content = body.get("content", {}) or {}
        if not content:
            return []
        media = next((m for m in content if "json" in m), None)
        if media is None:
            media = next((m for m in content if m in _FORM_TYPES), None)
        if media is None:
            media = next(iter(content))
            if "xml" in media:
                raise UnsupportedFeature(f"XML request body on {op.method} {op.path} skipped")
        op.media_type = media
        loc = Loc.FORMDATA if media in _FORM_TYPES else Loc.BODY
        schema_raw = (content[media] or {}).get("schema", {})
        return self.body_params(op.opname, "body", schema_raw, bool(body.get("required")), loc)

    def ensure_path_params(self, op: Operation) -> None:
        names = {p.pname for p in op.inputs if p.loc is Loc.PATH}
        for ph in _PLACEHOLDER.findall(op.path):
            if ph not in names:
                self.warn(f"{op.opname}: path placeholder {{{ph}}} has no parameter; added as string")
                op.inputs.append(
                    InputParameter(pname=ph, ptype="string", is_required=True, loc=Loc.PATH, required_chain=(True,))
                )

    def load_outputs(self, op: Operation, responses: dict) -> None:
        for code, resp in responses.items():
            code = str(code)
            resp = self.deref(resp)
            if not isinstance(resp, dict):
                continue
            if self.v2:
                schema_raw = resp.get("schema")
            else:
                content = resp.get("content", {}) or {}
                media = next((m for m in content if "json" in m), next(iter(content), None))
                schema_raw = (content.get(media) or {}).get("schema") if media else None
            if schema_raw is None:
                op.response_shapes[code] = None
                op.response_schemas[code] = None
                continue
            ftype, ref, pc = self.type_of(f"{op.opname}.{code}", schema_raw)
            shape = "primitive" if ftype in PRIMITIVES else ftype
            op.response_shapes[code] = shape
            if ftype == "array":
                ref = pc.get("items", {}).get("ref")
            op.response_schemas[code] = ref
            if ref and ref in self.model.schemas:
                for leaf in unroll_schema(self.model.schemas[ref], self.model, self.depth_limit, prefix=""):
                    op.outputs.append(
                        OutputParameter(
                            pname=leaf.pname,
                            ptype=leaf.ptype,
                            is_required=leaf.is_required,
                            responsecode=code,
                            pc=leaf.pc,
                            examples=leaf.examples,
                            id=output_id(op.opname, code, leaf.pname),
                        )
                    )

    # -- reload -------------------------------------------------------------

    def restore_learned(self) -> None:
        model = self.model
        for pid in self.doc.get("x-removed-parameters", []) or []:
            if model.is_live_input(pid):
                model.remove_parameter(pid)
        for opname in self.doc.get("x-removed-operations", []) or []:
            if opname in model.operations:
                model.remove_operation(opname)
        model.needs_user_input |= {n for n in self.doc.get("x-needs-user-input", []) or [] if n in model.operations}
        for raw in self.doc.get(LEARNED_KEY, []) or []:
            try:
                model.add_constraint(C.from_dict(raw))
            except (RefineError, ValueError, TypeError) as exc:
                self.warn(f"learned constraint {raw!r} dropped on reload: {exc}")


def unroll_schema(
    s: Schema,
    model: SpecModel,
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
    prefix: Optional[str] = None,
    loc: Loc = Loc.BODY,
) -> list[InputParameter]:
    """Flatten ``s`` into leaf parameters with dotted names.

    ``prefix`` defaults to the schema name with a lowercase first letter.
    Nesting deeper than ``depth_limit`` is cut off; a cut made on a schema
    that already occurs on the path is recorded in ``model.recursive_refs``.
    """
    if depth_limit < 1:
        raise ValueError("depth_limit must be >= 1")
    if prefix is None:
        prefix = _lower_first(s.sname)
    out: list[InputParameter] = []

    def walk(schema: Schema, base: str, depth: int, chain: tuple[bool, ...], ancestors: tuple[str, ...]) -> None:
        for f in schema.fields:
            name = f"{base}.{f.fname}" if base else f.fname
            fchain = chain + (f.is_required,)
            if f.ftype == "object" and f.ref and f.ref in model.schemas and model.schemas[f.ref].fields:
                if depth + 1 > depth_limit:
                    if f.ref in ancestors:
                        model.recursive_refs.add(f"{s.sname}:{name}")
                    else:
                        model.warnings.append(f"{s.sname}:{name} truncated at depth {depth_limit}")
                    continue
                walk(model.schemas[f.ref], name, depth + 1, fchain, ancestors + (f.ref,))
                continue
            pc = dict(f.fieldconstraint)
            examples = [pc.pop("example")] if "example" in pc else []
            out.append(
                InputParameter(
                    pname=name,
                    ptype=f.ftype,
                    is_required=all(fchain),
                    loc=loc,
                    pc=pc,
                    examples=examples,
                    required_chain=fchain,
                )
            )

    walk(s, prefix, 1, (), (s.sname,))
    return out


def parse_document(text: str, fmt: Optional[str] = None) -> dict:
    try:
        if fmt == "json" or (fmt is None and text.lstrip().startswith("{")):
            doc = json.loads(text)
        else:
            doc = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ParseError(f"malformed document: {exc}") from exc
    if not isinstance(doc, dict) or not ("swagger" in doc or "openapi" in doc):
        raise ParseError("not an OpenAPI 2.0 or 3.x document")
    return doc


def load_spec(
    document: str | dict | Path,
    format: Optional[str] = None,
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
) -> SpecModel:
    """Build a model from document text, a parsed mapping, or a file path."""
    if isinstance(document, Path) or (isinstance(document, str) and "\n" not in document and Path(document).is_file()):
        path = Path(document)
        if format is None and path.suffix.lower() in (".yaml", ".yml"):
            format = "yaml"
        document = path.read_text(encoding="utf-8")
    if isinstance(document, dict):
        if not ("swagger" in document or "openapi" in document):
            raise ParseError("not an OpenAPI 2.0 or 3.x document")
        doc = document
    else:
        doc = parse_document(document, format)
    return _Loader(doc, depth_limit).load()
