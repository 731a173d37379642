"""A tiny scripted HTTP service running in a background thread.

Requests are served one at a time so stateful behavior stays deterministic.
"""

from __future__ import annotations

import json
import logging
import re
import threading
from dataclasses import dataclass, field
from email.parser import BytesParser
from email.policy import HTTP
from http.server import BaseHTTPRequestHandler, HTTPServer
from typing import Any, Callable, Optional
from urllib.parse import parse_qs, unquote, urlsplit

from resprefine.errors import BindError

log = logging.getLogger(__name__)


@dataclass
class Request:
    method: str
    path: str
    path_params: dict[str, str]
    query: dict[str, list[str]]
    headers: dict[str, str]
    json: Any = None
    form: dict[str, str] = field(default_factory=dict)
    files: dict[str, bytes] = field(default_factory=dict)
    raw: bytes = b""

    def arg(self, name: str) -> Optional[str]:
        """First value of ``name`` from the query string or the form."""
        if name in self.query:
            return self.query[name][0]
        return self.form.get(name)

    def field(self, name: str) -> Any:
        if isinstance(self.json, dict):
            return self.json.get(name)
        return None

    def header(self, name: str) -> Optional[str]:
        return self.headers.get(name.lower())


@dataclass
class Response:
    status: int
    body: Any = None
    content_type: Optional[str] = None

    def encode(self) -> tuple[bytes, str]:
        if self.body is None:
            return b"", self.content_type or "text/plain"
        if isinstance(self.body, (bytes, bytearray)):
            return bytes(self.body), self.content_type or "application/octet-stream"
        if isinstance(self.body, str):
            return self.body.encode(), self.content_type or "text/plain; charset=utf-8"
        return json.dumps(self.body).encode(), self.content_type or "application/json"


def reply(status: int, body: Any = None, content_type: Optional[str] = None) -> Response:
    return Response(status, body, content_type)


def error(status: int, message: str) -> Response:
    return Response(status, {"message": message})


Handler = Callable[[Request], Response]


@dataclass
class Route:
    method: str
    template: str
    handler: Handler
    pattern: re.Pattern = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.method = self.method.upper()
        rx = re.sub(r"\\\{(\w+)\\\}", r"(?P<\1>[^/]+)", re.escape(self.template))
        self.pattern = re.compile(f"^{rx}$")

    def match(self, method: str, path: str) -> Optional[dict[str, str]]:
        if method != self.method:
            return None
        m = self.pattern.match(path)
        return {k: unquote(v) for k, v in m.groupdict().items()} if m else None


def _parse_body(content_type: str, raw: bytes) -> tuple[Any, dict, dict]:
    ctype = content_type.split(";")[0].strip().lower()
    if not raw:
        return None, {}, {}
    if ctype == "application/x-www-form-urlencoded":
        form = {k: v[0] for k, v in parse_qs(raw.decode(), keep_blank_values=True).items()}
        return None, form, {}
    if ctype == "multipart/form-data":
        msg = BytesParser(policy=HTTP).parsebytes(b"Content-Type: " + content_type.encode() + b"\r\n\r\n" + raw)
        form, files = {}, {}
        for part in msg.iter_parts():
            name = part.get_param("name", header="content-disposition")
            if name is None:
                continue
            payload = part.get_payload(decode=True) or b""
            if part.get_filename() is not None:
                files[name] = payload
            else:
                form[name] = payload.decode(errors="replace")
        return None, form, files
    try:
        return json.loads(raw), {}, {}
    except ValueError:
        return raw.decode(errors="replace"), {}, {}


class _Handler(BaseHTTPRequestHandler):
    server: "_Server"

    def log_message(self, fmt: str, *args: Any) -> None:
        log.debug("fixture %s: " + fmt, self.server.fixture_name, *args)

    def _dispatch(self) -> None:
        parts = urlsplit(self.path)
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        body, form, files = _parse_body(self.headers.get("Content-Type", ""), raw)
        headers = {k.lower(): v for k, v in self.headers.items()}
        query = parse_qs(parts.query, keep_blank_values=True)
        resp = None
        path_matched = False
        for route in self.server.routes:
            if route.pattern.match(parts.path):
                path_matched = True
            params = route.match(self.command, parts.path)
            if params is None:
                continue
            req = Request(self.command, parts.path, params, query, headers, body, form, files, raw)
            try:
                resp = route.handler(req)
            except Exception as exc:  # a scripted handler bug surfaces as a 500
                log.exception("fixture handler failed")
                resp = reply(500, f"Internal Server Error: {exc}")
            break
        if resp is None:
            resp = error(405, "Method Not Allowed") if path_matched else error(404, "Not Found")
        payload, ctype = resp.encode()
        self.send_response(resp.status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    do_GET = do_POST = do_PUT = do_DELETE = do_PATCH = do_HEAD = do_OPTIONS = _dispatch


class _Server(HTTPServer):
    allow_reuse_address = True

    def __init__(self, addr, routes: list[Route], name: str) -> None:
        self.routes = routes
        self.fixture_name = name
        super().__init__(addr, _Handler)


class ServiceHandle:
    """A running fixture; use as a context manager or call ``stop``."""

    def __init__(self, server: _Server, thread: threading.Thread) -> None:
        self._server = server
        self._thread = thread

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)

    def __enter__(self) -> "ServiceHandle":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.stop()


def start_server(routes: list[Route], port: int = 0, name: str = "fixture") -> ServiceHandle:
    try:
        server = _Server(("127.0.0.1", port), routes, name)
    except OSError as exc:
        raise BindError(f"cannot bind port {port}: {exc}") from exc
    thread = threading.Thread(target=server.serve_forever, args=(0.05,), name=f"fixture-{name}", daemon=True)
    thread.start()
    return ServiceHandle(server, thread)
