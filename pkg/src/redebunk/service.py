"""Read-only HTTP search service.

``GET /health`` answers ``ok``; ``GET /search?q=...&k=...&threshold=...``
returns a JSON array of ``{id, claim, org, date, lang, url, score}``.
"""

from __future__ import annotations

import json
import logging
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from .engine import SearchEngine
from .index import DEFAULT_DEPTH
from .rerank import DEFAULT_THRESHOLD, BackendError

log = logging.getLogger(__name__)


class BadRequest(ValueError):
    pass


def parse_search_params(query: str, default_k: int, default_threshold: float) -> tuple[str, int, float]:
    params = parse_qs(query, keep_blank_values=True)
    q = params.get("q", [""])[0]
    if not q.strip():
        raise BadRequest("missing q")
    try:
        k = int(params["k"][0]) if "k" in params else default_k
    except ValueError:
        raise BadRequest("k must be an integer") from None
    if k < 1:
        raise BadRequest("k must be >= 1")
    try:
        threshold = float(params["threshold"][0]) if "threshold" in params else default_threshold
    except ValueError:
        raise BadRequest("threshold must be a number") from None
    if not 0.0 <= threshold <= 1.0:
        raise BadRequest("threshold must be in [0, 1]")
    return q, k, threshold


def make_handler(engine: SearchEngine, default_k: int = DEFAULT_DEPTH, default_threshold: float = DEFAULT_THRESHOLD):
    class Handler(BaseHTTPRequestHandler):
        server_version = "redebunk"

        def log_message(self, fmt, *args):
            log.debug("%s - %s", self.address_string(), fmt % args)

        def _send(self, status: int, body: bytes, ctype: str) -> None:
            self.send_response(status)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _json(self, status: int, obj) -> None:
            self._send(status, json.dumps(obj, ensure_ascii=False).encode("utf-8"), "application/json; charset=utf-8")

        def do_GET(self):
            url = urlsplit(self.path)
            if url.path == "/health":
                self._send(HTTPStatus.OK, b"ok", "text/plain; charset=utf-8")
                return
            if url.path != "/search":
                self._json(HTTPStatus.NOT_FOUND, {"error": "not found"})
                return
            try:
                q, k, threshold = parse_search_params(url.query, default_k, default_threshold)
            except BadRequest as exc:
                self._json(HTTPStatus.BAD_REQUEST, {"error": str(exc)})
                return
            try:
                hits = engine.query(q, k, threshold)
            except BackendError as exc:
                self._json(HTTPStatus.BAD_GATEWAY, {"error": str(exc)})
                return
            self._json(HTTPStatus.OK, [h.as_dict() for h in hits])

        def _not_allowed(self):
            self._json(HTTPStatus.METHOD_NOT_ALLOWED, {"error": "read-only service"})

        do_POST = do_PUT = do_DELETE = do_PATCH = _not_allowed

    return Handler


def make_server(engine: SearchEngine, host: str, port: int, **defaults) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), make_handler(engine, **defaults))
    server.daemon_threads = True
    return server
