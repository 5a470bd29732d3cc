"""Reference server for the HTTP platform wire format, backed by InMemoryPlatform.

Run standalone with ``python -m delibsim.platform.stub_server --port 8085``.
"""

from __future__ import annotations

import argparse
import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from ..core import HistoryScope, Post
from .errors import DuplicateVoteError, PlatformValidationError
from .memory import InMemoryPlatform

_VOTE_PATH = re.compile(r"^/posts/(\d+)/votes$")


class _Handler(BaseHTTPRequestHandler):
    platform: InMemoryPlatform
    token: str | None = None

    def log_message(self, format, *args):
        pass

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _authorized(self) -> bool:
        if self.token and self.headers.get("Authorization") != f"Bearer {self.token}":
            self._send(401, {"error": "unauthorized"})
            return False
        return True

    def _json_body(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        return json.loads(self.rfile.read(length) or b"{}")

    def do_GET(self):
        if not self._authorized():
            return
        url = urlparse(self.path)
        if url.path != "/posts":
            return self._send(404, {"error": "not found"})
        query = parse_qs(url.query)
        if query.get("scope", ["full"])[0] == "recent":
            posts = self.platform.fetch_history(HistoryScope.RECENT_ONLY, int(query.get("k", ["10"])[0]))
        else:
            posts = self.platform.fetch_history(HistoryScope.FULL)
        self._send(200, {"posts": [p.to_dict() for p in posts]})

    def do_POST(self):
        if not self._authorized():
            return
        path = urlparse(self.path).path
        try:
            data = self._json_body()
        except ValueError:
            return self._send(400, {"error": "malformed JSON"})
        if path == "/posts":
            try:
                post = Post.from_dict({**data, "post_id": None})
                post_id = self.platform.publish(post)
            except (KeyError, ValueError) as exc:
                return self._send(422, {"error": str(exc)})
            return self._send(201, {"post_id": post_id})
        match = _VOTE_PATH.match(path)
        if match:
            target = int(match.group(1))
            try:
                ack = self.platform.vote(target, data["direction"], data["voter"], float(data.get("timestamp", 0.0)))
            except DuplicateVoteError as exc:
                return self._send(409, {"error": str(exc)})
            except PlatformValidationError as exc:
                status = 404 if self.platform.store.get(target) is None else 422
                return self._send(status, {"error": str(exc)})
            except (KeyError, ValueError) as exc:
                return self._send(422, {"error": str(exc)})
            return self._send(201, ack)
        self._send(404, {"error": "not found"})


class StubPlatformServer:
    """Threaded HTTP server exposing an InMemoryPlatform; usable as a context manager."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, token: str | None = None,
                 platform: InMemoryPlatform | None = None):
        self.platform = platform or InMemoryPlatform()
        handler = type("Handler", (_Handler,), {"platform": self.platform, "token": token})
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> StubPlatformServer:
        self._thread = threading.Thread(target=self.httpd.serve_forever, args=(0.05,), daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8085)
    parser.add_argument("--token")
    args = parser.parse_args(argv)
    server = StubPlatformServer(args.host, args.port, args.token)
    print(f"serving on {server.url}")
    try:
        server.httpd.serve_forever()
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
