"""Replay server for chat-completion exchanges recorded in a fixture file.

Fixture format: ``{"responses": [entry, ...]}``. Each entry is either a full
chat-completion response body, or ``{"status": int, "body": {...}}`` to
replay an error, optionally with ``"delay": seconds``. Entries are served in
order; the last one repeats once the list is exhausted. Received request
bodies are kept in ``requests`` for inspection.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path


def completion(content: str | None = None, tool_calls: list | None = None) -> dict:
    """Build a minimal chat-completion response body."""
    message = {"role": "assistant", "content": content}
    if tool_calls:
        message["tool_calls"] = tool_calls
    return {"id": "stub", "object": "chat.completion", "choices": [{"index": 0, "message": message}]}


class RecordedChatServer:
    def __init__(self, responses: list[dict], host: str = "127.0.0.1", port: int = 0):
        self.responses = list(responses)
        self.requests: list[dict] = []
        self.headers: list[dict] = []
        self._lock = threading.Lock()
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, format, *args):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                with server._lock:
                    server.requests.append(body)
                    server.headers.append(dict(self.headers))
                    idx = min(len(server.requests) - 1, len(server.responses) - 1)
                    entry = server.responses[idx]
                if "delay" in entry:
                    time.sleep(entry["delay"])
                status = entry.get("status", 200)
                payload = entry.get("body", entry) if "status" in entry or "delay" in entry else entry
                data = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        self.httpd = ThreadingHTTPServer((host, port), Handler)
        self._thread = None

    @classmethod
    def from_fixture(cls, path: str | Path, **kwargs) -> RecordedChatServer:
        return cls(json.loads(Path(path).read_text(encoding="utf-8"))["responses"], **kwargs)

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}/v1/chat/completions"

    def start(self) -> RecordedChatServer:
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
