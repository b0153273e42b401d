"""Threaded HTTP stub implementing the /embed + /score-pairs wire format,
backed by the same deterministic generators as the fixture files."""
from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

import synth


class _Handler(BaseHTTPRequestHandler):
    server_version = "mockprovider/1"

    def log_message(self, *args):  # keep test output quiet
        pass

    def _send(self, status: int, payload: dict):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        config = self.server.config  # type: ignore[attr-defined]
        if config["fail_remaining"] > 0:
            config["fail_remaining"] -= 1
            self._send(500, {"error": "synthetic failure"})
            return
        if config["delay"] > 0:
            time.sleep(config["delay"])
        length = int(self.headers.get("Content-Length", "0"))
        try:
            payload = json.loads(self.rfile.read(length) or b"{}")
        except json.JSONDecodeError:
            self._send(400, {"error": "bad json"})
            return
        if self.path == "/score-pairs":
            pairs = payload.get("pairs") or []
            if not pairs or any("BADREQ" in a or "BADREQ" in b for a, b in pairs):
                self._send(400, {"error": "bad pairs"})
                return
            scores = [synth.pair_score_for(a, b) for a, b in pairs]
            self._send(200, {"model": synth.PAIR_MODEL, "scores": scores})
            return
        if self.path == "/embed":
            texts = payload.get("texts") or []
            mode = payload.get("mode")
            layer = int(payload.get("layer") or 0)
            if not texts or mode not in ("token", "sentence"):
                self._send(400, {"error": "bad embed request"})
                return
            if mode == "sentence":
                embeddings = []
                for text in texts:
                    vec = synth.vector_for(f"sent|{synth.SENTENCE_MODEL}|{text}")
                    if text == "BADDIM":  # deliberately inconsistent dimension
                        vec = vec[:-1]
                    embeddings.append([float(v) for v in np.asarray(vec, dtype=np.float32)])
                self._send(
                    200,
                    {"model": synth.SENTENCE_MODEL, "dimension": synth.DIM, "embeddings": embeddings},
                )
                return
            embeddings = []
            for text in texts:
                emb = synth.token_set_for("t", text, layer)
                embeddings.append(
                    {
                        "tokens": list(emb.tokens),
                        "vectors": [[float(v) for v in row] for row in emb.vectors.astype(np.float32)],
                    }
                )
            self._send(
                200,
                {"model": synth.TOKEN_MODEL, "dimension": synth.DIM, "embeddings": embeddings},
            )
            return
        self._send(404, {"error": f"no route {self.path}"})


class MockProviderServer:
    """Context manager running the stub on an ephemeral local port."""

    def __init__(self, fail_first: int = 0, delay: float = 0.0):
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
        self._httpd.config = {"fail_remaining": fail_first, "delay": delay}  # type: ignore[attr-defined]
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "MockProviderServer":
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._httpd.shutdown()
        self._httpd.server_close()
