"""Independent reference implementations used as test oracles."""

from __future__ import annotations

import itertools
import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from tpikit.render.font import GlyphMetrics
from tpikit.render.layout import measure_line


class StubFace:
    """Every glyph (space included) advances 10 units, ink spans [0, 10], no kerning."""

    units_per_em = 10
    ascent = 8
    descent = -2

    def glyph(self, ch):
        return GlyphMetrics(10, 0, 10, False)

    def kern(self, left, right):
        return 0


def oracle_wrap(text, size, max_w, face):
    """Greedy wrap written directly against ``measure_line`` on strings."""
    fits = lambda s: measure_line(s, size, face) <= max_w  # noqa: E731
    lines = []
    cur = None
    for word in text.split():
        if cur is not None and fits(cur + " " + word):
            cur = cur + " " + word
            continue
        if cur is not None:
            lines.append(cur)
            cur = None
        while not fits(word):
            k = len(word)
            while k > 1 and not fits(word[:k]):
                k -= 1
            lines.append(word[:k])
            word = word[k:]
        cur = word
    if cur is not None:
        lines.append(cur)
    return lines


def oracle_fit_size(text, params, face):
    """Straightforward top-down size search; returns the first size that fits, else None."""
    max_w = params.inner_width
    max_h = params.inner_height
    size = params.default_font_size_pt
    sizes = []
    while size > params.min_font_size_pt:
        sizes.append(size)
        size -= params.font_size_step_pt
    sizes.append(params.min_font_size_pt)
    for s in sizes:
        lines = oracle_wrap(text, s, max_w, face)
        lh = math.ceil((face.ascent - face.descent) * s / face.units_per_em)
        height = len(lines) * lh + max(len(lines) - 1, 0) * params.line_spacing_px
        if height <= max_h and all(measure_line(ln, s, face) <= max_w for ln in lines):
            return s
    return None


def brute_force_lcs(a, b) -> int:
    """Longest subsequence of ``a`` (by enumerating all of them) that is also one of ``b``."""

    def is_subseq(sub, seq):
        it = iter(seq)
        return all(any(x == y for y in it) for x in sub)

    for k in range(min(len(a), len(b)), 0, -1):
        for idx in itertools.combinations(range(len(a)), k):
            if is_subseq([a[i] for i in idx], b):
                return k
    return 0


class ScriptedChatServer:
    """Local HTTP server answering /chat/completions from a handler callable.

    ``handler(body) -> (status, payload_dict)``. Every request body is recorded.
    """

    def __init__(self, handler):
        self.handler = handler
        self.requests = []
        self._lock = threading.Lock()
        outer = self

        class _H(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                raw = self.rfile.read(int(self.headers.get("Content-Length", 0)))
                body = json.loads(raw)
                with outer._lock:
                    outer.requests.append({"path": self.path, "body": body,
                                           "auth": self.headers.get("Authorization")})
                    status, payload = outer.handler(body)
                data = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), _H)
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def base_url(self):
        host, port = self.httpd.server_address
        return f"http://{host}:{port}/v1"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()


def completion(content=None, logprobs=None):
    choice = {"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}
    if logprobs is not None:
        choice["logprobs"] = {"content": [logprobs]}
    return {"id": "x", "object": "chat.completion", "choices": [choice]}


def first_token_logprobs(pairs, sampled=None):
    """``pairs`` is a list of (token, probability)."""
    top = [{"token": t, "logprob": math.log(p)} for t, p in pairs]
    tok = sampled if sampled is not None else (pairs[0][0] if pairs else "")
    return {"token": tok, "logprob": top[0]["logprob"] if top else 0.0, "top_logprobs": top}
