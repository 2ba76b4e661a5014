"""OpenAI-compatible chat-completions client."""

from __future__ import annotations

import base64
import json
import logging
import math
import mimetypes
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urlparse

import httpx

from ..dataset_io import VqaRecord
from ..errors import ConfigError, ContentError, InputError, IterationFailed, TransportError
from . import prompts

log = logging.getLogger(__name__)

API_KEY_ENV = "TPI_API_KEY"
AUGMENT_TEMPERATURE = 0.7
AUGMENT_FIELDS = ("question", "answer", "description")
AUGMENT_SCHEMA = {
    "type": "object",
    "properties": {k: {"type": "string", "minLength": 1} for k in AUGMENT_FIELDS},
    "required": list(AUGMENT_FIELDS),
    "additionalProperties": False,
}
_RETRY_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}
# tokenizer word-boundary markers that prefix otherwise plain tokens
_TOKEN_ARTIFACTS = "﻿Ġ▁Ċ"


@dataclass
class EndpointConfig:
    base_url: str
    model: str
    api_key_env: str = API_KEY_ENV
    timeout_s: float = 60.0
    max_retries: int = 3
    retry_backoff_s: float = 2.0
    max_in_flight: int = 4
    top_logprobs: int = 10
    json_schema: bool = True

    def __post_init__(self):
        parsed = urlparse(self.base_url)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ConfigError(f"base_url must be an http(s) URL, got {self.base_url!r}")
        if not self.model:
            raise ConfigError("model must be set")
        if self.timeout_s <= 0:
            raise ConfigError("timeout_s must be > 0")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.retry_backoff_s <= 0:
            raise ConfigError("retry_backoff_s must be > 0")
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be >= 1")

    @property
    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env) or None

    def public_dict(self) -> dict:
        """Config without secrets, for run metadata."""
        return {k: getattr(self, k) for k in ("base_url", "model", "api_key_env", "timeout_s",
                                              "max_retries", "retry_backoff_s", "max_in_flight",
                                              "top_logprobs", "json_schema")}


@dataclass
class ClientStats:
    requests: int = 0
    retries: int = 0
    failures: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def bump(self, **counts):
        with self._lock:
            for k, v in counts.items():
                setattr(self, k, getattr(self, k) + v)


@dataclass(frozen=True)
class RelevanceResult:
    score: float
    p_yes: float
    p_no: float
    method: str  # "logprob" | "sampled_fallback"
    sampled_token: str | None = None

    def to_json(self) -> dict:
        return {"score": self.score, "p_yes": self.p_yes, "p_no": self.p_no, "method": self.method,
                "sampled_token": self.sampled_token}


def normalize_token(token: str) -> str:
    return token.strip().lstrip(_TOKEN_ARTIFACTS).strip().lower()


def image_part(image_ref: str) -> dict:
    """Chat content part for a local path (inlined as base64) or a URL."""
    if image_ref.startswith(("http://", "https://", "data:")):
        url = image_ref
    else:
        path = Path(image_ref)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read image: {exc}", path=image_ref) from None
        mime = mimetypes.guess_type(path.name)[0] or "application/octet-stream"
        url = f"data:{mime};base64,{base64.b64encode(data).decode('ascii')}"
    return {"type": "image_url", "image_url": {"url": url}}


def _user_content(text: str | None, image_ref: str | None):
    if image_ref is None:
        return text or ""
    parts = [image_part(image_ref)]
    if text:
        parts.append({"type": "text", "text": text})
    return parts


def aggregate_yes_no(top_logprobs) -> tuple[float, float]:
    p_yes = p_no = 0.0
    for entry in top_logprobs or ():
        tok = normalize_token(str(entry.get("token", "")))
        lp = entry.get("logprob")
        if lp is None:
            continue
        if tok == "yes":
            p_yes += math.exp(lp)
        elif tok == "no":
            p_no += math.exp(lp)
    return p_yes, p_no


def parse_augmented(content: str) -> dict:
    """Strict single-object parse; anything else raises ``IterationFailed``."""
    try:
        obj = json.loads(content)
    except (json.JSONDecodeError, TypeError):
        raise IterationFailed("response is not a single JSON object") from None
    if not isinstance(obj, dict):
        raise IterationFailed("response JSON is not an object")
    if set(obj) != set(AUGMENT_FIELDS):
        raise IterationFailed(f"response keys {sorted(obj)} != {list(AUGMENT_FIELDS)}")
    for k in AUGMENT_FIELDS:
        if not isinstance(obj[k], str) or not obj[k].strip():
            raise IterationFailed(f"field {k!r} must be a nonempty string")
    return obj


class ChatClient:
    """Thread-safe client; at most ``max_in_flight`` requests run at once."""

    def __init__(self, cfg: EndpointConfig, transport: httpx.BaseTransport | None = None, sleep=time.sleep):
        self.cfg = cfg
        self.stats = ClientStats()
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(cfg.max_in_flight)
        headers = {"Content-Type": "application/json"}
        if cfg.api_key:
            headers["Authorization"] = f"Bearer {cfg.api_key}"
        self._http = httpx.Client(timeout=cfg.timeout_s, transport=transport, headers=headers)
        self._url = cfg.base_url.rstrip("/") + "/chat/completions"

    def close(self):
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def chat(self, body: dict) -> dict:
        """POST ``body`` with retries on 429/5xx/timeouts. Returns the decoded response."""
        body = {"model": self.cfg.model, **body}
        last = None
        for attempt in range(self.cfg.max_retries + 1):
            if attempt:
                self.stats.bump(retries=1)
                self._sleep(self.cfg.retry_backoff_s * 2 ** (attempt - 1))
            self.stats.bump(requests=1)
            try:
                with self._slots:
                    resp = self._http.post(self._url, json=body)
            except httpx.TransportError as exc:
                last = f"{type(exc).__name__}: {exc}"
                log.warning("request failed", extra={"attempt": attempt, "error": last})
                continue
            if resp.status_code in _RETRY_STATUS:
                last = f"HTTP {resp.status_code}"
                log.warning("retryable status", extra={"attempt": attempt, "status": resp.status_code})
                continue
            if resp.status_code >= 400:
                self.stats.bump(failures=1)
                err = TransportError(f"HTTP {resp.status_code}: {resp.text[:500]}")
                err.status_code = resp.status_code
                raise err
            try:
                return resp.json()
            except ValueError:
                raise ContentError("endpoint returned non-JSON body") from None
        self.stats.bump(failures=1)
        raise TransportError(f"giving up after {self.cfg.max_retries + 1} attempts: {last}")

    @staticmethod
    def _first_choice(resp: dict) -> dict:
        try:
            return resp["choices"][0]
        except (KeyError, IndexError, TypeError):
            raise ContentError("response has no choices") from None

    @classmethod
    def _content(cls, resp: dict) -> str:
        msg = cls._first_choice(resp).get("message") or {}
        content = msg.get("content")
        if isinstance(content, list):
            content = "".join(p.get("text", "") for p in content if isinstance(p, dict))
        return content or ""

    # ------------------------------------------------------------------

    def description_request(self, image_ref, question: str, answer: str, prompt_variant: str = "default") -> dict:
        if prompt_variant not in prompts.DESCRIBE_VARIANTS:
            raise ConfigError(f"unknown prompt variant {prompt_variant!r}; "
                              f"choose from {sorted(prompts.DESCRIBE_VARIANTS)}")
        system = prompts.load(prompts.DESCRIBE_VARIANTS[prompt_variant])
        text = None
        if prompt_variant in prompts.VARIANTS_WITH_QA:
            text = prompts.fill(prompts.load("describe_user.txt"), question=question, answer=answer)
        return {"messages": [{"role": "system", "content": system},
                             {"role": "user", "content": _user_content(text, image_ref)}]}

    def generate_description(self, image_ref, question: str, answer: str, prompt_variant: str = "default") -> str:
        body = self.description_request(image_ref, question, answer, prompt_variant)
        text = self._content(self.chat(body)).strip()
        if not text:
            raise ContentError("empty completion")
        return text

    def augmentation_request(self, demos, temperature: float = AUGMENT_TEMPERATURE) -> dict:
        demos = list(demos)
        if len(demos) != 8:
            raise ValueError(f"exactly 8 demonstrations required, got {len(demos)}")
        lines = "\n".join(json.dumps({"question": d.question, "answer": d.answer,
                                      "description": d.description}, ensure_ascii=False)
                          for d in demos)
        body = {
            "messages": [
                {"role": "system", "content": prompts.load("augment_system.txt")},
                {"role": "user", "content": prompts.fill(prompts.load("augment_user.txt"), demo=lines)},
            ],
            "temperature": temperature,
        }
        if self.cfg.json_schema:
            body["response_format"] = {"type": "json_schema", "json_schema": {
                "name": "vqa_example", "schema": AUGMENT_SCHEMA, "strict": True}}
        return body

    def generate_augmented_example(self, demos, temperature: float = AUGMENT_TEMPERATURE) -> VqaRecord:
        body = self.augmentation_request(demos, temperature)
        resp = self.chat(body)
        try:
            content = self._content(resp)
        except ContentError as exc:
            raise IterationFailed(str(exc)) from None
        obj = parse_augmented(content)
        return VqaRecord(id="", question=obj["question"], answer=obj["answer"],
                         description=obj["description"], provenance="generated")

    def relevance_request(self, image_ref, question: str, answer: str, phrasing: str = "system",
                          logprobs: bool = True) -> dict:
        try:
            sys_name, user_name = prompts.RELEVANCE_PHRASINGS[phrasing]
        except KeyError:
            raise ConfigError(f"unknown relevance phrasing {phrasing!r}") from None
        user = prompts.fill(prompts.load(user_name), q=question, a=answer)
        messages = []
        if sys_name:
            messages.append({"role": "system", "content": prompts.load(sys_name)})
        messages.append({"role": "user", "content": _user_content(user, image_ref)})
        body = {"messages": messages, "temperature": 0, "max_tokens": 1}
        if logprobs:
            body["logprobs"] = True
            body["top_logprobs"] = self.cfg.top_logprobs
        return body

    def relevance_score(self, image_ref, question: str, answer: str, phrasing: str = "system") -> RelevanceResult:
        body = self.relevance_request(image_ref, question, answer, phrasing)
        try:
            resp = self.chat(body)
        except TransportError as exc:
            if getattr(exc, "status_code", None) != 400:
                raise
            # endpoint rejected the logprob fields; ask for a plain sampled token
            resp = self.chat(self.relevance_request(image_ref, question, answer, phrasing, logprobs=False))
        return score_from_response(resp)


def score_from_response(resp: dict) -> RelevanceResult:
    choice = ChatClient._first_choice(resp)
    content = (choice.get("logprobs") or {}).get("content") or []
    first = content[0] if content else {}
    p_yes, p_no = aggregate_yes_no(first.get("top_logprobs"))
    if p_yes + p_no > 0:
        return RelevanceResult(p_yes / (p_yes + p_no), p_yes, p_no, "logprob", first.get("token"))
    token = first.get("token") or ChatClient._content(resp)
    norm = normalize_token(token or "")
    if norm == "yes":
        return RelevanceResult(1.0, 0.0, 0.0, "sampled_fallback", token)
    if norm == "no":
        return RelevanceResult(0.0, 0.0, 0.0, "sampled_fallback", token)
    raise ContentError(f"sampled token {token!r} is neither yes nor no")
