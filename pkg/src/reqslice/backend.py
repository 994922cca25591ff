"""Slicing backends: where block lists come from.

Three interchangeable backends share one method, ``complete(prompt, iteration)``:

* ``LiveBackend`` posts the prompt to an OpenAI-compatible chat-completions
  endpoint (and can record replies to a cassette);
* ``ReplayBackend`` answers from a recorded cassette keyed by prompt SHA-256;
* ``OracleBackend`` computes a dataflow slice itself and replies in the same
  textual form an LLM would.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import httpx

from .evaluate import RequirementSpec
from .expr import UnknownSignal
from .model import Model
from .prompt import REQUIREMENT_LABEL, Prompt

__all__ = [
    "AuthError",
    "BackendConfig",
    "BackendError",
    "BlockList",
    "Cassette",
    "CassetteMiss",
    "EmptyResponse",
    "LiveBackend",
    "NetworkError",
    "OracleBackend",
    "ReplayBackend",
    "TokenLimitExceeded",
    "aggregate_union",
    "make_backend",
    "oracle_slice",
    "parse_block_list",
    "prompt_sha256",
    "query",
]

log = logging.getLogger(__name__)

ENV_URL = "REQSLICE_LLM_URL"
ENV_KEY = "REQSLICE_LLM_KEY"
ENV_MODEL = "REQSLICE_LLM_MODEL"


class BackendError(Exception):
    pass


class NetworkError(BackendError):
    pass


class AuthError(BackendError):
    pass


class TokenLimitExceeded(BackendError):
    pass


class CassetteMiss(BackendError):
    pass


class EmptyResponse(BackendError):
    pass


# ---------------------------------------------------------------- block lists


@dataclass(frozen=True)
class BlockList:
    sids: tuple[int, ...] = ()
    source: str = "llm"
    iteration: int | None = None
    ignored: tuple[int, ...] = ()

    def __post_init__(self):
        if len(set(self.sids)) != len(self.sids):
            raise ValueError("block list contains duplicate SIDs")

    def __iter__(self):
        return iter(self.sids)

    def __len__(self) -> int:
        return len(self.sids)

    def __contains__(self, sid: object) -> bool:
        return sid in self.sids

    @property
    def label(self) -> str:
        if self.source == "union":
            return "All"
        return f"I{self.iteration + 1}" if self.iteration is not None else self.source


_BRACKETS = re.compile(r"\[([^\[\]]*)\]")
_SID_LINE = re.compile(r"\bSID\s*(?:=|:)\s*(\d+)", re.IGNORECASE)
_INT = re.compile(r"(?<![\w.])\d+(?!\.\d|\w)")


def parse_block_list(response: str, m: Model, source: str = "llm", iteration: int | None = None) -> BlockList:
    """Pull SIDs out of a free-form reply.

    Bracketed lists win when present, then ``SID = n`` lines, then any
    standalone integers.  Integers that are not SIDs of ``m`` are kept in
    ``ignored`` and logged.  A bare ``[]`` yields an empty list; a reply with
    no integers at all raises EmptyResponse.
    """
    text = response or ""
    brackets = _BRACKETS.findall(text)
    found: list[int] = []
    if brackets:
        for chunk in brackets:
            found += [int(x) for x in _INT.findall(chunk)]
        if not found and any(not b.strip() for b in brackets):
            return BlockList((), source, iteration)
    if not found:
        found = [int(x) for x in _SID_LINE.findall(text)]
    if not found:
        found = [int(x) for x in _INT.findall(text)]
    if not found:
        raise EmptyResponse(f"no block ids in response {text[:80]!r}")
    valid = set(m.sids)
    seen: dict[int, None] = {}
    ignored: dict[int, None] = {}
    for sid in found:
        (seen if sid in valid else ignored).setdefault(sid, None)
    if ignored:
        log.info("ignored non-SID integers in response: %s", list(ignored))
    return BlockList(tuple(seen), source, iteration, tuple(ignored))


def aggregate_union(lists: Sequence[BlockList]) -> BlockList:
    if not lists:
        raise ValueError("aggregate_union needs at least one block list")
    seen: dict[int, None] = {}
    for bl in lists:
        for sid in bl.sids:
            seen.setdefault(sid, None)
    return BlockList(tuple(seen), "union")


def format_block_list(sids: Iterable[int]) -> str:
    return "Blocks: [" + ", ".join(str(s) for s in sids) + "]"


# ---------------------------------------------------------------- oracle


def _reach(m: Model, start: Iterable[int], step) -> set[int]:
    seen = set(start)
    todo = deque(seen)
    while todo:
        for nxt in step(todo.popleft()):
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return seen


def oracle_slice(m: Model, spec: RequirementSpec) -> BlockList:
    """Static dataflow slice: blocks on paths from the named inputs to the named outputs.

    Backward reachability (Goto->From counted as an edge) from every Outport the
    requirement mentions, restricted to blocks forward-reachable from the Inports
    it mentions.  The Outports themselves are always included.
    """
    spec.check_against(m)
    names = spec.signals
    roots = [b.sid for b in m.outports if b.name in names]
    sources = [b.sid for b in m.inports if b.name in names]
    back = _reach(m, roots, m.predecessors)
    keep = set(roots)
    if sources:
        keep |= back & _reach(m, sources, m.successors)
    else:
        keep |= back
    return BlockList(tuple(s for s in m.sids if s in keep), "oracle")


class OracleBackend:
    """Answers prompts with the dataflow slice of the requirement they ask about."""

    def __init__(self, model: Model, requirements: Sequence[RequirementSpec]):
        self.model = model
        self.requirements = list(requirements)

    def _requirement_for(self, prompt: Prompt | str) -> RequirementSpec:
        wanted = getattr(prompt, "requirement_text", "") or _requirement_in(str(getattr(prompt, "text", prompt)))
        for spec in self.requirements:
            if spec.text == wanted:
                return spec
        raise UnknownSignal(f"requirement not known to the oracle: {wanted[:60]!r}")

    def complete(self, prompt: Prompt | str, iteration: int = 0) -> str:
        return format_block_list(oracle_slice(self.model, self._requirement_for(prompt)).sids)


def _requirement_in(text: str) -> str:
    idx = text.rfind("\n" + REQUIREMENT_LABEL)
    if idx < 0:
        return ""
    rest = text[idx + 1 + len(REQUIREMENT_LABEL):]
    return rest.split("\n\n", 1)[0].strip()


# ---------------------------------------------------------------- cassettes


def prompt_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class Cassette:
    """JSON-Lines store of recorded replies, one ``{prompt_sha256, response, ts}`` per line.

    A prompt recorded several times replays its k-th reply for iteration k; later
    iterations reuse the last reply.  Reads are lock-free; appends serialize.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[str, list[str]] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for n, line in enumerate(fh, start=1):
                    if line.strip():
                        rec = json.loads(line)
                        self._records.setdefault(rec["prompt_sha256"], []).append(rec["response"])

    def __len__(self) -> int:
        return sum(len(v) for v in self._records.values())

    def lookup(self, text: str, iteration: int = 0) -> str:
        replies = self._records.get(prompt_sha256(text))
        if not replies:
            raise CassetteMiss(f"no recorded reply for prompt {prompt_sha256(text)[:12]}")
        return replies[min(iteration, len(replies) - 1)]

    def append(self, text: str, response: str, ts: str | None = None) -> None:
        rec = {
            "prompt_sha256": prompt_sha256(text),
            "response": response,
            "ts": ts or datetime.now(timezone.utc).isoformat(),
        }
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            self._records.setdefault(rec["prompt_sha256"], []).append(response)


class ReplayBackend:
    def __init__(self, cassette: Cassette | str | Path):
        self.cassette = cassette if isinstance(cassette, Cassette) else Cassette(cassette)

    def complete(self, prompt: Prompt | str, iteration: int = 0) -> str:
        return self.cassette.lookup(getattr(prompt, "text", prompt), iteration)


# ---------------------------------------------------------------- live


@dataclass
class BackendConfig:
    kind: str = "oracle"
    url: str | None = None
    model_name: str | None = None
    api_key_env: str = ENV_KEY
    temperature: float = 0.7
    repetitions: int = 3
    cassette: str | None = None
    timeout: float = 120.0
    max_retries: int = 3
    max_in_flight: int = 4
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kind = self.kind.lower()
        if self.kind not in ("live", "replay", "oracle"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must lie in [0, 2]")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.kind == "replay" and not self.cassette:
            raise ValueError("replay backend needs a cassette path")

    @classmethod
    def from_dict(cls, d: dict) -> "BackendConfig":
        known = set(cls.__dataclass_fields__) - {"extra"}
        return cls(**{k: v for k, v in d.items() if k in known},
                   extra={k: v for k, v in d.items() if k not in known})


class LiveBackend:
    """Chat-completions client with retry on rate limits and server errors."""

    def __init__(self, cfg: BackendConfig, transport: httpx.BaseTransport | None = None):
        self.cfg = cfg
        self.url = cfg.url or os.environ.get(ENV_URL)
        self.model_name = cfg.model_name or os.environ.get(ENV_MODEL) or "gpt-4"
        self.key = os.environ.get(cfg.api_key_env)
        if not self.url:
            raise NetworkError(f"no endpoint configured; set {ENV_URL}")
        if not self.key:
            raise AuthError(f"no API key; set {cfg.api_key_env}")
        self.client = httpx.Client(transport=transport, timeout=cfg.timeout)
        self.recorder = Cassette(cfg.cassette) if cfg.cassette else None

    def complete(self, prompt: Prompt | str, iteration: int = 0) -> str:
        text = getattr(prompt, "text", prompt)
        body = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": text}],
            "temperature": self.cfg.temperature,
        }
        headers = {"Authorization": f"Bearer {self.key}"}
        for attempt in range(self.cfg.max_retries + 1):
            try:
                r = self.client.post(self.url, json=body, headers=headers)
            except httpx.HTTPError as exc:
                if attempt == self.cfg.max_retries:
                    raise NetworkError(str(exc)) from exc
                time.sleep(2 ** attempt)
                continue
            if r.status_code in (401, 403):
                raise AuthError(f"endpoint rejected the credential in {self.cfg.api_key_env} ({r.status_code})")
            if r.status_code == 429 or r.status_code >= 500:
                if attempt == self.cfg.max_retries:
                    raise NetworkError(f"HTTP {r.status_code} after {attempt + 1} attempts")
                time.sleep(float(r.headers.get("retry-after", 2 ** attempt)))
                continue
            if r.status_code == 400 and "context_length" in r.text:
                raise TokenLimitExceeded(r.text[:200])
            if r.status_code >= 400:
                raise NetworkError(f"HTTP {r.status_code}: {r.text[:200]}")
            try:
                reply = r.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError) as exc:
                raise NetworkError(f"malformed completion payload: {r.text[:200]}") from exc
            if self.recorder is not None:
                self.recorder.append(text, reply)
            return reply
        raise NetworkError("unreachable")  # pragma: no cover


def make_backend(
    cfg: BackendConfig,
    model: Model | None = None,
    requirements: Sequence[RequirementSpec] = (),
    transport: httpx.BaseTransport | None = None,
):
    if cfg.kind == "oracle":
        if model is None:
            raise ValueError("the oracle backend needs the model")
        return OracleBackend(model, requirements)
    if cfg.kind == "replay":
        return ReplayBackend(cfg.cassette)
    return LiveBackend(cfg, transport)


def query(p: Prompt | str, backend, iteration: int = 0) -> str:
    return backend.complete(p, iteration)
