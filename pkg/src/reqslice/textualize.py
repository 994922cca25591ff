"""Model-to-text conversion at three verbosity levels, plus token estimates.

Line format::

    model <name> sample_time=<t>
    block sid=<n> name="<s>" type=<T>[ <k>=<v> ...][ position=(l,t,r,b)]
    conn <sid>:<p> -> <sid>:<p>

``HIGH`` writes everything, ``MEDIUM`` drops positions, ``LOW`` keeps only
``sid``, ``name`` and ``type`` per block and writes no connection lines.
"""

from __future__ import annotations

import enum
import json
import math
from typing import Callable

from .model import Model, errors_only, validate

__all__ = ["InvalidModel", "Verbosity", "format_value", "textualize", "token_count"]


class InvalidModel(ValueError):
    pass


class Verbosity(enum.Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"

    @property
    def code(self) -> str:
        return self.value[0].upper()

    @classmethod
    def parse(cls, text: "str | Verbosity") -> "Verbosity":
        if isinstance(text, cls):
            return text
        t = str(text).strip().lower()
        for v in cls:
            if t in (v.value, v.code.lower()):
                return v
        raise ValueError(f"unknown verbosity {text!r}; use high, medium or low")


def format_value(v) -> str:
    if isinstance(v, bool):
        return "on" if v else "off"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
    return json.dumps(str(v), ensure_ascii=False)


def textualize(m: Model, v: Verbosity | str) -> str:
    v = Verbosity.parse(v)
    bad = errors_only(validate(m))
    if bad:
        raise InvalidModel("; ".join(map(str, bad)))
    lines = [f"model {m.name} sample_time={format_value(m.sample_time)}"]
    for b in sorted(m.blocks, key=lambda b: b.sid):
        parts = [f"block sid={b.sid}", f"name={json.dumps(b.name, ensure_ascii=False)}", f"type={b.block_type}"]
        if v is not Verbosity.LOW:
            parts += [f"{k}={format_value(b.params[k])}" for k in sorted(b.params)]
        if v is Verbosity.HIGH:
            parts.append("position=({},{},{},{})".format(*b.position))
        lines.append(" ".join(parts))
    if v is not Verbosity.LOW:
        lines += [f"conn {c.src_endpoint} -> {c.dst_endpoint}" for c in m.connections]
    return "\n".join(lines) + "\n"


def _bytes_over_four(text: str) -> int:
    return math.ceil(len(text.encode("utf-8")) / 4)


def token_count(text: str, estimator: Callable[[str], int] | None = None) -> int:
    """Estimated token cost of ``text``; defaults to ceil(utf-8 bytes / 4)."""
    return (estimator or _bytes_over_four)(text)
