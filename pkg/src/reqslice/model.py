"""Block-diagram model: data types, JSON file format, and structural validation.

A model is a flat directed graph of typed blocks.  Each block has a Simulink-style
integer SID, numbered 1-based input and output ports, and a bounding box used only
for rendering.  Goto/From pairs act as invisible wires matched by their ``tag``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping

__all__ = [
    "BLOCK_TYPES",
    "Block",
    "Connection",
    "IntegrityError",
    "Model",
    "ModelError",
    "ModelSyntaxError",
    "SchemaError",
    "Violation",
    "errors_only",
    "load_model",
    "parse_model",
    "port_counts",
    "serialize_model",
    "validate",
]

BLOCK_TYPES = (
    "Inport",
    "Outport",
    "Constant",
    "Gain",
    "Sum",
    "Product",
    "Switch",
    "Saturation",
    "RelationalOperator",
    "LogicalOperator",
    "UnitDelay",
    "MinMax",
    "Abs",
    "Goto",
    "From",
)

REQUIRED_PARAMS = {
    "Constant": ("value",),
    "Gain": ("gain",),
    "Sum": ("signs",),
    "Switch": ("threshold",),
    "Saturation": ("upper_limit", "lower_limit"),
    "RelationalOperator": ("op",),
    "LogicalOperator": ("op",),
    "UnitDelay": ("initial",),
    "MinMax": ("op",),
    "Goto": ("tag",),
    "From": ("tag",),
}

RELATIONAL_OPS = ("<", "<=", ">", ">=", "==", "~=")
LOGICAL_OPS = ("AND", "OR", "NOT")
MINMAX_OPS = ("min", "max")


class ModelError(Exception):
    """Base class for model file problems."""


class ModelSyntaxError(ModelError):
    """The model file is not well-formed JSON."""


class SchemaError(ModelError):
    """A required field is missing or has the wrong shape."""


class IntegrityError(ModelError):
    """The file is well-formed but the graph is inconsistent."""


@dataclass(frozen=True)
class Block:
    sid: int
    name: str
    block_type: str
    params: dict = field(default_factory=dict)
    position: tuple[int, int, int, int] = (0, 0, 30, 30)

    def param(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)


@dataclass(frozen=True, order=True)
class Connection:
    """An edge from output port ``src_port`` of ``src`` to input ``dst_port`` of ``dst``."""

    src: int
    src_port: int
    dst: int
    dst_port: int

    @property
    def src_endpoint(self) -> str:
        return f"{self.src}:{self.src_port}"

    @property
    def dst_endpoint(self) -> str:
        return f"{self.dst}:{self.dst_port}"


@dataclass(frozen=True)
class Model:
    name: str
    sample_time: float = 1.0
    blocks: tuple[Block, ...] = ()
    connections: tuple[Connection, ...] = ()
    input_ranges: dict = field(default_factory=dict)

    @cached_property
    def by_sid(self) -> dict[int, Block]:
        return {b.sid: b for b in self.blocks}

    def block(self, sid: int) -> Block:
        return self.by_sid[sid]

    @property
    def sids(self) -> list[int]:
        return [b.sid for b in self.blocks]

    def blocks_of_type(self, block_type: str) -> list[Block]:
        return [b for b in self.blocks if b.block_type == block_type]

    @property
    def inports(self) -> list[Block]:
        return self.blocks_of_type("Inport")

    @property
    def outports(self) -> list[Block]:
        return self.blocks_of_type("Outport")

    @cached_property
    def driver(self) -> dict[tuple[int, int], tuple[int, int]]:
        """Map each connected input ``(sid, port)`` to the ``(sid, port)`` feeding it."""
        return {(c.dst, c.dst_port): (c.src, c.src_port) for c in self.connections}

    def gotos_by_tag(self) -> dict[str, list[Block]]:
        out: dict[str, list[Block]] = {}
        for b in self.blocks_of_type("Goto"):
            out.setdefault(str(b.param("tag")), []).append(b)
        return out

    def froms_by_tag(self) -> dict[str, list[Block]]:
        out: dict[str, list[Block]] = {}
        for b in self.blocks_of_type("From"):
            out.setdefault(str(b.param("tag")), []).append(b)
        return out

    def predecessors(self, sid: int) -> set[int]:
        """Blocks feeding ``sid``, including the Goto behind a From."""
        preds = {c.src for c in self.connections if c.dst == sid}
        b = self.by_sid[sid]
        if b.block_type == "From":
            preds.update(g.sid for g in self.gotos_by_tag().get(str(b.param("tag")), []))
        return preds

    def successors(self, sid: int) -> set[int]:
        succ = {c.dst for c in self.connections if c.src == sid}
        b = self.by_sid[sid]
        if b.block_type == "Goto":
            succ.update(f.sid for f in self.froms_by_tag().get(str(b.param("tag")), []))
        return succ

    def summary(self) -> dict[str, int]:
        return {
            "blocks": len(self.blocks),
            "inports": len(self.inports),
            "outports": len(self.outports),
            "connections": len(self.connections),
        }


def port_counts(block: Block) -> tuple[int, int]:
    """Number of (input, output) ports for ``block``."""
    t = block.block_type
    if t == "Inport" or t == "Constant" or t == "From":
        return 0, 1
    if t == "Outport" or t == "Goto":
        return 1, 0
    if t in ("Gain", "Saturation", "UnitDelay", "Abs"):
        return 1, 1
    if t == "Sum":
        return len(_sum_signs(block)), 1
    if t == "Switch":
        return 3, 1
    if t == "RelationalOperator":
        return 2, 1
    if t == "LogicalOperator":
        if str(block.param("op", "")).upper() == "NOT":
            return 1, 1
        return int(block.param("inputs", 2)), 1
    if t in ("Product", "MinMax"):
        return int(block.param("inputs", 2)), 1
    raise SchemaError(f"unknown block type {t!r}")


def _sum_signs(block: Block) -> str:
    return str(block.param("signs", "++")).replace("|", "")


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Violation:
    code: str
    sids: tuple[int, ...] = ()
    detail: str = ""
    severity: str = "error"

    def __str__(self) -> str:
        where = ",".join(map(str, self.sids))
        return f"{self.severity}: {self.code}({where}) {self.detail}".rstrip()


def errors_only(violations: Iterable[Violation]) -> list[Violation]:
    return [v for v in violations if v.severity == "error"]


def validate(m: Model) -> list[Violation]:
    """Check every model invariant; an empty list means the model is sound.

    A Goto with no matching From is reported with ``severity="warning"`` since
    such blocks are legal in original models.  Everything else is an error.
    """
    out: list[Violation] = []
    seen: dict[int, Block] = {}
    for b in m.blocks:
        if not isinstance(b.sid, int) or b.sid <= 0:
            out.append(Violation("InvalidSID", (b.sid,), "SIDs must be positive integers"))
        if b.sid in seen:
            out.append(Violation("DuplicateSID", (b.sid,)))
        seen[b.sid] = b
        if b.block_type not in BLOCK_TYPES:
            out.append(Violation("UnknownType", (b.sid,), b.block_type))
            continue
        out.extend(_check_params(b))
        l, t, r, bt = b.position
        if not (r > l and bt > t):
            out.append(Violation("BadPosition", (b.sid,), str(tuple(b.position))))

    fed: dict[tuple[int, int], Connection] = {}
    for c in m.connections:
        src, dst = seen.get(c.src), seen.get(c.dst)
        if src is None or dst is None:
            missing = tuple(s for s in (c.src, c.dst) if s not in seen)
            out.append(Violation("DanglingEndpoint", missing, f"{c.src_endpoint} -> {c.dst_endpoint}"))
            continue
        if src.block_type not in BLOCK_TYPES or dst.block_type not in BLOCK_TYPES:
            continue
        if not 1 <= c.src_port <= port_counts(src)[1]:
            out.append(Violation("InvalidPort", (c.src,), f"no output port {c.src_port}"))
        if not 1 <= c.dst_port <= port_counts(dst)[0]:
            out.append(Violation("InvalidPort", (c.dst,), f"no input port {c.dst_port}"))
        key = (c.dst, c.dst_port)
        if key in fed:
            out.append(Violation("MultipleDrivers", (c.dst,), f"input port {c.dst_port}"))
        fed[key] = c

    for b in m.blocks:
        if b.block_type not in BLOCK_TYPES:
            continue
        for p in range(1, port_counts(b)[0] + 1):
            if (b.sid, p) not in fed:
                out.append(Violation("UnconnectedInput", (b.sid,), f"input port {p}"))

    gotos, froms = m.gotos_by_tag(), m.froms_by_tag()
    for tag, gs in gotos.items():
        if len(gs) > 1:
            out.append(Violation("DuplicateGotoTag", tuple(g.sid for g in gs), tag))
        if tag not in froms:
            out.append(Violation("UnmatchedTag", tuple(g.sid for g in gs), tag, "warning"))
    for tag, fs in froms.items():
        if tag not in gotos:
            out.append(Violation("UnmatchedFrom", tuple(f.sid for f in fs), tag))

    names: dict[str, int] = {}
    for b in m.blocks:
        if b.block_type in ("Inport", "Outport"):
            if b.name in names:
                out.append(Violation("DuplicateSignalName", (names[b.name], b.sid), b.name))
            names[b.name] = b.sid
    for name in m.input_ranges:
        lo, hi = m.input_ranges[name]
        if lo > hi:
            out.append(Violation("BadRange", (), f"{name}: [{lo}, {hi}]"))
    return out


def _check_params(b: Block) -> list[Violation]:
    out = [
        Violation("MissingParam", (b.sid,), key)
        for key in REQUIRED_PARAMS.get(b.block_type, ())
        if key not in b.params
    ]
    if out:
        return out
    t = b.block_type
    if t == "Saturation" and float(b.params["upper_limit"]) < float(b.params["lower_limit"]):
        out.append(Violation("BadParam", (b.sid,), "upper_limit < lower_limit"))
    elif t == "Sum" and (not _sum_signs(b) or set(_sum_signs(b)) - {"+", "-"}):
        out.append(Violation("BadParam", (b.sid,), f"signs={b.params['signs']!r}"))
    elif t == "RelationalOperator" and b.params["op"] not in RELATIONAL_OPS:
        out.append(Violation("BadParam", (b.sid,), f"op={b.params['op']!r}"))
    elif t == "LogicalOperator" and str(b.params["op"]).upper() not in LOGICAL_OPS:
        out.append(Violation("BadParam", (b.sid,), f"op={b.params['op']!r}"))
    elif t == "MinMax" and b.params["op"] not in MINMAX_OPS:
        out.append(Violation("BadParam", (b.sid,), f"op={b.params['op']!r}"))
    return out


# ---------------------------------------------------------------- file format


def parse_endpoint(text: str) -> tuple[int, int]:
    try:
        sid, port = str(text).split(":")
        return int(sid), int(port)
    except ValueError:
        raise SchemaError(f"bad endpoint {text!r}; expected '<sid>:<port>'") from None


def _require(obj: Mapping, key: str, kind, where: str):
    if key not in obj:
        raise SchemaError(f"{where}: missing field {key!r}")
    value = obj[key]
    if kind is not None and not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise SchemaError(f"{where}: field {key!r} has wrong type {type(value).__name__}")
    return value


def model_from_dict(doc: Mapping) -> Model:
    if not isinstance(doc, Mapping):
        raise SchemaError("model file must contain a JSON object")
    name = _require(doc, "name", str, "model")
    sample_time = _require(doc, "sample_time", (int, float), "model")
    if sample_time <= 0:
        raise SchemaError("model: sample_time must be positive")
    raw_blocks = _require(doc, "blocks", list, "model")
    raw_conns = _require(doc, "connections", list, "model")
    raw_ranges = doc.get("input_ranges", {})
    if not isinstance(raw_ranges, Mapping):
        raise SchemaError("model: input_ranges must be an object")

    blocks = []
    for i, rb in enumerate(raw_blocks):
        where = f"blocks[{i}]"
        if not isinstance(rb, Mapping):
            raise SchemaError(f"{where}: must be an object")
        sid = _require(rb, "sid", int, where)
        btype = _require(rb, "type", str, where)
        if btype not in BLOCK_TYPES:
            raise SchemaError(f"{where}: unknown block type {btype!r}")
        params = rb.get("params", {})
        if not isinstance(params, Mapping):
            raise SchemaError(f"{where}: params must be an object")
        pos = rb.get("position", [0, 0, 30, 30])
        if not (isinstance(pos, list) and len(pos) == 4 and all(isinstance(v, int) for v in pos)):
            raise SchemaError(f"{where}: position must be four integers")
        blocks.append(Block(sid, str(rb.get("name", f"{btype}{sid}")), btype, dict(params), tuple(pos)))

    conns = []
    for i, rc in enumerate(raw_conns):
        where = f"connections[{i}]"
        if not isinstance(rc, Mapping):
            raise SchemaError(f"{where}: must be an object")
        s, sp = parse_endpoint(_require(rc, "src", str, where))
        d, dp = parse_endpoint(_require(rc, "dst", str, where))
        conns.append(Connection(s, sp, d, dp))

    ranges = {}
    for k, v in raw_ranges.items():
        if not (isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v)):
            raise SchemaError(f"input_ranges[{k!r}] must be [lo, hi]")
        ranges[str(k)] = (float(v[0]), float(v[1]))

    return Model(name, float(sample_time), tuple(blocks), tuple(conns), ranges)


_INTEGRITY_CODES = {
    "DuplicateSID",
    "DanglingEndpoint",
    "InvalidPort",
    "MultipleDrivers",
    "UnmatchedFrom",
    "DuplicateGotoTag",
}


def parse_model(text: str | bytes) -> Model:
    """Parse model-file content.

    Raises ModelSyntaxError for malformed JSON, SchemaError for missing or
    mistyped fields and unknown block types, and IntegrityError for duplicate
    SIDs, unresolvable connection endpoints, or From blocks without a Goto.
    Missing block parameters are not fatal here; ``validate`` reports them.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(f"line {exc.lineno} col {exc.colno}: {exc.msg}") from None
    m = model_from_dict(doc)
    problems = [v for v in validate(m) if v.code in _INTEGRITY_CODES]
    if problems:
        raise IntegrityError("; ".join(map(str, problems)))
    return m


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def model_to_dict(m: Model) -> dict:
    return {
        "name": m.name,
        "sample_time": m.sample_time,
        "blocks": [
            {
                "sid": b.sid,
                "name": b.name,
                "type": b.block_type,
                "params": dict(b.params),
                "position": list(b.position),
            }
            for b in m.blocks
        ],
        "connections": [{"src": c.src_endpoint, "dst": c.dst_endpoint} for c in m.connections],
        "input_ranges": {k: [lo, hi] for k, (lo, hi) in m.input_ranges.items()},
    }


def serialize_model(m: Model) -> str:
    return json.dumps(model_to_dict(m), indent=2, ensure_ascii=False) + "\n"


def save_model(m: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_model(m))
