"""Executable slice construction from a block list.

``augment_edge_cases`` closes a block list under the "needed to run" rule
(neighbouring Inports/Outports, Goto/From partners).  ``resolve_dangling``
cuts the induced sub-model out of the original and feeds every input port that
lost its driver from a new Constant block, whose value is read off a simulation
of the original model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .backend import BlockList
from .model import Block, Connection, Model, load_model, port_counts, serialize_model
from .simulate import TestCase, simulate

__all__ = [
    "ConstantFix",
    "Slice",
    "augment_edge_cases",
    "build_slice",
    "load_slice",
    "provenance_path",
    "resolve_dangling",
    "write_slice",
]


@dataclass(frozen=True)
class ConstantFix:
    target: int
    port: int
    value: float
    sid: int
    # From blocks that receive this constant through a Goto target
    feeds: tuple[int, ...] = ()

    @property
    def endpoint(self) -> str:
        return f"{self.target}:{self.port}"


@dataclass(frozen=True)
class Slice:
    model: Model
    kept_sids: frozenset[int]
    edge_case_sids: frozenset[int] = frozenset()
    constant_fixes: tuple[ConstantFix, ...] = ()
    derived_from: tuple[str, str] = ("", "")
    dropped_sids: frozenset[int] = frozenset()

    @property
    def size(self) -> int:
        return len(self.model.blocks)

    @property
    def constant_sids(self) -> frozenset[int]:
        return frozenset(f.sid for f in self.constant_fixes)

    def provenance(self) -> dict:
        return {
            "kept": sorted(self.kept_sids),
            "edge_cases": sorted(self.edge_case_sids),
            "dropped": sorted(self.dropped_sids),
            "constants": [
                {"target": f.endpoint, "value": f.value, "sid": f.sid, **({"feeds": list(f.feeds)} if f.feeds else {})}
                for f in self.constant_fixes
            ],
            "model": self.derived_from[0],
            "requirement": self.derived_from[1],
        }


def _partners(m: Model, b: Block) -> list[int]:
    tag = str(b.param("tag"))
    if b.block_type == "Goto":
        return [f.sid for f in m.froms_by_tag().get(tag, [])]
    if b.block_type == "From":
        return [g.sid for g in m.gotos_by_tag().get(tag, [])]
    return []


def augment_edge_cases(m: Model, bl: BlockList | Iterable[int]) -> BlockList:
    """Close ``bl`` under the edge-case rule; added SIDs follow in model order."""
    listed = list(bl)
    unknown = set(listed) - set(m.sids)
    if unknown:
        raise ValueError(f"block list names SIDs absent from the model: {sorted(unknown)}")
    have = set(listed)
    while True:
        extra: set[int] = set()
        for c in m.connections:
            if c.dst in have and c.src not in have and m.block(c.src).block_type == "Inport":
                extra.add(c.src)
            if c.src in have and c.dst not in have and m.block(c.dst).block_type == "Outport":
                extra.add(c.dst)
        for sid in have:
            extra.update(p for p in _partners(m, m.block(sid)) if p not in have)
        if not extra:
            break
        have |= extra
    added = [s for s in m.sids if s in have and s not in set(listed)]
    src = bl.source if isinstance(bl, BlockList) else "oracle"
    it = bl.iteration if isinstance(bl, BlockList) else None
    return BlockList(tuple(listed) + tuple(added), src, it)


def _pick(series: np.ndarray, const_at) -> float:
    if const_at in (None, "step", "first"):
        return float(series[0])
    if const_at == "mean":
        return float(np.mean(series))
    if const_at == "last":
        return float(series[-1])
    return float(series[int(const_at)])


def resolve_dangling(
    m: Model,
    bl: BlockList | Iterable[int],
    seed_input: TestCase,
    const_at="step",
    listed: Iterable[int] | None = None,
    requirement: str = "",
    orphan_outports: str = "drop",
) -> Slice:
    """Induced sub-model of ``bl`` with every open input fed by a new Constant.

    ``listed`` is the block list before edge-case closure (defaults to ``bl``);
    SIDs of ``bl`` not in it are reported as edge cases.  ``const_at`` chooses
    which sample of the seed simulation becomes the constant: ``"step"`` (the
    first), an integer step index, ``"mean"`` or ``"last"``.  Outports whose
    driver is not in the slice are removed unless ``orphan_outports`` is
    ``"constant"``, in which case they are repaired like any other input.
    """
    if orphan_outports not in ("drop", "constant"):
        raise ValueError("orphan_outports must be 'drop' or 'constant'")
    closed = set(bl)
    listed_set = set(listed) if listed is not None else closed
    keep = set(closed)
    driver = m.driver

    # An Outport whose driver is gone would only ever emit a constant.
    dropped = set()
    if orphan_outports == "drop":
        dropped = {
            s for s in keep
            if m.block(s).block_type == "Outport" and driver.get((s, 1), (None,))[0] not in keep
        }
    keep -= dropped
    fed = {c.src for c in m.connections if c.dst in keep}
    idle_in = {s for s in keep if m.block(s).block_type == "Inport" and s not in fed}
    keep -= idle_in
    dropped |= idle_in

    blocks = [b for b in m.blocks if b.sid in keep]
    conns = [c for c in m.connections if c.src in keep and c.dst in keep]
    wired = {(c.dst, c.dst_port) for c in conns}
    open_ports = [
        (b, p) for b in blocks for p in range(1, port_counts(b)[0] + 1) if (b.sid, p) not in wired
    ]

    fixes: list[ConstantFix] = []
    if open_ports:
        trace = simulate(m, seed_input)
        next_sid = max(m.sids) + 1
        for b, p in open_ports:
            src = driver.get((b.sid, p))
            value = _pick(trace[f"{src[0]}:{src[1]}"], const_at) if src else 0.0
            l, t, _, _ = b.position
            blocks.append(Block(next_sid, f"fix_{b.sid}_{p}", "Constant", {"value": value},
                                (l - 70, t, l - 40, t + 30)))
            conns.append(Connection(next_sid, 1, b.sid, p))
            fixes.append(ConstantFix(b.sid, p, value, next_sid, tuple(_partners(m, b)) if b.block_type == "Goto" else ()))
            next_sid += 1

    inport_names = {b.name for b in blocks if b.block_type == "Inport"}
    sub = Model(
        f"{m.name}_slice",
        m.sample_time,
        tuple(blocks),
        tuple(conns),
        {k: v for k, v in m.input_ranges.items() if k in inport_names},
    )
    return Slice(
        sub,
        frozenset(keep & listed_set),
        frozenset(keep - listed_set),
        tuple(fixes),
        (m.name, requirement),
        frozenset(dropped),
    )


def build_slice(
    m: Model,
    bl: BlockList | Iterable[int],
    seed_input: TestCase,
    const_at="step",
    requirement: str = "",
    orphan_outports: str = "drop",
) -> Slice:
    listed = list(bl)
    closed = augment_edge_cases(m, bl)
    s = resolve_dangling(m, closed, seed_input, const_at, listed, requirement, orphan_outports)
    simulate(s.model, seed_input)  # must execute; errors propagate
    return s


def provenance_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".prov.json")


def write_slice(s: Slice, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_model(s.model), encoding="utf-8")
    prov = provenance_path(path)
    prov.write_text(json.dumps(s.provenance(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return prov


def load_slice(path) -> Slice:
    path = Path(path)
    sub = load_model(path)
    prov_file = provenance_path(path)
    if not prov_file.exists():
        # a bare model file: treat every block as kept
        return Slice(sub, frozenset(sub.sids))
    prov = json.loads(prov_file.read_text(encoding="utf-8"))
    fixes = []
    for c in prov.get("constants", []):
        target, port = (int(x) for x in c["target"].split(":"))
        fixes.append(ConstantFix(target, port, float(c["value"]), int(c["sid"]), tuple(c.get("feeds", ()))))
    return Slice(
        sub,
        frozenset(prov.get("kept", ())),
        frozenset(prov.get("edge_cases", ())),
        tuple(fixes),
        (prov.get("model", ""), prov.get("requirement", "")),
        frozenset(prov.get("dropped", ())),
    )
