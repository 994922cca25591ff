"""Regenerate the bundled fixture models under src/reqslice/data/.

Run from the repository root::

    python tools/build_fixtures.py

The Tustin model is a reconstruction of a discrete trapezoidal integrator
with reset and dynamic limits (57 blocks, 5 inputs, 10 outputs).  Effector
Blender is a 95-block command allocator used only for training examples.
"""

from __future__ import annotations

import json
from pathlib import Path

from reqslice.backend import oracle_slice
from reqslice.evaluate import RequirementSpec, load_requirements
from reqslice.model import Block, Connection, Model, save_model, validate

DATA = Path(__file__).resolve().parents[1] / "src" / "reqslice" / "data"

_SIZES = {
    "Inport": (30, 14),
    "Outport": (30, 14),
    "Constant": (30, 30),
    "Goto": (60, 24),
    "From": (60, 24),
    "Switch": (50, 60),
    "Sum": (20, 20),
}


def _pos(btype: str, col: int, row: int) -> tuple[int, int, int, int]:
    w, h = _SIZES.get(btype, (40, 36))
    left, top = 60 + col * 110, 40 + row * 80
    return (left, top, left + w, top + h)


def _build(name, sample_time, spec, wires, ranges) -> Model:
    blocks = tuple(Block(sid, nm, bt, params, _pos(bt, c, r)) for sid, nm, bt, params, (c, r) in spec)
    conns = []
    for dst, srcs in wires:
        for port, src in enumerate(srcs, start=1):
            conns.append(Connection(src, 1, dst, port))
    m = Model(name, sample_time, blocks, tuple(conns), ranges)
    bad = [v for v in validate(m) if v.severity == "error"]
    assert not bad, bad
    return m


# ---------------------------------------------------------------- Tustin

TUSTIN_BLOCKS = [
    (87, "xin", "Inport", {"port": 1}, (0, 0)),
    (88, "TL", "Inport", {"port": 2}, (0, 3)),
    (91, "BL", "Inport", {"port": 3}, (0, 4)),
    (89, "reset", "Inport", {"port": 4}, (0, 6)),
    (90, "ic", "Inport", {"port": 5}, (0, 7)),
    (125, "T", "Constant", {"value": 0.1}, (0, 1)),
    (126, "HalfT", "Gain", {"gain": 0.5}, (1, 1)),
    (100, "XPrev", "UnitDelay", {"initial": 0.0}, (1, 0)),
    (101, "XSum", "Sum", {"signs": "++"}, (2, 0)),
    (102, "Increment", "Product", {"inputs": 2}, (3, 0)),
    (103, "YPrev", "UnitDelay", {"initial": 0.0}, (3, 2)),
    (104, "YRaw", "Sum", {"signs": "++"}, (4, 1)),
    (107, "LimitsOK", "RelationalOperator", {"op": ">="}, (1, 4)),
    (105, "UpperSel", "Switch", {"threshold": 0.5, "criteria": "u2 >= Threshold"}, (2, 3)),
    (106, "LowerSel", "Switch", {"threshold": 0.5, "criteria": "u2 >= Threshold"}, (2, 5)),
    (132, "GotoUL", "Goto", {"tag": "UL"}, (3, 3)),
    (140, "GotoLL", "Goto", {"tag": "LL"}, (3, 5)),
    (141, "FromUL", "From", {"tag": "UL"}, (4, 3)),
    (142, "FromLL", "From", {"tag": "LL"}, (4, 4)),
    (108, "ClipHigh", "MinMax", {"op": "min", "inputs": 2}, (5, 1)),
    (109, "ClipLow", "MinMax", {"op": "max", "inputs": 2}, (6, 1)),
    (96, "ResetSwitch", "Switch", {"threshold": 0.5, "criteria": "u2 >= Threshold"}, (7, 2)),
    (93, "Saturation", "Saturation", {"upper_limit": 100.0, "lower_limit": -100.0}, (8, 2)),
    (99, "yout", "Outport", {"port": 1}, (9, 2)),
    (143, "GotoYP", "Goto", {"tag": "YP"}, (4, 2)),
    (144, "FromYP", "From", {"tag": "YP"}, (8, 8)),
    (110, "y_prev", "Outport", {"port": 2}, (9, 8)),
    (145, "GotoXP", "Goto", {"tag": "XP"}, (2, 1)),
    (146, "FromXP", "From", {"tag": "XP"}, (8, 9)),
    (111, "x_prev", "Outport", {"port": 3}, (9, 9)),
    (147, "GotoYR", "Goto", {"tag": "YR"}, (5, 0)),
    (148, "FromYR", "From", {"tag": "YR"}, (8, 10)),
    (112, "yraw", "Outport", {"port": 4}, (9, 10)),
    (113, "upper_lim", "Outport", {"port": 5}, (3, 4)),
    (114, "lower_lim", "Outport", {"port": 6}, (3, 6)),
    (116, "LimitsBad", "LogicalOperator", {"op": "NOT"}, (2, 7)),
    (127, "AbsTL", "Abs", {}, (1, 8)),
    (128, "AbsBL", "Abs", {}, (1, 9)),
    (129, "LimitMax", "Constant", {"value": 100.0}, (1, 10)),
    (131, "TLTooLarge", "RelationalOperator", {"op": ">"}, (2, 8)),
    (133, "BLTooLarge", "RelationalOperator", {"op": ">"}, (2, 9)),
    (134, "LimitError", "LogicalOperator", {"op": "OR", "inputs": 3}, (3, 8)),
    (115, "lim_err", "Outport", {"port": 7}, (4, 8)),
    (121, "ICAboveLow", "RelationalOperator", {"op": ">="}, (5, 6)),
    (122, "ICBelowHigh", "RelationalOperator", {"op": "<="}, (5, 7)),
    (123, "ICInRange", "LogicalOperator", {"op": "AND", "inputs": 2}, (6, 6)),
    (124, "ic_ok", "Outport", {"port": 8}, (7, 6)),
    (118, "AboveHigh", "RelationalOperator", {"op": ">"}, (5, 3)),
    (119, "BelowLow", "RelationalOperator", {"op": "<"}, (5, 4)),
    (135, "Saturating", "LogicalOperator", {"op": "OR", "inputs": 2}, (6, 3)),
    (117, "sat_flag", "Outport", {"port": 9}, (7, 3)),
    (136, "Delta", "Sum", {"signs": "+-"}, (8, 4)),
    (137, "AbsDelta", "Abs", {}, (8, 5)),
    (149, "PerSecond", "Gain", {"gain": 10.0}, (8, 6)),
    (138, "RateMax", "Constant", {"value": 50.0}, (8, 7)),
    (139, "RateOK", "RelationalOperator", {"op": "<="}, (9, 5)),
    (130, "rate_ok", "Outport", {"port": 10}, (9, 6)),
]

# (destination, [source for input port 1, 2, ...])
TUSTIN_WIRES = [
    (126, [125]),
    (100, [87]),
    (101, [87, 100]),
    (102, [101, 126]),
    (103, [93]),
    (104, [103, 102]),
    (107, [88, 91]),
    (105, [88, 107, 91]),
    (106, [91, 107, 88]),
    (132, [105]),
    (140, [106]),
    (108, [104, 141]),
    (109, [108, 142]),
    (96, [90, 89, 109]),
    (93, [96]),
    (99, [93]),
    (143, [103]),
    (110, [144]),
    (145, [100]),
    (111, [146]),
    (147, [104]),
    (112, [148]),
    (113, [105]),
    (114, [106]),
    (116, [107]),
    (127, [88]),
    (128, [91]),
    (131, [127, 129]),
    (133, [128, 129]),
    (134, [116, 131, 133]),
    (115, [134]),
    (121, [90, 142]),
    (122, [90, 141]),
    (123, [121, 122]),
    (124, [123]),
    (118, [104, 141]),
    (119, [104, 142]),
    (135, [118, 119]),
    (117, [135]),
    (136, [93, 103]),
    (137, [136]),
    (149, [137]),
    (139, [149, 138]),
    (130, [139]),
]

TUSTIN_RANGES = {
    "xin": (-10.0, 10.0),
    "TL": (-5.0, 10.0),
    "BL": (-10.0, 5.0),
    "reset": (0.0, 1.0),
    "ic": (-10.0, 10.0),
}

TUSTIN_REQUIREMENTS = [
    {
        "id": "R1",
        "text": (
            "When reset is True and the Initial Condition (ic) is within the Top and Bottom "
            "Limits (BL <= ic <= TL), the Output (yout) should match the Initial Condition (ic)."
        ),
        "antecedent": "reset >= 0.5 && BL <= ic && ic <= TL",
        "consequent": "yout == ic",
    },
    {
        "id": "R2",
        "text": (
            "When reset is False and the Top Limit (TL) is not below the Bottom Limit (BL), "
            "the Output (yout) shall stay between BL and TL."
        ),
        "antecedent": "reset < 0.5 && TL >= BL",
        "consequent": "yout <= TL + 0.000001 && yout >= BL - 0.000001",
    },
    {
        "id": "R3",
        "text": (
            "If the Top Limit (TL) is below the Bottom Limit (BL), the limit error flag "
            "(lim_err) shall be raised."
        ),
        "antecedent": "TL < BL",
        "consequent": "lim_err >= 0.5",
    },
    {
        "id": "R4",
        "text": (
            "When the Initial Condition (ic) is within the Bottom and Top Limits "
            "(BL <= ic <= TL), the indicator ic_ok shall be True."
        ),
        "antecedent": "BL <= ic && ic <= TL",
        "consequent": "ic_ok >= 0.5",
    },
    {
        "id": "R5",
        "text": (
            "When reset is False, the per-second rate of change of the Output (yout) shall "
            "not exceed the rate limit, so that rate_ok is True."
        ),
        "antecedent": "reset < 0.5",
        "consequent": "rate_ok >= 0.5",
    },
]

EXCERPT_SIDS = (88, 91, 107, 105, 106, 113, 114)


def tustin() -> Model:
    return _build("Tustin", 0.1, TUSTIN_BLOCKS, TUSTIN_WIRES, TUSTIN_RANGES)


def fig4_excerpt() -> Model:
    keep = set(EXCERPT_SIDS)
    spec = [b for b in TUSTIN_BLOCKS if b[0] in keep]
    wires = [w for w in TUSTIN_WIRES if w[0] in keep]
    ranges = {k: v for k, v in TUSTIN_RANGES.items() if k in ("TL", "BL")}
    return _build("TustinLimits", 0.1, spec, wires, ranges)


# ---------------------------------------------------------------- Effector Blender

EFFECTORS = [
    # (allocation weight, bias, position limits, rate limit per step)
    (0.80, 0.00, (-0.50, 0.50), 0.05),
    (-0.60, 0.10, (-0.40, 0.60), 0.04),
    (0.45, -0.05, (-0.30, 0.30), 0.03),
    (1.00, 0.00, (-0.70, 0.70), 0.06),
    (-0.35, 0.20, (0.00, 0.50), 0.02),
    (0.25, -0.10, (-0.35, 0.15), 0.02),
    (0.90, 0.05, (-0.60, 0.65), 0.05),
]


def effector_blender() -> tuple[Model, list[dict]]:
    spec, wires = [], []
    spec += [
        (10, "cmd", "Inport", {"port": 1}, (0, 0)),
        (11, "CmdScale", "Gain", {"gain": 1.0}, (1, 0)),
        (12, "CmdPrev", "UnitDelay", {"initial": 0.0}, (2, 1)),
        (13, "CmdSum", "Sum", {"signs": "++"}, (3, 0)),
        (14, "CmdAverage", "Gain", {"gain": 0.5}, (4, 0)),
        (15, "GotoCmd", "Goto", {"tag": "CMD"}, (5, 0)),
        (16, "CmdMagnitude", "Abs", {}, (5, 1)),
        (17, "EnableThreshold", "Constant", {"value": 0.05}, (5, 2)),
        (18, "EnableCheck", "RelationalOperator", {"op": ">="}, (6, 1)),
        (19, "GotoEnable", "Goto", {"tag": "EN"}, (7, 1)),
        (20, "Zero", "Constant", {"value": 0.0}, (7, 2)),
    ]
    wires += [(11, [10]), (12, [11]), (13, [11, 12]), (14, [13]), (15, [14]), (16, [14]),
              (18, [16, 17]), (19, [18])]
    reqs = []
    for i, (w, bias, (lo, hi), rate) in enumerate(EFFECTORS, start=1):
        base = 20 + 12 * (i - 1) + 1
        row = 3 + 2 * (i - 1)
        s = {k: base + j for j, k in enumerate(
            ["from_cmd", "gain", "from_en", "switch", "bias", "sum", "sat", "delta",
             "rate", "apply", "prev", "out"])}
        spec += [
            (s["from_cmd"], f"FromCmd{i}", "From", {"tag": "CMD"}, (0, row)),
            (s["gain"], f"Alloc{i}", "Gain", {"gain": w}, (1, row)),
            (s["from_en"], f"FromEnable{i}", "From", {"tag": "EN"}, (1, row + 1)),
            (s["switch"], f"Enable{i}", "Switch", {"threshold": 0.5}, (2, row)),
            (s["bias"], f"Bias{i}", "Constant", {"value": bias}, (2, row + 1)),
            (s["sum"], f"AddBias{i}", "Sum", {"signs": "++"}, (3, row)),
            (s["sat"], f"PositionLimit{i}", "Saturation", {"upper_limit": hi, "lower_limit": lo}, (4, row)),
            (s["delta"], f"Delta{i}", "Sum", {"signs": "+-"}, (5, row)),
            (s["rate"], f"RateLimit{i}", "Saturation", {"upper_limit": rate, "lower_limit": -rate}, (6, row)),
            (s["apply"], f"Apply{i}", "Sum", {"signs": "++"}, (7, row)),
            (s["prev"], f"Previous{i}", "UnitDelay", {"initial": 0.0}, (7, row + 1)),
            (s["out"], f"eff_{i}", "Outport", {"port": i}, (8, row)),
        ]
        wires += [
            (s["gain"], [s["from_cmd"]]),
            (s["switch"], [s["gain"], s["from_en"], 20]),
            (s["sum"], [s["switch"], s["bias"]]),
            (s["sat"], [s["sum"]]),
            (s["delta"], [s["sat"], s["prev"]]),
            (s["rate"], [s["delta"]]),
            (s["apply"], [s["prev"], s["rate"]]),
            (s["prev"], [s["apply"]]),
            (s["out"], [s["apply"]]),
        ]
        if i in (1, 4, 7):
            reqs.append({
                "id": f"E{len(reqs) + 1}",
                "text": (
                    f"The command of effector {i} (eff_{i}) shall remain within its position "
                    f"limits [{lo}, {hi}] for every admissible command input (cmd)."
                ),
                "antecedent": "abs(cmd) <= 1",
                "consequent": f"eff_{i} <= {hi} + 0.000001 && eff_{i} >= {lo} - 0.000001",
            })
    m = _build("EffectorBlender", 0.02, spec, wires, {"cmd": (-1.0, 1.0)})
    return m, reqs


_CATEGORY = [
    ("Inport", "the input signal the requirement constrains"),
    ("Gain", "the scaling and allocation gain blocks on the command path"),
    ("UnitDelay", "the state blocks (unit delays) that hold previous values"),
    ("Sum", "the summation blocks that combine the command with bias and state"),
    ("Abs", "the blocks computing the command magnitude"),
    ("RelationalOperator", "the comparison blocks deciding whether blending is enabled"),
    ("Switch", "the switch blocks that select between the allocated command and zero"),
    ("Goto", "the Goto blocks that broadcast the command and enable signals"),
    ("Saturation", "the saturation blocks enforcing the position and rate limits"),
    ("Outport", "the output block named in the requirement"),
]


def _reasoning(m: Model, sids: list[int], req: dict) -> list[str]:
    steps = [
        f"Identify the signals named by the requirement: the input cmd and the output "
        f"{req['consequent'].split()[0]}."
    ]
    for btype, role in _CATEGORY:
        found = [s for s in sids if m.block(s).block_type == btype]
        if found:
            names = ", ".join(f"{m.block(s).name} (SID {s})" for s in found)
            steps.append(f"Include {role}: {names}.")
    steps.append("Exclude blocks that only feed the other effector channels.")
    return steps


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    save_model(tustin(), DATA / "tustin.json")
    save_model(fig4_excerpt(), DATA / "tustin_limits_excerpt.json")
    (DATA / "tustin_requirements.json").write_text(
        json.dumps({"requirements": TUSTIN_REQUIREMENTS}, indent=2) + "\n", encoding="utf-8")

    eb, ereqs = effector_blender()
    save_model(eb, DATA / "effector_blender.json")
    (DATA / "effector_blender_requirements.json").write_text(
        json.dumps({"requirements": ereqs}, indent=2) + "\n", encoding="utf-8")

    examples = []
    for spec in load_requirements(DATA / "effector_blender_requirements.json"):
        sids = list(oracle_slice(eb, spec).sids)
        raw = next(r for r in ereqs if r["id"] == spec.id)
        examples.append({
            "model": "effector_blender.json",
            "verbosity": "medium",
            "requirement": spec.text,
            "block_sids": sids,
            "reasoning": _reasoning(eb, sids, raw),
        })
    (DATA / "training_examples.json").write_text(
        json.dumps({"examples": examples}, indent=2) + "\n", encoding="utf-8")

    catalog = {
        "Tustin": {"file": "tustin.json", "requirements": "tustin_requirements.json",
                   "description": "Discrete trapezoidal integrator with reset and dynamic clipping limits.",
                   "blocks": 57, "inports": 5, "outports": 10, "n_requirements": 5,
                   "role": "slicing target"},
        "EffectorBlender": {"file": "effector_blender.json",
                            "requirements": "effector_blender_requirements.json",
                            "description": "Seven-channel command allocator with position and rate limits.",
                            "blocks": 95, "inports": 1, "outports": 7, "n_requirements": 3,
                            "role": "training"},
    }
    (DATA / "catalog.json").write_text(json.dumps(catalog, indent=2) + "\n", encoding="utf-8")
    for name, m in (("tustin", tustin()), ("effector", eb)):
        print(name, m.summary())


if __name__ == "__main__":
    main()
