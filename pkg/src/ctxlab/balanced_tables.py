"""Regression suite for three-qubit balanced states with Y/Z measurements.

Supports are regenerated from the states, snapped to exact rationals and
compared with the embedded reference tables. Dictatorship states are checked
under fixed angle menus and against random dichotomic menus.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import numpy as np

from .hierarchy import classify, decide_possibilistic_extendability
from .model import ContextualityClass, EmpiricalModel, context_key, enumerate_sections, snapped, support
from .quantum import (
    BooleanFunction,
    LocalObservable,
    QuantumState,
    balanced_state,
    empirical_model,
    named_function,
    observable_from_angles,
    pauli,
    random_unitary,
)

TWO_VARIABLE_STATES = ("XOR", "NXOR", "AND", "NAND", "OR", "NOR", "L1", "NL1", "L2", "NL2")
STRONG_STATES = ("XOR", "NXOR")

# dictated by qubit 1 or 2, with or without negation
DICTATORSHIPS: dict[str, list[list[int]]] = {
    "D1+": [[1]],
    "D1-": [[], [1]],
    "D2+": [[2]],
    "D2-": [[], [2]],
}


def load_reference() -> dict:
    text = resources.files("ctxlab").joinpath("fixtures/balanced_supports.json").read_text(encoding="utf-8")
    return json.loads(text)


def yz_labels(n: int) -> list[list[str]]:
    return [[f"Y{p + 1}", f"Z{p + 1}"] for p in range(n)]


def yz_model(f: BooleanFunction) -> EmpiricalModel:
    """Y/Z model of the balanced state of ``f`` (one party per qubit)."""
    state = balanced_state(f)
    menus = [[pauli("Y"), pauli("Z")] for _ in range(state.n)]
    return empirical_model(state, menus, yz_labels(state.n))


def row_name(context) -> str:
    return "".join(m[0] for m in context)


def support_rows(model: EmpiricalModel) -> dict[str, str]:
    """Row name (e.g. ``YZY``) -> 0/1 string over sections in lexicographic order."""
    out = {}
    for ctx, row in zip(model.scenario.cover, model.rows):
        out[row_name(ctx)] = "".join("1" if w else "0" for w in row)
    return out


def _flip(section: str, mask: str) -> str:
    return "".join(("-" if c == "+" else "+") if m == "-" else c for c, m in zip(section, mask))


def relabel(table: dict[str, str], image_of_plus: str) -> dict[str, str]:
    """Apply the column map sending ``+++`` to ``image_of_plus`` (parties marked - are flipped)."""
    secs = enumerate_sections(("a", "b", "c"))
    pos = {s: i for i, s in enumerate(secs)}
    out = {}
    for name, bits in table.items():
        new = ["0"] * len(secs)
        for s, b in zip(secs, bits):
            new[pos[_flip(s, image_of_plus)]] = b
        out[name] = "".join(new)
    return out


def expected_supports() -> dict[str, dict[str, str]]:
    ref = load_reference()
    tables = {name: dict(zip(ref["rows"], rows)) for name, rows in ref["tables"].items()}
    for name, image in ref["relabelings"].items():
        tables[name] = relabel(tables["AND"], image)
    return tables


@dataclass
class StateReport:
    name: str
    exact: bool
    mismatched_rows: list[str]
    verdict: ContextualityClass
    non_extendable: list[tuple[str, str]] = field(default_factory=list)

    @property
    def matches(self) -> bool:
        return self.exact and not self.mismatched_rows

    def to_json(self) -> dict:
        return {"name": self.name, "matches": self.matches, "mismatched_rows": self.mismatched_rows,
                "verdict": self.verdict.verdict,
                "non_extendable": [[row, sec] for row, sec in self.non_extendable]}


def check_state(name: str, expected: dict[str, str]) -> StateReport:
    model = yz_model(named_function(name))
    exact = snapped(model)
    if exact is not None:
        model = exact
    got = support_rows(support(model))
    bad = [row for row in expected if got.get(row) != expected[row]]
    report = decide_possibilistic_extendability(support(model))
    blocked = [(row_name(ctx), sec) for ctx, sec in report.non_extendable]
    return StateReport(name, exact is not None, bad, classify(model), blocked)


def dictatorship_state(name: str) -> QuantumState:
    return balanced_state(BooleanFunction.from_terms(2, DICTATORSHIPS[name]))


def dictatorship_menus(name: str) -> list[list[LocalObservable]]:
    """Menus under which the dictatorship state is weakly contextual."""
    if name.endswith("+"):
        pair = [observable_from_angles(math.pi / 2, math.pi / 8, "A"),
                observable_from_angles(math.pi / 2, 5 * math.pi / 8, "B")]
    else:
        pair = [observable_from_angles(math.pi / 8, math.pi / 2, "C"),
                observable_from_angles(5 * math.pi / 8, math.pi / 2, "D")]
    return [list(pair) for _ in range(3)]


def random_menu(rng: np.random.Generator) -> list[LocalObservable]:
    """Two dichotomic observables; a quarter of draws use Pauli pairs so exact zeros occur."""
    if rng.random() < 0.25:
        names = rng.choice(["X", "Y", "Z"], size=2, replace=False)
        return [pauli(str(n)) for n in names]
    out = []
    for _ in range(2):
        u = random_unitary(2, rng)
        out.append(LocalObservable(u[:, 0], u[:, 1], "R"))
    return out


@dataclass
class DictatorshipReport:
    name: str
    verdict: ContextualityClass
    possibilistically_extendable: bool
    samples: int
    logical_samples: int

    def to_json(self) -> dict:
        return {"name": self.name, "verdict": self.verdict.verdict,
                "possibilistically_extendable": self.possibilistically_extendable,
                "samples": self.samples, "logical_samples": self.logical_samples}


def check_dictatorship(name: str, trials: int, seed: int) -> DictatorshipReport:
    state = dictatorship_state(name)
    model = empirical_model(state, dictatorship_menus(name))
    verdict = classify(model)
    extendable = not decide_possibilistic_extendability(support(model)).logically_contextual
    rng = np.random.default_rng(seed)
    logical = 0
    for _ in range(trials):
        sample = empirical_model(state, [random_menu(rng) for _ in range(3)])
        if decide_possibilistic_extendability(support(sample)).logically_contextual:
            logical += 1
    return DictatorshipReport(name, verdict, extendable, trials, logical)


def run_suite(trials: int = 100, seed: int = 1) -> dict:
    expected = expected_supports()
    states = [check_state(name, expected[name]) for name in TWO_VARIABLE_STATES]
    dicts = [check_dictatorship(name, trials, seed + i) for i, name in enumerate(DICTATORSHIPS)]
    ok = all(s.matches for s in states)
    ok &= all(s.verdict == (ContextualityClass.STRONGLY_CONTEXTUAL if s.name in STRONG_STATES
                            else ContextualityClass.LOGICALLY_CONTEXTUAL) for s in states)
    ok &= all(d.verdict == ContextualityClass.WEAKLY_CONTEXTUAL and d.possibilistically_extendable
              and d.logical_samples == 0 for d in dicts)
    return {"ok": bool(ok), "states": [s.to_json() for s in states],
            "dictatorships": [d.to_json() for d in dicts]}


def format_table(model: EmpiricalModel) -> str:
    """Rows are contexts in menu order, columns are sections with + before -."""
    sc = model.scenario
    width = max(len(c) for c in sc.cover)
    cols = enumerate_sections(tuple(range(width)), sc.outcomes)
    name_w = max(len(context_key(c)) for c in sc.cover)
    lines = [" " * name_w + " | " + " ".join(f"{c:>8}" for c in cols)]
    for ctx, row in zip(sc.cover, model.rows):
        cells = []
        for w in row:
            if isinstance(w, (bool, np.bool_)):
                cells.append("1" if w else "0")
            elif isinstance(w, Fraction):
                cells.append(str(w))
            else:
                cells.append(f"{float(w):.4f}")
        lines.append(f"{context_key(ctx):<{name_w}} | " + " ".join(f"{c:>8}" for c in cells))
    return "\n".join(lines)


def all_balanced_functions(arity: int = 2):
    """Every Boolean function of the given arity, as monomial sets."""
    monomials = [m for k in range(arity + 1) for m in itertools.combinations(range(1, arity + 1), k)]
    for mask in range(1, 2 ** len(monomials)):
        yield BooleanFunction.from_terms(arity, [monomials[i] for i in range(len(monomials)) if mask >> i & 1])
