"""Measurement scenarios and empirical models over the probability and boolean semirings."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

Weight = Union[Fraction, float, bool]

EPS_NORM = 1e-9
EPS_SUPP = 1e-9
DEFAULT_CAP = 2**20

PLUS = "+"
MINUS = "-"
CANONICAL_OUTCOMES = (PLUS, MINUS)

# aliases accepted on input for the two canonical outcomes
_OUTCOME_ALIASES = {"+": PLUS, "-": MINUS, "−": MINUS, "0": PLUS, "1": MINUS}


class ModelError(ValueError):
    """Invalid scenario, section or model."""


class CapacityError(RuntimeError):
    """An enumeration would exceed the configured cap."""


class Semiring(enum.Enum):
    PROBABILITY = "probability"
    BOOLEAN = "boolean"


class ContextualityClass(enum.IntEnum):
    """Position in the hierarchy; a larger value implies every smaller one except NON_CONTEXTUAL."""

    NON_CONTEXTUAL = 0
    WEAKLY_CONTEXTUAL = 1
    LOGICALLY_CONTEXTUAL = 2
    STRONGLY_CONTEXTUAL = 3

    @property
    def verdict(self) -> str:
        return _VERDICTS[self]

    def implies(self, other: "ContextualityClass") -> bool:
        if other is ContextualityClass.NON_CONTEXTUAL:
            return self is ContextualityClass.NON_CONTEXTUAL
        return self >= other


_VERDICTS = {
    ContextualityClass.NON_CONTEXTUAL: "non_contextual",
    ContextualityClass.WEAKLY_CONTEXTUAL: "weak",
    ContextualityClass.LOGICALLY_CONTEXTUAL: "logical",
    ContextualityClass.STRONGLY_CONTEXTUAL: "strong",
}


def canonical_outcome(label: str) -> str:
    try:
        return _OUTCOME_ALIASES[label]
    except KeyError:
        raise ModelError(f"unknown outcome label {label!r}") from None


@dataclass(frozen=True)
class MeasurementScenario:
    """Measurements X, shared outcomes O and an anti-chain cover of maximal contexts.

    Contexts keep the measurement order they were given in; sections of a
    context are read in that order.
    """

    measurements: tuple[str, ...]
    outcomes: tuple[str, ...] = CANONICAL_OUTCOMES
    cover: tuple[tuple[str, ...], ...] = ()
    parties: Mapping[str, int] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "measurements", tuple(self.measurements))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        object.__setattr__(self, "cover", tuple(tuple(c) for c in self.cover))
        if len(set(self.measurements)) != len(self.measurements):
            raise ModelError("duplicate measurement labels")
        if not self.outcomes or len(set(self.outcomes)) != len(self.outcomes):
            raise ModelError("outcome set must be non-empty and distinct")
        if not self.cover:
            raise ModelError("cover must contain at least one context")
        known = set(self.measurements)
        for ctx in self.cover:
            if not ctx or len(set(ctx)) != len(ctx):
                raise ModelError(f"bad context {ctx!r}")
            if not set(ctx) <= known:
                raise ModelError(f"context {ctx!r} uses unknown measurements")
        if set().union(*map(set, self.cover)) != known:
            raise ModelError("cover does not cover every measurement")
        sets = [frozenset(c) for c in self.cover]
        for i, a in enumerate(sets):
            for j, b in enumerate(sets):
                if i != j and a <= b:
                    raise ModelError(f"cover is not an anti-chain: {self.cover[i]} within {self.cover[j]}")
        if self.parties is not None:
            for ctx in self.cover:
                owners = [self.parties[m] for m in ctx]
                if sorted(owners) != sorted(set(self.parties.values())):
                    raise ModelError(f"context {ctx!r} must hold one measurement per party")

    @classmethod
    def bell_type(cls, menus: Sequence[Sequence[str]], outcomes: Sequence[str] = CANONICAL_OUTCOMES) -> "MeasurementScenario":
        """Scenario whose contexts pick one measurement per party, in menu order."""
        measurements = [m for menu in menus for m in menu]
        parties = {m: i for i, menu in enumerate(menus) for m in menu}
        cover = list(itertools.product(*menus))
        return cls(tuple(measurements), tuple(outcomes), tuple(cover), parties)

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    def context_index(self, context: Sequence[str]) -> int:
        ctx = tuple(context)
        for i, c in enumerate(self.cover):
            if c == ctx:
                return i
        for i, c in enumerate(self.cover):
            if set(c) == set(ctx):
                return i
        raise ModelError(f"{ctx!r} is not a context of the cover")

    def section_string(self, section: Sequence[int]) -> str:
        return "".join(self.outcomes[k] for k in section)

    def parse_section(self, text: str, length: int) -> tuple[int, ...]:
        if self.outcomes == CANONICAL_OUTCOMES:
            labels = [canonical_outcome(ch) for ch in text]
        else:
            labels = list(text)
        if len(labels) != length:
            raise ModelError(f"section {text!r} has wrong length for a context of size {length}")
        try:
            return tuple(self.outcomes.index(lab) for lab in labels)
        except ValueError:
            raise ModelError(f"section {text!r} uses unknown outcomes") from None

    def global_count(self) -> int:
        return self.n_outcomes ** len(self.measurements)


def _check_cap(count: int, cap: int) -> None:
    if count > cap:
        raise CapacityError(f"enumeration of {count} items exceeds cap {cap}")


def enumerate_sections(context: Sequence[str], outcomes: Sequence[str] = CANONICAL_OUTCOMES,
                       cap: int = DEFAULT_CAP) -> list[str]:
    """All sections of ``context`` as outcome strings, lexicographic in outcome order."""
    _check_cap(len(outcomes) ** len(context), cap)
    return ["".join(p) for p in itertools.product(outcomes, repeat=len(context))]


def enumerate_global(scenario: MeasurementScenario, cap: int = DEFAULT_CAP) -> list[str]:
    """All global assignments over ``scenario.measurements``, lexicographic."""
    return enumerate_sections(scenario.measurements, scenario.outcomes, cap)


def global_index_array(scenario: MeasurementScenario, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Global assignments as a (q, |X|) array of outcome indices, lexicographic rows."""
    q = scenario.global_count()
    _check_cap(q, cap)
    k, m = scenario.n_outcomes, len(scenario.measurements)
    idx = np.arange(q, dtype=np.int64)
    powers = k ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] // powers[None, :]) % k).astype(np.int8)


def _is_bool(w: object) -> bool:
    return isinstance(w, (bool, np.bool_))


def marginalize(row: Mapping[str, Weight], context: Sequence[str], target: Sequence[str]) -> dict[str, Weight]:
    """Restrict a distribution over sections of ``context`` to ``target``.

    Probability weights are summed over extensions; boolean weights are joined.
    Result keys are target sections in lexicographic order of the outcome
    labels as they first appear, with ``+`` before ``-``.
    """
    context, target = tuple(context), tuple(target)
    if not set(target) <= set(context):
        raise ModelError(f"{target!r} is not a subset of {context!r}")
    pos = [context.index(m) for m in target]
    out: dict[str, Weight] = {}
    for key, w in row.items():
        if len(key) != len(context):
            raise ModelError(f"section {key!r} does not match context {context!r}")
        sub = "".join(key[p] for p in pos)
        if sub in out:
            out[sub] = (out[sub] or w) if _is_bool(w) else out[sub] + w
        else:
            out[sub] = bool(w) if _is_bool(w) else w
    return dict(sorted(out.items(), key=lambda kv: [_outcome_rank(ch) for ch in kv[0]]))


def _outcome_rank(ch: str) -> tuple[int, str]:
    try:
        return (CANONICAL_OUTCOMES.index(canonical_outcome(ch)), ch)
    except ModelError:
        return (len(CANONICAL_OUTCOMES), ch)


@dataclass(frozen=True)
class Violation:
    """One disagreement of marginals between two contexts."""

    context_a: tuple[str, ...]
    context_b: tuple[str, ...]
    overlap: tuple[str, ...]
    section: str
    difference: float


class EmpiricalModel:
    """Per-context weights over sections, stored densely in lexicographic section order.

    Weights are ``Fraction`` when every input weight was rational, ``float``
    when any was real, and ``bool`` for the boolean semiring.
    """

    __slots__ = ("scenario", "semiring", "_rows")

    def __init__(self, scenario: MeasurementScenario, rows: Sequence[Sequence[Weight]],
                 semiring: Semiring = Semiring.PROBABILITY, *, eps_norm: float = EPS_NORM,
                 validate: bool = True) -> None:
        self.scenario = scenario
        self.semiring = semiring
        if len(rows) != len(scenario.cover):
            raise ModelError("one row per context is required")
        k = scenario.n_outcomes
        clean: list[tuple[Weight, ...]] = []
        for ctx, row in zip(scenario.cover, rows):
            row = tuple(row)
            if len(row) != k ** len(ctx):
                raise ModelError(f"row for {ctx!r} has {len(row)} entries, expected {k ** len(ctx)}")
            clean.append(_coerce_row(row, semiring))
        exact = semiring is Semiring.PROBABILITY and all(isinstance(w, Fraction) for r in clean for w in r)
        if semiring is Semiring.PROBABILITY and not exact:
            clean = [tuple(float(w) for w in r) for r in clean]
        self._rows = tuple(clean)
        if validate:
            self._validate(eps_norm)

    def _validate(self, eps_norm: float) -> None:
        for ctx, row in zip(self.scenario.cover, self._rows):
            if self.semiring is Semiring.BOOLEAN:
                if not any(row):
                    raise ModelError(f"boolean row {ctx!r} has no possible section")
                continue
            if any(w < -eps_norm for w in row):
                raise ModelError(f"row {ctx!r} has a negative weight")
            total = sum(row)
            if total == 0:
                raise ModelError(f"row {ctx!r} is identically zero")
            if abs(total - 1) > eps_norm:
                raise ModelError(f"row {ctx!r} sums to {float(total)!r}, not 1")

    @classmethod
    def from_mapping(cls, scenario: MeasurementScenario, rows: Mapping[Sequence[str] | str, Mapping[str, Weight]],
                     semiring: Semiring = Semiring.PROBABILITY, **kwargs) -> "EmpiricalModel":
        """Build from ``{context: {section-string: weight}}``; missing sections weigh zero."""
        dense: list[list[Weight] | None] = [None] * len(scenario.cover)
        zero: Weight = False if semiring is Semiring.BOOLEAN else Fraction(0)
        for key, row in rows.items():
            ctx = _split_context_key(key)
            ci = scenario.context_index(ctx)
            given = scenario.cover[ci]
            perm = [ctx.index(m) for m in given]
            sections = enumerate_sections(given, scenario.outcomes)
            vec: list[Weight] = [zero] * len(sections)
            lookup = {s: i for i, s in enumerate(sections)}
            for sec, w in row.items():
                parsed = scenario.parse_section(sec, len(ctx))
                reordered = scenario.section_string(tuple(parsed[p] for p in perm))
                vec[lookup[reordered]] = w
            dense[ci] = vec
        missing = [scenario.cover[i] for i, r in enumerate(dense) if r is None]
        if missing:
            raise ModelError(f"missing rows for contexts {missing!r}")
        return cls(scenario, dense, semiring, **kwargs)

    @property
    def rows(self) -> tuple[tuple[Weight, ...], ...]:
        return self._rows

    @property
    def is_exact(self) -> bool:
        return self.semiring is Semiring.PROBABILITY and all(isinstance(w, Fraction) for r in self._rows for w in r)

    def row(self, context: Sequence[str] | int) -> dict[str, Weight]:
        ci = context if isinstance(context, int) else self.scenario.context_index(context)
        ctx = self.scenario.cover[ci]
        return dict(zip(enumerate_sections(ctx, self.scenario.outcomes), self._rows[ci]))

    def weight_vector(self) -> list[Weight]:
        """Concatenated rows in cover order: the right-hand side V of MX = V."""
        return [w for r in self._rows for w in r]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmpiricalModel):
            return NotImplemented
        return self.scenario == other.scenario and self.semiring == other.semiring and self._rows == other._rows

    def __hash__(self) -> int:
        return hash((self.scenario, self.semiring, self._rows))

    def __repr__(self) -> str:
        return f"EmpiricalModel({self.semiring.value}, contexts={len(self._rows)})"


def _coerce_row(row: tuple, semiring: Semiring) -> tuple[Weight, ...]:
    if semiring is Semiring.BOOLEAN:
        return tuple(bool(w) for w in row)
    out: list[Weight] = []
    for w in row:
        if isinstance(w, Fraction):
            out.append(w)
        elif isinstance(w, (bool, np.bool_)):
            out.append(Fraction(int(w)))
        elif isinstance(w, (int, np.integer)):
            out.append(Fraction(int(w)))
        elif isinstance(w, str):
            out.append(Fraction(w))
        else:
            out.append(float(w))
    return tuple(out)


def _split_context_key(key: Sequence[str] | str) -> tuple[str, ...]:
    if isinstance(key, str):
        return tuple(part.strip() for part in key.split(","))
    return tuple(key)


def context_key(context: Sequence[str]) -> str:
    return ",".join(context)


def check_no_signalling(model: EmpiricalModel, eps: float = EPS_NORM) -> list[Violation]:
    """Compare marginals on every pairwise overlap of contexts; never raises."""
    out: list[Violation] = []
    cover = model.scenario.cover
    boolean = model.semiring is Semiring.BOOLEAN
    for i, j in itertools.combinations(range(len(cover)), 2):
        a, b = cover[i], cover[j]
        overlap = tuple(m for m in a if m in b)
        if not overlap:
            continue
        ma = marginalize(model.row(i), a, overlap)
        mb = marginalize(model.row(j), b, overlap)
        for sec in ma:
            if boolean:
                if bool(ma[sec]) != bool(mb[sec]):
                    out.append(Violation(a, b, overlap, sec, 1.0))
            else:
                diff = abs(float(ma[sec] - mb[sec]))
                if diff > eps:
                    out.append(Violation(a, b, overlap, sec, diff))
    return out


def support(model: EmpiricalModel, eps_supp: float = EPS_SUPP) -> EmpiricalModel:
    """Boolean model marking the sections whose probability exceeds ``eps_supp``."""
    if model.semiring is Semiring.BOOLEAN:
        return model
    rows = [tuple(w > eps_supp for w in r) for r in model.rows]
    return EmpiricalModel(model.scenario, rows, Semiring.BOOLEAN)


def snap_rational(x: float, max_den: int = 64, tol: float = 1e-7) -> Fraction | None:
    """Closest fraction with denominator at most ``max_den`` when within ``tol``, else None."""
    f = Fraction(x).limit_denominator(max_den)
    return f if abs(float(f) - x) <= tol else None


def snapped(model: EmpiricalModel, max_den: int = 64, tol: float = 1e-7) -> EmpiricalModel | None:
    """Exact copy of a float model when every weight snaps to a small-denominator rational."""
    if model.semiring is Semiring.BOOLEAN:
        return None
    if model.is_exact:
        return model
    rows = []
    for r in model.rows:
        snapped_row = [snap_rational(float(w), max_den, tol) for w in r]
        if any(s is None for s in snapped_row):
            return None
        rows.append(snapped_row)
    try:
        return EmpiricalModel(model.scenario, rows, model.semiring, eps_norm=0.0)
    except ModelError:
        return None


def deterministic_model(scenario: MeasurementScenario, assignment: Mapping[str, str]) -> EmpiricalModel:
    """The model putting weight one on the restriction of a global assignment."""
    rows = []
    for ctx in scenario.cover:
        sec = "".join(assignment[m] for m in ctx)
        rows.append([Fraction(int(s == sec)) for s in enumerate_sections(ctx, scenario.outcomes)])
    return EmpiricalModel(scenario, rows)


def mix(models: Iterable[EmpiricalModel], weights: Iterable[Weight]) -> EmpiricalModel:
    """Convex combination of probability models on the same scenario."""
    models, weights = list(models), list(weights)
    scenario = models[0].scenario
    rows = []
    for ci in range(len(scenario.cover)):
        acc = [w * 0 for w in models[0].rows[ci]]
        for m, lam in zip(models, weights):
            acc = [a + lam * w for a, w in zip(acc, m.rows[ci])]
        rows.append(acc)
    return EmpiricalModel(scenario, rows)
