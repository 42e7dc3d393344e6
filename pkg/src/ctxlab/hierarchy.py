"""Decision procedures for the contextuality hierarchy.

* probabilistic extendability: feasibility of ``M X = V`` with ``X >= 0`` and ``sum X = 1``
* possibilistic extendability: which supported sections extend to a global assignment
  consistent with every context's support
* strong contextuality: whether any global assignment is consistent with the support
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import optimize, sparse

from .model import (
    DEFAULT_CAP,
    EPS_SUPP,
    CapacityError,
    ContextualityClass,
    EmpiricalModel,
    MeasurementScenario,
    ModelError,
    Semiring,
    enumerate_sections,
    global_index_array,
    snapped,
    support,
)
from .simplex import feasible_point

LP_TOL = 1e-7
BOOLEAN_EXHAUSTIVE_LIMIT = 2**24
EXACT_LP_COLUMN_LIMIT = 1024
_CHUNK = 2**18


@dataclass(frozen=True)
class IncidenceMatrix:
    """0/1 matrix with rows = context sections and columns = global assignments."""

    matrix: sparse.csr_matrix
    rows: tuple[tuple[tuple[str, ...], str], ...]
    columns: np.ndarray  # (q, |X|) outcome indices

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True)
class GlobalSectionCertificate:
    """Weights on global assignments (probabilistic) or a set of them (boolean)."""

    scenario: MeasurementScenario
    assignments: tuple[str, ...]
    weights: tuple[Fraction | float, ...] | None = None

    @property
    def exact(self) -> bool:
        return self.weights is not None and all(isinstance(w, Fraction) for w in self.weights)

    def induced_model(self) -> EmpiricalModel:
        """The model obtained by restricting the global distribution to each context."""
        sc = self.scenario
        pos = {m: i for i, m in enumerate(sc.measurements)}
        rows = []
        weights = self.weights if self.weights is not None else (True,) * len(self.assignments)
        for ctx in sc.cover:
            secs = enumerate_sections(ctx, sc.outcomes)
            lookup = {s: i for i, s in enumerate(secs)}
            if self.weights is None:
                row: list = [False] * len(secs)
            else:
                row = [Fraction(0) if self.exact else 0.0] * len(secs)
            for g, w in zip(self.assignments, weights):
                key = lookup["".join(g[pos[m]] for m in ctx)]
                row[key] = (row[key] or w) if self.weights is None else row[key] + w
            rows.append(row)
        semiring = Semiring.BOOLEAN if self.weights is None else Semiring.PROBABILITY
        return EmpiricalModel(sc, rows, semiring, validate=False)

    def replays(self, model: EmpiricalModel, tol: float = LP_TOL) -> bool:
        """Check ``M X = V``: exactly for rational certificates, within ``tol`` otherwise."""
        induced = self.induced_model()
        if self.weights is None:
            return induced.rows == support(model).rows
        if self.exact and model.is_exact:
            return induced.rows == model.rows
        return all(abs(float(a) - float(b)) <= tol
                   for ra, rb in zip(induced.rows, model.rows) for a, b in zip(ra, rb))

    def to_json(self) -> dict:
        if self.weights is None:
            return {"kind": "boolean", "assignments": list(self.assignments),
                    "measurements": list(self.scenario.measurements)}
        weights = [str(w) if isinstance(w, Fraction) else float(w) for w in self.weights]
        return {"kind": "probability", "measurements": list(self.scenario.measurements),
                "support": dict(zip(self.assignments, weights))}


class Infeasible:
    """No global probability distribution reproduces the model."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "Infeasible"

    def __bool__(self) -> bool:
        return False


INFEASIBLE = Infeasible()


def _section_indices(scenario: MeasurementScenario, globals_: np.ndarray, ctx: Sequence[str]) -> np.ndarray:
    k = scenario.n_outcomes
    cols = [scenario.measurements.index(m) for m in ctx]
    idx = np.zeros(globals_.shape[0], dtype=np.int64)
    for c in cols:
        idx = idx * k + globals_[:, c]
    return idx


def build_incidence_matrix(scenario: MeasurementScenario, cap: int = DEFAULT_CAP) -> IncidenceMatrix:
    """Rows: contexts in cover order, sections lexicographic.  Columns: global assignments, lexicographic."""
    globals_ = global_index_array(scenario, cap)
    q = globals_.shape[0]
    k = scenario.n_outcomes
    row_ids, labels = [], []
    offset = 0
    for ctx in scenario.cover:
        row_ids.append(offset + _section_indices(scenario, globals_, ctx))
        labels.extend((ctx, s) for s in enumerate_sections(ctx, scenario.outcomes))
        offset += k ** len(ctx)
    r = np.concatenate(row_ids)
    c = np.tile(np.arange(q), len(scenario.cover))
    mat = sparse.csr_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(offset, q))
    return IncidenceMatrix(mat, tuple(labels), globals_)


def _global_strings(scenario: MeasurementScenario, globals_: np.ndarray) -> list[str]:
    out = scenario.outcomes
    return ["".join(out[v] for v in row) for row in globals_]


def decide_probabilistic_extendability(model: EmpiricalModel, *, tol: float = LP_TOL, cap: int = DEFAULT_CAP,
                                       exact: bool | None = None) -> GlobalSectionCertificate | Infeasible:
    """Solve ``M X = V, sum X = 1, X >= 0``.

    Rational models (or float models that snap to denominators <= 64) go
    through the exact simplex when the column count is small enough; the rest
    through HiGHS with feasibility tolerance ``tol``.
    """
    if model.semiring is not Semiring.PROBABILITY:
        raise ModelError("probabilistic extendability needs a probability model")
    inc = build_incidence_matrix(model.scenario, cap)
    p, q = inc.shape
    rational = snapped(model)
    use_exact = rational is not None and q <= EXACT_LP_COLUMN_LIMIT if exact is None else exact
    if use_exact:
        if rational is None:
            raise ModelError("exact LP requested for a model with irrational weights")
        return _exact_lp(rational, inc)
    return _float_lp(model, inc, tol)


def _exact_lp(model: EmpiricalModel, inc: IncidenceMatrix) -> GlobalSectionCertificate | Infeasible:
    dense = inc.dense()
    A = [[int(v) for v in row] for row in dense]
    A.append([1] * dense.shape[1])
    b = list(model.weight_vector()) + [Fraction(1)]
    x = feasible_point(A, b)
    if x is None:
        return INFEASIBLE
    names = _global_strings(model.scenario, inc.columns)
    keep = [j for j, v in enumerate(x) if v != 0]
    return GlobalSectionCertificate(model.scenario, tuple(names[j] for j in keep), tuple(x[j] for j in keep))


def _float_lp(model: EmpiricalModel, inc: IncidenceMatrix, tol: float) -> GlobalSectionCertificate | Infeasible:
    p, q = inc.shape
    A = sparse.vstack([inc.matrix.astype(float), sparse.csr_matrix(np.ones((1, q)))]).tocsr()
    b = np.array([float(w) for w in model.weight_vector()] + [1.0])
    res = optimize.linprog(np.zeros(q), A_eq=A, b_eq=b, bounds=(0, None), method="highs",
                           options={"primal_feasibility_tolerance": tol})
    if res.status == 2:
        return INFEASIBLE
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    x = np.clip(res.x, 0.0, None)
    if np.max(np.abs(A @ x - b)) > 10 * tol:
        return INFEASIBLE
    names = _global_strings(model.scenario, inc.columns)
    keep = np.flatnonzero(x > 0)
    return GlobalSectionCertificate(model.scenario, tuple(names[j] for j in keep), tuple(float(x[j]) for j in keep))


# ---------------------------------------------------------------------------
# boolean search


@dataclass(frozen=True)
class ExtendabilityReport:
    """Extendability of every supported section, keyed by (context, section string)."""

    scenario: MeasurementScenario
    extendable: dict[tuple[tuple[str, ...], str], bool]

    @property
    def non_extendable(self) -> list[tuple[tuple[str, ...], str]]:
        return [key for key, ok in self.extendable.items() if not ok]

    @property
    def logically_contextual(self) -> bool:
        return any(not ok for ok in self.extendable.values())


@dataclass(frozen=True)
class Satisfiable:
    assignment: dict[str, str]

    def __bool__(self) -> bool:
        return True


class Unsatisfiable:
    __slots__ = ()

    def __repr__(self) -> str:
        return "Unsatisfiable"

    def __bool__(self) -> bool:
        return False


UNSATISFIABLE = Unsatisfiable()


def _supports(model: EmpiricalModel) -> list[np.ndarray]:
    if model.semiring is not Semiring.BOOLEAN:
        raise ModelError("a boolean model is required; take support() first")
    return [np.array(r, dtype=bool) for r in model.rows]


def _ordered_scenario(scenario: MeasurementScenario, priority: Sequence[str] | None) -> list[int]:
    if priority is None:
        return list(range(len(scenario.measurements)))
    if sorted(priority) != sorted(scenario.measurements):
        raise ModelError("priority must be a permutation of the measurements")
    return [scenario.measurements.index(m) for m in priority]


def _consistent_chunks(model: EmpiricalModel, order: list[int]):
    """Yield (globals-in-scenario-order, consistency mask) chunks in lexicographic ``order``."""
    sc = model.scenario
    k, m = sc.n_outcomes, len(sc.measurements)
    q = sc.global_count()
    sups = _supports(model)
    ctx_cols = [[sc.measurements.index(x) for x in ctx] for ctx in sc.cover]
    powers = k ** np.arange(m - 1, -1, -1, dtype=np.int64)
    for start in range(0, q, _CHUNK):
        idx = np.arange(start, min(q, start + _CHUNK), dtype=np.int64)
        digits = (idx[:, None] // powers[None, :]) % k
        g = np.empty_like(digits)
        g[:, order] = digits
        ok = np.ones(len(idx), dtype=bool)
        for cols, sup in zip(ctx_cols, sups):
            sec = np.zeros(len(idx), dtype=np.int64)
            for c in cols:
                sec = sec * k + g[:, c]
            ok &= sup[sec]
        yield g, ok


def _exhaustive_possible(model: EmpiricalModel) -> bool:
    return model.scenario.global_count() <= BOOLEAN_EXHAUSTIVE_LIMIT


def decide_strong_contextuality(model: EmpiricalModel, *, priority: Sequence[str] | None = None) -> Satisfiable | Unsatisfiable:
    """Find the lexicographically first global assignment consistent with every support.

    ``priority`` reorders the measurements for the lexicographic tie-break;
    the default is the scenario order.
    """
    sc = model.scenario
    order = _ordered_scenario(sc, priority)
    if _exhaustive_possible(model):
        for g, ok in _consistent_chunks(model, order):
            hit = np.flatnonzero(ok)
            if hit.size:
                row = g[hit[0]]
                return Satisfiable({m: sc.outcomes[row[i]] for i, m in enumerate(sc.measurements)})
        return UNSATISFIABLE
    found = _backtrack(model, order, {})
    if found is None:
        return UNSATISFIABLE
    return Satisfiable({sc.measurements[i]: sc.outcomes[v] for i, v in found.items()})


def decide_possibilistic_extendability(model: EmpiricalModel) -> ExtendabilityReport:
    """For every supported section, does some consistent global assignment restrict to it?"""
    sc = model.scenario
    sups = _supports(model)
    k = sc.n_outcomes
    reached = [np.zeros(len(s), dtype=bool) for s in sups]
    order = list(range(len(sc.measurements)))
    if _exhaustive_possible(model):
        for g, ok in _consistent_chunks(model, order):
            good = g[ok]
            if not len(good):
                continue
            for ci, ctx in enumerate(sc.cover):
                sec = np.zeros(len(good), dtype=np.int64)
                for mlabel in ctx:
                    sec = sec * k + good[:, sc.measurements.index(mlabel)]
                reached[ci][np.unique(sec)] = True
    else:
        for ci, ctx in enumerate(sc.cover):
            cols = [sc.measurements.index(x) for x in ctx]
            for si in np.flatnonzero(sups[ci]):
                if reached[ci][si]:
                    continue
                digits = _digits(int(si), k, len(ctx))
                found = _backtrack(model, order, dict(zip(cols, digits)))
                if found is not None:
                    _mark(sc, found, reached)
    result: dict[tuple[tuple[str, ...], str], bool] = {}
    for ci, ctx in enumerate(sc.cover):
        names = enumerate_sections(ctx, sc.outcomes)
        for si in np.flatnonzero(sups[ci]):
            result[(ctx, names[si])] = bool(reached[ci][si])
    return ExtendabilityReport(sc, result)


def _digits(value: int, base: int, width: int) -> list[int]:
    out = []
    for _ in range(width):
        out.append(value % base)
        value //= base
    return out[::-1]


def _mark(sc: MeasurementScenario, assignment: dict[int, int], reached: list[np.ndarray]) -> None:
    k = sc.n_outcomes
    for ci, ctx in enumerate(sc.cover):
        sec = 0
        for x in ctx:
            sec = sec * k + assignment[sc.measurements.index(x)]
        reached[ci][sec] = True


def _backtrack(model: EmpiricalModel, order: list[int], fixed: dict[int, int]) -> dict[int, int] | None:
    """Depth-first search with forward checking over measurement domains."""
    sc = model.scenario
    k = sc.n_outcomes
    sups = _supports(model)
    ctx_cols = [[sc.measurements.index(x) for x in ctx] for ctx in sc.cover]
    allowed = [[tuple(_digits(int(s), k, len(cols))) for s in np.flatnonzero(sup)]
               for cols, sup in zip(ctx_cols, sups)]
    touching = [[ci for ci, cols in enumerate(ctx_cols) if v in cols] for v in range(len(sc.measurements))]
    domains = [set(range(k)) for _ in sc.measurements]
    for v, val in fixed.items():
        domains[v] = {val}

    def prune(doms: list[set[int]], changed: list[int]) -> bool:
        queue = list({ci for v in changed for ci in touching[v]})
        while queue:
            ci = queue.pop()
            cols = ctx_cols[ci]
            live = [sec for sec in allowed[ci] if all(sec[t] in doms[c] for t, c in enumerate(cols))]
            if not live:
                return False
            for t, c in enumerate(cols):
                seen = {sec[t] for sec in live}
                if seen != doms[c]:
                    doms[c] = doms[c] & seen
                    if not doms[c]:
                        return False
                    queue.extend(x for x in touching[c] if x != ci and x not in queue)
        return True

    if not prune(domains, list(range(len(sc.measurements)))):
        return None

    def search(doms: list[set[int]], depth: int) -> dict[int, int] | None:
        if depth == len(order):
            return {v: next(iter(d)) for v, d in enumerate(doms)}
        v = order[depth]
        for val in sorted(doms[v]):
            trial = [set(d) for d in doms]
            trial[v] = {val}
            if prune(trial, [v]):
                hit = search(trial, depth + 1)
                if hit is not None:
                    return hit
        return None

    return search(domains, 0)


def classify(model: EmpiricalModel, *, eps_supp: float = EPS_SUPP, tol: float = LP_TOL,
             cap: int = DEFAULT_CAP) -> ContextualityClass:
    """Strong if the support has no global section, else logical if some supported section
    is non-extendable, else weak if the LP is infeasible, else non-contextual."""
    if model.semiring is not Semiring.PROBABILITY:
        raise ModelError("classify needs a probability model")
    supp = support(model, eps_supp)
    if not decide_strong_contextuality(supp):
        return ContextualityClass.STRONGLY_CONTEXTUAL
    if decide_possibilistic_extendability(supp).logically_contextual:
        return ContextualityClass.LOGICALLY_CONTEXTUAL
    if not decide_probabilistic_extendability(model, tol=tol, cap=cap):
        return ContextualityClass.WEAKLY_CONTEXTUAL
    return ContextualityClass.NON_CONTEXTUAL


def classify_support(model: EmpiricalModel) -> ContextualityClass:
    """Hierarchy level visible from a boolean model alone (never reports weak)."""
    if not decide_strong_contextuality(model):
        return ContextualityClass.STRONGLY_CONTEXTUAL
    if decide_possibilistic_extendability(model).logically_contextual:
        return ContextualityClass.LOGICALLY_CONTEXTUAL
    return ContextualityClass.NON_CONTEXTUAL


__all__ = [
    "BOOLEAN_EXHAUSTIVE_LIMIT",
    "CapacityError",
    "ExtendabilityReport",
    "GlobalSectionCertificate",
    "INFEASIBLE",
    "IncidenceMatrix",
    "Infeasible",
    "LP_TOL",
    "Satisfiable",
    "UNSATISFIABLE",
    "Unsatisfiable",
    "build_incidence_matrix",
    "classify",
    "classify_support",
    "decide_possibilistic_extendability",
    "decide_probabilistic_extendability",
    "decide_strong_contextuality",
]
