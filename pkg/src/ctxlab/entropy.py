"""Contextual entropy of density matrices and state reconstruction from it.

A context is a family of orthogonal projections summing to the identity; the
contextual entropy of a state at that context is the Shannon entropy (natural
log) of its outcome distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
from scipy import linalg, optimize

from .model import ModelError
from .quantum import random_unitary

CONTEXT_TOL = 1e-9
ZERO_PROB = 1e-12
ZERO_EIG = 1e-10
BISECT_TOL = 1e-12
LN2 = math.log(2)


class NotInImageError(ValueError):
    """The supplied entropy values do not come from any density matrix."""


def _as_matrix(rho) -> np.ndarray:
    m = getattr(rho, "matrix", rho)
    return np.asarray(m, dtype=complex)


@dataclass(frozen=True, eq=False)
class ProjectiveContext:
    """Pairwise orthogonal Hermitian projections adding up to the identity."""

    projections: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        ps = tuple(np.asarray(p, dtype=complex) for p in self.projections)
        if not ps:
            raise ModelError("a context needs at least one projection")
        d = ps[0].shape[0]
        for i, p in enumerate(ps):
            if p.shape != (d, d):
                raise ModelError("projections must share one square shape")
            if np.max(np.abs(p - p.conj().T)) > CONTEXT_TOL:
                raise ModelError("projection is not Hermitian")
            for j in range(i, len(ps)):
                target = p if i == j else np.zeros_like(p)
                if np.max(np.abs(p @ ps[j] - target)) > CONTEXT_TOL:
                    raise ModelError("projections are not pairwise orthogonal idempotents")
        if np.max(np.abs(sum(ps) - np.eye(d))) > CONTEXT_TOL:
            raise ModelError("projections do not add up to the identity")
        for p in ps:
            p.setflags(write=False)
        object.__setattr__(self, "projections", ps)

    @classmethod
    def from_basis(cls, vectors: np.ndarray) -> "ProjectiveContext":
        """Rank-one projections onto the columns of a unitary matrix."""
        v = np.asarray(vectors, dtype=complex)
        return cls(tuple(np.outer(v[:, i], v[:, i].conj()) for i in range(v.shape[1])))

    @classmethod
    def computational(cls, d: int) -> "ProjectiveContext":
        return cls.from_basis(np.eye(d))

    @property
    def dim(self) -> int:
        return self.projections[0].shape[0]

    def __len__(self) -> int:
        return len(self.projections)

    @property
    def is_maximal(self) -> bool:
        return len(self.projections) == self.dim

    def coarsen(self, i: int, j: int) -> "ProjectiveContext":
        """Merge projections ``i`` and ``j``."""
        if i == j:
            raise ModelError("coarsening needs two distinct projections")
        keep = [p for k, p in enumerate(self.projections) if k not in (i, j)]
        return ProjectiveContext(tuple(keep) + (self.projections[i] + self.projections[j],))

    def conjugate(self, u: np.ndarray) -> "ProjectiveContext":
        """The context U V U^dagger."""
        u = np.asarray(u, dtype=complex)
        return ProjectiveContext(tuple(u @ p @ u.conj().T for p in self.projections))

    def tensor(self, other: "ProjectiveContext") -> "ProjectiveContext":
        return ProjectiveContext(tuple(np.kron(p, q) for p in self.projections for q in other.projections))

    def basis_vectors(self) -> np.ndarray:
        """Columns spanning each rank-one projection (maximal contexts only)."""
        if not self.is_maximal:
            raise ModelError("basis vectors exist only for maximal contexts")
        return np.column_stack([np.linalg.eigh(p)[1][:, -1] for p in self.projections])


def random_context(d: int, rng: np.random.Generator) -> ProjectiveContext:
    return ProjectiveContext.from_basis(random_unitary(d, rng))


def context_distribution(rho, context: ProjectiveContext) -> np.ndarray:
    """(Tr rho P_1, ..., Tr rho P_k), clamped at zero."""
    m = _as_matrix(rho)
    if m.shape[0] != context.dim:
        raise ModelError("state and context dimensions differ")
    p = np.array([np.real(np.trace(m @ proj)) for proj in context.projections])
    if p.min() < -CONTEXT_TOL:
        raise ModelError("negative probability: invalid state")
    return np.clip(p, 0.0, None)


def _clean(p: Sequence[float]) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.where(p > ZERO_PROB, p, 0.0)


def shannon(p: Sequence[float]) -> float:
    p = _clean(p)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def renyi(p: Sequence[float], q: float) -> float:
    """Renyi entropy of order ``q`` (natural log); q = 1 is Shannon, q = inf the min-entropy."""
    if q < 0:
        raise ModelError("Renyi order must be non-negative")
    p = _clean(p)
    nz = p[p > 0]
    if q == 1:
        return shannon(p)
    if math.isinf(q):
        return float(-math.log(nz.max()))
    if q == 0:
        return float(math.log(len(nz)))
    return float(math.log(np.sum(nz**q)) / (1 - q))


def contextual_shannon(rho, context: ProjectiveContext) -> float:
    return shannon(context_distribution(rho, context))


def contextual_renyi(rho, context: ProjectiveContext, q: float) -> float:
    return renyi(context_distribution(rho, context), q)


def spectrum(rho) -> np.ndarray:
    vals = np.linalg.eigvalsh(_as_matrix(rho))
    return np.where(np.abs(vals) < ZERO_EIG, 0.0, vals)


def von_neumann(rho) -> float:
    lam = spectrum(rho)
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log(lam)))


def minimizing_context(rho) -> ProjectiveContext:
    """An eigenbasis of ``rho``; its contextual entropy is the von Neumann entropy."""
    _, vecs = np.linalg.eigh(_as_matrix(rho))
    return ProjectiveContext.from_basis(vecs)


def majorizes(x: Sequence[float], y: Sequence[float], tol: float = 1e-9) -> bool:
    """True iff ``y`` is majorized by ``x``."""
    xs = np.sort(np.asarray(x, dtype=float))[::-1]
    ys = np.sort(np.asarray(y, dtype=float))[::-1]
    if len(xs) != len(ys) or abs(xs.sum() - ys.sum()) > tol:
        return False
    return bool(np.all(np.cumsum(ys) <= np.cumsum(xs) + tol))


def schur_horn_check(rho, u: np.ndarray, tol: float = 1e-9) -> bool:
    """Diagonal of U rho U^dagger is majorized by the spectrum of rho."""
    m, u = _as_matrix(rho), np.asarray(u, dtype=complex)
    if np.max(np.abs(u.conj().T @ u - np.eye(len(u)))) > 1e-9:
        raise ModelError("matrix is not unitary")
    diag = np.real(np.diag(u @ m @ u.conj().T))
    return majorizes(np.linalg.eigvalsh(m), diag, tol)


def binary_entropy(p: float) -> float:
    return shannon([p, 1 - p])


def solve_binary_entropy(k: float) -> tuple[float, float]:
    """The pair (p, 1 - p) with p <= 1/2 whose Shannon entropy is ``k``."""
    if k > LN2 + BISECT_TOL:
        raise NotInImageError(f"binary entropy {k!r} exceeds ln 2")
    if k < -BISECT_TOL:
        raise NotInImageError(f"negative entropy {k!r}")
    k = min(max(k, 0.0), LN2)
    if k == 0:
        return 0.0, 1.0
    if k == LN2:
        return 0.5, 0.5
    p = optimize.bisect(lambda x: binary_entropy(x) - k, 0.0, 0.5, xtol=BISECT_TOL)
    return p, 1 - p


def partial_trace_second(rho, n1: int, n2: int) -> np.ndarray:
    """Reduced state on the first factor of C^n1 (x) C^n2."""
    m = _as_matrix(rho)
    if m.shape != (n1 * n2, n1 * n2):
        raise ModelError("dimensions do not factor as n1 * n2")
    return np.einsum("ajbj->ab", m.reshape(n1, n2, n1, n2))


def partial_trace_first(rho, n1: int, n2: int) -> np.ndarray:
    m = _as_matrix(rho)
    if m.shape != (n1 * n2, n1 * n2):
        raise ModelError("dimensions do not factor as n1 * n2")
    return np.einsum("jajb->ab", m.reshape(n1, n2, n1, n2))


def partial_trace_compat_check(rho, dims: tuple[int, int], context: ProjectiveContext, tol: float = 1e-9) -> bool:
    """Tr(rho (P (x) I)) equals Tr(rho_1 P) for every projection of a first-factor context."""
    n1, n2 = dims
    if context.dim != n1:
        raise ModelError("context lives on the wrong factor")
    m = _as_matrix(rho)
    reduced = partial_trace_second(m, n1, n2)
    lifted = ProjectiveContext(tuple(np.kron(p, np.eye(n2)) for p in context.projections))
    return bool(np.allclose(context_distribution(m, lifted), context_distribution(reduced, context), atol=tol, rtol=0))


# ---------------------------------------------------------------------------
# reconstruction


class EntropyOracle(Protocol):
    dim: int

    def __call__(self, context: ProjectiveContext) -> float: ...


@dataclass
class StateOracle:
    """Entropy oracle backed by a hidden density matrix; counts its queries."""

    rho: np.ndarray
    queries: int = 0

    def __post_init__(self) -> None:
        self.rho = _as_matrix(self.rho)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def __call__(self, context: ProjectiveContext) -> float:
        self.queries += 1
        return contextual_shannon(self.rho, context)

    def minimizing_context(self) -> ProjectiveContext:
        return minimizing_context(self.rho)


@dataclass(frozen=True, eq=False)
class Unique:
    rho: np.ndarray
    case: str = ""


@dataclass(frozen=True, eq=False)
class Pair:
    first: np.ndarray
    second: np.ndarray

    def contains(self, rho, tol: float = 1e-6) -> bool:
        m = _as_matrix(rho)
        return min(np.linalg.norm(self.first - m), np.linalg.norm(self.second - m)) < tol


@dataclass(frozen=True)
class NotInImage:
    reason: str


ReconstructionOutcome = Unique | Pair | NotInImage

CASE_TOL = 1e-7
REPLAY_CONTEXTS = 50
REPLAY_TOL = 1e-6
REPLAY_SEED = 20240601
ROTATION_SEED = 7


@dataclass
class _Casework:
    values: np.ndarray | None
    case: str
    ambiguous: tuple[int, ...] = field(default=())


def _complement_rotation(vectors: np.ndarray, fixed: int, rng: np.random.Generator) -> np.ndarray:
    """Unitary fixing column ``fixed`` of ``vectors`` and rotating its orthocomplement at random."""
    n = vectors.shape[1]
    others = [i for i in range(n) if i != fixed]
    q = vectors[:, others]
    r = random_unitary(n - 1, rng)
    r = r / np.linalg.det(r) ** (1 / (n - 1))  # special unitary
    v = vectors[:, [fixed]]
    return v @ v.conj().T + q @ r @ q.conj().T


def _diagonal_from_binary(oracle: EntropyOracle, basis: np.ndarray) -> _Casework:
    """Diagonal of the hidden state in ``basis`` from the two-outcome contexts {P_i, I - P_i}."""
    n = basis.shape[1]
    eye = np.eye(n)
    p = np.empty(n)
    for i in range(n):
        proj = np.outer(basis[:, i], basis[:, i].conj())
        try:
            p[i] = solve_binary_entropy(oracle(ProjectiveContext((proj, eye - proj))))[0]
        except NotInImageError as exc:
            return _Casework(None, f"binary entropy out of range: {exc}")
    s = float(p.sum())
    if s > 1 + CASE_TOL:
        return _Casework(None, "a: sum of small roots exceeds one")
    if abs(s - 1) <= CASE_TOL:
        return _Casework(p, "b")
    hits = [j for j in range(n) if abs(p[j] - s / 2) <= CASE_TOL]
    if not hits:
        return _Casework(None, "c1: no root equals half the sum")
    if len(hits) == 1:
        lam = p.copy()
        lam[hits[0]] = 1 - p[hits[0]]
        return _Casework(lam, "c2")
    if len(hits) == 2:
        return _Casework(p, "c3", tuple(hits))
    return _Casework(None, "c: more than two roots equal half the sum")


def reconstruct(oracle: EntropyOracle, n: int | None = None, *, context: ProjectiveContext | None = None,
                pure_tol: float = 1e-10) -> Unique | Pair | NotInImage:
    """Recover the state behind an entropy oracle.

    ``context`` is a minimizing maximal context; when omitted the oracle must
    provide ``minimizing_context()``.
    """
    n = n or oracle.dim
    if n < 2:
        raise ModelError("reconstruction needs dimension >= 2")
    if context is None:
        finder = getattr(oracle, "minimizing_context", None)
        if finder is None:
            raise ModelError("oracle cannot supply a minimizing context; pass one explicitly")
        context = finder()
    if not context.is_maximal or context.dim != n:
        raise ModelError("the minimizing context must be maximal and of dimension n")
    basis = context.basis_vectors()
    kmin = oracle(context)

    if n == 2:
        try:
            p, _ = solve_binary_entropy(kmin)
        except NotInImageError as exc:
            return NotInImage(str(exc))
        first = _assemble(basis, [1 - p, p])
        outcome: Unique | Pair | NotInImage = Pair(first, np.eye(2) - first)
        return outcome if _replays(oracle, first) else NotInImage("replay check failed")

    rng = np.random.default_rng(ROTATION_SEED)
    if kmin <= pure_tol:
        zero = []
        for i in range(n):
            u = _complement_rotation(basis, i, rng)
            if oracle(ProjectiveContext.from_basis(u @ basis)) <= math.sqrt(pure_tol):
                zero.append(i)
        if len(zero) != 1:
            return NotInImage("pure-state search did not single out one axis")
        lam = np.zeros(n)
        lam[zero[0]] = 1.0
        rho, case = _assemble(basis, lam), "pure"
    else:
        work = _diagonal_from_binary(oracle, basis)
        if work.values is None:
            return NotInImage(work.case)
        if work.case == "c3":
            j1, j2 = work.ambiguous
            u = _complement_rotation(basis, j1, rng)
            rotated = _diagonal_from_binary(oracle, u @ basis)
            assert rotated.case != "c3", "ambiguous case reached twice"
            if rotated.values is None:
                return NotInImage("rotated contexts: " + rotated.case)
            target = rotated.values[j1]
            lam = work.values.copy()
            first, second = lam.copy(), lam.copy()
            first[j1], second[j2] = 1 - lam[j1], 1 - lam[j2]
            lam = first if abs(first[j1] - target) <= abs(second[j1] - target) else second
        else:
            lam = work.values
        rho, case = _assemble(basis, lam), work.case
    if not _replays(oracle, rho):
        return NotInImage("replay check failed")
    return Unique(rho, case)


def _assemble(basis: np.ndarray, weights: Sequence[float]) -> np.ndarray:
    return (basis * np.asarray(weights, dtype=float)) @ basis.conj().T


def _replays(oracle: EntropyOracle, rho: np.ndarray) -> bool:
    rng = np.random.default_rng(REPLAY_SEED)
    for _ in range(REPLAY_CONTEXTS):
        ctx = random_context(rho.shape[0], rng)
        if abs(oracle(ctx) - contextual_shannon(rho, ctx)) > REPLAY_TOL:
            return False
    return True


# ---------------------------------------------------------------------------
# failure of subadditivity on entangled contexts


@dataclass(frozen=True, eq=False)
class Counterexample:
    n1: int
    n2: int
    rho: np.ndarray
    rho_product: np.ndarray
    unitary: np.ndarray
    columns: tuple[int, int, int, int]  # 1-based positions of the prescribed columns
    A: float
    B: float
    A_formula: float
    B_formula: float

    @property
    def context(self) -> ProjectiveContext:
        return context_of_rows(self.unitary)


def context_of_rows(u: np.ndarray) -> ProjectiveContext:
    """Context whose distribution for rho is the diagonal of U rho U^dagger."""
    return ProjectiveContext.from_basis(np.asarray(u, dtype=complex).conj().T)


def _complete_unitary(cols: dict[int, np.ndarray], n: int) -> np.ndarray:
    fixed = np.column_stack([cols[k] for k in sorted(cols)])
    rest = linalg.null_space(fixed.conj().T)
    u = np.empty((n, n), dtype=complex)
    free = [k for k in range(n) if k not in cols]
    for k, v in cols.items():
        u[:, k] = v
    for k, c in zip(free, rest.T):
        u[:, k] = c
    return u


def subadditivity_counterexample(n1: int, n2: int) -> Counterexample:
    """Entangled context at which rho = diag(1/2, 0, ..., 0, 1/2) has more entropy than rho_1 (x) rho_2."""
    n = n1 * n2
    if n1 < 2 or n2 < 2:
        raise ModelError("both factors need dimension at least 2")
    if n % 2 or n < 6:
        raise ModelError("the construction needs n = n1 * n2 even and at least 6")
    rho = np.zeros((n, n))
    rho[0, 0] = rho[-1, -1] = 0.5
    prod = np.kron(partial_trace_second(rho, n1, n2), partial_trace_first(rho, n1, n2))
    first = np.ones(n) / math.sqrt(n)
    last = np.concatenate([np.ones(n // 2), -np.ones(n // 2)]) / math.sqrt(n)
    mid_a = np.zeros(n)
    mid_a[[0, 1, n - 2, n - 1]] = [-0.5, 0.5, -0.5, 0.5]
    mid_b = np.zeros(n)
    mid_b[[0, 1, n - 2, n - 1]] = [0.5, -0.5, -0.5, 0.5]
    # nonzero diagonal positions of rho_1 (x) rho_2, 0-based
    positions = (0, n2 - 1, n - n2, n - 1)
    u = _complete_unitary({positions[0]: first, positions[1]: mid_a, positions[2]: mid_b, positions[3]: last}, n)
    ctx = context_of_rows(u)
    a = contextual_shannon(rho, ctx)
    b = contextual_shannon(prod, ctx)
    big, small = 1 / (2 * n) + 1 / 8, 1 / (2 * n)
    b_formula = shannon([big, big] + [small] * (n - 4) + [big, big])
    return Counterexample(n1, n2, rho, prod, u, tuple(p + 1 for p in positions), a, b, math.log(n), b_formula)


@dataclass(frozen=True, eq=False)
class RandomViolation:
    seed: int
    trial: int
    rho: np.ndarray
    unitary: np.ndarray
    A: float
    B: float


def random_density(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = g @ g.conj().T
    return m / np.trace(m).real


def find_random_violation(seed: int, trials: int = 10000, margin: float = 1e-3,
                          n1: int = 2, n2: int = 2) -> RandomViolation | None:
    """Search random states and unitaries for E(rho) > E(rho_1 (x) rho_2) + margin at an entangled context."""
    rng = np.random.default_rng(seed)
    d = n1 * n2
    for t in range(trials):
        rho = random_density(d, rng)
        u = random_unitary(d, rng)
        prod = np.kron(partial_trace_second(rho, n1, n2), partial_trace_first(rho, n1, n2))
        ctx = context_of_rows(u)
        a, b = contextual_shannon(rho, ctx), contextual_shannon(prod, ctx)
        if a > b + margin:
            return RandomViolation(seed, t, rho, u, a, b)
    return None
