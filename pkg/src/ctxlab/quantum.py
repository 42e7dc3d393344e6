"""Qubit states, dichotomic local observables and the empirical models they induce.

Conventions: qubit 0 is the leftmost ket symbol and the most significant bit of
an amplitude index; the ``+`` outcome is the +1 eigenvector.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import EmpiricalModel, MeasurementScenario, ModelError

NORM_TOL = 1e-9
UNITARY_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Normalised pure state of ``n`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        n = int(round(math.log2(len(amp)))) if len(amp) else -1
        if n < 1 or 2**n != len(amp):
            raise ModelError("amplitude vector length must be a power of two, at least 2")
        if abs(np.linalg.norm(amp) - 1) > NORM_TOL:
            raise ModelError(f"state has norm {np.linalg.norm(amp)!r}")
        object.__setattr__(self, "amplitudes", _frozen(amp))

    @classmethod
    def normalized(cls, amplitudes: Iterable[complex]) -> "QuantumState":
        amp = np.asarray(list(amplitudes) if not isinstance(amplitudes, np.ndarray) else amplitudes, dtype=complex)
        norm = np.linalg.norm(amp)
        if norm == 0:
            raise ModelError("zero vector cannot be normalised")
        return cls(amp / norm)

    @property
    def n(self) -> int:
        return int(round(math.log2(len(self.amplitudes))))

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n)

    def density(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(np.outer(a, a.conj()))

    def fidelity(self, other: "QuantumState") -> float:
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)

    def equal_up_to_phase(self, other: "QuantumState", tol: float = 1e-8) -> bool:
        if self.n != other.n:
            return False
        overlap = np.vdot(other.amplitudes, self.amplitudes)
        if abs(overlap) < 1e-15:
            return False
        phase = overlap / abs(overlap)
        return bool(np.max(np.abs(self.amplitudes - phase * other.amplitudes)) < tol)

    def __repr__(self) -> str:
        return f"QuantumState(n={self.n})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ModelError("density matrix must be square")
        if np.max(np.abs(m - m.conj().T)) > NORM_TOL:
            raise ModelError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1) > NORM_TOL:
            raise ModelError("density matrix trace differs from 1")
        m = (m + m.conj().T) / 2
        if np.linalg.eigvalsh(m).min() < -NORM_TOL:
            raise ModelError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True, eq=False)
class LocalObservable:
    """Dichotomic single-qubit observable given by its orthonormal eigenvectors."""

    plus: np.ndarray
    minus: np.ndarray
    label: str = "O"

    def __post_init__(self) -> None:
        p = np.asarray(self.plus, dtype=complex).reshape(2)
        m = np.asarray(self.minus, dtype=complex).reshape(2)
        if abs(np.linalg.norm(p) - 1) > NORM_TOL or abs(np.linalg.norm(m) - 1) > NORM_TOL:
            raise ModelError("observable eigenvectors must be normalised")
        if abs(np.vdot(p, m)) > NORM_TOL:
            raise ModelError("observable eigenvectors must be orthogonal")
        object.__setattr__(self, "plus", _frozen(p))
        object.__setattr__(self, "minus", _frozen(m))

    @classmethod
    def from_plus(cls, plus: Sequence[complex], label: str = "O") -> "LocalObservable":
        """Observable with the given +1 eigenvector; the -1 eigenvector is its complement."""
        p = np.asarray(plus, dtype=complex)
        p = p / np.linalg.norm(p)
        return cls(p, np.array([-np.conj(p[1]), np.conj(p[0])]), label)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, label: str = "O") -> "LocalObservable":
        m = np.asarray(matrix, dtype=complex)
        if np.max(np.abs(m - m.conj().T)) > UNITARY_TOL or np.max(np.abs(m @ m - np.eye(2))) > UNITARY_TOL:
            raise ModelError("observable matrix must be self-adjoint and involutive")
        vals, vecs = np.linalg.eigh(m)
        if not (abs(vals[0] + 1) < 1e-7 and abs(vals[1] - 1) < 1e-7):
            raise ModelError("observable must have eigenvalues -1 and +1")
        return cls(_fix_phase(vecs[:, 1]), _fix_phase(vecs[:, 0]), label)

    def matrix(self) -> np.ndarray:
        return np.outer(self.plus, self.plus.conj()) - np.outer(self.minus, self.minus.conj())

    def bras(self) -> np.ndarray:
        """Rows are the conjugated eigenvectors in outcome order (+, -)."""
        return np.vstack([self.plus.conj(), self.minus.conj()])

    def rotated(self, unitary: np.ndarray) -> "LocalObservable":
        u = np.asarray(unitary, dtype=complex)
        return LocalObservable(u @ self.plus, u @ self.minus, self.label)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Make the first non-negligible component real and positive."""
    v = np.asarray(v, dtype=complex)
    for c in v:
        if abs(c) > 1e-12:
            return v * (abs(c) / c)
    return v


def observable_from_angles(theta: float, phi: float, label: str | None = None) -> LocalObservable:
    """Observable with matrix [[cos t, e^{-i p} sin t], [e^{i p} sin t, -cos t]]."""
    m = np.array([[math.cos(theta), np.exp(-1j * phi) * math.sin(theta)],
                  [np.exp(1j * phi) * math.sin(theta), -math.cos(theta)]])
    return LocalObservable.from_matrix(m, label or f"U({theta:.6g},{phi:.6g})")


_S = 1 / math.sqrt(2)
PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_PAULI_EIGEN = {
    "X": ([_S, _S], [_S, -_S]),
    "Y": ([_S, 1j * _S], [_S, -1j * _S]),
    "Z": ([1, 0], [0, 1]),
}


def pauli(name: str) -> LocalObservable:
    name = name.upper()
    if name not in _PAULI_EIGEN:
        raise ModelError(f"unknown Pauli observable {name!r}")
    plus, minus = _PAULI_EIGEN[name]
    return LocalObservable(np.array(plus), np.array(minus), name)


# ---------------------------------------------------------------------------
# states


def basis_state(bits: str | Sequence[int]) -> QuantumState:
    bits = [int(b) for b in bits]
    amp = np.zeros(2 ** len(bits), dtype=complex)
    amp[int("".join(map(str, bits)), 2)] = 1
    return QuantumState(amp)


def product_state(vectors: Sequence[Sequence[complex]]) -> QuantumState:
    amp = np.ones(1, dtype=complex)
    for v in vectors:
        v = np.asarray(v, dtype=complex)
        amp = np.kron(amp, v / np.linalg.norm(v))
    return QuantumState(amp)


def ghz_state(n: int, sign: int = 1) -> QuantumState:
    if n < 2:
        raise ModelError("GHZ state needs n >= 2")
    amp = np.zeros(2**n, dtype=complex)
    amp[0] = _S
    amp[-1] = sign * _S
    return QuantumState(amp)


def dicke_state(n: int, k: int) -> QuantumState:
    """Uniform superposition of the strings with ``k`` zeros and ``n - k`` ones."""
    if not 0 < k < n:
        raise ModelError("Dicke state needs 0 < k < n")
    amp = np.zeros(2**n, dtype=complex)
    c = math.comb(n, k) ** -0.5
    for ones in itertools.combinations(range(n), n - k):
        amp[sum(1 << (n - 1 - i) for i in ones)] = c
    return QuantumState(amp)


def w_state() -> QuantumState:
    return dicke_state(3, 2)


def bell_state(which: str = "phi+") -> QuantumState:
    table = {
        "phi+": [_S, 0, 0, _S],
        "phi-": [_S, 0, 0, -_S],
        "psi+": [0, _S, _S, 0],
        "psi-": [0, _S, -_S, 0],
    }
    key = which.lower().replace("φ", "phi").replace("ψ", "psi")
    if key not in table:
        raise ModelError(f"unknown Bell state {which!r}")
    return QuantumState(np.array(table[key], dtype=complex))


@dataclass(frozen=True)
class BooleanFunction:
    """Multilinear polynomial over GF(2); each monomial is a set of 1-based variable indices."""

    arity: int
    monomials: frozenset[frozenset[int]]

    def __post_init__(self) -> None:
        mons = frozenset(frozenset(m) for m in self.monomials)
        if self.arity < 1:
            raise ModelError("boolean function needs arity >= 1")
        for mon in mons:
            if not all(1 <= i <= self.arity for i in mon):
                raise ModelError(f"monomial {sorted(mon)} out of range")
        object.__setattr__(self, "monomials", mons)

    @classmethod
    def from_terms(cls, arity: int, terms: Iterable[Iterable[int]]) -> "BooleanFunction":
        """Terms listed repeatedly cancel in pairs, as over GF(2)."""
        acc: set[frozenset[int]] = set()
        for t in terms:
            acc ^= {frozenset(t)}
        return cls(arity, frozenset(acc))

    def __call__(self, bits: Sequence[int]) -> int:
        if len(bits) != self.arity:
            raise ModelError("wrong number of inputs")
        return sum(all(bits[i - 1] for i in mon) for mon in self.monomials) % 2

    def truth_table(self) -> list[int]:
        return [self(bits) for bits in itertools.product((0, 1), repeat=self.arity)]


NAMED_FUNCTIONS: dict[str, list[list[int]]] = {
    "XOR": [[1], [2]],
    "NXOR": [[], [1], [2]],
    "AND": [[1, 2]],
    "NAND": [[], [1, 2]],
    "OR": [[1], [2], [1, 2]],
    "NOR": [[], [1], [2], [1, 2]],
    "L1": [[], [1], [1, 2]],
    "NL1": [[1], [1, 2]],
    "L2": [[], [2], [1, 2]],
    "NL2": [[2], [1, 2]],
    "DICTATOR": [[1]],
    "ZERO": [],
}


def named_function(name: str, arity: int = 2) -> BooleanFunction:
    return BooleanFunction.from_terms(arity, NAMED_FUNCTIONS[name.upper()])


def balanced_state(f: BooleanFunction) -> QuantumState:
    """(n+1)-qubit state with amplitude 2^{-n/2} on each |q f(q)>."""
    n = f.arity
    amp = np.zeros(2 ** (n + 1), dtype=complex)
    for bits in itertools.product((0, 1), repeat=n):
        idx = int("".join(map(str, bits)) + str(f(bits)), 2)
        amp[idx] = 2 ** (-n / 2)
    return QuantumState(amp)


def random_state(n: int, rng: np.random.Generator) -> QuantumState:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return QuantumState.normalized(v)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def tensor(a: QuantumState, b: QuantumState) -> QuantumState:
    return QuantumState(np.kron(a.amplitudes, b.amplitudes))


def _check_unitary(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or np.max(np.abs(u.conj().T @ u - np.eye(2))) > UNITARY_TOL:
        raise ModelError("local operation must be a 2x2 unitary")
    return u


def apply_local_unitaries(state: QuantumState, unitaries: Sequence[np.ndarray]) -> QuantumState:
    if len(unitaries) != state.n:
        raise ModelError("one unitary per qubit is required")
    t = np.array(state.tensor_view())
    for q, u in enumerate(unitaries):
        t = np.moveaxis(np.tensordot(_check_unitary(u), t, axes=([1], [q])), 0, q)
    return QuantumState(t.reshape(-1))


def permute_qubits(state: QuantumState, order: Sequence[int]) -> QuantumState:
    """New state whose qubit ``i`` is qubit ``order[i]`` of ``state``."""
    return QuantumState(np.transpose(state.tensor_view(), list(order)).reshape(-1))


def partial_trace(state: QuantumState | DensityMatrix | np.ndarray, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on the qubits ``keep`` (0-based, output in the given order)."""
    if isinstance(state, QuantumState):
        n = state.n
        _check_keep(keep, n)
        rest = [q for q in range(n) if q not in keep]
        t = np.transpose(state.tensor_view(), list(keep) + rest).reshape(2 ** len(keep), -1)
        return DensityMatrix(t @ t.conj().T)
    rho = state.matrix if isinstance(state, DensityMatrix) else np.asarray(state, dtype=complex)
    n = int(round(math.log2(rho.shape[0])))
    _check_keep(keep, n)
    rest = [q for q in range(n) if q not in keep]
    t = rho.reshape((2,) * (2 * n))
    perm = list(keep) + rest + [n + q for q in keep] + [n + q for q in rest]
    dk, dr = 2 ** len(keep), 2 ** len(rest)
    t = np.transpose(t, perm).reshape(dk, dr, dk, dr)
    return DensityMatrix(np.einsum("ajbj->ab", t))


def _check_keep(keep: Sequence[int], n: int) -> None:
    if not keep or len(set(keep)) != len(keep) or not all(0 <= q < n for q in keep):
        raise ModelError(f"invalid qubit selection {list(keep)} for {n} qubits")


# ---------------------------------------------------------------------------
# empirical models


def _menu_labels(menus: Sequence[Sequence[LocalObservable]]) -> list[list[str]]:
    labels = []
    for party, menu in enumerate(menus):
        row, used = [], set()
        for obs in menu:
            base = f"{obs.label}{party + 1}"
            name, k = base, 1
            while name in used:
                k += 1
                name = f"{base}.{k}"
            used.add(name)
            row.append(name)
        labels.append(row)
    return labels


def outcome_probabilities(state: QuantumState, observables: Sequence[LocalObservable]) -> np.ndarray:
    """Joint outcome distribution, lexicographic with party 0 most significant and + before -."""
    if len(observables) != state.n:
        raise ModelError(f"{len(observables)} observables for a {state.n}-qubit state")
    t = np.array(state.tensor_view())
    for q, obs in enumerate(observables):
        t = np.moveaxis(np.tensordot(obs.bras(), t, axes=([1], [q])), 0, q)
    return np.abs(t.reshape(-1)) ** 2


def empirical_model(state: QuantumState, menus: Sequence[Sequence[LocalObservable]],
                    labels: Sequence[Sequence[str]] | None = None) -> EmpiricalModel:
    """Bell-type model: one context per choice of observable for every party, in menu order."""
    if len(menus) != state.n:
        raise ModelError(f"{len(menus)} menus for a {state.n}-qubit state")
    if any(len(menu) == 0 for menu in menus):
        raise ModelError("every party needs at least one observable")
    labels = [list(r) for r in labels] if labels is not None else _menu_labels(menus)
    if [len(r) for r in labels] != [len(m) for m in menus]:
        raise ModelError("labels must mirror the menus")
    scenario = MeasurementScenario.bell_type(labels)
    rows = []
    for choice in itertools.product(*[range(len(m)) for m in menus]):
        probs = outcome_probabilities(state, [menus[p][c] for p, c in enumerate(choice)])
        rows.append(probs / probs.sum())
    return EmpiricalModel(scenario, rows)
