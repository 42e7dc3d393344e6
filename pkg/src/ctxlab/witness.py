"""Product-form detection and Hardy-type witnesses for n-qubit states.

A state either factors into single qubits and maximally entangled pairs, or
admits n+2 local observables (two for each of two parties, one for every other
party) whose empirical model is logically contextual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hierarchy import decide_possibilistic_extendability
from .model import EPS_SUPP, ModelError, support
from .quantum import (
    DensityMatrix,
    LocalObservable,
    QuantumState,
    empirical_model,
    partial_trace,
    pauli,
    permute_qubits,
)

PURITY_TOL = 1e-6
MIXED_TOL = 1e-6
PROBE_VALUES = tuple(i / 20 for i in range(1, 20))
PRODUCT_TOL = 1e-8
# amplitude weight below which one branch of the last-qubit split is treated as absent
DEGENERATE_TOL = 1e-6


class VerificationError(RuntimeError):
    """The constructed witness did not replay as logically contextual."""


@dataclass(frozen=True)
class EntanglementType:
    """Partition of the qubits into unentangled singles and maximally entangled pairs (0-based)."""

    singles: tuple[int, ...]
    pairs: tuple[tuple[int, int], ...]

    def to_json(self) -> dict:
        return {"singles": list(self.singles), "pairs": [list(p) for p in self.pairs]}


@dataclass(frozen=True, eq=False)
class InPn:
    type: EntanglementType
    components: tuple[QuantumState, ...]  # singles first, then pairs, in the order of ``type``

    def reassemble(self) -> QuantumState:
        """Tensor the components and undo the qubit permutation."""
        amp = np.ones(1, dtype=complex)
        for c in self.components:
            amp = np.kron(amp, c.amplitudes)
        order = list(self.type.singles) + [q for p in self.type.pairs for q in p]
        placed = QuantumState(amp)
        inverse = [order.index(q) for q in range(len(order))]
        return permute_qubits(placed, inverse)


@dataclass(frozen=True, eq=False)
class Witness:
    observables: tuple[tuple[LocalObservable, ...], ...]
    verified: bool
    non_extendable: tuple = field(default=())

    @property
    def count(self) -> int:
        return sum(len(m) for m in self.observables)


WitnessResult = InPn | Witness


@dataclass(frozen=True)
class No:
    reason: str

    def __bool__(self) -> bool:
        return False


def _top_vector(rho: DensityMatrix) -> np.ndarray:
    vals, vecs = np.linalg.eigh(rho.matrix)
    return vecs[:, -1]


def test_P_n(state: QuantumState, tol: float = PURITY_TOL, mixed_tol: float = MIXED_TOL) -> InPn | No:
    """Membership in the class of products of single qubits and maximally entangled pairs."""
    n = state.n
    singles, mixed = [], []
    for q in range(n):
        rho = partial_trace(state, [q])
        if np.linalg.norm(rho.matrix - np.eye(2) / 2) < mixed_tol:
            mixed.append(q)
        elif abs(rho.purity() - 1) < tol:
            singles.append(q)
        else:
            return No(f"qubit {q} is neither pure nor maximally mixed")
    pairs: list[tuple[int, int]] = []
    paired: set[int] = set()
    for i in mixed:
        if i in paired:
            continue
        partners = [j for j in mixed if j > i and j not in paired
                    and abs(partial_trace(state, [i, j]).purity() - 1) < tol]
        if not partners:
            return No(f"maximally mixed qubit {i} has no pure partner")
        assert len(partners) == 1, "partner of a maximally mixed qubit must be unique"
        pairs.append((i, partners[0]))
        paired.update((i, partners[0]))
    comps = [QuantumState.normalized(_top_vector(partial_trace(state, [q]))) for q in singles]
    comps += [QuantumState.normalized(_top_vector(partial_trace(state, list(p)))) for p in pairs]
    result = InPn(EntanglementType(tuple(singles), tuple(pairs)), tuple(comps))
    # align global phase so the reassembled product equals the input
    rebuilt = result.reassemble()
    overlap = np.vdot(rebuilt.amplitudes, state.amplitudes)
    if abs(abs(overlap) - 1) > math.sqrt(tol):
        return No("components do not reassemble into the state")
    phase = overlap / abs(overlap)
    comps[0] = QuantumState(comps[0].amplitudes * phase)
    return InPn(result.type, tuple(comps))


@dataclass(frozen=True)
class Schmidt:
    alpha: float
    beta: float
    basis_a: tuple[np.ndarray, np.ndarray]
    basis_b: tuple[np.ndarray, np.ndarray]


def schmidt_2q(state: QuantumState) -> Schmidt:
    """state = alpha |a+>|b+> + beta |a->|b->, alpha >= beta >= 0."""
    if state.n != 2:
        raise ModelError("Schmidt decomposition here is for two qubits")
    u, s, vh = np.linalg.svd(state.amplitudes.reshape(2, 2))
    return Schmidt(float(s[0]), float(s[1]), (u[:, 0], u[:, 1]), (vh[0], vh[1]))


def hardy_observables(alpha: float, beta: float, basis_a: Sequence[np.ndarray],
                      basis_b: Sequence[np.ndarray]) -> tuple[LocalObservable, LocalObservable, LocalObservable, LocalObservable]:
    """Observables (U1, D1, U2, D2) for alpha|++> + beta|--> in the given local bases.

    The construction expects the relative sign alpha|++> - beta|-->, so the
    second party's minus vector is negated first.
    """
    if not (0 < beta and beta < alpha and alpha < 1):
        raise ModelError("Hardy construction needs 0 < beta < alpha < 1")
    if abs(alpha - beta) < 1e-12:
        raise ModelError("maximally entangled input")
    su = math.sqrt(alpha + beta)
    sd = math.sqrt(alpha**3 + beta**3)
    out = []
    for party, (plus, minus) in enumerate((basis_a, basis_b)):
        plus = np.asarray(plus, dtype=complex)
        minus = np.asarray(minus, dtype=complex) * (-1 if party == 1 else 1)
        u = (math.sqrt(beta) * plus + math.sqrt(alpha) * minus) / su
        d = (beta**1.5 * plus - alpha**1.5 * minus) / sd
        out.append(LocalObservable(u, _complement(u), "U"))
        out.append(LocalObservable(d, _complement(d), "D"))
    return tuple(out)  # type: ignore[return-value]


def _complement(v: np.ndarray) -> np.ndarray:
    return np.array([-np.conj(v[1]), np.conj(v[0])])


def going_up_B(x: complex, y: complex) -> LocalObservable:
    """Observable whose +1 eigenvector is conj(y)|0> + conj(x)|1>, after normalising (x, y)."""
    norm = math.hypot(abs(x), abs(y))
    if norm == 0:
        raise ModelError("going_up_B needs (x, y) != (0, 0)")
    x, y = complex(x) / norm, complex(y) / norm
    plus = np.array([np.conj(y), np.conj(x)])
    minus = np.array([x, -y])
    return LocalObservable(plus, minus, "B")


def going_up_matrix(x: complex, y: complex) -> np.ndarray:
    """The defining matrix of ``going_up_B`` before normalisation."""
    x, y = complex(x), complex(y)
    return np.array([[-abs(x) ** 2 + abs(y) ** 2, 2 * x * np.conj(y)],
                     [2 * np.conj(x) * y, abs(x) ** 2 - abs(y) ** 2]])


@dataclass(frozen=True, eq=False)
class LastQubitSplit:
    alpha: float
    psi: QuantumState | None
    beta: float
    phi: QuantumState | None


def decompose_last(state: QuantumState, tol: float = 1e-12) -> LastQubitSplit:
    """state = alpha psi|0> + beta phi|1> with alpha, beta real and non-negative."""
    if state.n < 2:
        raise ModelError("decompose_last needs at least two qubits")
    m = state.amplitudes.reshape(-1, 2)
    a, b = np.linalg.norm(m[:, 0]), np.linalg.norm(m[:, 1])
    psi = QuantumState(m[:, 0] / a) if a > tol else None
    phi = QuantumState(m[:, 1] / b) if b > tol else None
    return LastQubitSplit(float(a), psi, float(b), phi)


def tau(a: float, psi: QuantumState, phi: QuantumState) -> QuantumState:
    """Renormalised a psi + sqrt(1 - a^2) phi."""
    if not 0 <= a <= 1:
        raise ModelError("tau needs a in [0, 1]")
    if psi.n != phi.n:
        raise ModelError("tau needs states of equal size")
    return QuantumState.normalized(a * psi.amplitudes + math.sqrt(max(0.0, 1 - a * a)) * phi.amplitudes)


def _factor_pair(state: QuantumState, k: int, tol: float) -> QuantumState | None:
    """Two-qubit factor on (k, last) when the state splits as that pair times the rest."""
    n = state.n
    last = n - 1
    rest = [q for q in range(n) if q not in (k, last)]
    t = np.transpose(state.tensor_view(), [k, last] + rest).reshape(4, -1)
    u, s, _ = np.linalg.svd(t, full_matrices=False)
    if len(s) > 1 and s[1] > tol:
        return None
    return QuantumState.normalized(u[:, 0])


def _menus(state: QuantumState, tol: float, mixed_tol: float) -> list[list[LocalObservable]]:
    """Recursive construction; the input is assumed outside the product class."""
    n = state.n
    if n == 2:
        sd = schmidt_2q(state)
        u1, d1, u2, d2 = hardy_observables(sd.alpha, sd.beta, sd.basis_a, sd.basis_b)
        return [[u1, d1], [u2, d2]]
    split = decompose_last(state, DEGENERATE_TOL)
    z = pauli("Z")
    if split.psi is None:
        return _menus(split.phi, tol, mixed_tol) + [[z]]
    if split.phi is None:
        return _menus(split.psi, tol, mixed_tol) + [[z]]
    if not test_P_n(split.psi, tol, mixed_tol):
        return _menus(split.psi, tol, mixed_tol) + [[z]]
    if not test_P_n(split.phi, tol, mixed_tol):
        return _menus(split.phi, tol, mixed_tol) + [[z]]
    for a in PROBE_VALUES:
        probe = tau(a, split.psi, split.phi)
        if not test_P_n(probe, tol, mixed_tol):
            b = math.sqrt(1 - a * a)
            return _menus(probe, tol, mixed_tol) + [[going_up_B(split.alpha / a, split.beta / b)]]
    for k in range(n - 1):
        pair = _factor_pair(state, k, math.sqrt(tol))
        if pair is None or test_P_n(pair, tol, mixed_tol):
            continue
        sd = schmidt_2q(pair)
        u1, d1, u2, d2 = hardy_observables(sd.alpha, sd.beta, sd.basis_a, sd.basis_b)
        menus: list[list[LocalObservable]] = [[z] for _ in range(n)]
        menus[k] = [u1, d1]
        menus[n - 1] = [u2, d2]
        return menus
    raise VerificationError("no entangled two-qubit factor found in the final case")


def verify_witness(state: QuantumState, menus: Sequence[Sequence[LocalObservable]],
                   eps_supp: float = EPS_SUPP):
    """Non-extendable sections of the model the menus induce on the state (empty if none)."""
    model = empirical_model(state, menus)
    report = decide_possibilistic_extendability(support(model, eps_supp))
    return report.non_extendable


def hardy_witness(state: QuantumState, tol: float = PURITY_TOL, mixed_tol: float = MIXED_TOL,
                  verify: bool = True, eps_supp: float = EPS_SUPP) -> InPn | Witness:
    """Product decomposition when the state is in the class, otherwise a verified witness."""
    member = test_P_n(state, tol, mixed_tol)
    if member:
        return member
    try:
        menus = _menus(state, tol, mixed_tol)
    except (VerificationError, ModelError):
        return Witness((), False)
    observables = tuple(tuple(m) for m in menus)
    if not verify:
        return Witness(observables, False)
    bad = verify_witness(state, observables, eps_supp)
    return Witness(observables, bool(bad), tuple(bad))
