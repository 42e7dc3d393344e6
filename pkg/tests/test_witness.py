import math

import numpy as np
import pytest

from ctxlab.hierarchy import decide_possibilistic_extendability
from ctxlab.model import ModelError, support
from ctxlab.quantum import (
    QuantumState,
    apply_local_unitaries,
    basis_state,
    bell_state,
    dicke_state,
    empirical_model,
    ghz_state,
    partial_trace,
    pauli,
    random_state,
    random_unitary,
    tensor,
    w_state,
)
from ctxlab.witness import (
    PROBE_VALUES,
    InPn,
    Witness,
    decompose_last,
    going_up_B,
    going_up_matrix,
    hardy_observables,
    hardy_witness,
    schmidt_2q,
    tau,
    test_P_n as membership,
)

from oracles import planted_product

S = 1 / math.sqrt(2)
HARDY = QuantumState(np.array([math.sqrt(0.8), 0, 0, math.sqrt(0.2)], dtype=complex))


class TestPartialTrace:
    def test_bell(self):
        assert np.allclose(partial_trace(bell_state("phi+"), [0]).matrix, np.eye(2) / 2)

    def test_product(self):
        assert np.allclose(partial_trace(basis_state("00"), [0]).matrix, np.diag([1, 0]))

    def test_ghz(self):
        assert np.allclose(partial_trace(ghz_state(3), [0, 1]).matrix, np.diag([0.5, 0, 0, 0.5]))

    def test_bad_index(self):
        with pytest.raises(ModelError):
            partial_trace(ghz_state(3), [3])


class TestMembership:
    def test_single_and_pair(self):
        res = membership(tensor(basis_state("0"), bell_state("phi+")))
        assert isinstance(res, InPn)
        assert res.type.singles == (0,) and res.type.pairs == ((1, 2),)

    def test_partially_entangled(self):
        assert not membership(HARDY)

    def test_w(self):
        assert not membership(w_state())

    def test_reassembles(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            state = planted_product(int(rng.integers(1, 7)), rng)
            res = membership(state)
            assert isinstance(res, InPn)
            assert np.allclose(res.reassemble().amplitudes, state.amplitudes, atol=1e-8)


class TestSchmidt:
    def test_bell(self):
        sd = schmidt_2q(bell_state("phi+"))
        assert sd.alpha == pytest.approx(S) and sd.beta == pytest.approx(S)

    def test_product(self):
        sd = schmidt_2q(basis_state("01"))
        assert sd.alpha == pytest.approx(1) and sd.beta == pytest.approx(0)

    def test_against_reduced_spectrum(self):
        state = QuantumState(np.array([2, 1, 0, 1], dtype=complex) / math.sqrt(6))
        sd = schmidt_2q(state)
        sv = np.linalg.svd(np.array([[2, 1], [0, 1]]) / math.sqrt(6), compute_uv=False)
        eig = np.sort(np.linalg.eigvalsh(partial_trace(state, [0]).matrix))[::-1]
        assert (sd.alpha, sd.beta) == pytest.approx(tuple(sv))
        assert (sd.alpha**2, sd.beta**2) == pytest.approx(tuple(eig))

    def test_reconstructs(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            state = random_state(2, rng)
            sd = schmidt_2q(state)
            rebuilt = sd.alpha * np.kron(sd.basis_a[0], sd.basis_b[0]) + sd.beta * np.kron(sd.basis_a[1], sd.basis_b[1])
            assert np.allclose(rebuilt, state.amplitudes, atol=1e-9)
            assert sd.alpha**2 + sd.beta**2 == pytest.approx(1)


class TestHardyObservables:
    def test_hardy_state_is_logically_contextual(self):
        sd = schmidt_2q(HARDY)
        u1, d1, u2, d2 = hardy_observables(sd.alpha, sd.beta, sd.basis_a, sd.basis_b)
        m = empirical_model(HARDY, [[u1, d1], [u2, d2]])
        assert decide_possibilistic_extendability(support(m)).logically_contextual

    def test_vectors_follow_formula_up_to_sign(self):
        a, b = math.sqrt(0.8), math.sqrt(0.2)
        e = (np.array([1, 0]), np.array([0, 1]))
        u1, d1, _, _ = hardy_observables(a, b, e, e)
        assert np.allclose(u1.plus, np.array([math.sqrt(b), math.sqrt(a)]) / math.sqrt(a + b))
        assert np.allclose(d1.plus, np.array([b**1.5, -(a**1.5)]) / math.sqrt(a**3 + b**3))

    @pytest.mark.parametrize("alpha,beta", [(S, S), (1.0, 0.0)])
    def test_degenerate_rejected(self, alpha, beta):
        e = (np.array([1, 0]), np.array([0, 1]))
        with pytest.raises(ModelError):
            hardy_observables(alpha, beta, e, e)


class TestGoingUp:
    def test_x(self):
        assert np.allclose(going_up_B(S, S).matrix(), pauli("X").matrix())

    def test_minus_z(self):
        assert np.allclose(going_up_B(1, 0).matrix(), np.diag([-1, 1]))

    def test_complex_entries(self):
        x, y = math.sqrt(0.6), math.sqrt(0.4) * 1j
        obs = going_up_B(x, y)
        assert abs(np.vdot(obs.plus, obs.minus)) < 1e-12
        assert np.allclose(obs.matrix(), going_up_matrix(x, y))

    def test_normalises(self):
        assert np.allclose(going_up_B(3, 4).matrix(), going_up_matrix(3, 4) / 25)

    def test_zero_rejected(self):
        with pytest.raises(ModelError):
            going_up_B(0, 0)

    def test_lift_preserves_logical_contextuality(self):
        """Split the Hardy state as a psi + b phi, lift with weights x, y and add B(x, y)."""
        sd = schmidt_2q(HARDY)
        u1, d1, u2, d2 = hardy_observables(sd.alpha, sd.beta, sd.basis_a, sd.basis_b)
        rng = np.random.default_rng(6)
        for _ in range(20):
            psi = random_state(2, rng).amplitudes
            a = rng.uniform(0.1, 0.9)
            rest = HARDY.amplitudes - a * psi
            b = np.linalg.norm(rest)
            phi = rest / b
            x, y = rng.normal(size=2) + 1j * rng.normal(size=2)
            lifted = QuantumState.normalized(x * a * np.kron(psi, [1, 0]) + y * b * np.kron(phi, [0, 1]))
            m = empirical_model(lifted, [[u1, d1], [u2, d2], [going_up_B(x, y)]])
            assert decide_possibilistic_extendability(support(m)).logically_contextual


class TestDecomposeAndTau:
    def test_ghz(self):
        sp = decompose_last(ghz_state(3))
        assert sp.alpha == pytest.approx(S) and sp.beta == pytest.approx(S)
        assert np.allclose(sp.psi.amplitudes, basis_state("00").amplitudes)
        assert np.allclose(sp.phi.amplitudes, basis_state("11").amplitudes)

    def test_last_qubit_zero(self):
        sp = decompose_last(tensor(random_state(2, np.random.default_rng(1)), basis_state("0")))
        assert sp.alpha == pytest.approx(1) and sp.beta == pytest.approx(0) and sp.phi is None

    def test_round_trip(self):
        state = random_state(3, np.random.default_rng(9))
        sp = decompose_last(state)
        rebuilt = sp.alpha * np.kron(sp.psi.amplitudes, [1, 0]) + sp.beta * np.kron(sp.phi.amplitudes, [0, 1])
        assert np.allclose(rebuilt, state.amplitudes, atol=1e-12)

    def test_tau_endpoints(self):
        psi, phi = basis_state("00"), basis_state("11")
        assert np.allclose(tau(1, psi, phi).amplitudes, psi.amplitudes)
        assert np.allclose(tau(0, psi, phi).amplitudes, phi.amplitudes)
        assert np.allclose(tau(S, psi, phi).amplitudes, ghz_state(2).amplitudes)

    def test_tau_range(self):
        with pytest.raises(ModelError):
            tau(1.5, basis_state("0"), basis_state("1"))

    def test_probe_values(self):
        assert len(PROBE_VALUES) == 19 and all(0 < a < 1 for a in PROBE_VALUES)

    def test_probe_finds_non_member(self):
        """Products differing in two components leave the class somewhere along the probe path."""
        rng = np.random.default_rng(12)
        for _ in range(30):
            n = int(rng.integers(2, 5))
            singles = [random_state(1, rng) for _ in range(n)]
            changed = list(rng.choice(n, size=2, replace=False))
            others = [random_state(1, rng) if q in changed else singles[q] for q in range(n)]
            psi = QuantumState(np.array(singles[0].amplitudes))
            phi = QuantumState(np.array(others[0].amplitudes))
            for q in range(1, n):
                psi = tensor(psi, singles[q])
                phi = tensor(phi, others[q])
            assert any(not membership(tau(a, psi, phi)) for a in PROBE_VALUES)


class TestHardyWitness:
    def test_bell(self):
        res = hardy_witness(bell_state("phi+"))
        assert isinstance(res, InPn) and res.type.pairs == ((0, 1),)

    def test_hardy_state(self):
        res = hardy_witness(HARDY)
        assert isinstance(res, Witness) and res.verified and res.count == 4

    def test_w(self):
        res = hardy_witness(w_state())
        assert isinstance(res, Witness) and res.verified and res.count == 5

    def test_menu_shape(self):
        res = hardy_witness(dicke_state(4, 2))
        sizes = sorted(len(m) for m in res.observables)
        assert sizes == [1, 1, 2, 2]

    def test_ghz_and_local_variants(self):
        rng = np.random.default_rng(21)
        for n in (3, 4, 5):
            state = apply_local_unitaries(ghz_state(n), [random_unitary(2, rng) for _ in range(n)])
            res = hardy_witness(state)
            assert isinstance(res, Witness) and res.verified and res.count == n + 2

    def test_random_states(self):
        rng = np.random.default_rng(33)
        for _ in range(40):
            n = int(rng.integers(2, 6))
            res = hardy_witness(random_state(n, rng))
            assert isinstance(res, Witness) and res.verified and res.count == n + 2

    def test_unverified_mode(self):
        res = hardy_witness(w_state(), verify=False)
        assert isinstance(res, Witness) and not res.verified and res.count == 5

    def test_single_qubit(self):
        assert isinstance(hardy_witness(random_state(1, np.random.default_rng(0))), InPn)
