import json
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from ctxlab.cli import EXIT_CAPACITY, EXIT_INPUT, EXIT_OK, EXIT_VERIFY, main
from ctxlab.io import (
    InputError,
    experiment_from_json,
    model_from_json,
    model_to_json,
    observable_from_json,
    parse_weight,
    state_from_json,
    state_to_json,
)


def run(capsys, *args):
    code = main(list(map(str, args)))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestIO:
    def test_weights(self):
        assert parse_weight("3/8") == Fraction(3, 8)
        assert parse_weight(1) == Fraction(1)
        assert parse_weight(0.25) == 0.25
        with pytest.raises(InputError):
            parse_weight("three")

    def test_model_round_trip(self, load_fixture):
        m = model_from_json(load_fixture("bell_phi_plus.json"))
        assert model_from_json(model_to_json(m)) == m

    def test_state_round_trip(self):
        s = state_from_json({"kind": "dicke", "n": 4, "k": 1})
        assert np.allclose(state_from_json(state_to_json(s)).amplitudes, s.amplitudes)

    def test_state_kinds(self):
        assert state_from_json({"kind": "balanced", "function": "AND"}).n == 3
        assert state_from_json({"kind": "balanced", "arity": 3, "function": [[1, 2], [3]]}).n == 4
        assert state_from_json({"kind": "random", "n": 3, "seed": 5}).n == 3
        with pytest.raises(InputError):
            state_from_json({"kind": "mystery"})
        with pytest.raises(InputError):
            state_from_json({"amplitudes": [1, 1]})

    def test_observables(self):
        assert observable_from_json({"pauli": "X"}).label == "X"
        assert observable_from_json({"theta": 0.3, "phi": 1.2}).matrix().shape == (2, 2)
        with pytest.raises(InputError):
            observable_from_json({"spin": 1})

    def test_experiment_needs_menus(self):
        with pytest.raises(InputError):
            experiment_from_json({"state": {"kind": "w"}})


class TestClassify:
    @pytest.mark.parametrize("name,verdict", [("bell_phi_plus.json", "weak"), ("bell_phi_plus_state.json", "weak"),
                                              ("ghz3_xy.json", "strong"), ("product_state.json", "non_contextual"),
                                              ("hardy_support.json", "logical")])
    def test_fixtures(self, capsys, fixture_path, name, verdict):
        code, out, _ = run(capsys, "classify", fixture_path(name))
        assert code == EXIT_OK and out.strip() == verdict

    def test_support_table_certificate(self, capsys, fixture_path, tmp_path):
        cert = tmp_path / "cert.json"
        code, _, _ = run(capsys, "classify", fixture_path("hardy_support.json"), "--emit-certificate", cert)
        data = json.loads(cert.read_text())
        assert code == EXIT_OK and data["global_distribution"] is None
        assert data["non_extendable"] == [["a,b", "++"]]

    def test_table_and_certificate(self, capsys, fixture_path, tmp_path):
        cert = tmp_path / "cert.json"
        table = tmp_path / "table.json"
        code, out, _ = run(capsys, "classify", fixture_path("bell_phi_plus.json"), "--table",
                           "--emit-certificate", cert, "--emit-table", table)
        assert code == EXIT_OK
        assert out.splitlines()[0] == "weak"
        assert "3/8" in out
        data = json.loads(cert.read_text())
        assert data["verdict"] == "weak" and data["global_distribution"] is None
        assert json.loads(table.read_text())["rows"]["a,b"]["++"] == "1/2"

    def test_local_certificate(self, capsys, fixture_path, tmp_path):
        cert = tmp_path / "cert.json"
        run(capsys, "classify", fixture_path("product_state.json"), "--emit-certificate", cert)
        data = json.loads(cert.read_text())
        weights = data["global_distribution"]["support"].values()
        assert abs(sum(float(Fraction(w)) if isinstance(w, str) else w for w in weights) - 1) < 1e-9

    def test_malformed(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        code, _, err = run(capsys, "classify", bad)
        assert code == EXIT_INPUT and "error" in err

    def test_invalid_model(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"measurements": ["a"], "cover": [["a"]], "rows": {"a": {"+": "1/2", "-": "1/4"}}}))
        assert run(capsys, "classify", bad)[0] == EXIT_INPUT

    def test_capacity(self, capsys, fixture_path):
        assert run(capsys, "classify", fixture_path("bell_phi_plus.json"), "--cap", 4)[0] == EXIT_CAPACITY

    def test_bad_tolerance(self, capsys, fixture_path):
        with pytest.raises(SystemExit) as exc:
            main(["classify", str(fixture_path("bell_phi_plus.json")), "--tol", "0"])
        assert exc.value.code == 2


class TestWitness:
    def test_w(self, capsys, fixture_path):
        code, out, _ = run(capsys, "witness", fixture_path("w_state.json"))
        data = json.loads(out)
        assert code == EXIT_OK and data["verdict"] == "witness" and data["verified"]
        assert sum(len(m) for m in data["observables"]) == 5

    def test_bell(self, capsys, fixture_path):
        data = json.loads(run(capsys, "witness", fixture_path("bell.json"))[1])
        assert data["verdict"] == "in_Pn" and data["type"]["pairs"] == [[0, 1]]

    def test_random_eight_qubits(self, capsys, fixture_path):
        data = json.loads(run(capsys, "witness", fixture_path("random8.json"))[1])
        assert data["verdict"] == "witness" and data["verified"]

    def test_no_verify(self, capsys, fixture_path):
        code, out, _ = run(capsys, "witness", fixture_path("w_state.json"), "--no-verify")
        assert code == EXIT_OK and json.loads(out)["verified"] is False


class TestEntropyCommands:
    def test_entropy(self, capsys, fixture_path):
        data = json.loads(run(capsys, "entropy", fixture_path("w_state.json"))[1])
        assert data["entropy"] == pytest.approx(np.log(3))
        assert data["von_neumann"] == pytest.approx(0, abs=1e-9)

    def test_entropy_with_context(self, capsys, tmp_path):
        state = tmp_path / "s.json"
        state.write_text(json.dumps({"kind": "bell"}))
        ctx = tmp_path / "c.json"
        ctx.write_text(json.dumps({"projections": [np.diag([1, 0, 0, 1]).tolist(), np.diag([0, 1, 1, 0]).tolist()]}))
        data = json.loads(run(capsys, "entropy", state, "--context", ctx)[1])
        assert data["entropy"] == pytest.approx(0, abs=1e-12)
        data = json.loads(run(capsys, "entropy", state, "--renyi", 2)[1])
        assert data["entropy"] == pytest.approx(np.log(2))

    def test_reconstruct(self, capsys, tmp_path):
        rho = tmp_path / "rho.json"
        rho.write_text(json.dumps({"density": [[0.5, 0, 0], [0, 0.3, 0], [0, 0, 0.2]]}))
        code, out, _ = run(capsys, "reconstruct", rho)
        data = json.loads(out)
        assert code == EXIT_OK and data["verdict"] == "unique" and data["error"] < 1e-6 and data["queries"] > 0

    def test_reconstruct_qubit(self, capsys, tmp_path):
        rho = tmp_path / "rho.json"
        rho.write_text(json.dumps({"density": [[0.7, 0], [0, 0.3]]}))
        data = json.loads(run(capsys, "reconstruct", rho)[1])
        assert data["verdict"] == "pair" and data["error"] < 1e-6

    def test_counterexample(self, capsys):
        code, out, _ = run(capsys, "counterexample", "--n1", 2, "--n2", 3)
        data = json.loads(out)
        assert code == EXIT_OK and data["gap"] > 1e-3 and data["columns"] == [1, 3, 4, 6]

    def test_counterexample_rejects_four(self, capsys):
        assert run(capsys, "counterexample", "--n1", 2, "--n2", 2)[0] == EXIT_INPUT

    def test_random_counterexample(self, capsys):
        data = json.loads(run(capsys, "counterexample", "--random", "--n1", 2, "--n2", 2, "--seed", 1)[1])
        assert data["found"] and data["trial"] == 0


class TestOtherCommands:
    def test_balanced_suite(self, capsys):
        code, out, _ = run(capsys, "chapter3", "--trials", 3)
        assert code == EXIT_OK and json.loads(out)["ok"]

    def test_gen_state_feeds_classify(self, capsys, tmp_path):
        code, out, _ = run(capsys, "gen-state", "ghz", "--n", 4, "--menus", "X", "Y")
        assert code == EXIT_OK
        path = tmp_path / "ghz4.json"
        path.write_text(out)
        assert run(capsys, "classify", path)[1].strip() == "strong"

    def test_deterministic_output(self, capsys, fixture_path):
        first = run(capsys, "witness", fixture_path("random8.json"))[1]
        second = run(capsys, "witness", fixture_path("random8.json"))[1]
        assert first == second
        assert json.dumps(json.loads(first), sort_keys=True, indent=2) == first.strip()

    def test_console_script(self, fixture_path):
        proc = subprocess.run([sys.executable, "-m", "ctxlab.cli", "classify", str(fixture_path("ghz3_xy.json"))],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0 and proc.stdout.strip() == "strong"

    def test_verification_exit_code(self, capsys, monkeypatch, fixture_path):
        from ctxlab import cli, witness

        monkeypatch.setattr(cli, "hardy_witness", lambda *a, **k: witness.Witness((), False))
        assert run(capsys, "witness", fixture_path("w_state.json"))[0] == EXIT_VERIFY
