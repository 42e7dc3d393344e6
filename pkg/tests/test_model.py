from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ctxlab.model import (
    ContextualityClass,
    EmpiricalModel,
    MeasurementScenario,
    ModelError,
    Semiring,
    canonical_outcome,
    check_no_signalling,
    deterministic_model,
    enumerate_global,
    enumerate_sections,
    marginalize,
    mix,
    snap_rational,
    snapped,
    support,
)

F = Fraction
BELL = MeasurementScenario.bell_type([["a", "a'"], ["b", "b'"]])


def bell_table():
    h, t, e = F(1, 2), F(3, 8), F(1, 8)
    return EmpiricalModel(BELL, [[h, 0, 0, h], [t, e, e, t], [t, e, e, t], [e, t, t, e]])


class TestScenario:
    def test_bell_type_cover_order(self):
        assert BELL.cover == (("a", "b"), ("a", "b'"), ("a'", "b"), ("a'", "b'"))
        assert BELL.global_count() == 16

    def test_rejects_uncovered_measurement(self):
        with pytest.raises(ModelError):
            MeasurementScenario(("a", "b", "c"), cover=(("a", "b"),))

    def test_rejects_non_antichain(self):
        with pytest.raises(ModelError):
            MeasurementScenario(("a", "b"), cover=(("a", "b"), ("a",)))

    def test_rejects_two_measurements_of_one_party(self):
        with pytest.raises(ModelError):
            MeasurementScenario(("a", "a'", "b"), cover=(("a", "a'"), ("a", "b")),
                                parties={"a": 0, "a'": 0, "b": 1})

    def test_sections_are_lexicographic(self):
        assert enumerate_sections(("x", "y")) == ["++", "+-", "-+", "--"]
        assert len(enumerate_global(BELL)) == 16

    def test_outcome_aliases(self):
        assert canonical_outcome("0") == "+"
        assert canonical_outcome("−") == "-"
        assert canonical_outcome("1") == "-"


class TestModel:
    def test_rational_weights_stay_exact(self):
        m = bell_table()
        assert m.is_exact
        assert m.row(("a", "b'")) == {"++": F(3, 8), "+-": F(1, 8), "-+": F(1, 8), "--": F(3, 8)}

    def test_float_weights(self):
        m = EmpiricalModel(BELL, [[0.5, 0, 0, 0.5]] * 4)
        assert not m.is_exact

    def test_row_must_sum_to_one(self):
        with pytest.raises(ModelError):
            EmpiricalModel(BELL, [[F(1, 2), 0, 0, F(1, 4)]] * 4)

    def test_negative_weight_rejected(self):
        with pytest.raises(ModelError):
            EmpiricalModel(BELL, [[F(3, 2), F(-1, 2), 0, 0]] * 4)

    def test_boolean_row_needs_a_possible_section(self):
        with pytest.raises(ModelError):
            EmpiricalModel(BELL, [[False] * 4] * 4, Semiring.BOOLEAN)

    def test_from_mapping_reorders_context(self):
        rows = {("b", "a"): {"+-": F(1)}, "a,b'": {"++": F(1)}, "a',b": {"++": F(1)}, "a',b'": {"++": F(1)}}
        m = EmpiricalModel.from_mapping(BELL, rows)
        assert m.row(("a", "b"))["-+"] == 1

    def test_from_mapping_missing_row(self):
        with pytest.raises(ModelError):
            EmpiricalModel.from_mapping(BELL, {"a,b": {"++": F(1)}})

    def test_support(self):
        s = support(bell_table())
        assert s.semiring is Semiring.BOOLEAN
        assert s.rows[0] == (True, False, False, True)
        assert all(s.rows[i] == (True,) * 4 for i in (1, 2, 3))

    def test_snap(self):
        assert snap_rational(0.375) == F(3, 8)
        assert snap_rational(0.1234567) is None
        m = EmpiricalModel(BELL, [[float(w) for w in r] for r in bell_table().rows])
        assert snapped(m) == bell_table()


class TestMarginalize:
    def test_bell_row(self):
        row = {"++": F(1, 2), "+-": F(0), "-+": F(0), "--": F(1, 2)}
        assert marginalize(row, ("a", "b"), ("a",)) == {"+": F(1, 2), "-": F(1, 2)}

    def test_identity(self):
        row = {"++": F(1, 8), "+-": F(3, 8), "-+": F(3, 8), "--": F(1, 8)}
        assert marginalize(row, ("a", "b"), ("a", "b")) == row

    def test_uniform(self):
        row = {s: F(1, 4) for s in ("++", "+-", "-+", "--")}
        assert marginalize(row, ("a", "b"), ("b",)) == {"+": F(1, 2), "-": F(1, 2)}

    def test_boolean_join(self):
        row = {"++": False, "+-": True, "-+": False, "--": False}
        assert marginalize(row, ("a", "b"), ("a",)) == {"+": True, "-": False}

    def test_not_a_subset(self):
        with pytest.raises(ModelError):
            marginalize({"++": F(1)}, ("a", "b"), ("c",))

    @given(st.lists(st.integers(0, 9), min_size=8, max_size=8).filter(any),
           st.permutations(["x", "y", "z"]))
    def test_transitive(self, weights, order):
        """Marginalising in two steps equals marginalising at once."""
        total = sum(weights)
        row = {s: F(w, total) for s, w in zip(enumerate_sections(("x", "y", "z")), weights)}
        mid = tuple(order[:2])
        two_step = marginalize(marginalize(row, ("x", "y", "z"), mid), mid, (order[0],))
        assert two_step == marginalize(row, ("x", "y", "z"), (order[0],))


class TestNoSignalling:
    def test_bell_table(self):
        assert check_no_signalling(bell_table()) == []

    def test_signalling_table(self):
        sc = MeasurementScenario(("a", "b", "b'"), cover=(("a", "b"), ("a", "b'")))
        m = EmpiricalModel(sc, [[1, 0, 0, 0], [0, 0, 0, 1]])
        report = check_no_signalling(m)
        assert report and all(v.overlap == ("a",) for v in report)

    def test_mixtures_of_deterministic_models(self):
        a = deterministic_model(BELL, {"a": "+", "a'": "-", "b": "+", "b'": "+"})
        b = deterministic_model(BELL, {"a": "-", "a'": "-", "b": "+", "b'": "-"})
        assert check_no_signalling(mix([a, b], [F(1, 3), F(2, 3)])) == []


def test_hierarchy_order():
    assert ContextualityClass.STRONGLY_CONTEXTUAL.implies(ContextualityClass.LOGICALLY_CONTEXTUAL)
    assert ContextualityClass.LOGICALLY_CONTEXTUAL.implies(ContextualityClass.WEAKLY_CONTEXTUAL)
    assert not ContextualityClass.WEAKLY_CONTEXTUAL.implies(ContextualityClass.LOGICALLY_CONTEXTUAL)
    assert [c.verdict for c in ContextualityClass] == ["non_contextual", "weak", "logical", "strong"]
