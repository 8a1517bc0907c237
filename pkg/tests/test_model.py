from fractions import Fraction as F

import pytest
from hypothesis import given

from contextuality import (
    Behavior,
    ModelError,
    find_isomorphism,
    is_consistently_connected,
    is_deterministic,
    is_nondisturbing,
    marginal,
    validate,
)
from contextuality.model import (
    Context,
    Distribution,
    Isomorphism,
    Observable,
    Scenario,
    check_isomorphism,
    connectedness_class,
    parse_probability,
)
from contextuality.transforms import rename_contexts, rename_observables, rename_outcomes
from oracles import behaviors

H = F(1, 2)


# -- parsing -------------------------------------------------------------------


@pytest.mark.parametrize("text,value", [("1/2", H), ("1", F(1)), (" 3/9 ", F(1, 3)), (0, F(0))])
def test_parse_probability_exact(text, value):
    assert parse_probability(text) == value


@pytest.mark.parametrize("bad", ["0.5", "1e-1", 0.5, True, "x", "1/0"])
def test_parse_probability_rejects(bad):
    with pytest.raises(ModelError):
        parse_probability(bad)


def test_scenario_rejects_empty_context():
    with pytest.raises(ModelError, match="measures no observables"):
        Scenario([Observable("q", ("0", "1"))], [Context("c", ())])


def test_scenario_rejects_unknown_and_duplicate():
    with pytest.raises(ModelError, match="unknown observable"):
        Scenario([Observable("q", ("0",))], [Context("c", ("r",))])
    with pytest.raises(ModelError, match="duplicate context"):
        Scenario([Observable("q", ("0",))], [Context("c", ("q",)), Context("c", ("q",))])
    with pytest.raises(ModelError, match="repeated outcome"):
        Observable("q", ("0", "0"))


def test_duplicate_contexts_with_same_observables_allowed(get):
    ex1 = get("EX1")
    assert len({c.observables for c in ex1.contexts}) == 1
    assert len(ex1.contexts) == 4


# -- validate --------------------------------------------------------------------


def test_validate_four_context_behavior_clean(get):
    assert validate(get("EX1")) == []


def test_validate_normalization():
    b = Behavior.build({"q": ("0", "1")}, [("c", ("q",))], {"c": {("0",): "1/2", ("1",): "1/3"}})
    problems = validate(b)
    assert len(problems) == 1 and "5/6" in problems[0]


def test_validate_domain_mismatch():
    sc = Scenario([Observable("q", ("0", "1")), Observable("r", ("0", "1"))], [Context("c", ("q", "r"))])
    bad = Distribution(("q",), (("0", "1"),), {("0",): F(1)})
    b = Behavior(sc, {"c": bad})
    problems = validate(b)
    assert len(problems) == 1 and "domain mismatch" in problems[0]


def test_validate_negative_weight():
    b = Behavior.build({"q": ("0", "1")}, [("c", ("q",))], {"c": {("0",): "3/2", ("1",): "-1/2"}})
    assert any("negative" in p for p in validate(b))


# -- marginal ----------------------------------------------------------------------


def test_marginal_examples(get):
    ex3 = get("EX3_P")
    m = marginal(ex3, ["q2"], "c1")
    assert (m[("0",)], m[("1",)]) == (0, 1)
    assert marginal(ex3, ["q1", "q2"], "c1") == ex3.tables["c1"]
    pr = get("THM2_P5")
    m = marginal(pr, ["q1"], "c1")
    assert (m[("0",)], m[("1",)]) == (H, H)


def test_marginal_not_in_context(get):
    with pytest.raises(ModelError, match="q4"):
        marginal(get("THM2_P5"), ["q4"], "c1")


@given(behaviors(max_context_size=3, max_observables=3))
def test_tower_property(b):
    for ctx in b.contexts:
        obs = ctx.observables
        for k in range(1, len(obs) + 1):
            outer = obs[:k]
            full = marginal(b, outer, ctx.id)
            for inner in (outer[:1], outer[-1:]):
                idx = [outer.index(q) for q in inner]
                pushed = {}
                for s, p in full.weights.items():
                    key = tuple(s[i] for i in idx)
                    pushed[key] = pushed.get(key, F(0)) + p
                assert pushed == dict(marginal(b, inner, ctx.id).weights)


# -- structural predicates ---------------------------------------------------------


def test_nondisturbing_examples(get):
    assert is_nondisturbing(get("THM2_P5")) == (True, None)
    assert is_nondisturbing(get("EX3_P")) == (False, (("q2",), "c1", "c2"))
    assert is_nondisturbing(get("THM2_P3")) == (False, (("q2",), "c1", "c4"))


def test_consistent_connectedness_examples(get):
    assert is_consistently_connected(get("THM2_P4")) == (True, None)
    ok, (q, c1, c2) = is_consistently_connected(get("THM2_P3"))
    assert not ok and q == "q2"
    p3 = get("THM2_P3")
    assert marginal(p3, [q], c1) != marginal(p3, [q], c2)
    assert is_consistently_connected(get("EX4_COIN"))[0]


def test_deterministic_examples(get):
    assert is_deterministic(get("EX4_DET"))
    assert not is_deterministic(get("EX4_COIN"))
    b = Behavior.build({"q": ("0", "1")}, {"a": ("q",), "b": ("q",)},
                       {"a": {("1",): 1}, "b": {("1",): 1}})
    assert is_deterministic(b)


def test_connectedness_class(get):
    assert connectedness_class(get("THM2_P5")) == "ND"
    assert connectedness_class(get("THM2_P3")) == "IC"
    assert connectedness_class(get("EX1")) == "IC"
    assert connectedness_class(get("EX1_MARGINAL")) == "DCC"


@given(behaviors())
def test_nondisturbing_implies_consistently_connected(b):
    if is_nondisturbing(b)[0]:
        assert is_consistently_connected(b)[0]


@given(behaviors(deterministic=True))
def test_deterministic_and_cc_implies_nondisturbing(b):
    if is_consistently_connected(b)[0]:
        assert is_nondisturbing(b)[0]


@given(behaviors(nondisturbing=True))
def test_generator_nondisturbing_flag(b):
    assert is_nondisturbing(b)[0]


# -- isomorphism -------------------------------------------------------------------


def test_pr_box_isomorphic_to_relabeled(get):
    pr = get("THM2_P5")
    other = rename_contexts(rename_observables(pr, {"q1": "A", "q3": "B", "q4": "C", "q5": "D"}),
                            {"c1": "w", "c2": "x", "c3": "y", "c4": "z"})
    other = rename_outcomes(other, "A", {"0": "+", "1": "-"})
    iso = find_isomorphism(pr, other)
    assert iso is not None and check_isomorphism(pr, other, iso)


def test_self_isomorphism(get):
    ex1 = get("EX1")
    iso = find_isomorphism(ex1, ex1)
    assert iso is not None and check_isomorphism(ex1, ex1, iso)


def test_no_isomorphism_on_context_count(get):
    assert find_isomorphism(get("EX4_COIN"), get("EX4_DET")) is None


def test_no_isomorphism_between_pr_box_and_flipped_variant(get):
    from contextuality.corpus import CORRELATED
    pr = get("THM2_P5")
    flipped = Behavior.build(
        {q: ("0", "1") for q in ("q1", "q3", "q4", "q5")},
        [("c1", ("q1", "q3")), ("c2", ("q1", "q5")), ("c3", ("q4", "q3")), ("c4", ("q4", "q5"))],
        {c: CORRELATED for c in ("c1", "c2", "c3", "c4")},
    )
    assert find_isomorphism(pr, flipped) is None


def test_check_isomorphism_rejects_wrong_map(get):
    ex3 = get("EX3_P")
    bad = Isomorphism({"q1": "q1", "q2": "q2"}, {"c1": "c2", "c2": "c1"},
                      {"q1": {"0": "0", "1": "1"}, "q2": {"0": "0", "1": "1"}})
    assert not check_isomorphism(ex3, ex3, bad)


@given(behaviors(max_observables=3, max_contexts=3))
def test_isomorphism_symmetric(b):
    other = rename_observables(b, {q: f"x{q}" for q in b.observables})
    other = rename_contexts(other, {c: f"k{c}" for c in b.scenario.context_ids})
    iso = find_isomorphism(b, other)
    assert iso is not None
    back = find_isomorphism(other, b)
    assert back is not None
    assert check_isomorphism(other, b, iso.inverse())
