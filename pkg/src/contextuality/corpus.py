"""Hand-entered behaviors: worked examples, the impossibility chains and counterexample witnesses."""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .model import Behavior
from .transforms import join

B = ("0", "1")
H = Fraction(1, 2)
T = Fraction(1, 3)

CORRELATED = {("0", "0"): H, ("1", "1"): H}
ANTICORRELATED = {("0", "1"): H, ("1", "0"): H}
UNIFORM = {("0",): H, ("1",): H}


def _ex1() -> Behavior:
    return Behavior.build(
        {"q1": B, "q2": B},
        [(c, ("q1", "q2")) for c in ("c1", "c2", "c3", "c4")],
        {
            "c1": CORRELATED,
            "c2": ANTICORRELATED,
            "c3": {("0", "0"): 1},
            "c4": {("1", "1"): 1},
        },
    )


def _ex1_marginal() -> Behavior:
    return Behavior.build(
        {"q1": B, "q2": B},
        [("c1", ("q1", "q2")), ("c2", ("q1", "q2"))],
        {"c1": CORRELATED, "c2": ANTICORRELATED},
    )


def _ex2_p() -> Behavior:
    return Behavior.build(
        {"q": ("1", "1'", "2", "2'", "3", "3'")},
        [(c, ("q",)) for c in ("c1", "c2", "c3")],
        {
            "c1": {("2'",): H, ("3'",): H},
            "c2": {("1'",): H, ("3",): H},
            "c3": {("1",): H, ("2",): H},
        },
    )


def _ex2_pprime() -> Behavior:
    return Behavior.build(
        {"q": ("1", "2", "3")},
        [(c, ("q",)) for c in ("c1", "c2", "c3")],
        {
            "c1": {("2",): H, ("3",): H},
            "c2": {("1",): H, ("3",): H},
            "c3": {("1",): H, ("2",): H},
        },
    )


def _ex3_p() -> Behavior:
    return Behavior.build(
        {"q1": B, "q2": B},
        [("c1", ("q1", "q2")), ("c2", ("q1", "q2"))],
        {
            "c1": {("0", "1"): H, ("1", "1"): H},
            "c2": {("0", "0"): H, ("1", "0"): H},
        },
    )


def _ex3_pprime() -> Behavior:
    return Behavior.build(
        {"q1": B, "q3": B},
        [("c1", ("q1", "q3")), ("c2", ("q1", "q3"))],
        {"c1": CORRELATED, "c2": ANTICORRELATED},
    )


def _coin(context: str = "c0") -> Behavior:
    return Behavior.build({"q1": B}, [(context, ("q1",))], {context: UNIFORM})


def _ex4_det() -> Behavior:
    return Behavior.build(
        {"q2": B},
        [("c1", ("q2",)), ("c2", ("q2",))],
        {"c1": {("1",): 1}, "c2": {("0",): 1}},
    )


def _thm2_p2() -> Behavior:
    values = {"c1": "1", "c2": "1", "c3": "1", "c4": "0"}
    return Behavior.build(
        {"q2": B},
        [(c, ("q2",)) for c in values],
        {c: {(v,): 1} for c, v in values.items()},
    )


def _thm2_p3() -> Behavior:
    values = {"c1": "1", "c2": "1", "c3": "1", "c4": "0"}
    return Behavior.build(
        {"q1": B, "q2": B},
        [(c, ("q1", "q2")) for c in values],
        {c: {("0", v): H, ("1", v): H} for c, v in values.items()},
    )


def _thm2_p4() -> Behavior:
    return Behavior.build(
        {"q1": B, "q3": B},
        [(c, ("q1", "q3")) for c in ("c1", "c2", "c3", "c4")],
        {"c1": CORRELATED, "c2": CORRELATED, "c3": CORRELATED, "c4": ANTICORRELATED},
    )


def _pr_box() -> Behavior:
    return Behavior.build(
        {"q1": B, "q3": B, "q4": B, "q5": B},
        [("c1", ("q1", "q3")), ("c2", ("q1", "q5")), ("c3", ("q4", "q3")), ("c4", ("q4", "q5"))],
        {"c1": CORRELATED, "c2": CORRELATED, "c3": CORRELATED, "c4": ANTICORRELATED},
    )


def _thm3_p() -> Behavior:
    return Behavior.build(
        {"q1": B},
        [(c, ("q1",)) for c in ("c1", "c2", "c3", "c4")],
        {c: UNIFORM for c in ("c1", "c2", "c3", "c4")},
    )


def _prop1_tilde() -> Behavior:
    out = ("0", "0'", "1", "1'")
    return Behavior.build(
        {"q1": out, "q2": out},
        [("c1", ("q1", "q2")), ("c2", ("q1", "q2"))],
        {
            "c1": {("0", "0"): H, ("1", "1"): H},
            "c2": {("0'", "1'"): H, ("1'", "0'"): H},
        },
    )


# The proof text declares the ternary outcome set as {0,1,2} while its tables
# use 1..3; the tables are authoritative here.
TERNARY = ("1", "2", "3")


def _prop2_p() -> Behavior:
    return Behavior.build(
        {"a": B, "b": B, "y": TERNARY, "z": TERNARY},
        [("c", ("a", "b", "y")), ("c'", ("a", "b", "z")), ("d", ("y", "z"))],
        {
            "c": {("0", "0", "1"): T, ("1", "0", "2"): T, ("1", "0", "3"): T},
            "c'": {("1", "0", "1"): T, ("1", "0", "2"): T, ("1", "1", "3"): T},
            "d": {("1", "1"): T, ("2", "2"): T, ("3", "3"): T},
        },
    )


def _prop4_expanded() -> Behavior:
    """PR box with an extra observable whose marginal changes between two contexts."""
    return Behavior.build(
        {"q1": B, "q3": B, "q4": B, "q5": B, "x": B},
        [
            ("c1", ("q1", "q3", "x")),
            ("c2", ("q1", "q5", "x")),
            ("c3", ("q4", "q3")),
            ("c4", ("q4", "q5")),
        ],
        {
            "c1": {("0", "0", "0"): H, ("1", "1", "0"): H},
            "c2": {("0", "0", "1"): H, ("1", "1", "1"): H},
            "c3": CORRELATED,
            "c4": ANTICORRELATED,
        },
    )


def _prop5_split() -> Behavior:
    """PR box with q1's outcome 0 recorded as 0a in c1 and 0b in c2."""
    return Behavior.build(
        {"q1": ("0a", "0b", "1"), "q3": B, "q4": B, "q5": B},
        [("c1", ("q1", "q3")), ("c2", ("q1", "q5")), ("c3", ("q4", "q3")), ("c4", ("q4", "q5"))],
        {
            "c1": {("0a", "0"): H, ("1", "1"): H},
            "c2": {("0b", "0"): H, ("1", "1"): H},
            "c3": CORRELATED,
            "c4": ANTICORRELATED,
        },
    )


def _prop7_p() -> Behavior:
    """PR box plus a fresh observable measured alone in two new contexts, with different outcomes."""
    return Behavior.build(
        {"q1": B, "q3": B, "q4": B, "q5": B, "x": B},
        [
            ("c1", ("q1", "q3")),
            ("c2", ("q1", "q5")),
            ("c3", ("q4", "q3")),
            ("c4", ("q4", "q5")),
            ("e1", ("x",)),
            ("e2", ("x",)),
        ],
        {
            "c1": CORRELATED,
            "c2": CORRELATED,
            "c3": CORRELATED,
            "c4": ANTICORRELATED,
            "e1": {("0",): 1},
            "e2": {("1",): 1},
        },
    )


def _prop8_det() -> Behavior:
    return Behavior.build(
        {"q": ("u1", "u2")},
        [("c1", ("q",)), ("c2", ("q",))],
        {"c1": {("u1",): 1}, "c2": {("u2",): 1}},
    )


def _prop9_p() -> Behavior:
    return Behavior.build(
        {"q": B, "r": B},
        [("c1", ("q",)), ("c2", ("r",))],
        {"c1": UNIFORM, "c2": UNIFORM},
    )


_BUILDERS = {
    "EX1": _ex1,
    "EX1_MARGINAL": _ex1_marginal,
    "EX2_P": _ex2_p,
    "EX2_PPRIME": _ex2_pprime,
    "EX3_P": _ex3_p,
    "EX3_PPRIME": _ex3_pprime,
    "EX4_COIN": _coin,
    "EX4_DET": _ex4_det,
    "THM2_P1": _coin,
    "THM2_P2": _thm2_p2,
    "THM2_P3": _thm2_p3,
    "THM2_P4": _thm2_p4,
    "THM2_P5": _pr_box,
    "THM3_P": _thm3_p,
    # printed as identical to THM2_P3
    "THM3_PPRIME": _thm2_p3,
    "PROP1_TILDE": _prop1_tilde,
    "PROP2_P": _prop2_p,
    "PROP2_JOINED": lambda: join(_prop2_p(), ("a", "b"), "q"),
    "PROP4_EXPANDED": _prop4_expanded,
    "PROP5_SPLIT": _prop5_split,
    "PROP7_P": _prop7_p,
    "PROP8_DET": _prop8_det,
    "PROP9_P": _prop9_p,
}


@lru_cache(maxsize=None)
def _cached(name: str) -> Behavior:
    return _BUILDERS[name]()


def names() -> list[str]:
    return list(_BUILDERS)


def get(name: str) -> Behavior:
    if name not in _BUILDERS:
        raise KeyError(f"unknown corpus entry {name!r}")
    return _cached(name)


def corpus() -> dict[str, Behavior]:
    return {name: get(name) for name in _BUILDERS}
