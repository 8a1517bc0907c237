"""Contextuality deciders.

Each decider reduces a behavior to one exact feasibility question.  Coupling
variables are restricted to the product of per-context supports: any atom
outside it must carry zero mass, so dropping it changes nothing but size.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .lp import LinearSystem, feasible, fm_feasible, max_agreement
from .model import (
    Behavior,
    format_fraction,
    is_consistently_connected,
    is_nondisturbing,
    marginal,
    find_isomorphism,
)
from .transforms import BudgetExceeded, canonical_binary

DEFAULT_ATOM_BUDGET = 2**20

NONCONTEXTUAL = "noncontextual"
CONTEXTUAL = "contextual"
UNDEFINED = "undefined"

DISTURBING = "disturbing-for-KS"
NON_BINARY = "non-binary-for-BCbD"
NON_CANONICAL = "non-canonical-for-CBCbD"


@dataclass
class Verdict:
    extension: str
    status: str
    reason: str | None = None
    witness: dict | None = None
    system: LinearSystem | None = field(default=None, repr=False)
    space: object = field(default=None, repr=False)

    def to_json(self, with_witness: bool = False) -> dict:
        out = {"extension": self.extension, "status": self.status}
        if self.reason:
            out["reason"] = self.reason
        if with_witness and self.witness is not None:
            out["witness"] = self.witness
        return out


# -- coupling and global-assignment spaces -------------------------------------


@dataclass
class CouplingSpace:
    """Atoms are tuples with one support point of P(.|c) per context."""

    behavior: Behavior
    contexts: list[str]
    supports: dict[str, list[tuple]]
    atoms: list[tuple[tuple, ...]]
    pairs: list[tuple[str, str]]
    nominal_atoms: int
    nominal_equalities: int
    system: LinearSystem

    def value(self, atom, q: str, c: str) -> str:
        ctx = self.behavior.scenario.context(c)
        return atom[self.contexts.index(c)][ctx.observables.index(q)]

    def assignment(self, atom) -> dict[str, dict[str, str]]:
        sc = self.behavior.scenario
        return {
            c: dict(zip(sc.context(c).observables, s)) for c, s in zip(self.contexts, atom)
        }


def _check_budget(count: int, budget: int, what: str) -> None:
    if count > budget:
        raise BudgetExceeded(f"{what} needs {count} atoms, budget is {budget}")


def build_coupling_space(behavior: Behavior, budget: int = DEFAULT_ATOM_BUDGET) -> CouplingSpace:
    sc = behavior.scenario
    contexts = sc.context_ids
    supports = {c: behavior.tables[c].support() for c in contexts}
    count = math.prod(len(supports[c]) for c in contexts)
    _check_budget(count, budget, "coupling space")
    atoms = list(itertools.product(*(supports[c] for c in contexts)))
    pairs = [(q, c.id) for c in sc.contexts for q in c.observables]
    nominal_atoms = math.prod(len(sc.outcomes(q)) for q, _ in pairs)
    nominal_equalities = sum(math.prod(len(d) for d in sc.domain(c)) for c in contexts)
    system = LinearSystem(len(atoms))
    system.labels = [f"x{i}" for i in range(len(atoms))]
    for k, c in enumerate(contexts):
        for s in supports[c]:
            system.add_sparse({i: 1 for i, a in enumerate(atoms) if a[k] == s},
                              behavior.tables[c][s])
    return CouplingSpace(behavior, contexts, supports, atoms, pairs, nominal_atoms,
                         nominal_equalities, system)


def _copy_positions(space: CouplingSpace, q: str) -> list[tuple[int, int]]:
    sc = space.behavior.scenario
    return [(space.contexts.index(c), sc.context(c).observables.index(q)) for c in sc.contexts_of(q)]


def add_multimaximal(space: CouplingSpace) -> None:
    """Pairwise agreement pinned at its maximum, for every observable and context pair."""
    b = space.behavior
    for q in b.scenario.observables:
        cs = b.scenario.contexts_of(q)
        for c1, c2 in itertools.combinations(cs, 2):
            k1, i1 = space.contexts.index(c1), b.scenario.context(c1).observables.index(q)
            k2, i2 = space.contexts.index(c2), b.scenario.context(c2).observables.index(q)
            target = max_agreement(marginal(b, [q], c1), marginal(b, [q], c2))
            space.system.add_sparse(
                {j: 1 for j, a in enumerate(space.atoms) if a[k1][i1] == a[k2][i2]}, target
            )


def add_maximal(space: CouplingSpace) -> None:
    """Per-outcome all-copies-agree probability pinned at min over contexts."""
    b = space.behavior
    for q in b.scenario.observables:
        cs = b.scenario.contexts_of(q)
        if len(cs) < 2:
            continue
        pos = _copy_positions(space, q)
        margs = [marginal(b, [q], c) for c in cs]
        for u in b.scenario.outcomes(q):
            target = min(m[(u,)] for m in margs)
            space.system.add_sparse(
                {j: 1 for j, a in enumerate(space.atoms) if all(a[k][i] == u for k, i in pos)},
                target,
            )


def _coupling_witness(space: CouplingSpace, x) -> dict:
    return {
        "atoms": [
            {"assignment": space.assignment(a), "p": format_fraction(v)}
            for a, v in zip(space.atoms, x) if v != 0
        ]
    }


def _solve_coupling(behavior: Behavior, extension: str, constrain: Callable, budget: int) -> Verdict:
    space = build_coupling_space(behavior, budget)
    constrain(space)
    res = feasible(space.system)
    if res.feasible:
        return Verdict(extension, NONCONTEXTUAL, witness=_coupling_witness(space, res.witness),
                       system=space.system, space=(space, res.witness))
    return Verdict(extension, CONTEXTUAL, system=space.system, space=(space, None))


def cbd1_decide(behavior: Behavior, budget: int = DEFAULT_ATOM_BUDGET) -> Verdict:
    return _solve_coupling(behavior, "cbd1", add_maximal, budget)


def cbd2_decide(behavior: Behavior, budget: int = DEFAULT_ATOM_BUDGET) -> Verdict:
    return _solve_coupling(behavior, "cbd2", add_multimaximal, budget)


def binary_cbd2_decide(behavior: Behavior, budget: int = DEFAULT_ATOM_BUDGET) -> Verdict:
    for q, o in behavior.observables.items():
        if len(o.outcomes) != 2:
            return Verdict("bcbd2", UNDEFINED, reason=NON_BINARY,
                           witness={"observable": q, "outcomes": len(o.outcomes)})
    v = cbd2_decide(behavior, budget)
    v.extension = "bcbd2"
    return v


def is_canonical_binary(behavior: Behavior, join_closure: bool = False) -> bool:
    if any(len(o.outcomes) != 2 for o in behavior.observables.values()):
        return False
    return find_isomorphism(behavior, canonical_binary(behavior, join_closure=join_closure)) is not None


def canonical_binary_cbd2_decide(behavior: Behavior, mode: str = "lifted",
                                 budget: int = DEFAULT_ATOM_BUDGET,
                                 join_closure: bool = False) -> Verdict:
    """``join_closure`` iterates the canonical form to a fixed point (off by default)."""
    ext = f"cbcbd2-{mode}"
    if mode == "strict":
        if not is_canonical_binary(behavior, join_closure):
            return Verdict(ext, UNDEFINED, reason=NON_CANONICAL)
        target = behavior
    elif mode == "lifted":
        target = canonical_binary(behavior, join_closure=join_closure)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    v = cbd2_decide(target, budget)
    v.extension = ext
    return v


# -- KS ------------------------------------------------------------------------


@dataclass
class AssignmentSpace:
    behavior: Behavior
    observables: list[str]
    atoms: list[tuple[str, ...]]
    system: LinearSystem
    nominal_atoms: int = 0


def build_assignment_space(behavior: Behavior, budget: int = DEFAULT_ATOM_BUDGET) -> AssignmentSpace:
    """Global assignments whose restriction to every context lies in that context's support."""
    sc = behavior.scenario
    obs = list(sc.observables)
    pos = {q: i for i, q in enumerate(obs)}
    supports = {c.id: set(behavior.tables[c.id].weights) for c in sc.contexts}
    # contexts become checkable once their last observable (in obs order) is assigned
    closing: dict[int, list] = {}
    for c in sc.contexts:
        last = max(pos[q] for q in c.observables)
        closing.setdefault(last, []).append(c)
    atoms: list[tuple[str, ...]] = []
    current: list[str] = []

    def extend(i):
        if i == len(obs):
            atoms.append(tuple(current))
            _check_budget(len(atoms), budget, "global assignment space")
            return
        for u in sc.outcomes(obs[i]):
            current.append(u)
            if all(tuple(current[pos[q]] for q in c.observables) in supports[c.id]
                   for c in closing.get(i, [])):
                extend(i + 1)
            current.pop()

    extend(0)
    system = LinearSystem(len(atoms))
    for c in sc.contexts:
        idx = [pos[q] for q in c.observables]
        for s, p in behavior.tables[c.id].weights.items():
            system.add_sparse(
                {j: 1 for j, a in enumerate(atoms) if tuple(a[i] for i in idx) == s}, p
            )
    nominal = math.prod(len(sc.outcomes(q)) for q in obs)
    return AssignmentSpace(behavior, obs, atoms, system, nominal)


def ks_decide(behavior: Behavior, budget: int = DEFAULT_ATOM_BUDGET) -> Verdict:
    nd, where = is_nondisturbing(behavior)
    if not nd:
        members, c1, c2 = where
        return Verdict("ks", UNDEFINED, reason=DISTURBING,
                       witness={"observables": list(members), "contexts": [c1, c2]})
    space = build_assignment_space(behavior, budget)
    res = feasible(space.system)
    if res.feasible:
        witness = {
            "atoms": [
                {"assignment": dict(zip(space.observables, a)), "p": format_fraction(v)}
                for a, v in zip(space.atoms, res.witness) if v != 0
            ]
        }
        return Verdict("ks", NONCONTEXTUAL, witness=witness, system=space.system,
                       space=(space, res.witness))
    return Verdict("ks", CONTEXTUAL, system=space.system, space=(space, None))


# -- blunt extensions --------------------------------------------------------------


BLUNT = {"dc", "dnc", "dccc"}


def blunt_decide(behavior: Behavior, variant: str, budget: int = DEFAULT_ATOM_BUDGET) -> Verdict:
    variant = variant.lower()
    if variant not in BLUNT:
        raise ValueError(f"unknown blunt variant {variant!r}")
    if is_nondisturbing(behavior)[0]:
        v = ks_decide(behavior, budget)
        v.extension = variant
        return v
    if variant == "dc":
        status = CONTEXTUAL
    elif variant == "dnc":
        status = NONCONTEXTUAL
    else:
        status = CONTEXTUAL if is_consistently_connected(behavior)[0] else NONCONTEXTUAL
    return Verdict(variant, status, reason="disturbing")


# -- diagnostics -----------------------------------------------------------------


def direct_influence(space: CouplingSpace, witness, q: str, c1: str, c2: str) -> Fraction:
    """Probability, under a coupling, that the copies of ``q`` in ``c1`` and ``c2`` differ."""
    if c1 == c2:
        raise ValueError("direct influence needs two distinct contexts")
    holders = space.behavior.scenario.contexts_of(q)
    if c1 not in holders or c2 not in holders:
        raise ValueError(f"{q!r} is not measured in both {c1!r} and {c2!r}")
    return sum(
        (x for a, x in zip(space.atoms, witness)
         if space.value(a, q, c1) != space.value(a, q, c2)),
        Fraction(0),
    )


def certify_by_elimination(verdict: Verdict) -> bool:
    """Re-decide a verdict's LP with the elimination oracle; True when both routes agree."""
    if verdict.system is None:
        raise ValueError("verdict carries no linear system")
    return fm_feasible(verdict.system) == (verdict.status == NONCONTEXTUAL)


EXTENSIONS: dict[str, Callable[[Behavior], Verdict]] = {
    "ks": ks_decide,
    "cbd1": cbd1_decide,
    "cbd2": cbd2_decide,
    "bcbd2": binary_cbd2_decide,
    "cbcbd2-strict": lambda b, **kw: canonical_binary_cbd2_decide(b, "strict", **kw),
    "cbcbd2-lifted": lambda b, **kw: canonical_binary_cbd2_decide(b, "lifted", **kw),
    "dc": lambda b, **kw: blunt_decide(b, "dc", **kw),
    "dnc": lambda b, **kw: blunt_decide(b, "dnc", **kw),
    "dccc": lambda b, **kw: blunt_decide(b, "dccc", **kw),
}


def decide(behavior: Behavior, extension: str, **kwargs) -> Verdict:
    try:
        fn = EXTENSIONS[extension]
    except KeyError:
        raise ValueError(f"unknown extension {extension!r}; choose from {sorted(EXTENSIONS)}") from None
    return fn(behavior, **kwargs)
