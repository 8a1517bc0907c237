"""Finite measurement scenarios and behaviors with exact rational weights.

A behavior assigns one joint distribution to every context.  Observables
inside a context are always kept in lexicographic id order, and every
joint outcome tuple is keyed in that order, so two behaviors built from the
same data compare (and serialize) identically.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Outcome = tuple[str, ...]


class ModelError(ValueError):
    """Structural problem with a scenario, behavior or composite."""


class SearchBudgetExceeded(RuntimeError):
    pass


def parse_probability(value) -> Fraction:
    """Parse an exact probability: an int, ``"n"`` or ``"n/d"``.

    Decimal and float inputs are rejected so that no rounding can enter a
    decision.
    """
    if isinstance(value, bool):
        raise ModelError(f"not a probability: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if any(ch in text for ch in ".eE"):
            raise ModelError(f"decimal probabilities are not accepted: {value!r}")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ModelError(f"bad probability {value!r}") from exc
    raise ModelError(f"probabilities must be exact rationals, got {value!r}")


def format_fraction(p: Fraction) -> str:
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


@dataclass(frozen=True)
class Observable:
    id: str
    outcomes: tuple[str, ...]

    def __post_init__(self):
        if not self.outcomes:
            raise ModelError(f"observable {self.id!r} has no outcomes")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise ModelError(f"observable {self.id!r} has repeated outcome labels")


@dataclass(frozen=True)
class Context:
    id: str
    observables: tuple[str, ...]


@dataclass(frozen=True)
class Distribution:
    """Joint distribution over ``variables``; absent tuples have weight 0."""

    variables: tuple[str, ...]
    domains: tuple[tuple[str, ...], ...]
    weights: Mapping[Outcome, Fraction] = field(compare=False)

    def __post_init__(self):
        # zero entries are dropped so equality only sees the support
        object.__setattr__(
            self, "weights", {k: v for k, v in self.weights.items() if v != 0}
        )

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return (
            self.variables == other.variables
            and self.domains == other.domains
            and self.weights == other.weights
        )

    def __hash__(self):
        return hash((self.variables, self.domains, frozenset(self.weights.items())))

    def __getitem__(self, outcome: Outcome) -> Fraction:
        return self.weights.get(tuple(outcome), Fraction(0))

    def support(self) -> list[Outcome]:
        return [s for s in self.outcomes() if s in self.weights]

    def outcomes(self) -> Iterable[Outcome]:
        return itertools.product(*self.domains)

    def total(self) -> Fraction:
        return sum(self.weights.values(), Fraction(0))

    def vector(self) -> list[Fraction]:
        return [self[s] for s in self.outcomes()]


@dataclass(frozen=True)
class Composite:
    """A jointly measurable set of observables (kept sorted)."""

    members: tuple[str, ...]

    @classmethod
    def of(cls, members: Iterable[str] | str) -> "Composite":
        if isinstance(members, Composite):
            return members
        if isinstance(members, str):
            members = [members]
        members = tuple(sorted(set(members)))
        if not members:
            raise ModelError("a composite observable needs at least one member")
        return cls(members)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


class Scenario:
    """Observables, ordered contexts and the measured-in relation."""

    def __init__(self, observables: Iterable[Observable], contexts: Iterable[Context]):
        obs = {}
        for o in observables:
            if o.id in obs:
                raise ModelError(f"duplicate observable id {o.id!r}")
            obs[o.id] = o
        self.observables: dict[str, Observable] = dict(sorted(obs.items()))
        ctxs = []
        seen = set()
        for c in contexts:
            if c.id in seen:
                raise ModelError(f"duplicate context id {c.id!r}")
            seen.add(c.id)
            if not c.observables:
                raise ModelError(f"context {c.id!r} measures no observables")
            for q in c.observables:
                if q not in self.observables:
                    raise ModelError(f"context {c.id!r} references unknown observable {q!r}")
            if len(set(c.observables)) != len(c.observables):
                raise ModelError(f"context {c.id!r} lists an observable twice")
            ctxs.append(Context(c.id, tuple(sorted(c.observables))))
        self.contexts: tuple[Context, ...] = tuple(ctxs)
        self._by_id = {c.id: c for c in self.contexts}

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return self.observables == other.observables and self._by_id == other._by_id

    def __repr__(self):
        return f"Scenario({list(self.observables)}, {[c.id for c in self.contexts]})"

    @property
    def context_ids(self) -> list[str]:
        return [c.id for c in self.contexts]

    def context(self, cid: str) -> Context:
        try:
            return self._by_id[cid]
        except KeyError:
            raise ModelError(f"unknown context {cid!r}") from None

    def outcomes(self, q: str) -> tuple[str, ...]:
        try:
            return self.observables[q].outcomes
        except KeyError:
            raise ModelError(f"unknown observable {q!r}") from None

    def contexts_of(self, q: str) -> list[str]:
        return [c.id for c in self.contexts if q in c.observables]

    def contexts_containing(self, members: Iterable[str]) -> list[str]:
        members = set(members)
        return [c.id for c in self.contexts if members <= set(c.observables)]

    def relation(self) -> list[tuple[str, str]]:
        return [(q, c.id) for c in self.contexts for q in c.observables]

    def domain(self, cid: str) -> tuple[tuple[str, ...], ...]:
        return tuple(self.outcomes(q) for q in self.context(cid).observables)


class Behavior:
    """One distribution per context of a scenario.

    Construction only checks structure that the scenario itself needs;
    probabilistic well-formedness is reported by :func:`validate`.
    """

    def __init__(self, scenario: Scenario, tables: Mapping[str, Distribution]):
        self.scenario = scenario
        self.tables: dict[str, Distribution] = {}
        for c in scenario.contexts:
            if c.id not in tables:
                raise ModelError(f"no table for context {c.id!r}")
            self.tables[c.id] = tables[c.id]
        extra = set(tables) - set(self.tables)
        if extra:
            raise ModelError(f"tables for unknown contexts {sorted(extra)}")

    @classmethod
    def build(
        cls,
        observables: Mapping[str, Sequence[str]],
        contexts: Sequence[tuple[str, Sequence[str]]] | Mapping[str, Sequence[str]],
        tables: Mapping[str, Mapping[Sequence[str], object]],
    ) -> "Behavior":
        """Convenience constructor.

        ``tables[c]`` maps outcome tuples, listed in the order the context's
        observables were given, to probabilities.
        """
        if isinstance(contexts, Mapping):
            contexts = list(contexts.items())
        scenario = Scenario(
            [Observable(q, tuple(o)) for q, o in observables.items()],
            [Context(cid, tuple(obs)) for cid, obs in contexts],
        )
        given_order = {cid: tuple(obs) for cid, obs in contexts}
        dists = {}
        for ctx in scenario.contexts:
            order = given_order[ctx.id]
            perm = [order.index(q) for q in ctx.observables]
            weights: dict[Outcome, Fraction] = {}
            for key, p in tables.get(ctx.id, {}).items():
                key = (key,) if isinstance(key, str) else tuple(key)
                if len(key) != len(order):
                    raise ModelError(f"outcome {key} has wrong arity for context {ctx.id!r}")
                s = tuple(key[i] for i in perm)
                weights[s] = weights.get(s, Fraction(0)) + parse_probability(p)
            dists[ctx.id] = Distribution(ctx.observables, scenario.domain(ctx.id), weights)
        return cls(scenario, dists)

    def __eq__(self, other):
        if not isinstance(other, Behavior):
            return NotImplemented
        return self.scenario == other.scenario and self.tables == other.tables

    def __repr__(self):
        return f"Behavior({self.scenario!r})"

    @property
    def observables(self) -> dict[str, Observable]:
        return self.scenario.observables

    @property
    def contexts(self) -> tuple[Context, ...]:
        return self.scenario.contexts

    def table(self, cid: str) -> Distribution:
        return self.tables[cid]

    def prob(self, cid: str, outcome: Mapping[str, str]) -> Fraction:
        ctx = self.scenario.context(cid)
        return self.tables[cid][tuple(outcome[q] for q in ctx.observables)]

    def with_contexts_renamed(self, mapping: Mapping[str, str]) -> "Behavior":
        ren = lambda c: mapping.get(c, c)  # noqa: E731
        scenario = Scenario(
            self.observables.values(),
            [Context(ren(c.id), c.observables) for c in self.contexts],
        )
        return Behavior(scenario, {ren(c): t for c, t in self.tables.items()})


# -- structural predicates -------------------------------------------------


def validate(behavior: Behavior) -> list[str]:
    """Every violated invariant, each with a locus; empty when valid."""
    problems = []
    sc = behavior.scenario
    for ctx in sc.contexts:
        table = behavior.tables[ctx.id]
        expected = sc.domain(ctx.id)
        if table.variables != ctx.observables or table.domains != expected:
            problems.append(
                f"context {ctx.id}: domain mismatch, table covers {list(table.variables)} "
                f"but context measures {list(ctx.observables)}"
            )
            continue
        for s, p in table.weights.items():
            if len(s) != len(expected) or any(v not in dom for v, dom in zip(s, expected)):
                problems.append(f"context {ctx.id}: outcome {list(s)} outside the domain")
            if p < 0:
                problems.append(f"context {ctx.id}: negative weight {p} at {list(s)}")
        total = table.total()
        if total != 1:
            problems.append(f"context {ctx.id}: weights sum to {total}, not 1")
    return problems


def marginal(behavior: Behavior, composite, context: str) -> Distribution:
    """P(.|q, c): the marginal of the context table on a composite."""
    comp = Composite.of(composite)
    ctx = behavior.scenario.context(context)
    missing = [q for q in comp if q not in ctx.observables]
    if missing:
        raise ModelError(f"observable {missing[0]!r} is not measured in context {context!r}")
    idx = [ctx.observables.index(q) for q in comp]
    weights: dict[Outcome, Fraction] = {}
    for s, p in behavior.tables[context].weights.items():
        key = tuple(s[i] for i in idx)
        weights[key] = weights.get(key, Fraction(0)) + p
    domains = tuple(behavior.scenario.outcomes(q) for q in comp)
    return Distribution(comp.members, domains, weights)


def context_pairs(behavior: Behavior) -> Iterable[tuple[str, str]]:
    ids = behavior.scenario.context_ids
    return itertools.combinations(ids, 2)


def is_nondisturbing(behavior: Behavior) -> tuple[bool, tuple | None]:
    """Check agreement on every maximal overlap c & c'.

    Returns ``(True, None)`` or ``(False, (members, c, c'))`` for the first
    disagreeing pair in context order, with ``members`` a smallest
    sub-composite of the overlap on which the two marginals differ.
    """
    sc = behavior.scenario
    for c1, c2 in context_pairs(behavior):
        shared = sorted(set(sc.context(c1).observables) & set(sc.context(c2).observables))
        if not shared:
            continue
        if marginal(behavior, shared, c1) != marginal(behavior, shared, c2):
            return False, (_smallest_disagreement(behavior, shared, c1, c2), c1, c2)
    return True, None


def _smallest_disagreement(behavior: Behavior, shared: list[str], c1: str, c2: str) -> tuple[str, ...]:
    for k in range(1, len(shared) + 1):
        for sub in itertools.combinations(shared, k):
            if marginal(behavior, sub, c1) != marginal(behavior, sub, c2):
                return sub
    raise AssertionError("unreachable: the full overlap disagrees")


def is_consistently_connected(behavior: Behavior) -> tuple[bool, tuple | None]:
    sc = behavior.scenario
    for q in sc.observables:
        cs = sc.contexts_of(q)
        for c1, c2 in itertools.combinations(cs, 2):
            if marginal(behavior, [q], c1) != marginal(behavior, [q], c2):
                return False, (q, c1, c2)
    return True, None


def is_deterministic(behavior: Behavior) -> bool:
    return all(
        len(t.weights) == 1 and next(iter(t.weights.values())) == 1
        for t in behavior.tables.values()
    )


def connectedness_class(behavior: Behavior) -> str:
    """'ND' (nondisturbing), 'DCC' (disturbing, consistently connected) or 'IC'."""
    if is_nondisturbing(behavior)[0]:
        return "ND"
    if is_consistently_connected(behavior)[0]:
        return "DCC"
    return "IC"


# -- isomorphism -----------------------------------------------------------


@dataclass(frozen=True)
class Isomorphism:
    observables: dict[str, str]
    contexts: dict[str, str]
    outcomes: dict[str, dict[str, str]]

    def inverse(self) -> "Isomorphism":
        return Isomorphism(
            {v: k for k, v in self.observables.items()},
            {v: k for k, v in self.contexts.items()},
            {
                self.observables[q]: {v: u for u, v in h.items()}
                for q, h in self.outcomes.items()
            },
        )


def _sorted_weights(d: Distribution) -> tuple:
    return tuple(sorted(d.weights.values()))


def _context_signature(b: Behavior, cid: str) -> tuple:
    ctx = b.scenario.context(cid)
    return (
        len(ctx.observables),
        _sorted_weights(b.tables[cid]),
        tuple(sorted(len(b.scenario.outcomes(q)) for q in ctx.observables)),
    )


def _observable_signature(b: Behavior, q: str) -> tuple:
    per_ctx = sorted(
        (_context_signature(b, c), _sorted_weights(marginal(b, [q], c)))
        for c in b.scenario.contexts_of(q)
    )
    return (len(b.scenario.outcomes(q)), tuple(per_ctx))


def check_isomorphism(p1: Behavior, p2: Behavior, iso: Isomorphism) -> bool:
    """Check the defining equation P1(s|c) = P2(h(s)|g(c)) directly."""
    s1, s2 = p1.scenario, p2.scenario
    f, g, h = iso.observables, iso.contexts, iso.outcomes
    if sorted(f) != sorted(s1.observables) or sorted(f.values()) != sorted(s2.observables):
        return False
    if sorted(g) != sorted(s1.context_ids) or sorted(g.values()) != sorted(s2.context_ids):
        return False
    for q, hq in h.items():
        if sorted(hq) != sorted(s1.outcomes(q)) or sorted(hq.values()) != sorted(s2.outcomes(f[q])):
            return False
    for ctx in s1.contexts:
        ctx2 = s2.context(g[ctx.id])
        if sorted(f[q] for q in ctx.observables) != list(ctx2.observables):
            return False
        t1, t2 = p1.tables[ctx.id], p2.tables[ctx2.id]
        if len(t1.weights) != len(t2.weights):
            return False
        pos = [ctx.observables.index(r) for r in (iso.inverse().observables[x] for x in ctx2.observables)]
        for s, p in t1.weights.items():
            image = tuple(h[ctx.observables[i]][s[i]] for i in pos)
            if t2[image] != p:
                return False
    return True


def find_isomorphism(p1: Behavior, p2: Behavior, node_budget: int = 10**7) -> Isomorphism | None:
    """Exhaustive search for (f, g, h) mapping p1 onto p2.

    Candidates are pruned by per-observable and per-context invariants and by
    marginal compatibility of outcome maps.  Raises SearchBudgetExceeded when
    more than ``node_budget`` search nodes are visited.
    """
    s1, s2 = p1.scenario, p2.scenario
    if len(s1.observables) != len(s2.observables) or len(s1.contexts) != len(s2.contexts):
        return None
    nodes = [0]

    def tick():
        nodes[0] += 1
        if nodes[0] > node_budget:
            raise SearchBudgetExceeded(f"isomorphism search exceeded {node_budget} nodes")

    sig1 = {q: _observable_signature(p1, q) for q in s1.observables}
    sig2 = {q: _observable_signature(p2, q) for q in s2.observables}
    if sorted(sig1.values()) != sorted(sig2.values()):
        return None
    csig1 = {c: _context_signature(p1, c) for c in s1.context_ids}
    csig2 = {c: _context_signature(p2, c) for c in s2.context_ids}
    if sorted(csig1.values()) != sorted(csig2.values()):
        return None

    obs1 = sorted(s1.observables, key=lambda q: (sum(1 for r in sig2.values() if r == sig1[q]), q))
    f: dict[str, str] = {}

    def search_f(i):
        if i == len(obs1):
            return search_g()
        q = obs1[i]
        for r in s2.observables:
            if r in f.values() or sig2[r] != sig1[q]:
                continue
            tick()
            f[q] = r
            if _partial_relation_ok(q):
                found = search_f(i + 1)
                if found:
                    return found
            del f[q]
        return None

    def _partial_relation_ok(q):
        # every context through q must have an image context covering f(q)
        for c in s1.contexts_of(q):
            mapped = {f[x] for x in s1.context(c).observables if x in f}
            if not any(mapped <= set(s2.context(d).observables) for d in s2.context_ids
                       if csig2[d] == csig1[c]):
                return False
        return True

    g: dict[str, str] = {}
    ctx1 = s1.context_ids

    def search_g(i=0):
        if i == len(ctx1):
            return search_h()
        c = ctx1[i]
        image = sorted(f[q] for q in s1.context(c).observables)
        for d in s2.context_ids:
            if d in g.values() or csig2[d] != csig1[c] or list(s2.context(d).observables) != image:
                continue
            tick()
            g[c] = d
            found = search_g(i + 1)
            if found:
                return found
            del g[c]
        return None

    def candidate_maps(q):
        r = f[q]
        out1, out2 = s1.outcomes(q), s2.outcomes(r)
        m1 = {c: marginal(p1, [q], c) for c in s1.contexts_of(q)}
        m2 = {c: marginal(p2, [r], g[c]) for c in m1}
        allowed = {
            u: [v for v in out2 if all(m1[c][(u,)] == m2[c][(v,)] for c in m1)]
            for u in out1
        }
        return out1, allowed

    h: dict[str, dict[str, str]] = {}
    order = sorted(s1.observables, key=lambda q: len(s1.outcomes(q)))

    def context_ok(c):
        ctx = s1.context(c)
        d = s2.context(g[c])
        pos = {x: i for i, x in enumerate(ctx.observables)}
        back = {f[x]: x for x in ctx.observables}
        t1, t2 = p1.tables[c], p2.tables[d.id]
        for s, p in t1.weights.items():
            image = tuple(h[back[y]][s[pos[back[y]]]] for y in d.observables)
            if t2[image] != p:
                return False
        return True

    def search_h(i=0):
        if i == len(order):
            return Isomorphism(dict(f), dict(g), {q: dict(m) for q, m in h.items()})
        q = order[i]
        out1, allowed = candidate_maps(q)
        ready = [c for c in s1.contexts_of(q)
                 if all(x in h or x == q for x in s1.context(c).observables)]

        def assign(j, used):
            if j == len(out1):
                if all(context_ok(c) for c in ready):
                    return search_h(i + 1)
                return None
            u = out1[j]
            for v in allowed[u]:
                if v in used:
                    continue
                tick()
                h.setdefault(q, {})[u] = v
                found = assign(j + 1, used | {v})
                if found:
                    return found
                del h[q][u]
            return None

        found = assign(0, frozenset())
        h.pop(q, None)
        return found

    return search_f(0)
