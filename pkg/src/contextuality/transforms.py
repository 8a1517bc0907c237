"""Transformations between behaviors.

Every function returns a new Behavior and leaves its input untouched.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .model import (
    Behavior,
    Composite,
    Context,
    Distribution,
    ModelError,
    Observable,
    Scenario,
    marginal,
)

JOIN_SEP = "::join::"
SPLIT_SEP = "::split::"
DEFAULT_CANONICAL_BUDGET = 2**16


class BudgetExceeded(RuntimeError):
    pass


def _rebuild(observables: Iterable[Observable], contexts: Sequence[tuple[str, Sequence[str]]],
             tables: Mapping[str, Mapping[tuple, Fraction]]) -> Behavior:
    """Assemble a behavior from tables keyed in each context's *given* order."""
    scenario = Scenario(list(observables), [Context(cid, tuple(obs)) for cid, obs in contexts])
    order = dict(contexts)
    dists = {}
    for ctx in scenario.contexts:
        perm = [list(order[ctx.id]).index(q) for q in ctx.observables]
        weights: dict[tuple, Fraction] = {}
        for s, p in tables[ctx.id].items():
            key = tuple(s[i] for i in perm)
            weights[key] = weights.get(key, Fraction(0)) + p
        dists[ctx.id] = Distribution(ctx.observables, scenario.domain(ctx.id), weights)
    return Behavior(scenario, dists)


def _tables(b: Behavior) -> dict[str, dict[tuple, Fraction]]:
    return {cid: dict(t.weights) for cid, t in b.tables.items()}


def _contexts(b: Behavior) -> list[tuple[str, tuple[str, ...]]]:
    return [(c.id, c.observables) for c in b.contexts]


# -- marginalization -------------------------------------------------------


@dataclass(frozen=True)
class SubscenarioSpec:
    """The kept part of the measured-in relation."""

    pairs: frozenset[tuple[str, str]]

    @classmethod
    def of(cls, pairs: Iterable[tuple[str, str]]) -> "SubscenarioSpec":
        return cls(frozenset((q, c) for q, c in pairs))

    @classmethod
    def keep_contexts(cls, behavior: Behavior, contexts: Iterable[str]) -> "SubscenarioSpec":
        keep = set(contexts)
        return cls.of((q, c) for q, c in behavior.scenario.relation() if c in keep)

    @classmethod
    def drop_observables(cls, behavior: Behavior, observables: Iterable[str]) -> "SubscenarioSpec":
        drop = set(observables)
        return cls.of((q, c) for q, c in behavior.scenario.relation() if q not in drop)


def marginalize(behavior: Behavior, spec: SubscenarioSpec) -> Behavior:
    sc = behavior.scenario
    relation = set(sc.relation())
    unknown = sorted(spec.pairs - relation)
    if unknown:
        q, c = unknown[0]
        raise ModelError(f"({q}, {c}) is not in the measured-in relation")
    kept_obs = {q for q, _ in spec.pairs}
    contexts = []
    tables = {}
    for ctx in sc.contexts:
        obs = tuple(q for q in ctx.observables if (q, ctx.id) in spec.pairs)
        if not obs:
            continue
        contexts.append((ctx.id, obs))
        tables[ctx.id] = dict(marginal(behavior, obs, ctx.id).weights)
    return _rebuild([o for q, o in sc.observables.items() if q in kept_obs], contexts, tables)


def restrict_contexts(behavior: Behavior, contexts: Iterable[str]) -> Behavior:
    return marginalize(behavior, SubscenarioSpec.keep_contexts(behavior, contexts))


def drop_observables(behavior: Behavior, observables: Iterable[str]) -> Behavior:
    return marginalize(behavior, SubscenarioSpec.drop_observables(behavior, observables))


# -- coarsening and post-processing ----------------------------------------


def _image_outcomes(domain: Sequence, f: Callable, declared: Sequence[str] | None) -> tuple[str, ...]:
    image = []
    for u in domain:
        v = f(u)
        if v not in image:
            image.append(v)
    if declared is None:
        return tuple(image)
    declared = tuple(declared)
    missing = [v for v in declared if v not in image]
    if missing:
        raise ModelError(f"map is not surjective: no outcome maps to {missing[0]!r}")
    stray = [v for v in image if v not in declared]
    if stray:
        raise ModelError(f"map produces undeclared outcome {stray[0]!r}")
    return declared


def _as_function(mapping, name: str) -> Callable:
    if callable(mapping):
        return mapping

    def f(u):
        try:
            return mapping[u]
        except KeyError:
            raise ModelError(f"map for {name} is undefined on {u!r}") from None

    return f


def coarsen(behavior: Behavior, q: str, mapping, outcomes: Sequence[str] | None = None) -> Behavior:
    """Replace ``q`` by its image under ``mapping`` (outcome -> outcome)."""
    sc = behavior.scenario
    f = _as_function(mapping, q)
    new_out = _image_outcomes(sc.outcomes(q), f, outcomes)
    observables = [Observable(o.id, new_out) if o.id == q else o for o in sc.observables.values()]
    tables = {}
    for ctx in sc.contexts:
        i = ctx.observables.index(q) if q in ctx.observables else None
        weights: dict[tuple, Fraction] = {}
        for s, p in behavior.tables[ctx.id].weights.items():
            if i is not None:
                s = s[:i] + (f(s[i]),) + s[i + 1:]
            weights[s] = weights.get(s, Fraction(0)) + p
        tables[ctx.id] = weights
    return _rebuild(observables, _contexts(behavior), tables)


def post_process(behavior: Behavior, composite, mapping, new_id: str,
                 outcomes: Sequence[str] | None = None) -> Behavior:
    """Append ``new_id = mapping(values of composite)`` in every context measuring the composite.

    ``mapping`` takes a tuple of outcomes, ordered as the composite's sorted
    member ids.
    """
    sc = behavior.scenario
    comp = Composite.of(composite)
    for q in comp:
        sc.outcomes(q)
    if new_id in sc.observables:
        raise ModelError(f"observable id {new_id!r} already exists")
    if not sc.contexts_containing(comp.members):
        raise ModelError(f"composite {list(comp.members)} is not jointly measured in any context")
    f = _as_function(mapping, str(list(comp.members)))
    domain = list(itertools.product(*(sc.outcomes(q) for q in comp)))
    new_out = _image_outcomes(domain, f, outcomes)
    observables = list(sc.observables.values()) + [Observable(new_id, new_out)]
    contexts, tables = [], {}
    for ctx in sc.contexts:
        weights = dict(behavior.tables[ctx.id].weights)
        if set(comp) <= set(ctx.observables):
            idx = [ctx.observables.index(q) for q in comp]
            weights = {s + (f(tuple(s[i] for i in idx)),): p for s, p in weights.items()}
            contexts.append((ctx.id, ctx.observables + (new_id,)))
        else:
            contexts.append((ctx.id, ctx.observables))
        tables[ctx.id] = weights
    return _rebuild(observables, contexts, tables)


def join_label(values: Sequence[str]) -> str:
    return "(" + ",".join(values) + ")"


def join(behavior: Behavior, composite, new_id: str | None = None) -> Behavior:
    """Post-process by the identity map; outcome labels look like ``(0,1)``."""
    comp = Composite.of(composite)
    new_id = new_id or JOIN_SEP.join(comp.members)
    return post_process(behavior, comp, join_label, new_id)


# -- product, relabeling, deterministic expansion ---------------------------


def product(p1: Behavior, p2: Behavior, auto_prefix: bool = False) -> Behavior:
    """Independent composition; context ``(c1, c2)`` gets id ``c1*c2``."""
    if auto_prefix:
        p1 = rename_observables(p1, {q: f"L.{q}" for q in p1.observables})
        p2 = rename_observables(p2, {q: f"R.{q}" for q in p2.observables})
    clash = sorted(set(p1.observables) & set(p2.observables))
    if clash:
        raise ModelError(f"observable id {clash[0]!r} occurs in both factors")
    observables = list(p1.observables.values()) + list(p2.observables.values())
    contexts, tables = [], {}
    for c1 in p1.contexts:
        for c2 in p2.contexts:
            cid = f"{c1.id}*{c2.id}"
            contexts.append((cid, c1.observables + c2.observables))
            tables[cid] = {
                s1 + s2: w1 * w2
                for s1, w1 in p1.tables[c1.id].weights.items()
                for s2, w2 in p2.tables[c2.id].weights.items()
            }
    return _rebuild(observables, contexts, tables)


def rename_observables(behavior: Behavior, mapping: Mapping[str, str]) -> Behavior:
    ren = lambda q: mapping.get(q, q)  # noqa: E731
    observables = [Observable(ren(o.id), o.outcomes) for o in behavior.observables.values()]
    contexts = [(c.id, tuple(ren(q) for q in c.observables)) for c in behavior.contexts]
    return _rebuild(observables, contexts, _tables(behavior))


def rename_contexts(behavior: Behavior, mapping: Mapping[str, str]) -> Behavior:
    return behavior.with_contexts_renamed(mapping)


def rename_outcomes(behavior: Behavior, q: str, mapping: Mapping[str, str]) -> Behavior:
    """Bijective relabeling of one observable's outcomes."""
    out = behavior.scenario.outcomes(q)
    image = [mapping.get(u, u) for u in out]
    if len(set(image)) != len(image):
        raise ModelError(f"outcome relabeling of {q!r} is not injective")
    return coarsen(behavior, q, lambda u: mapping.get(u, u), image)


def relabel(behavior: Behavior, q: str, partition: Sequence[Iterable[str]],
            new_ids: Sequence[str]) -> Behavior:
    """Split ``q`` into one observable per block of contexts."""
    sc = behavior.scenario
    blocks = [set(b) for b in partition]
    if len(blocks) != len(new_ids) or len(set(new_ids)) != len(new_ids):
        raise ModelError("relabeling needs one distinct new id per block")
    covered = [c for b in blocks for c in b]
    if len(covered) != len(set(covered)):
        raise ModelError("relabeling blocks overlap")
    if set(covered) != set(sc.contexts_of(q)):
        raise ModelError(f"relabeling blocks must cover exactly the contexts of {q!r}")
    taken = set(sc.observables) - {q}
    for r in new_ids:
        if r in taken:
            raise ModelError(f"observable id {r!r} already exists")
    out = sc.outcomes(q)
    observables = [o for o in sc.observables.values() if o.id != q]
    observables += [Observable(r, out) for r in new_ids]
    owner = {c: r for b, r in zip(blocks, new_ids) for c in b}
    contexts = [
        (c.id, tuple(owner[c.id] if x == q else x for x in c.observables)) for c in sc.contexts
    ]
    return _rebuild(observables, contexts, _tables(behavior))


def add_deterministic(behavior: Behavior, q: str, c: str, u: str,
                      outcomes: Sequence[str] | None = None) -> Behavior:
    """Adjoin ``q`` to context ``c`` with the sure outcome ``u``."""
    sc = behavior.scenario
    ctx = sc.context(c)
    if q in ctx.observables:
        raise ModelError(f"{q!r} is already measured in context {c!r}")
    if q in sc.observables:
        if outcomes is not None and tuple(outcomes) != sc.outcomes(q):
            raise ModelError(f"declared outcomes differ from those of existing {q!r}")
        obs_q = sc.observables[q]
        observables = list(sc.observables.values())
    else:
        if outcomes is None:
            raise ModelError(f"new observable {q!r} needs a declared outcome set")
        obs_q = Observable(q, tuple(outcomes))
        observables = list(sc.observables.values()) + [obs_q]
    if u not in obs_q.outcomes:
        raise ModelError(f"{u!r} is not an outcome of {q!r}")
    contexts = [(x.id, x.observables + ((q,) if x.id == c else ())) for x in sc.contexts]
    tables = _tables(behavior)
    tables[c] = {s + (u,): p for s, p in tables[c].items()}
    return _rebuild(observables, contexts, tables)


# -- canonical binary representation ----------------------------------------


def closed_composites(behavior: Behavior) -> list[tuple[tuple[str, ...], tuple[str, ...]]]:
    """Composites of size >= 2 that equal the overlap of the contexts containing them.

    Returns ``(members, context ids)`` pairs.  Any composite measured in
    several contexts has such a closure with the same context set.
    """
    sc = behavior.scenario
    sets = {c.id: frozenset(c.observables) for c in sc.contexts}
    found: dict[frozenset, None] = {}
    frontier = set()
    for c1, c2 in itertools.combinations(sc.context_ids, 2):
        k = sets[c1] & sets[c2]
        if len(k) >= 2:
            frontier.add(k)
    while frontier:
        nxt = set()
        for k in frontier:
            if k in found:
                continue
            found[k] = None
            for c in sc.context_ids:
                k2 = k & sets[c]
                if len(k2) >= 2 and k2 != k:
                    holders = [d for d in sc.context_ids if k2 <= sets[d]]
                    if len(holders) >= 2:
                        nxt.add(k2)
        frontier = nxt
    result = []
    for k in sorted(found, key=lambda s: (len(s), sorted(s))):
        holders = tuple(c for c in sc.context_ids if k <= sets[c])
        result.append((tuple(sorted(k)), holders))
    return result


def _split_candidates(values: list[tuple]) -> Iterable[frozenset]:
    """Nonempty proper subsets of ``values`` modulo complement."""
    first, rest = values[0], values[1:]
    for r in range(0, len(rest)):
        for combo in itertools.combinations(rest, r):
            yield frozenset((first,) + combo)


def _column(behavior: Behavior, ctx: Context, members: Sequence[str], f) -> dict[tuple, str]:
    idx = [ctx.observables.index(q) for q in members]
    return {s: f(tuple(s[i] for i in idx)) for s in behavior.tables[ctx.id].weights}


def canonical_binary(behavior: Behavior, budget: int = DEFAULT_CANONICAL_BUDGET,
                     join_closure: bool = False) -> Behavior:
    """Canonical binary representation.

    Joins every composite measured in two or more contexts, adds every binary
    split of each join and of each many-valued observable, then keeps only the
    binary observables.  Splits are taken over the values that actually occur
    and are skipped when they duplicate (almost surely, in the same contexts)
    an observable already present; see the decisions ledger.
    """
    result = _canonical_once(behavior, budget)
    if join_closure:
        for _ in range(len(result.observables) + 1):
            nxt = _canonical_once(result, budget)
            if set(nxt.observables) == set(result.observables):
                break
            result = nxt
    return result


def _canonical_once(behavior: Behavior, budget: int) -> Behavior:
    sc = behavior.scenario
    # per-context extra columns: list of (new observable id, {support tuple: label})
    extra: dict[str, list[tuple[str, dict]]] = {c.id: [] for c in sc.contexts}
    binary: list[tuple[str, tuple[str, ...]]] = []  # (id, contexts)
    columns: dict[str, dict[str, dict]] = {}  # obs id -> context -> {support tuple: label}
    new_obs: list[Observable] = []
    generated = 0

    for q, o in sc.observables.items():
        if len(o.outcomes) == 2:
            holders = tuple(sc.contexts_of(q))
            binary.append((q, holders))
            columns[q] = {
                c: _column(behavior, sc.context(c), (q,), lambda v: v[0]) for c in holders
            }

    sources = [((q,), tuple(sc.contexts_of(q)))
               for q, o in sc.observables.items() if len(o.outcomes) > 2]
    sources += closed_composites(behavior)

    for members, holders in sources:
        reached = []
        for c in holders:
            for s in marginal(behavior, members, c).support():
                if s not in reached:
                    reached.append(s)
        if len(reached) < 2:
            continue
        n_splits = 2 ** (len(reached) - 1) - 1
        if generated + n_splits > budget:
            raise BudgetExceeded(
                f"canonical binary budget of {budget} observables exceeded at composite "
                f"{list(members)} ({n_splits} splits)"
            )
        generated += n_splits
        base = members[0] if len(members) == 1 else JOIN_SEP.join(members)
        for subset in _split_candidates(reached):
            indicator = lambda v, subset=subset: "1" if v in subset else "0"  # noqa: E731
            cols = {c: _column(behavior, sc.context(c), members, indicator) for c in holders}
            if _duplicate(behavior, cols, holders, binary, columns):
                continue
            label = "|".join(v[0] if len(members) == 1 else join_label(v)
                             for v in sorted(subset))
            new_id = f"{base}{SPLIT_SEP}{label}"
            if new_id in sc.observables:
                raise ModelError(f"generated id {new_id!r} collides with an existing observable")
            new_obs.append(Observable(new_id, ("0", "1")))
            binary.append((new_id, holders))
            columns[new_id] = cols
            for c in holders:
                extra[c].append((new_id, cols[c]))

    keep = {q for q, _ in binary}
    observables = [o for o in sc.observables.values() if o.id in keep] + new_obs
    contexts, tables = [], {}
    for ctx in sc.contexts:
        base_idx = [i for i, q in enumerate(ctx.observables) if q in keep]
        names = tuple(ctx.observables[i] for i in base_idx) + tuple(n for n, _ in extra[ctx.id])
        if not names:
            continue
        weights: dict[tuple, Fraction] = {}
        for s, p in behavior.tables[ctx.id].weights.items():
            key = tuple(s[i] for i in base_idx) + tuple(col[s] for _, col in extra[ctx.id])
            weights[key] = weights.get(key, Fraction(0)) + p
        contexts.append((ctx.id, names))
        tables[ctx.id] = weights
    return _rebuild(observables, contexts, tables)


def _duplicate(behavior, cols, holders, binary, columns) -> bool:
    values = {v for col in cols.values() for v in col.values()}
    if len(values) == 1:
        return True
    for r, r_holders in binary:
        if r_holders != holders:
            continue
        rc = columns[r]
        pairs = {(cols[c][s], rc[c][s]) for c in holders for s in cols[c]}
        # same partition of the support in every context, under one fixed labeling
        if len({a for a, _ in pairs}) == len(pairs) and len({b for _, b in pairs}) == len(pairs):
            return True
    return False


# -- pipelines ----------------------------------------------------------------


def _map_from_json(spec) -> Callable:
    """Maps come either as {"u": "v"} or as [{"from": [...], "to": "v"}, ...]."""
    if isinstance(spec, Mapping):
        table = {(k,): v for k, v in spec.items()}
        table.update({k: v for k, v in spec.items()})
    else:
        table = {tuple(entry["from"]): entry["to"] for entry in spec}

    def f(u):
        if u in table:
            return table[u]
        raise ModelError(f"pipeline map is undefined on {u!r}")

    return f


def apply_step(behavior: Behavior, step: Mapping, resolve: Callable[[str], Behavior]) -> Behavior:
    op = step.get("op")
    if op == "marginalize":
        if "contexts" in step:
            return restrict_contexts(behavior, step["contexts"])
        if "drop" in step:
            return drop_observables(behavior, step["drop"])
        return marginalize(behavior, SubscenarioSpec.of(map(tuple, step["relation"])))
    if op == "coarsen":
        return coarsen(behavior, step["q"], _map_from_json(step["map"]), step.get("outcomes"))
    if op == "post_process":
        return post_process(behavior, step["q"], _map_from_json(step["map"]), step["id"],
                            step.get("outcomes"))
    if op == "join":
        return join(behavior, step["q"], step.get("id"))
    if op == "product":
        return product(behavior, resolve(step["with"]), step.get("auto_prefix", False))
    if op == "relabel":
        return relabel(behavior, step["q"], step["blocks"], step["ids"])
    if op == "add_deterministic":
        return add_deterministic(behavior, step["q"], step["c"], step["u"], step.get("outcomes"))
    if op == "canonical_binary":
        return canonical_binary(behavior, step.get("budget", DEFAULT_CANONICAL_BUDGET),
                                step.get("join_closure", False))
    if op == "rename":
        out = behavior
        if "contexts" in step:
            out = rename_contexts(out, step["contexts"])
        if "observables" in step:
            out = rename_observables(out, step["observables"])
        return out
    raise ModelError(f"unknown pipeline op {op!r}")


def apply_pipeline(behavior: Behavior, steps: Sequence[Mapping],
                   resolve: Callable[[str], Behavior]) -> Behavior:
    for i, step in enumerate(steps):
        try:
            behavior = apply_step(behavior, step, resolve)
        except (KeyError, TypeError) as exc:
            raise ModelError(f"pipeline step {i}: malformed step ({exc})") from None
    return behavior
