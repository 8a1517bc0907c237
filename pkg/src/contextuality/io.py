"""Behavior files: JSON in, JSON out, byte-stable."""
from __future__ import annotations

import json
from fractions import Fraction

from .model import (
    Behavior,
    Context,
    Distribution,
    ModelError,
    Observable,
    Scenario,
    format_fraction,
    parse_probability,
)


def behavior_from_dict(data: dict) -> Behavior:
    try:
        raw_obs = data["observables"]
        raw_ctx = data["contexts"]
        raw_tables = data["tables"]
    except (KeyError, TypeError) as exc:
        raise ModelError(f"behavior file is missing key {exc}") from None
    observables = []
    for i, o in enumerate(raw_obs):
        try:
            observables.append(Observable(str(o["id"]), tuple(str(u) for u in o["outcomes"])))
        except KeyError as exc:
            raise ModelError(f"observables[{i}] is missing {exc}") from None
    contexts = []
    given = {}
    for i, c in enumerate(raw_ctx):
        try:
            cid, obs = str(c["id"]), [str(q) for q in c["observables"]]
        except KeyError as exc:
            raise ModelError(f"contexts[{i}] is missing {exc}") from None
        contexts.append(Context(cid, tuple(obs)))
        given[cid] = obs
    scenario = Scenario(observables, contexts)
    tables = {}
    for ctx in scenario.contexts:
        rows = raw_tables.get(ctx.id)
        if rows is None:
            raise ModelError(f"tables: no entry for context {ctx.id!r}")
        order = given[ctx.id]
        perm = [order.index(q) for q in ctx.observables]
        weights: dict[tuple[str, ...], Fraction] = {}
        for j, row in enumerate(rows):
            try:
                outcome = [str(u) for u in row["outcome"]]
                p = parse_probability(row["p"])
            except KeyError as exc:
                raise ModelError(f"tables[{ctx.id!r}][{j}] is missing {exc}") from None
            except ModelError as exc:
                raise ModelError(f"tables[{ctx.id!r}][{j}]: {exc}") from None
            if len(outcome) != len(order):
                raise ModelError(
                    f"tables[{ctx.id!r}][{j}]: outcome has {len(outcome)} labels, "
                    f"context measures {len(order)} observables"
                )
            key = tuple(outcome[k] for k in perm)
            weights[key] = weights.get(key, Fraction(0)) + p
        tables[ctx.id] = Distribution(ctx.observables, scenario.domain(ctx.id), weights)
    extra = set(raw_tables) - {c.id for c in scenario.contexts}
    if extra:
        raise ModelError(f"tables for unknown contexts {sorted(extra)}")
    return Behavior(scenario, tables)


def behavior_to_dict(behavior: Behavior) -> dict:
    sc = behavior.scenario
    return {
        "observables": [
            {"id": o.id, "outcomes": list(o.outcomes)} for o in sc.observables.values()
        ],
        "contexts": [{"id": c.id, "observables": list(c.observables)} for c in sc.contexts],
        "tables": {
            c.id: [
                {"outcome": list(s), "p": format_fraction(behavior.tables[c.id][s])}
                for s in behavior.tables[c.id].support()
            ]
            for c in sc.contexts
        },
    }


def dumps(behavior: Behavior) -> str:
    return json.dumps(behavior_to_dict(behavior), indent=2) + "\n"


def loads(text: str) -> Behavior:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return behavior_from_dict(data)


def load(path) -> Behavior:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def save(behavior: Behavior, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(behavior))
