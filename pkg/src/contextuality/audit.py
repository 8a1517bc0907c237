"""Axioms as executable checks, seeded fuzzing, Table 1 and the impossibility chains."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from . import corpus as _corpus
from .deciders import CONTEXTUAL, NONCONTEXTUAL, UNDEFINED, decide, ks_decide
from .io import behavior_from_dict, behavior_to_dict
from .model import (
    Behavior,
    ModelError,
    find_isomorphism,
    is_deterministic,
    is_nondisturbing,
)
from .transforms import (
    BudgetExceeded,
    apply_pipeline,
    marginalize,
    post_process,
    product,
    relabel,
    rename_contexts,
    SubscenarioSpec,
    add_deterministic,
    drop_observables,
)

AXIOMS = (
    "KSCompat",
    "Isomorphism",
    "Nestedness",
    "Coarsening",
    "PostProcessing",
    "Joining",
    "Independence",
    "IndependenceCanonical",
    "Determinism",
    "DetRedundancy",
    "Relabeling",
)

# axioms of the form "noncontextual premises => noncontextual conclusion"
IMPLICATIONS = {
    "Nestedness", "Coarsening", "PostProcessing", "Joining", "Independence",
    "IndependenceCanonical", "DetRedundancy", "Relabeling",
}

TABLE_EXTENSIONS = ("cbd1", "cbd2", "bcbd2", "cbcbd2-lifted", "dc", "dnc", "dccc")
TABLE_AXIOMS = ("Nestedness", "Coarsening", "PostProcessing", "Joining", "Independence",
                "Determinism", "DetRedundancy", "Relabeling")
TABLE_LABELS = {"cbd1": "CbD 1.0", "cbd2": "CbD 2.0", "bcbd2": "B-CbD", "cbcbd2-lifted": "CB-CbD",
                "dc": "D=>C", "dnc": "D=>notC", "dccc": "D+CC=>C"}
AXIOM_LABELS = {"Nestedness": "Nestedness", "Coarsening": "Coarsening",
                "PostProcessing": "Post-processing", "Joining": "Joining",
                "Independence": "Independence", "Determinism": "Determinism",
                "DetRedundancy": "Det. Redundancy", "Relabeling": "Relabeling"}

# Joining is meaningless when every observable must stay binary.
NOT_APPLICABLE = {("bcbd2", "Joining"), ("cbcbd2-lifted", "Joining"), ("cbcbd2-strict", "Joining")}

BINARY_EXTENSIONS = {"bcbd2", "cbcbd2-lifted", "cbcbd2-strict"}


@dataclass
class AuditReport:
    extension: str
    axiom: str
    outcome: str  # "violated" | "no-counterexample" | "not-applicable"
    witness: dict | None = None
    trials: int = 0
    applicable: int = 0
    seed: object = None
    reason: str | None = None

    def to_json(self) -> dict:
        out = {"extension": self.extension, "axiom": self.axiom, "outcome": self.outcome}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.outcome == "no-counterexample":
            out.update(trials=self.trials, applicable=self.applicable, seed=self.seed)
        if self.reason:
            out["reason"] = self.reason
        return out


# -- the effective axiom for an extension -------------------------------------


def effective_axiom(extension: str, axiom: str) -> str:
    """The canonical-binary extension is audited against the canonical form of Independence."""
    if axiom == "Independence" and extension.startswith("cbcbd2"):
        return "IndependenceCanonical"
    return axiom


# -- pipelines and replay ---------------------------------------------------------


@dataclass
class Case:
    """Premise behaviors plus a pipeline that turns ``premises[0]`` into the conclusion.

    ``{"with": "premise:1"}`` in a product step refers to the second premise.
    Corpus entries may be referenced by name instead of being embedded.
    """

    premises: list
    steps: list = field(default_factory=list)
    label: str = ""

    def resolve(self, ref) -> Behavior:
        if isinstance(ref, Behavior):
            return ref
        if isinstance(ref, dict):
            return behavior_from_dict(ref)
        if isinstance(ref, str) and ref.startswith("premise:"):
            return self.resolve(self.premises[int(ref.split(":", 1)[1])])
        return _corpus.get(ref)

    def stages(self) -> list[Behavior]:
        """The premise followed by the behavior after each step."""
        current = self.resolve(self.premises[0])
        out = [current]
        for step in self.steps:
            current = apply_pipeline(current, [step], self.resolve)
            out.append(current)
        return out

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "inputs": [p if isinstance(p, str) else behavior_to_dict(self.resolve(p))
                       for p in self.premises],
            "steps": self.steps,
        }


def _status(behavior: Behavior, extension: str) -> str:
    return decide(behavior, extension).status


def evaluate(extension: str, axiom: str, case: Case) -> tuple[str, dict | None]:
    """Apply one axiom instance.  Returns ("violated"|"held"|"inapplicable", detail)."""
    if axiom == "Determinism":
        b = case.resolve(case.premises[0])
        if not is_deterministic(b):
            return "inapplicable", None
        v = _status(b, extension)
        detail = {"verdicts": [v]}
        return ("violated" if v == CONTEXTUAL else "held"), detail
    if axiom == "KSCompat":
        b = case.resolve(case.premises[0])
        if not is_nondisturbing(b)[0]:
            return "inapplicable", None
        v, k = _status(b, extension), ks_decide(b).status
        if v == UNDEFINED:
            return "inapplicable", None
        return ("violated" if v != k else "held"), {"verdicts": [v], "ks": k}
    if axiom == "Isomorphism":
        stages = case.stages()
        vs = [_status(b, extension) for b in (stages[0], stages[-1])]
        return ("violated" if vs[0] != vs[1] else "held"), {"verdicts": vs}

    # implications: every extra premise must be noncontextual too
    for ref in case.premises[1:]:
        if _status(case.resolve(ref), extension) != NONCONTEXTUAL:
            return "inapplicable", None
    stages = case.stages()
    verdicts = [_status(stages[0], extension)]
    if verdicts[0] != NONCONTEXTUAL:
        return "inapplicable", None
    for i, b in enumerate(stages[1:], start=1):
        v = _status(b, extension)
        verdicts.append(v)
        if v == CONTEXTUAL:
            return "violated", {"verdicts": verdicts, "step": i - 1}
        if v != NONCONTEXTUAL:
            return "inapplicable", None
    return "held", {"verdicts": verdicts}


def check_axiom(extension: str, axiom: str, cases: Sequence[Case]) -> AuditReport:
    """Run explicit instances; the first violated one becomes the witness."""
    if (extension, axiom) in NOT_APPLICABLE:
        return AuditReport(extension, axiom, "not-applicable",
                           reason="joins are not binary observables")
    applicable = 0
    for case in cases:
        try:
            result, detail = evaluate(extension, axiom, case)
        except BudgetExceeded:
            continue
        if result == "violated":
            return AuditReport(extension, axiom, "violated",
                               witness={**case.to_json(), **detail}, trials=len(cases))
        applicable += result == "held"
    return AuditReport(extension, axiom, "no-counterexample", trials=len(cases),
                       applicable=applicable)


def replay(extension: str, axiom: str, witness: dict) -> bool:
    """Re-run a violation witness; True when the same verdict sequence comes back."""
    case = Case(witness["inputs"], witness["steps"], witness.get("label", ""))
    result, detail = evaluate(extension, axiom, case)
    return result == "violated" and detail["verdicts"] == witness["verdicts"]


# -- corpus witnesses ----------------------------------------------------------------

DELTA_MAP = [
    {"from": ["0", "0"], "to": "1"},
    {"from": ["0", "1"], "to": "0"},
    {"from": ["1", "0"], "to": "0"},
    {"from": ["1", "1"], "to": "1"},
]


def _cases_nestedness_cbd1():
    return [Case(["EX1"], [{"op": "marginalize", "contexts": ["c1", "c2"]}], "EX1 restricted to c1,c2")]


def _cases_blunt_nestedness():
    return [Case(["PROP4_EXPANDED"], [{"op": "marginalize", "drop": ["x"]}],
                 "PR box with an inconsistently connected observable, which is then dropped")]


def _cases_coarsening_cbd1():
    m = {"0": "0", "0'": "0", "1": "1", "1'": "1"}
    return [Case(["PROP1_TILDE"],
                 [{"op": "coarsen", "q": "q1", "map": m, "outcomes": ["0", "1"]},
                  {"op": "coarsen", "q": "q2", "map": m, "outcomes": ["0", "1"]}],
                 "primed outcomes identified with unprimed ones")]


def _cases_coarsening_cbd2():
    m = {u: u[0] for u in ("1", "1'", "2", "2'", "3", "3'")}
    return [Case(["EX2_P"], [{"op": "coarsen", "q": "q", "map": m, "outcomes": ["1", "2", "3"]}],
                 "i and i' identified")]


def _cases_blunt_coarsening():
    return [Case(["PROP5_SPLIT"],
                 [{"op": "coarsen", "q": "q1", "map": {"0a": "0", "0b": "0", "1": "1"},
                   "outcomes": ["0", "1"]}],
                 "split outcome of q1 merged back")]


def _cases_post_processing():
    return [Case(["EX3_P"],
                 [{"op": "post_process", "q": ["q1", "q2"], "map": DELTA_MAP, "id": "q3",
                   "outcomes": ["0", "1"]}],
                 "q3 = 1 iff q1 = q2")]


def _cases_joining():
    return [Case(["PROP2_P"], [{"op": "join", "q": ["a", "b"], "id": "q"}], "(a,b) joined")]


def _cases_relabeling_cbd1():
    blocks = [["c1", "c2"], ["c3", "c4"]]
    return [Case(["EX1"],
                 [{"op": "relabel", "q": "q1", "blocks": blocks, "ids": ["q1a", "q1b"]},
                  {"op": "relabel", "q": "q2", "blocks": blocks, "ids": ["q2a", "q2b"]}],
                 "both observables relabeled on {c1,c2} / {c3,c4}")]


def _cases_blunt_relabeling():
    return [Case(["PROP7_P"],
                 [{"op": "relabel", "q": "x", "blocks": [["e1"], ["e2"]], "ids": ["x1", "x2"]}],
                 "inconsistently connected observable relabeled per context")]


def _cases_independence_canonical():
    return [Case(["EX4_COIN", "EX4_DET"],
                 [{"op": "product", "with": "premise:1"}, {"op": "canonical_binary"}],
                 "coin flip times two-context deterministic behavior")]


def _cases_determinism_dc():
    return [Case(["PROP8_DET"], [], "deterministic, inconsistently connected")]


def _cases_detred_dc():
    return [Case(["PROP9_P"], [{"op": "add_deterministic", "q": "q", "c": "c2", "u": "0"}],
                 "q added to c2 with sure outcome 0")]


# (extension, axiom) -> corpus cases certifying a published violation
KNOWN_VIOLATIONS: dict[tuple[str, str], Callable[[], list[Case]]] = {
    ("cbd1", "Nestedness"): _cases_nestedness_cbd1,
    ("cbd1", "Coarsening"): _cases_coarsening_cbd1,
    ("cbd1", "PostProcessing"): _cases_post_processing,
    ("cbd1", "Joining"): _cases_joining,
    ("cbd1", "Relabeling"): _cases_relabeling_cbd1,
    ("cbd2", "Coarsening"): _cases_coarsening_cbd2,
    ("cbd2", "PostProcessing"): _cases_post_processing,
    ("cbd2", "Joining"): _cases_joining,
    ("bcbd2", "PostProcessing"): _cases_post_processing,
    ("cbcbd2-lifted", "Independence"): _cases_independence_canonical,
    ("dc", "Determinism"): _cases_determinism_dc,
    ("dc", "DetRedundancy"): _cases_detred_dc,
    ("dnc", "Nestedness"): _cases_blunt_nestedness,
    ("dnc", "Coarsening"): _cases_blunt_coarsening,
    ("dnc", "Relabeling"): _cases_blunt_relabeling,
    ("dccc", "Nestedness"): _cases_blunt_nestedness,
    ("dccc", "Coarsening"): _cases_blunt_coarsening,
    ("dccc", "Relabeling"): _cases_blunt_relabeling,
}


# -- random behaviors ------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorParams:
    max_observables: int = 3
    max_contexts: int = 3
    max_outcomes: int = 3
    max_context_size: int = 2
    max_support: int = 3
    max_denominator: int = 12
    binary: bool = False
    nondisturbing: bool = False
    deterministic: bool = False
    consistently_connected: bool = False
    disturbing: bool = False


def _weights(rng: random.Random, n: int, max_den: int) -> list[Fraction]:
    """n positive rationals summing to 1 with common denominator at most max_den."""
    den = rng.randint(n, max(n, max_den))
    cuts = sorted(rng.sample(range(1, den), n - 1)) if n > 1 else []
    parts = [b - a for a, b in zip([0] + cuts, cuts + [den])]
    return [Fraction(p, den) for p in parts]


def _random_dist(rng, domains, k, max_den):
    points = list(itertools.product(*domains))
    chosen = rng.sample(points, min(k, len(points)))
    return dict(zip(chosen, _weights(rng, len(chosen), max_den)))


def random_behavior(params: GeneratorParams = GeneratorParams(), seed=0, prefix: str = "") -> Behavior:
    """Deterministic in ``seed``.  Observables are ``{prefix}q<i>``, contexts ``{prefix}c<j>``."""
    p = params
    if p.disturbing and p.nondisturbing:
        raise ModelError("cannot force both disturbing and nondisturbing")
    if p.disturbing and p.deterministic and p.consistently_connected:
        raise ModelError("deterministic consistently connected behaviors are never disturbing")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    for _ in range(200):
        b = _random_attempt(rng, p, prefix)
        if p.disturbing and is_nondisturbing(b)[0]:
            continue
        return b
    raise ModelError("could not generate a disturbing behavior with these parameters")


def _random_attempt(rng: random.Random, p: GeneratorParams, prefix: str) -> Behavior:
    n_obs = rng.randint(1, p.max_observables)
    n_ctx = rng.randint(1, p.max_contexts)
    ids = [f"{prefix}q{i + 1}" for i in range(n_obs)]
    outcomes = {q: tuple(str(u) for u in range(2 if p.binary else rng.randint(2, p.max_outcomes)))
                for q in ids}
    contexts = []
    for j in range(n_ctx):
        size = rng.randint(1, min(p.max_context_size, n_obs))
        contexts.append((f"{prefix}c{j + 1}", tuple(sorted(rng.sample(ids, size)))))
    used = sorted({q for _, obs in contexts for q in obs})
    outcomes = {q: outcomes[q] for q in used}
    tables = {}
    if p.nondisturbing or (p.deterministic and p.consistently_connected):
        k = 1 if p.deterministic else rng.randint(1, p.max_support)
        glob = _random_dist(rng, [outcomes[q] for q in used], k, p.max_denominator)
        for cid, obs in contexts:
            idx = [used.index(q) for q in obs]
            t: dict[tuple, Fraction] = {}
            for s, w in glob.items():
                key = tuple(s[i] for i in idx)
                t[key] = t.get(key, Fraction(0)) + w
            tables[cid] = t
    elif p.consistently_connected:
        k = rng.randint(1, p.max_support)
        tokens = {q: [rng.choice(outcomes[q]) for _ in range(k)] for q in used}
        for cid, obs in contexts:
            cols = [rng.sample(tokens[q], k) for q in obs]
            t = {}
            for s in zip(*cols):
                t[s] = t.get(s, Fraction(0)) + Fraction(1, k)
            tables[cid] = t
    else:
        for cid, obs in contexts:
            k = 1 if p.deterministic else rng.randint(1, p.max_support)
            tables[cid] = _random_dist(rng, [outcomes[q] for q in obs], k, p.max_denominator)
    return Behavior.build(outcomes, contexts, tables)


# -- fuzz instance generators ---------------------------------------------------------


def _params_for(extension: str, axiom: str) -> GeneratorParams:
    binary = extension in BINARY_EXTENSIONS
    if axiom in ("Independence", "IndependenceCanonical"):
        return GeneratorParams(max_observables=2, max_contexts=2, max_support=2,
                               max_outcomes=2 if binary else 3, binary=binary)
    if extension.startswith("cbcbd2"):
        return GeneratorParams(max_observables=3, max_contexts=3, max_support=2,
                               max_context_size=2, binary=True)
    return GeneratorParams(binary=binary)


def _random_premise(rng: random.Random, params: GeneratorParams, kind: int, prefix: str = "") -> Behavior:
    """Rotate through behavior classes so both disturbing and nondisturbing inputs occur."""
    variants = [
        params,
        GeneratorParams(**{**params.__dict__, "nondisturbing": True}),
        GeneratorParams(**{**params.__dict__, "consistently_connected": True}),
        GeneratorParams(**{**params.__dict__, "deterministic": True}),
    ]
    return random_behavior(variants[kind % len(variants)], rng, prefix)


def _random_surjection(rng, domain, n_targets):
    targets = [str(i) for i in range(n_targets)]
    images = list(targets) + [rng.choice(targets) for _ in range(len(domain) - n_targets)]
    rng.shuffle(images)
    return dict(zip(domain, images)), targets


def _fresh(behavior: Behavior, stem: str) -> str:
    i = 1
    while f"{stem}{i}" in behavior.observables:
        i += 1
    return f"{stem}{i}"


def _gen_case(extension: str, axiom: str, rng: random.Random, attempt: int) -> Case | None:
    params = _params_for(extension, axiom)
    binary = params.binary
    if axiom == "Determinism":
        det = GeneratorParams(**{**params.__dict__, "deterministic": True})
        return Case([behavior_to_dict(random_behavior(det, rng))], [], "random deterministic")
    if axiom == "KSCompat":
        nd = GeneratorParams(**{**params.__dict__, "nondisturbing": True})
        return Case([behavior_to_dict(random_behavior(nd, rng))], [], "random nondisturbing")
    if axiom in ("Independence", "IndependenceCanonical"):
        p1 = _random_premise(rng, params, attempt, "a")
        p2 = _random_premise(rng, params, attempt + rng.randint(0, 3), "b")
        steps = [{"op": "product", "with": "premise:1"}]
        if axiom == "IndependenceCanonical":
            steps.append({"op": "canonical_binary"})
        return Case([behavior_to_dict(p1), behavior_to_dict(p2)], steps, "random product")

    b = _random_premise(rng, params, attempt)
    sc = b.scenario
    obs = list(sc.observables)
    if axiom == "Isomorphism":
        step = {"op": "rename",
                "observables": dict(zip(obs, rng.sample([f"r{i}" for i in range(len(obs))], len(obs)))),
                "contexts": dict(zip(sc.context_ids,
                                     rng.sample([f"k{i}" for i in range(len(sc.contexts))],
                                                len(sc.contexts))))}
        steps = [step]
        for q in obs:
            out = list(sc.outcomes(q))
            perm = rng.sample(out, len(out))
            steps.append({"op": "coarsen", "q": q, "map": dict(zip(out, perm)), "outcomes": out})
        # outcome permutation is applied before renaming so ids still match
        return Case([behavior_to_dict(b)], steps[1:] + steps[:1], "label permutation")
    if axiom == "Nestedness":
        relation = sc.relation()
        keep_ctx = rng.sample(sc.context_ids, rng.randint(1, len(sc.contexts)))
        pairs = []
        for c in keep_ctx:
            members = list(sc.context(c).observables)
            kept = rng.sample(members, rng.randint(1, len(members)))
            pairs += [[q, c] for q in kept]
        assert all(tuple(p) in relation for p in pairs)
        return Case([behavior_to_dict(b)], [{"op": "marginalize", "relation": pairs}], "random marginal")
    if axiom == "Coarsening":
        q = rng.choice(obs)
        out = sc.outcomes(q)
        n_t = len(out) if binary else rng.randint(1, len(out))
        mapping, targets = _random_surjection(rng, out, n_t)
        return Case([behavior_to_dict(b)],
                    [{"op": "coarsen", "q": q, "map": mapping, "outcomes": targets}], "random coarsening")
    if axiom in ("PostProcessing", "Joining"):
        ctx = rng.choice(sc.contexts)
        lo = 2 if axiom == "Joining" and len(ctx.observables) >= 2 else 1
        members = sorted(rng.sample(list(ctx.observables), rng.randint(lo, len(ctx.observables))))
        new_id = _fresh(b, "p")
        if axiom == "Joining":
            return Case([behavior_to_dict(b)], [{"op": "join", "q": members, "id": new_id}], "random join")
        domain = list(itertools.product(*(sc.outcomes(q) for q in members)))
        n_t = 2 if binary else rng.randint(1, min(3, len(domain)))
        mapping, targets = _random_surjection(rng, domain, n_t)
        table = [{"from": list(k), "to": v} for k, v in mapping.items()]
        return Case([behavior_to_dict(b)],
                    [{"op": "post_process", "q": members, "map": table, "id": new_id,
                      "outcomes": targets}], "random post-processing")
    if axiom == "DetRedundancy":
        options = [(q, c) for q in obs for c in sc.context_ids if q not in sc.context(c).observables]
        if options and rng.random() < 0.7:
            q, c = rng.choice(options)
            return Case([behavior_to_dict(b)],
                        [{"op": "add_deterministic", "q": q, "c": c,
                          "u": rng.choice(sc.outcomes(q))}], "existing observable added")
        new = _fresh(b, "d")
        n_out = 2 if binary else rng.randint(2, 3)
        outs = [str(i) for i in range(n_out)]
        return Case([behavior_to_dict(b)],
                    [{"op": "add_deterministic", "q": new, "c": rng.choice(sc.context_ids),
                      "u": rng.choice(outs), "outcomes": outs}], "new observable added")
    if axiom == "Relabeling":
        q = rng.choice(obs)
        holders = sc.contexts_of(q)
        rng.shuffle(holders)
        n_blocks = rng.randint(1, len(holders))
        cuts = sorted(rng.sample(range(1, len(holders)), n_blocks - 1))
        blocks = [holders[a:b] for a, b in zip([0] + cuts, cuts + [len(holders)])]
        ids = [f"{q}.{i}" for i in range(len(blocks))]
        return Case([behavior_to_dict(b)],
                    [{"op": "relabel", "q": q, "blocks": blocks, "ids": ids}], "random relabeling")
    raise ValueError(f"unknown axiom {axiom!r}")


def fuzz_axiom(extension: str, axiom: str, trials: int = 200, seed=0,
               attempts: int = 25) -> AuditReport:
    """Seeded search for a counterexample.

    Each trial draws from its own sub-seed and retries generation until the
    axiom's premise holds (noncontextual inputs, defined conclusion) or the
    attempt limit is reached.
    """
    axiom = effective_axiom(extension, axiom)
    if (extension, axiom) in NOT_APPLICABLE or (extension, axiom.replace("Canonical", "")) in NOT_APPLICABLE:
        return AuditReport(extension, axiom, "not-applicable",
                           reason="joins are not binary observables")
    applicable = 0
    for i in range(trials):
        rng = random.Random(f"{seed}:{extension}:{axiom}:{i}")
        for attempt in range(attempts):
            case = _gen_case(extension, axiom, rng, attempt)
            try:
                result, detail = evaluate(extension, axiom, case)
            except BudgetExceeded:
                continue
            if result == "violated":
                return AuditReport(extension, axiom, "violated",
                                   witness={**case.to_json(), **detail, "trial": i},
                                   trials=i + 1, applicable=applicable + 1, seed=seed)
            if result == "held":
                applicable += 1
                break
    return AuditReport(extension, axiom, "no-counterexample", trials=trials,
                       applicable=applicable, seed=seed)


# -- Table 1 ---------------------------------------------------------------------------


@dataclass
class Table1:
    cells: dict[tuple[str, str], AuditReport]
    trials: int
    seed: object

    def symbol(self, ext: str, axiom: str) -> str:
        r = self.cells[(ext, axiom)]
        if r.outcome == "violated" and (ext, axiom) not in KNOWN_VIOLATIONS:
            return "-*"
        return {"violated": "-", "no-counterexample": "+", "not-applicable": "∅"}[r.outcome]

    def render(self) -> str:
        head = ["Extension"] + [AXIOM_LABELS[a] for a in TABLE_AXIOMS]
        rows = [[TABLE_LABELS[e]] + [self.symbol(e, a) for a in TABLE_AXIOMS]
                for e in TABLE_EXTENSIONS if any((e, a) in self.cells for a in TABLE_AXIOMS)]
        widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
        fmt = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()  # noqa: E731
        lines = [fmt(head), fmt(["-" * w for w in widths])] + [fmt(r) for r in rows]
        lines.append("")
        lines.append("-: violation certified by a built-in witness")
        if any(self.symbol(e, a) == "-*" for e, a in self.cells):
            lines.append("-*: violation found by fuzzing (replayable witness in the JSON report)")
        lines.append(f"+: no counterexample in {self.trials} seeded trials (seed {self.seed}); "
                     "bounded evidence, not a proof")
        lines.append("∅: not applicable (joins leave the binary class)")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "cells": [r.to_json() for r in self.cells.values()],
        }


def table1(extensions: Sequence[str] = TABLE_EXTENSIONS, trials: int = 200, seed=0,
           axioms: Sequence[str] = TABLE_AXIOMS) -> Table1:
    """Violations come only from the corpus; the remaining cells are fuzzed."""
    cells = {}
    for ext in extensions:
        for axiom in axioms:
            if (ext, axiom) in NOT_APPLICABLE:
                cells[(ext, axiom)] = AuditReport(ext, axiom, "not-applicable",
                                                  reason="joins are not binary observables")
            elif (ext, axiom) in KNOWN_VIOLATIONS:
                report = check_axiom(ext, effective_axiom(ext, axiom), KNOWN_VIOLATIONS[(ext, axiom)]())
                report.axiom = axiom
                cells[(ext, axiom)] = report
            else:
                report = fuzz_axiom(ext, axiom, trials, seed)
                report.axiom = axiom
                cells[(ext, axiom)] = report
    return Table1(cells, trials, seed)


# -- the impossibility chains ---------------------------------------------------------

CHAIN_EXTENSIONS = ("ks", "cbd1", "cbd2", "bcbd2", "cbcbd2-lifted", "dc", "dnc", "dccc")


@dataclass
class ChainStep:
    name: str
    axiom: str  # axiom that forces this step noncontextual (or contextual for the last step)
    behavior: Behavior
    premises: tuple[str, ...]
    description: str
    matches: str | None = None
    exact: bool | None = None


@dataclass
class ChainReport:
    which: str
    steps: list[ChainStep]
    verdicts: dict[str, dict[str, str]]
    first_violation: dict[str, tuple[str, str] | None]
    pr_box_isomorphic: bool
    final_ks: str

    def render(self) -> str:
        lines = [f"chain {self.which}"]
        for s in self.steps:
            tag = ""
            if s.matches:
                tag = f"  [= {s.matches}: {'exact' if s.exact else 'MISMATCH'}]"
            lines.append(f"  {s.name:<4} {s.axiom:<4} {s.description}{tag}")
        lines.append("verdicts (N noncontextual, C contextual, U undefined):")
        names = [s.name for s in self.steps]
        lines.append("  " + " " * 14 + " ".join(f"{n:>4}" for n in names))
        for ext, vs in self.verdicts.items():
            row = " ".join(f"{vs[n][0].upper():>4}" for n in names)
            fv = self.first_violation.get(ext)
            note = f"  first violation: {fv[0]} at {fv[1]}" if fv else ""
            lines.append(f"  {ext:<14}{row}{note}")
        lines.append(f"final behavior isomorphic to the PR box: {self.pr_box_isomorphic}; "
                     f"KS verdict: {self.final_ks}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "which": self.which,
            "steps": [{"name": s.name, "axiom": s.axiom, "description": s.description,
                       "matches": s.matches, "exact": s.exact} for s in self.steps],
            "verdicts": self.verdicts,
            "first_violation": {k: list(v) if v else None for k, v in self.first_violation.items()},
            "pr_box_isomorphic": self.pr_box_isomorphic,
            "final_ks": self.final_ks,
        }


def _delta(v):
    return "1" if v[0] == v[1] else "0"


def _shared_tail(p3: Behavior, start: str) -> list[ChainStep]:
    g = _corpus.get
    p3d = post_process(p3, ("q1", "q2"), _delta, "q3", ("0", "1"))
    p4 = drop_observables(p3d, ["q2"])
    p4a = post_process(p4, ("q1",), lambda v: v[0], "q4", ("0", "1"))
    p4b = post_process(p4a, ("q3",), lambda v: v[0], "q5", ("0", "1"))
    keep = [("q1", "c1"), ("q1", "c2"), ("q4", "c3"), ("q4", "c4"),
            ("q3", "c1"), ("q3", "c3"), ("q5", "c2"), ("q5", "c4")]
    p5 = marginalize(p4b, SubscenarioSpec.of(keep))
    # the same behavior, reached directly by relabeling P4
    relabeled = relabel(relabel(p4, "q1", [["c1", "c2"], ["c3", "c4"]], ["q1", "q4"]),
                        "q3", [["c1", "c3"], ["c2", "c4"]], ["q3", "q5"])
    return [
        ChainStep("P3d", "A5", p3d, (start,), "append q3 = [q1 = q2]"),
        ChainStep("P4", "A3", p4, ("P3d",), "drop q2", "THM2_P4", p4 == g("THM2_P4")),
        ChainStep("P4a", "A5", p4a, ("P4",), "append copy q4 of q1"),
        ChainStep("P4b", "A5", p4b, ("P4a",), "append copy q5 of q3"),
        ChainStep("P5", "A3", p5, ("P4b",), "keep q1,q3 where unrelabeled, copies elsewhere",
                  "THM2_P5", p5 == g("THM2_P5") == relabeled),
    ]


def _first_violation(steps: list[ChainStep], verdicts: dict[str, str]) -> tuple[str, str] | None:
    for s in steps:
        v = verdicts[s.name]
        if s.axiom == "A1":
            expected = ks_decide(s.behavior).status
            if v != expected:
                return s.axiom, s.name
        elif s.axiom == "A9":
            if v == CONTEXTUAL:
                return s.axiom, s.name
        else:
            if all(verdicts[p] == NONCONTEXTUAL for p in s.premises) and v == CONTEXTUAL:
                return s.axiom, s.name
            if v != NONCONTEXTUAL:
                # the chain cannot be carried past a step that is not noncontextual
                return None
    return None


def theorem_chain(which: str = "thm2", extensions: Sequence[str] = CHAIN_EXTENSIONS) -> ChainReport:
    g = _corpus.get
    if which == "thm2":
        p1, p2 = g("THM2_P1"), g("THM2_P2")
        p3 = rename_contexts(product(p1, p2), {f"c0*c{i}": f"c{i}" for i in range(1, 5)})
        steps = [
            ChainStep("P1", "A1", p1, (), "coin flip"),
            ChainStep("P2", "A9", p2, (), "deterministic q2 = 1,1,1,0"),
            ChainStep("P3", "A7", p3, ("P1", "P2"), "product P1 x P2", "THM2_P3", p3 == g("THM2_P3")),
        ] + _shared_tail(p3, "P3")
    elif which == "thm3":
        p = g("THM3_P")
        steps = [ChainStep("P", "A1", p, (), "q1 uniform in four contexts")]
        cur, prev = p, "P"
        for i, u in zip(range(1, 5), ("1", "1", "1", "0")):
            cur = add_deterministic(cur, "q2", f"c{i}", u, ("0", "1"))
            name = f"P'{i}"
            steps.append(ChainStep(name, "A10", cur, (prev,), f"add q2 = {u} to c{i}"))
            prev = name
        last = steps[-1]
        last.matches, last.exact = "THM2_P3", cur == g("THM2_P3") and cur == g("THM3_PPRIME")
        steps += _shared_tail(cur, prev)
    else:
        raise ValueError(f"unknown chain {which!r}")

    final = steps[-1].behavior
    steps.append(ChainStep("PR", "A1", final, (), "PR box: contextual by KS"))
    verdicts = {ext: {s.name: decide(s.behavior, ext).status for s in steps} for ext in extensions}
    first = {ext: _first_violation(steps, verdicts[ext]) for ext in extensions}
    return ChainReport(which, steps, verdicts, first,
                       find_isomorphism(final, _pr_box_relabeled()) is not None,
                       ks_decide(final).status)


def _pr_box_relabeled() -> Behavior:
    """A PR box typed in with unrelated labels."""
    corr = {("+", "+"): Fraction(1, 2), ("-", "-"): Fraction(1, 2)}
    anti = {("+", "-"): Fraction(1, 2), ("-", "+"): Fraction(1, 2)}
    pm = ("+", "-")
    return Behavior.build(
        {"A0": pm, "A1": pm, "B0": pm, "B1": pm},
        [("ab00", ("A0", "B0")), ("ab01", ("A0", "B1")), ("ab10", ("A1", "B0")), ("ab11", ("A1", "B1"))],
        {"ab00": corr, "ab01": corr, "ab10": corr, "ab11": anti},
    )


__all__ = [
    "AXIOMS", "AuditReport", "Case", "ChainReport", "GeneratorParams", "KNOWN_VIOLATIONS", "Table1",
    "check_axiom", "effective_axiom", "evaluate", "fuzz_axiom", "random_behavior", "replay",
    "table1", "theorem_chain",
]
