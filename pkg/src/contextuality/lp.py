"""Exact linear feasibility: {x >= 0 : A x = b} over the rationals.

The simplex here keeps an all-integer tableau and divides by the previous
pivot after each elimination step (fraction-free pivoting); every division
is exact, so no Fraction arithmetic happens inside the pivot loop.  A
separate Fourier-Motzkin routine decides the same question by elimination
and is used only as an independent cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .model import Distribution


class LPError(ValueError):
    pass


@dataclass
class LinearSystem:
    num_vars: int
    equalities: list[tuple[list[Fraction], Fraction]] = field(default_factory=list)
    labels: list[str] | None = None

    def __post_init__(self):
        self.equalities = [(list(map(Fraction, row)), Fraction(rhs)) for row, rhs in self.equalities]
        for i, (row, _) in enumerate(self.equalities):
            if len(row) != self.num_vars:
                raise LPError(f"row {i} has {len(row)} coefficients, expected {self.num_vars}")

    def add(self, row: Sequence, rhs) -> None:
        if len(row) != self.num_vars:
            raise LPError(f"row has {len(row)} coefficients, expected {self.num_vars}")
        self.equalities.append((list(map(Fraction, row)), Fraction(rhs)))

    def add_sparse(self, coeffs: dict[int, object], rhs) -> None:
        row = [Fraction(0)] * self.num_vars
        for j, a in coeffs.items():
            row[j] += Fraction(a)
        self.equalities.append((row, Fraction(rhs)))

    def satisfied_by(self, x: Sequence[Fraction]) -> bool:
        if len(x) != self.num_vars or any(v < 0 for v in x):
            return False
        return all(sum((a * v for a, v in zip(row, x) if a), Fraction(0)) == rhs
                   for row, rhs in self.equalities)


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    witness: tuple[Fraction, ...] | None = None


def _integer_rows(system: LinearSystem) -> list[list[int]]:
    """Scale each row (coefficients + rhs) to coprime integers with rhs >= 0."""
    rows = []
    for coeffs, rhs in system.equalities:
        entries = list(coeffs) + [rhs]
        scale = math.lcm(*(e.denominator for e in entries))
        ints = [int(e * scale) for e in entries]
        g = math.gcd(*ints)
        if g > 1:
            ints = [v // g for v in ints]
        if ints[-1] < 0:
            ints = [-v for v in ints]
        rows.append(ints)
    return rows


class _Tableau:
    """Integer tableau; the true tableau is ``rows / det``."""

    def __init__(self, rows: list[list[int]], objective: list[int], basis: list[int]):
        self.rows = rows
        self.obj = objective
        self.basis = basis
        self.det = 1

    def pivot(self, r: int, s: int) -> None:
        rows, det = self.rows, self.det
        prow = rows[r]
        p = prow[s]
        for i, row in enumerate(rows):
            if i != r:
                rows[i] = self._eliminate(row, prow, p, s, det)
        self.obj = self._eliminate(self.obj, prow, p, s, det)
        self.basis[r] = s
        self.det = p
        if p < 0:
            self.det = -p
            self.rows = [[-v for v in row] for row in self.rows]
            self.obj = [-v for v in self.obj]

    @staticmethod
    def _eliminate(row, prow, p, s, det):
        a = row[s]
        if a == 0:
            if p == det:
                return row
            return [v * p // det for v in row]
        return [(v * p - a * w) // det for v, w in zip(row, prow)]

    def entering(self, ncols: int) -> int | None:
        # Bland: lowest-index column with negative reduced cost
        for j in range(ncols):
            if self.obj[j] < 0:
                return j
        return None

    def leaving(self, s: int, order_key) -> int | None:
        best = None
        for i, row in enumerate(self.rows):
            a = row[s]
            if a <= 0:
                continue
            if best is None:
                best = i
                continue
            lhs = row[-1] * self.rows[best][s]
            rhs = self.rows[best][-1] * a
            if lhs < rhs or (lhs == rhs and order_key(i) < order_key(best)):
                best = i
        return best

    def run(self, ncols: int, order_key) -> bool:
        """Pivot to optimality; False when the objective is unbounded."""
        while True:
            s = self.entering(ncols)
            if s is None:
                return True
            r = self.leaving(s, order_key)
            if r is None:
                return False
            self.pivot(r, s)

    def point(self, n: int) -> tuple[Fraction, ...]:
        x = [Fraction(0)] * n
        for i, j in enumerate(self.basis):
            if 0 <= j < n:
                x[j] = Fraction(self.rows[i][-1], self.det)
        return tuple(x)


def _phase_one(system: LinearSystem) -> tuple[bool, _Tableau, list[list[int]]]:
    n = system.num_vars
    rows = _integer_rows(system)
    objective = [0] * (n + 1)
    for row in rows:
        for j, v in enumerate(row):
            objective[j] -= v
    # artificial basics are encoded as n + row index, which also fixes their
    # position in Bland's ordering after all structural columns
    tab = _Tableau([list(r) for r in rows], objective, [n + i for i in range(len(rows))])
    tab.run(n, lambda i: tab.basis[i])
    return tab.obj[-1] == 0, tab, rows


def feasible(system: LinearSystem) -> FeasibilityResult:
    """Decide whether ``A x = b, x >= 0`` has a solution; return one if so."""
    if not system.equalities:
        return FeasibilityResult(True, tuple(Fraction(0) for _ in range(system.num_vars)))
    ok, tab, _ = _phase_one(system)
    if not ok:
        return FeasibilityResult(False)
    witness = tab.point(system.num_vars)
    if not system.satisfied_by(witness):
        raise AssertionError("simplex witness failed exact replay")
    return FeasibilityResult(True, witness)


def maximize(system: LinearSystem, objective: Sequence) -> tuple[Fraction, tuple[Fraction, ...]]:
    """Exact maximum of ``objective . x`` over the feasible set, with a maximizer."""
    n = system.num_vars
    if len(objective) != n:
        raise LPError(f"objective has {len(objective)} coefficients, expected {n}")
    cost = [Fraction(c) for c in objective]
    if not system.equalities:
        if any(c > 0 for c in cost):
            raise LPError("objective is unbounded")
        return Fraction(0), tuple(Fraction(0) for _ in range(n))
    ok, tab1, rows = _phase_one(system)
    if not ok:
        raise LPError("system is infeasible")

    # Rebuild a tableau for the feasible basis found in phase one, with the
    # (negated, integer-scaled) objective carried as an extra row.
    scale = math.lcm(*(c.denominator for c in cost))
    obj = [int(-c * scale) for c in cost] + [0]
    tab = _Tableau([list(r) for r in rows], obj, [-1] * len(rows))
    used = set()
    for j in sorted(j for j in tab1.basis if j < n):
        r = next(i for i, row in enumerate(tab.rows) if i not in used and row[j] != 0)
        used.add(r)
        tab.pivot(r, j)
    keep = []
    for i in range(len(tab.rows)):
        if i in used:
            keep.append(i)
            continue
        row = tab.rows[i]
        j = next((k for k in range(n) if row[k] != 0), None)
        if j is None:
            assert row[-1] == 0
            continue
        assert row[-1] == 0
        used.add(i)
        keep.append(i)
        tab.pivot(i, j)
    tab.rows = [tab.rows[i] for i in keep]
    tab.basis = [tab.basis[i] for i in keep]
    if not tab.run(n, lambda i: tab.basis[i]):
        raise LPError("objective is unbounded")
    x = tab.point(n)
    if not system.satisfied_by(x):
        raise AssertionError("simplex optimum failed exact replay")
    value = sum((c * v for c, v in zip(cost, x)), Fraction(0))
    return value, x


# -- Fourier-Motzkin oracle --------------------------------------------------


def _normalize(coeffs: tuple[Fraction, ...], bound: Fraction):
    lead = next((abs(c) for c in coeffs if c != 0), None)
    if lead is None:
        return coeffs, bound
    return tuple(c / lead for c in coeffs), bound / lead


def fm_feasible(system: LinearSystem) -> bool:
    """Feasibility by variable elimination; exponential, for small systems only.

    Equalities are substituted away first.  Remaining constraints are kept as
    ``g . x <= h`` together with the set of original sign constraints they
    were combined from; Chernikov's rule discards any combination built from
    more than (eliminated variables + 1) originals, which never changes the
    projected polyhedron.
    """
    n = system.num_vars
    cons: dict[tuple, frozenset] = {}
    for j in range(n):
        g = [Fraction(0)] * n
        g[j] = Fraction(-1)
        cons[(tuple(g), Fraction(0))] = frozenset([j])
    eqs = [(list(row), rhs) for row, rhs in system.equalities]

    while eqs:
        row, rhs = eqs.pop()
        j = next((k for k in range(n) if row[k] != 0), None)
        if j is None:
            if rhs != 0:
                return False
            continue
        a = row[j]

        def substitute(g, h, row=row, rhs=rhs, a=a, j=j):
            # x_j = (rhs - sum_{k != j} row_k x_k) / a
            c = g[j]
            if c == 0:
                return list(g), h
            g = [gk - c * rk / a for gk, rk in zip(g, row)]
            g[j] = Fraction(0)
            return g, h - c * rhs / a

        eqs = [substitute(g, h) for g, h in eqs]
        nxt: dict[tuple, frozenset] = {}
        for (g, h), hist in cons.items():
            g2, h2 = substitute(g, h)
            _keep(nxt, _normalize(tuple(g2), h2), hist)
        cons = nxt

    if not _drop_trivial(cons):
        return False
    remaining = {k for g, _ in cons for k, c in enumerate(g) if c != 0}
    eliminated = 0
    while remaining:
        def cost(k):
            pos = sum(1 for g, _ in cons if g[k] > 0)
            neg = sum(1 for g, _ in cons if g[k] < 0)
            return pos * neg - pos - neg

        k = min(remaining, key=lambda v: (cost(v), v))
        remaining.discard(k)
        eliminated += 1
        pos = [(key, hist) for key, hist in cons.items() if key[0][k] > 0]
        neg = [(key, hist) for key, hist in cons.items() if key[0][k] < 0]
        nxt = {key: hist for key, hist in cons.items() if key[0][k] == 0}
        for (gp, hp), histp in pos:
            for (gn, hn), histn in neg:
                hist = histp | histn
                if len(hist) > eliminated + 1:
                    continue
                a, b = gp[k], -gn[k]
                g = tuple(b * x + a * y for x, y in zip(gp, gn))
                _keep(nxt, _normalize(g, b * hp + a * hn), hist)
        cons = nxt
        if not _drop_trivial(cons):
            return False
    return True


def _keep(store: dict, key: tuple, hist: frozenset) -> None:
    old = store.get(key)
    if old is None or len(hist) < len(old):
        store[key] = hist


def _drop_trivial(cons: dict) -> bool:
    """Remove ``0 <= h`` rows; False if one of them is violated."""
    for key in [key for key in cons if all(c == 0 for c in key[0])]:
        if key[1] < 0:
            return False
        del cons[key]
    return True


# -- distances ---------------------------------------------------------------


def _check_domains(d1: Distribution, d2: Distribution) -> None:
    if d1.domains != d2.domains:
        raise LPError(f"domain mismatch: {d1.domains} vs {d2.domains}")


def tv_distance(d1: Distribution, d2: Distribution) -> Fraction:
    _check_domains(d1, d2)
    keys = set(d1.weights) | set(d2.weights)
    return sum((abs(d1[k] - d2[k]) for k in keys), Fraction(0)) / 2


def max_agreement(d1: Distribution, d2: Distribution) -> Fraction:
    _check_domains(d1, d2)
    return sum((min(d1[k], d2[k]) for k in set(d1.weights) & set(d2.weights)), Fraction(0))


def emit_lp(system: LinearSystem) -> str:
    """Plain-text dump: a ``vars N`` header, then one ``a1 a2 ... = b`` row per line."""
    fmt = lambda q: str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"  # noqa: E731
    lines = [f"vars {system.num_vars}"]
    if system.labels:
        lines.append("# " + " ".join(system.labels))
    for row, rhs in system.equalities:
        lines.append(" ".join(fmt(a) for a in row) + " = " + fmt(rhs))
    return "\n".join(lines) + "\n"
