"""Exact rewriting of polynomials in bosonic creation/annihilation operators.

A monomial is stored in normal order (all creators left of all annihilators),
keyed by its signature: the sorted creator and annihilator mode tuples.
An `OperatorSeries` is a formal power series in the coupling; each order is a
canonical map signature -> complex coefficient.  Products are normal-ordered
with bosonic Wick contractions; commutators skip the fully disconnected part,
which cancels identically.
"""

from __future__ import annotations

import math
from collections import Counter
from itertools import product as iter_product
from typing import Callable, Iterable, Sequence

from .modes import ModeIndex, ModeSystem

# Coefficients below this magnitude are dropped after every canonicalization.
PRUNE_THRESHOLD = 1e-14

Signature = tuple[tuple[ModeIndex, ...], tuple[ModeIndex, ...]]
TermMap = dict[Signature, complex]


class AlgebraError(ValueError):
    """Invalid input to an operator-algebra operation."""


def canonicalize(
    raw_terms: Iterable[tuple[Sequence[ModeIndex], Sequence[ModeIndex], complex]],
    system: ModeSystem | None = None,
    prune: float = PRUNE_THRESHOLD,
) -> TermMap:
    """Collect raw (creators, annihilators, coeff) triples into a canonical map.

    Signatures are sorted, coefficients of identical signatures summed,
    near-zero entries pruned.  Iteration order of the result is signature
    sort order (deterministic).
    """
    acc: dict[Signature, complex] = {}
    for creators, annihilators, coeff in raw_terms:
        if system is not None:
            for m in list(creators) + list(annihilators):
                if not system.contains(m):
                    raise AlgebraError(f"mode {m} is not a valid mode of {system}")
        sig = (tuple(sorted(creators)), tuple(sorted(annihilators)))
        acc[sig] = acc.get(sig, 0j) + complex(coeff)
    return {s: c for s, c in sorted(acc.items()) if abs(c) > prune}


def _sorted_map(terms: TermMap, prune: float = PRUNE_THRESHOLD) -> TermMap:
    return {s: c for s, c in sorted(terms.items()) if abs(c) > prune}


def dagger_signature(sig: Signature) -> Signature:
    return (sig[1], sig[0])


def term_type(sig: Signature) -> tuple[int, int]:
    return (len(sig[0]), len(sig[1]))


def is_bad_type(m: int, n: int) -> bool:
    """Bad terms obstruct the vacuum / one-particle eigenstate requirements:
    (m,0) and (m,1) with m >= 2, their conjugates, and the linear (1,0)/(0,1)."""
    if n <= 1 and m >= 2:
        return True
    if m <= 1 and n >= 2:
        return True
    return (m, n) in ((1, 0), (0, 1))


def _contractions(
    c1: tuple[ModeIndex, ...],
    a1: tuple[ModeIndex, ...],
    c2: tuple[ModeIndex, ...],
    a2: tuple[ModeIndex, ...],
    min_contractions: int = 0,
):
    """Normal order the product (c1,a1)*(c2,a2).

    Yields (signature, weight) for every contraction count between the left
    factor's annihilators and the right factor's creators.  Within a mode
    carrying m annihilators against n creators, k contractions come with
    weight C(m,k)*C(n,k)*k! (bosonic Wick combinatorics).
    """
    ca1 = Counter(a1)
    cc2 = Counter(c2)
    common = sorted(set(ca1) & set(cc2))
    per_mode = [range(min(ca1[m], cc2[m]) + 1) for m in common]
    for ks in iter_product(*per_mode):
        k_tot = sum(ks)
        if k_tot < min_contractions:
            continue
        weight = 1.0
        for mode, k in zip(common, ks):
            weight *= math.comb(ca1[mode], k) * math.comb(cc2[mode], k) * math.factorial(k)
        rem_c2 = cc2.copy()
        rem_a1 = ca1.copy()
        for mode, k in zip(common, ks):
            rem_c2[mode] -= k
            rem_a1[mode] -= k
        creators = tuple(sorted(list(c1) + list(rem_c2.elements())))
        annihil = tuple(sorted(list(rem_a1.elements()) + list(a2)))
        yield (creators, annihil), weight


def product_terms(p: TermMap, q: TermMap, min_contractions: int = 0,
                  out: TermMap | None = None, scale: complex = 1.0) -> TermMap:
    """Accumulate the normal-ordered product of two term maps into `out`."""
    acc: TermMap = {} if out is None else out
    for (c1, a1), x in p.items():
        for (c2, a2), y in q.items():
            xy = scale * x * y
            for sig, w in _contractions(c1, a1, c2, a2, min_contractions):
                acc[sig] = acc.get(sig, 0j) + xy * w
    return acc


class OperatorSeries:
    """A formal power series in the coupling over a fixed mode system."""

    __slots__ = ("system", "orders", "max_order")

    def __init__(self, system: ModeSystem, orders: list[TermMap], max_order: int):
        if max_order < 0:
            raise AlgebraError(f"max_order must be >= 0, got {max_order}")
        orders = list(orders)
        while len(orders) <= max_order:
            orders.append({})
        self.system = system
        self.orders = [_sorted_map(o) for o in orders[: max_order + 1]]
        self.max_order = max_order

    # ---- constructors ----
    @classmethod
    def zero(cls, system: ModeSystem, max_order: int) -> "OperatorSeries":
        return cls(system, [{} for _ in range(max_order + 1)], max_order)

    @classmethod
    def from_terms(cls, system, raw_terms, order: int = 0,
                   max_order: int | None = None) -> "OperatorSeries":
        if max_order is None:
            max_order = order
        if order > max_order:
            raise AlgebraError(f"order {order} exceeds max_order {max_order}")
        s = cls.zero(system, max_order)
        s.orders[order] = canonicalize(raw_terms, system)
        return s

    def copy(self) -> "OperatorSeries":
        return OperatorSeries(self.system, [dict(o) for o in self.orders], self.max_order)

    def truncated(self, max_order: int) -> "OperatorSeries":
        return OperatorSeries(self.system, [dict(o) for o in self.orders[: max_order + 1]],
                              max_order)

    # ---- inspection ----
    def term_count(self) -> int:
        return sum(len(o) for o in self.orders)

    def is_zero(self, tol: float = PRUNE_THRESHOLD) -> bool:
        return all(abs(c) <= tol for o in self.orders for c in o.values())

    def max_abs(self) -> float:
        return max((abs(c) for o in self.orders for c in o.values()), default=0.0)

    def min_order_nonzero(self) -> int | None:
        for n, o in enumerate(self.orders):
            if o:
                return n
        return None

    def evaluate(self, lam: float) -> TermMap:
        """Collapse the series at a numeric coupling value."""
        acc: TermMap = {}
        for n, o in enumerate(self.orders):
            w = lam**n
            for sig, c in o.items():
                acc[sig] = acc.get(sig, 0j) + w * c
        return _sorted_map(acc)

    def hermiticity_defect(self) -> float:
        """max |c(sig) - conj(c(sig^dagger))| over all stored terms."""
        worst = 0.0
        for o in self.orders:
            for sig, c in o.items():
                other = o.get(dagger_signature(sig), 0j)
                worst = max(worst, abs(c - other.conjugate()))
        return worst

    def __repr__(self) -> str:
        return f"OperatorSeries(max_order={self.max_order}, terms={self.term_count()})"

    # ---- linear structure ----
    def _check_system(self, other: "OperatorSeries"):
        if not self.system.same_as(other.system):
            raise AlgebraError(
                f"operands live on different mode systems: {self.system} vs {other.system}"
            )

    def __add__(self, other: "OperatorSeries") -> "OperatorSeries":
        self._check_system(other)
        n = min(self.max_order, other.max_order)
        out = []
        for i in range(n + 1):
            o = dict(self.orders[i])
            for sig, c in other.orders[i].items():
                o[sig] = o.get(sig, 0j) + c
            out.append(o)
        return OperatorSeries(self.system, out, n)

    def __sub__(self, other: "OperatorSeries") -> "OperatorSeries":
        return self + other.scaled(-1.0)

    def scaled(self, factor: complex) -> "OperatorSeries":
        return OperatorSeries(
            self.system,
            [{s: factor * c for s, c in o.items()} for o in self.orders],
            self.max_order,
        )

    def shifted(self, by: int) -> "OperatorSeries":
        """Multiply by coupling^by (shift every order up), same max_order."""
        out = [{} for _ in range(self.max_order + 1)]
        for n, o in enumerate(self.orders):
            if n + by <= self.max_order:
                out[n + by] = dict(o)
        return OperatorSeries(self.system, out, self.max_order)


# ---- ring and Lie operations ----

def normal_order_product(p: OperatorSeries, q: OperatorSeries) -> OperatorSeries:
    """Fully normal-ordered product p*q, coupling-graded and truncated."""
    p._check_system(q)
    n = min(p.max_order, q.max_order)
    out: list[TermMap] = [{} for _ in range(n + 1)]
    for i, oi in enumerate(p.orders):
        if i > n:
            break
        for j, oj in enumerate(q.orders):
            if i + j > n:
                break
            product_terms(oi, oj, out=out[i + j])
    return OperatorSeries(p.system, out, n)


def commutator(p: OperatorSeries, q: OperatorSeries) -> OperatorSeries:
    """[p, q] = pq - qp.  Zero-contraction terms cancel and are skipped."""
    p._check_system(q)
    n = min(p.max_order, q.max_order)
    out: list[TermMap] = [{} for _ in range(n + 1)]
    for i, oi in enumerate(p.orders):
        if i > n:
            break
        for j, oj in enumerate(q.orders):
            if i + j > n:
                break
            product_terms(oi, oj, min_contractions=1, out=out[i + j])
            product_terms(oj, oi, min_contractions=1, out=out[i + j], scale=-1.0)
    return OperatorSeries(p.system, out, n)


def dagger(p: OperatorSeries) -> OperatorSeries:
    """Hermitian conjugate: swap creator/annihilator lists, conjugate coefficients."""
    out = [
        {dagger_signature(sig): c.conjugate() for sig, c in o.items()}
        for o in p.orders
    ]
    return OperatorSeries(p.system, out, p.max_order)


def classify(p: OperatorSeries) -> dict[tuple[int, int], OperatorSeries]:
    """Partition p into disjoint sub-series keyed by term type (m, n)."""
    buckets: dict[tuple[int, int], list[TermMap]] = {}
    for n_ord, o in enumerate(p.orders):
        for sig, c in o.items():
            t = term_type(sig)
            if t not in buckets:
                buckets[t] = [{} for _ in range(p.max_order + 1)]
            buckets[t][n_ord][sig] = c
    return {
        t: OperatorSeries(p.system, orders, p.max_order)
        for t, orders in sorted(buckets.items())
    }


def bad_part(p: OperatorSeries) -> OperatorSeries:
    out = [
        {sig: c for sig, c in o.items() if is_bad_type(*term_type(sig))}
        for o in p.orders
    ]
    return OperatorSeries(p.system, out, p.max_order)


def ad_h0(p: OperatorSeries, energy: Callable[[ModeIndex], float]) -> OperatorSeries:
    """[p, H0] for diagonal H0 = sum_k E(k) a+_k a_k.

    Each term's coefficient picks up (sum_annihilators E - sum_creators E);
    signatures are unchanged.
    """
    out = []
    for o in p.orders:
        new: TermMap = {}
        for (creators, annihilators), c in o.items():
            de = sum(energy(m) for m in annihilators) - sum(energy(m) for m in creators)
            new[(creators, annihilators)] = c * de
        out.append(new)
    return OperatorSeries(p.system, out, p.max_order)


def energy_denominator(sig: Signature, energy: Callable[[ModeIndex], float]) -> float:
    """Delta E = sum_creators E - sum_annihilators E for a signature."""
    creators, annihilators = sig
    return sum(energy(m) for m in creators) - sum(energy(m) for m in annihilators)


def series_rows(p: OperatorSeries) -> list[dict]:
    """JSON-compatible term table: one row per stored monomial."""
    rows = []
    for n, o in enumerate(p.orders):
        for (creators, annihilators), c in o.items():
            rows.append({
                "order": n,
                "type": [len(creators), len(annihilators)],
                "creators": [{"species": m.species, "k": list(m.k)} for m in creators],
                "annihilators": [{"species": m.species, "k": list(m.k)} for m in annihilators],
                "re": c.real,
                "im": c.imag,
            })
    return rows
