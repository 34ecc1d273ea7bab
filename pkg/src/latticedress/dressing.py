"""Order-by-order construction of the dressing transformation.

K = exp(R) H exp(-R) is expanded as a power series in the coupling with
R = sum_n lambda^n R_n anti-Hermitian.  At each order the unwanted part of
K_n is cancelled by choosing R_n with coefficients r = c / DeltaE, where
DeltaE is the energy denominator of the signature.  The `shirokov` policy
removes the bad terms only; `weidlich` removes everything except the free
(1,1) part and the c-number, which fails on elastic zero denominators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .algebra import (
    OperatorSeries,
    TermMap,
    bad_part,
    commutator,
    dagger,
    energy_denominator,
    is_bad_type,
    term_type,
)
from .models import ModelSpec

RESONANCE_TOL = 1e-8          # |DeltaE| below this is an exact lattice resonance
NEAR_RESONANCE_WARN = 1e-3    # |DeltaE| below this is reported as a diagnostic


class ZeroDenominatorError(ValueError):
    """A generator term would require dividing by a (near-)zero energy gap."""

    def __init__(self, order: int, policy: str, signatures):
        self.order = order
        self.policy = policy
        self.signatures = list(signatures)
        sigs = ", ".join(f"{s}(|dE|={abs(d):.3e})" for s, d in self.signatures[:8])
        more = "" if len(self.signatures) <= 8 else f" (+{len(self.signatures) - 8} more)"
        super().__init__(
            f"zero energy denominator at order {order} under policy {policy!r}: "
            f"{sigs}{more}"
        )


@dataclass
class DressingResult:
    model: ModelSpec
    generators: list[OperatorSeries]        # R_1 .. R_N, each purely order-n
    generator: OperatorSeries               # the summed R series
    K: OperatorSeries                       # transformed Hamiltonian to order N
    removed: list[TermMap]                  # per-order term maps eliminated
    min_denominator: float
    diagnostics: list = field(default_factory=list)   # near-resonant signatures

    @property
    def max_order(self) -> int:
        return self.model.max_order

    def vacuum_energy_coefficient(self, order: int = 2) -> complex:
        """The c-number ((), ()) coefficient of K at the given order."""
        return self.K.orders[order].get(((), ()), 0j)


def bch_conjugate(r: OperatorSeries, h: OperatorSeries, max_order: int) -> OperatorSeries:
    """exp(r) h exp(-r) = sum_j ad_r^j(h) / j!, truncated at max_order.

    r must have no order-0 content, so each nested commutator raises the
    minimum coupling order by at least one and the sum terminates.
    """
    if r.orders[0]:
        raise ValueError("generator series must have no order-0 content")
    r = r.truncated(max_order)
    acc = h.truncated(max_order)
    nested = acc
    for j in range(1, max_order + 1):
        nested = commutator(r, nested).scaled(1.0 / j)
        if nested.is_zero():
            break
        acc = acc + nested
    return acc


def _target_terms(kn: TermMap, policy: str) -> TermMap:
    """The part of an order's term map the policy wants eliminated."""
    if policy == "shirokov":
        return {sig: c for sig, c in kn.items() if is_bad_type(*term_type(sig))}
    # weidlich: keep only the free-form (1,1) terms and the c-number
    return {sig: c for sig, c in kn.items() if term_type(sig) not in ((0, 0), (1, 1))}


def solve_generator(bad: TermMap, model: ModelSpec, order: int = 1,
                    resonance_tol: float = RESONANCE_TOL) -> tuple[TermMap, float, list]:
    """Generator coefficients r = c / DeltaE so that [R, H0] = -bad.

    Returns (terms, min |DeltaE|, near-resonance diagnostics).  Raises
    ZeroDenominatorError listing every signature with |DeltaE| below the
    tolerance: for shirokov that signals a kinematically allowed decay, for
    weidlich typically an elastic on-shell configuration.
    """
    energy = model.system.energy
    resonant = []
    near = []
    terms: TermMap = {}
    min_den = math.inf
    for sig, c in bad.items():
        de = energy_denominator(sig, energy)
        if abs(de) < resonance_tol:
            resonant.append((sig, de))
            continue
        min_den = min(min_den, abs(de))
        if abs(de) < NEAR_RESONANCE_WARN:
            near.append({"order": order, "signature": sig, "denominator": de})
        terms[sig] = c / de
    if resonant:
        raise ZeroDenominatorError(order, model.policy, resonant)
    return terms, min_den, near


def dress(model: ModelSpec) -> DressingResult:
    """Run the order-by-order elimination up to model.max_order."""
    n_max = model.max_order
    if n_max < 1:
        raise ValueError(f"dressing order must be >= 1, got {n_max}")
    h = model.hamiltonian(n_max)
    system = model.system

    r = OperatorSeries.zero(system, n_max)
    generators: list[OperatorSeries] = []
    removed: list[TermMap] = []
    min_den = math.inf
    diagnostics: list = []

    for n in range(1, n_max + 1):
        k = bch_conjugate(r, h, n)
        target = _target_terms(k.orders[n], model.policy)
        rn_terms, den, near = solve_generator(target, model, order=n)
        min_den = min(min_den, den)
        diagnostics.extend(near)
        removed.append(target)
        rn = OperatorSeries.zero(system, n_max)
        rn.orders[n] = dict(sorted(rn_terms.items()))
        generators.append(rn)
        r = r + rn

    k = bch_conjugate(r, h, n_max)
    return DressingResult(
        model=model,
        generators=generators,
        generator=r,
        K=k,
        removed=removed,
        min_denominator=min_den,
        diagnostics=diagnostics,
    )


def generator_consistency_defect(result: DressingResult) -> float:
    """max termwise |[R_n, H0] + removed_n| over all orders (should be ~0)."""
    from .algebra import ad_h0

    energy = result.model.system.energy
    worst = 0.0
    for n, rn in enumerate(result.generators, start=1):
        lhs = ad_h0(rn, energy)
        target = result.removed[n - 1]
        sigs = set(lhs.orders[n]) | set(target)
        for sig in sigs:
            worst = max(worst, abs(lhs.orders[n].get(sig, 0j) + target.get(sig, 0j)))
    return worst


def antihermiticity_defect(result: DressingResult) -> float:
    """max termwise |R_n + R_n^dagger| over all generators."""
    worst = 0.0
    for rn in result.generators:
        worst = max(worst, (rn + dagger(rn)).max_abs())
    return worst


def residual_bad_norm(result: DressingResult) -> float:
    """Largest bad-term coefficient magnitude left anywhere in K."""
    return bad_part(result.K).max_abs()


def extract_energy_correction(result: DressingResult, species: str, k,
                              hermiticity_tol: float = 1e-10) -> float:
    """The order-2 diagonal (1,1) coefficient of K for mode (species, k):
    the dressed correction to the one-particle energy."""
    if result.max_order < 2:
        raise ValueError(
            f"energy correction lives at order 2; dressing only ran to order "
            f"{result.max_order}"
        )
    mode = result.model.system.mode(species, k)
    c = result.K.orders[2].get(((mode,), (mode,)), 0j)
    if abs(c.imag) > hermiticity_tol:
        raise ValueError(
            f"non-Hermitian energy correction at mode {mode}: imag part {c.imag:.3e}"
        )
    return c.real
