"""Executable checks for the claims the engine is built to verify.

* the total momentum operator has the free form and commutes with K,
* the dressed vacuum and one-particle states are eigenstates of H up to
  the truncation order (residual ~ coupling^(N+1)),
* the dressed field commutes at equal times,
* the interaction induces a spacelike nonlocality scaling as coupling^2,
* the single-mode squeezing exponential reproduces the hyperbolic linear
  transformation of the ladder operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .algebra import OperatorSeries
from .dressing import DressingResult
from .models import ModelSpec, momentum_defect
from .modes import ModeIndex
from .numerics import (
    FockBasis,
    dressing_matrices,
    field_at_origin_time_zero,
    ladder_matrix,
    restricted_norm,
)

DEFAULT_TIME_HORIZON_UNITS = 6.0


class ScanError(ValueError):
    """Invalid scan request (e.g. a non-spacelike grid point)."""


# ---------------------------------------------------------------------------
# momentum operator


def momentum_operator(model: ModelSpec) -> list[OperatorSeries]:
    """P_j = sum_k p_j(k) a+_k a_k, one series per spatial component."""
    system = model.system
    out = []
    for j in range(system.lattice.dim):
        raw = [((m,), (m,), system.momentum(m)[j]) for m in system.modes]
        out.append(OperatorSeries.from_terms(system, raw, order=0,
                                             max_order=model.max_order))
    return out


def momentum_commutation_defect(k_series: OperatorSeries, model: ModelSpec) -> float:
    """max termwise |coefficient of [K, P_j]| over all components and orders.

    Computed with the crystal-momentum convention: the momentum balance of
    each term is wrapped to the first zone, so umklapp-conserving terms
    commute with the lattice momentum.
    """
    lat = model.system.lattice
    unit = 2.0 * math.pi / lat.physical_length
    worst = 0.0
    for o in k_series.orders:
        for sig, c in o.items():
            defect = momentum_defect(sig, lat)
            for comp in defect:
                worst = max(worst, abs(c) * abs(comp) * unit)
    return worst


# ---------------------------------------------------------------------------
# eigenstate residuals


@dataclass
class ResidualReport:
    lambdas: list[float]
    vacuum: list[float]
    one_particle: dict[ModeIndex, list[float]]
    vacuum_slope: float | None
    one_particle_slopes: dict[ModeIndex, float]
    cutoff_sensitive: bool = False
    zero_floor: float = 1e-12

    def all_slopes(self) -> list[float]:
        slopes = [] if self.vacuum_slope is None else [self.vacuum_slope]
        slopes.extend(s for s in self.one_particle_slopes.values() if s is not None)
        return slopes

    def rows(self) -> list[dict]:
        out = []
        for i, lam in enumerate(self.lambdas):
            out.append({"state": "vacuum", "lambda": lam, "residual": self.vacuum[i]})
            for mode, res in sorted(self.one_particle.items()):
                out.append({"state": repr(mode), "lambda": lam, "residual": res[i]})
        return out


def _loglog_slope(lambdas, values, floor=1e-13) -> float | None:
    """Least-squares slope of log(value) vs log(lambda); None if the values
    sit at the numerical floor (nothing to fit)."""
    xs, ys = [], []
    for lam, v in zip(lambdas, values):
        if lam > 0 and v > floor:
            xs.append(math.log(lam))
            ys.append(math.log(v))
    if len(xs) < 2:
        return None
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def _state_residual(mh: np.ndarray, psi: np.ndarray) -> float:
    psi = psi / np.linalg.norm(psi)
    mean = np.vdot(psi, mh @ psi)
    return float(np.linalg.norm(mh @ psi - mean * psi))


def eigenstate_residuals(model: ModelSpec, basis: FockBasis, result: DressingResult,
                         lambdas, check_cutoff: bool = False) -> ResidualReport:
    """Residuals of the dressed vacuum exp(-R)|0> and one-particle states
    exp(-R) a+_k |0> as approximate eigenstates of H, per coupling value."""
    lambdas = list(lambdas)
    vac_res: list[float] = []
    one_res: dict[ModeIndex, list[float]] = {m: [] for m in model.system.modes}
    vac_idx = basis.vacuum_index()
    e_vac = np.zeros(basis.dimension)
    e_vac[vac_idx] = 1.0
    creators = {m: ladder_matrix(basis, m, create=True).toarray()
                for m in model.system.modes}
    for lam in lambdas:
        mh, _, w_inv, _ = dressing_matrices(result, basis, lam)
        vac_res.append(_state_residual(mh, w_inv @ e_vac))
        for m in model.system.modes:
            one_res[m].append(_state_residual(mh, w_inv @ (creators[m] @ e_vac)))

    report = ResidualReport(
        lambdas=lambdas,
        vacuum=vac_res,
        one_particle=one_res,
        vacuum_slope=_loglog_slope(lambdas, vac_res),
        one_particle_slopes={m: _loglog_slope(lambdas, r) for m, r in one_res.items()},
    )

    if check_cutoff and lambdas:
        # double the total cutoff once; residuals should move by < 10%
        bigger = FockBasis(model.system, basis.per_mode_cutoff * 2,
                           basis.total_cutoff * 2)
        lam = max(lambdas)
        mh, _, w_inv, _ = dressing_matrices(result, bigger, lam)
        e0 = np.zeros(bigger.dimension)
        e0[bigger.vacuum_index()] = 1.0
        ref = vac_res[lambdas.index(lam)]
        new = _state_residual(mh, w_inv @ e0)
        if ref > report.zero_floor and abs(new - ref) > 0.1 * ref:
            report.cutoff_sensitive = True
    return report


# ---------------------------------------------------------------------------
# field-commutator scans


@dataclass
class ScanPoint:
    x: tuple
    y: tuple
    separation: float
    tau: float
    lam: float
    magnitude: float          # restricted operator norm of the commutator
    vev_modulus: float        # |<vacuum| commutator |vacuum>|
    baseline: float = 0.0     # same magnitude at lambda = 0
    subtracted: float = 0.0   # restricted norm of C(lambda) - C(0)
    spacelike: bool = True


@dataclass
class ScanReport:
    kind: str
    points: list[ScanPoint]
    block: int
    slope: float | None = None
    noise_floor: float = 0.0

    def rows(self) -> list[dict]:
        return [{
            "x": list(p.x), "y": list(p.y),
            "separation": p.separation, "tau": p.tau, "lambda": p.lam,
            "magnitude": p.magnitude, "vev": p.vev_modulus,
            "baseline": p.baseline, "subtracted": p.subtracted,
            "spacelike": p.spacelike,
        } for p in self.points]


def _site_tuple(x) -> tuple:
    return tuple(x) if isinstance(x, (tuple, list)) else (int(x),)


class _LambdaContext:
    """Per-coupling cache: H, exp(+-R), the dressed vacuum, the A(x,0) fields."""

    def __init__(self, model, basis, result, lam):
        self.model = model
        self.basis = basis
        self.lam = lam
        self.mh, _, self.w_inv, self.w = dressing_matrices(result, basis, lam)
        e0 = np.zeros(basis.dimension)
        e0[basis.vacuum_index()] = 1.0
        psi = self.w_inv @ e0
        self.vacuum = psi / np.linalg.norm(psi)
        self._fields0: dict = {}
        self._evolution: dict = {}

    def field0(self, site):
        if site not in self._fields0:
            self._fields0[site] = field_at_origin_time_zero(
                self.model, self.basis, self.w_inv, self.w, site)
        return self._fields0[site]

    def field(self, site, t: float):
        if t == 0.0:
            return self.field0(site)
        if t not in self._evolution:
            self._evolution[t] = scipy.linalg.expm(1j * t * self.mh)
        u = self._evolution[t]
        return u @ self.field0(site) @ u.conj().T

    def vev(self, m) -> float:
        return abs(np.vdot(self.vacuum, m @ self.vacuum))


def equal_time_scan(model: ModelSpec, basis: FockBasis, result: DressingResult,
                    times, lambdas, site_pairs, block: int = 2,
                    horizon_units: float = DEFAULT_TIME_HORIZON_UNITS) -> ScanReport:
    """|| [A(x,t), A(y,t)] || restricted to the low-quanta block, for every
    requested site pair, time and coupling."""
    lat = model.system.lattice
    horizon = horizon_units * lat.spacing
    points = []
    pairs = [(_site_tuple(a), _site_tuple(b)) for a, b in site_pairs]
    contexts = {lam: _LambdaContext(model, basis, result, lam) for lam in lambdas}
    for t in times:
        if abs(t) > horizon:
            raise ScanError(f"time {t} beyond the horizon {horizon}")
        for lam, ctx in contexts.items():
            for x, y in pairs:
                ax, ay = ctx.field(x, t), ctx.field(y, t)
                c = ax @ ay - ay @ ax
                points.append(ScanPoint(
                    x=x, y=y,
                    separation=lat.min_image_distance(x, y),
                    tau=t,  # the common time; x0 - y0 = 0 for these points
                    lam=lam,
                    magnitude=restricted_norm(c, basis, block),
                    vev_modulus=ctx.vev(c),
                ))
    return ScanReport(kind="equal_time", points=points, block=block)


def spacelike_scan(model: ModelSpec, basis: FockBasis, result: DressingResult,
                   lambdas, grid, block: int = 2,
                   allow_timelike: bool = False,
                   horizon_units: float = DEFAULT_TIME_HORIZON_UNITS) -> ScanReport:
    """Baseline-subtracted commutator C(lam) = [A(x,tau), A(y,0)] over a grid
    of (x, y, tau) points.

    The free-lattice baseline C(0) is subtracted so the reported magnitude
    isolates the interaction-induced piece; its coupling scaling is fitted.
    """
    lat = model.system.lattice
    horizon = horizon_units * lat.spacing
    entries = []
    for x, y, tau in grid:
        x, y = _site_tuple(x), _site_tuple(y)
        sep = lat.min_image_distance(x, y)
        spacelike = sep > abs(tau)
        if not spacelike and not allow_timelike:
            raise ScanError(
                f"grid point x={x} y={y} tau={tau} is not spacelike "
                f"(separation {sep:.3f} <= |tau|); pass allow_timelike to scan it"
            )
        if abs(tau) > horizon:
            raise ScanError(f"tau={tau} beyond the horizon {horizon}")
        entries.append((x, y, tau, sep, spacelike))

    lambdas = list(lambdas)
    contexts = {lam: _LambdaContext(model, basis, result, lam)
                for lam in set(lambdas) | {0.0}}
    points = []
    for x, y, tau, sep, spacelike in entries:
        m0 = _commutator_matrix(contexts[0.0], x, y, tau)
        for lam in lambdas:
            c = _commutator_matrix(contexts[lam], x, y, tau)
            points.append(ScanPoint(
                x=x, y=y, separation=sep, tau=tau, lam=lam,
                magnitude=restricted_norm(c, basis, block),
                vev_modulus=contexts[lam].vev(c),
                baseline=restricted_norm(m0, basis, block),
                subtracted=restricted_norm(c - m0, basis, block),
                spacelike=spacelike,
            ))

    # coupling-scaling fit at the spacelike grid point with the strongest signal
    best_slope = None
    best_signal = -1.0
    for x, y, tau, sep, spacelike in entries:
        if not spacelike:
            continue
        sel = [(p.lam, p.subtracted) for p in points
               if p.x == x and p.y == y and p.tau == tau and p.lam > 0]
        signal = max((s[1] for s in sel), default=0.0)
        slope = _loglog_slope([s[0] for s in sel], [s[1] for s in sel])
        if slope is not None and signal > best_signal:
            best_signal = signal
            best_slope = slope
    floor = 1e-11 * max((p.baseline for p in points), default=1.0)
    return ScanReport(kind="spacelike", points=points, block=block,
                      slope=best_slope, noise_floor=max(floor, 1e-13))


def _commutator_matrix(ctx: _LambdaContext, x, y, tau):
    ax = ctx.field(x, tau)
    ay = ctx.field0(y)
    return ax @ ay - ay @ ax


# ---------------------------------------------------------------------------
# single-mode squeezing (hyperbolic linear transformation) check


@dataclass
class BogoliubovReport:
    chi: float
    cutoff: int
    deviation: float            # vs cosh*a + sinh*a+ on the half-cutoff block
    deviation_doubled: float    # same at twice the cutoff
    ccr_deviation: float        # canonical commutator preserved on the block
    shrinks: bool


def _single_mode_ladder(cutoff: int) -> np.ndarray:
    a = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    for n in range(1, cutoff + 1):
        a[n - 1, n] = math.sqrt(n)
    return a


def _squeeze_deviation(chi: float, cutoff: int, block: int) -> tuple[float, float]:
    a = _single_mode_ladder(cutoff)
    ad = a.conj().T
    r = 0.5 * chi * (a @ a - ad @ ad)
    w = scipy.linalg.expm(r)
    lhs = w @ a @ w.conj().T
    rhs = math.cosh(chi) * a + math.sinh(chi) * ad
    dev = float(np.abs((lhs - rhs)[:block, :block]).max())
    lhsd = lhs.conj().T
    ccr = lhs @ lhsd - lhsd @ lhs
    eye = np.eye(cutoff + 1)
    ccr_dev = float(np.abs((ccr - eye)[:block, :block]).max())
    return dev, ccr_dev


def bogoliubov_check(chi: float, cutoff: int = 40) -> BogoliubovReport:
    """exp(R) a exp(-R) with R = (chi/2)(aa - a+a+) against the closed-form
    cosh(chi) a + sinh(chi) a+, on the half-cutoff sub-block.

    The deviation (measured on the same sub-block) must shrink when the
    cutoff doubles, otherwise the truncation is flagged as unreliable.
    """
    block = cutoff // 2 + 1
    dev, ccr = _squeeze_deviation(chi, cutoff, block)
    dev2, _ = _squeeze_deviation(chi, cutoff * 2, block)
    shrinks = dev2 <= dev or dev < 1e-12
    return BogoliubovReport(chi=chi, cutoff=cutoff, deviation=dev,
                            deviation_doubled=dev2, ccr_deviation=ccr,
                            shrinks=shrinks)
