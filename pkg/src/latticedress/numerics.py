"""Truncated Fock-space oracle: sparse matrices, eigensolvers, conjugation.

The basis enumerates occupation vectors under per-mode and total-quanta
cutoffs, graded by total quanta then lexicographic.  Operator application
that would push a state above a cutoff yields zero amplitude (projection);
comparisons against symbolic results must therefore be restricted to
low-quanta sub-blocks with a safety margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .algebra import OperatorSeries, TermMap
from .modes import ModeIndex, ModeSystem
from .models import ModelSpec

DEFAULT_DIMENSION_LIMIT = 200_000
DENSE_EIG_CUTOFF = 2000
DEGENERACY_GAP = 1e-10
ANTIHERM_TOL = 1e-10
UNITARITY_TOL = 1e-8
DEFAULT_TIME_HORIZON = 6.0   # in lattice-spacing units


class BasisError(ValueError):
    """Basis construction or lookup failure."""


@dataclass
class GroundState:
    energy: float
    vector: np.ndarray
    residual: float
    degenerate: bool


class FockBasis:
    """Occupation-number basis over the modes of a ModeSystem."""

    def __init__(self, system: ModeSystem, per_mode_cutoff: int, total_cutoff: int,
                 dimension_limit: int = DEFAULT_DIMENSION_LIMIT):
        if per_mode_cutoff < 1 or total_cutoff < 0:
            raise BasisError(
                f"need per_mode_cutoff >= 1 and total_cutoff >= 0, got "
                f"({per_mode_cutoff}, {total_cutoff})"
            )
        self.system = system
        self.modes = system.modes
        self.per_mode_cutoff = per_mode_cutoff
        self.total_cutoff = total_cutoff
        states = self._enumerate(len(self.modes), per_mode_cutoff, total_cutoff)
        if len(states) > dimension_limit:
            raise BasisError(
                f"basis dimension {len(states)} exceeds the limit {dimension_limit}"
            )
        # graded by total quanta, then lexicographic
        states.sort(key=lambda v: (sum(v), v))
        self.states: list[tuple[int, ...]] = states
        self.index: dict[tuple[int, ...], int] = {v: i for i, v in enumerate(states)}
        self.totals = np.array([sum(v) for v in states])
        self._positions = {m: i for i, m in enumerate(self.modes)}

    @staticmethod
    def _enumerate(n_modes, per_mode, total):
        out = [()]
        for _ in range(n_modes):
            out = [v + (q,) for v in out for q in range(per_mode + 1)
                   if sum(v) + q <= total]
        return out

    @property
    def dimension(self) -> int:
        return len(self.states)

    def mode_position(self, mode: ModeIndex) -> int:
        try:
            return self._positions[mode]
        except KeyError:
            raise BasisError(f"mode {mode} is not part of this basis") from None

    def vacuum_index(self) -> int:
        return self.index[(0,) * len(self.modes)]

    def block_indices(self, max_quanta: int) -> np.ndarray:
        """Indices of all states with total quanta <= max_quanta."""
        return np.nonzero(self.totals <= max_quanta)[0]

    def momentum_classes(self) -> np.ndarray:
        """Per-state total crystal momentum class (integer k mod zone),
        flattened to a single label per state."""
        lat = self.system.lattice
        labels = np.empty(self.dimension, dtype=object)
        for i, v in enumerate(self.states):
            total = [0] * lat.dim
            for occ, m in zip(v, self.modes):
                for d, c in enumerate(m.k):
                    total[d] += occ * c
            labels[i] = lat.wrap_k(tuple(total))
        return labels


def build_basis(model_or_system, per_mode_cutoff: int, total_cutoff: int,
                dimension_limit: int = DEFAULT_DIMENSION_LIMIT) -> FockBasis:
    system = model_or_system.system if isinstance(model_or_system, ModelSpec) \
        else model_or_system
    return FockBasis(system, per_mode_cutoff, total_cutoff, dimension_limit)


def _apply_term(basis: FockBasis, creators, annihilators, state: tuple[int, ...]):
    """Apply a normal-ordered monomial to a basis state.

    Returns (amplitude, new_state) or None when the result is annihilated or
    pushed above a cutoff.
    """
    occ = list(state)
    amp = 1.0
    for m in annihilators:
        pos = basis.mode_position(m)
        n = occ[pos]
        if n == 0:
            return None
        amp *= math.sqrt(n)
        occ[pos] = n - 1
    total = sum(occ)
    for m in creators:
        pos = basis.mode_position(m)
        n = occ[pos]
        if n + 1 > basis.per_mode_cutoff or total + 1 > basis.total_cutoff:
            return None
        amp *= math.sqrt(n + 1)
        occ[pos] = n + 1
        total += 1
    return amp, tuple(occ)


def matrix_of_terms(terms: TermMap, basis: FockBasis) -> sp.csr_matrix:
    """Sparse matrix of a flat term map in the given basis."""
    rows, cols, vals = [], [], []
    for (creators, annihilators), coeff in terms.items():
        for m in list(creators) + list(annihilators):
            if not basis.system.contains(m):
                raise BasisError(f"mode {m} unknown to the basis system")
        for col, state in enumerate(basis.states):
            hit = _apply_term(basis, creators, annihilators, state)
            if hit is None:
                continue
            amp, new_state = hit
            rows.append(basis.index[new_state])
            cols.append(col)
            vals.append(coeff * amp)
    return sp.csr_matrix(
        (vals, (rows, cols)),
        shape=(basis.dimension, basis.dimension),
        dtype=complex,
    )


def matrix_of(series: OperatorSeries, basis: FockBasis, lam: float) -> sp.csr_matrix:
    """Matrix of an operator series evaluated at a numeric coupling."""
    return matrix_of_terms(series.evaluate(lam), basis)


def ladder_matrix(basis: FockBasis, mode: ModeIndex, create: bool = False) -> sp.csr_matrix:
    sig = ((mode,), ()) if create else ((), (mode,))
    return matrix_of_terms({sig: 1.0 + 0j}, basis)


def ground_state(h: sp.spmatrix | np.ndarray,
                 residual_tol: float = 1e-10) -> GroundState:
    """Lowest eigenpair of a Hermitian matrix; dense below 2000 dimensions."""
    hs = sp.csr_matrix(h) if not sp.issparse(h) else h.tocsr()
    herm_defect = abs(hs - hs.getH()).max()
    scale = max(1.0, abs(hs).max())
    if herm_defect > 1e-10 * scale:
        raise ValueError(f"matrix is not Hermitian (defect {herm_defect:.3e})")
    n = hs.shape[0]
    if n < DENSE_EIG_CUTOFF:
        dense = hs.toarray()
        vals, vecs = scipy.linalg.eigh(dense)
        energy = float(vals[0])
        vector = vecs[:, 0]
        gap = float(vals[1] - vals[0]) if n > 1 else math.inf
    else:
        vals, vecs = spla.eigsh(hs, k=2, which="SA", maxiter=5000)
        order = np.argsort(vals)
        energy = float(vals[order[0]])
        vector = vecs[:, order[0]]
        gap = float(vals[order[1]] - vals[order[0]])
    residual = float(np.linalg.norm(hs @ vector - energy * vector))
    norm_h = spla.norm(hs) if n > 1 else abs(energy)
    bound = residual_tol * max(1.0, norm_h)
    if residual > bound:
        raise RuntimeError(
            f"eigensolver residual {residual:.3e} above tolerance {bound:.3e}"
        )
    return GroundState(energy=energy, vector=vector, residual=residual,
                       degenerate=gap < DEGENERACY_GAP)


def conjugate_numeric(r: sp.spmatrix | np.ndarray, h: sp.spmatrix | np.ndarray,
                      antiherm_tol: float = ANTIHERM_TOL) -> np.ndarray:
    """exp(r) h exp(-r) by dense scaling-and-squaring matrix exponential.

    r must be anti-Hermitian; the unitarity of exp(r) is verified.
    """
    rd = r.toarray() if sp.issparse(r) else np.asarray(r, dtype=complex)
    hd = h.toarray() if sp.issparse(h) else np.asarray(h, dtype=complex)
    defect = np.abs(rd + rd.conj().T).max()
    if defect > antiherm_tol * max(1.0, np.abs(rd).max()):
        raise ValueError(f"generator is not anti-Hermitian (defect {defect:.3e})")
    w = scipy.linalg.expm(rd)
    unit_defect = np.abs(w @ w.conj().T - np.eye(w.shape[0])).max()
    if unit_defect > UNITARITY_TOL:
        raise RuntimeError(f"exp(R) failed unitarity check (defect {unit_defect:.3e})")
    return w @ hd @ w.conj().T


def dressing_matrices(result, basis: FockBasis, lam: float):
    """(H(lam), R(lam), exp(-R), exp(R)) matrices for a dressing result.

    Dressed states are exp(-R)|bare>: with K = exp(R) H exp(-R), the
    approximate eigenvectors of H are exp(-R) times Fock states.
    """
    model = result.model
    mh = matrix_of(model.hamiltonian(), basis, lam).toarray()
    mr = matrix_of(result.generator, basis, lam).toarray()
    w_inv = scipy.linalg.expm(-mr)
    w = scipy.linalg.expm(mr)
    return mh, mr, w_inv, w


def rspt2_shift(model: ModelSpec, basis: FockBasis, species: str, k) -> float:
    """Second-order perturbation theory for the one-particle level, measured
    relative to the vacuum shift.

    Uses the bare basis states as the unperturbed spectrum; per unit
    coupling^2 (multiply by lambda^2 for a physical shift).
    """
    mode = model.system.mode(species, k)
    mv = matrix_of_terms(model.interaction.orders[1], basis).toarray()
    e0 = np.array([
        sum(occ * model.system.energy(m) for occ, m in zip(state, basis.modes))
        for state in basis.states
    ])

    def shift(index: int) -> float:
        e_ref = e0[index]
        col = mv[:, index]
        total = 0.0
        for s, amp in enumerate(col):
            if s == index or abs(amp) < 1e-16:
                continue
            den = e_ref - e0[s]
            if abs(den) < 1e-10:
                raise ZeroDivisionError(
                    f"degenerate intermediate state {basis.states[s]} "
                    f"(E={e0[s]:.6f}) in second-order shift"
                )
            total += abs(amp) ** 2 / den
        return total

    vac = basis.vacuum_index()
    one = basis.index[tuple(1 if m == mode else 0 for m in basis.modes)]
    return shift(one) - shift(vac)


def heisenberg_field(model: ModelSpec, basis: FockBasis, result, lam: float,
                     x_site, t: float,
                     horizon: float | None = None) -> np.ndarray:
    """Matrix of the dressed Heisenberg field A(x, t).

    A(x,0) = volume^{-1/2} sum_k (2 E_k)^{-1/2}
             (e^{i p x} alpha_k + e^{-i p x} alpha_k^dagger)
    with alpha = exp(-R) a exp(R), then conjugated by exp(i H t).
    """
    lat = model.system.lattice
    if horizon is None:
        horizon = DEFAULT_TIME_HORIZON * lat.spacing
    if abs(t) > horizon:
        raise ValueError(
            f"|t|={abs(t)} exceeds the time horizon {horizon} "
            "(wave packets wrap the periodic lattice)"
        )
    mh, _, w_inv, w = dressing_matrices(result, basis, lam)
    a0 = field_at_origin_time_zero(model, basis, w_inv, w, x_site)
    if t == 0.0:
        return a0
    u = scipy.linalg.expm(1j * t * mh)
    return u @ a0 @ u.conj().T


def field_at_origin_time_zero(model: ModelSpec, basis: FockBasis,
                              w_inv: np.ndarray, w: np.ndarray, x_site) -> np.ndarray:
    """A(x, 0) built from the dressed ladder matrices alpha = exp(-R) a exp(R)."""
    lat = model.system.lattice
    if len(model.system.species) != 1:
        raise ValueError("the Heisenberg field scan supports single-species models")
    sp_name = model.system.species[0].name
    x = np.array(x_site, dtype=float) * lat.spacing
    out = np.zeros((basis.dimension, basis.dimension), dtype=complex)
    for kvec in lat.k_vectors():
        mode = model.system.mode(sp_name, kvec)
        p = np.array(lat.momentum(kvec))
        phase = np.exp(1j * float(np.dot(p, x)))
        a = ladder_matrix(basis, mode).toarray()
        alpha = w_inv @ a @ w
        coeff = 1.0 / math.sqrt(2.0 * model.system.energy(mode) * lat.volume)
        out += coeff * (phase * alpha + np.conj(phase) * alpha.conj().T)
    return out


def restricted_norm(m: np.ndarray, basis: FockBasis, max_quanta: int) -> float:
    """Spectral norm of a matrix restricted to the <= max_quanta sub-block."""
    idx = basis.block_indices(max_quanta)
    sub = np.asarray(m)[np.ix_(idx, idx)]
    return float(np.linalg.norm(sub, ord=2))


def momentum_block_defect(model: ModelSpec, basis: FockBasis, h: sp.spmatrix) -> float:
    """Largest |H| matrix element connecting different total-momentum classes.

    Zero (exactly) for momentum-conserving models: H is block diagonal in
    total crystal momentum.
    """
    labels = basis.momentum_classes()
    hc = sp.coo_matrix(h)
    worst = 0.0
    for i, j, v in zip(hc.row, hc.col, hc.data):
        if labels[i] != labels[j]:
            worst = max(worst, abs(v))
    return worst
