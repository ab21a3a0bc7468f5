"""Spin entanglement of the post-selected pair.

Tracing the unmeasured distinguishability degree out of a one-particle-per-
detector state leaves a two-qubit density matrix whose off-diagonal coherence
is damped by |<phi_A|phi_B>|^2 -- partial distinguishability converts the
pure superposition into a mixture.  This module computes that matrix, its
Wootters concurrence, the closed-form concurrence

    C = 4 |alpha_l alpha_r beta_l beta_r| |<phi_A|phi_B>|^2,

and the superselection-respecting average over detector occupation numbers
(bunched branches carry no accessible spin entanglement).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core_state import (
    ATOL_EXACT,
    ATOL_PIPELINE,
    SingleParticleState,
    SpatialAmplitudes,
    SpinDensityMatrix,
)
from . import fq_oracle
from .nolabel_algebra import SymmetricTwoBosonState, detector_mode


class NotPostSelectedError(ValueError):
    """The input still contains double-occupancy (LL or RR) terms."""


class NoPostSelectionSupportError(ValueError):
    """Normalization was requested but the post-selected weight is zero."""


def trace_out_distinguishability(s: SymmetricTwoBosonState) -> SpinDensityMatrix:
    """Partial trace over the distinguishability vectors of a (1,1) state.

    Every term must hold exactly one particle at L and one at R; accumulate
    rho[(sL,sR),(sL',sR')] from pairwise dist overlaps, which is equivalent
    to summing projections onto any orthonormal distinguishability basis but
    never materializes one.  The result is unnormalized: its trace is the
    post-selection weight.
    """
    # (row index, coefficient incl. mode phases, dist at L, dist at R)
    entries = []
    for coeff, (x, y) in s.terms:
        mx, my = detector_mode(x), detector_mode(y)
        if {mx, my} != {"L", "R"}:
            raise NotPostSelectedError(
                "state contains a double-occupancy term; apply "
                "postselect_one_per_detector before tracing"
            )
        at_l, at_r = (x, y) if mx == "L" else (y, x)
        row = 2 * at_l.spin.value + at_r.spin.value
        entries.append(
            (row, coeff * at_l.spatial.a_l * at_r.spatial.a_r, at_l.dist, at_r.dist)
        )
    rho = np.zeros((4, 4), dtype=complex)
    for i, ci, li, ri in entries:
        for j, cj, lj, rj in entries:
            rho[i, j] += ci * cj.conjugate() * lj.overlap(li) * rj.overlap(ri)
    return SpinDensityMatrix(rho, float(np.trace(rho).real))


_SPIN_FLIP = np.array(
    [
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
    ]
)  # sigma_y (x) sigma_y, real in this basis


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh((m + m.conj().T) / 2)
    evals = np.clip(evals, 0.0, None)  # clip tiny negatives from roundoff
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def wootters_concurrence(rho: SpinDensityMatrix, normalize: bool = False) -> float:
    """max(0, l1 - l2 - l3 - l4) from the spin-flipped eigenvalue spectrum.

    The l_i are the square roots of the eigenvalues of rho rho~ with
    rho~ = (sigma_y x sigma_y) rho* (sigma_y x sigma_y), computed through the
    Hermitian similar product sqrt(rho) rho~ sqrt(rho) so only `eigvalsh`
    appears.  Without `normalize` the value scales linearly with the trace,
    which is what the closed-form comparison below relies on.
    """
    if normalize:
        if not rho.weight > 0.0:
            raise NoPostSelectionSupportError("no post-selection support (weight = 0)")
        m = rho.normalized()
    else:
        m = np.asarray(rho.matrix, dtype=complex)
    tilde = _SPIN_FLIP @ m.conj() @ _SPIN_FLIP
    root = _psd_sqrt(m)
    prod = root @ tilde @ root
    evals = np.linalg.eigvalsh((prod + prod.conj().T) / 2)
    # eigenvalues below ~1e-15 of the leading one are solver residue, not
    # spectrum; taking their square root would inject sqrt(eps)-sized noise
    # into the subtraction (pure states would read ~3e-9 instead of exact)
    evals[evals < evals[-1] * 1e-14] = 0.0
    lams = np.sqrt(np.clip(evals, 0.0, None))[::-1]
    return float(max(0.0, lams[0] - lams[1] - lams[2] - lams[3]))


def concurrence_closed_form(
    alphas: SpatialAmplitudes, betas: SpatialAmplitudes, overlap: complex
) -> float:
    """C = 4 |alpha_l alpha_r beta_l beta_r| |overlap|^2.

    Equals twice the unnormalized Wootters concurrence of the post-selected
    matrix, and coincides with the normalized one exactly on the balanced
    manifold |alpha_l beta_r| = |alpha_r beta_l|.
    """
    mag = abs(overlap)
    if mag > 1.0 + ATOL_EXACT:
        raise ValueError(f"|overlap| = {mag:.12g} exceeds 1")
    return 4.0 * abs(alphas.a_l * alphas.a_r * betas.a_l * betas.a_r) * mag**2


@dataclass(frozen=True)
class Branch:
    """One detector occupation sector: (n_L, n_R), its probability, and the
    post-selected spin matrix for the (1,1) sector (None when bunched)."""

    n_l: int
    n_r: int
    probability: float
    state: Optional[SpinDensityMatrix]


@dataclass(frozen=True)
class NumberDistribution:
    branches: tuple[Branch, ...]


def number_distribution(
    p_a: SingleParticleState, p_b: SingleParticleState
) -> NumberDistribution:
    """Occupation-number branches of the symmetrized pair, oracle-derived.

    Probabilities come from the labeled-tensor norm decomposition, including
    the 1 + |<Psi_A|Psi_B>|^2 bunching normalization; the (1,1) branch keeps
    its unnormalized spin matrix.
    """
    labeled = fq_oracle.symmetrize(p_a, p_b)
    weights = fq_oracle.mode_pattern_weights(labeled)
    total = sum(weights.values())
    rho = fq_oracle.oracle_postselected_density(labeled)
    return NumberDistribution(
        (
            Branch(2, 0, float(weights[(2, 0)] / total), None),
            Branch(1, 1, float(weights[(1, 1)] / total), rho),
            Branch(0, 2, float(weights[(0, 2)] / total), None),
        )
    )


def entanglement_of_particles(nd: NumberDistribution) -> float:
    """Probability-weighted entanglement over occupation branches.

    Bunched branches contribute zero (their spin state is not accessible to
    local detectors); the (1,1) branch contributes its normalized Wootters
    concurrence weighted by the branch probability.
    """
    total = sum(b.probability for b in nd.branches)
    if abs(total - 1.0) > ATOL_PIPELINE:
        raise ValueError(f"branch probabilities sum to {total:.12g}, not 1")
    if any(b.probability < -ATOL_EXACT for b in nd.branches):
        raise ValueError("branch probabilities must be nonnegative")
    value = 0.0
    for b in nd.branches:
        if (b.n_l, b.n_r) == (1, 1) and b.state is not None and b.probability > 0.0:
            value += b.probability * wootters_concurrence(b.state, normalize=True)
    return float(value)


__all__ = [
    "Branch",
    "NoPostSelectionSupportError",
    "NotPostSelectedError",
    "NumberDistribution",
    "SpinDensityMatrix",
    "concurrence_closed_form",
    "entanglement_of_particles",
    "number_distribution",
    "trace_out_distinguishability",
    "wootters_concurrence",
]
