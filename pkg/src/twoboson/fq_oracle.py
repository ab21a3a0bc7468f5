"""Brute-force cross-check in a pseudo-labeled two-slot representation.

Here the two bosons are written into explicit tensor slots, each slot of
dimension 2 (mode) x 2 (spin) x d (distinguishability), and physical states
are the slot-symmetrized tensors

    symmetrize(p1, p2) = (|p1>|p2> + |p2>|p1>) / sqrt(2).

With d <= 4 the full two-slot space holds at most 256 amplitudes, so every
quantity the unordered-ket calculus produces can be re-derived here by dumb
enumeration: transition amplitudes become dense contractions and the
post-selected spin density matrix becomes an index filter followed by a
partial trace.  Nothing in this module is clever on purpose.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core_state import BasisMismatchError, SingleParticleState, SpinDensityMatrix
from .nolabel_algebra import SymmetricTwoBosonState

_SPIN_BASIS = {0: np.array([1.0, 0.0]), 1: np.array([0.0, 1.0])}


def single_particle_vector(s: SingleParticleState) -> np.ndarray:
    """Dense single-slot vector, index layout (mode, spin, dist) row-major."""
    spatial = np.array([s.spatial.a_l, s.spatial.a_r], dtype=complex)
    dist = np.asarray(s.dist.amplitudes, dtype=complex)
    return np.kron(np.kron(spatial, _SPIN_BASIS[s.spin.value]), dist)


def _decode(index: int, d: int) -> tuple[int, int, int]:
    # inverse of index = (mode*2 + spin)*d + dist
    return index // (2 * d), (index // d) % 2, index % d


@dataclass(frozen=True, eq=False)
class LabeledState:
    """Two-slot tensor, stored as a (4d, 4d) array indexed (slot1, slot2)."""

    amps: np.ndarray
    dist_dim: int

    def __post_init__(self) -> None:
        a = np.array(self.amps, dtype=complex)
        n = 4 * self.dist_dim
        if a.shape != (n, n):
            raise ValueError(f"expected a ({n}, {n}) amplitude array, got {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "amps", a)


def symmetrize(p1: SingleParticleState, p2: SingleParticleState) -> LabeledState:
    """(|p1>|p2> + |p2>|p1>) / sqrt(2); for p1 = p2 this is sqrt(2)|p><p|."""
    if p1.dist.dim != p2.dist.dim:
        raise BasisMismatchError("states must share one distinguishability basis")
    v1 = single_particle_vector(p1)
    v2 = single_particle_vector(p2)
    return LabeledState((np.outer(v1, v2) + np.outer(v2, v1)) / np.sqrt(2.0), p1.dist.dim)


def swap_slots(x: LabeledState) -> LabeledState:
    return LabeledState(x.amps.T, x.dist_dim)


def labeled_inner(x: LabeledState, y: LabeledState) -> complex:
    """Full contraction <x|y> (x conjugated)."""
    if x.dist_dim != y.dist_dim:
        raise BasisMismatchError("states must share one distinguishability basis")
    return complex(np.vdot(x.amps, y.amps))


def labeled_norm_sq(x: LabeledState) -> float:
    return float(np.vdot(x.amps, x.amps).real)


def to_labeled(
    state: SymmetricTwoBosonState, dist_dim: Optional[int] = None
) -> LabeledState:
    """Linear extension of symmetrize to term sums of unordered kets."""
    if state.num_terms == 0:
        if dist_dim is None:
            raise ValueError("dist_dim is required to embed an empty state")
        n = 4 * dist_dim
        return LabeledState(np.zeros((n, n), dtype=complex), dist_dim)
    d = state.terms[0][1][0].dist.dim
    n = 4 * d
    total = np.zeros((n, n), dtype=complex)
    for coeff, (a, b) in state.terms:
        total += coeff * symmetrize(a, b).amps
    return LabeledState(total, d)


def mode_pattern_weights(x: LabeledState) -> dict[tuple[int, int], float]:
    """Squared norm of x split by detector occupation (n_L, n_R).

    The three weights sum to the full squared norm, which for a symmetrized
    product state is 1 + |<p1|p2>|^2 (bosonic bunching enhancement).
    """
    d = x.dist_dim
    weights = {(2, 0): 0.0, (1, 1): 0.0, (0, 2): 0.0}
    for i in range(4 * d):
        m1, _, _ = _decode(i, d)
        for j in range(4 * d):
            m2, _, _ = _decode(j, d)
            n_l = (m1 == 0) + (m2 == 0)
            weights[(n_l, 2 - n_l)] += abs(x.amps[i, j]) ** 2
    return weights


def oracle_postselected_density(x: LabeledState) -> SpinDensityMatrix:
    """Project onto one particle per detector, trace out distinguishability.

    Enumerates every labeled basis component whose mode pattern is one L and
    one R, accumulates amplitudes into (spin at L, spin at R, dist at L,
    dist at R) regardless of which slot holds which detector, and contracts
    the distinguishability indices.  Each orthonormal symmetrized (1,1)
    basis vector shows up as two labeled components, hence the 1/sqrt(2).
    """
    d = x.dist_dim
    w = np.zeros((2, 2, d, d), dtype=complex)
    for i in range(4 * d):
        m1, s1, a1 = _decode(i, d)
        for j in range(4 * d):
            amp = x.amps[i, j]
            if amp == 0j:
                continue
            m2, s2, a2 = _decode(j, d)
            if m1 == 0 and m2 == 1:
                w[s1, s2, a1, a2] += amp
            elif m1 == 1 and m2 == 0:
                w[s2, s1, a2, a1] += amp
    coeffs = w.reshape(4, d * d) / np.sqrt(2.0)
    rho = coeffs @ coeffs.conj().T
    return SpinDensityMatrix(rho, float(np.trace(rho).real))
