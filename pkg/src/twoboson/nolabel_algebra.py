"""Calculus of unordered two-boson kets.

A two-boson ket |A,B> is an *unordered* pair of single-particle states, so
|A,B> and |B,A> are the same object; linear combinations keep a tuple of
(coefficient, pair) terms with every pair canonicalized.  Amplitudes follow
the permanent-style transition rule

    <C,D|A,B> = <C|A><D|B> + <C|B><D|A>,

and projecting a single-particle bra onto a pair leaves a weighted
one-particle residual

    <C| applied to |A,B>  ->  (<C|A> |B> + <C|B> |A>) / sqrt(2).

No slot labels appear anywhere in this module; the dense two-slot tensors in
`fq_oracle` reproduce every quantity here by brute force and serve as the
independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .core_state import (
    ATOL_EXACT,
    SingleParticleState,
    SpatialAmplitudes,
    Spin,
    inner_single,
)

Pair = tuple[SingleParticleState, SingleParticleState]
Residual = tuple[tuple[complex, SingleParticleState], ...]

#: detector-definite mode amplitudes
DETECTOR_L = SpatialAmplitudes(1.0, 0.0)
DETECTOR_R = SpatialAmplitudes(0.0, 1.0)


class SpinConfigError(ValueError):
    """The spin configuration is outside the supported (up, down) sector."""


class NotDetectorBasisError(ValueError):
    """A state was expected to be expanded over detector-definite modes."""


def _ordered(pair: Pair) -> Pair:
    a, b = pair
    return (a, b) if a.sort_key() <= b.sort_key() else (b, a)


@dataclass(frozen=True)
class SymmetricTwoBosonState:
    """Linear combination of unordered two-boson kets.

    Build instances through :func:`symmetric_state`, which canonicalizes pair
    order, merges duplicate kets, and drops exact-zero coefficients, making
    the bosonic symmetry |A,B> = |B,A> structural rather than asserted.
    """

    terms: tuple[tuple[complex, Pair], ...]

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)


def symmetric_state(
    terms: Iterable[tuple[complex, Pair]],
) -> SymmetricTwoBosonState:
    merged: dict[Pair, complex] = {}
    dim: Optional[int] = None
    for coeff, pair in terms:
        pair = _ordered(pair)
        for st in pair:
            if dim is None:
                dim = st.dist.dim
            elif st.dist.dim != dim:
                raise ValueError(
                    "all terms of a two-boson state must share one "
                    f"distinguishability basis (dimension {dim} vs {st.dist.dim})"
                )
        merged[pair] = merged.get(pair, 0j) + complex(coeff)
    kept = [(c, p) for p, c in merged.items() if c != 0j]
    kept.sort(key=lambda item: (item[1][0].sort_key(), item[1][1].sort_key()))
    return SymmetricTwoBosonState(tuple(kept))


def transition_two(bra: Pair, ket: Pair) -> complex:
    """<C,D|A,B> = <C|A><D|B> + <C|B><D|A> for bra = (C, D), ket = (A, B)."""
    c, d = bra
    a, b = ket
    return inner_single(c, a) * inner_single(d, b) + inner_single(c, b) * inner_single(d, a)


def state_transition(bra: SymmetricTwoBosonState, ket: SymmetricTwoBosonState) -> complex:
    """Sesquilinear extension of transition_two to term sums."""
    total = 0j
    for cb, pb in bra.terms:
        for ck, pk in ket.terms:
            total += cb.conjugate() * ck * transition_two(pb, pk)
    return total


def norm_sq(state: SymmetricTwoBosonState) -> float:
    return float(state_transition(state, state).real)


def project_single(bra: SingleParticleState, ket: Pair) -> Residual:
    """Contract one single-particle bra, leaving a one-particle residual.

    Returns the formal sum (<bra|A> |B> + <bra|B> |A>) / sqrt(2) as
    (coefficient, state) entries; exact-zero coefficients are dropped, so a
    bra orthogonal to both constituents yields an empty residual.
    """
    a, b = ket
    out = []
    for coeff, rest in ((inner_single(bra, a), b), (inner_single(bra, b), a)):
        if coeff != 0j:
            out.append((coeff / np.sqrt(2.0), rest))
    return tuple(out)


def contract_residual(bra: SingleParticleState, residual: Residual) -> complex:
    """Apply a second single-particle bra to a projection residual."""
    return sum((c * inner_single(bra, st) for c, st in residual), 0j)


def detector_mode(s: SingleParticleState, atol: float = ATOL_EXACT) -> Optional[str]:
    """'L' or 'R' if the state occupies exactly one detector mode, else None."""
    wl = abs(s.spatial.a_l) ** 2
    wr = abs(s.spatial.a_r) ** 2
    if abs(wl - 1.0) <= atol and wr <= atol:
        return "L"
    if abs(wr - 1.0) <= atol and wl <= atol:
        return "R"
    return None


def expand_in_detector_basis(
    p_a: SingleParticleState, p_b: SingleParticleState
) -> SymmetricTwoBosonState:
    """Expand |Psi_A, Psi_B> over detector-definite unordered kets.

    For Psi_A = (alpha_l |L> + alpha_r |R>) x |up> x |phi_A> and
    Psi_B = (beta_l |L> + beta_r |R>) x |down> x |phi_B> the four terms are

        alpha_l beta_l |(L,up,phi_A),(L,down,phi_B)>
      + alpha_l beta_r |(L,up,phi_A),(R,down,phi_B)>
      + alpha_r beta_l |(L,down,phi_B),(R,up,phi_A)>
      + alpha_r beta_r |(R,up,phi_A),(R,down,phi_B)>.

    Each distinguishability vector travels with its own spin: phi_A stays
    attached to the up component wherever it lands, phi_B to the down one.
    """
    if p_a.spin is not Spin.UP or p_b.spin is not Spin.DOWN:
        raise SpinConfigError(
            "detector-basis expansion is defined for the (up, down) spin "
            f"configuration, got ({p_a.spin.name.lower()}, {p_b.spin.name.lower()})"
        )
    al, ar = p_a.spatial.a_l, p_a.spatial.a_r
    bl, br = p_b.spatial.a_l, p_b.spatial.a_r
    l_up_a = SingleParticleState(DETECTOR_L, Spin.UP, p_a.dist)
    r_up_a = SingleParticleState(DETECTOR_R, Spin.UP, p_a.dist)
    l_dn_b = SingleParticleState(DETECTOR_L, Spin.DOWN, p_b.dist)
    r_dn_b = SingleParticleState(DETECTOR_R, Spin.DOWN, p_b.dist)
    return symmetric_state(
        [
            (al * bl, (l_up_a, l_dn_b)),
            (al * br, (l_up_a, r_dn_b)),
            (ar * bl, (l_dn_b, r_up_a)),
            (ar * br, (r_up_a, r_dn_b)),
        ]
    )


def postselect_one_per_detector(s: SymmetricTwoBosonState) -> SymmetricTwoBosonState:
    """Keep only terms with exactly one particle at L and one at R.

    Coefficients are left untouched (no renormalization), so the surviving
    state carries the post-selection weight with it.  Idempotent.
    """
    kept = []
    for coeff, (x, y) in s.terms:
        mx, my = detector_mode(x), detector_mode(y)
        if mx is None or my is None:
            raise NotDetectorBasisError(
                "state is not in detector-basis form; expand_in_detector_basis first"
            )
        if {mx, my} == {"L", "R"}:
            kept.append((coeff, (x, y)))
    return symmetric_state(kept)
