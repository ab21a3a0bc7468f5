"""Shared value types for two-boson interference calculations.

A single boson carries three independent degrees of freedom: complex
amplitudes on the two detector modes L and R, a two-valued pseudospin, and a
unit vector over a finite orthonormal basis of whatever internal property
(arrival time, spectral shape, ...) could make the particles distinguishable
without being measured.  Single-particle inner products factorize over the
three parts,

    <x|y> = <spatial_x|spatial_y> * <spin_x|spin_y> * <dist_x|dist_y>,

and everything downstream is built from these pairwise overlaps.  All types
here are immutable; operations never mutate their inputs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

#: absolute tolerance for identities that hold in exact arithmetic
ATOL_EXACT = 1e-12
#: absolute tolerance for end-to-end pipeline comparisons
ATOL_PIPELINE = 1e-9


class ValidationError(ValueError):
    """An invariant of a value type is violated."""


class BasisMismatchError(ValueError):
    """Two states carry distinguishability vectors over different bases."""


class Spin(enum.Enum):
    UP = 0
    DOWN = 1


def spin_overlap(a: Spin, b: Spin) -> float:
    return 1.0 if a is b else 0.0


@dataclass(frozen=True)
class SpatialAmplitudes:
    """Complex amplitudes on the two detector modes (|L>, |R>)."""

    a_l: complex
    a_r: complex

    def __post_init__(self) -> None:
        object.__setattr__(self, "a_l", complex(self.a_l))
        object.__setattr__(self, "a_r", complex(self.a_r))

    def overlap(self, other: "SpatialAmplitudes") -> complex:
        return self.a_l.conjugate() * other.a_l + self.a_r.conjugate() * other.a_r

    def norm_sq(self) -> float:
        return abs(self.a_l) ** 2 + abs(self.a_r) ** 2

    @classmethod
    def normalized(cls, a_l: complex, a_r: complex) -> "SpatialAmplitudes":
        n = np.hypot(abs(a_l), abs(a_r))
        if n == 0.0:
            raise ValidationError("cannot normalize a zero amplitude pair")
        return cls(a_l / n, a_r / n)


@dataclass(frozen=True)
class DistVector:
    """Unit vector over a finite orthonormal distinguishability basis.

    Only pairwise overlaps <phi_A|phi_B> ever enter the formulas downstream,
    so the basis itself stays anonymous; the dimension just has to agree
    between states that meet in an inner product.
    """

    amplitudes: tuple[complex, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "amplitudes", tuple(complex(a) for a in self.amplitudes)
        )
        if len(self.amplitudes) == 0:
            raise ValidationError("distinguishability vector needs dimension >= 1")

    @property
    def dim(self) -> int:
        return len(self.amplitudes)

    def overlap(self, other: "DistVector") -> complex:
        _check_dist_dims(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def norm_sq(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes))

    @classmethod
    def normalized(cls, amplitudes: Iterable[complex]) -> "DistVector":
        amps = tuple(complex(a) for a in amplitudes)
        n = np.linalg.norm(np.asarray(amps))
        if n == 0.0:
            raise ValidationError("cannot normalize a zero distinguishability vector")
        return cls(tuple(a / n for a in amps))


def _check_dist_dims(a: DistVector, b: DistVector) -> None:
    if a.dim != b.dim:
        raise BasisMismatchError(
            f"incompatible distinguishability bases: dimension {a.dim} vs {b.dim}"
        )


@dataclass(frozen=True)
class SingleParticleState:
    """One boson: detector-mode amplitudes, pseudospin, distinguishability."""

    spatial: SpatialAmplitudes
    spin: Spin
    dist: DistVector

    def sort_key(self) -> tuple[float, ...]:
        # deterministic total order on (mode amplitudes, spin, dist vector),
        # used to canonicalize unordered pairs
        flat: list[float] = [
            self.spatial.a_l.real,
            self.spatial.a_l.imag,
            self.spatial.a_r.real,
            self.spatial.a_r.imag,
            float(self.spin.value),
        ]
        for a in self.dist.amplitudes:
            flat.extend((a.real, a.imag))
        return tuple(flat)


def inner_single(x: SingleParticleState, y: SingleParticleState) -> complex:
    """Factorized single-particle inner product <x|y> (x enters as the bra)."""
    s = spin_overlap(x.spin, y.spin)
    if s == 0.0:
        _check_dist_dims(x.dist, y.dist)  # still reject mixed bases
        return 0j
    return x.spatial.overlap(y.spatial) * s * x.dist.overlap(y.dist)


def validate(s: SingleParticleState) -> None:
    """Accept iff all norm invariants hold within ATOL_EXACT, else raise.

    The error message names the failing invariant and reports the measured
    squared norm so callers can see by how much it is off.
    """
    nsq = s.spatial.norm_sq()
    if abs(nsq - 1.0) > ATOL_EXACT:
        raise ValidationError(
            f"detector-mode amplitudes not unit norm: |a_L|^2 + |a_R|^2 = {nsq:.12g} "
            f"(off by {abs(nsq - 1.0):.3g})"
        )
    nsq = s.dist.norm_sq()
    if abs(nsq - 1.0) > ATOL_EXACT:
        raise ValidationError(
            f"distinguishability vector not unit norm: |phi|^2 = {nsq:.12g} "
            f"(off by {abs(nsq - 1.0):.3g})"
        )


# ---------------------------------------------------------------------------
# two-qubit spin density matrix (shared by the oracle and the algebraic route)
# ---------------------------------------------------------------------------

#: row/column order of SpinDensityMatrix.matrix; the particle found at L is
#: qubit one, the particle found at R is qubit two
SPIN_BASIS_LABELS = ("L-up,R-up", "L-up,R-down", "L-down,R-up", "L-down,R-down")


@dataclass(frozen=True, eq=False)
class SpinDensityMatrix:
    """Unnormalized 4x4 matrix over SPIN_BASIS_LABELS plus its weight.

    `weight` is the post-selection probability mass (the trace); keeping the
    matrix unnormalized preserves that information so callers can choose
    between conditional (normalize) and raw readings.
    """

    matrix: np.ndarray
    weight: float

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValidationError(f"spin density matrix must be 4x4, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "weight", float(self.weight))

    def normalized(self) -> np.ndarray:
        if not self.weight > 0.0:
            raise ValidationError("no post-selection support (weight = 0)")
        return self.matrix / self.weight

    def validate(self, atol: float = ATOL_EXACT) -> None:
        dev = float(np.max(np.abs(self.matrix - self.matrix.conj().T)))
        if dev > atol:
            raise ValidationError(f"matrix not Hermitian (max deviation {dev:.3g})")
        low = float(np.min(np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)))
        if low < -atol:
            raise ValidationError(f"matrix not positive semidefinite (eigenvalue {low:.3g})")
        dev = abs(float(np.trace(self.matrix).real) - self.weight)
        if dev > atol:
            raise ValidationError(f"trace does not match weight (off by {dev:.3g})")
