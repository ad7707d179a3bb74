"""Operator algebra of a coupled spin pair.

Matrices are written in the polarization representation, i.e. in the
product eigenbasis of sigma_z^1 (x) sigma_z^2 ordered (uu, ud, du, dd).
Units have hbar = k_B = 1.

The five operators B1..B5 are Hermitian and orthonormal under the trace
inner product (A, B) = Tr{A^dagger B}:

    B1  total polarization           (sz1 + sz2) / 2**1.5
    B2  xx - yy spin correlation     (sx1 sx2 - sy1 sy2) / 2**1.5
    B3  yx + xy spin correlation     (sy1 sx2 + sx1 sy2) / 2**1.5
    B4  polarization difference      (sz1 - sz2) / 2**1.5
    B5  zz correlation               sz1 sz2 / 2

{B1, B2, B3} close an su(2) algebra, [B1, B2] = i sqrt(2) B3 and cyclic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegenerateField

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class FieldPoint:
    """External field ``omega`` and internal coupling ``j_coupling``."""

    omega: float
    j_coupling: float
    big_omega: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "big_omega", float(np.hypot(self.omega, self.j_coupling)))

    @property
    def gap(self):
        """Spacing between adjacent energy levels, Omega / sqrt(2)."""
        return self.big_omega / SQRT2

    def direction(self):
        """Unit vector of the energy axis in (b1, b2, b3) space."""
        if self.big_omega == 0.0:
            raise DegenerateField("omega = J = 0 has no energy axis")
        return np.array([self.omega, self.j_coupling, 0.0]) / self.big_omega


@dataclass(frozen=True)
class OperatorBasis:
    B1: np.ndarray
    B2: np.ndarray
    B3: np.ndarray
    B4: np.ndarray
    B5: np.ndarray
    identity: np.ndarray

    def __iter__(self):
        return iter((self.B1, self.B2, self.B3, self.B4, self.B5))

    def __getitem__(self, k):
        """1-based access, ``basis[3]`` is B3."""
        return (self.B1, self.B2, self.B3, self.B4, self.B5)[k - 1]


def _frozen(a):
    a = np.asarray(a, dtype=complex)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=1)
def build_basis() -> OperatorBasis:
    s = 1.0 / SQRT2
    b1 = np.diag([s, 0.0, 0.0, -s])
    b2 = np.zeros((4, 4))
    b2[0, 3] = b2[3, 0] = s
    b3 = np.zeros((4, 4), dtype=complex)
    b3[0, 3] = -1j * s
    b3[3, 0] = 1j * s
    b4 = np.diag([0.0, s, -s, 0.0])
    b5 = np.diag([0.5, -0.5, -0.5, 0.5])
    return OperatorBasis(*(_frozen(m) for m in (b1, b2, b3, b4, b5, np.eye(4))))


def inner(a, b):
    """Trace inner product Tr{a^dagger b}."""
    return np.trace(np.conj(np.transpose(a)) @ b)


def commutator(a, b):
    return a @ b - b @ a


def hamiltonian(fp: FieldPoint) -> np.ndarray:
    """H = omega B1 + J B2."""
    basis = build_basis()
    return fp.omega * basis.B1 + fp.j_coupling * basis.B2


def mixing_amplitudes(fp: FieldPoint):
    """Return (mu, chi) with mu**2 = (Omega - omega)/2 Omega, chi**2 = (Omega + omega)/2 Omega.

    ``mu`` carries the sign of J so that the transform stays an
    eigenvector matrix for negative couplings; for J >= 0 both are the
    plain square roots.
    """
    om = fp.big_omega
    if om == 0.0:
        raise DegenerateField("omega = J = 0: energy eigensystem undefined")
    mu = np.sqrt(max(om - fp.omega, 0.0) / (2.0 * om))
    chi = np.sqrt(max(om + fp.omega, 0.0) / (2.0 * om))
    return float(np.copysign(mu, fp.j_coupling)), float(chi)


def energy_eigensystem(fp: FieldPoint):
    """Eigenvalues and the involutive orthogonal matrix C with C H C diagonal.

    The eigenvalues come out ordered (-Omega/sqrt2, 0, 0, +Omega/sqrt2);
    C is real symmetric and C @ C = I, so the same matrix maps to and from
    the energy frame.
    """
    mu, chi = mixing_amplitudes(fp)
    c = np.array(
        [
            [-mu, 0.0, 0.0, chi],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [chi, 0.0, 0.0, mu],
        ]
    )
    g = fp.gap
    return np.array([-g, 0.0, 0.0, g]), c
