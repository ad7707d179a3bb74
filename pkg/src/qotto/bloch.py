"""Reduced dynamics of the five expectation values b_k = <B_k>.

On a constant-field branch in contact with a bath the closed triple
(b1, b2, b3) obeys db/dt = M b - c.  M is a rotation about the energy
axis n = (omega, J, 0)/Omega at angular rate sqrt(2) Omega, plus damping
-Gamma along n and -(Gamma + 2 gamma Omega**2) across it.  b4 decays at
Gamma and b5 relaxes at 2 Gamma, driven by b1 and b2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import SQRT2, FieldPoint
from .errors import DegenerateField
from .oracle import BathParams


@dataclass(frozen=True)
class BVector:
    b1: float = 0.0
    b2: float = 0.0
    b3: float = 0.0
    b4: float = 0.0
    b5: float = 0.0

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a, dtype=float)
        return cls(*(float(x) for x in a[:5]))

    def as_array(self):
        return np.array([self.b1, self.b2, self.b3, self.b4, self.b5])

    @property
    def triple(self):
        return np.array([self.b1, self.b2, self.b3])

    def with_triple(self, v):
        return BVector(float(v[0]), float(v[1]), float(v[2]), self.b4, self.b5)


@dataclass(frozen=True)
class AffineMap:
    """b -> matrix @ b + offset on the five-component state."""

    matrix: np.ndarray
    offset: np.ndarray

    def __call__(self, b):
        if isinstance(b, BVector):
            return BVector.from_array(self.matrix @ b.as_array() + self.offset)
        return self.matrix @ np.asarray(b, dtype=float) + self.offset

    def then(self, other: "AffineMap") -> "AffineMap":
        """Apply ``self`` first, then ``other``."""
        return AffineMap(other.matrix @ self.matrix, other.matrix @ self.offset + other.offset)

    @classmethod
    def identity(cls):
        return cls(np.eye(5), np.zeros(5))

    @classmethod
    def linear_triple(cls, u):
        m = np.eye(5)
        m[:3, :3] = u
        return cls(m, np.zeros(5))


@dataclass(frozen=True)
class EomSystem:
    drift: np.ndarray
    source: np.ndarray

    def rhs(self, triple):
        return self.drift @ triple - self.source


@dataclass(frozen=True)
class IsochorePropagator:
    U: np.ndarray
    b_eq: BVector
    dt: float


def _require_field(fp):
    if fp.big_omega == 0.0:
        raise DegenerateField("omega = J = 0")


def polarization_bias(fp: FieldPoint, bath: BathParams):
    """(k_down - k_up) / Gamma = tanh(Omega / (2 sqrt2 T)), finite also at Gamma = 0."""
    return float(np.tanh(fp.gap / (2.0 * bath.temperature)))


def eom_system(fp: FieldPoint, bath: BathParams) -> EomSystem:
    """Drift matrix and source vector of d(b1, b2, b3)/dt = drift @ b - source.

    The dephasing block is -2 gamma (Omega**2 I - n n^T) with n = (omega, J, 0),
    which leaves the energy omega b1 + J b2 untouched by pure dephasing.
    """
    _require_field(fp)
    w, j, om = fp.omega, fp.j_coupling, fp.big_omega
    gam, g = bath.gamma_relax, bath.gamma_dephase
    rot = SQRT2 * np.array([[0.0, 0.0, j], [0.0, 0.0, -w], [-j, w, 0.0]])
    n = np.array([w, j, 0.0])
    drift = -gam * np.eye(3) + rot - 2.0 * g * (om**2 * np.eye(3) - np.outer(n, n))
    k_diff = gam * polarization_bias(fp, bath)
    source = np.array([w, j, 0.0]) * k_diff / (SQRT2 * om)
    return EomSystem(drift, source)


def equilibrium_bvector(fp: FieldPoint, bath: BathParams) -> BVector:
    _require_field(fp)
    scale = -polarization_bias(fp, bath) / (SQRT2 * fp.big_omega)
    b1 = scale * fp.omega
    b2 = scale * fp.j_coupling
    return BVector(b1, b2, 0.0, 0.0, b1 * b1 + b2 * b2)


def _rotation_parts(fp: FieldPoint):
    w, j, om = fp.omega, fp.j_coupling, fp.big_omega
    n = np.array([w, j, 0.0]) / om
    par = np.outer(n, n)
    # generator of the rotation, normalized so that expm(theta*k) rotates by theta
    k = np.array([[0.0, 0.0, j], [0.0, 0.0, -w], [-j, w, 0.0]]) / om
    return par, np.eye(3) - par, k


def isochore_propagator(fp: FieldPoint, bath: BathParams, dt) -> IsochorePropagator:
    _require_field(fp)
    b_eq = equilibrium_bvector(fp, bath)
    if dt == 0:
        return IsochorePropagator(np.eye(3), b_eq, 0.0)
    if np.isinf(dt):
        return IsochorePropagator(np.zeros((3, 3)), b_eq, float(dt))
    gam, om = bath.gamma_relax, fp.big_omega
    par, perp, k = _rotation_parts(fp)
    theta = SQRT2 * om * dt
    c, s = np.cos(theta), np.sin(theta)
    decay_t = np.exp(-(gam + 2.0 * bath.gamma_dephase * om**2) * dt)
    u = np.exp(-gam * dt) * par + decay_t * (c * perp + s * k)
    return IsochorePropagator(u, b_eq, float(dt))


def _b5_coefficients(fp: FieldPoint, bath: BathParams, dt):
    """Return (g, e2) such that b5(dt) = g . (b123(0) - b_eq) + e2 (b5(0) - b5_eq) + b5_eq."""
    w, j, om = fp.omega, fp.j_coupling, fp.big_omega
    gam = bath.gamma_relax
    gt = gam + 2.0 * bath.gamma_dephase * om**2
    eq = equilibrium_bvector(fp, bath)
    if np.isinf(dt):
        return np.zeros(3), 0.0
    e1, e2, et = np.exp(-gam * dt), np.exp(-2.0 * gam * dt), np.exp(-gt * dt)
    theta = SQRT2 * om * dt
    c, s = np.cos(theta), np.sin(theta)
    energy_eq = w * eq.b1 + j * eq.b2
    g = 2.0 / om**2 * energy_eq * (e1 - e2) * np.array([w, j, 0.0])
    k0 = 2.0 * gam * (j * eq.b1 - w * eq.b2) / (om**2 * (gt**2 + 2.0 * om**2))
    # k1 = p . delta, k2 = q . delta
    p = np.array([j * gt, -w * gt, -SQRT2 * om**2])
    q = np.array([SQRT2 * om * j, -SQRT2 * om * w, om * gt])
    g = g + k0 * ((c * et - e2) * p + s * et * q)
    return g, e2


def isochore_affine(fp: FieldPoint, bath: BathParams, dt) -> AffineMap:
    """Exact five-component map of a constant-field bath contact of length ``dt``."""
    prop = isochore_propagator(fp, bath, dt)
    eq = prop.b_eq.as_array()
    g, e2 = _b5_coefficients(fp, bath, dt)
    e_b4 = 0.0 if np.isinf(dt) else np.exp(-bath.gamma_relax * dt)
    m = np.zeros((5, 5))
    m[:3, :3] = prop.U
    m[3, 3] = e_b4
    m[4, :3] = g
    m[4, 4] = e2
    offset = eq - m @ eq
    return AffineMap(m, offset)


def propagate_isochore(b: BVector, prop: IsochorePropagator, fp: FieldPoint, bath: BathParams) -> BVector:
    delta = b.triple - prop.b_eq.triple
    triple = prop.U @ delta + prop.b_eq.triple
    if np.isinf(prop.dt):
        b4 = 0.0
    else:
        b4 = b.b4 * np.exp(-bath.gamma_relax * prop.dt)
    g, e2 = _b5_coefficients(fp, bath, prop.dt)
    b5 = g @ delta + e2 * (b.b5 - prop.b_eq.b5) + prop.b_eq.b5
    return BVector(triple[0], triple[1], triple[2], float(b4), float(b5))


def isochore_rates(b: BVector, fp: FieldPoint, bath: BathParams) -> BVector:
    """Time derivative of all five components at fixed field."""
    eom = eom_system(fp, bath)
    d123 = eom.rhs(b.triple)
    eq = equilibrium_bvector(fp, bath)
    gam = bath.gamma_relax
    db5 = 2.0 * gam * (eq.b1 * b.b1 + eq.b2 * b.b2 - b.b5)
    return BVector(d123[0], d123[1], d123[2], -gam * b.b4, db5)
