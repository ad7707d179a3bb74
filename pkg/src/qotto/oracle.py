"""Dense 4x4 Lindblad dynamics, used as an independent check of the reduced model.

The dissipator is written with the dagger placement

    L_D*(A) = sum_j F_j A F_j^dag - 1/2 (F_j F_j^dag A + A F_j F_j^dag)

(Heisenberg picture).  With this ordering F_1 = sqrt(k_down) |2><1| drives
population *down* from level 2 to level 1.  The Schroedinger-picture
generator is obtained by trace duality, Tr{A L(rho)} = Tr{L*(A) rho}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import FieldPoint, SQRT2, commutator, energy_eigensystem, hamiltonian
from .errors import DegenerateField, InvalidBath, InvalidState

# (row, col, uses k_down) in the energy frame: F1..F8 per the transition scheme
_TRANSITIONS = (
    (1, 0, True),
    (0, 1, False),
    (2, 0, True),
    (0, 2, False),
    (3, 1, True),
    (1, 3, False),
    (3, 2, True),
    (2, 3, False),
)


@dataclass(frozen=True)
class BathParams:
    """Bath temperature with relaxation rate Gamma = k_down + k_up and dephasing gamma."""

    temperature: float
    gamma_relax: float
    gamma_dephase: float = 0.0

    def __post_init__(self):
        if not self.temperature > 0.0:
            raise InvalidBath(f"temperature must be positive, got {self.temperature}")
        if self.gamma_relax < 0.0 or self.gamma_dephase < 0.0:
            raise InvalidBath("rates must be non-negative")

    def rates(self, fp: FieldPoint):
        """(k_down, k_up) obeying k_up/k_down = exp(-Omega/(sqrt2 T)) and summing to Gamma."""
        boltz = np.exp(-fp.gap / self.temperature)
        k_down = self.gamma_relax / (1.0 + boltz)
        return k_down, self.gamma_relax - k_down


def build_jump_operators(fp: FieldPoint, bath: BathParams):
    """The eight jump operators F1..F8 in the polarization representation."""
    if fp.big_omega == 0.0:
        raise DegenerateField("omega = J = 0")
    if bath.gamma_relax <= 0.0:
        raise InvalidBath("jump operators need Gamma > 0")
    _, c = energy_eigensystem(fp)
    k_down, k_up = bath.rates(fp)
    ops = []
    for i, j, down in _TRANSITIONS:
        e = np.zeros((4, 4))
        e[i, j] = 1.0
        ops.append(np.sqrt(k_down if down else k_up) * (c @ e @ c))
    return tuple(ops)


def dissipator_heisenberg(a, jumps):
    out = np.zeros((4, 4), dtype=complex)
    for f in jumps:
        fd = f.conj().T
        ffd = f @ fd
        out += f @ a @ fd - 0.5 * (ffd @ a + a @ ffd)
    return out


def dephasing_heisenberg(a, h, gamma):
    """Elastic (pure dephasing) generator -gamma [H, [H, A]]."""
    return -gamma * commutator(h, commutator(h, a))


def heisenberg_generator(a, fp: FieldPoint, bath: BathParams | None):
    """Full L*(A) = i[H, A] + L_D*(A) + L_De*(A); ``bath=None`` gives the unitary part only."""
    h = hamiltonian(fp)
    out = 1j * commutator(h, a)
    if bath is not None:
        if bath.gamma_relax > 0.0:
            out = out + dissipator_heisenberg(a, build_jump_operators(fp, bath))
        out = out + dephasing_heisenberg(a, h, bath.gamma_dephase)
    return out


def schrodinger_generator(rho, fp: FieldPoint, bath: BathParams | None):
    """Trace dual of :func:`heisenberg_generator`."""
    h = hamiltonian(fp)
    out = -1j * commutator(h, rho)
    if bath is not None:
        if bath.gamma_relax > 0.0:
            for f in build_jump_operators(fp, bath):
                fd = f.conj().T
                ffd = f @ fd
                out = out + fd @ rho @ f - 0.5 * (ffd @ rho + rho @ ffd)
        out = out + dephasing_heisenberg(rho, h, bath.gamma_dephase)
    return out


def liouvillian_matrix(fp: FieldPoint, bath: BathParams | None):
    """16x16 matrix of the Schroedinger generator acting on row-major vec(rho)."""
    cols = []
    for k in range(16):
        e = np.zeros(16, dtype=complex)
        e[k] = 1.0
        cols.append(schrodinger_generator(e.reshape(4, 4), fp, bath).ravel())
    return np.array(cols).T


def check_density(rho, tol=1e-9):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidState(f"expected a 4x4 matrix, got shape {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise InvalidState("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise InvalidState(f"trace is {np.trace(rho).real}, not 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -tol:
        raise InvalidState("density matrix has a negative eigenvalue")
    return rho


def default_steps(fp: FieldPoint, duration):
    """Step count keeping dt <= 0.001 / Omega."""
    return max(1, int(np.ceil(duration * max(fp.big_omega, 1.0) / 1e-3)))


def integrate_master_equation(rho0, fp: FieldPoint, bath: BathParams, duration, steps=None):
    """Classical RK4 with ``steps`` equal steps of the Lindblad equation at fixed field.

    The generator is linear and autonomous, so one RK4 step is the matrix
    polynomial T = 1 + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24 and ``steps``
    steps are T**steps, evaluated by repeated squaring.  This is the same
    map a step-by-step loop produces, without the Python-level loop.
    """
    rho0 = check_density(rho0)
    if duration == 0:
        return rho0.copy()
    if steps is None:
        steps = default_steps(fp, duration)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    hl = liouvillian_matrix(fp, bath) * (duration / steps)
    t = np.eye(16, dtype=complex)
    term = np.eye(16, dtype=complex)
    for k in range(1, 5):
        term = term @ hl / k
        t = t + term
    rho = (np.linalg.matrix_power(t, steps) @ rho0.ravel()).reshape(4, 4)
    return 0.5 * (rho + rho.conj().T)


def expectation(rho, a):
    """<A> = Tr{A^dagger rho}."""
    return complex(np.trace(np.conj(np.transpose(a)) @ rho))


def equilibrium_density(fp: FieldPoint, temperature):
    """Gibbs state exp(-H/T)/Z in the polarization representation."""
    x = fp.gap / temperature
    # shift by the largest exponent to avoid overflow at low temperature
    w = np.exp(np.array([x, 0.0, 0.0, -x]) - x)
    _, c = energy_eigensystem(fp)
    return c @ np.diag(w / w.sum()) @ c
