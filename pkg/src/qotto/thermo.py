"""State reconstruction, entropies, dynamical temperature and cycle bookkeeping.

Sign conventions: heat Q and work W are counted positive when they flow
*into* the working medium, so on every branch dE = W + Q.  The work the
engine delivers is W_out = -W_net.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import SQRT2, FieldPoint, build_basis, energy_eigensystem
from .bloch import BVector, isochore_rates
from .errors import DegenerateField, NotClosed, PhaseUndefined, UndefinedTemperature, UnphysicalState
from .oracle import BathParams

PROB_SLACK = 1e-9
DENOM_TOL = 1e-12
PHASE_TOL = 1e-14


def reconstruct_polarization(b: BVector):
    """rho = I/4 + sum_k b_k B_k in the polarization representation."""
    basis = build_basis()
    rho = 0.25 * np.eye(4, dtype=complex)
    for bk, op in zip(b.as_array(), basis):
        rho = rho + bk * op
    return rho


def energy(b: BVector, fp: FieldPoint):
    return fp.omega * b.b1 + fp.j_coupling * b.b2


def reconstruct_energy_basis(b: BVector, fp: FieldPoint):
    """Density matrix in the energy eigenbasis, written out in closed form."""
    if fp.big_omega == 0.0:
        raise DegenerateField("omega = J = 0")
    om = fp.big_omega
    e = energy(b, fp)
    # component of (b1, b2) across the energy axis
    x = (-fp.j_coupling * b.b1 + fp.omega * b.b2) / om
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 0.25 - e / (SQRT2 * om) + 0.5 * b.b5
    rho[1, 1] = 0.25 + b.b4 / SQRT2 - 0.5 * b.b5
    rho[2, 2] = 0.25 - b.b4 / SQRT2 - 0.5 * b.b5
    rho[3, 3] = 0.25 + e / (SQRT2 * om) + 0.5 * b.b5
    rho[0, 3] = (x + 1j * b.b3) / SQRT2
    rho[3, 0] = (x - 1j * b.b3) / SQRT2
    return rho


def energy_probabilities(b: BVector, fp: FieldPoint):
    """Diagonal of the energy-basis density matrix, levels ordered from the ground state."""
    if fp.big_omega == 0.0:
        raise DegenerateField("omega = J = 0")
    e = energy(b, fp) / (SQRT2 * fp.big_omega)
    return np.array(
        [
            0.25 - e + 0.5 * b.b5,
            0.25 + b.b4 / SQRT2 - 0.5 * b.b5,
            0.25 - b.b4 / SQRT2 - 0.5 * b.b5,
            0.25 + e + 0.5 * b.b5,
        ]
    )


def eigen_probabilities(b: BVector):
    """Spectrum of the reconstructed state, from D = |(b1, b2, b3)|."""
    d = np.sqrt(b.b1**2 + b.b2**2 + b.b3**2)
    p = np.array(
        [
            0.25 - d / SQRT2 + 0.5 * b.b5,
            0.25 + d / SQRT2 + 0.5 * b.b5,
            0.25 + b.b4 / SQRT2 - 0.5 * b.b5,
            0.25 - b.b4 / SQRT2 - 0.5 * b.b5,
        ]
    )
    if p.min() < -PROB_SLACK:
        raise UnphysicalState(f"negative eigenvalue {p.min():.3e}")
    return p


def _clamped(p):
    p = np.asarray(p, dtype=float)
    if p.min() < -PROB_SLACK or p.max() > 1.0 + PROB_SLACK:
        raise UnphysicalState(f"probabilities out of range: {p}")
    return np.clip(p, 0.0, 1.0)


def entropy(probabilities):
    """Shannon entropy -sum p ln p with 0 ln 0 = 0."""
    p = _clamped(probabilities)
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log(nz)))


def entropy_energy(b: BVector, fp: FieldPoint):
    return entropy(energy_probabilities(b, fp))


def entropy_vn(b: BVector):
    return entropy(eigen_probabilities(b))


def _log_ratio(a, c):
    if a <= 0.0 or c <= 0.0:
        raise UndefinedTemperature("a level population vanishes")
    return float(np.log(a / c))


def _adiabat_temperature(p, fp):
    lr = _log_ratio(p[0], p[3])
    if abs(lr) < DENOM_TOL:
        raise UndefinedTemperature("p1 = p4: log ratio vanishes")
    return SQRT2 * fp.big_omega / lr


def dynamical_temperature(b: BVector, fp: FieldPoint, omega_dot=0.0, bath: BathParams | None = None):
    """T_dyn = dE/dt divided by dS_E/dt.

    Without a bath (adiabat) the quasi-static form sqrt2 Omega / ln(p1/p4)
    is returned.  With a bath the rates of change follow from the
    equations of motion, including the field drive when ``omega_dot`` is
    nonzero.  At equilibrium both rates vanish; that limit is resolved by
    the population ratio, which then equals the bath temperature.
    """
    p = energy_probabilities(b, fp)
    if bath is None:
        return _adiabat_temperature(p, fp)
    db = isochore_rates(b, fp, bath)
    om = fp.big_omega
    e = energy(b, fp)
    de = omega_dot * b.b1 + fp.omega * db.b1 + fp.j_coupling * db.b2
    # d/dt (E / Omega) with Omega moving through omega
    d_eo = de / om - e * fp.omega * omega_dot / om**3
    dp = np.array(
        [
            -d_eo / SQRT2 + 0.5 * db.b5,
            db.b4 / SQRT2 - 0.5 * db.b5,
            -db.b4 / SQRT2 - 0.5 * db.b5,
            d_eo / SQRT2 + 0.5 * db.b5,
        ]
    )
    pc = _clamped(p)
    if pc.min() <= 0.0:
        raise UndefinedTemperature("a level population vanishes")
    ds = -float(np.sum(dp * (1.0 + np.log(pc))))
    if abs(ds) < DENOM_TOL:
        if abs(de) < DENOM_TOL:
            return _adiabat_temperature(p, fp)
        raise UndefinedTemperature(f"entropy rate {ds:.3e} vanishes while dE/dt = {de:.3e}")
    return de / ds


def two_level_temperature(b1, omega):
    """Temperature of two uncorrelated spins with polarization b1 at J = 0."""
    x = b1 / SQRT2
    return omega / (SQRT2 * np.log((0.5 - x) / (0.5 + x)))


@dataclass(frozen=True)
class PhaseInfo:
    modulus: float
    phi: float
    phi_b: float


def phase_observable(b: BVector, fp: FieldPoint) -> PhaseInfo:
    """Modulus and argument of <L+> = (-J b1 + omega b2 + i Omega b3) / (sqrt2 Omega), plus atan2(b3, b2)."""
    if fp.big_omega == 0.0:
        raise DegenerateField("omega = J = 0")
    om = fp.big_omega
    re = (-fp.j_coupling * b.b1 + fp.omega * b.b2) / (SQRT2 * om)
    im = b.b3 / SQRT2
    mod = float(np.hypot(re, im))
    if mod < PHASE_TOL:
        raise PhaseUndefined(f"|<L+>| = {mod:.3e}")
    return PhaseInfo(mod, float(np.arctan2(im, re)), float(np.arctan2(b.b3, b.b2)))


def branch_heat(b_start: BVector, b_end: BVector, fp: FieldPoint):
    """Heat taken up on a constant-field branch: no work is done, so Q = dE."""
    return energy(b_end, fp) - energy(b_start, fp)


def branch_work(times, omega_rates, b1):
    """Trapezoidal integral of b1 d(omega)/dt over stored samples."""
    times = np.asarray(times, dtype=float)
    if len(times) < 2:
        return 0.0
    return float(np.trapezoid(np.asarray(b1) * np.asarray(omega_rates), times))


@dataclass(frozen=True)
class BranchResult:
    name: str
    kind: str
    omega_start: float
    omega_end: float
    j_coupling: float
    duration: float
    b_start: BVector
    b_end: BVector
    work: float
    heat: float

    @property
    def energy_change(self):
        j = self.j_coupling
        return (self.omega_end * self.b_end.b1 + j * self.b_end.b2) - (
            self.omega_start * self.b_start.b1 + j * self.b_start.b2
        )

    @property
    def first_law_residual(self):
        return abs(self.energy_change - (self.work + self.heat))


@dataclass(frozen=True)
class CycleAccounting:
    w_net: float
    w_out: float
    q_h: float
    q_c: float
    efficiency: float
    entropy_production: float
    power: float
    first_law_residual: float

    def as_dict(self):
        return {
            "W_net": self.w_net,
            "W_out": self.w_out,
            "Q_h": self.q_h,
            "Q_c": self.q_c,
            "efficiency": self.efficiency,
            "DS_cycle": self.entropy_production,
            "power": self.power,
            "first_law_residual": self.first_law_residual,
        }


def cycle_accounting(branches, t_hot, t_cold, closure_residual=0.0, tol=1e-10) -> CycleAccounting:
    """Totals over the four branches (hot isochore, expansion, cold isochore, compression)."""
    if closure_residual > tol:
        raise NotClosed(f"corner mismatch {closure_residual:.3e} exceeds {tol:.1e}")
    hot, exp_, cold, comp = branches
    w_net = sum(br.work for br in branches)
    q_h = hot.heat
    q_c = cold.heat
    w_out = -w_net
    tau = sum(br.duration for br in branches)
    eff = w_out / q_h if q_h > 0 else float("nan")
    power = w_out / tau if np.isfinite(tau) and tau > 0 else 0.0
    ds = -(q_h / t_hot + q_c / t_cold)
    return CycleAccounting(w_net, w_out, q_h, q_c, eff, ds, power, abs(w_net + q_h + q_c))


@dataclass(frozen=True)
class ThermoSample:
    time: float
    branch: str
    omega: float
    b: BVector
    energy: float
    entropy_energy: float
    entropy_vn: float
    dyn_temperature: float
    phase_modulus: float
    phase: float
    correlation_phase: float
    cumulative_work: float
    cumulative_heat: float


def thermo_sample(time, branch, fp: FieldPoint, b: BVector, work, heat, omega_dot=0.0, bath=None) -> ThermoSample:
    """All observables at one point; undefined temperature or phase become NaN."""
    try:
        t_dyn = dynamical_temperature(b, fp, omega_dot, bath)
    except UndefinedTemperature:
        t_dyn = float("nan")
    try:
        ph = phase_observable(b, fp)
        mod, phi, phi_b = ph.modulus, ph.phi, ph.phi_b
    except PhaseUndefined:
        mod, phi, phi_b = 0.0, float("nan"), float(np.arctan2(b.b3, b.b2))
    return ThermoSample(
        float(time),
        branch,
        fp.omega,
        b,
        energy(b, fp),
        entropy_energy(b, fp),
        entropy_vn(b),
        float(t_dyn),
        mod,
        phi,
        phi_b,
        float(work),
        float(heat),
    )


def check_energy_basis(b: BVector, fp: FieldPoint):
    """Largest elementwise gap between the closed form and C rho_p C."""
    _, c = energy_eigensystem(fp)
    return float(np.abs(reconstruct_energy_basis(b, fp) - c @ reconstruct_polarization(b) @ c).max())
