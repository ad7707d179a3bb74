"""Invariant battery: every structural property the library relies on, with residuals."""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from . import adiabat as ad
from .algebra import SQRT2, FieldPoint, build_basis, commutator, inner
from .bloch import BVector, equilibrium_bvector, isochore_affine
from .cycle import find_limit_cycle, iterate_limit_cycle, period_map
from .oracle import BathParams, build_jump_operators, dissipator_heisenberg, expectation, integrate_master_equation
from .thermo import (
    check_energy_basis,
    dynamical_temperature,
    phase_observable,
    reconstruct_polarization,
    two_level_temperature,
)

ANALYTIC_R = 0.96
ANALYTIC_J = 2.0
ANALYTIC_OMEGA_A = 5.08364
ANALYTIC_OMEGA_B = 11.8675


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float
    tolerance: float
    seconds: float = 0.0
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<28s} residual={self.residual:.3e}  tol={self.tolerance:.1e}  ({self.seconds:.2f}s) {self.detail}"


def random_density(rng, dim=4):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_field(rng):
    w = rng.uniform(0.5, 15.0)
    j = rng.uniform(0.1, 3.0) * rng.choice([-1.0, 1.0])
    return FieldPoint(w, j)


def random_bath(rng, dephasing=True):
    g = rng.uniform(0.0, 0.05) if dephasing and rng.random() < 0.5 else 0.0
    return BathParams(rng.uniform(0.5, 10.0), rng.uniform(0.05, 1.0), g)


def bvector_of(rho):
    return BVector(*(expectation(rho, op).real for op in build_basis()))


def check_basis(rng=None):
    basis = build_basis()
    ops = list(basis)
    gram = np.array([[inner(a, b) for b in ops] for a in ops])
    res = float(np.abs(gram - np.eye(5)).max())
    b1, b2, b3 = ops[:3]
    for x, y, z in ((b1, b2, b3), (b2, b3, b1), (b3, b1, b2)):
        res = max(res, float(np.abs(commutator(x, y) - 1j * SQRT2 * z).max()))
    return res, 1e-14


def dissipator_identity_residual(fp, bath):
    basis = build_basis()
    jumps = build_jump_operators(fp, bath)
    kd, ku = bath.rates(fp)
    om, gam = fp.big_omega, bath.gamma_relax
    eye = np.eye(4)
    want = (
        -gam * basis.B1 - fp.omega / (SQRT2 * om) * (kd - ku) * eye,
        -gam * basis.B2 - fp.j_coupling / (SQRT2 * om) * (kd - ku) * eye,
        -gam * basis.B3,
    )
    got = [dissipator_heisenberg(basis[k], jumps) for k in (1, 2, 3)]
    return max(float(np.abs(g - w).max()) for g, w in zip(got, want))


def check_dissipator(rng, cases=50):
    res = 0.0
    for _ in range(cases):
        res = max(res, dissipator_identity_residual(random_field(rng), random_bath(rng, dephasing=False)))
    return res, 1e-12


def oracle_residual(rho0, fp, bath, dt):
    b0 = bvector_of(rho0)
    closed = isochore_affine(fp, bath, dt)(b0).as_array()
    dense = bvector_of(integrate_master_equation(rho0, fp, bath, dt)).as_array()
    return float(np.abs(closed - dense).max())


def check_oracle(rng, cases=100):
    res = oracle_residual(random_density(rng), FieldPoint(12.717, 2.0), BathParams(7.5, 0.382), 3.0108)
    for _ in range(cases - 1):
        res = max(res, oracle_residual(random_density(rng), random_field(rng), random_bath(rng), rng.uniform(0.0, 3.0)))
    return res, 1e-7


def check_semigroup(rng, cases=20):
    res = 0.0
    for _ in range(cases):
        fp, bath = random_field(rng), random_bath(rng)
        t1, t2 = rng.uniform(0, 2, size=2)
        a = isochore_affine(fp, bath, t1).then(isochore_affine(fp, bath, t2))
        b = isochore_affine(fp, bath, t1 + t2)
        res = max(res, float(np.abs(a.matrix - b.matrix).max()), float(np.abs(a.offset - b.offset).max()))
    return res, 1e-12


def analytic_schedule(reverse=False):
    w0, w1 = (ANALYTIC_OMEGA_A, ANALYTIC_OMEGA_B) if reverse else (ANALYTIC_OMEGA_B, ANALYTIC_OMEGA_A)
    return ad.OmegaSchedule.analytic(ANALYTIC_R, ANALYTIC_J, w0, w1)


def check_adiabat_convergence(rng=None, steps=1000):
    res = 0.0
    for rev in (False, True):
        sched = analytic_schedule(rev)
        num = ad.numeric_adiabat(sched, ANALYTIC_J, steps=steps, samples=0).U
        res = max(res, float(np.abs(num - ad.analytic_propagator(sched.duration, sched)).max()))
    return res, 1e-3


def check_analytic_group(rng, cases=20):
    sched = analytic_schedule()
    res = 0.0
    for _ in range(cases):
        t1 = rng.uniform(0, sched.duration)
        t2 = rng.uniform(0, sched.duration - t1)
        u1 = ad.analytic_propagator(t1, sched)
        u2 = ad.analytic_propagator(t2, sched, t0=t1)
        u12 = ad.analytic_propagator(t1 + t2, sched)
        res = max(res, float(np.abs(u2 @ u1 - u12).max()))
    return res, 1e-9


def check_orthogonality(rng, cases=20):
    res = 0.0
    for rev in (False, True):
        sched = analytic_schedule(rev)
        for t in rng.uniform(0, sched.duration, size=cases):
            u = ad.analytic_propagator(t, sched)
            res = max(res, float(np.abs(u.T @ u - np.eye(3)).max()), abs(np.linalg.det(u) - 1.0))
    u = ad.adiabat_step_propagator(FieldPoint(5.382, 2.0), 0.01)
    res = max(res, float(np.abs(u.T @ u - np.eye(3)).max()))
    return res, 1e-12


def mateq_residual(t, r=ANALYTIC_R, j=ANALYTIC_J, h=1e-6):
    ap, am = ad.alpha_analytic(t + h, r, j), ad.alpha_analytic(t - h, r, j)
    fd = np.array([ap.alpha1 - am.alpha1, ap.alpha2 - am.alpha2, ap.alpha3 - am.alpha3]) / (2 * h)
    rhs = ad.wei_norman_rates(ad.alpha_analytic(t, r, j), ad.omega_analytic(t, r, j), j)
    return float(np.abs(fd - rhs).max())


def check_mateq(rng, cases=20):
    sched = analytic_schedule()
    ts = rng.uniform(sched.t_i, sched.t_f, size=cases)
    return max(mateq_residual(t) for t in ts), 1e-6


def check_reconstruction(rng, cases=50):
    res = 0.0
    for _ in range(cases):
        rho = random_density(rng)
        b = bvector_of(rho)
        back = bvector_of(reconstruct_polarization(b)).as_array()
        res = max(res, float(np.abs(back - b.as_array()).max()), check_energy_basis(b, random_field(rng)))
    return res, 1e-12


def _fixture_results(names):
    from .config import load_fixture

    return {n: find_limit_cycle(load_fixture(n).spec) for n in names}


CYCLE_FIXTURES = ("optimal_linear", "analytic_short", "analytic_long", "analytic_infinite",
                  "dephasing_short", "dephasing_short_gamma", "dephasing_long", "dephasing_long_gamma", "phase_decay")


def check_entropy_ordering(rng=None, results=None):
    results = results or _fixture_results(("analytic_short", "analytic_long", "analytic_infinite"))
    return max(s.entropy_vn - s.entropy_energy for r in results.values() for s in r.trajectory), 1e-12


def check_vn_on_adiabats(rng=None, results=None):
    """Relative drift of S_VN along each adiabat (unitary evolution keeps it fixed)."""
    results = results or _fixture_results(("analytic_short", "analytic_long", "analytic_infinite"))
    res = 0.0
    for r in results.values():
        for br in ("BC", "DA"):
            svn = np.array([s.entropy_vn for s in r.trajectory if s.branch == br])
            if len(svn):
                res = max(res, float(np.abs(svn - svn[0]).max() / abs(svn[0])))
    return res, 1e-6


def check_infinite_cycle(rng=None, results=None):
    r = (results or _fixture_results(("analytic_infinite",)))["analytic_infinite"]
    return max(abs(s.entropy_energy - s.entropy_vn) for s in r.trajectory), 1e-8


def check_first_law(rng=None, results=None):
    results = results or _fixture_results(CYCLE_FIXTURES)
    return max(br.first_law_residual for r in results.values() for br in r.branches), 1e-8


def check_limit_cycle(rng=None, results=None):
    results = results or _fixture_results(("optimal_linear", "analytic_short", "dephasing_short"))
    res = 0.0
    for r in results.values():
        b_it, _ = iterate_limit_cycle(r.spec, b0=np.zeros(5))
        res = max(res, float(np.abs(b_it.as_array() - r.corners["A"].as_array()).max()), r.residual)
        pm = period_map(r.spec)
        x = rng.normal(size=5) if rng is not None else np.ones(5)
        res = max(res, float(np.abs(pm(x) - pm(np.zeros(5)) - pm.matrix @ x).max()))
    return res, 1e-10


def check_engine(rng=None, results=None):
    r = (results or _fixture_results(("optimal_linear",)))["optimal_linear"]
    s = r.summary()
    ok = (
        s["W_out"] > 0
        and s["Q_h"] > 0
        and s["Q_c"] < 0
        and 0 < s["efficiency"] <= s["carnot_otto_bound"] < s["carnot_bound"]
        and s["DS_cycle"] >= 0
    )
    return (0.0 if ok else 1.0), 0.5


def check_second_law(rng=None, results=None):
    results = results or _fixture_results(CYCLE_FIXTURES)
    return max(-r.accounting.entropy_production for r in results.values()), 1e-12


def check_equilibrium_temperature(rng, cases=20):
    """Relative error of T_dyn at equilibrium.

    The top level's population is formed by cancellation, so once it drops
    below ~1e-6 the log ratio loses digits; such cold cases are skipped.
    """
    res, done = 0.0, 0
    while done < cases:
        fp, bath = random_field(rng), random_bath(rng)
        if fp.gap / bath.temperature > 6.0:
            continue
        done += 1
        eq = equilibrium_bvector(fp, bath)
        t = bath.temperature
        res = max(res, abs(dynamical_temperature(eq, fp, 0.0, bath) - t) / t, abs(dynamical_temperature(eq, fp) - t) / t)
    return res, 1e-9


def check_two_level(rng, cases=20):
    res = 0.0
    for _ in range(cases):
        w = rng.uniform(0.5, 15.0)
        fp = FieldPoint(w, 0.0)
        bath = BathParams(rng.uniform(0.5, 10.0), rng.uniform(0.05, 1.0))
        b1 = rng.uniform(-0.6, 0.6)
        b = BVector(b1, 0.0, 0.0, 0.0, b1 * b1)
        t_dyn = dynamical_temperature(b, fp, 0.0, bath)
        res = max(res, abs(t_dyn - two_level_temperature(b1, w)) / abs(t_dyn))
        eq = equilibrium_bvector(fp, bath)
        res = max(res, abs(eq.b1 + np.tanh(w / (2 * SQRT2 * bath.temperature)) / SQRT2))
    return res, 1e-10


def phase_decay_rate(spec, bath_key="hot_bath", n=60):
    """Fitted decay rate of |<L+>| across the hot isochore starting from the limit-cycle corner."""
    bath = getattr(spec, bath_key)
    w = spec.omega_b if bath_key == "hot_bath" else spec.omega_a
    tau = spec.tau_h if bath_key == "hot_bath" else spec.tau_c
    fp = FieldPoint(w, spec.j_coupling)
    b0 = find_limit_cycle(spec, trajectory=False).corners["A" if bath_key == "hot_bath" else "C"]
    ts = np.linspace(0.0, tau, n)
    mods = np.array([phase_observable(isochore_affine(fp, bath, t)(b0), fp).modulus for t in ts])
    slope = np.polyfit(ts, np.log(mods), 1)[0]
    return -slope, bath.gamma_relax + 2 * bath.gamma_dephase * fp.big_omega**2


def check_phase_decay(rng=None):
    from .config import load_fixture

    spec = load_fixture("phase_decay").spec
    res = 0.0
    for s in (spec, dataclasses.replace(spec, hot_bath=dataclasses.replace(spec.hot_bath, gamma_dephase=0.0))):
        fit, want = phase_decay_rate(s)
        res = max(res, abs(fit - want) / want)
    return res, 0.01


def run_battery(seed=0, cases=None):
    rng = np.random.default_rng(seed)
    results = _fixture_results(CYCLE_FIXTURES)
    plan = [
        ("basis algebra", lambda: check_basis()),
        ("dissipator identity", lambda: check_dissipator(rng)),
        ("oracle equivalence", lambda: check_oracle(rng, cases or 100)),
        ("isochore semigroup", lambda: check_semigroup(rng)),
        ("adiabat convergence N=1000", lambda: check_adiabat_convergence()),
        ("analytic composition", lambda: check_analytic_group(rng)),
        ("adiabat orthogonality", lambda: check_orthogonality(rng)),
        ("angle equations residual", lambda: check_mateq(rng)),
        ("state reconstruction", lambda: check_reconstruction(rng)),
        ("entropy ordering", lambda: check_entropy_ordering(results={k: results[k] for k in CYCLE_FIXTURES[1:4]})),
        ("S_VN fixed on adiabats", lambda: check_vn_on_adiabats(results={k: results[k] for k in CYCLE_FIXTURES[:4]})),
        ("infinite cycle S_E = S_VN", lambda: check_infinite_cycle(results=results)),
        ("first law per branch", lambda: check_first_law(results=results)),
        ("limit cycle exactness", lambda: check_limit_cycle(rng, results={k: results[k] for k in CYCLE_FIXTURES[:3]})),
        ("engine mode and bounds", lambda: check_engine(results=results)),
        ("entropy production >= 0", lambda: check_second_law(results=results)),
        ("equilibrium temperature", lambda: check_equilibrium_temperature(rng)),
        ("two-level temperature", lambda: check_two_level(rng)),
        ("coherence decay rate", lambda: check_phase_decay()),
    ]
    out = []
    for name, fn in plan:
        t0 = time.perf_counter()
        try:
            res, tol = fn()
            out.append(Check(name, bool(res < tol), float(res), tol, time.perf_counter() - t0))
        except Exception as exc:  # noqa: BLE001 - a crashing check is a failed check
            out.append(Check(name, False, float("nan"), 0.0, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}"))
    return out
