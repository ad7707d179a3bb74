"""The four-stroke cycle: branch maps, limit cycle, sweeps and time allocation.

Every branch acts on the five-component state as an affine map, so one
period is an affine map b -> M b + d and the limit cycle is the solution
of (I - M) b = d.  Corner A (start of the hot isochore) is the origin.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .adiabat import AdiabatMap, OmegaSchedule, build_adiabat
from .algebra import FieldPoint
from .bloch import AffineMap, BVector, equilibrium_bvector, isochore_affine
from .errors import NoConvergence, OttoError
from .oracle import BathParams
from .thermo import BranchResult, CycleAccounting, ThermoSample, cycle_accounting, energy, thermo_sample

BRANCHES = ("AB", "BC", "CD", "DA")
SCHEDULES = ("linear", "analytic", "quasistatic")
SWEEP_PARAMETERS = (
    "tau_h",
    "tau_c",
    "gamma_h",
    "gamma_c",
    "j_coupling",
    "Gamma_h",
    "Gamma_c",
    "omega_a",
    "omega_b",
)


@dataclass(frozen=True)
class CycleSpec:
    """Engine parameters.

    For the ``analytic`` schedule the adiabat durations follow from the
    field window and ``tau_ba``/``tau_ab`` may be left as None; for
    ``quasistatic`` they are infinite.  Isochore durations may be
    ``inf`` (full thermalization).  Zero-length adiabats give the sudden
    limit.
    """

    omega_a: float
    omega_b: float
    j_coupling: float
    hot_bath: BathParams
    cold_bath: BathParams
    tau_h: float
    tau_c: float
    tau_ba: float | None = None
    tau_ab: float | None = None
    schedule: str = "linear"
    r: float | None = None
    samples_per_branch: int = 50
    adiabat_steps: int | None = None

    def __post_init__(self):
        if not self.omega_b > self.omega_a > 0:
            raise ValueError(f"need omega_b > omega_a > 0, got {self.omega_a}, {self.omega_b}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        for name in ("tau_h", "tau_c"):
            v = getattr(self, name)
            if math.isnan(v) or v < 0:
                raise ValueError(f"{name} must be >= 0, got {v}")
        if self.schedule == "linear":
            for name in ("tau_ba", "tau_ab"):
                v = getattr(self, name)
                if v is None or math.isnan(v) or v < 0 or math.isinf(v):
                    raise ValueError(f"{name} must be finite and >= 0 for a linear schedule")
        if self.schedule == "analytic" and not (self.r is not None and 0 < self.r < 1):
            raise ValueError("analytic schedule needs 0 < r < 1")
        if self.samples_per_branch < 0:
            raise ValueError("samples_per_branch must be >= 0")

    def expansion_schedule(self) -> OmegaSchedule:
        return _schedule(self, self.omega_b, self.omega_a, self.tau_ba)

    def compression_schedule(self) -> OmegaSchedule:
        return _schedule(self, self.omega_a, self.omega_b, self.tau_ab)

    def durations(self):
        """Effective (tau_h, tau_ba, tau_c, tau_ab) in branch order."""
        return (
            self.tau_h,
            self.expansion_schedule().duration,
            self.tau_c,
            self.compression_schedule().duration,
        )

    @property
    def period(self):
        return float(sum(self.durations()))


@lru_cache(maxsize=256)
def _cached_schedule(kind, w0, w1, tau, r, j):
    if kind == "linear":
        return OmegaSchedule.linear(w0, w1, tau)
    if kind == "analytic":
        return OmegaSchedule.analytic(r, j, w0, w1)
    return OmegaSchedule.quasistatic(w0, w1)


def _schedule(spec, w0, w1, tau):
    sched = _cached_schedule(spec.schedule, w0, w1, tau, spec.r, spec.j_coupling)
    if spec.schedule == "analytic" and tau is not None and abs(tau - sched.duration) > 1e-6:
        raise ValueError(f"adiabat duration {tau} differs from the analytic window {sched.duration:.9g}")
    return sched


@lru_cache(maxsize=256)
def _cached_adiabat(sched: OmegaSchedule, j, samples, steps) -> AdiabatMap:
    return build_adiabat(sched, j, samples=samples, steps=steps)


@dataclass(frozen=True)
class BranchMap:
    name: str
    kind: str
    omega_start: float
    omega_end: float
    duration: float
    affine: AffineMap
    bath: BathParams | None = None
    adiabat: AdiabatMap | None = None


def branch_maps(spec: CycleSpec, samples=None):
    """Affine maps of the four branches in cycle order."""
    n = spec.samples_per_branch if samples is None else samples
    j = spec.j_coupling
    hot_fp = FieldPoint(spec.omega_b, j)
    cold_fp = FieldPoint(spec.omega_a, j)
    exp_s = spec.expansion_schedule()
    comp_s = spec.compression_schedule()
    exp_m = _cached_adiabat(exp_s, j, n, spec.adiabat_steps)
    comp_m = _cached_adiabat(comp_s, j, n, spec.adiabat_steps)
    return (
        BranchMap("AB", "isochore", spec.omega_b, spec.omega_b, spec.tau_h,
                  isochore_affine(hot_fp, spec.hot_bath, spec.tau_h), bath=spec.hot_bath),
        BranchMap("BC", "adiabat", spec.omega_b, spec.omega_a, exp_s.duration,
                  AffineMap.linear_triple(exp_m.U), adiabat=exp_m),
        BranchMap("CD", "isochore", spec.omega_a, spec.omega_a, spec.tau_c,
                  isochore_affine(cold_fp, spec.cold_bath, spec.tau_c), bath=spec.cold_bath),
        BranchMap("DA", "adiabat", spec.omega_a, spec.omega_b, comp_s.duration,
                  AffineMap.linear_triple(comp_m.U), adiabat=comp_m),
    )


def period_map(spec: CycleSpec, maps=None) -> AffineMap:
    maps = maps or branch_maps(spec, samples=0)
    total = AffineMap.identity()
    for bm in maps:
        total = total.then(bm.affine)
    return total


def _branch_results(spec, maps, b_a):
    out = []
    b = b_a
    for bm in maps:
        b_next = bm.affine(b)
        fp0 = FieldPoint(bm.omega_start, spec.j_coupling)
        fp1 = FieldPoint(bm.omega_end, spec.j_coupling)
        if bm.kind == "isochore":
            work, heat = 0.0, energy(b_next, fp1) - energy(b, fp0)
        else:
            work, heat = bm.adiabat.work(b.triple), 0.0
        out.append(
            BranchResult(bm.name, bm.kind, bm.omega_start, bm.omega_end, spec.j_coupling,
                         bm.duration, b, b_next, work, heat)
        )
        b = b_next
    return out, b


def run_cycle(spec: CycleSpec, b0: BVector):
    """One period from corner A; returns (samples, branch results, final state)."""
    maps = branch_maps(spec)
    branches, b_end = _branch_results(spec, maps, b0)
    samples = sample_trajectory(spec, maps, branches)
    return samples, branches, b_end


def _isochore_offsets(duration, n, bath):
    if n <= 0:
        return np.array([])
    if n == 1:
        return np.array([duration])
    if math.isinf(duration):
        horizon = 25.0 / max(bath.gamma_relax, 1e-3)
        return np.concatenate((np.linspace(0.0, horizon, n - 1), [np.inf]))
    return np.linspace(0.0, duration, n)


def sample_trajectory(spec: CycleSpec, maps, branches) -> list:
    samples: list[ThermoSample] = []
    t0, w_acc, q_acc = 0.0, 0.0, 0.0
    n = spec.samples_per_branch
    for bm, br in zip(maps, branches):
        if bm.kind == "isochore":
            fp = FieldPoint(bm.omega_start, spec.j_coupling)
            e0 = energy(br.b_start, fp)
            for s in _isochore_offsets(bm.duration, n, bm.bath):
                b = isochore_affine(fp, bm.bath, s)(br.b_start) if s > 0 else br.b_start
                samples.append(
                    thermo_sample(t0 + s, bm.name, fp, b, w_acc, q_acc + energy(b, fp) - e0, 0.0, bm.bath)
                )
        else:
            am = bm.adiabat
            tri = br.b_start.triple
            for s, w, wd, u, g in zip(am.sample_times, am.sample_omega, am.sample_omega_rate,
                                      am.sample_props, am.sample_work):
                fp = FieldPoint(float(w), spec.j_coupling)
                b = br.b_start.with_triple(u @ tri)
                samples.append(thermo_sample(t0 + s, bm.name, fp, b, w_acc + g @ tri, q_acc))
        t0 += bm.duration
        w_acc += br.work
        q_acc += br.heat
    return samples


@dataclass(frozen=True)
class CycleResult:
    spec: CycleSpec
    corners: dict
    branches: list
    accounting: CycleAccounting
    trajectory: list
    converged: bool
    residual: float
    method: str

    def summary(self):
        acc = self.accounting
        d = {"method": self.method, "converged": self.converged, "residual": self.residual}
        d.update(acc.as_dict())
        d["carnot_otto_bound"] = 1.0 - FieldPoint(self.spec.omega_a, self.spec.j_coupling).big_omega / FieldPoint(
            self.spec.omega_b, self.spec.j_coupling
        ).big_omega
        d["carnot_bound"] = 1.0 - self.spec.cold_bath.temperature / self.spec.hot_bath.temperature
        d["engine"] = bool(acc.w_out > 0 and acc.q_h > 0 and acc.q_c < 0)
        d["period"] = self.spec.period
        d["corners"] = {k: dataclasses.asdict(v) for k, v in self.corners.items()}
        d["branches"] = [
            {"name": b.name, "duration": b.duration, "work": b.work, "heat": b.heat,
             "first_law_residual": b.first_law_residual}
            for b in self.branches
        ]
        return d


def iterate_limit_cycle(spec: CycleSpec, b0=None, tol=1e-12, max_periods=10_000, pmap=None):
    """Fixed-point iteration of the period map; returns (state, periods used)."""
    pmap = pmap or period_map(spec)
    b = np.zeros(5) if b0 is None else (b0.as_array() if isinstance(b0, BVector) else np.asarray(b0, float))
    for k in range(1, max_periods + 1):
        nb = pmap(b)
        if np.abs(nb - b).max() < tol:
            return BVector.from_array(nb), k
        b = nb
    raise NoConvergence(f"no fixed point after {max_periods} periods, last step {np.abs(nb - b).max():.3e}")


def solve_limit_cycle(spec: CycleSpec, pmap=None, cond_limit=1e12):
    """Corner A of the limit cycle from the linear system (I - M) b = d."""
    pmap = pmap or period_map(spec)
    a = np.eye(5) - pmap.matrix
    if np.linalg.cond(a) > cond_limit:
        b, _ = iterate_limit_cycle(spec, pmap=pmap)
        return b, "iteration"
    return BVector.from_array(np.linalg.solve(a, pmap.offset)), "direct"


def find_limit_cycle(spec: CycleSpec, trajectory=True, closure_tol=1e-10) -> CycleResult:
    maps = branch_maps(spec, samples=None if trajectory else 0)
    pmap = period_map(spec, maps)
    b_a, method = solve_limit_cycle(spec, pmap)
    branches, b_end = _branch_results(spec, maps, b_a)
    residual = float(np.abs(b_end.as_array() - b_a.as_array()).max())
    acc = cycle_accounting(branches, spec.hot_bath.temperature, spec.cold_bath.temperature, residual, closure_tol)
    corners = {"A": b_a, "B": branches[1].b_start, "C": branches[2].b_start, "D": branches[3].b_start}
    traj = sample_trajectory(spec, maps, branches) if trajectory else []
    return CycleResult(spec, corners, branches, acc, traj, residual <= closure_tol, residual, method)


def equilibrium_corners(spec: CycleSpec):
    """Equilibrium points of the working medium with the hot bath at omega_b and the cold bath at omega_a."""
    return (
        equilibrium_bvector(FieldPoint(spec.omega_b, spec.j_coupling), spec.hot_bath),
        equilibrium_bvector(FieldPoint(spec.omega_a, spec.j_coupling), spec.cold_bath),
    )


def with_parameter(spec: CycleSpec, name, value, fixed_cycle_time=None) -> CycleSpec:
    """Copy of ``spec`` with one sweep parameter replaced."""
    value = float(value)
    if name in ("tau_h", "tau_c", "j_coupling", "omega_a", "omega_b"):
        new = dataclasses.replace(spec, **{name: value})
    elif name == "gamma_h":
        new = dataclasses.replace(spec, hot_bath=dataclasses.replace(spec.hot_bath, gamma_dephase=value))
    elif name == "gamma_c":
        new = dataclasses.replace(spec, cold_bath=dataclasses.replace(spec.cold_bath, gamma_dephase=value))
    elif name == "Gamma_h":
        new = dataclasses.replace(spec, hot_bath=dataclasses.replace(spec.hot_bath, gamma_relax=value))
    elif name == "Gamma_c":
        new = dataclasses.replace(spec, cold_bath=dataclasses.replace(spec.cold_bath, gamma_relax=value))
    else:
        raise ValueError(f"cannot sweep {name!r}; choose from {SWEEP_PARAMETERS}")
    if fixed_cycle_time is not None:
        _, tba, _, tab = new.durations()
        if name == "tau_c":
            new = dataclasses.replace(new, tau_h=fixed_cycle_time - value - tba - tab)
        else:
            new = dataclasses.replace(new, tau_c=fixed_cycle_time - new.tau_h - tba - tab)
    return new


SUMMARY_COLUMNS = ("ok", "tau_h", "tau_c", "W_net", "W_out", "Q_h", "Q_c", "efficiency",
                   "power", "DS_cycle", "residual", "engine", "error")
SWEEP_COLUMNS = ("value",) + SUMMARY_COLUMNS


def summary_row(res: CycleResult):
    """Flat per-cycle record shared by the limit-cycle and sweep tables."""
    acc = res.accounting
    return {
        "ok": True,
        "tau_h": res.spec.tau_h,
        "tau_c": res.spec.tau_c,
        "W_net": acc.w_net,
        "W_out": acc.w_out,
        "Q_h": acc.q_h,
        "Q_c": acc.q_c,
        "efficiency": acc.efficiency,
        "power": acc.power,
        "DS_cycle": acc.entropy_production,
        "residual": res.residual,
        "engine": bool(acc.w_out > 0 and acc.q_h > 0 and acc.q_c < 0),
        "error": "",
    }


def _sweep_point(args):
    spec, name, value, fixed = args
    row = {"value": float(value)}
    try:
        row.update(summary_row(find_limit_cycle(with_parameter(spec, name, value, fixed), trajectory=False)))
    except (OttoError, ValueError, ArithmeticError) as exc:
        row.update(ok=False, engine=False, error=f"{type(exc).__name__}: {exc}")
    return row


def sweep(spec: CycleSpec, parameter, grid, fixed_cycle_time=None, threads=1):
    """Limit-cycle summaries along ``grid``; failed points are recorded with ok=False."""
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"cannot sweep {parameter!r}; choose from {SWEEP_PARAMETERS}")
    jobs = [(spec, parameter, v, fixed_cycle_time) for v in grid]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_sweep_point, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        rows = [_sweep_point(j) for j in jobs]
    return [{c: r.get(c, float("nan")) for c in SWEEP_COLUMNS} for r in rows]


def sweep_spread(rows, column="power"):
    vals = np.array([r[column] for r in rows if r["ok"]], dtype=float)
    return float(vals.max() - vals.min()) if len(vals) else float("nan")


@dataclass(frozen=True)
class Allocation:
    tau_h: float
    tau_ba: float
    tau_c: float
    tau_ab: float
    power: float
    evaluations: int
    rounds: int
    probes: tuple = ()

    def as_dict(self):
        d = dataclasses.asdict(self)
        d.pop("probes")
        return d


PROBE_COLUMNS = ("tau_h", "tau_ba", "tau_c", "tau_ab", "power")


def cycle_power(spec: CycleSpec, alloc) -> float:
    tau_h, tau_ba, tau_c, tau_ab = alloc
    s = dataclasses.replace(spec, tau_h=tau_h, tau_ba=tau_ba, tau_c=tau_c, tau_ab=tau_ab)
    return find_limit_cycle(s, trajectory=False).accounting.power


def optimize_time_allocation(spec: CycleSpec, total_budget, min_adiabat=0.01, min_isochore=None,
                             max_rounds=100, xtol=1e-6, start=None) -> Allocation:
    """Maximize limit-cycle power over allocations with a fixed total time.

    Coordinate search: each round visits every pair of branches and moves
    time from one to the other, choosing the transfer by bounded Brent
    search.  A move is kept only when it raises the power, so the result
    is never worse than the starting allocation (the configured durations
    when they fit the budget, an even split otherwise).
    """
    if spec.schedule != "linear":
        raise ValueError("time allocation is optimized for the linear schedule only")
    if not total_budget > 4 * min_adiabat:
        raise ValueError("total_budget must exceed 4 * min_adiabat")
    lo_iso = min_adiabat if min_isochore is None else min_isochore
    lower = np.array([lo_iso, min_adiabat, lo_iso, min_adiabat])
    if start is None:
        start = np.array(spec.durations(), dtype=float)
        if not (abs(start.sum() - total_budget) < 1e-9 and np.all(start >= lower)):
            start = lower + (total_budget - lower.sum()) / 4.0
    x = np.array(start, dtype=float)
    probes = []

    def power(v):
        try:
            p = cycle_power(spec, v)
        except (OttoError, ValueError, ArithmeticError):
            p = -np.inf
        probes.append((*(float(a) for a in v), float(p)))
        return p

    best = power(x)
    for rnd in range(1, max_rounds + 1):
        improved = False
        for i in range(4):
            for j in range(i + 1, 4):
                lo_d, hi_d = -(x[i] - lower[i]), x[j] - lower[j]
                if hi_d - lo_d < xtol:
                    continue

                def neg(d, i=i, j=j):
                    v = x.copy()
                    v[i] += d
                    v[j] -= d
                    return -power(v)

                res = minimize_scalar(neg, bounds=(lo_d, hi_d), method="bounded", options={"xatol": xtol})
                if -res.fun > best + 1e-12:
                    x[i] += res.x
                    x[j] -= res.x
                    best = -res.fun
                    improved = True
        if not improved:
            return Allocation(*x, power=float(best), evaluations=len(probes), rounds=rnd, probes=tuple(probes))
    raise NoConvergence(f"allocation still improving after {max_rounds} rounds (power {best:.6g})")
