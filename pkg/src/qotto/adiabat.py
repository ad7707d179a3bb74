"""Unitary propagation of (b1, b2, b3) while the field omega(t) is driven.

Two routes are provided.  The generic one chops the branch into short
steps with omega frozen at the step midpoint and multiplies the exact
fixed-field rotations.  The analytic one uses a product-of-exponentials
(Wei-Norman) solution that exists for one special field protocol,
``omega_analytic``; it is exact and serves as the reference for the
stepping route.

A branch is summarized by an :class:`AdiabatMap`: the 3x3 propagator plus
a linear functional giving the work done on the working medium, so the
work for any initial state is a dot product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .algebra import SQRT2, FieldPoint
from .errors import DomainViolation, ScheduleViolation, Singularity

_ASIN_SLACK = 1e-12
_FLIP_B3 = np.diag([1.0, 1.0, -1.0])


def _asin(x):
    if abs(x) > 1.0 + _ASIN_SLACK:
        raise DomainViolation(f"arcsin argument {x!r} outside [-1, 1]")
    return float(np.arcsin(np.clip(x, -1.0, 1.0)))


def _aux(t, r, j):
    u = -(j * t) ** 2 + SQRT2 * r * j * t
    v = r - SQRT2 * j * t
    return u, v


def _check_window(t, r, j):
    if not 0.0 < r < 1.0:
        raise DomainViolation(f"r must lie in (0, 1), got {r}")
    if j <= 0.0:
        raise DomainViolation("the analytic protocol needs J > 0")
    if t < 0.0 or j * t >= SQRT2 * r:
        raise DomainViolation(f"t={t} outside 0 <= J t < sqrt(2) r")


@dataclass(frozen=True)
class WeiNormanAngles:
    alpha1: float
    alpha2: float
    alpha3: float


def alpha_analytic(t, r, j_coupling) -> WeiNormanAngles:
    """Closed-form angles of the product-form propagator for ``omega_analytic``.

    The first arcsin in the last brace is taken on its upper branch,
    pi - arcsin(x); with the principal value the angle fails the
    equations of motion and the t = 0 condition cannot both hold.
    """
    _check_window(t, r, j_coupling)
    u, v = _aux(t, r, j_coupling)
    w = np.sqrt(1.0 + 2.0 * u)
    q = np.sqrt(1.0 - r * r)
    a1 = float(np.arccos(np.clip(1.0 / w, -1.0, 1.0)))
    a2 = _asin((r * w - v) / (1.0 + r * r))
    a3 = (
        -0.5 * r * np.log(2.0 * np.sqrt(4.0 * u * u + 2.0 * u) + 4.0 * u + 1.0)
        - 0.5 * q * (_asin(2.0 * r * r * (1.0 - r * r) / (2.0 * u + 1.0 - r * r) + 1.0 - 2.0 * r * r) - np.pi / 2)
        - (_asin(v / r) - np.pi / 2)
        - 0.5
        * q
        * (np.pi - _asin((1.0 - (1.0 - r * r) / (1.0 + v)) / r) + _asin((1.0 - (1.0 - r * r) / (1.0 - v)) / r))
    )
    return WeiNormanAngles(a1, a2, float(a3))


def _omega_expr(t, r, j):
    # complex-safe so that complex-step differentiation works
    u = -(j * t) ** 2 + SQRT2 * r * j * t
    v = r - SQRT2 * j * t
    w = np.sqrt(1.0 + 2.0 * u)
    su = np.sqrt(u)
    return j * v / (SQRT2 * (1.0 + 2.0 * u) * su) - j * SQRT2 * su * (r * w - v) / (w * (w + r * v))


def omega_analytic(t, r, j_coupling):
    """Field protocol for which the angles above solve the equations of motion."""
    if t == 0.0:
        raise Singularity("omega_analytic is singular at t = 0")
    _check_window(t, r, j_coupling)
    return float(_omega_expr(t, r, j_coupling))


def omega_analytic_rate(t, r, j_coupling):
    """d omega / dt by complex-step differentiation (no subtractive cancellation)."""
    if t == 0.0:
        raise Singularity("omega_analytic is singular at t = 0")
    _check_window(t, r, j_coupling)
    h = 1e-20 * max(t, 1e-12)
    return float(np.imag(_omega_expr(complex(t, h), r, j_coupling)) / h)


def wei_norman_rates(angles: WeiNormanAngles, omega, j_coupling):
    """Right-hand side of the angle equations for a given instantaneous field."""
    s1, c1 = np.sin(angles.alpha1), np.cos(angles.alpha1)
    s2, c2 = np.sin(angles.alpha2), np.cos(angles.alpha2)
    return np.array(
        [
            SQRT2 * omega + SQRT2 * j_coupling * s1 * s2 / c2,
            SQRT2 * j_coupling * c1,
            SQRT2 * j_coupling * s1 / c2,
        ]
    )


def wei_norman_matrix(angles: WeiNormanAngles):
    """Euler-angle rotation built from the three angles.

    It satisfies dW/dt = W L(t); the propagator of the b-vector, which
    obeys db/dt = L(t) b, is F W^T F with F = diag(1, 1, -1).
    """
    s1, s2, s3 = np.sin([angles.alpha1, angles.alpha2, angles.alpha3])
    c1, c2, c3 = np.cos([angles.alpha1, angles.alpha2, angles.alpha3])
    return np.array(
        [
            [c2 * c3, -s3 * c1 + c3 * s2 * s1, c3 * s2 * c1 + s3 * s1],
            [c2 * s3, c3 * c1 + s3 * s2 * s1, s3 * s2 * c1 - c3 * s1],
            [-s2, c2 * s1, c2 * c1],
        ]
    )


def find_analytic_time(target_omega, r, j_coupling, xtol=1e-14):
    """Time on the positive-field branch where ``omega_analytic`` equals ``target_omega``.

    omega decreases monotonically from +inf at t = 0 through zero, so the
    root is bracketed between t -> 0 and the zero crossing.
    """
    if target_omega <= 0:
        raise DomainViolation("target field must be positive")
    t_max = SQRT2 * r / j_coupling
    lo = 1e-12 * t_max
    t_zero = brentq(lambda t: _omega_expr(t, r, j_coupling), lo, t_max * (1 - 1e-9), xtol=xtol)
    if _omega_expr(lo, r, j_coupling) < target_omega:
        raise DomainViolation(f"field {target_omega} beyond the representable range")
    return brentq(lambda t: _omega_expr(t, r, j_coupling) - target_omega, lo, t_zero, xtol=xtol)


@dataclass(frozen=True)
class OmegaSchedule:
    """Field protocol on one adiabat, parametrized by elapsed time s in [0, duration].

    kinds: ``linear``, ``analytic`` (the Wei-Norman protocol on the window
    [t_i, t_f]; ``reverse`` runs it backwards, turning a decreasing field
    into an increasing one), ``tabulated`` (piecewise-linear through
    samples) and ``quasistatic`` (the infinitely slow limit).
    """

    kind: str
    omega_start: float
    omega_end: float
    duration: float
    r: float | None = None
    j_coupling: float | None = None
    t_i: float | None = None
    t_f: float | None = None
    reverse: bool = False
    table: tuple | None = field(default=None, repr=False)

    @classmethod
    def linear(cls, omega_start, omega_end, duration):
        if duration < 0:
            raise ValueError("duration must be >= 0")
        return cls("linear", float(omega_start), float(omega_end), float(duration))

    @classmethod
    def analytic(cls, r, j_coupling, omega_start, omega_end):
        t0 = find_analytic_time(max(omega_start, omega_end), r, j_coupling)
        t1 = find_analytic_time(min(omega_start, omega_end), r, j_coupling)
        return cls(
            "analytic",
            float(omega_start),
            float(omega_end),
            t1 - t0,
            r=float(r),
            j_coupling=float(j_coupling),
            t_i=t0,
            t_f=t1,
            reverse=omega_start < omega_end,
        )

    @classmethod
    def tabulated(cls, times, omegas):
        times = np.asarray(times, dtype=float)
        omegas = np.asarray(omegas, dtype=float)
        if times.ndim != 1 or times.shape != omegas.shape or len(times) < 2:
            raise ValueError("tabulated schedule needs matching 1-D arrays of length >= 2")
        if np.any(np.diff(times) <= 0):
            raise ValueError("tabulated times must be strictly increasing")
        times = times - times[0]
        return cls(
            "tabulated",
            float(omegas[0]),
            float(omegas[-1]),
            float(times[-1]),
            table=(tuple(times), tuple(omegas)),
        )

    @classmethod
    def quasistatic(cls, omega_start, omega_end):
        return cls("quasistatic", float(omega_start), float(omega_end), float("inf"))

    def raw_time(self, s):
        """Clock of ``omega_analytic`` corresponding to elapsed time ``s``."""
        return self.t_f - s if self.reverse else self.t_i + s

    def omega_at(self, s):
        if self.kind == "linear":
            if self.duration == 0:
                return self.omega_end if s > 0 else self.omega_start
            frac = min(max(s / self.duration, 0.0), 1.0)
            return self.omega_start + (self.omega_end - self.omega_start) * frac
        if self.kind == "analytic":
            return omega_analytic(self.raw_time(s), self.r, self.j_coupling)
        if self.kind == "tabulated":
            return float(np.interp(s, self.table[0], self.table[1]))
        raise ValueError("quasistatic schedules have no time parametrization")

    def omega_rate(self, s):
        if self.kind == "linear":
            return 0.0 if self.duration == 0 else (self.omega_end - self.omega_start) / self.duration
        if self.kind == "analytic":
            rate = omega_analytic_rate(self.raw_time(s), self.r, self.j_coupling)
            return -rate if self.reverse else rate
        if self.kind == "tabulated":
            ts, ws = self.table
            k = int(np.clip(np.searchsorted(ts, s, side="right") - 1, 0, len(ts) - 2))
            return (ws[k + 1] - ws[k]) / (ts[k + 1] - ts[k])
        return 0.0


def default_steps(sched: OmegaSchedule, j_coupling):
    """N = max(1000, ceil(20 sqrt2 Omega_max T)); keeps each step's rotation below 0.05 rad."""
    om_max = max(np.hypot(sched.omega_start, j_coupling), np.hypot(sched.omega_end, j_coupling))
    if sched.kind == "tabulated":
        om_max = max(om_max, float(np.max(np.hypot(sched.table[1], j_coupling))))
    return max(1000, int(np.ceil(20.0 * SQRT2 * om_max * sched.duration)))


def adiabat_step_propagator(fp: FieldPoint, dt):
    """exp(L dt) at frozen field: rotation by sqrt2 Omega dt about the energy axis."""
    if dt == 0:
        return np.eye(3)
    w, j, om = fp.omega, fp.j_coupling, fp.big_omega
    c, s = np.cos(SQRT2 * om * dt), np.sin(SQRT2 * om * dt)
    om2 = om * om
    return np.array(
        [
            [(w * w + c * j * j) / om2, w * j * (1 - c) / om2, j * s / om],
            [w * j * (1 - c) / om2, (j * j + c * w * w) / om2, -w * s / om],
            [-j * s / om, w * s / om, c],
        ]
    )


def _step_stack(omegas, j, dt):
    om = np.hypot(omegas, j)
    c, s = np.cos(SQRT2 * om * dt), np.sin(SQRT2 * om * dt)
    om2 = om * om
    w = omegas
    out = np.empty((len(omegas), 3, 3))
    out[:, 0, 0] = (w * w + c * j * j) / om2
    out[:, 0, 1] = out[:, 1, 0] = w * j * (1 - c) / om2
    out[:, 0, 2] = j * s / om
    out[:, 1, 1] = (j * j + c * w * w) / om2
    out[:, 1, 2] = -w * s / om
    out[:, 2, 0] = -j * s / om
    out[:, 2, 1] = w * s / om
    out[:, 2, 2] = c
    return out


@dataclass(frozen=True)
class AdiabatMap:
    """Propagator and work functional of one adiabat, with samples along it.

    ``sample_props[k] @ b123(0)`` is the state at ``sample_times[k]`` and
    ``sample_work[k] @ b123(0)`` the work done on the medium up to there.
    """

    U: np.ndarray
    work_vector: np.ndarray
    sample_times: np.ndarray
    sample_omega: np.ndarray
    sample_omega_rate: np.ndarray
    sample_props: np.ndarray
    sample_work: np.ndarray

    def work(self, triple):
        return float(self.work_vector @ triple)


def _sample_indices(n_steps, samples):
    if samples <= 0:
        return np.array([], dtype=int)
    if samples == 1:
        return np.array([n_steps])
    return np.unique(np.round(np.linspace(0, n_steps, samples)).astype(int))


def numeric_adiabat(sched: OmegaSchedule, j_coupling, steps=None, samples=2) -> AdiabatMap:
    """Midpoint-field stepping of an adiabat.

    Holding omega piecewise constant makes the field change in jumps at
    the step boundaries, and each jump does work b1 * d(omega).  Summing
    those is the exact work of the stepped dynamics, so the first law
    closes to rounding; for a linear ramp the sum is the trapezoidal rule
    for the integral of b1 * d(omega)/dt.
    """
    if sched.kind == "quasistatic":
        return quasistatic_adiabat(sched, j_coupling, samples)
    if steps is None:
        steps = default_steps(sched, j_coupling)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    T = sched.duration
    if T == 0:
        # a sudden jump: one exact identity step instead of rounded rotations
        steps = 1
    dt = T / steps
    try:
        mids = np.array([sched.omega_at((k + 0.5) * dt) for k in range(steps)])
        w_start, w_end = sched.omega_at(0.0), sched.omega_at(T)
    except DomainViolation as exc:
        raise ScheduleViolation(str(exc)) from exc
    if T == 0:
        w_start, w_end = sched.omega_start, sched.omega_end
        mids = np.full(steps, w_end)
    stack = _step_stack(mids, j_coupling, dt) if T > 0 else np.eye(3)[None]
    partial = np.empty((steps + 1, 3, 3))
    partial[0] = np.eye(3)
    for k in range(steps):
        partial[k + 1] = stack[k] @ partial[k]
    # field seen just before boundary k; jumps happen at each boundary
    before = np.concatenate(([w_start], mids))
    after = np.concatenate((mids, [w_end]))
    jumps = after - before
    contrib = jumps[:, None] * partial[:, 0, :]
    cum = np.cumsum(contrib, axis=0)

    idx = _sample_indices(steps, samples)
    times = idx * dt
    omegas = np.array([sched.omega_at(t) for t in times]) if T > 0 else np.where(idx > 0, w_end, w_start)
    # work up to sample k: all jumps before boundary k plus the partial jump to omega(s_k)
    work_s = np.empty((len(idx), 3))
    for m, k in enumerate(idx):
        prior = cum[k - 1] if k > 0 else np.zeros(3)
        work_s[m] = prior + (omegas[m] - before[k]) * partial[k, 0, :]
    if len(idx) and idx[-1] == steps:
        work_s[-1] = cum[-1]
    rates = np.array([sched.omega_rate(t) for t in times]) if T > 0 else np.zeros(len(idx))
    return AdiabatMap(partial[-1], cum[-1], times, omegas, rates, partial[idx], work_s)


def analytic_propagator(t, sched: OmegaSchedule, t0=0.0):
    """Exact propagator of (b1, b2, b3) from elapsed time t0 to t0 + t.

    The window is traversed forward (field falling from omega_b) or, for
    ``sched.reverse``, backward.  Composition holds in the form
    P(t2, t0 + t1) @ P(t1, t0) = P(t1 + t2, t0).
    """
    if sched.kind != "analytic":
        raise ValueError("analytic_propagator needs an analytic schedule")
    tol = 1e-12 * max(sched.duration, 1.0)
    if t0 < -tol or t0 + t > sched.duration + tol:
        raise DomainViolation(f"[{t0}, {t0 + t}] leaves the window [0, {sched.duration}]")
    a = sched.raw_time(min(max(t0, 0.0), sched.duration))
    b = sched.raw_time(min(max(t0 + t, 0.0), sched.duration))
    r, j = sched.r, sched.j_coupling
    wa = wei_norman_matrix(alpha_analytic(a, r, j))
    wb = wei_norman_matrix(alpha_analytic(b, r, j))
    if sched.reverse:
        return wb.T @ wa
    return _FLIP_B3 @ wb.T @ wa @ _FLIP_B3


def propagate_adiabat_numeric(b, sched: OmegaSchedule, j_coupling, steps=None):
    """Numerically propagate a BVector (or a triple) across an adiabat; b4, b5 are untouched."""
    from .bloch import BVector

    u = numeric_adiabat(sched, j_coupling, steps, samples=0).U
    if isinstance(b, BVector):
        return b.with_triple(u @ b.triple)
    return u @ np.asarray(b, dtype=float)


def analytic_adiabat(sched: OmegaSchedule, samples=2) -> AdiabatMap:
    """Exact adiabat from the Wei-Norman solution; work by composite Gauss-Legendre quadrature.

    Quadrature panels are laid between consecutive sample times so the
    cumulative work at each sample comes for free.
    """
    T = sched.duration
    if samples <= 0:
        times = np.array([])
    elif samples == 1:
        times = np.array([T])
    else:
        times = np.linspace(0.0, T, samples)
    edges = times if samples >= 17 else np.linspace(0.0, T, 17)
    x, w = np.polynomial.legendre.leggauss(16)
    cum = [np.zeros(3)]
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes = lo + half * (x + 1.0)
        rows = np.array([analytic_propagator(s, sched)[0, :] for s in nodes])
        rates = np.array([sched.omega_rate(s) for s in nodes])
        cum.append(cum[-1] + (half * w * rates) @ rows)
    cum = np.array(cum)
    work_s = np.array([cum[np.searchsorted(edges, s)] if s > 0 else np.zeros(3) for s in times]).reshape(-1, 3)
    props = np.array([analytic_propagator(s, sched) for s in times]).reshape(-1, 3, 3)
    omegas = np.array([sched.omega_at(s) for s in times])
    srates = np.array([sched.omega_rate(s) for s in times])
    return AdiabatMap(analytic_propagator(T, sched), cum[-1], times, omegas, srates, props, work_s)


def quasistatic_adiabat(sched: OmegaSchedule, j_coupling, samples=2) -> AdiabatMap:
    """Infinitely slow drive: the state co-rotates with the energy axis.

    The map rotates the (b1, b2) plane by the change of the axis angle
    atan2(J, omega) and keeps b3; the accumulated dynamical phase of the
    coherences is dropped.  Work equals (Omega_end - Omega_start) times
    the projection of the state on the initial axis.
    """
    def frame(w):
        th = np.arctan2(j_coupling, w)
        return th, np.hypot(w, j_coupling)

    def rot(dth):
        c, s = np.cos(dth), np.sin(dth)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    th0, om0 = frame(sched.omega_start)
    n0 = np.array([sched.omega_start, j_coupling, 0.0]) / om0
    th1, om1 = frame(sched.omega_end)
    omegas = np.linspace(sched.omega_start, sched.omega_end, max(samples, 0))
    if samples == 1:
        omegas = np.array([sched.omega_end])
    props, work_s = [], []
    for w in omegas:
        th, om = frame(w)
        props.append(rot(th - th0))
        work_s.append((om - om0) * n0)
    n = len(omegas)
    return AdiabatMap(
        rot(th1 - th0),
        (om1 - om0) * n0,
        np.full(n, np.inf) if n else np.array([]),
        omegas,
        np.zeros(n),
        np.array(props).reshape(-1, 3, 3),
        np.array(work_s).reshape(-1, 3),
    )


def build_adiabat(sched: OmegaSchedule, j_coupling, samples=2, steps=None) -> AdiabatMap:
    """Dispatch on the schedule kind; analytic windows use the exact solution."""
    if sched.kind == "analytic":
        return analytic_adiabat(sched, samples)
    if sched.kind == "quasistatic":
        return quasistatic_adiabat(sched, j_coupling, samples)
    return numeric_adiabat(sched, j_coupling, steps, samples)
