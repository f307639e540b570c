"""Time evolution of v_t = Delta_p|_U v + sigma(x, t) f(v) with zero boundary data.

Two independent solvers are provided: :func:`integrate` (adaptive
Dormand-Prince with blow-up detection) and :func:`picard_solve` (fixed-point
sweeps of the integral equation on a uniform grid, trapezoid quadrature).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _quad
from scipy.optimize import minimize_scalar

from ._rk import dopri5, radau
from .errors import (
    HypothesisViolated,
    MaxSweepsExceeded,
    NoContraction,
    NonpositiveDenominator,
    QuadratureFailure,
    StepUnderflowWithoutGrowth,
    SupportMismatch,
)
from .graph import DirichletDomain, WeightedGraph
from .plap import VertexField, check_exponent, stencil

__all__ = [
    "PowerLaw",
    "ProblemSpec",
    "Trajectory",
    "BlowupReport",
    "IntegratorOptions",
    "rhs",
    "picard_solve",
    "integrate",
    "sup_trajectory",
    "blowup_bound_F",
    "extrapolate_blowup_time",
    "apply_nonlinearity",
]

SLACK = 1e-9


class PowerLaw:
    """f(s) = sum_k C_k |s|^(q_k - 1) s.

    The odd extension keeps f defined (and locally Lipschitz for q_k >= 1)
    on negative arguments.
    """

    def __init__(self, terms):
        self.terms = tuple((float(c), float(q)) for c, q in terms)
        if not self.terms:
            raise ValueError("PowerLaw needs at least one term")
        for c, q in self.terms:
            if q < 1:
                raise ValueError(f"exponent {q} < 1 is not locally Lipschitz at 0")

    @classmethod
    def single(cls, C: float, q: float) -> "PowerLaw":
        return cls([(C, q)])

    @property
    def exponents(self):
        """(q, C) for a single-term law, else None."""
        if len(self.terms) == 1:
            c, q = self.terms[0]
            return q, c
        return None

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        out = sum(c * a ** (q - 1.0) * s for c, q in self.terms)
        return float(out) if np.ndim(out) == 0 else out

    def __repr__(self):
        return "PowerLaw(" + " + ".join(f"{c!r}*s^{q!r}" for c, q in self.terms) + ")"


def apply_nonlinearity(f: Callable, v: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` elementwise, whether or not it broadcasts over arrays."""
    v = np.asarray(v, dtype=float)
    try:
        out = np.asarray(f(v), dtype=float)
        if out.shape == v.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(f(float(s))) for s in v.reshape(-1)]).reshape(v.shape)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Data of the Dirichlet problem on U with zero boundary values.

    ``sigma`` is a positive constant or a callable ``sigma(vertex_id, t)``;
    callables with a truthy ``vectorized`` attribute are called once per time
    with the tuple of interior ids. ``delta``/``sigma_upper`` are the declared
    bounds of sigma and are checked on a (vertex x time) sample grid.
    """

    graph: WeightedGraph
    domain: DirichletDomain
    p: float
    initial: VertexField
    f: Callable = field(default_factory=lambda: PowerLaw.single(0.0, 1.0))
    sigma: float | Callable = 1.0
    delta: float | None = None
    sigma_upper: float | None = None
    lipschitz: float | None = None
    exponents: tuple[float, float] | None = None
    sigma_check_horizon: float = 1.0
    sigma_check_points: int = 33
    linear_ok: bool = False

    def __post_init__(self):
        object.__setattr__(self, "p", check_exponent(self.p, self.linear_ok))
        if not self.domain.homogeneous:
            raise HypothesisViolated("boundary data must vanish", where=self.domain.boundary)
        u0 = self.initial
        if u0.support != self.domain.interior:
            try:
                u0 = u0.restrict(self.domain.interior)
            except SupportMismatch:
                raise SupportMismatch("initial field must be defined on the interior") from None
            object.__setattr__(self, "initial", u0)
        if np.any(u0.values < 0):
            x = u0.support[int(np.argmin(u0.values))]
            raise HypothesisViolated("u0 >= 0", where=x)
        f0 = float(apply_nonlinearity(self.f, np.zeros(1))[0])
        if f0 != 0.0:
            raise HypothesisViolated("f(0) = 0", where=f0)
        if self.exponents is None and isinstance(self.f, PowerLaw):
            object.__setattr__(self, "exponents", self.f.exponents)
        self.check_sigma(np.linspace(0.0, self.sigma_check_horizon, self.sigma_check_points))

    @property
    def interior(self) -> tuple[str, ...]:
        return self.domain.interior

    def sigma_on(self, t: float) -> np.ndarray:
        s = self.sigma
        m = self.domain.m
        if not callable(s):
            return np.full(m, float(s))
        if getattr(s, "vectorized", False):
            return np.broadcast_to(np.asarray(s(self.domain.interior, t), dtype=float), (m,)).copy()
        return np.array([float(s(x, t)) for x in self.domain.interior])

    def check_sigma(self, times) -> None:
        lo = self.delta if self.delta is not None else 0.0
        for t in times:
            vals = self.sigma_on(float(t))
            bad = vals < lo if self.delta is not None else vals <= 0
            if np.any(bad) or not np.all(np.isfinite(vals)):
                i = int(np.argmax(bad | ~np.isfinite(vals)))
                raise HypothesisViolated(
                    "sigma >= delta" if self.delta is not None else "sigma > 0",
                    where=(self.domain.interior[i], float(t), float(vals[i])),
                )
            if self.sigma_upper is not None and np.any(vals > self.sigma_upper):
                i = int(np.argmax(vals > self.sigma_upper))
                raise HypothesisViolated("sigma <= M", where=(self.domain.interior[i], float(t), float(vals[i])))

    def with_initial(self, u0: VertexField) -> "ProblemSpec":
        return replace(self, initial=u0)

    @property
    def rate_exponent(self) -> float | None:
        """Growth exponent q-hat of the dominant power near blow-up, if known."""
        if self.exponents is None:
            return None
        return max(self.exponents[0], self.p - 1.0)


@dataclass(frozen=True)
class Trajectory:
    """Accepted time points and the interior state at each of them."""

    times: np.ndarray
    states: np.ndarray
    support: tuple[str, ...]
    step_stats: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=float).reshape(len(t), len(self.support))
        if len(t) and t[0] != 0.0:
            raise ValueError("trajectory must start at t = 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if not np.all(np.isfinite(s)):
            raise ValueError("trajectory states must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> VertexField:
        return VertexField(self.support, self.states[i])

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *self.support])
        for t, row in zip(self.times, self.states):
            w.writerow([format(t, ".17g"), *(format(v, ".17g") for v in row)])
        return buf.getvalue()


@dataclass(frozen=True)
class BlowupReport:
    detected: bool
    blowup_vertex: str | None = None
    threshold_time: float | None = None
    extrapolated_time: float | None = None
    fit_residual: float | None = None
    error_estimate: float | None = None
    fit_exponent: float | None = None
    theoretical_bound: float | None = None
    reason: str = "horizon"

    def to_json(self) -> dict:
        return {
            "detected": self.detected,
            "blowup_vertex": self.blowup_vertex,
            "threshold_time": self.threshold_time,
            "extrapolated_time": self.extrapolated_time,
            "fit_residual": self.fit_residual,
            "error_estimate": self.error_estimate,
            "fit_exponent": self.fit_exponent,
            "theoretical_bound": self.theoretical_bound,
            "reason": self.reason,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class IntegratorOptions:
    horizon: float = 10.0
    initial_step: float | None = None
    min_step: float | None = None
    blowup_threshold: float = 1e8
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    # "auto": explicit pair, switching to Radau IIA once stiffness is detected
    method: str = "auto"

    def __post_init__(self):
        if self.method not in ("auto", "dopri5", "radau"):
            raise ValueError(f"unknown method {self.method!r}")
        for name in ("horizon", "blowup_threshold", "rel_tol", "abs_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def _rhs_array(spec: ProblemSpec, st, t: float, v: np.ndarray) -> np.ndarray:
    return st.apply(v, spec.p) + spec.sigma_on(t) * apply_nonlinearity(spec.f, v)


def rhs(spec: ProblemSpec, t: float, v: VertexField) -> VertexField:
    """Delta_p|_U v + sigma(., t) f(v) on the interior."""
    if v.support != spec.interior:
        raise SupportMismatch("state must live on the interior")
    st = stencil(spec.graph, spec.domain)
    return VertexField(spec.interior, _rhs_array(spec, st, t, v.values))


def sup_trajectory(traj: Trajectory) -> list[tuple[float, float, str]]:
    """Per-time maximum over U and the vertex attaining it (first in id order)."""
    if traj.states.shape[1] == 0:
        return []
    idx = np.argmax(traj.states, axis=1)
    return [(float(t), float(traj.states[k, i]), traj.support[i]) for k, (t, i) in enumerate(zip(traj.times, idx))]


# Picard iteration


def picard_solve(
    spec: ProblemSpec,
    horizon: float,
    tol: float = 1e-10,
    max_sweeps: int = 500,
    points_per_unit: int = 1024,
) -> Trajectory:
    """Fixed point of v -> u0 + int_0^t (Delta_p|_U v + sigma f(v)) ds.

    The integral is the composite trapezoid rule on a uniform grid with
    ``points_per_unit`` intervals per unit time. Raises
    :class:`NoContraction` when the sweep distance fails to decrease three
    sweeps in a row (the horizon is too long; bisect it).
    """
    if not (horizon > 0 and tol > 0):
        raise ValueError("horizon and tol must be positive")
    n = max(2, int(math.ceil(points_per_unit * horizon)))
    t = np.linspace(0.0, horizon, n + 1)
    dt = np.diff(t)
    st = stencil(spec.graph, spec.domain)
    u0 = spec.initial.values
    sig = np.array([spec.sigma_on(tk) for tk in t])
    V = np.broadcast_to(u0, (len(t), len(u0))).copy()
    prev = np.inf
    stalls = 0
    for sweep in range(1, max_sweeps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            G = st.apply_batch(V, spec.p) + sig * apply_nonlinearity(spec.f, V)
            W = np.empty_like(V)
            W[0] = u0
            W[1:] = u0 + np.cumsum(0.5 * dt[:, None] * (G[:-1] + G[1:]), axis=0)
            dist = float(np.max(np.abs(W - V)))
        if not math.isfinite(dist):
            raise NoContraction(f"sweep {sweep} produced non-finite values; shorten the horizon")
        V = W
        if dist <= tol:
            return Trajectory(t, V, spec.interior, {"sweeps": sweep, "grid_points": len(t),
                                                   "step": float(horizon / n), "last_distance": dist})
        stalls = stalls + 1 if dist >= prev else 0
        if stalls >= 3:
            raise NoContraction(f"sweep distance stopped decreasing at sweep {sweep} ({dist:.3e})")
        prev = dist
    raise MaxSweepsExceeded(f"{max_sweeps} sweeps, last distance {dist:.3e}")


# blow-up time extrapolation


def _fit_power(tt, ls, beta, gap):
    """Least-squares residual of log sup = c - beta log(T - t), T = t_last + gap.

    ``beta`` None means fitted. Passing the gap rather than T keeps
    T - t exact when the gap is below the spacing of floats near t_last.
    """
    x = np.log((tt[-1] - tt) + gap)
    if beta is None:
        X = np.column_stack([np.ones_like(x), x])
        coef, *_ = np.linalg.lstsq(X, ls, rcond=None)
        r = ls - X @ coef
        return float(r @ r), float(-coef[1])
    c = np.mean(ls + beta * x)
    r = ls - (c - beta * x)
    return float(r @ r), beta


def _fit_T(tt, ls, beta):
    t_last = tt[-1]
    span = max(tt[-1] - tt[0], 1e-300)
    b0 = beta if beta is not None else 1.0
    # linearization: sup^(-1/beta) is affine in t for an exact power law
    y = np.exp(-ls / b0)
    slope, icpt = np.polyfit(tt, y, 1)
    guess = -icpt / slope if slope < 0 else t_last + span
    gap0 = guess - t_last
    if not gap0 > 0:
        gap0 = max(span * 1e-3, 1e-15)
    lo, hi = math.log(gap0) - 12.0, math.log(gap0) + 12.0
    obj = lambda z: _fit_power(tt, ls, beta, math.exp(z))[0]  # noqa: E731
    res = minimize_scalar(obj, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    T = t_last + math.exp(res.x)
    rss, b = _fit_power(tt, ls, beta, math.exp(res.x))
    return T, math.sqrt(rss / len(tt)), b


def extrapolate_blowup_time(times, sups, exponent: float | None = None, min_points: int = 6):
    """Fit sup(t) ~ A (T - t)^(-1/(q - 1)) to the growth tail of a run.

    ``exponent`` is q; when None the power is fitted as well. Uses the points
    whose sup lies in the upper half (log scale) of the observed range.
    Returns ``(T, rms_residual, error_estimate, beta)`` or None when too few
    points are usable. ``error_estimate`` adds the spread between fits on the
    full window and its later half to the gap ``T - t_last``.
    """
    times = np.asarray(times, dtype=float)
    sups = np.asarray(sups, dtype=float)
    ok = sups > 0
    times, sups = times[ok], sups[ok]
    if len(times) < min_points:
        return None
    top = sups[-1]
    lo_level = math.sqrt(top * max(sups.min(), 1e-300))
    keep = sups >= lo_level
    idx = np.flatnonzero(keep)
    first = idx[0] if len(idx) else 0
    if len(times) - first < min_points:
        first = len(times) - min_points
    tt, ls = times[first:], np.log(sups[first:])
    beta = None if exponent is None else 1.0 / (exponent - 1.0)
    T, rms, b = _fit_T(tt, ls, beta)
    half = len(tt) // 2
    if len(tt) - half >= min_points:
        T2, _, _ = _fit_T(tt[half:], ls[half:], beta)
        spread = abs(T - T2)
    else:
        spread = abs(T - tt[-1])
    return T, rms, spread + (T - tt[-1]), b


def integrate(
    spec: ProblemSpec,
    opts: IntegratorOptions | None = None,
    checkpoints: Sequence[float] = (),
    **overrides,
) -> tuple[Trajectory, BlowupReport]:
    """Adaptive integration until the horizon or blow-up.

    The default method runs the explicit Dormand-Prince pair and continues
    with Radau IIA from the first stretch where the explicit step is
    stability limited (large states when q < p - 1).

    Blow-up is reported when the sup over U reaches ``blowup_threshold``, or
    when the step size underflows ``min_step`` after substantial growth.
    Every time in ``checkpoints`` is hit exactly, which lets two runs share a
    grid.
    """
    opts = replace(opts or IntegratorOptions(), **overrides)
    horizon = opts.horizon
    first = opts.initial_step if opts.initial_step is not None else 1e-3 * horizon
    min_step = opts.min_step if opts.min_step is not None else 1e-12 * horizon
    st = stencil(spec.graph, spec.domain)
    spec.check_sigma(np.linspace(0.0, horizon, spec.sigma_check_points))
    fun = lambda t, v: _rhs_array(spec, st, t, v)  # noqa: E731
    kw = dict(rtol=opts.rel_tol, atol=opts.abs_tol, min_step=min_step,
              threshold=opts.blowup_threshold, checkpoints=checkpoints)
    switched = None
    if opts.method == "radau":
        res = radau(fun, spec.initial.values, 0.0, horizon, first_step=first, **kw)
    else:
        res = dopri5(fun, spec.initial.values, horizon, first_step=first,
                     stop_on_stiff=opts.method == "auto", **kw)
        if res.status == "stiff":
            switched = float(res.times[-1])
            more = radau(fun, res.states[-1], switched, horizon, first_step=res.last_step, **kw)
            res.times = np.concatenate([res.times, more.times[1:]])
            res.states = np.concatenate([res.states, more.states[1:]])
            res.status = more.status
            res.accepted += more.accepted
            res.nfev += more.nfev
            res.min_step = min(res.min_step, more.min_step)
            res.max_step = max(res.max_step, more.max_step)
    stats = {"accepted": res.accepted, "rejected": res.rejected, "min_step": res.min_step,
             "max_step": res.max_step, "nfev": res.nfev, "status": res.status,
             "implicit_from": switched if opts.method != "radau" else 0.0}
    traj = Trajectory(res.times, res.states, spec.interior, stats)

    bound = None
    u0max = float(spec.initial.values.max()) if spec.domain.m else 0.0
    if spec.delta is not None and u0max > 0:
        try:
            bound = blowup_bound_F(spec.f, spec.delta, spec.p, u0max)
        except (NonpositiveDenominator, QuadratureFailure):
            bound = None

    if res.status == "horizon":
        return traj, BlowupReport(False, theoretical_bound=bound, reason="horizon")

    sups = traj.states.max(axis=1) if spec.domain.m else np.zeros(len(traj))
    if res.status == "underflow":
        s0 = max(1.0, float(sups[0]))
        if not (sups[-1] >= min(math.sqrt(opts.blowup_threshold), 1e3 * s0)):
            raise StepUnderflowWithoutGrowth(
                f"step fell below {min_step:.3e} at t={traj.final_time:.6g} with sup={sups[-1]:.3e}"
            )
    fit = extrapolate_blowup_time(traj.times, sups, spec.rate_exponent)
    vertex = traj.support[int(np.argmax(traj.states[-1]))]
    t_thr = traj.final_time
    if fit is None:
        T, rms, err, beta = t_thr, None, None, None
    else:
        T, rms, err, beta = (float(x) for x in fit)
        T = max(T, t_thr)
    return traj, BlowupReport(
        detected=True,
        blowup_vertex=vertex,
        threshold_time=t_thr,
        extrapolated_time=T,
        fit_residual=rms,
        error_estimate=err,
        fit_exponent=None if beta is None else 1.0 + 1.0 / beta,
        theoretical_bound=bound,
        reason=res.status,
    )


# F(x) = int_x^inf ds / (delta f(s) - s^(p-1))


def blowup_bound_F(
    f: Callable,
    delta: float,
    p: float,
    x_lower: float,
    quad_tol: float = 1e-10,
    samples: int = 1000,
    sample_decades: float = 12.0,
) -> float:
    """Upper bound on the blow-up time started from sup u0 = ``x_lower``.

    Requires delta f(s) - s^(p-1) > 0 for s >= x_lower, checked on a
    geometric sample grid. The integral is taken in y = log(s / x_lower)
    over [0, inf).
    """
    p = check_exponent(p)
    if not (x_lower > 0 and delta > 0):
        raise ValueError("x_lower and delta must be positive")
    s = x_lower * np.logspace(0.0, sample_decades, samples)
    with np.errstate(over="ignore", invalid="ignore"):
        den = delta * apply_nonlinearity(f, s) - s ** (p - 1.0)
    bad = ~(den > 0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NonpositiveDenominator(f"delta*f(s) - s^(p-1) = {den[i]!r} <= 0 at s = {s[i]!r}")

    def integrand(y):
        x = x_lower * math.exp(y) if y < 700 else math.inf
        if not math.isfinite(x):
            return 0.0
        with np.errstate(over="ignore", invalid="ignore"):
            d = delta * float(apply_nonlinearity(f, np.array([x]))[0]) - np.float64(x) ** (p - 1.0)
        if not math.isfinite(d):
            return 0.0
        if d <= 0:
            raise NonpositiveDenominator(f"denominator {d!r} <= 0 at s = {x!r}")
        return x / d

    # s = x_lower e^y turns the algebraic tail into an exponential one
    val, err, *info = _quad.quad(integrand, 0.0, math.inf, epsabs=quad_tol, epsrel=1e-12,
                                 limit=1000, full_output=1)
    if not math.isfinite(val) or err > max(quad_tol, 1e-12 * abs(val)):
        raise QuadratureFailure(f"quadrature error {err:.3e} exceeds {quad_tol:.3e}")
    return float(val)
