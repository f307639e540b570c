"""Comparison checks, the separable subsolution h(t) phi(x), and theorem scenarios."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from ._rk import dopri5
from .dynamics import (
    BlowupReport,
    IntegratorOptions,
    PowerLaw,
    ProblemSpec,
    Trajectory,
    apply_nonlinearity,
    blowup_bound_F,
    extrapolate_blowup_time,
    integrate,
)
from .errors import BelowEquilibrium, DomainMismatch, HypothesisViolated
from .graph import DirichletDomain, WeightedGraph, dirichlet_domain
from .plap import VertexField, check_exponent, stencil
from .spectral import EigenPair, first_eigenpair

__all__ = [
    "ComparisonReport",
    "HSolution",
    "SubsolutionCertificate",
    "ScenarioResult",
    "check_comparison",
    "h_ode_solve",
    "build_subsolution",
    "threshold_initial",
    "scenario_theorem_1",
    "scenario_theorem_2",
]

SLACK = 1e-9


@dataclass(frozen=True)
class ComparisonReport:
    holds: bool
    min_gap: float
    violation_witness: tuple | None = None
    scale: float = 0.0
    grid_points: int = 0


def _resample(traj: Trajectory, grid: np.ndarray) -> np.ndarray:
    return np.column_stack([np.interp(grid, traj.times, traj.states[:, j])
                            for j in range(traj.states.shape[1])]).reshape(len(grid), -1)


def check_comparison(
    u: Trajectory,
    v: Trajectory,
    dom: DirichletDomain,
    grid: str | np.ndarray = "union",
    slack: float = SLACK,
) -> ComparisonReport:
    """Check u >= v on U over the common time span.

    ``grid`` is ``"union"`` (all times of either run, linear interpolation
    in t), ``"shared"`` (only times present in both runs, no interpolation)
    or an explicit array. The ordering holds when the smallest gap is at
    least ``-slack * (1 + scale)``, scale being the largest magnitude seen.
    The witness is the earliest violating (vertex, time, gap).
    """
    if u.support != dom.interior or v.support != dom.interior:
        raise DomainMismatch("trajectories must live on the domain interior")
    end = min(u.final_time, v.final_time)
    if isinstance(grid, str):
        if grid == "union":
            pts = np.union1d(u.times, v.times)
        elif grid == "shared":
            pts = np.intersect1d(u.times, v.times)
        else:
            raise ValueError(f"unknown grid mode {grid!r}")
    else:
        pts = np.unique(np.asarray(grid, dtype=float))
    pts = pts[(pts >= 0) & (pts <= end)]
    U, V = _resample(u, pts), _resample(v, pts)
    if U.size == 0:
        return ComparisonReport(True, 0.0, None, 0.0, len(pts))
    gap = U - V
    scale = float(max(np.abs(U).max(), np.abs(V).max()))
    min_gap = float(gap.min())
    bad = gap < -slack * (1.0 + scale)
    witness = None
    if bad.any():
        k, j = np.argwhere(bad)[0]
        witness = (dom.interior[j], float(pts[k]), float(gap[k, j]))
    return ComparisonReport(not bad.any(), min_gap, witness, scale, len(pts))


@dataclass(frozen=True)
class HSolution:
    times: np.ndarray
    values: np.ndarray
    blowup_time: float
    detected: bool
    error_estimate: float | None = None


def h_ode_solve(
    a: float,
    b: float,
    q: float,
    h0: float,
    threshold: float = 1e8,
    rel_tol: float = 1e-12,
    abs_tol: float = 1e-14,
    checkpoints: Iterable[float] = (),
) -> HSolution:
    """Solve h' = -a h + b h^q, h(0) = h0 up to h >= ``threshold``.

    The equation is of Bernoulli type, so the blow-up time is reported in
    closed form; ``error_estimate`` is its distance to the time
    extrapolated from the numerical tail.
    """
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if not q > 1:
        raise ValueError("q must exceed 1")
    eq = (a / b) ** (1.0 / (q - 1.0))
    if not h0 > eq:
        raise BelowEquilibrium(f"h0 = {h0!r} is not above the equilibrium {eq!r}")
    tau = 1.0 / (a + b * h0 ** (q - 1.0))
    # the slowest escape from near-equilibrium data is logarithmic in the gap
    gap = max((h0 - eq) / eq, 1e-300)
    horizon = tau * 1e3 + (abs(math.log(gap)) + 50.0) / ((q - 1.0) * a)
    fun = lambda t, y: -a * y + b * np.abs(y) ** q  # noqa: E731
    res = dopri5(fun, np.array([h0]), horizon, rtol=rel_tol, atol=abs_tol, first_step=1e-3 * tau,
                 min_step=1e-15 * tau, threshold=threshold, checkpoints=checkpoints)
    times, vals = res.times, res.states[:, 0]
    if res.status == "horizon":
        return HSolution(times, vals, math.inf, False)
    # w = h^(1-q) solves w' = (q-1)(a w - b)
    r = b / a
    T = math.log(r / (r - h0 ** (1.0 - q))) / ((q - 1.0) * a)
    fit = extrapolate_blowup_time(times, vals, q)
    err = None if fit is None else abs(float(fit[0]) - T)
    return HSolution(times, vals, float(T), True, err)


def threshold_initial(pair: EigenPair, C: float, delta: float, q: float) -> float:
    """Smallest min_U u0 for which h(0) phi <= u0 can be arranged."""
    if not q > 1:
        raise ValueError("q must exceed 1")
    return (pair.lam * pair.phi_sup ** (pair.p - 2.0) / (C * delta * pair.phi_min ** q)) ** (1.0 / (q - 1.0))


@dataclass(frozen=True)
class SubsolutionCertificate:
    """v_(x, t) = h(t) phi(x) and the residual of v_t - Delta_p v - sigma f(v) on its grid.

    ``residual_max`` is the raw maximum; ``residual_rel_max`` divides each
    entry by ``1 + |v_t| + |Delta_p v| + |sigma f(v)|``. The certificate is
    ``valid`` when ``residual_rel_max <= 1e-9``.
    """

    eigenpair: EigenPair
    p: float
    q: float
    C: float
    delta: float
    a: float
    b: float
    equilibrium: float
    eps: float
    h0: float
    h_times: np.ndarray
    h_values: np.ndarray
    h_blowup_time: float
    vbar: Trajectory
    residual_max: float
    residual_rel_max: float
    residual_witness: tuple

    @property
    def valid(self) -> bool:
        return self.residual_rel_max <= SLACK

    def to_json(self) -> dict:
        return {
            "lambda1": self.eigenpair.lam,
            "phi_min": self.eigenpair.phi_min,
            "phi_sup": self.eigenpair.phi_sup,
            # exponents of ||phi||_inf used in h0 and in the threshold
            "h0_phi_norm_power": 1.0,
            "threshold_phi_norm_power": self.p - 2.0,
            "a": self.a,
            "b": self.b,
            "q": self.q,
            "equilibrium": self.equilibrium,
            "eps": self.eps,
            "h0": self.h0,
            "h_blowup_time": self.h_blowup_time,
            "residual_max": self.residual_max,
            "residual_rel_max": self.residual_rel_max,
            "residual_witness": list(self.residual_witness) if self.residual_witness else None,
            "valid": self.valid,
        }


def _check_power_lower_bound(f, C, q, threshold, points=1000):
    s = np.geomspace(1e-6, 10.0 * threshold, points)
    with np.errstate(over="ignore", invalid="ignore"):
        fs = apply_nonlinearity(f, s)
        bad = ~(fs >= C * s ** q * (1 - 1e-12))
    if bad.any():
        i = int(np.argmax(bad))
        raise HypothesisViolated("f(s) >= C s^q", where=(float(s[i]), float(fs[i]), float(C * s[i] ** q)))


def build_subsolution(
    g: WeightedGraph,
    dom: DirichletDomain,
    p: float,
    q: float,
    C: float,
    delta: float,
    sigma: float | Callable = None,
    f: Callable | None = None,
    eps: float | None = None,
    threshold: float = 1e8,
    pair: EigenPair | None = None,
    eig_opts: Mapping | None = None,
    sample_horizon: float = 1.0,
) -> SubsolutionCertificate:
    """Build h(t) phi(x) from the first eigenpair and measure its residual.

    h solves h' = -lambda_1 ||phi||^(p-2) h + C delta phi_0^q h^q with
    h(0) = (lambda_1 ||phi|| / (C delta phi_0^q))^(1/(q-1)) + eps. The
    residual is evaluated on h's accepted grid, with v_t = h'(t) phi taken
    from the ODE right-hand side.
    """
    p = check_exponent(p)
    if not (1 < q <= p - 1):
        raise HypothesisViolated("1 < q <= p - 1", where=(q, p))
    if not (C > 0 and delta > 0):
        raise HypothesisViolated("C > 0 and delta > 0", where=(C, delta))
    sigma = delta if sigma is None else sigma
    f = PowerLaw.single(C, q) if f is None else f
    _check_power_lower_bound(f, C, q, threshold)
    spec_probe = ProblemSpec(g, dom, p, VertexField.constant(dom.interior, 0.0), f=f,
                             sigma=sigma, delta=delta, sigma_check_horizon=sample_horizon)
    if pair is None:
        pair = first_eigenpair(g, dom, p, **dict(eig_opts or {}))
    phi = pair.phi.values
    a = pair.lam * pair.phi_sup ** (p - 2.0)
    b = C * delta * pair.phi_min ** q
    eq = (pair.lam * pair.phi_sup / b) ** (1.0 / (q - 1.0))
    if eps is None:
        eps = 0.1 * eq
    if not eps > 0:
        raise ValueError("eps must be positive")
    h0 = eq + eps
    hs = h_ode_solve(a, b, q, h0, threshold=threshold)

    H = hs.values
    V = H[:, None] * phi[None, :]
    st = stencil(g, dom)
    lap = st.apply_batch(V, p)
    sig = np.array([spec_probe.sigma_on(t) for t in hs.times])
    low = sig < delta
    if low.any():
        k, j = np.argwhere(low)[0]
        raise HypothesisViolated("sigma >= delta", where=(dom.interior[j], float(hs.times[k]), float(sig[k, j])))
    src = sig * apply_nonlinearity(f, V)
    vt = (-a * H + b * H ** q)[:, None] * phi[None, :]
    res = vt - lap - src
    rel = res / (1.0 + np.abs(vt) + np.abs(lap) + np.abs(src))
    k, j = np.unravel_index(int(np.argmax(rel)), rel.shape)
    vbar = Trajectory(hs.times, V, dom.interior, {"accepted": len(hs.times) - 1})
    return SubsolutionCertificate(
        eigenpair=pair, p=p, q=float(q), C=float(C), delta=float(delta), a=a, b=b,
        equilibrium=eq, eps=float(eps), h0=h0, h_times=hs.times, h_values=H,
        h_blowup_time=hs.blowup_time, vbar=vbar,
        residual_max=float(res.max()), residual_rel_max=float(rel.max()),
        residual_witness=(dom.interior[j], float(hs.times[k]), float(res[k, j])),
    )


# scenarios


@dataclass(frozen=True)
class ScenarioResult:
    theorem_tag: str
    verdict: str  # "as-predicted" | "contradicted"
    spec: ProblemSpec
    report: BlowupReport
    trajectory: Trajectory
    params: dict
    certificate: SubsolutionCertificate | None = None
    comparison: ComparisonReport | None = None
    comparison_trajectory: Trajectory | None = None

    @property
    def as_predicted(self) -> bool:
        return self.verdict == "as-predicted"

    def to_json(self) -> dict:
        out = {
            "theorem_tag": self.theorem_tag,
            "verdict": self.verdict,
            "params": self.params,
            "report": self.report.to_json(),
            "certificate": None if self.certificate is None else self.certificate.to_json(),
            "comparison_min_gap": None if self.comparison is None else self.comparison.min_gap,
            "comparison_holds": None if self.comparison is None else self.comparison.holds,
        }
        return out


def _initial_on(g, u0) -> VertexField:
    """Accept a VertexField, a mapping, or a constant; extend by 0 to all of V."""
    if isinstance(u0, VertexField):
        d = u0.as_dict()
    elif isinstance(u0, Mapping):
        d = {str(k): float(v) for k, v in u0.items()}
    else:
        d = {x: float(u0) for x in g.vertices}
    for x in d:
        g.idx(x)
    return VertexField(g.vertices, [d.get(x, 0.0) for x in g.vertices])


def scenario_theorem_1(
    g: WeightedGraph,
    U: Iterable[str],
    p: float,
    eps: float,
    delta: float,
    sigma: float | Callable,
    u0,
    opts: IntegratorOptions | None = None,
    compare_full: bool = False,
    equality: bool = False,
    slack: float = 0.02,
) -> ScenarioResult:
    """Superlinear case f(s) = (1/delta + eps) s^(p-1).

    Verdict is as predicted when blow-up is detected no later than
    F(max_U u0) plus ``slack`` (relative). With ``compare_full`` the problem
    is also run on the whole graph and compared against the Dirichlet run on U.
    """
    p = check_exponent(p)
    if not (eps > 0 and delta > 0):
        raise HypothesisViolated("eps > 0 and delta > 0", where=(eps, delta))
    dom = dirichlet_domain(g, U)
    full0 = _initial_on(g, u0)
    if np.any(full0.values < 0):
        raise HypothesisViolated("u0 >= 0", where=full0.support[int(np.argmin(full0.values))])
    u0U = full0.restrict(dom.interior)
    if not np.any(u0U.values > 0):
        raise HypothesisViolated("u0 not identically zero on U")
    opts = opts or IntegratorOptions()
    coef = 1.0 / delta + eps
    f = PowerLaw.single(coef, p - 1.0)
    spec = ProblemSpec(g, dom, p, u0U, f=f, sigma=sigma, delta=delta,
                       sigma_check_horizon=opts.horizon)
    traj, report = integrate(spec, opts)
    bound = blowup_bound_F(f, delta, p, float(u0U.values.max()))
    ok = report.detected and report.extrapolated_time <= bound * (1.0 + slack)

    comparison = full_traj = None
    if compare_full:
        full_dom = dirichlet_domain(g, g.vertices)
        full_spec = ProblemSpec(g, full_dom, p, full0, f=f, sigma=sigma, delta=delta,
                                sigma_check_horizon=opts.horizon)
        ftraj, _ = integrate(full_spec, opts, checkpoints=traj.times[1:])
        cols = [g.vertices.index(x) for x in dom.interior]
        full_traj = Trajectory(ftraj.times, ftraj.states[:, cols], dom.interior, ftraj.step_stats)
        comparison = check_comparison(full_traj, traj, dom, grid="shared")
        ok = ok and comparison.holds

    params = {"p": p, "eps": eps, "delta": delta, "f_coefficient": coef, "f_exponent": p - 1.0,
              "u0_max": float(u0U.values.max()), "F_u0": bound, "interior": list(dom.interior)}
    return ScenarioResult(
        theorem_tag="equality-remark" if equality else "thm-1.1",
        verdict="as-predicted" if ok else "contradicted",
        spec=spec, report=report, trajectory=traj, params=params,
        comparison=comparison, comparison_trajectory=full_traj,
    )


def scenario_theorem_2(
    g: WeightedGraph,
    U: Iterable[str],
    p: float,
    q: float,
    C: float,
    delta: float,
    sigma: float | Callable,
    u0,
    eps: float | None = None,
    opts: IntegratorOptions | None = None,
    equality: bool = False,
    eig_opts: Mapping | None = None,
    pair: EigenPair | None = None,
) -> ScenarioResult:
    """Case f(s) = C s^q with 1 < q <= p - 1 and min_U u0 above threshold.

    When ``eps`` is None it is 0.1 times the equilibrium of the h-equation,
    capped at half the margin ``min_U u0 - equilibrium`` so that
    h(0) phi <= u0 holds at t = 0. Verdict is as predicted when the run on U
    blows up and stays above h(t) phi on the shared grid.
    """
    p = check_exponent(p)
    if not (1 < q <= p - 1):
        raise HypothesisViolated("1 < q <= p - 1", where=(q, p))
    dom = dirichlet_domain(g, U)
    full0 = _initial_on(g, u0)
    if np.any(full0.values < 0):
        raise HypothesisViolated("u0 >= 0", where=full0.support[int(np.argmin(full0.values))])
    u0U = full0.restrict(dom.interior)
    if pair is None:
        pair = first_eigenpair(g, dom, p, **dict(eig_opts or {}))
    thr = threshold_initial(pair, C, delta, q)
    umin = float(u0U.values.min())
    if not umin > thr:
        raise HypothesisViolated("min_U u0 > threshold", where=(umin, thr))
    opts = opts or IntegratorOptions()
    eq = (pair.lam * pair.phi_sup / (C * delta * pair.phi_min ** q)) ** (1.0 / (q - 1.0))
    if eps is None:
        eps = min(0.1 * eq, 0.5 * (umin - eq)) if umin > eq else 0.1 * eq
    f = PowerLaw.single(C, q)
    cert = build_subsolution(g, dom, p, q, C, delta, sigma=sigma, f=f, eps=eps,
                             threshold=opts.blowup_threshold, pair=pair,
                             sample_horizon=opts.horizon)
    spec = ProblemSpec(g, dom, p, u0U, f=f, sigma=sigma, delta=delta, exponents=(q, C),
                       sigma_check_horizon=opts.horizon)
    # stop on h's grid too, so that h overtaking a bounded run cannot slip
    # between two coarse steps
    traj, report = integrate(spec, opts, checkpoints=cert.h_times[1:])
    # h on the run's own grid, so the ordering check needs no interpolation
    hs = h_ode_solve(cert.a, cert.b, q, cert.h0, threshold=opts.blowup_threshold,
                     checkpoints=traj.times[1:])
    vbar = Trajectory(hs.times, hs.values[:, None] * pair.phi.values[None, :], dom.interior)
    comparison = check_comparison(traj, vbar, dom, grid="shared")
    ok = report.detected and comparison.holds
    params = {"p": p, "q": q, "C": C, "delta": delta, "eps": eps, "threshold_initial": thr,
              "u0_min": umin, "interior": list(dom.interior)}
    return ScenarioResult(
        theorem_tag="equality-remark" if equality else "thm-1.2",
        verdict="as-predicted" if ok else "contradicted",
        spec=spec, report=report, trajectory=traj, params=params,
        certificate=cert, comparison=comparison, comparison_trajectory=vbar,
    )
