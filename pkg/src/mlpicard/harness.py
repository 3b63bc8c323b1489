"""Benchmark problems with exact solutions, convergence studies, and checks.

Four builtin cases cover the feature matrix (pure terminal data, value-only
nonlinearity, gradient-dependent nonlinearity, forward convention), each
carrying its manufactured exact solution, exact moment norms for the error
bound, and a finite-difference residual check run at construction so a typo
in either the PDE data or the claimed solution cannot slip through.

On top of the cases sit :func:`run_convergence` (replicated error tables
with an a-priori bound column, CSV output with a fixed schema) and
:func:`run_test_battery` (sampler law tests, integral identity grid,
a Feynman-Kac unbiasedness ladder, cost-ledger equality, and convergence
trends on all cases, aggregated into a structured pass/fail report).
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import kstest

from .bounds import (
    ErrorBoundInput,
    RegularityData,
    cost_bound_closed,
    cost_rv,
    error_bound,
)
from .core import (
    Convention,
    FieldEstimate,
    MlpConfig,
    PdeProblem,
    to_canonical,
)
from .engine import EmptySample, evaluate, replicate, rmse
from .integrals import (
    HypothesisViolated,
    IteratedIntegralSpec,
    iterated_integral_closed,
    iterated_integral_lower_bound,
    iterated_integral_quadrature,
    iterated_integral_upper_bound,
)
from .sampler import StreamKey, derive_stream, single_step_second_moment

__all__ = [
    "BenchmarkCase",
    "ResidualCheckFailed",
    "UnknownCase",
    "BUILTIN_CASES",
    "builtin_case",
    "load_case_file",
    "default_eval_points",
    "ConvergenceRow",
    "CSV_COLUMNS",
    "run_convergence",
    "write_csv",
    "combined_error_ucl",
    "unbiasedness_gap",
    "verify_integral_identities",
    "CheckResult",
    "BatteryReport",
    "run_test_battery",
]

RESIDUAL_GATE = 1e-6
DEFAULT_LAMBDA = 0.25
DEFAULT_COEFF = 0.5

# KS two-sided critical value at the 1% level is about 1.628 / sqrt(n).
KS_CRITICAL_1PCT = 1.628


class ResidualCheckFailed(ValueError):
    """Claimed exact solution does not satisfy the case's PDE."""


class UnknownCase(KeyError):
    """No builtin benchmark case under the requested name."""


@dataclass(frozen=True)
class BenchmarkCase:
    """A PDE problem bundled with its manufactured exact solution.

    ``exact(t, x)`` returns (value, gradient) in the problem's own
    convention and clock.  ``norm_overrides`` holds the exact moment norms
    of the *canonical form* of the problem for the error bound;
    ``u_moment_override`` is the exact bound on
    sup_s max_i ||u_i(s, x + W_s - W_t)||_{L^q} over the standard
    evaluation points.
    """

    name: str
    problem: PdeProblem
    exact: Callable[[float, np.ndarray], tuple[float, np.ndarray]]
    norm_overrides: RegularityData | None = None
    u_moment_override: float | None = None


def default_eval_points(dimension: int) -> list[np.ndarray]:
    """The two standard query points: the origin and (1,...,1)/sqrt(d).

    The second point breaks coordinate symmetry so that bugs masked by
    even/odd cancellation at the origin still surface.
    """
    return [
        np.zeros(dimension),
        np.full(dimension, 1.0 / math.sqrt(dimension)),
    ]


# ---------------------------------------------------------------------------
# Builtin cases
# ---------------------------------------------------------------------------


def _quadratic_case(dimension: int, horizon: float) -> BenchmarkCase:
    # g(x) = |x|^2, f = 0; u(t, x) = |x|^2 + d (T - t), grad u = 2x.
    d = dimension
    T = horizon

    def g(x):
        return (x**2).sum(axis=1)

    def f(t, x, y, z):
        return np.zeros_like(np.asarray(t, dtype=float))

    def exact(t, x, _d=d, _T=T):
        x = np.asarray(x, dtype=float)
        return float(x @ x) + _d * (_T - t), 2.0 * x

    # g is only locally Lipschitz; these constants cover the ball the
    # estimator actually visits from the standard points (|xi_i| <= 1 plus
    # three standard deviations of the driving noise).
    k_eff = 2.0 * (1.0 + 3.0 * math.sqrt(T))
    # Exact L4 norm of g along the path from xi: with s = T and
    # noncentrality lam = |xi|^2 / s <= 1/T, the fourth raw moment of the
    # noncentral chi-square gives ||g||_L4 = s * m4(d, lam)^(1/4), which is
    # increasing in s and in |xi|.
    lam_nc = 1.0 / T
    m4 = (
        (d + lam_nc) ** 4
        + 12.0 * (d + lam_nc) ** 2 * (d + 2.0 * lam_nc)
        + 12.0 * (d + 2.0 * lam_nc) ** 2
        + 32.0 * (d + lam_nc) * (d + 3.0 * lam_nc)
        + 48.0 * (d + 4.0 * lam_nc)
    )
    g_moment = T * m4**0.25
    grad_norm = 2.0 * (1.0 + 3.0**0.25 * math.sqrt(T))
    reg = RegularityData(
        l0=0.0,
        l=(0.0,) * d,
        frak_l=(0.0,) * d,
        k=(k_eff,) * d,
        g_moment=g_moment,
        f0_moment=0.0,
        q=4.0,
    )
    problem = PdeProblem(
        dimension=d,
        horizon=T,
        terminal_data=g,
        nonlinearity=f,
        lipschitz_solution=(0.0,) * (d + 1),
        lipschitz_space=(k_eff,) * d,
    )
    return BenchmarkCase(
        name="linear-heat-quadratic",
        problem=problem,
        exact=exact,
        norm_overrides=reg,
        u_moment_override=max(g_moment + d * T, grad_norm),
    )


def _sine_fields(dimension: int, horizon: float, lam: float):
    """g, exact for u(t, x) = e^(lam (T - t)) mean_i sin(x_i)."""

    def g(x):
        return np.sin(x).mean(axis=1)

    def exact(t, x, _lam=lam, _T=horizon, _d=dimension):
        x = np.asarray(x, dtype=float)
        amp = math.exp(_lam * (_T - t))
        return amp * float(np.mean(np.sin(x))), amp * np.cos(x) / _d

    return g, exact


def _exponential_case(dimension: int, horizon: float, lam: float) -> BenchmarkCase:
    # f(t, x, y, z) = (lam + 1/2) y; u as in _sine_fields.
    d = dimension
    g, exact = _sine_fields(d, horizon, lam)

    def f(t, x, y, z, _lam=lam):
        return (_lam + 0.5) * y

    reg = RegularityData(
        l0=lam + 0.5,
        l=(0.0,) * d,
        frak_l=(0.0,) * d,
        k=(1.0 / d,) * d,
        g_moment=1.0,
        f0_moment=0.0,
        q=4.0,
    )
    problem = PdeProblem(
        dimension=d,
        horizon=horizon,
        terminal_data=g,
        nonlinearity=f,
        lipschitz_solution=(lam + 0.5,) + (0.0,) * d,
        lipschitz_space=(1.0 / d,) * d,
    )
    return BenchmarkCase(
        name="grad-free-exponential",
        problem=problem,
        exact=exact,
        norm_overrides=reg,
        u_moment_override=math.exp(lam * horizon),
    )


def _sine_nonlinearity(dimension: int, horizon: float, lam: float, c: float):
    def f(t, x, y, z, _lam=lam, _c=c, _T=horizon, _d=dimension):
        trig = np.exp(_lam * (_T - np.asarray(t, dtype=float)))
        return (_lam + 0.5) * y + _c * (
            z.sum(axis=1) - trig * np.cos(x).mean(axis=1)
        )

    return f


def _gradient_case(
    dimension: int, horizon: float, lam: float, c: float
) -> BenchmarkCase:
    # Same u as the exponential case; the extra c (sum_i z_i - sum_i du/dx_i)
    # term vanishes at the true solution but forces the estimator to carry
    # correct gradients through the recursion.
    d = dimension
    g, exact = _sine_fields(d, horizon, lam)
    f = _sine_nonlinearity(d, horizon, lam, c)
    reg = RegularityData(
        l0=lam + 0.5,
        l=(c,) * d,
        frak_l=(c * math.exp(lam * horizon) / d,) * d,
        k=((abs(lam) + 1.0) / d,) * d,
        g_moment=1.0,
        f0_moment=c * math.exp(lam * horizon),
        q=4.0,
    )
    problem = PdeProblem(
        dimension=d,
        horizon=horizon,
        terminal_data=g,
        nonlinearity=f,
        lipschitz_solution=(lam + 0.5,) + (c,) * d,
        lipschitz_space=((abs(lam) + 1.0) / d,) * d,
    )
    return BenchmarkCase(
        name="grad-dependent-sine",
        problem=problem,
        exact=exact,
        norm_overrides=reg,
        u_moment_override=math.exp(lam * horizon),
    )


def _forward_case(
    dimension: int, forward_horizon: float, lam: float, c: float
) -> BenchmarkCase:
    # The gradient case rewritten in the forward convention on horizon
    # T_f: w(t, x) = u(2 (T_f - t), x) solves dw/dt = Lap w + f4(t,x,w,grad w)
    # with f4(t, ...) = 2 f3(2 (T_f - t), ...), where u and f3 are the
    # canonical fields on horizon 2 T_f.  Doubling/halving is exact in
    # floating point, so the canonical form of this case reproduces the
    # gradient case's nonlinearity up to at most one ulp in the time
    # argument.
    d = dimension
    tf = forward_horizon
    canonical_horizon = 2.0 * tf
    g, exact_canonical = _sine_fields(d, canonical_horizon, lam)
    f3 = _sine_nonlinearity(d, canonical_horizon, lam, c)

    def f4(t, x, y, z, _tf=tf):
        return 2.0 * f3(2.0 * (_tf - np.asarray(t, dtype=float)), x, y, z)

    def exact(t, x, _tf=tf):
        return exact_canonical(2.0 * (_tf - t), x)

    # Norms are stated for the canonical form (horizon 2 T_f), which is
    # exactly the gradient case's data.
    reg = RegularityData(
        l0=lam + 0.5,
        l=(c,) * d,
        frak_l=(c * math.exp(lam * canonical_horizon) / d,) * d,
        k=((abs(lam) + 1.0) / d,) * d,
        g_moment=1.0,
        f0_moment=c * math.exp(lam * canonical_horizon),
        q=4.0,
    )
    problem = PdeProblem(
        dimension=d,
        horizon=tf,
        terminal_data=g,
        nonlinearity=f4,
        lipschitz_solution=(2.0 * (lam + 0.5),) + (2.0 * c,) * d,
        lipschitz_space=(2.0 * (abs(lam) + 1.0) / d,) * d,
        convention=Convention.FORWARD_FULL_LAPLACIAN,
    )
    return BenchmarkCase(
        name="forward-heat",
        problem=problem,
        exact=exact,
        norm_overrides=reg,
        u_moment_override=math.exp(lam * canonical_horizon),
    )


BUILTIN_CASES = (
    "linear-heat-quadratic",
    "grad-free-exponential",
    "grad-dependent-sine",
    "forward-heat",
)


def registration_residual(
    case: BenchmarkCase,
    n_points: int = 25,
    h: float = 1e-4,
    seed: int = 12345,
) -> float:
    """Max finite-difference PDE residual of the claimed exact solution.

    Backward cases check |d_t u + (1/2) Lap u + f(t, x, u, grad u)|, forward
    cases |d_t w - Lap w - f(t, x, w, grad w)|, on a random (t, x) grid.
    The time derivative is a central difference of the exact value; the
    Laplacian is a central difference of the exact (analytic) gradient, so
    the check is sensitive to errors in the gradient as well.
    """
    rng = np.random.default_rng(seed)
    prob = case.problem
    d = prob.dimension
    T = prob.horizon
    ts = rng.uniform(h, T - h, size=n_points)
    xs = rng.uniform(-2.0, 2.0, size=(n_points, d))
    worst = 0.0
    eye = np.eye(d)
    forward = prob.convention is Convention.FORWARD_FULL_LAPLACIAN
    for t, x in zip(ts, xs):
        value, grad = case.exact(t, x)
        dt = (case.exact(t + h, x)[0] - case.exact(t - h, x)[0]) / (2.0 * h)
        lap = sum(
            (case.exact(t, x + h * eye[i])[1][i]
             - case.exact(t, x - h * eye[i])[1][i]) / (2.0 * h)
            for i in range(d)
        )
        fv = float(prob.nonlinearity(
            np.array([t]), x[None, :], np.array([value]), grad[None, :])[0])
        if forward:
            residual = dt - lap - fv
        else:
            residual = dt + 0.5 * lap + fv
        worst = max(worst, abs(residual))
    return worst


def builtin_case(
    name: str,
    dimension: int = 1,
    horizon: float | None = None,
    lam: float = DEFAULT_LAMBDA,
    c: float = DEFAULT_COEFF,
) -> BenchmarkCase:
    """Construct a builtin case and run its registration residual check.

    ``horizon`` defaults to 1.0, except for the forward case where it is the
    forward horizon and defaults to 0.5 (so the canonical horizon is 1.0).
    Raises :class:`ResidualCheckFailed` if the claimed solution misses the
    PDE by more than the finite-difference gate.
    """
    if name == "linear-heat-quadratic":
        case = _quadratic_case(dimension, 1.0 if horizon is None else horizon)
    elif name == "grad-free-exponential":
        case = _exponential_case(
            dimension, 1.0 if horizon is None else horizon, lam)
    elif name == "grad-dependent-sine":
        case = _gradient_case(
            dimension, 1.0 if horizon is None else horizon, lam, c)
    elif name == "forward-heat":
        case = _forward_case(
            dimension, 0.5 if horizon is None else horizon, lam, c)
    else:
        raise UnknownCase(
            f"unknown case {name!r}; builtin cases: {', '.join(BUILTIN_CASES)}")
    worst = registration_residual(case)
    if not worst < RESIDUAL_GATE:
        raise ResidualCheckFailed(
            f"case {name}: max PDE residual {worst:.3e} >= {RESIDUAL_GATE}")
    return case


def load_case_file(path: str) -> BenchmarkCase:
    """Build a builtin case from a key=value text file.

    Recognized keys: ``case`` (required), ``dimension``, ``horizon``,
    ``lambda``, ``c``.  Lines starting with ``#`` and blank lines are
    ignored.
    """
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    known = {"case", "dimension", "horizon", "lambda", "c"}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    if "case" not in values:
        raise ValueError(f"{path}: missing required key 'case'")
    return builtin_case(
        values["case"],
        dimension=int(values.get("dimension", "1")),
        horizon=float(values["horizon"]) if "horizon" in values else None,
        lam=float(values.get("lambda", str(DEFAULT_LAMBDA))),
        c=float(values.get("c", str(DEFAULT_COEFF))),
    )


# ---------------------------------------------------------------------------
# Convergence studies and CSV reporting
# ---------------------------------------------------------------------------

CSV_COLUMNS = (
    "case",
    "n",
    "M",
    "replications",
    "rmse_value",
    "rmse_grad_max",
    "combined_error",
    "error_bound",
    "draws",
    "wall_seconds",
)


@dataclass(frozen=True)
class ConvergenceRow:
    """One (n, M) line of a convergence table; see CSV_COLUMNS."""

    case: str
    n: int
    base: int
    replications: int
    rmse_value: float
    rmse_grad_max: float
    combined_error: float
    error_bound: float
    draws: int
    wall_seconds: float

    def as_csv(self) -> list[str]:
        return [
            self.case,
            str(self.n),
            str(self.base),
            str(self.replications),
            repr(self.rmse_value),
            repr(self.rmse_grad_max),
            repr(self.combined_error),
            repr(self.error_bound),
            str(self.draws),
            repr(self.wall_seconds),
        ]


def _row_error_bound(
    case: BenchmarkCase,
    canonical: PdeProblem,
    n: int,
    base: int,
    s: float,
    time_cdf_exponent: float,
) -> float:
    """A-priori bound column; NaN when no norms are supplied or the
    (p, alpha) hypotheses exclude the configuration."""
    if case.norm_overrides is None or n < 1:
        return math.nan
    try:
        return error_bound(ErrorBoundInput(
            p=4.0,
            alpha=1.0 - time_cdf_exponent,
            n=n,
            base=base,
            horizon=canonical.horizon,
            t=s,
            reg=case.norm_overrides,
            u_moment_override=case.u_moment_override,
        ))
    except HypothesisViolated:
        return math.nan


def run_convergence(
    case: BenchmarkCase,
    schedule: Sequence[tuple[int, int]],
    replications: int = 100,
    seed: int = 0,
    t: float | None = None,
    x: np.ndarray | None = None,
    time_cdf_exponent: float = 0.5,
    include_timing: bool = False,
    workers: int = 1,
    budget: int | None = None,
) -> list[ConvergenceRow]:
    """Replicated error table over a schedule of (n, M) pairs.

    ``t`` is in the case's own clock (``None`` means canonical time 0, i.e.
    the start of the backward interval — the forward horizon for forward
    cases); ``x`` defaults to the origin.  With ``include_timing`` false
    (the default) the wall_seconds column is written as 0.0 so tables are
    reproducible byte-for-byte; pass true to record real timings.
    """
    canonical, tmap = to_canonical(case.problem)
    s = 0.0 if t is None else tmap(t)
    if x is None:
        x = np.zeros(canonical.dimension)
    t_own = tmap.inverse(s)
    ref_value, ref_gradient = case.exact(t_own, np.asarray(x, dtype=float))
    rows: list[ConvergenceRow] = []
    for n, base in schedule:
        config = MlpConfig(
            depth=n,
            base=base,
            time_cdf_exponent=time_cdf_exponent,
            root_seed=seed,
            replications=replications,
        )
        started = time.perf_counter()
        estimates = replicate(canonical, config, s, x, workers=workers,
                              budget=budget)
        elapsed = time.perf_counter() - started
        report = rmse(estimates, ref_value, ref_gradient)
        rows.append(ConvergenceRow(
            case=case.name,
            n=n,
            base=base,
            replications=replications,
            rmse_value=report.rmse_value,
            rmse_grad_max=report.rmse_gradient_max,
            combined_error=report.combined,
            error_bound=_row_error_bound(
                case, canonical, n, base, s, time_cdf_exponent),
            draws=estimates[0].draws,
            wall_seconds=elapsed if include_timing else 0.0,
        ))
    return rows


def write_csv(rows: Sequence[ConvergenceRow], path: str) -> None:
    """Write rows under the fixed schema; floats via repr for stability."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv())


def combined_error_ucl(
    estimates: Sequence[FieldEstimate],
    reference_value: float,
    reference_gradient: np.ndarray,
    z: float = 1.645,
) -> float:
    """Upper confidence limit (default one-sided 95%) of the combined error.

    The combined error is sqrt(MSE_value + max_i MSE_gradient_i); the UCL
    applies a normal-approximation upper limit to the mean of the summed
    squared errors at the worst gradient coordinate.
    """
    if len(estimates) < 2:
        raise EmptySample("confidence limit needs at least two estimates")
    ref_g = np.asarray(reference_gradient, dtype=float)
    values = np.array([est.value for est in estimates])
    grads = np.stack([est.gradient for est in estimates])
    sq = (values - reference_value) ** 2
    gsq = (grads - ref_g[None, :]) ** 2
    worst = int(np.argmax(gsq.mean(axis=0)))
    w = sq + gsq[:, worst]
    ucl = w.mean() + z * w.std(ddof=1) / math.sqrt(len(w))
    return math.sqrt(max(ucl, 0.0))


# ---------------------------------------------------------------------------
# Feynman-Kac unbiasedness ladder
# ---------------------------------------------------------------------------


def unbiasedness_gap(
    depth: int,
    replications: int,
    sim_samples: int,
    seed: int = 0,
    time_cdf_exponent: float = 0.5,
    dimension: int = 1,
    base: int = 2,
) -> dict:
    """Engine mean of U_n versus an independently simulated expectation.

    The depth-n estimator's mean must match

        E[g(x + W) (1, W / (T - t))]
        + E[(1/rho(R)) f(R, xi_R, U_{n-1}(R, xi_R)) (1, W_R / (R - t))]

    where R has density rho proportional to the time-fraction law and the
    U_{n-1} factor is itself an (independent) estimator — the tower property
    makes one inner sample per outer draw sufficient.  The right-hand side
    is simulated with an unrelated generator (numpy's) so only the
    expectation, not the stream mechanics, is shared with the engine.

    Returns a dict with the two mean vectors, per-coordinate gaps, the
    combined standard errors, and ``passed`` (all gaps within 4 sigma).
    """
    case = builtin_case("grad-dependent-sine", dimension=dimension)
    canonical, _ = to_canonical(case.problem)
    d = canonical.dimension
    T = canonical.horizon
    t = 0.0
    x = np.full(d, 1.0 / math.sqrt(d))
    e = time_cdf_exponent
    tau = T - t

    # Left side: engine replications.
    config = MlpConfig(depth=depth, base=base, time_cdf_exponent=e,
                       root_seed=seed, replications=replications)
    estimates = replicate(canonical, config, t, x)
    lhs = np.stack([est.as_vector() for est in estimates])
    lhs_mean = lhs.mean(axis=0)
    lhs_se = lhs.std(axis=0, ddof=1) / math.sqrt(len(estimates))

    # Right side: direct simulation of the one-step expectation.
    rng = np.random.default_rng(seed + 987_654_321)
    g = canonical.terminal_data
    f = canonical.nonlinearity

    zg = rng.standard_normal((sim_samples, d))
    gv = g(x[None, :] + math.sqrt(tau) * zg)
    g_terms = np.empty((sim_samples, 1 + d))
    g_terms[:, 0] = gv
    g_terms[:, 1:] = gv[:, None] * zg / math.sqrt(tau)

    u = rng.uniform(size=sim_samples)
    r = u ** (1.0 / e)
    zf = rng.standard_normal((sim_samples, d))
    s_times = t + tau * r
    root = np.sqrt(tau * r)
    xi = x[None, :] + root[:, None] * zf
    if depth <= 1:
        field = np.zeros((sim_samples, 1 + d))
    else:
        field = np.empty((sim_samples, 1 + d))
        sub_config = MlpConfig(depth=depth - 1, base=base,
                               time_cdf_exponent=e,
                               root_seed=seed + 1_234_567)
        for k in range(sim_samples):
            field[k] = evaluate(
                canonical, sub_config, s_times[k], xi[k], theta=(k,)
            ).as_vector()
    fv = f(s_times, xi, field[:, 0], field[:, 1:])
    weight = tau * r ** (1.0 - e) / e
    f_terms = np.empty((sim_samples, 1 + d))
    f_terms[:, 0] = weight * fv
    f_terms[:, 1:] = (weight * fv / root)[:, None] * zf

    rhs_mean = g_terms.mean(axis=0) + f_terms.mean(axis=0)
    rhs_se = np.sqrt(
        g_terms.var(axis=0, ddof=1) / sim_samples
        + f_terms.var(axis=0, ddof=1) / sim_samples
    )
    sigma = np.sqrt(lhs_se**2 + rhs_se**2)
    gaps = np.abs(lhs_mean - rhs_mean)
    return {
        "depth": depth,
        "lhs_mean": lhs_mean,
        "rhs_mean": rhs_mean,
        "gaps": gaps,
        "sigma": sigma,
        "passed": bool(np.all(gaps <= 4.0 * sigma)),
    }


# ---------------------------------------------------------------------------
# Integral identity grid
# ---------------------------------------------------------------------------

_IDENTITY_GRID = tuple(
    (j, alpha, beta, gamma)
    for j in (1, 2, 3)
    for alpha in (0.3, 0.5, 0.7)
    for (beta, gamma) in ((1.0, 1.0), (0.5, 1.0), (1.5, 2.0))
)


def verify_integral_identities(
    horizon: float = 1.0, rel_tol: float = 1e-6
) -> tuple[list[dict], bool]:
    """Closed form vs quadrature on the standard grid, plus bound ordering.

    Returns (rows, all_ok); each row records the grid point, both integral
    values, the relative gap, and — where the bounds' hypotheses admit the
    point — the lower/upper bounds with their ordering status.
    """
    rows: list[dict] = []
    all_ok = True
    for j, alpha, beta, gamma in _IDENTITY_GRID:
        spec = IteratedIntegralSpec(
            j=j, alpha=alpha, beta=beta, gamma=gamma, horizon=horizon)
        closed = iterated_integral_closed(spec)
        quad = iterated_integral_quadrature(spec, rel_tol=rel_tol)
        gap = abs(closed - quad) / abs(closed)
        ok = gap <= rel_tol
        row = {
            "j": j, "alpha": alpha, "beta": beta, "gamma": gamma,
            "closed": closed, "quadrature": quad, "rel_gap": gap, "ok": ok,
        }
        # Upper bound needs alpha*gamma <= beta <= alpha*gamma + 1.
        if alpha * gamma <= beta <= alpha * gamma + 1.0:
            upper = iterated_integral_upper_bound(spec)
            row["upper"] = upper
            ok = ok and closed <= upper * (1.0 + 1e-12)
        if beta == 1.0 and gamma == 1.0:
            lower = iterated_integral_lower_bound(j - 1, horizon)
            row["lower"] = lower
            ok = ok and lower <= closed * (1.0 + 1e-12)
        row["ok"] = ok
        all_ok = all_ok and ok
        rows.append(row)
    return rows, all_ok


# ---------------------------------------------------------------------------
# Test battery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    """One battery entry: a named check, its verdict, and a measurement."""

    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.detail}"


@dataclass(frozen=True)
class BatteryReport:
    """Structured result of :func:`run_test_battery`."""

    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def _check_sampler_laws(seed: int, fast: bool, e_diag: float) -> CheckResult:
    n_ks = 20_000 if fast else 100_000
    n_mom = 100_000 if fast else 1_000_000
    worst_ks = 0.0
    critical = KS_CRITICAL_1PCT / math.sqrt(n_ks)
    for idx, e in enumerate((0.3, 0.5, 0.7)):
        stream = derive_stream(StreamKey(seed, (90, idx)))
        draws = stream.uniforms(n_ks) ** (1.0 / e)
        stat = kstest(draws, lambda b, _e=e: np.asarray(b) ** _e).statistic
        worst_ks = max(worst_ks, float(stat))
    ks_ok = worst_ks < critical

    diag = single_step_second_moment(1.0, e_diag, 1, n_samples=n_mom,
                                     root_seed=seed)
    if diag.heavy_tail:
        return CheckResult(
            "sampler-laws", False,
            f"variance diagnostic flags heavy tail at e={e_diag} "
            f"(reliable band is [0.2, 0.8])")
    got = float(diag.gradient_moments[0])
    # Per gradient coordinate, E[U^4] = 3 T^2 / (e^3 (2 - 3e)) for e < 2/3,
    # giving the exact standard error of the empirical second moment; above
    # 2/3 the fourth moment diverges and only a loose band is meaningful.
    if e_diag < 2.0 / 3.0:
        fourth = 3.0 / (e_diag**3 * (2.0 - 3.0 * e_diag))
        sigma = math.sqrt(fourth - diag.expected_gradient**2) / math.sqrt(n_mom)
        width = 3.0 * sigma
    else:
        width = 4.0 * diag.expected_gradient
    mom_ok = abs(got - diag.expected_gradient) <= width
    detail = (
        f"KS max {worst_ks:.5f} (critical {critical:.5f}); "
        f"second moment {got:.4f} vs {diag.expected_gradient:.4f} "
        f"+- {width:.4f}")
    return CheckResult("sampler-laws", ks_ok and mom_ok, detail)


def _check_integral_identities() -> CheckResult:
    rows, ok = verify_integral_identities()
    worst = max(row["rel_gap"] for row in rows)
    return CheckResult(
        "integral-identities", ok,
        f"{len(rows)} grid points, worst relative gap {worst:.3e} "
        f"(gate 1e-06), bounds ordered")


def _check_unbiasedness_ladder(
    seed: int, fast: bool, time_cdf_exponent: float
) -> CheckResult:
    reps = 8_000 if fast else 30_000
    sims = 16_000 if fast else 60_000
    details = []
    ok = True
    for depth in (1, 2):
        result = unbiasedness_gap(
            depth, replications=reps, sim_samples=sims, seed=seed,
            time_cdf_exponent=0.5)
        ok = ok and result["passed"]
        worst = float(np.max(result["gaps"] / result["sigma"]))
        details.append(f"n={depth} worst gap {worst:.2f} sigma")
    return CheckResult(
        "unbiasedness-ladder", ok, "; ".join(details) + " (gate 4 sigma)")


def _check_cost_ledger(seed: int) -> CheckResult:
    mismatches = 0
    cells = 0
    for d in (1, 3):
        case = builtin_case("grad-dependent-sine", dimension=d)
        canonical, _ = to_canonical(case.problem)
        x = np.zeros(d)
        for n in (1, 2, 3):
            for base in (1, 2, 3):
                config = MlpConfig(depth=n, base=base, root_seed=seed)
                est = evaluate(canonical, config, 0.0, x)
                cells += 1
                if est.draws != cost_rv(d, n, base):
                    mismatches += 1
                if cost_rv(d, n, base) > cost_bound_closed(d, n, base):
                    mismatches += 1
    return CheckResult(
        "cost-ledger", mismatches == 0,
        f"{cells} grid cells, {mismatches} mismatches "
        f"(ledger == recursion, recursion <= d(5M)^n)")


def _check_convergence_trend(seed: int, fast: bool) -> CheckResult:
    # The M = n coupling of depth and base is what makes the error shrink;
    # at frozen M each added level contributes unaveraged variance and the
    # error can grow (matching the M^(-n/2) (2C)^n shape of the bound).
    reps = 60 if fast else 100
    n_max = 3 if fast else 4
    dimension = 2
    slack = 1.5
    details = []
    ok = True
    x = np.full(dimension, 1.0 / math.sqrt(dimension))
    for name in BUILTIN_CASES:
        case = builtin_case(name, dimension=dimension)
        schedule = [(n, n) for n in range(1, n_max + 1)]
        rows = run_convergence(case, schedule, replications=reps, seed=seed,
                               x=x)
        errors = [row.combined_error for row in rows]
        case_ok = all(
            errors[k + 1] <= slack * errors[k] + 1e-15
            for k in range(len(errors) - 1)
        )
        ok = ok and case_ok
        worst = max(
            (errors[k + 1] / errors[k]) if errors[k] > 0 else 1.0
            for k in range(len(errors) - 1)
        )
        details.append(f"{name} worst ratio {worst:.3f}")
    return CheckResult(
        "convergence-trend", ok,
        "; ".join(details) + f" (gate {slack})")


def run_test_battery(
    seed: int = 0,
    fast: bool = False,
    time_cdf_exponent: float = 0.5,
) -> BatteryReport:
    """Aggregate statistical and structural checks of the whole stack.

    ``fast`` trims sample counts for quick smoke runs. ``time_cdf_exponent``
    is a hook for the sampler's variance diagnostic: values outside the
    reliable band make that check fail with a heavy-tail flag.  Failures
    are report entries, never exceptions.
    """
    checks = (
        _check_sampler_laws(seed, fast, time_cdf_exponent),
        _check_integral_identities(),
        _check_unbiasedness_ladder(seed, fast, time_cdf_exponent),
        _check_cost_ledger(seed),
        _check_convergence_trend(seed, fast),
    )
    return BatteryReport(checks=checks)
