"""The adaptive-momentum zeroth-order optimizer and six baselines, plus the
query-budgeted run loop.

The adaptive method keeps exponential moving averages

    m <- beta1*m + (1-beta1)*g,   v <- beta2*v + (1-beta2)*g^2,
    v_hat <- max(v_hat, v)        (running max, optional)

and steps x+ = proj_{X, sqrt(v_hat)}(x - alpha_t * m / sqrt(v_hat)), where the
projection minimizes the diagonally weighted distance.  Limiting cases recover
plain (projected) SGD and sign-SGD; see the reduction tests.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, NumericError
from .estimators import (EstimatorConfig, averaged_with_indices, clamp_mu,
                         coordinate_estimate, nes_antithetic_estimate,
                         query_cost)
from .geometry import DiagonalMetric, Unconstrained, mahalanobis_measure
from .metrics import RunResult, Trace, TraceRecord
from .numkit import RngStream, check_finite

log = logging.getLogger("zoopt")

ALGORITHMS = ("zo-adamm", "zo-sgd", "zo-signsgd", "zo-scd",
              "zo-psgd", "zo-smd", "zo-nes")

_UNCONSTRAINED_ONLY = ("zo-sgd", "zo-signsgd", "zo-scd")


@dataclass
class AdaMMState:
    m: np.ndarray
    v: np.ndarray
    v_hat: np.ndarray
    t: int = 0

    @classmethod
    def fresh(cls, d, v0, vhat0):
        return cls(np.zeros(d), np.full(d, float(v0)), np.full(d, float(vhat0)))


@dataclass
class OptConfig:
    algorithm: str = "zo-adamm"
    beta1: float = 0.9
    beta2: float = 0.3
    alpha: float = 0.1
    alpha_schedule: str = "inverse-sqrt"   # constant | inverse-sqrt
    mu_schedule: str = "inverse-sqrt-Td"   # constant | inverse-sqrt-Td | inverse-dt
    v0: float = 1e-5
    vhat0: float = 1e-5
    use_vhat_max: bool = True
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    seed: int = 0
    beta1_decay: bool = False              # beta_{1,t} = beta1/t (convex-regret regime)
    euclidean_projection_override: bool = False  # divergence reproducer; logs a warning

    def gamma(self):
        """Momentum/second-moment ratio; the convergence regime needs < 1."""
        return self.beta1 / self.beta2 if self.beta2 > 0 else math.inf

    def echo(self):
        d = {
            "algorithm": self.algorithm, "beta1": self.beta1, "beta2": self.beta2,
            "alpha": self.alpha, "alpha_schedule": self.alpha_schedule,
            "mu": self.estimator.mu, "mu_schedule": self.mu_schedule,
            "v0": self.v0, "vhat0": self.vhat0, "use_vhat_max": self.use_vhat_max,
            "b": self.estimator.b, "q": self.estimator.q,
            "estimator_kind": self.estimator.kind,
            "directions": self.estimator.directions,
            "seed": self.seed, "beta1_decay": self.beta1_decay,
            "euclidean_projection_override": self.euclidean_projection_override,
        }
        if self.beta2 > 0:
            d["gamma"] = self.gamma()
        return d


def step_size(cfg, t):
    if cfg.alpha_schedule == "constant":
        return cfg.alpha
    if cfg.alpha_schedule == "inverse-sqrt":
        return cfg.alpha / math.sqrt(t)
    raise ConfigError(f"unknown alpha_schedule {cfg.alpha_schedule!r}")


def smoothing_at(cfg, t, d, planned_iters):
    if cfg.mu_schedule == "constant":
        return clamp_mu(cfg.estimator.mu)
    if cfg.mu_schedule == "inverse-sqrt-Td":
        return clamp_mu(1.0 / math.sqrt(max(planned_iters, 1) * d))
    if cfg.mu_schedule == "inverse-dt":
        return clamp_mu(cfg.estimator.mu / (d * t))
    raise ConfigError(f"unknown mu_schedule {cfg.mu_schedule!r}")


def adamm_direction(state):
    """Descent direction m / sqrt(v_hat), with the 0/0 -> 0 convention so a
    zero gradient history stays put (this is what makes the sign limit exact)."""
    h = np.sqrt(state.v_hat)
    return np.divide(state.m, h, out=np.zeros_like(state.m), where=h > 0)


def zo_adamm_step(state, x, g_hat, cfg, cset):
    """One adaptive-momentum update; returns (new state, new iterate)."""
    if not np.all(np.isfinite(g_hat)):
        raise NumericError("non-finite gradient estimate", x=x, iteration=state.t + 1)
    t = state.t + 1
    b1 = cfg.beta1 / t if cfg.beta1_decay else cfg.beta1
    m = b1 * state.m + (1.0 - b1) * g_hat
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * (g_hat * g_hat)
    v_hat = np.maximum(state.v_hat, v) if cfg.use_vhat_max else v
    new_state = AdaMMState(m, v, v_hat, t)
    alpha_t = step_size(cfg, t)
    y = x - alpha_t * adamm_direction(new_state)
    if cfg.euclidean_projection_override or isinstance(cset, Unconstrained):
        x_new = cset.project(y)
    else:
        h = np.sqrt(v_hat)
        if np.any(h <= 0):
            raise ArithmeticError(
                "weighted projection needs a positive metric; set vhat0 > 0 "
                "or enable use_vhat_max")
        x_new = cset.project_metric(y, h)
    return new_state, x_new


def zo_sgd_step(x, g_hat, alpha_t, cset, projected):
    """x - alpha_t * g_hat, Euclidean-projected when ``projected``."""
    if not projected and not isinstance(cset, Unconstrained):
        raise ConfigError("unprojected step on a constrained set; use the "
                          "projected variant")
    y = x - alpha_t * g_hat
    return cset.project(y) if projected else y


def zo_signsgd_step(x, g_hat, alpha_t, cset, projected):
    """Sign step x - alpha_t * sign(g_hat) (sign(0) = 0), optionally projected."""
    if not projected and not isinstance(cset, Unconstrained):
        raise ConfigError("unprojected step on a constrained set; use the "
                          "projected variant")
    y = x - alpha_t * np.sign(g_hat)
    return cset.project(y) if projected else y


def zo_smd_step(x, g_hat, alpha_t, cset):
    """Mirror-descent step with the half-squared-l2 mirror map: identical
    mechanics to the projected step (the method differs in its schedules)."""
    return cset.project(x - alpha_t * g_hat)


def zo_scd_step(x, sparse_estimate, alpha_t):
    """Coordinate step; coordinates with a zero estimate stay bitwise unchanged."""
    return x - alpha_t * sparse_estimate


def validate_config(cfg, problem, query_budget, max_iters=None):
    """Surface configuration problems before the first iteration."""
    if cfg.algorithm not in ALGORITHMS:
        raise ConfigError(f"optimizer.algorithm: unknown algorithm {cfg.algorithm!r}")
    if not 0.0 <= cfg.beta1 <= 1.0 or not 0.0 <= cfg.beta2 <= 1.0:
        raise ConfigError("optimizer.beta1/beta2 must lie in [0, 1]")
    if cfg.alpha <= 0:
        raise ConfigError("optimizer.alpha must be positive")
    cfg.estimator.validate()

    if cfg.algorithm == "zo-adamm" and not cfg.euclidean_projection_override:
        if cfg.vhat0 <= 0 and cfg.use_vhat_max:
            raise ConfigError("optimizer.vhat0 must be positive for the "
                              "weighted projection")
    if cfg.algorithm in _UNCONSTRAINED_ONLY and not isinstance(problem.constraint,
                                                               Unconstrained):
        raise ConfigError(f"optimizer.algorithm: {cfg.algorithm} handles "
                          "unconstrained problems only")
    if cfg.algorithm == "zo-smd":
        if cfg.alpha_schedule != "inverse-sqrt" or cfg.mu_schedule != "inverse-dt":
            raise ConfigError("optimizer.alpha_schedule/mu_schedule: zo-smd uses "
                              "alpha/sqrt(t) and mu0/(d*t)")
    if cfg.algorithm == "zo-scd" and cfg.estimator.kind not in ("coordinate", "analytic"):
        raise ConfigError("optimizer.algorithm: zo-scd requires the coordinate "
                          "estimator")
    if cfg.algorithm == "zo-nes" and cfg.estimator.kind not in ("nes-antithetic",
                                                                "analytic"):
        raise ConfigError("optimizer.algorithm: zo-nes requires the antithetic "
                          "Gaussian estimator")
    if cfg.estimator.kind == "analytic" and problem.metadata.gradient is None:
        raise ConfigError("estimator.kind: analytic estimator needs a problem "
                          "with a recorded gradient")

    cost = query_cost(cfg.estimator, problem.objective.dim)
    if cost == 0 and max_iters is None:
        raise ConfigError("run.max_iters: required with a query-free estimator")
    if cost > 0 and query_budget < cost:
        raise ConfigError(f"run.query_budget: budget {query_budget} is below one "
                          f"iteration's cost {cost}")
    if cfg.euclidean_projection_override:
        log.warning("Euclidean projection override is active: this configuration "
                    "reproduces the non-convergence counterexample")
    return cost


def default_config(algorithm, **overrides):
    """OptConfig preset for each method (estimator kind and schedules wired up)."""
    est = EstimatorConfig()
    cfg = OptConfig(algorithm=algorithm, estimator=est)
    if algorithm == "zo-scd":
        est.kind = "coordinate"
    elif algorithm == "zo-nes":
        est.kind = "nes-antithetic"
    if algorithm == "zo-smd":
        cfg.mu_schedule = "inverse-dt"
        cfg.estimator.mu = 1.0
    est_over = {k: overrides.pop(k) for k in ("mu", "b", "q", "kind", "directions")
                if k in overrides}
    cfg = replace(cfg, **overrides)
    cfg.estimator = replace(cfg.estimator, **est_over)
    return cfg


def _approx_full_gradient(problem, x, t, cfg, q=200, mu=1e-3):
    """Metric-side gradient estimate (uncounted queries) for problems without a
    recorded analytic gradient: full-batch two-point average with q directions
    on an rng stream derived from (seed, t) so the run's stream is untouched."""
    from .numkit import sample_unit_sphere
    obj = problem.objective
    rng = RngStream(cfg.seed * 1_000_003 + 7_919 * t + 1)
    n = obj.n_samples or 1
    d = obj.dim
    base = [obj.peek(x, j) for j in range(n)]
    g = np.zeros(d)
    for _ in range(q):
        u = sample_unit_sphere(d, rng)
        coeff = 0.0
        for j in range(n):
            coeff += obj.peek(x + mu * u, j) - base[j]
        g += coeff * u
    return g * (d / mu) / (n * q)


def _reference_gradient(problem, x, t, cfg, mode):
    if mode == "off":
        return None, False
    if problem.metadata.gradient is not None:
        return problem.metadata.gradient(x), False
    if mode == "approx":
        return _approx_full_gradient(problem, x, t, cfg), True
    return None, False


def run_optimizer(problem, cfg, query_budget, max_iters=None, stride=None,
                  record_measure="auto", keep_iterates=False):
    """Run one optimizer on one problem until the next iteration would exceed
    the query budget (or ``max_iters``).

    Deterministic given (cfg.seed, config): the run owns a fresh counter-based
    stream and the oracle's counter starts at zero.  Numeric blow-ups abort the
    run with the partial trace retained and flagged.
    """
    if record_measure not in ("auto", "approx", "off"):
        raise ConfigError(f"run.record_measure: unknown mode {record_measure!r}")
    obj = problem.objective
    cset = problem.constraint
    d = obj.dim
    cost = validate_config(cfg, problem, query_budget, max_iters)
    rng = RngStream(cfg.seed)

    planned = max_iters if cost == 0 else query_budget // cost
    if max_iters is not None and cost > 0:
        planned = min(planned, max_iters)
    if stride is None or stride < 1:
        stride = 1 if planned <= 2000 else 10

    start_queries = obj.queries
    t0 = time.perf_counter()
    x = np.array(problem.x0, dtype=np.float64)
    state = AdaMMState.fresh(d, cfg.v0, cfg.vhat0)
    trace = Trace(planned_iters=planned, stride=stride)
    if keep_iterates:
        trace.iterates = [x.copy()]
    track_regret = problem.comparator is not None
    measure_approx = False

    def used():
        return obj.queries - start_queries

    def make_record(it, alpha_t):
        grad, approx = _reference_gradient(problem, x, it, cfg, record_measure)
        rec = TraceRecord(iter=it, queries=used(), loss=obj.full_loss(x))
        if grad is not None:
            if cfg.algorithm == "zo-adamm" and it > 0:
                h = np.sqrt(np.maximum(state.v_hat, 1e-300))
            else:
                h = np.ones(d)
            rec.measure_m = mahalanobis_measure(cset, DiagonalMetric(h), x, grad,
                                                alpha_t if it > 0 else cfg.alpha)
            rec.grad_norm_sq = float(np.dot(grad, grad))
        if problem.distortion_fn is not None:
            rec.distortion = problem.distortion_fn(x)
        if problem.success_count_fn is not None:
            rec.success = problem.success_count_fn(x) == problem.n_images
        return rec, approx

    rec, _ = make_record(0, cfg.alpha)
    trace.records.append(rec)

    t = 0
    try:
        while True:
            if max_iters is not None and t >= max_iters:
                break
            if cost > 0 and used() + cost > query_budget:
                break
            t += 1
            alpha_t = step_size(cfg, t)
            mu_t = smoothing_at(cfg, t, d, planned)
            est = cfg.estimator

            if est.kind == "analytic":
                indices = []
                g_hat = problem.metadata.gradient(x)
            elif est.kind == "uniform-two-point":
                indices = obj.sample_minibatch(est.b, rng)
                g_hat = averaged_with_indices(obj, x, mu_t, indices, est.q, rng,
                                              est.directions)
            elif est.kind == "coordinate":
                indices = obj.sample_minibatch(1, rng)
                coords = rng.choice_without_replacement(d, min(est.q, d))
                g_hat = coordinate_estimate(obj, x, indices[0], mu_t, coords)
            else:  # nes-antithetic
                indices = obj.sample_minibatch(1, rng)
                g_hat = nes_antithetic_estimate(obj, x, indices[0], mu_t, est.q, rng)

            if track_regret:
                if indices:
                    ft_x = float(np.mean([obj.peek(x, j) for j in indices]))
                    ft_c = float(np.mean([obj.peek(problem.comparator, j)
                                          for j in indices]))
                else:
                    ft_x = obj.full_loss(x)
                    ft_c = obj.full_loss(problem.comparator)
                trace.sampled_losses.append(ft_x)
                trace.comparator_losses.append(ft_c)

            if cfg.algorithm == "zo-adamm":
                state, x = zo_adamm_step(state, x, g_hat, cfg, cset)
            elif cfg.algorithm == "zo-sgd":
                x = zo_sgd_step(x, g_hat, alpha_t, cset, projected=False)
            elif cfg.algorithm == "zo-psgd":
                x = zo_sgd_step(x, g_hat, alpha_t, cset, projected=True)
            elif cfg.algorithm == "zo-signsgd":
                x = zo_signsgd_step(x, g_hat, alpha_t, cset, projected=False)
            elif cfg.algorithm == "zo-nes":
                x = zo_signsgd_step(x, g_hat, alpha_t, cset, projected=True)
            elif cfg.algorithm == "zo-smd":
                x = zo_smd_step(x, g_hat, alpha_t, cset)
            else:  # zo-scd
                x = zo_scd_step(x, g_hat, alpha_t)
            check_finite(x, "iterate")

            if keep_iterates:
                trace.iterates.append(x.copy())
            if t % stride == 0 or t == planned:
                rec, approx = make_record(t, alpha_t)
                measure_approx = measure_approx or approx
                trace.records.append(rec)
    except NumericError as err:
        trace.aborted = str(err)

    if trace.records[-1].iter != t and trace.aborted is None:
        rec, approx = make_record(t, step_size(cfg, max(t, 1)))
        measure_approx = measure_approx or approx
        trace.records.append(rec)

    trace.final_x = x
    trace.total_queries = used()
    random_iter = 1 + int(rng.uniform() * t) if t > 0 else 0
    return RunResult(trace=trace, final_x=x, random_iter=random_iter,
                     config=cfg.echo(), seconds=time.perf_counter() - t0,
                     measure_approx=measure_approx)
