"""Zeroth-order gradient estimators.

All estimators return an estimate of the gradient from function values only and
consume a fixed, documented number of oracle queries:

* two-point forward difference along a uniform sphere direction -- 2 queries
* minibatch/multi-direction average of the two-point estimator -- b*(q+1)
  queries (the base value f(x; xi_j) is evaluated once per sample and reused
  across the q directions)
* coordinate-wise central differences -- 2*len(coords) queries
* antithetic Gaussian (NES-style) differences -- 2*q queries
"""

from dataclasses import dataclass

from .numkit import as_vector, check_finite, sample_unit_sphere

import numpy as np

MU_FLOOR = 1e-8  # below this the forward difference drowns in double-precision noise


def clamp_mu(mu, floor=MU_FLOOR):
    if mu <= 0:
        raise ValueError(f"smoothing parameter must be positive, got {mu}")
    return max(float(mu), floor)


@dataclass
class EstimatorConfig:
    mu: float = 0.01
    b: int = 1
    q: int = 10
    kind: str = "uniform-two-point"  # uniform-two-point | coordinate | nes-antithetic | analytic
    directions: str = "sphere"       # "gaussian" is an ablation switch for the two-point path

    def validate(self):
        if self.mu <= 0:
            raise ValueError("estimator.mu must be positive")
        if self.b < 1 or self.q < 1:
            raise ValueError("estimator.b and estimator.q must be >= 1")
        if self.kind not in ("uniform-two-point", "coordinate", "nes-antithetic", "analytic"):
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.directions not in ("sphere", "gaussian"):
            raise ValueError(f"unknown direction sampler {self.directions!r}")
        return self


def _direction(d, rng, directions):
    if directions == "sphere":
        return sample_unit_sphere(d, rng)
    return rng.normal(d)


def _scale(d, mu, directions):
    # the sphere estimator carries the dimension factor d/mu; the Gaussian
    # variant is already unbiased with 1/mu since E[uu'] = I
    return d / mu if directions == "sphere" else 1.0 / mu


def two_point_uniform(obj, x, xi, mu, rng, directions="sphere"):
    """(d/mu) [f(x + mu*u; xi) - f(x; xi)] u with u uniform on the sphere."""
    mu = clamp_mu(mu)
    x = as_vector(x, obj.dim)
    u = _direction(obj.dim, rng, directions)
    base = obj.evaluate(x, xi)
    fwd = obj.evaluate(x + mu * u, xi)
    g = (_scale(obj.dim, mu, directions) * (fwd - base)) * u
    return check_finite(g, "two-point gradient estimate")


def averaged_with_indices(obj, x, mu, indices, q, rng, directions="sphere"):
    """Core of the averaged estimator for an already-drawn minibatch.

    Shares the q directions across the samples and reuses each base value
    f(x; xi_j): exactly len(indices)*(q+1) queries.
    """
    mu = clamp_mu(mu)
    if not indices or q < 1:
        raise ValueError("need a non-empty minibatch and q >= 1")
    x = as_vector(x, obj.dim)
    base = [obj.evaluate(x, j) for j in indices]
    g = np.zeros(obj.dim)
    # scaling applied per direction so the b = q = 1 case reproduces the plain
    # two-point estimate bit for bit
    scale = _scale(obj.dim, mu, directions) / (len(indices) * q)
    for _ in range(q):
        u = _direction(obj.dim, rng, directions)
        coeff = 0.0
        for k, j in enumerate(indices):
            coeff += obj.evaluate(x + mu * u, j) - base[k]
        g += (scale * coeff) * u
    return check_finite(g, "averaged gradient estimate")


def averaged_estimator(obj, x, mu, b, q, rng, directions="sphere"):
    """Minibatch/multi-direction average of the two-point estimator.

    Draws its own minibatch of b samples (uniform with replacement), then
    averages over q shared directions: b*(q+1) queries total.
    """
    if b < 1:
        raise ValueError("need b >= 1")
    idx = obj.sample_minibatch(b, rng)
    return averaged_with_indices(obj, x, mu, idx, q, rng, directions)


def coordinate_estimate(obj, x, xi, mu, coords):
    """Central differences [f(x+mu*e_i) - f(x-mu*e_i)] / (2*mu) on the given
    coordinates; zeros elsewhere.  2*len(coords) queries."""
    mu = clamp_mu(mu)
    x = as_vector(x, obj.dim)
    coords = [int(i) for i in coords]
    if not coords:
        raise ValueError("coords must be non-empty")
    if len(set(coords)) != len(coords):
        raise ValueError("duplicate coordinate indices")
    if min(coords) < 0 or max(coords) >= obj.dim:
        raise ValueError("coordinate index out of range")
    g = np.zeros(obj.dim)
    for i in coords:
        step = np.zeros(obj.dim)
        step[i] = mu
        g[i] = (obj.evaluate(x + step, xi) - obj.evaluate(x - step, xi)) / (2.0 * mu)
    return check_finite(g, "coordinate gradient estimate")


def nes_antithetic_estimate(obj, x, xi, mu, q, rng):
    """(1/(2*q*mu)) sum_i [f(x+mu*u_i) - f(x-mu*u_i)] u_i with standard Gaussian
    directions.  Antithetic by construction: flipping any u_i leaves the
    estimate unchanged.  2*q queries."""
    mu = clamp_mu(mu)
    if q < 1:
        raise ValueError("need q >= 1")
    x = as_vector(x, obj.dim)
    g = np.zeros(obj.dim)
    for _ in range(q):
        u = rng.normal(obj.dim)
        g += (obj.evaluate(x + mu * u, xi) - obj.evaluate(x - mu * u, xi)) * u
    g /= 2.0 * q * mu
    return check_finite(g, "antithetic gradient estimate")


def query_cost(cfg: EstimatorConfig, dim):
    """Oracle queries one estimator call consumes under config ``cfg``."""
    if cfg.kind == "uniform-two-point":
        return cfg.b * (cfg.q + 1)
    if cfg.kind == "coordinate":
        return 2 * min(cfg.q, dim)
    if cfg.kind == "nes-antithetic":
        return 2 * cfg.q
    if cfg.kind == "analytic":
        return 0
    raise ValueError(f"unknown estimator kind {cfg.kind!r}")
