"""Black-box stochastic objective with query accounting.

Optimizers see a problem only through :meth:`StochasticObjective.evaluate`,
which charges exactly one query.  Metric-side evaluations (``peek``,
``full_loss``) bypass the counter so that reported query complexity counts
optimization work only.
"""

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NumericError
from .numkit import as_vector


class StochasticObjective:
    """f(x; xi) behind a value-only oracle.

    ``n_samples=None`` declares a deterministic objective (singleton sample
    index 0); otherwise the sample space is the finite index set
    ``{0, ..., n_samples-1}``.
    """

    def __init__(self, dim, fn, n_samples=None, name=""):
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {dim}")
        if n_samples is not None and n_samples < 1:
            raise ValueError(f"sample count must be >= 1, got {n_samples}")
        self.dim = int(dim)
        self.n_samples = n_samples
        self.name = name
        self._fn = fn
        self._queries = 0
        self._lock = threading.Lock()

    @property
    def queries(self):
        return self._queries

    @property
    def deterministic(self):
        return self.n_samples is None

    def _check_sample(self, xi):
        hi = 1 if self.n_samples is None else self.n_samples
        if not 0 <= xi < hi:
            raise ValueError(f"sample index {xi} out of range [0, {hi})")

    def _call(self, x, xi):
        x = as_vector(x, self.dim)
        self._check_sample(xi)
        val = float(self._fn(x, int(xi)))
        if not math.isfinite(val):
            raise NumericError("objective returned a non-finite value", x=x)
        return val

    def evaluate(self, x, xi=0):
        """f(x; xi); charges one query."""
        val = self._call(x, xi)
        with self._lock:
            self._queries += 1
        return val

    def peek(self, x, xi=0):
        """f(x; xi) without touching the query counter (metric side only)."""
        return self._call(x, xi)

    def full_loss(self, x):
        """Exact average of f(x; xi) over the whole sample space; uncounted."""
        if self.n_samples is None:
            return self.peek(x, 0)
        return float(np.mean([self.peek(x, i) for i in range(self.n_samples)]))

    def sample_minibatch(self, b, rng):
        """``b`` sample indices drawn uniformly with replacement.

        Deterministic objectives return [0]*b without consuming randomness.
        """
        if b < 1:
            raise ValueError(f"minibatch size must be >= 1, got {b}")
        if self.n_samples is None:
            return [0] * b
        return [int(i) for i in rng.integers(b, 0, self.n_samples)]


@dataclass
class ProblemMetadata:
    """Known analytic facts about a problem, used by tests and metric code.

    All fields optional; ``gradient`` is the gradient of the full loss and is
    never consulted by the optimizers themselves outside diagnostic modes.
    """

    lip_const: Optional[float] = None          # L_c, Lipschitz constant of f
    grad_lip: Optional[float] = None           # L_g, Lipschitz constant of grad f
    grad_inf_bound: Optional[float] = None     # sup-norm bound on stochastic gradients
    f_star: Optional[float] = None
    gradient: Optional[Callable] = None        # x -> grad of full loss
    sample_gradient: Optional[Callable] = None  # (x, xi) -> grad of f(.; xi)
    extra: dict = field(default_factory=dict)
