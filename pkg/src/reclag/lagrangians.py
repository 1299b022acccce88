"""Memory and feature Lagrangians and their activation functions.

A Lagrangian is a scalar potential whose gradient is the activation
function of the corresponding neuron layer. Three memory variants are
provided:

  AdditiveSigma   L(h) = sum_mu sigma(h_mu)
  LogSumExp       L(h) = (1/beta) log sum_mu exp(beta h_mu)
  RecLag          L(h) = max((1/beta) log((1/gamma) sum_mu exp(beta h_mu)), 0)

RecLag clamps the shifted log-sum-exp potential at zero, so its gradient
carries a hard gate chi(x) = 1 for x >= 0 else 0: the memory layer shuts
off entirely wherever the shifted log-sum-exp is negative. That gate is
what creates a dedicated attractor at the feature-space origin.

All derivatives are hand-coded; there is no autodiff dependency.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .kernels import stable_log_sum_exp, stable_softmax
from .validation import (
    check_interaction_matrix,
    check_positive,
    check_state,
    check_vector,
)


def chi(x):
    """Unit-step gate: 1 for x >= 0, 0 for x < 0 (closed at exactly 0 is open)."""
    return 1.0 if x >= 0.0 else 0.0


@dataclass(frozen=True)
class LogSumExp:
    """Soft-max memory Lagrangian with inverse temperature ``beta``.

    value:      L(h) = (1/beta) log sum_mu exp(beta h_mu)
    activation: f(h) = softmax(beta h)
    """

    beta: float = 1.0

    def __post_init__(self):
        check_positive(self.beta, "beta")

    def value(self, h):
        h = check_vector(h, name="h")
        return stable_log_sum_exp(self.beta * h) / self.beta

    def activation(self, h):
        h = check_vector(h, name="h")
        return stable_softmax(self.beta * h)


@dataclass(frozen=True)
class RecLag:
    """Rectified memory Lagrangian with inverse memory strength ``gamma``.

    value:      L(h) = max((1/beta) log((1/gamma) sum_mu exp(beta h_mu)), 0)
    activation: f(h) = chi(log((1/gamma) sum_mu exp(beta h_mu))) * softmax(beta h)

    The activation is exactly the zero vector when the gate is shut and
    an ordinary softmax (summing to one) when it is open. The origin of
    feature space is guaranteed to attract only when gamma exceeds the
    number of memory neurons; that condition is a property of the pairing
    with an interaction matrix, not of the Lagrangian itself, so it is
    exposed as the predicate :meth:`guarantees_origin_attractor`.
    """

    beta: float
    gamma: float

    def __post_init__(self):
        check_positive(self.beta, "beta")
        check_positive(self.gamma, "gamma")

    def shifted_log_sum_exp(self, h):
        """log((1/gamma) sum_mu exp(beta h_mu)), the gate argument."""
        h = check_vector(h, name="h")
        return stable_log_sum_exp(self.beta * h) - math.log(self.gamma)

    def value(self, h):
        return max(self.shifted_log_sum_exp(h) / self.beta, 0.0)

    def activation(self, h):
        h = check_vector(h, name="h")
        if self.shifted_log_sum_exp(h) < 0.0:
            return np.zeros_like(h)
        return stable_softmax(self.beta * h)

    def guarantees_origin_attractor(self, n_memories):
        """True when gamma > n_memories, the origin-attractor condition."""
        return self.gamma > n_memories


@dataclass(frozen=True)
class AdditiveSigma:
    """Separable memory Lagrangian L(h) = sum_mu sigma(h_mu).

    ``sigma`` defaults to the n-th power x**n (n=2 recovers the classical
    quadratic network). A custom scalar nonlinearity can be supplied as
    an elementwise ``(fn, dfn)`` pair.
    """

    n: int = 2
    fn: Optional[Callable] = None
    dfn: Optional[Callable] = None

    def __post_init__(self):
        if self.fn is None and self.n < 1:
            raise ValueError("power must be >= 1")
        if (self.fn is None) != (self.dfn is None):
            raise ValueError("fn and dfn must be supplied together")

    def sigma(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.fn(x) if self.fn is not None else x ** self.n

    def dsigma(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.dfn is not None:
            return self.dfn(x)
        return self.n * x ** (self.n - 1)

    def value(self, h):
        h = check_vector(h, name="h")
        return float(np.sum(self.sigma(h)))

    def activation(self, h):
        h = check_vector(h, name="h")
        return self.dsigma(h)


@dataclass(frozen=True)
class HalfSquare:
    """Quadratic feature Lagrangian L(v) = (1/2) sum_i v_i**2; g(v) = v."""

    def value(self, v):
        v = check_vector(v, name="v")
        return 0.5 * float(np.dot(v, v))

    def activation(self, v):
        v = check_vector(v, name="v")
        return v.copy()


@dataclass(frozen=True)
class AbsSum:
    """L1 feature Lagrangian L(v) = sum_i |v_i|; g(v) = sgn(v), sgn(0) = 0."""

    def value(self, v):
        v = check_vector(v, name="v")
        return float(np.sum(np.abs(v)))

    def activation(self, v):
        v = check_vector(v, name="v")
        return np.sign(v)


def gate_value(xi, v, beta, gamma):
    """Shifted log-sum-exp gate G(v) = log((1/gamma) sum_mu exp(beta xi_mu . v)).

    Computed with the max-shifted log-sum-exp, so it is exact up to
    rounding for any finite input. Accepts a single feature vector (d,)
    or a batch (n, d) and returns a float or an (n,) array accordingly.
    Negative G marks the capture region of the origin attractor and,
    equivalently, low unnormalized density.
    """
    xi = check_interaction_matrix(xi)
    v = check_state(v, dim=xi.shape[1], name="v")
    beta = check_positive(beta, "beta")
    gamma = check_positive(gamma, "gamma")
    scores = beta * (v @ xi.T)
    out = stable_log_sum_exp(scores, axis=-1) - math.log(gamma)
    if v.ndim == 1:
        return float(out)
    return out
