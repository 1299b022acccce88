"""Joint/marginal density over feature space and basin membership.

The model assigns the unnormalized joint weight exp(beta xi_mu . x) to a
feature point x paired with memory index mu. Normalizing over indices
and a covering ball S of radius R gives

    p(x, mu) = exp(beta xi_mu . x) / Z,
    Z = sum_mu integral_S exp(beta xi_mu . x) dx,

so the marginal satisfies log p(x) = log gamma + G(x) - log Z with G the
shifted log-sum-exp gate. The gate sign therefore thresholds the density
at exactly gamma / Z: the capture basin of the origin attractor is the
sub-threshold set. Detection uses G directly (a monotone transform of
the density), so Z is needed only as a diagnostic and is estimated by
Monte Carlo over the ball.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernels import stable_log_sum_exp, stable_softmax
from .lagrangians import gate_value
from .validation import (
    check_interaction_matrix,
    check_positive,
    check_state,
    check_vector,
)


@dataclass(frozen=True)
class LogPartition:
    """Monte Carlo estimate of log Z with its delta-method standard error."""

    estimate: float
    std_error: float
    n_samples: int
    seed: int

    def __post_init__(self):
        if self.std_error < 0.0:
            raise ValueError("std_error must be >= 0")


@dataclass
class DensityModel:
    """Trained interaction matrix with its density bookkeeping.

    sphere_radius is the radius of the covering ball and must be at
    least the largest training-feature norm the model was fit on.
    """

    xi: np.ndarray
    beta: float
    gamma: float
    sphere_radius: float
    log_partition: Optional[LogPartition] = None

    def __post_init__(self):
        self.xi = check_interaction_matrix(self.xi)
        check_positive(self.beta, "beta")
        check_positive(self.gamma, "gamma")
        check_positive(self.sphere_radius, "sphere_radius")

    @property
    def n_memories(self):
        return self.xi.shape[0]

    @property
    def n_features(self):
        return self.xi.shape[1]


def log_joint_unnormalized(model, x, mu):
    """beta * xi_mu . x, the log of Z times the joint weight of (x, mu)."""
    if not 0 <= mu < model.n_memories:
        raise IndexError(
            f"memory index {mu} out of range [0, {model.n_memories})"
        )
    x = check_vector(x, length=model.n_features, name="x")
    return float(model.beta * np.dot(model.xi[mu], x))


def memory_posterior(model, x):
    """Posterior over memory indices, softmax(beta xi x).

    The partition constant and gamma cancel exactly. Accepts a single
    point (d,) or a batch (n, d).
    """
    x = check_state(x, dim=model.n_features, name="x")
    return stable_softmax(model.beta * (x @ model.xi.T), axis=-1)


def _log_ball_volume(dim, radius):
    return (dim / 2.0) * math.log(math.pi) + dim * math.log(radius) \
        - math.lgamma(dim / 2.0 + 1.0)


def estimate_log_partition(model, n_samples, seed=0):
    """Monte Carlo estimate of log Z over the covering ball.

    Z = Vol(ball) * E_x[sum_mu exp(beta xi_mu . x)] under x uniform in
    the ball; the average is taken in log space and the standard error
    of the log comes from the delta method. Deterministic given seed.
    In high dimension the estimate is high-variance; treat it as a
    diagnostic and rely on gate values for detection.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    dim = model.n_features
    radius = model.sphere_radius
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_samples, dim))
    norms = np.linalg.norm(dirs, axis=1)
    norms[norms == 0.0] = 1.0
    radii = radius * rng.random(n_samples) ** (1.0 / dim)
    x = dirs * (radii / norms)[:, None]

    s = stable_log_sum_exp(model.beta * (x @ model.xi.T), axis=-1)
    s = np.atleast_1d(s)
    log_mean = stable_log_sum_exp(s) - math.log(n_samples)
    log_mean_sq = stable_log_sum_exp(2.0 * s) - math.log(n_samples)
    # ratio mean(w^2)/mean(w)^2 >= 1; clamp rounding noise at equality
    ratio = math.exp(log_mean_sq - 2.0 * log_mean)
    var_ratio = max(ratio - 1.0, 0.0) * n_samples / (n_samples - 1)
    std_error = math.sqrt(var_ratio / n_samples)

    estimate = _log_ball_volume(dim, radius) + log_mean
    return LogPartition(estimate=estimate, std_error=std_error,
                        n_samples=n_samples, seed=seed)


def log_density(model, x):
    """log p(x) = log gamma + G(x) - log Z; requires a partition estimate."""
    if model.log_partition is None:
        raise ValueError(
            "log_partition is not set; run estimate_log_partition first"
        )
    g = gate_value(model.xi, x, model.beta, model.gamma)
    return math.log(model.gamma) + g - model.log_partition.estimate


def in_basin(model, x):
    """True where the gate is negative, i.e. density below gamma / Z."""
    g = gate_value(model.xi, x, model.beta, model.gamma)
    if np.ndim(g) == 0:
        return bool(g < 0.0)
    return np.asarray(g) < 0.0


def ood_score(model, x):
    """Gate value G(x) as the ID-ness score; higher means more ID.

    Strictly increasing in the marginal density, so rankings and the
    derived ROC metrics match density thresholding without requiring Z.
    """
    return gate_value(model.xi, x, model.beta, model.gamma)


def calibrate_gamma(xi, beta, id_features, target_tpr=0.95):
    """Inverse memory strength whose basin excludes a target ID fraction.

    Sets log gamma at the (1 - target_tpr) quantile of the ID responses
    log sum_mu exp(beta xi_mu . x), so about target_tpr of the ID points
    keep a non-negative gate while weaker points fall into the basin.
    This is the sensitivity-knob reading of gamma: growing it enlarges
    the basin, shrinking it toward zero recovers the ungated network.
    """
    xi = check_interaction_matrix(xi)
    beta = check_positive(beta, "beta")
    feats = check_state(id_features, dim=xi.shape[1], name="id_features")
    if feats.ndim == 1:
        feats = feats[None, :]
    if not 0.0 < target_tpr < 1.0:
        raise ValueError("target_tpr must lie in (0, 1)")
    lse = np.atleast_1d(stable_log_sum_exp(beta * (feats @ xi.T), axis=-1))
    return float(np.exp(np.quantile(lse, 1.0 - target_tpr)))


def calibrate_gamma_for_dynamics(xi, beta, id_features, steps=4,
                                 target_tpr=0.95):
    """Gamma that keeps the gate open along evolving ID trajectories.

    Retrieval passes through transient mixture states whose responses
    dip below both the input's and the fixed point's, so a gamma fit to
    static inputs can swallow ID points mid-trajectory. This variant
    takes, per ID point, the minimum response over ``steps`` ungated
    updates and puts log gamma at its (1 - target_tpr) quantile: a
    target_tpr fraction of ID trajectories then provably never gate
    (their gated evolution coincides with the ungated one), while
    inputs below threshold collapse to the origin at once.
    """
    from .dynamics import vanilla_update

    xi = check_interaction_matrix(xi)
    beta = check_positive(beta, "beta")
    feats = check_state(id_features, dim=xi.shape[1], name="id_features")
    if feats.ndim == 1:
        feats = feats[None, :]
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if not 0.0 < target_tpr < 1.0:
        raise ValueError("target_tpr must lie in (0, 1)")
    v = feats
    low = np.atleast_1d(stable_log_sum_exp(beta * (v @ xi.T), axis=-1))
    for _ in range(steps):
        v = vanilla_update(xi, v, beta)
        low = np.minimum(
            low, np.atleast_1d(stable_log_sum_exp(beta * (v @ xi.T),
                                                  axis=-1)))
    return float(np.exp(np.quantile(low, 1.0 - target_tpr)))
