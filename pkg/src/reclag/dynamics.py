"""Discrete-time feature dynamics, fixed-point search, and attractor tools.

The two-body system couples feature neurons v (length N_V) and memory
neurons h (length N_H) through an interaction matrix xi (N_H x N_V):

    tau_v dv/dt = xi^T f(h) - v,      tau_h dh/dt = xi g(v) - h,

with f and g the activations of the chosen Lagrangians. In the adiabatic
limit (memory equilibrates instantly, tau_v = dt) the system collapses to
a one-step feature update: the classic soft retrieval ``vanilla_update``
for the LogSumExp Lagrangian, and its hard-gated form ``reclag_update``
for RecLag. The gated form maps every state with a negative gate to the
exact zero vector, which makes the origin a one-step trap for a whole
ball of initial states whenever gamma > N_H.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernels import stable_log_sum_exp, stable_softmax
from .lagrangians import HalfSquare, LogSumExp, RecLag, gate_value
from .validation import (
    check_interaction_matrix,
    check_positive,
    check_state,
    check_vector,
)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_STEPS = 1000


class DivergenceError(RuntimeError):
    """A state became non-finite during integration."""

    def __init__(self, step):
        super().__init__(f"non-finite state at step {step}")
        self.step = step


@dataclass(frozen=True)
class HopfieldConfig:
    """Integration constants for the two-body system.

    When ``adiabatic`` is set, the memory layer is re-equilibrated to
    h = xi g(v) at every step and the feature step uses tau_v = dt
    exactly, whatever tau_v was given.
    """

    tau_v: float = 1.0
    tau_h: float = 0.1
    dt: float = 0.1
    adiabatic: bool = False

    def __post_init__(self):
        check_positive(self.tau_v, "tau_v")
        check_positive(self.tau_h, "tau_h")
        check_positive(self.dt, "dt")


@dataclass
class Trajectory:
    """Time-indexed feature states v^(0..K) with optional per-step energy."""

    states: np.ndarray                     # (K+1, N_V)
    energies: Optional[np.ndarray] = None  # (K+1,) when tracked
    converged: bool = False
    steps_taken: int = 0

    @property
    def initial(self):
        return self.states[0]

    @property
    def final(self):
        return self.states[-1]

    def __len__(self):
        return self.states.shape[0]


@dataclass(frozen=True)
class AttractorLabel:
    """Where a converged trajectory ended up.

    kind is "origin" (the dedicated OOD attractor), "pattern" (nearest
    stored row, with its index and distance), or "unconverged".
    """

    kind: str
    index: Optional[int] = None
    distance: Optional[float] = None


def vanilla_update(xi, v, beta):
    """One soft retrieval step v' = xi^T softmax(beta xi v).

    Accepts a single state (d,) or a batch (n, d); every output row is a
    convex combination of the rows of xi.
    """
    xi = check_interaction_matrix(xi)
    v = check_state(v, dim=xi.shape[1], name="v")
    beta = check_positive(beta, "beta")
    p = stable_softmax(beta * (v @ xi.T), axis=-1)
    return p @ xi


def reclag_update(xi, v, beta, gamma):
    """Gated retrieval step: vanilla_update where the gate is open, else 0.

    The gate multiplies the whole vector, so a closed gate yields the
    exact zero vector, not an approximation.
    """
    xi = check_interaction_matrix(xi)
    v = check_state(v, dim=xi.shape[1], name="v")
    g = gate_value(xi, v, beta, gamma)
    if v.ndim == 1:
        if g < 0.0:
            return np.zeros_like(v)
        return vanilla_update(xi, v, beta)
    out = vanilla_update(xi, v, beta)
    out[np.asarray(g) < 0.0] = 0.0
    return out


def _adiabatic_step(xi, v, mem, feat):
    """One adiabatic step, reducing exactly to the dedicated updates."""
    if isinstance(feat, HalfSquare):
        if isinstance(mem, LogSumExp):
            return vanilla_update(xi, v, mem.beta)
        if isinstance(mem, RecLag):
            return reclag_update(xi, v, mem.beta, mem.gamma)
    h = xi @ feat.activation(v)
    return xi.T @ mem.activation(h)


def integrate_two_body(xi, v0, h0, mem, feat, cfg, steps, track_energy=False):
    """Explicit-Euler integration of the coupled feature/memory equations.

    Non-adiabatic steps update both layers simultaneously from the old
    state:

        h <- h + (dt/tau_h) (xi g(v) - h)
        v <- v + (dt/tau_v) (xi^T f(h) - v)

    In adiabatic mode each step sets h = xi g(v) and applies the one-step
    feature update, which coincides exactly with vanilla_update /
    reclag_update for the LogSumExp / RecLag memory Lagrangians.
    """
    from .energy import general_energy

    xi = check_interaction_matrix(xi)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    v = check_vector(v0, length=xi.shape[1], name="v0").copy()
    h = check_vector(h0, length=xi.shape[0], name="h0").copy()

    states = [v.copy()]
    energies = []
    if track_energy:
        energies.append(general_energy(xi, v, h, mem, feat))
    for k in range(steps):
        if cfg.adiabatic:
            h = xi @ feat.activation(v)
            v = _adiabatic_step(xi, v, mem, feat)
        else:
            dv = (cfg.dt / cfg.tau_v) * (xi.T @ mem.activation(h) - v)
            dh = (cfg.dt / cfg.tau_h) * (xi @ feat.activation(v) - h)
            v = v + dv
            h = h + dh
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(h))):
            raise DivergenceError(k + 1)
        states.append(v.copy())
        if track_energy:
            energies.append(general_energy(xi, v, h, mem, feat))
    return Trajectory(
        states=np.array(states),
        energies=np.array(energies) if track_energy else None,
        converged=False,
        steps_taken=steps,
    )


def run_to_fixed_point(xi, v0, mem, feat, tol=DEFAULT_TOL,
                       max_steps=DEFAULT_MAX_STEPS, track_energy=False):
    """Iterate the adiabatic update until ||v' - v||_2 < tol or max_steps."""
    from .energy import general_energy

    xi = check_interaction_matrix(xi)
    check_positive(tol, "tol")
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    v = check_vector(v0, length=xi.shape[1], name="v0").copy()

    def _energy(v):
        return general_energy(xi, v, xi @ feat.activation(v), mem, feat)

    states = [v.copy()]
    energies = [_energy(v)] if track_energy else None
    converged = False
    steps = 0
    for _ in range(max_steps):
        v_next = _adiabatic_step(xi, v, mem, feat)
        if not np.all(np.isfinite(v_next)):
            raise DivergenceError(steps + 1)
        states.append(v_next.copy())
        if track_energy:
            energies.append(_energy(v_next))
        steps += 1
        if float(np.linalg.norm(v_next - v)) < tol:
            converged = True
            v = v_next
            break
        v = v_next
    return Trajectory(
        states=np.array(states),
        energies=np.array(energies) if track_energy else None,
        converged=converged,
        steps_taken=steps,
    )


def capture_radius(xi, beta, gamma):
    """Radius of the ball that one gated step maps to the origin.

    epsilon = log(gamma / N_H) / (N_V * beta * max|xi|), defined only for
    gamma > N_H.
    """
    xi = check_interaction_matrix(xi)
    beta = check_positive(beta, "beta")
    n_mem, n_feat = xi.shape
    if gamma <= n_mem:
        raise ValueError(
            f"capture radius requires gamma > N_H, got gamma={gamma} with "
            f"N_H={n_mem}"
        )
    scale = float(np.max(np.abs(xi)))
    if scale == 0.0:
        raise ValueError("degenerate all-zero interaction matrix")
    return math.log(gamma / n_mem) / (n_feat * beta * scale)


def classify_attractor(traj, xi, origin_tol=None, mem=None):
    """Label the endpoint of a trajectory.

    origin_tol defaults to 1e-6, tightened to min(1e-6, epsilon/2) when a
    RecLag spec with gamma > N_H is supplied so the capture ball sets the
    scale.
    """
    xi = check_interaction_matrix(xi)
    if not traj.converged:
        return AttractorLabel(kind="unconverged")
    if origin_tol is None:
        origin_tol = 1e-6
        if isinstance(mem, RecLag) and mem.guarantees_origin_attractor(xi.shape[0]):
            origin_tol = min(1e-6, capture_radius(xi, mem.beta, mem.gamma) / 2.0)
    v = traj.final
    if float(np.linalg.norm(v)) < origin_tol:
        return AttractorLabel(kind="origin")
    dists = np.linalg.norm(xi - v[None, :], axis=1)
    idx = int(np.argmin(dists))
    return AttractorLabel(kind="pattern", index=idx, distance=float(dists[idx]))


@dataclass(frozen=True)
class OriginBallReport:
    """Outcome of the origin-attractor ball check."""

    epsilon: float
    all_captured: bool
    n_probes: int


def theorem1_ball_check(xi, beta, gamma, n_probes=1000, seed=0):
    """Verify that the capture ball maps to the exact origin in one step.

    Samples n_probes points uniformly in the open ball of radius
    ``capture_radius`` and asserts that a single gated update sends every
    one of them, and the origin itself, to the exact zero vector.
    Requires gamma > N_H; anything else is a precondition violation.
    """
    xi = check_interaction_matrix(xi)
    eps = capture_radius(xi, beta, gamma)  # raises when gamma <= N_H
    n_feat = xi.shape[1]
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_probes, n_feat))
    norms = np.linalg.norm(dirs, axis=1)
    norms[norms == 0.0] = 1.0
    radii = eps * rng.random(n_probes) ** (1.0 / n_feat)
    probes = dirs * (radii / norms)[:, None]

    mapped = reclag_update(xi, probes, beta, gamma)
    origin_fixed = np.all(
        reclag_update(xi, np.zeros(n_feat), beta, gamma) == 0.0
    )
    captured = bool(np.all(mapped == 0.0) and origin_fixed)
    return OriginBallReport(epsilon=eps, all_captured=captured,
                            n_probes=n_probes)


def theorem2_gamma(xi, beta, vanilla_traj, delta):
    """Inverse memory strength that keeps the gate open along a trajectory.

    gamma = delta * min_k sum_mu exp(beta xi_mu . v^(k)), computed in log
    space. With this gamma the gated dynamics started from the same
    initial state reproduce the ungated trajectory exactly, because the
    gate value stays >= -log(delta) > 0 at every recorded state.
    """
    xi = check_interaction_matrix(xi)
    beta = check_positive(beta, "beta")
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    states = np.asarray(vanilla_traj.states, dtype=np.float64)
    if states.size == 0:
        raise ValueError("trajectory has no states")
    lse = stable_log_sum_exp(beta * (states @ xi.T), axis=-1)
    log_gamma = math.log(delta) + float(np.min(lse))
    return math.exp(log_gamma)
