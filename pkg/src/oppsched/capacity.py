"""Capacity region: exact linear maximization and certified utility optimum.

The achievable-rate region of a finite model is the set of expectations
sum_s p_s d_s with each d_s a convex mixture of state s's actions. A linear
objective therefore maximizes state by state, which makes the linear
maximization oracle (lmo) exact and lets a deterministic conditional-gradient
loop certify phi_opt through its duality gap.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import ChannelModel
from .schedulers import argmax_linear
from .utility import UtilityFunction

__all__ = [
    "CapacitySolution",
    "ToleranceNotReached",
    "InstanceTooLarge",
    "lmo",
    "solve_phi_opt",
    "fw_gap",
    "brute_force_phi_opt",
]

MAX_ITER = 10_000_000
BRUTE_FORCE_MAX_STATES = 3
BRUTE_FORCE_MAX_ACTION_TUPLES = 10_000
BRUTE_FORCE_MAX_EVALS = 50_000_000


class ToleranceNotReached(RuntimeError):
    """Certificate tolerance not met within the iteration budget."""

    def __init__(self, best: "CapacitySolution", tol: float):
        self.best = best
        self.tol = tol
        super().__init__(
            f"tolerance not reached: best certified gap {best.certified_gap:.3e} "
            f"after {best.iterations} iterations (requested {tol:.3e})"
        )


class InstanceTooLarge(ValueError):
    """Brute-force enumeration would exceed its size budget."""

    def __init__(self, detail: str):
        super().__init__(f"instance too large: {detail}")


@dataclass(frozen=True)
class CapacitySolution:
    x_star: np.ndarray
    phi_opt: float
    certified_gap: float
    iterations: int


def lmo(model: ChannelModel, w) -> tuple[np.ndarray, float]:
    """Maximize w . x over the capacity region.

    Each state contributes prob * argmax over its own action set; zero-probability
    states are still enumerated but weigh nothing. Returns (point, w . point).
    """
    w = np.asarray(w, dtype=float)
    point = np.zeros(model.n)
    for state in model.states:
        point += state.prob * argmax_linear(w, state.actions)
    return point, float(np.dot(w, point))


def fw_gap(model: ChannelModel, u: UtilityFunction, x) -> float:
    """Duality-gap certificate: gradient(x) . (lmo point - x) >= phi_opt - phi(x)."""
    x = np.asarray(x, dtype=float)
    grad = u.gradient(x)
    point, _ = lmo(model, grad)
    return float(np.dot(grad, point - x))


def solve_phi_opt(
    model: ChannelModel, u: UtilityFunction, tol: float, max_iter: int = MAX_ITER
) -> CapacitySolution:
    """Certified maximization of the utility over the capacity region.

    Deterministic conditional gradient from the zero vector with stepsize
    2/(k+2); stops once the duality gap drops to tol. Raises ToleranceNotReached
    when the iteration budget runs out first.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.zeros(model.n)
    gap = float("inf")
    for k in range(max_iter):
        grad = u.gradient(x)
        point, _ = lmo(model, grad)
        gap = float(np.dot(grad, point - x))
        if gap <= tol:
            return CapacitySolution(
                x_star=x, phi_opt=float(u.value(x)), certified_gap=max(gap, 0.0), iterations=k
            )
        eta = 2.0 / (k + 2)
        x = (1.0 - eta) * x + eta * point
    best = CapacitySolution(
        x_star=x, phi_opt=float(u.value(x)), certified_gap=max(gap, 0.0), iterations=max_iter
    )
    raise ToleranceNotReached(best, tol)


def _simplex_weight_grid(num_actions: int, resolution: int) -> np.ndarray:
    """All probability vectors over num_actions entries with weights m/resolution."""
    if num_actions == 1:
        return np.ones((1, 1))
    rows = []
    for cuts in itertools.combinations(range(resolution + num_actions - 1), num_actions - 1):
        prev = -1
        counts = []
        for c in cuts:
            counts.append(c - prev - 1)
            prev = c
        counts.append(resolution + num_actions - 2 - prev)
        rows.append(counts)
    return np.asarray(rows, dtype=float) / resolution


def brute_force_phi_opt(model: ChannelModel, u: UtilityFunction, grid: int) -> float:
    """Independent lower-bound oracle for phi_opt via simplex-grid enumeration.

    For each positive-probability state, enumerate every probability vector over
    its actions on a simplex grid of the given resolution; evaluate the utility
    on every combination of per-state mixtures and return the best value found.
    Converges to phi_opt from below as the resolution grows. Only meant for tiny
    instances; raises InstanceTooLarge beyond its budgets.
    """
    if grid < 1:
        raise ValueError("grid resolution must be >= 1")
    states = [s for s in model.states if s.prob > 0.0]
    if len(model.states) > BRUTE_FORCE_MAX_STATES:
        raise InstanceTooLarge(f"{len(model.states)} states exceeds {BRUTE_FORCE_MAX_STATES}")
    tuples = 1
    for s in model.states:
        tuples *= max(s.actions.shape[0], 1)
    if tuples > BRUTE_FORCE_MAX_ACTION_TUPLES:
        raise InstanceTooLarge(
            f"{tuples} action tuples exceeds {BRUTE_FORCE_MAX_ACTION_TUPLES}"
        )

    # Per-state candidate sets: prob-weighted grid mixtures of the action set.
    candidate_sets = []
    total = 1
    for s in states:
        weights = _simplex_weight_grid(s.actions.shape[0], grid)
        candidate_sets.append(s.prob * (weights @ s.actions))
        total *= weights.shape[0]
        if total > BRUTE_FORCE_MAX_EVALS:
            raise InstanceTooLarge(f"grid product exceeds {BRUTE_FORCE_MAX_EVALS} points")
    if not candidate_sets:
        raise ValueError("model has no positive-probability states")

    # Stream the Cartesian product in chunks over the largest candidate set.
    big_idx = int(np.argmax([c.shape[0] for c in candidate_sets]))
    big = candidate_sets.pop(big_idx)
    best = -float("inf")
    if candidate_sets:
        for combo in itertools.product(*candidate_sets):
            base = np.sum(combo, axis=0)
            vals = u.value(base + big)
            best = max(best, float(np.max(vals)))
    else:
        best = float(np.max(u.value(big)))
    return best
