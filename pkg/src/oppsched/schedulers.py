"""Per-slot decision rules.

Two scheduler families share one skeleton: observe the slot's action set, pick
the action maximizing a weight vector, then update internal state.

* The conditional-gradient family (FwScheduler) weighs actions by the utility
  gradient at a running weighted average gamma, mixed in with a stepsize
  schedule: run 1/(t+1), exp constant eta, fw2 2/(t+2), or a custom schedule.
* The drift-plus-penalty baseline (DppScheduler) weighs actions by virtual
  queues, refilled each slot by a per-coordinate flow subproblem.

State updates are functional: each step returns a fresh state value. All
arithmetic broadcasts over leading axes so a batch of replicate states of shape
(R, n) advances with the same expressions as a single (n,) state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import Box
from .utility import UtilityFunction

__all__ = [
    "StepsizeSchedule",
    "FwState",
    "DppState",
    "stepsize_value",
    "argmax_linear",
    "step_fw",
    "dpp_flow_solve",
    "dpp_flow_bisect",
    "step_dpp",
    "FwScheduler",
    "DppScheduler",
    "parse_scheduler_selector",
    "make_scheduler",
]

FLOW_BISECT_TOL = 1e-12


@dataclass(frozen=True)
class StepsizeSchedule:
    """Mixing weight eta_t for the update gamma[t] = (1-eta_t)gamma[t-1] + eta_t mu[t]."""

    kind: str  # run | exp | fw2 | custom
    eta: float | None = None
    custom: Callable[[int], float] | None = None

    def __post_init__(self):
        if self.kind == "exp":
            if self.eta is None or not 0.0 < self.eta < 1.0:
                raise ValueError("exp schedule requires eta in (0, 1)")
        elif self.kind == "custom":
            if self.custom is None:
                raise ValueError("custom schedule requires a callable")
        elif self.kind not in ("run", "fw2"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")


def stepsize_value(schedule: StepsizeSchedule, t: int) -> float:
    """Closed-form eta_t for slot t >= 0."""
    if t < 0:
        raise ValueError("slot index must be nonnegative")
    if schedule.kind == "run":
        return 1.0 / (t + 1)
    if schedule.kind == "fw2":
        return 2.0 / (t + 2)
    if schedule.kind == "exp":
        return schedule.eta
    eta = float(schedule.custom(t))
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"custom stepsize at t={t} is {eta}, outside (0, 1]")
    return eta


@dataclass
class FwState:
    """Weighted average gamma[t-1] (zero-initialized) and the slot counter."""

    gamma: np.ndarray
    t: int = 0

    @classmethod
    def initial(cls, n: int) -> "FwState":
        return cls(gamma=np.zeros(n), t=0)


@dataclass
class DppState:
    """Virtual queues Q[t] (zero-initialized), tradeoff epsilon, slot counter."""

    queues: np.ndarray
    epsilon: float
    t: int = 0

    @classmethod
    def initial(cls, n: int, epsilon: float) -> "DppState":
        return cls(queues=np.zeros(n), epsilon=epsilon, t=0)


def argmax_linear(w, actions) -> np.ndarray:
    """Action maximizing w . mu; ties resolve to the lowest list index."""
    acts = np.asarray(actions, dtype=float)
    scores = (acts * np.asarray(w, dtype=float)).sum(axis=1)
    return acts[int(np.argmax(scores))].copy()


def step_fw(
    state: FwState, actions, schedule: StepsizeSchedule, utility: UtilityFunction
) -> tuple[np.ndarray, FwState]:
    """One conditional-gradient slot: gradient max-weight pick, then mix into gamma."""
    grad = utility.gradient(state.gamma)
    mu = argmax_linear(grad, actions)
    eta = stepsize_value(schedule, state.t)
    gamma = (1.0 - eta) * state.gamma + eta * mu
    return mu, FwState(gamma=gamma, t=state.t + 1)


def dpp_flow_solve(
    queues, utility: UtilityFunction, epsilon: float, box: Box
) -> np.ndarray:
    """Per-coordinate maximizer of (1/epsilon) phi(theta) - Q . theta over the box.

    Separable utilities decompose coordinatewise; the shipped families admit
    closed forms (stationarity gradient_i(theta)/epsilon = Q_i, clamped to
    [0, mu_max_i], with theta_i = mu_max_i at Q_i = 0). Other families fall
    back to dpp_flow_bisect. Broadcasts over leading axes of queues.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    q = np.asarray(queues, dtype=float)
    if np.any(q < 0):
        raise ValueError("queues must be nonnegative")
    mu_max = box.mu_max
    if utility.kind == "log1p":
        beta = utility.beta
        with np.errstate(divide="ignore"):
            stat = 1.0 / (epsilon * q) - 1.0 / beta
        return np.where(q > 0.0, np.clip(stat, 0.0, mu_max), mu_max)
    if utility.kind == "neg-quadratic":
        a, b = utility.a, utility.b
        with np.errstate(divide="ignore", invalid="ignore"):
            stat = (a - epsilon * q) / b
            curved = np.clip(stat, 0.0, mu_max)
        flat = np.where(a - epsilon * q >= 0.0, mu_max, 0.0)
        return np.where(b > 0.0, curved, flat)
    return dpp_flow_bisect(q, utility, epsilon, box)


def dpp_flow_bisect(
    queues, utility: UtilityFunction, epsilon: float, box: Box, tol: float = FLOW_BISECT_TOL
) -> np.ndarray:
    """Reference solver for the flow subproblem: bisect the 1-D derivative.

    Valid for any concave separable utility whose gradient component i depends
    only on coordinate i (both shipped families). Kept as an independent route
    for cross-checking the closed forms.
    """
    q = np.asarray(queues, dtype=float)
    lo = np.zeros(np.broadcast_shapes(q.shape, box.mu_max.shape))
    hi = np.broadcast_to(box.mu_max, lo.shape).astype(float).copy()

    def deriv(theta):
        return utility.gradient(theta) / epsilon - q

    at_lo = deriv(lo)
    at_hi = deriv(hi)
    steps = int(np.ceil(np.log2(max(float(np.max(box.mu_max)), tol) / tol))) + 1
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        up = deriv(mid) > 0.0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    theta = 0.5 * (lo + hi)
    theta = np.where(at_lo <= 0.0, 0.0, theta)
    theta = np.where(at_hi >= 0.0, np.broadcast_to(box.mu_max, theta.shape), theta)
    return theta


def step_dpp(
    state: DppState, actions, utility: UtilityFunction, box: Box
) -> tuple[np.ndarray, DppState]:
    """One drift-plus-penalty slot: queue max-weight pick, flow refill, queue update."""
    mu = argmax_linear(state.queues, actions)
    gamma = dpp_flow_solve(state.queues, utility, state.epsilon, box)
    queues = np.maximum(state.queues + gamma - mu, 0.0)
    return mu, DppState(queues=queues, epsilon=state.epsilon, t=state.t + 1)


class FwScheduler:
    """Conditional-gradient scheduler bound to a schedule and a utility."""

    def __init__(self, schedule: StepsizeSchedule, utility: UtilityFunction):
        self.schedule = schedule
        self.utility = utility

    def start(self, n: int) -> FwState:
        return FwState.initial(n)

    def start_batch(self, replicates: int, n: int) -> FwState:
        return FwState(gamma=np.zeros((replicates, n)), t=0)

    def weights(self, state: FwState) -> np.ndarray:
        return self.utility.gradient(state.gamma)

    def update(self, state: FwState, mu) -> FwState:
        eta = stepsize_value(self.schedule, state.t)
        gamma = (1.0 - eta) * state.gamma + eta * np.asarray(mu, dtype=float)
        return FwState(gamma=gamma, t=state.t + 1)

    def step(self, state: FwState, actions, rng=None) -> tuple[np.ndarray, FwState]:
        return step_fw(state, actions, self.schedule, self.utility)


class DppScheduler:
    """Drift-plus-penalty scheduler bound to epsilon, a utility, and the box."""

    def __init__(self, epsilon: float, utility: UtilityFunction, box: Box):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.epsilon = epsilon
        self.utility = utility
        self.box = box

    def start(self, n: int) -> DppState:
        return DppState.initial(n, self.epsilon)

    def start_batch(self, replicates: int, n: int) -> DppState:
        return DppState(queues=np.zeros((replicates, n)), epsilon=self.epsilon, t=0)

    def weights(self, state: DppState) -> np.ndarray:
        return state.queues

    def update(self, state: DppState, mu) -> DppState:
        gamma = dpp_flow_solve(state.queues, self.utility, state.epsilon, self.box)
        queues = np.maximum(state.queues + gamma - np.asarray(mu, dtype=float), 0.0)
        return DppState(queues=queues, epsilon=state.epsilon, t=state.t + 1)

    def step(self, state: DppState, actions, rng=None) -> tuple[np.ndarray, DppState]:
        return step_dpp(state, actions, self.utility, self.box)


def parse_scheduler_selector(selector: str) -> dict:
    """Parse "run" | "exp:<eta>" | "fw2" | "dpp:<epsilon>" into a spec dict."""
    name, _, arg = selector.partition(":")
    if name == "run" or name == "fw2":
        if arg:
            raise ValueError(f"{name} takes no parameter")
        return {"kind": name}
    if name == "exp":
        try:
            eta = float(arg)
        except ValueError:
            eta = None
        if not arg or eta is None or not 0.0 < eta < 1.0:
            raise ValueError("exp requires eta as exp:<eta> with eta in (0, 1)")
        return {"kind": "exp", "eta": eta}
    if name == "dpp":
        try:
            epsilon = float(arg)
        except ValueError:
            epsilon = None
        if not arg or epsilon is None or epsilon <= 0.0:
            raise ValueError("dpp requires epsilon as dpp:<epsilon> with epsilon > 0")
        return {"kind": "dpp", "epsilon": epsilon}
    raise ValueError(f"unknown scheduler selector {selector!r}")


def make_scheduler(selector: str, utility: UtilityFunction, box: Box):
    """Instantiate the scheduler a selector string names."""
    spec = parse_scheduler_selector(selector)
    if spec["kind"] == "dpp":
        return DppScheduler(spec["epsilon"], utility, box)
    if spec["kind"] == "exp":
        return FwScheduler(StepsizeSchedule("exp", eta=spec["eta"]), utility)
    return FwScheduler(StepsizeSchedule(spec["kind"]), utility)
