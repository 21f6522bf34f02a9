"""Finite-state channel models: rate box, per-state action sets, sampling, built-ins.

A channel model is a finite PMF over named states, each carrying a finite set of
feasible rate vectors inside a common bounding box. States are opaque labels;
every scheduling rule in this package depends on the state only through its
action set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Box",
    "ChannelState",
    "ChannelModel",
    "ValidationReport",
    "ModelValidationError",
    "validate_model",
    "sample_state",
    "builtin_converse_model",
    "model_to_dict",
    "model_from_dict",
    "load_model",
    "save_model",
]

PROB_SUM_TOL = 1e-12


class ModelValidationError(ValueError):
    """Raised when a model fails validation on load or explicit check."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("invalid model: " + "; ".join(report.violations))


@dataclass(frozen=True, eq=False)
class Box:
    """Per-link rate caps; the feasible box is [0, mu_max] componentwise."""

    mu_max: np.ndarray

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.mu_max, dtype=float))
        object.__setattr__(self, "mu_max", arr)

    @property
    def n(self) -> int:
        return int(self.mu_max.size)

    def norm_sq(self) -> float:
        """Squared Euclidean norm of the cap vector, used by every rate bound."""
        return float(np.sum(self.mu_max**2))

    def contains(self, x, slack: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= -slack) and np.all(x <= self.mu_max + slack))

    def __eq__(self, other):
        return isinstance(other, Box) and np.array_equal(self.mu_max, other.mu_max)


@dataclass(frozen=True, eq=False)
class ChannelState:
    """One channel condition: a label, its probability, and the feasible rates."""

    name: str
    prob: float
    actions: np.ndarray  # shape (num_actions, n)

    def __post_init__(self):
        arr = np.asarray(self.actions, dtype=float)
        if arr.size == 0:
            arr = arr.reshape(0, 0)
        elif arr.ndim != 2:
            raise ValueError(f"state {self.name!r}: actions must be a list of rate vectors")
        object.__setattr__(self, "actions", arr)
        object.__setattr__(self, "prob", float(self.prob))

    def __eq__(self, other):
        return (
            isinstance(other, ChannelState)
            and self.name == other.name
            and self.prob == other.prob
            and np.array_equal(self.actions, other.actions)
        )


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Finite PMF over channel states sharing one bounding box."""

    box: Box
    states: tuple[ChannelState, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))

    @property
    def n(self) -> int:
        return self.box.n

    def state_probs(self) -> np.ndarray:
        return np.array([s.prob for s in self.states], dtype=float)

    def __eq__(self, other):
        return (
            isinstance(other, ChannelModel)
            and self.box == other.box
            and self.states == other.states
        )


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...] = ()


def validate_model(model: ChannelModel) -> ValidationReport:
    """Check model invariants, collecting violations instead of raising."""
    violations: list[str] = []
    mu_max = model.box.mu_max
    if np.any(mu_max <= 0):
        violations.append("non-positive mu_max")
    total = float(np.sum(model.state_probs()))
    if abs(total - 1.0) > PROB_SUM_TOL:
        violations.append(f"probabilities sum to {total:g}")
    for state in model.states:
        if not 0.0 <= state.prob <= 1.0:
            violations.append(f"state {state.name!r}: probability outside [0, 1]")
        if state.actions.shape[0] == 0:
            violations.append(f"state {state.name!r}: empty action set")
            continue
        if state.actions.shape[1] != model.n:
            violations.append(f"state {state.name!r}: action dimension mismatch")
            continue
        if np.any(state.actions < 0) or np.any(state.actions > mu_max):
            violations.append(f"state {state.name!r}: action outside box")
    return ValidationReport(ok=not violations, violations=tuple(violations))


def sample_state(model: ChannelModel, u: float) -> int:
    """Inverse-CDF sample in listed state order.

    Returns the smallest index k with cumulative probability strictly above u.
    Pure function of (model, u); the caller owns the generator that produced u.
    """
    probs = model.state_probs()
    cum = np.cumsum(probs)
    k = int(np.searchsorted(cum, u, side="right"))
    if k >= len(probs):
        # u landed beyond the accumulated mass (rounding in the cumsum); fall
        # back to the last state carrying positive probability.
        k = len(probs) - 1
        while k > 0 and probs[k] <= 0.0:
            k -= 1
    return k


def builtin_converse_model(which: str) -> ChannelModel:
    """Two-user ON/OFF instance used by the converse harness.

    Both variants share the state list and action sets; only the PMF differs:
    "A" puts (3/4, 1/4, 0) and "B" puts (0, 1/4, 3/4) on the three states.
    """
    key = which.strip().upper()
    if key == "A":
        probs = (0.75, 0.25, 0.0)
    elif key == "B":
        probs = (0.0, 0.25, 0.75)
    else:
        raise ValueError(f"unknown builtin variant {which!r}; expected 'A' or 'B'")
    box = Box(np.array([1.0, 1.0]))
    states = (
        ChannelState("ON-OFF", probs[0], np.array([[0.0, 0.0], [1.0, 0.0]])),
        ChannelState("ON-ON", probs[1], np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])),
        ChannelState("OFF-ON", probs[2], np.array([[0.0, 0.0], [0.0, 1.0]])),
    )
    return ChannelModel(box=box, states=states)


def model_to_dict(model: ChannelModel) -> dict:
    return {
        "mu_max": model.box.mu_max.tolist(),
        "states": [
            {"name": s.name, "prob": s.prob, "actions": s.actions.tolist()}
            for s in model.states
        ],
    }


def model_from_dict(data: dict) -> ChannelModel:
    try:
        box = Box(np.asarray(data["mu_max"], dtype=float))
        states = tuple(
            ChannelState(str(s["name"]), float(s["prob"]), np.asarray(s["actions"], dtype=float))
            for s in data["states"]
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model data: {exc}") from exc
    return ChannelModel(box=box, states=states)


def load_model(path: str) -> ChannelModel:
    """Load and validate a model from a JSON file.

    Raises ModelValidationError when the decoded model violates its invariants.
    """
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    model = model_from_dict(data)
    report = validate_model(model)
    if not report.ok:
        raise ModelValidationError(report)
    return model


def save_model(model: ChannelModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")
