"""Concave separable utilities with closed-form gradients and curvature constants.

Two families ship:

* log1p: phi(x) = sum_i log(1 + beta_i x_i), the classic diminishing-returns
  utility (approaches proportional fairness for large beta).
* neg-quadratic: phi(x) = sum_i (a_i x_i - (b_i/2) x_i^2), handy because its
  central differences are exact up to rounding.

Both are entrywise nondecreasing on their box, concave, and smooth, with the
gradient-Lipschitz constant G and strong-concavity modulus alpha available in
closed form. All evaluation methods broadcast over leading axes, so a batch of
points of shape (R, n) evaluates in one call.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import Box

__all__ = [
    "UtilityFunction",
    "Log1pUtility",
    "NegQuadraticUtility",
    "SmoothnessInfo",
    "UtilityDomainError",
    "smoothness_info",
    "check_gradient_fd",
    "utility_to_dict",
    "utility_from_dict",
    "load_utility",
    "save_utility",
]

DOMAIN_SLACK = 1e-9


class UtilityDomainError(ValueError):
    """Raised when a point lies outside the feasible box beyond slack."""


@dataclass(frozen=True)
class SmoothnessInfo:
    """Curvature summary: G bounds the Hessian from above, alpha from below."""

    G: float
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= self.G:
            raise ValueError(f"require G >= alpha >= 0, got G={self.G}, alpha={self.alpha}")


class UtilityFunction:
    """Base class; concrete families override the closed forms.

    The optional box binding enables the upper domain check and, for the
    neg-quadratic family, the monotonicity check a_i >= b_i * mu_max_i. The
    binding is a validation context only: equality and serialization ignore it.
    """

    kind: str = ""

    def __init__(self, box: Box | None = None):
        self.box = box

    # -- closed forms supplied by subclasses ---------------------------------
    def _value(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def smoothness_constant(self, box: Box) -> float:
        raise NotImplementedError

    def strong_concavity_constant(self, box: Box) -> float:
        raise NotImplementedError

    # -- shared plumbing -----------------------------------------------------
    def _check_domain(self, x: np.ndarray) -> None:
        if np.any(x < -DOMAIN_SLACK):
            raise UtilityDomainError("point below zero beyond slack")
        if self.box is not None and np.any(x > self.box.mu_max + DOMAIN_SLACK):
            raise UtilityDomainError("point above mu_max beyond slack")

    def value(self, x) -> float | np.ndarray:
        x = np.asarray(x, dtype=float)
        self._check_domain(x)
        out = self._value(x)
        return float(out) if out.ndim == 0 else out

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._check_domain(x)
        return self._gradient(x)

    def with_box(self, box: Box) -> "UtilityFunction":
        """Return a copy bound to the given box (revalidates family invariants)."""
        raise NotImplementedError

    def params_dict(self) -> dict:
        raise NotImplementedError

    def __eq__(self, other):
        if not isinstance(other, UtilityFunction) or self.kind != other.kind:
            return False
        mine, theirs = self.params_dict(), other.params_dict()
        return all(np.array_equal(mine[k], theirs[k]) for k in mine)

    def __repr__(self):
        params = ", ".join(f"{k}={v}" for k, v in self.params_dict().items())
        return f"{type(self).__name__}({params})"


class Log1pUtility(UtilityFunction):
    """phi(x) = sum_i log(1 + beta_i x_i) with beta_i > 0."""

    kind = "log1p"

    def __init__(self, beta, box: Box | None = None):
        super().__init__(box)
        self.beta = np.atleast_1d(np.asarray(beta, dtype=float))
        if np.any(self.beta <= 0):
            raise ValueError("beta components must be strictly positive")

    def _value(self, x):
        return np.log1p(self.beta * x).sum(axis=-1)

    def _gradient(self, x):
        return self.beta / (1.0 + self.beta * x)

    def smoothness_constant(self, box: Box) -> float:
        # curvature |phi_i''| = beta^2/(1+beta x)^2 peaks at x=0
        return float(np.max(self.beta**2))

    def strong_concavity_constant(self, box: Box) -> float:
        # and bottoms out at x = mu_max
        return float(np.min((self.beta / (1.0 + self.beta * box.mu_max)) ** 2))

    def with_box(self, box: Box) -> "Log1pUtility":
        return Log1pUtility(self.beta, box)

    def params_dict(self) -> dict:
        return {"beta": self.beta}


class NegQuadraticUtility(UtilityFunction):
    """phi(x) = sum_i (a_i x_i - (b_i/2) x_i^2) with a_i > 0, b_i >= 0.

    Entrywise monotonicity on a box requires a_i >= b_i * mu_max_i; this is
    checked whenever a box is supplied.
    """

    kind = "neg-quadratic"

    def __init__(self, a, b, box: Box | None = None):
        super().__init__(box)
        self.a = np.atleast_1d(np.asarray(a, dtype=float))
        self.b = np.atleast_1d(np.asarray(b, dtype=float))
        if self.a.shape != self.b.shape:
            raise ValueError("a and b must have matching shapes")
        if np.any(self.a <= 0):
            raise ValueError("a components must be strictly positive")
        if np.any(self.b < 0):
            raise ValueError("b components must be nonnegative")
        if box is not None and np.any(self.a < self.b * box.mu_max):
            raise ValueError("not nondecreasing on the box: need a_i >= b_i * mu_max_i")

    def _value(self, x):
        return (self.a * x - 0.5 * self.b * x * x).sum(axis=-1)

    def _gradient(self, x):
        return self.a - self.b * x

    def smoothness_constant(self, box: Box) -> float:
        return float(np.max(self.b))

    def strong_concavity_constant(self, box: Box) -> float:
        return float(np.min(self.b))

    def with_box(self, box: Box) -> "NegQuadraticUtility":
        return NegQuadraticUtility(self.a, self.b, box)

    def params_dict(self) -> dict:
        return {"a": self.a, "b": self.b}


def smoothness_info(u: UtilityFunction, box: Box) -> SmoothnessInfo:
    return SmoothnessInfo(
        G=u.smoothness_constant(box), alpha=u.strong_concavity_constant(box)
    )


def check_gradient_fd(u: UtilityFunction, x, h: float) -> float:
    """Max abs difference between the closed-form gradient and central differences.

    The point must sit at least h inside the box so both probes stay feasible.
    """
    x = np.asarray(x, dtype=float)
    grad = u.gradient(x)
    err = 0.0
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fd = (u.value(x + e) - u.value(x - e)) / (2.0 * h)
        err = max(err, abs(grad[i] - fd))
    return err


def utility_to_dict(u: UtilityFunction) -> dict:
    out = {"kind": u.kind}
    out.update({k: np.asarray(v).tolist() for k, v in u.params_dict().items()})
    return out


def utility_from_dict(data: dict, box: Box | None = None) -> UtilityFunction:
    try:
        kind = data["kind"]
        if kind == "log1p":
            return Log1pUtility(data["beta"], box)
        if kind == "neg-quadratic":
            return NegQuadraticUtility(data["a"], data["b"], box)
    except KeyError as exc:
        raise ValueError(f"malformed utility data: missing {exc}") from exc
    raise ValueError(f"unknown utility kind {kind!r}")


def load_utility(path: str, box: Box | None = None) -> UtilityFunction:
    with open(path, encoding="utf-8") as fh:
        return utility_from_dict(json.load(fh), box)


def save_utility(u: UtilityFunction, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(utility_to_dict(u), fh, indent=2)
        fh.write("\n")
