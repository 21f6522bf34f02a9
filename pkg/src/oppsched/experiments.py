"""Monte-Carlo harness: gap/MSE estimation, the converse probe, adaptation runs.

Expectations are estimated by replicate averaging: replicate r draws its slot
uniforms from numpy's default_rng(base_seed + r), so every estimate is a pure
function of its config. The batch engine advances all replicates in lockstep
with vectorized slot updates; its elementwise expressions match the scalar
run_trial path exactly, so both produce bit-identical traces for the
deterministic schedulers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .capacity import solve_phi_opt
from .model import (
    ChannelModel,
    ModelValidationError,
    builtin_converse_model,
    sample_state,
    validate_model,
)
from .schedulers import (
    DppState,
    dpp_flow_solve,
    make_scheduler,
    parse_scheduler_selector,
)
from .utility import Log1pUtility, UtilityFunction

__all__ = [
    "ExperimentConfig",
    "Trace",
    "GapSeries",
    "MseSeries",
    "ConverseReport",
    "AdaptationReport",
    "SimulationStats",
    "ActionStructureError",
    "run_trial",
    "simulate_batch",
    "estimate_gap",
    "estimate_mse",
    "theoretical_bound",
    "converse_run",
    "fixed_theta_policy",
    "FixedThetaPolicy",
    "adaptation_run",
]

MSE_XSTAR_TOL = 1e-10
CONVERSE_FLOOR_COEFF = 35.0


class ActionStructureError(ValueError):
    """A policy was asked to act on an action set it is not defined for."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an estimate needs; immutable so results are reproducible."""

    model: ChannelModel
    utility: UtilityFunction
    scheduler: str
    horizons: tuple[int, ...]
    replicates: int
    base_seed: int
    mode: str = "gap"  # gap | mse | adapt | converse
    metric: str = "mu-bar"  # mu-bar | gamma
    model_b: ChannelModel | None = None
    t0: int | None = None
    windows: tuple[int, ...] = ()
    phi_opt_tol: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "horizons", tuple(int(t) for t in self.horizons))
        object.__setattr__(self, "windows", tuple(int(t) for t in self.windows))
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.mode not in ("gap", "mse", "adapt", "converse"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.metric not in ("mu-bar", "gamma"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.mode == "adapt":
            if self.model_b is None or self.t0 is None or not self.windows:
                raise ValueError("adapt mode requires model_b, t0, and windows")
            if self.t0 < 1:
                raise ValueError("t0 must be >= 1")
            if any(w < 1 for w in self.windows):
                raise ValueError("window lengths must be >= 1")
        else:
            if not self.horizons:
                raise ValueError("horizons must be nonempty")
            if any(t < 1 for t in self.horizons):
                raise ValueError("horizons must be >= 1")
            if any(b <= a for a, b in zip(self.horizons, self.horizons[1:])):
                raise ValueError("horizons must be strictly increasing")
        report = validate_model(self.model)
        if not report.ok:
            raise ModelValidationError(report)
        if self.utility.box is None:
            object.__setattr__(self, "utility", self.utility.with_box(self.model.box))
        parse_scheduler_selector(self.scheduler)  # fail fast on bad selectors


@dataclass
class Trace:
    """One simulated trial: per-slot decisions plus checkpointed averages."""

    decisions: np.ndarray  # (T, n)
    running_avg: dict[int, np.ndarray]  # horizon -> mu_bar[horizon]
    gamma_final: np.ndarray | None
    seed: int


@dataclass(frozen=True)
class GapSeries:
    horizons: tuple[int, ...]
    gap_mean: np.ndarray
    gap_stderr: np.ndarray
    bound: np.ndarray
    phi_opt: float


@dataclass(frozen=True)
class MseSeries:
    horizons: tuple[int, ...]
    mse_mean: np.ndarray
    mse_stderr: np.ndarray
    bound: np.ndarray
    x_star: np.ndarray
    phi_opt: float


@dataclass(frozen=True)
class ConverseReport:
    theta: float
    chosen_pmf: str
    horizons: tuple[int, ...]
    gap_mean: np.ndarray
    gap_stderr: np.ndarray
    floor: np.ndarray
    phi_opt: float


@dataclass(frozen=True)
class AdaptationReport:
    windows: tuple[int, ...]
    gap_mean: np.ndarray
    gap_stderr: np.ndarray
    phi_opt: float


# ---------------------------------------------------------------------------
# fixed-theta reference policy for the converse instance

_CONVERSE_ON_OFF = np.array([[0.0, 0.0], [1.0, 0.0]])
_CONVERSE_ON_ON = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
_CONVERSE_OFF_ON = np.array([[0.0, 0.0], [0.0, 1.0]])


class FixedThetaPolicy:
    """Serve an ON channel every slot; bias theta toward link 1 when both are ON.

    Defined only for the converse instance's action sets. Stateless apart from
    a slot counter; draws a coin only when 0 < theta < 1 and both links are ON.
    """

    def __init__(self, theta: float):
        if not 0.0 <= theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        self.theta = float(theta)

    def start(self, n: int) -> int:
        return 0

    def step(self, state: int, actions, rng=None) -> tuple[np.ndarray, int]:
        acts = np.asarray(actions, dtype=float)
        if np.array_equal(acts, _CONVERSE_ON_OFF):
            mu = acts[1]
        elif np.array_equal(acts, _CONVERSE_OFF_ON):
            mu = acts[1]
        elif np.array_equal(acts, _CONVERSE_ON_ON):
            if self.theta >= 1.0:
                mu = acts[1]
            elif self.theta <= 0.0:
                mu = acts[2]
            else:
                if rng is None:
                    raise ValueError("randomized fixed-theta policy needs a generator")
                mu = acts[1] if rng.random() < self.theta else acts[2]
        else:
            raise ActionStructureError("action structure mismatch for fixed-theta policy")
        return mu.copy(), state + 1


def fixed_theta_policy(theta: float) -> FixedThetaPolicy:
    return FixedThetaPolicy(theta)


# ---------------------------------------------------------------------------
# simulation

def run_trial(config: ExperimentConfig, seed: int) -> Trace:
    """Reference scalar simulation of one trial; deterministic given seed."""
    model = config.model
    utility = config.utility
    scheduler = make_scheduler(config.scheduler, utility, model.box)
    if config.mode == "adapt":
        segments = [(model, config.t0), (config.model_b, max(config.windows))]
        checkpoints: set[int] = set()
    else:
        segments = [(model, max(config.horizons))]
        checkpoints = set(config.horizons)
    total = sum(slots for _, slots in segments)
    rng = np.random.default_rng(seed)
    state = scheduler.start(model.n)
    decisions = np.empty((total, model.n))
    musum = np.zeros(model.n)
    running: dict[int, np.ndarray] = {}
    gamma_final: np.ndarray | None = None
    t = 0
    for seg_model, slots in segments:
        for _ in range(slots):
            u = rng.random()
            k = sample_state(seg_model, u)
            if isinstance(state, DppState):
                # flow vector the coming update will use; kept for the trace
                gamma_final = dpp_flow_solve(state.queues, utility, state.epsilon, model.box)
            mu, state = scheduler.step(state, seg_model.states[k].actions, rng)
            decisions[t] = mu
            musum += mu
            t += 1
            if t in checkpoints:
                running[t] = musum / t
    if hasattr(state, "gamma"):
        gamma_final = state.gamma
    return Trace(decisions=decisions, running_avg=running, gamma_final=gamma_final, seed=seed)


@dataclass
class SimulationStats:
    """Replicate-level samples collected by simulate_batch."""

    replicates: int
    window_phi: dict[tuple[int, int], np.ndarray]
    window_avg_mean: dict[tuple[int, int], np.ndarray]
    window_mse: dict[tuple[int, int], np.ndarray]
    gamma_phi: dict[int, np.ndarray]
    gamma_mse: dict[int, np.ndarray]
    queue_peak: float
    slot0: np.ndarray | None


def simulate_batch(
    segments,
    scheduler,
    utility: UtilityFunction,
    replicates: int,
    base_seed: int,
    *,
    windows=(),
    gamma_slots=(),
    x_star=None,
    force_first_state: int | None = None,
    record_slot0: bool = False,
    track_queues: bool = False,
) -> SimulationStats:
    """Advance all replicates in lockstep and collect checkpoint samples.

    segments is a list of (model, slot_count) pairs simulated back to back
    without resetting the scheduler. windows is a list of (start, end) slot
    ranges; for each, the per-replicate utility of the windowed decision
    average is recorded (plus squared distance to x_star when given).
    gamma_slots lists slot indices t at which phi(gamma[t]) is recorded; only
    schedulers whose state carries gamma support this.

    Replicate r consumes the uniform stream of default_rng(base_seed + r), one
    draw per slot, exactly as run_trial does. Schedulers without batch support
    (the fixed-theta policy) fall back to per-replicate scalar simulation with
    live generators, preserving those semantics including extra coin draws.
    """
    segments = [(m, int(s)) for m, s in segments]
    total = sum(s for _, s in segments)
    if total < 1:
        raise ValueError("nothing to simulate")
    n = segments[0][0].n
    windows = [(int(a), int(b)) for a, b in windows]
    for a, b in windows:
        if not 0 <= a < b <= total:
            raise ValueError(f"window ({a}, {b}) outside the simulated range")
    gamma_slots = sorted({int(t) for t in gamma_slots})
    if gamma_slots and not (0 <= gamma_slots[0] and gamma_slots[-1] < total):
        raise ValueError("gamma slots outside the simulated range")
    boundary = {a for a, _ in windows} | {b for _, b in windows}

    if hasattr(scheduler, "start_batch"):
        snaps, gamma_raw, queue_peak, slot0 = _run_batch(
            segments, scheduler, replicates, base_seed, n, total, boundary,
            set(gamma_slots), force_first_state, record_slot0, track_queues,
        )
    else:
        snaps, gamma_raw, queue_peak, slot0 = _run_scalar_fallback(
            segments, scheduler, replicates, base_seed, n, total, boundary,
            set(gamma_slots), force_first_state, record_slot0, track_queues,
        )

    x_star_arr = None if x_star is None else np.asarray(x_star, dtype=float)
    window_phi: dict[tuple[int, int], np.ndarray] = {}
    window_avg_mean: dict[tuple[int, int], np.ndarray] = {}
    window_mse: dict[tuple[int, int], np.ndarray] = {}
    for a, b in windows:
        avg = (snaps[b] - snaps[a]) / (b - a)
        window_phi[(a, b)] = np.atleast_1d(utility.value(avg))
        window_avg_mean[(a, b)] = avg.mean(axis=0)
        if x_star_arr is not None:
            diff = avg - x_star_arr
            window_mse[(a, b)] = (diff * diff).sum(axis=1)
    gamma_phi = {t: np.atleast_1d(utility.value(g)) for t, g in gamma_raw.items()}
    gamma_mse = {}
    if x_star_arr is not None:
        for t, g in gamma_raw.items():
            diff = g - x_star_arr
            gamma_mse[t] = (diff * diff).sum(axis=1)
    return SimulationStats(
        replicates=replicates,
        window_phi=window_phi,
        window_avg_mean=window_avg_mean,
        window_mse=window_mse,
        gamma_phi=gamma_phi,
        gamma_mse=gamma_mse,
        queue_peak=queue_peak,
        slot0=slot0,
    )


def _zero_prob_fallback_index(probs: np.ndarray) -> int:
    # mirror of sample_state's guard for u beyond the accumulated mass
    k = len(probs) - 1
    while k > 0 and probs[k] <= 0.0:
        k -= 1
    return k


def _run_batch(
    segments, scheduler, replicates, base_seed, n, total, boundary, gamma_set,
    force_first_state, record_slot0, track_queues,
):
    uniforms = np.empty((replicates, total))
    for r in range(replicates):
        uniforms[r] = np.random.default_rng(base_seed + r).random(total)
    state = scheduler.start_batch(replicates, n)
    if gamma_set and not hasattr(state, "gamma"):
        raise ValueError("gamma checkpoints require a weighted-average scheduler")
    musum = np.zeros((replicates, n))
    snaps: dict[int, np.ndarray] = {}
    if 0 in boundary:
        snaps[0] = musum.copy()
    gamma_raw: dict[int, np.ndarray] = {}
    queue_peak = 0.0
    slot0 = None
    mu = np.empty((replicates, n))
    t = 0
    for seg_model, slots in segments:
        probs = seg_model.state_probs()
        cum = np.cumsum(probs)
        acts = [s.actions for s in seg_model.states]
        nstates = len(acts)
        fallback = _zero_prob_fallback_index(probs)
        for _ in range(slots):
            idx = np.searchsorted(cum, uniforms[:, t], side="right")
            if nstates > 1:
                idx = np.where(idx >= nstates, fallback, idx)
            else:
                idx = np.zeros(replicates, dtype=np.intp)
            if t == 0 and force_first_state is not None:
                idx[:] = force_first_state
            w = scheduler.weights(state)
            for s_i in range(nstates):
                rows = np.nonzero(idx == s_i)[0]
                if rows.size == 0:
                    continue
                a = acts[s_i]
                scores = (w[rows][:, None, :] * a[None, :, :]).sum(axis=2)
                mu[rows] = a[np.argmax(scores, axis=1)]
            if t == 0 and record_slot0:
                slot0 = mu.copy()
            state = scheduler.update(state, mu)
            if track_queues and isinstance(state, DppState):
                queue_peak = max(queue_peak, float(np.max(state.queues)))
            musum += mu
            if t in gamma_set:
                gamma_raw[t] = state.gamma.copy()
            t += 1
            if t in boundary:
                snaps[t] = musum.copy()
    return snaps, gamma_raw, queue_peak, slot0


def _run_scalar_fallback(
    segments, scheduler, replicates, base_seed, n, total, boundary, gamma_set,
    force_first_state, record_slot0, track_queues,
):
    snap_slots = sorted(boundary)
    snaps = {s: np.empty((replicates, n)) for s in snap_slots}
    gamma_raw = {g: np.empty((replicates, n)) for g in gamma_set}
    queue_peak = 0.0
    slot0 = np.empty((replicates, n)) if record_slot0 else None
    for r in range(replicates):
        rng = np.random.default_rng(base_seed + r)
        state = scheduler.start(n)
        if gamma_set and not hasattr(state, "gamma"):
            raise ValueError("gamma checkpoints require a weighted-average scheduler")
        musum = np.zeros(n)
        if 0 in boundary:
            snaps[0][r] = musum
        t = 0
        for seg_model, slots in segments:
            for _ in range(slots):
                u = rng.random()
                k = sample_state(seg_model, u)
                if t == 0 and force_first_state is not None:
                    k = force_first_state
                mu, state = scheduler.step(state, seg_model.states[k].actions, rng)
                if t == 0 and record_slot0:
                    slot0[r] = mu
                if track_queues and isinstance(state, DppState):
                    queue_peak = max(queue_peak, float(np.max(state.queues)))
                musum += mu
                if t in gamma_set:
                    gamma_raw[t][r] = state.gamma
                t += 1
                if t in boundary:
                    snaps[t][r] = musum
    return snaps, gamma_raw, queue_peak, slot0


# ---------------------------------------------------------------------------
# estimators

def _stderr(samples: np.ndarray) -> float:
    if samples.size < 2:
        return 0.0
    return float(np.std(samples, ddof=1) / math.sqrt(samples.size))


def theoretical_bound(
    kind: str,
    G: float,
    mu_norm_sq: float,
    alpha: float | None = None,
    phi_opt: float | None = None,
    phi_zero: float | None = None,
    eta: float | None = None,
    T: int | None = None,
) -> float:
    """Closed-form convergence bound for the requested scheduler kind.

    Gap kinds: "run", "exp", "fw2" bound phi_opt minus the expected utility of
    the relevant average at horizon T. MSE kinds "run-mse", "exp-mse",
    "fw2-mse" bound the expected squared distance to x_star and require
    alpha > 0. Natural logarithm throughout.
    """
    if T is None or T < 1:
        raise ValueError("T must be a horizon >= 1")

    def require(**named):
        for name, val in named.items():
            if val is None:
                raise ValueError(f"{kind} bound requires {name}")

    if kind == "run":
        return G * mu_norm_sq * (1.0 + math.log(T)) / (2.0 * T)
    if kind == "exp":
        require(phi_opt=phi_opt, phi_zero=phi_zero, eta=eta)
        return (phi_opt - phi_zero) / (eta * T) + eta * G * mu_norm_sq / 2.0
    if kind == "fw2":
        return 2.0 * G * mu_norm_sq / (T + 1)
    if kind in ("run-mse", "exp-mse", "fw2-mse"):
        require(alpha=alpha)
        if alpha <= 0:
            raise ValueError("alpha must be positive for MSE bounds")
        if kind == "run-mse":
            return G * mu_norm_sq * (1.0 + math.log(T)) / (alpha * T)
        if kind == "exp-mse":
            require(phi_opt=phi_opt, phi_zero=phi_zero, eta=eta)
            return 2.0 * (phi_opt - phi_zero) / (alpha * eta * T) + eta * G * mu_norm_sq / alpha
        return 4.0 * G * mu_norm_sq / (alpha * (T + 1))
    raise ValueError(f"unknown scheduler kind {kind!r}")


def _gap_bound(spec: dict, metric: str, G, M2, phi_opt, phi_zero, T) -> float:
    """Bound column for estimate_gap; nan when no theorem covers the pair."""
    if spec["kind"] == "run" and metric == "mu-bar":
        return theoretical_bound("run", G, M2, T=T)
    if spec["kind"] == "exp" and metric == "mu-bar":
        return theoretical_bound(
            "exp", G, M2, phi_opt=phi_opt, phi_zero=phi_zero, eta=spec["eta"], T=T
        )
    if spec["kind"] == "fw2" and metric == "gamma":
        return theoretical_bound("fw2", G, M2, T=T)
    return float("nan")


def estimate_gap(config: ExperimentConfig) -> GapSeries:
    """Per-horizon estimate of phi_opt - E[phi(mu_bar[T])] with stderr and bound.

    With metric "gamma" the estimate uses phi(gamma[T-1]) instead, the quantity
    the 2/(t+2) schedule controls directly.
    """
    if config.mode != "gap":
        raise ValueError("estimate_gap requires a gap-mode config")
    model, utility = config.model, config.utility
    spec = parse_scheduler_selector(config.scheduler)
    scheduler = make_scheduler(config.scheduler, utility, model.box)
    phi_opt = solve_phi_opt(model, utility, config.phi_opt_tol).phi_opt
    t_max = max(config.horizons)
    if config.metric == "gamma":
        stats = simulate_batch(
            [(model, t_max)], scheduler, utility, config.replicates, config.base_seed,
            gamma_slots=[T - 1 for T in config.horizons],
        )
        samples = {T: stats.gamma_phi[T - 1] for T in config.horizons}
    else:
        stats = simulate_batch(
            [(model, t_max)], scheduler, utility, config.replicates, config.base_seed,
            windows=[(0, T) for T in config.horizons],
        )
        samples = {T: stats.window_phi[(0, T)] for T in config.horizons}
    G = utility.smoothness_constant(model.box)
    M2 = model.box.norm_sq()
    phi_zero = float(utility.value(np.zeros(model.n)))
    gap_mean, gap_stderr, bound = [], [], []
    for T in config.horizons:
        vals = samples[T]
        gap_mean.append(phi_opt - float(np.mean(vals)))
        gap_stderr.append(_stderr(vals))
        bound.append(_gap_bound(spec, config.metric, G, M2, phi_opt, phi_zero, T))
    return GapSeries(
        horizons=config.horizons,
        gap_mean=np.array(gap_mean),
        gap_stderr=np.array(gap_stderr),
        bound=np.array(bound),
        phi_opt=phi_opt,
    )


def estimate_mse(config: ExperimentConfig) -> MseSeries:
    """Per-horizon mean squared distance to x_star with the matching bound.

    The averaging target follows the scheduler: mu_bar[T] for run/exp (and
    dpp, which gets no bound), gamma[T] for fw2. Requires strong concavity.
    """
    if config.mode != "mse":
        raise ValueError("estimate_mse requires an mse-mode config")
    model, utility = config.model, config.utility
    alpha = utility.strong_concavity_constant(model.box)
    if alpha <= 0.0:
        raise ValueError("alpha is zero")
    spec = parse_scheduler_selector(config.scheduler)
    scheduler = make_scheduler(config.scheduler, utility, model.box)
    sol = solve_phi_opt(model, utility, MSE_XSTAR_TOL)
    G = utility.smoothness_constant(model.box)
    M2 = model.box.norm_sq()
    phi_zero = float(utility.value(np.zeros(model.n)))
    t_max = max(config.horizons)
    if spec["kind"] == "fw2":
        stats = simulate_batch(
            [(model, t_max + 1)], scheduler, utility, config.replicates,
            config.base_seed, gamma_slots=list(config.horizons), x_star=sol.x_star,
        )
        samples = {T: stats.gamma_mse[T] for T in config.horizons}
    else:
        stats = simulate_batch(
            [(model, t_max)], scheduler, utility, config.replicates,
            config.base_seed, windows=[(0, T) for T in config.horizons],
            x_star=sol.x_star,
        )
        samples = {T: stats.window_mse[(0, T)] for T in config.horizons}
    mse_mean, mse_stderr, bound = [], [], []
    for T in config.horizons:
        vals = samples[T]
        mse_mean.append(float(np.mean(vals)))
        mse_stderr.append(_stderr(vals))
        if spec["kind"] == "run":
            bound.append(theoretical_bound("run-mse", G, M2, alpha=alpha, T=T))
        elif spec["kind"] == "exp":
            bound.append(
                theoretical_bound(
                    "exp-mse", G, M2, alpha=alpha, phi_opt=sol.phi_opt,
                    phi_zero=phi_zero, eta=spec["eta"], T=T,
                )
            )
        elif spec["kind"] == "fw2":
            bound.append(theoretical_bound("fw2-mse", G, M2, alpha=alpha, T=T))
        else:
            bound.append(float("nan"))
    return MseSeries(
        horizons=config.horizons,
        mse_mean=np.array(mse_mean),
        mse_stderr=np.array(mse_stderr),
        bound=np.array(bound),
        x_star=sol.x_star,
        phi_opt=sol.phi_opt,
    )


def converse_run(scheduler, horizons, replicates: int, seed: int) -> ConverseReport:
    """Adversarial PMF choice against a statistics-unaware scheduler.

    Probes theta = P[mu[0] = (1, 0) | first state has both links ON] by forcing
    that state at slot 0, picks PMF A when theta >= 1/2 (else B), then
    estimates the utility gap under the chosen PMF at each horizon and reports
    it against the 1/(35 T) floor. scheduler is a selector string or an object
    with start/step (e.g. fixed_theta_policy(theta)).
    """
    horizons = tuple(int(T) for T in horizons)
    if not horizons or any(T < 2 for T in horizons):
        raise ValueError("converse horizons must be >= 2")
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ValueError("horizons must be strictly increasing")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    model_a = builtin_converse_model("A")
    model_b = builtin_converse_model("B")
    utility = Log1pUtility(np.ones(model_a.n), model_a.box)
    if isinstance(scheduler, str):
        scheduler = make_scheduler(scheduler, utility, model_a.box)

    probe = simulate_batch(
        [(model_a, 1)], scheduler, utility, replicates, seed,
        force_first_state=1, record_slot0=True,
    )
    theta = float(np.mean(np.all(probe.slot0 == np.array([1.0, 0.0]), axis=1)))
    chosen_pmf = "A" if theta >= 0.5 else "B"
    chosen_model = model_a if chosen_pmf == "A" else model_b

    phi_opt = solve_phi_opt(chosen_model, utility, 1e-8).phi_opt
    stats = simulate_batch(
        [(chosen_model, max(horizons))], scheduler, utility, replicates, seed,
        windows=[(0, T) for T in horizons],
    )
    gap_mean, gap_stderr, floor = [], [], []
    for T in horizons:
        vals = stats.window_phi[(0, T)]
        gap_mean.append(phi_opt - float(np.mean(vals)))
        gap_stderr.append(_stderr(vals))
        floor.append(1.0 / (CONVERSE_FLOOR_COEFF * T))
    return ConverseReport(
        theta=theta,
        chosen_pmf=chosen_pmf,
        horizons=horizons,
        gap_mean=np.array(gap_mean),
        gap_stderr=np.array(gap_stderr),
        floor=np.array(floor),
        phi_opt=phi_opt,
    )


def adaptation_run(
    model_a: ChannelModel,
    model_b: ChannelModel,
    t0: int,
    scheduler,
    windows,
    replicates: int,
    seed: int,
    utility: UtilityFunction,
) -> AdaptationReport:
    """Distribution switch at t0 without resetting the scheduler.

    Simulates model_a for slots < t0, model_b afterwards; for each window
    length T reports the mean gap of phi of the windowed decision average
    (slots t0 .. t0+T-1) against model_b's certified optimum.
    """
    if t0 < 1:
        raise ValueError("t0 must be >= 1")
    windows = tuple(int(w) for w in windows)
    if not windows or any(w < 1 for w in windows):
        raise ValueError("window lengths must be >= 1")
    for m in (model_a, model_b):
        report = validate_model(m)
        if not report.ok:
            raise ModelValidationError(report)
    if model_a.box != model_b.box or len(model_a.states) != len(model_b.states):
        raise ValueError("structural mismatch between the two models")
    for sa, sb in zip(model_a.states, model_b.states):
        if not np.array_equal(sa.actions, sb.actions):
            raise ValueError(f"structural mismatch: state {sa.name!r} action sets differ")
    if utility.box is None:
        utility = utility.with_box(model_a.box)
    if isinstance(scheduler, str):
        scheduler = make_scheduler(scheduler, utility, model_a.box)

    phi_opt = solve_phi_opt(model_b, utility, 1e-8).phi_opt
    stats = simulate_batch(
        [(model_a, t0), (model_b, max(windows))], scheduler, utility, replicates,
        seed, windows=[(t0, t0 + w) for w in windows],
    )
    gap_mean, gap_stderr = [], []
    for w in windows:
        vals = stats.window_phi[(t0, t0 + w)]
        gap_mean.append(phi_opt - float(np.mean(vals)))
        gap_stderr.append(_stderr(vals))
    return AdaptationReport(
        windows=windows,
        gap_mean=np.array(gap_mean),
        gap_stderr=np.array(gap_stderr),
        phi_opt=phi_opt,
    )
