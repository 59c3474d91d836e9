"""The decentralized matrix optimizer engine and its three baselines.

Each round is bulk-synchronous: the momentum stage runs for every node,
then the tracker stage (which reads every node's new momentum), then the
iterate stage (which reads every node's new tracker). Stages operate on
immutable snapshots, so per-node work within a stage is order-independent
and results do not depend on how it is parallelized.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import diagnostics, problems
from .diagnostics import MetricsRow, PotentialParams
from .linalg import frobenius_norm, msgn_exact, msgn_newton_schulz, nuclear_norm, spectral_norm
from .noise import NoiseModel, sample_noise
from .topology import MixingSpec, mix_blocks

DEMUON = "demuon"
DSGD = "dsgd"
DSGD_CLIP = "dsgd_clip"
GT_NSGDM = "gt_nsgdm"
ALGORITHMS = (DEMUON, DSGD, DSGD_CLIP, GT_NSGDM)
TRACKER_ALGORITHMS = (DEMUON, GT_NSGDM)

# Dedicated substream tag for the post-run uniform iteration draw, so the
# draw never perturbs (or depends on) the trajectory's noise streams.
_REPORT_STREAM = 0x696F7461


@dataclass(frozen=True)
class ScheduleParams:
    """Step size and momentum weighting, optionally derived from the horizon.

    In theorem mode eta = K^(-(2 alpha - 1)/(3 alpha - 2)) and
    theta = K^(-alpha/(3 alpha - 2)) exactly, and K >= 4 is required.
    """

    eta: float
    theta: float
    horizon: int = 1
    alpha: float = 2.0
    derived_from_theorem: bool = False

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        if not 1.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (1, 2], got {self.alpha}")
        if self.derived_from_theorem:
            if self.horizon < 4:
                raise ValueError(f"theorem schedule needs horizon >= 4, got {self.horizon}")
            eta, theta = _theorem_values(self.horizon, self.alpha)
            if self.eta != eta or self.theta != theta:
                raise ValueError("derived_from_theorem schedule does not match the power law")


def _theorem_values(horizon: int, alpha: float) -> tuple[float, float]:
    k = float(horizon)
    eta = k ** (-(2.0 * alpha - 1.0) / (3.0 * alpha - 2.0))
    theta = k ** (-alpha / (3.0 * alpha - 2.0))
    return eta, theta


def theoretical_schedule(horizon: int, alpha: float = 2.0) -> ScheduleParams:
    """Power-law (eta, theta) for a given horizon K >= 4 and tail index alpha."""
    if horizon < 4:
        raise ValueError(f"theorem schedule needs horizon >= 4, got {horizon}")
    if not 1.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (1, 2], got {alpha}")
    eta, theta = _theorem_values(horizon, alpha)
    return ScheduleParams(eta, theta, horizon, alpha, derived_from_theorem=True)


@dataclass(frozen=True)
class BaselineParams:
    """Constant hyper-parameters of the three baseline update schemes."""

    dsgd_eta: float = 0.01
    clip_eta: float = 10.0
    clip_tau: float = 0.1
    gt_eta: float = 0.1
    gt_theta: float = 0.2

    def __post_init__(self):
        for name in ("dsgd_eta", "clip_eta", "clip_tau", "gt_eta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 < self.gt_theta <= 1.0:
            raise ValueError(f"gt_theta must lie in (0, 1], got {self.gt_theta}")


@dataclass(frozen=True)
class RunState:
    """Per-node (X, M, V) triples entering round `iter`.

    x holds the iterates X^k; m and v hold the previous round's momenta and
    trackers (M^{k-1}, V^{k-1}), both zero before the first round.
    """

    iter: int
    x: np.ndarray
    m: np.ndarray
    v: np.ndarray
    algorithm: str
    orthogonalizer: str = "svd"

    @property
    def n_nodes(self) -> int:
        return self.x.shape[0]


def parse_orthogonalizer(spec: str) -> tuple[str, int]:
    """Parse 'svd' or 'ns:<iters>' into (kind, iters)."""
    if spec == "svd":
        return "svd", 0
    if spec.startswith("ns:"):
        try:
            iters = int(spec[3:])
        except ValueError:
            iters = 0
        if iters >= 1:
            return "ns", iters
    raise ValueError(f"orthogonalizer must be 'svd' or 'ns:<iters>', got {spec!r}")


def initial_state(algorithm: str, n_nodes: int, x0: np.ndarray, orthogonalizer: str = "svd") -> RunState:
    """Replicate a common starting point and zero the momentum/tracker buffers."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    parse_orthogonalizer(orthogonalizer)
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 2:
        raise ValueError(f"starting point must be one m x n matrix, got ndim={x0.ndim}")
    x = np.broadcast_to(x0, (n_nodes,) + x0.shape).copy()
    zeros = np.zeros_like(x)
    return RunState(0, x, zeros, zeros.copy(), algorithm, orthogonalizer)


def _orthogonalize(v: np.ndarray, orthogonalizer: str) -> np.ndarray:
    if not v.any():
        return np.zeros_like(v)
    kind, iters = parse_orthogonalizer(orthogonalizer)
    if kind == "svd":
        return msgn_exact(v)
    return msgn_newton_schulz(v, iters)


def clip_to_frobenius(g: np.ndarray, tau: float) -> np.ndarray:
    """Scale g onto the Frobenius ball of radius tau when it lands outside."""
    norm = float(np.linalg.norm(g))
    if norm <= tau or norm == 0.0:
        return g
    return g * (tau / norm)


def _noisy_gradients(state: RunState, problem, noise_model: NoiseModel):
    """Per-node exact gradients and noise draws for the current round."""
    k = state.iter
    grads = np.stack(
        [problems.exact_gradient(problem, i, state.x[i]) for i in range(state.n_nodes)]
    )
    noise = np.stack(
        [sample_noise(noise_model, problem.m, problem.n, i, k) for i in range(state.n_nodes)]
    )
    return grads, noise


def demuon_step(state: RunState, problem, mixing: MixingSpec, noise_model: NoiseModel, schedule: ScheduleParams):
    """One round of momentum, tracking, and orthogonalized mixing updates."""
    if state.algorithm != DEMUON:
        raise ValueError(f"state built for {state.algorithm!r}, not {DEMUON!r}")
    w = mixing.weights
    grads, noise = _noisy_gradients(state, problem, noise_model)
    m_new = (1.0 - schedule.theta) * state.m + schedule.theta * (grads + noise)
    v_new = mix_blocks(w, state.v + m_new - state.m)
    dirs = np.stack([_orthogonalize(v_new[i], state.orthogonalizer) for i in range(state.n_nodes)])
    x_new = mix_blocks(w, state.x - schedule.eta * dirs)
    info = {"directions": dirs, "eta": schedule.eta, "exact_grads": grads, "noise": noise}
    return replace(state, iter=state.iter + 1, x=x_new, m=m_new, v=v_new), info


def dsgd_step(state: RunState, problem, mixing: MixingSpec, noise_model: NoiseModel, params: BaselineParams):
    """One round of plain stochastic-gradient mixing with constant step size."""
    if state.algorithm != DSGD:
        raise ValueError(f"state built for {state.algorithm!r}, not {DSGD!r}")
    grads, noise = _noisy_gradients(state, problem, noise_model)
    g = grads + noise
    x_new = mix_blocks(mixing.weights, state.x - params.dsgd_eta * g)
    info = {"directions": g, "eta": params.dsgd_eta, "exact_grads": grads, "noise": noise}
    return replace(state, iter=state.iter + 1, x=x_new), info


def dsgd_clip_step(state: RunState, problem, mixing: MixingSpec, noise_model: NoiseModel, params: BaselineParams):
    """One round of clipped stochastic-gradient mixing with decaying step size.

    eta_k = eta/(k+1) and tau_k = tau*(k+1)^(2/5); gradients are clipped onto
    the Frobenius ball of radius tau_k before mixing.
    """
    if state.algorithm != DSGD_CLIP:
        raise ValueError(f"state built for {state.algorithm!r}, not {DSGD_CLIP!r}")
    k = state.iter
    eta_k = params.clip_eta / (k + 1)
    tau_k = params.clip_tau * (k + 1) ** 0.4
    grads, noise = _noisy_gradients(state, problem, noise_model)
    clipped = np.stack([clip_to_frobenius(grads[i] + noise[i], tau_k) for i in range(state.n_nodes)])
    x_new = mix_blocks(mixing.weights, state.x - eta_k * clipped)
    info = {
        "directions": clipped,
        "eta": eta_k,
        "tau": tau_k,
        "exact_grads": grads,
        "noise": noise,
        "clip_norms": [float(np.linalg.norm(clipped[i])) for i in range(state.n_nodes)],
    }
    return replace(state, iter=state.iter + 1, x=x_new), info


def gt_nsgdm_step(state: RunState, problem, mixing: MixingSpec, noise_model: NoiseModel, params: BaselineParams):
    """One round of tracked, Frobenius-normalized momentum mixing.

    Shares the momentum and tracker recursions with the orthogonalized
    engine; only the step direction differs (V/||V||_F, zero when V = 0).
    """
    if state.algorithm != GT_NSGDM:
        raise ValueError(f"state built for {state.algorithm!r}, not {GT_NSGDM!r}")
    w = mixing.weights
    grads, noise = _noisy_gradients(state, problem, noise_model)
    m_new = (1.0 - params.gt_theta) * state.m + params.gt_theta * (grads + noise)
    v_new = mix_blocks(w, state.v + m_new - state.m)
    dirs = np.zeros_like(v_new)
    for i in range(state.n_nodes):
        norm = float(np.linalg.norm(v_new[i]))
        if norm > 0.0:
            dirs[i] = v_new[i] / norm
    x_new = mix_blocks(w, state.x - params.gt_eta * dirs)
    info = {"directions": dirs, "eta": params.gt_eta, "exact_grads": grads, "noise": noise}
    return replace(state, iter=state.iter + 1, x=x_new, m=m_new, v=v_new), info


_STEPS = {DEMUON: demuon_step, DSGD: dsgd_step, DSGD_CLIP: dsgd_clip_step, GT_NSGDM: gt_nsgdm_step}


def step(state: RunState, problem, mixing: MixingSpec, noise_model: NoiseModel, params):
    """Dispatch one round to the state's algorithm."""
    return _STEPS[state.algorithm](state, problem, mixing, noise_model, params)


@dataclass
class RunResult:
    """Full trajectory diagnostics plus the post-run report draw."""

    algorithm: str
    horizon: int
    seed: int
    mixing_rate: float
    rows: list
    iota: int
    grad_nuclear_at_iota: float
    avg_grad_nuclear_mean: float
    consensus_violations: int
    max_tracking_residual: float
    max_avg_iterate_residual: float
    noise_alpha_moment: float
    ball_exited: bool


def run(
    algorithm: str,
    problem,
    mixing: MixingSpec,
    noise_model: NoiseModel,
    params,
    horizon: int | None = None,
    seed: int = 0,
    orthogonalizer: str = "svd",
    x0: np.ndarray | None = None,
    potential_params: PotentialParams | None = None,
    sink=None,
) -> RunResult:
    """Execute K synchronous rounds and report per-iteration diagnostics.

    The reported iteration index is drawn uniformly from {0, ..., K-1} once,
    after the loop, from a substream of `seed`, so the trajectory does not
    depend on the draw. `sink`, when given, receives each MetricsRow as it
    is produced.
    """
    if algorithm == DEMUON:
        if not isinstance(params, ScheduleParams):
            raise TypeError(f"{algorithm} expects ScheduleParams")
    elif not isinstance(params, BaselineParams):
        raise TypeError(f"{algorithm} expects BaselineParams")
    if horizon is None:
        horizon = params.horizon if isinstance(params, ScheduleParams) else None
    if horizon is None or horizon < 1:
        raise ValueError(f"horizon must be a positive integer, got {horizon}")
    if isinstance(params, ScheduleParams) and params.derived_from_theorem and horizon != params.horizon:
        raise ValueError(
            f"theorem schedule was derived for K={params.horizon}, cannot run K={horizon}"
        )
    if problem.n_nodes != mixing.n_nodes:
        raise ValueError(
            f"problem has {problem.n_nodes} nodes but mixing matrix has {mixing.n_nodes}"
        )

    if x0 is None:
        x0 = np.zeros((problem.m, problem.n))
    state = initial_state(algorithm, mixing.n_nodes, x0, orthogonalizer)
    tracked = algorithm in TRACKER_ALGORITHMS
    if tracked:
        eta = params.eta if algorithm == DEMUON else params.gt_eta
        bound = diagnostics.consensus_bound(eta, mixing.mixing_rate, mixing.n_nodes)
    else:
        bound = None

    rows = []
    violations = 0
    max_track = 0.0
    max_ave_resid = 0.0
    noise_moment_sum = 0.0
    noise_draws = 0
    ball_exited = False

    for _ in range(horizon):
        t0 = time.perf_counter()
        x_prev = state.x
        x_mean_prev = x_prev.mean(axis=0)
        state, info = step(state, problem, mixing, noise_model, params)
        k = state.iter - 1

        grads = info["exact_grads"]
        avg_grad = grads.mean(axis=0)
        cons_x = diagnostics.consensus_error(x_prev)
        if bound is not None and cons_x > bound + 1e-9:
            violations += 1

        tracking = cons_v = pot = None
        if tracked:
            tracking = frobenius_norm(state.v.mean(axis=0) - state.m.mean(axis=0))
            cons_v = diagnostics.consensus_error_nuclear(state.v)
            max_track = max(max_track, tracking)
            if potential_params is not None:
                pot = diagnostics.potential(problem, x_prev, state.m, state.v, potential_params)
        if algorithm == DEMUON:
            applied = info["eta"] * info["directions"].mean(axis=0)
            resid = float(np.linalg.norm(state.x.mean(axis=0) - (x_mean_prev - applied)))
            max_ave_resid = max(max_ave_resid, resid)

        for i in range(state.n_nodes):
            noise_moment_sum += nuclear_norm(info["noise"][i]) ** noise_model.alpha
            noise_draws += 1

        if not ball_exited and problem.ball_radius != float("inf"):
            if max(spectral_norm(state.x[i]) for i in range(state.n_nodes)) > problem.ball_radius:
                ball_exited = True
                warnings.warn(
                    f"iterates left the certified ball (radius {problem.ball_radius}) "
                    f"at iteration {k}; the smoothness constant no longer applies",
                    RuntimeWarning,
                    stacklevel=2,
                )

        row = MetricsRow(
            iter=k,
            consensus_error_x=cons_x,
            consensus_bound=bound,
            avg_grad_nuclear=nuclear_norm(avg_grad),
            tracking_residual=tracking,
            consensus_error_v=cons_v,
            potential=pot,
            objective_at_mean=problems.objective_at(problem, x_mean_prev),
            wall_time_ms=(time.perf_counter() - t0) * 1e3,
        )
        rows.append(row)
        if sink is not None:
            sink(row)

    report_rng = np.random.default_rng((seed, _REPORT_STREAM))
    iota = int(report_rng.integers(horizon))
    grad_norms = [row.avg_grad_nuclear for row in rows]
    moment = (noise_moment_sum / noise_draws) ** (1.0 / noise_model.alpha) if noise_draws else 0.0
    return RunResult(
        algorithm=algorithm,
        horizon=horizon,
        seed=seed,
        mixing_rate=mixing.mixing_rate,
        rows=rows,
        iota=iota,
        grad_nuclear_at_iota=grad_norms[iota],
        avg_grad_nuclear_mean=float(np.mean(grad_norms)),
        consensus_violations=violations,
        max_tracking_residual=max_track,
        max_avg_iterate_residual=max_ave_resid,
        noise_alpha_moment=moment,
        ball_exited=ball_exited,
    )
