"""Streaming solvers for robust linear and ReLU regression.

The main method performs sign (l1) SGD with a geometric step size
G * lam^{-k}, lam > 1, from x0 = 0.  Square-root step decay and
GLM-Tron (l2 residual updates for ReLU links) are provided as
baselines.  ``recommend_lambda``/``recommend_G`` map problem size,
corruption level, and horizon to admissible parameters.

All randomness flows through per-seed substreams: SeedSequence(seed)
spawns [signal, measurement, corruption-indicator, corruption-noise]
children, so toggling the corruption variant never perturbs the
measurement draws of a run.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .corruption import (
    AdditiveOblivious,
    CorruptionSpec,
    NoCorruption,
    ResidualSignAdversary,
    SignFlip,
)
from .measurement import (
    DatasetRows,
    MeasurementModel,
    UNIT_NORM_RTOL,
    sample_block,
)

METHODS = (
    "sgd_exp_linear",
    "sgd_exp_relu",
    "sgd_root_linear",
    "sgd_root_relu",
    "glmtron",
)
GLMTRON_SCHEDULES = ("const", "root", "exp")

#: Theorem-side dimension thresholds: ctilde * factor / sqrt(d) must stay
#: below 3/7 (linear) or 1 (relu) for the convergence guarantee to apply.
DIM_CONDITION = {"linear": 3.0 / 7.0, "relu": 1.0}
#: Rate constants R below these thresholds make the failure probability vacuous.
R_THRESHOLD = {"linear": 225.0, "relu": 400.0}


@dataclass(frozen=True)
class SolverSpec:
    """Method plus the parameters it needs; unused fields stay None."""

    method: str
    d: int
    T: int
    lam: Optional[float] = None
    G: Optional[float] = None
    gamma: Optional[float] = None
    schedule: Optional[str] = None
    m: Optional[int] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.d < 1:
            raise ValueError("dimension must be at least 1")
        if self.T < 0:
            raise ValueError("horizon must be nonnegative")
        if self.method.startswith("sgd_exp"):
            if self.lam is None or not self.lam > 1.0:
                raise ValueError("sgd_exp requires lam > 1")
            if self.G is None or not self.G > 0.0:
                raise ValueError("sgd_exp requires G > 0")
        elif self.method.startswith("sgd_root"):
            if self.gamma is None or not self.gamma > 0.0:
                raise ValueError("sgd_root requires gamma > 0")
        else:  # glmtron
            if self.schedule not in GLMTRON_SCHEDULES:
                raise ValueError(f"glmtron schedule must be one of {GLMTRON_SCHEDULES}")
            if self.m is None or self.m < 1:
                raise ValueError("glmtron requires m >= 1")
            if self.schedule == "exp" and (self.lam is None or not self.lam > 1.0):
                raise ValueError("glmtron exp schedule requires lam > 1")


@dataclass
class SolverState:
    """Value-type iterate: current x and iteration index k."""

    x: np.ndarray
    k: int = 0


@dataclass(frozen=True)
class ParamRecommendation:
    """Step-decay recommendation with theorem-precondition diagnostics.

    ``lam_sq_minus_1`` carries lam^2 - 1 at full precision (forming it
    from ``lam`` would lose ~8 digits for the tiny decays used here).
    """

    lam: float
    lam_sq_minus_1: float
    g_min: float
    preconditions_ok: bool
    warnings: tuple = ()


@dataclass(frozen=True)
class StreamSpec:
    """Measurement model + corruption channel + response link.

    For DatasetRows models, ``responses`` holds the raw responses
    aligned with the matrix rows; the engine rescales each drawn pair by
    the row norm so the solver always sees unit-norm measurements of an
    equivalent system.
    """

    model: MeasurementModel
    corruption: CorruptionSpec = field(default_factory=NoCorruption)
    relu: bool = False
    responses: Optional[np.ndarray] = None

    def __post_init__(self):
        if isinstance(self.model, DatasetRows):
            if self.responses is None:
                raise ValueError("DatasetRows stream requires responses")
            if len(self.responses) != self.model.n_rows:
                raise ValueError("responses length must match dataset rows")


@dataclass
class Checkpoint:
    k: int
    relative_error: Optional[float]
    clean_loss: Optional[float]
    elapsed_seconds: float


@dataclass
class Trajectory:
    solver: str
    seed: int
    checkpoints: list
    x_final: np.ndarray
    fingerprint: str = ""
    step_law_violations: int = 0
    relu_gate_violations: int = 0
    iterates: Optional[np.ndarray] = None  # (n_checkpoints, d) when recorded
    iterate_ks: Optional[np.ndarray] = None
    hit_k: Optional[int] = None  # first k with Y_k >= hitting level, if tracked


def recommend_lambda(
    d: int,
    p: float,
    T: int,
    R: float,
    ctilde: float,
    mode: str = "massart",
    regime: str = "linear",
    x_norm_bound: Optional[float] = None,
) -> ParamRecommendation:
    """Decay parameter lam = sqrt(1 + ctilde^2 f^2 / (R d ln^2 T)).

    The corruption margin f is (1 - 2p) for semi-random (Massart)
    corruption and (1 - p) for symmetric oblivious corruption.  Natural
    logarithms throughout.  Diagnostic warnings flag settings outside
    the convergence guarantee; they do not block the recommendation.
    """
    if mode not in ("massart", "oblivious"):
        raise ValueError(f"mode must be 'massart' or 'oblivious', got {mode!r}")
    if regime not in ("linear", "relu"):
        raise ValueError(f"regime must be 'linear' or 'relu', got {regime!r}")
    if d < 1:
        raise ValueError("dimension must be at least 1")
    if T <= 1:
        raise ValueError("horizon T must be at least 2")
    if not R > 0:
        raise ValueError("R must be positive")
    if not ctilde > 0:
        raise ValueError("ctilde must be positive")
    if p < 0:
        raise ValueError("p must be nonnegative")
    if mode == "massart" and p >= 0.5:
        raise ValueError("massart mode requires p < 0.5")
    if mode == "oblivious" and p >= 1.0:
        raise ValueError("oblivious mode requires p < 1")

    factor = (1.0 - 2.0 * p) if mode == "massart" else (1.0 - p)
    log_t = math.log(T)
    q = (ctilde * factor) ** 2 / (R * d * log_t**2)
    lam = math.sqrt(1.0 + q)

    warnings = []
    ok = True
    margin = ctilde * factor / math.sqrt(d)
    if margin >= DIM_CONDITION[regime]:
        ok = False
        warnings.append(
            f"dimension condition violated: ctilde*factor/sqrt(d) = {margin:.4g} "
            f">= {DIM_CONDITION[regime]:.4g}"
        )
    if margin / (3.0 * log_t) >= 1.0 / 7.0:
        ok = False
        warnings.append(
            f"log condition violated: ctilde*factor/(3 sqrt(d) ln T) = "
            f"{margin / (3.0 * log_t):.4g} >= 1/7"
        )
    if R <= R_THRESHOLD[regime]:
        warnings.append(
            f"R = {R:.4g} <= {R_THRESHOLD[regime]:.0f}: failure probability "
            f"bound is vacuous in the {regime} regime"
        )

    g_min = 0.0 if x_norm_bound is None else x_norm_bound * math.sqrt(2.0 * q)
    return ParamRecommendation(
        lam=lam,
        lam_sq_minus_1=q,
        g_min=g_min,
        preconditions_ok=ok,
        warnings=tuple(warnings),
    )


def recommend_G(lam: float, x_norm_bound: float) -> float:
    """Minimal admissible initial step scale, x_norm_bound * sqrt(2 (lam^2 - 1))."""
    if not lam > 1.0:
        raise ValueError("lam must exceed 1")
    if x_norm_bound < 0:
        raise ValueError("x_norm_bound must be nonnegative")
    return x_norm_bound * math.sqrt(2.0 * (lam * lam - 1.0))


def _require_unit(a: np.ndarray) -> None:
    norm = np.linalg.norm(a)
    if abs(norm - 1.0) > UNIT_NORM_RTOL:
        raise ValueError(f"measurement vector must be unit norm, got ||a|| = {norm!r}")


def step_sgd_exp_linear(
    state: SolverState, a: np.ndarray, y: float, G: float, lam: float
) -> SolverState:
    """x' = x + G lam^{-k} sign(y - <x, a>) a, with sign(0) = 0."""
    _require_unit(a)
    if not G > 0:
        raise ValueError("G must be positive")
    if not lam > 1:
        raise ValueError("lam must exceed 1")
    s = np.sign(y - float(np.dot(state.x, a)))
    x_new = state.x + (G * lam ** (-state.k) * s) * a
    return SolverState(x=x_new, k=state.k + 1)


def step_sgd_exp_relu(
    state: SolverState, a: np.ndarray, y: float, G: float, lam: float
) -> SolverState:
    """ReLU variant: update only when <x, a> >= 0, residual against max(0, <x, a>)."""
    _require_unit(a)
    if not G > 0:
        raise ValueError("G must be positive")
    if not lam > 1:
        raise ValueError("lam must exceed 1")
    dot = float(np.dot(state.x, a))
    if dot < 0.0:
        return SolverState(x=state.x.copy(), k=state.k + 1)
    s = np.sign(y - max(dot, 0.0))
    x_new = state.x + (G * lam ** (-state.k) * s) * a
    return SolverState(x=x_new, k=state.k + 1)


def step_sgd_root(
    state: SolverState, a: np.ndarray, y: float, gamma: float, relu: bool = False
) -> SolverState:
    """Square-root decay baseline: step size gamma (k+1)^{-1/2}."""
    _require_unit(a)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    dot = float(np.dot(state.x, a))
    if relu:
        if dot < 0.0:
            return SolverState(x=state.x.copy(), k=state.k + 1)
        s = np.sign(y - max(dot, 0.0))
    else:
        s = np.sign(y - dot)
    x_new = state.x + (gamma * (state.k + 1) ** (-0.5) * s) * a
    return SolverState(x=x_new, k=state.k + 1)


def step_glmtron(
    state: SolverState,
    a: np.ndarray,
    y: float,
    schedule: str,
    m: int,
    lam: Optional[float] = None,
) -> SolverState:
    """GLM-Tron with ReLU link: x' = x + eta_k (y - max(0, <x, a>)) a.

    eta_k is 1/m (const), (k+1)^{-1/2}/m (root), or lam^{-k}/m (exp).
    """
    if schedule not in GLMTRON_SCHEDULES:
        raise ValueError(f"glmtron schedule must be one of {GLMTRON_SCHEDULES}")
    if m < 1:
        raise ValueError("m must be at least 1")
    eta = _glmtron_eta(schedule, m, lam, state.k)
    pred = max(float(np.dot(state.x, a)), 0.0)
    x_new = state.x + (eta * (y - pred)) * a
    return SolverState(x=x_new, k=state.k + 1)


def _glmtron_eta(schedule: str, m: int, lam: Optional[float], k: int) -> float:
    if schedule == "const":
        return 1.0 / m
    if schedule == "root":
        return (k + 1) ** (-0.5) / m
    if lam is None or not lam > 1.0:
        raise ValueError("glmtron exp schedule requires lam > 1")
    return lam ** (-k) / m


def _spawn_streams(seed: int):
    """Per-seed substreams: [signal, measurement, xi, noise]."""
    children = np.random.SeedSequence(seed).spawn(4)
    return [np.random.default_rng(c) for c in children]


def signal_rng(seed: int) -> np.random.Generator:
    """Generator for drawing the planted signal of a given seed."""
    return _spawn_streams(seed)[0]


def run(
    spec: SolverSpec,
    stream: StreamSpec,
    x_true: Optional[np.ndarray] = None,
    checkpoint_every: int = 1000,
    seed: int = 0,
    **kwargs,
) -> Trajectory:
    """Run one solver over one stream; deterministic given the seed."""
    return run_batch(spec, stream, [seed], x_true=x_true, checkpoint_every=checkpoint_every, **kwargs)[0]


def run_batch(
    spec: SolverSpec,
    stream: StreamSpec,
    seeds,
    x_true: Optional[np.ndarray] = None,
    checkpoint_every: int = 1000,
    validate_steps: bool = True,
    record_iterates: bool = False,
    x0: Optional[np.ndarray] = None,
    hitting_level: Optional[float] = None,
    label: Optional[str] = None,
    per_seed_G: Optional[np.ndarray] = None,
    per_seed_gamma: Optional[np.ndarray] = None,
) -> list:
    """Run the same solver/stream under several seeds in lockstep.

    Each seed owns its substreams, so the per-seed trajectories are
    bitwise identical to solo ``run`` calls.  ``x_true`` may be (d,)
    shared or (S, d) per seed; it is required for synthetic streams
    (it generates the clean responses) and ignored for dataset streams
    except as the relative-error reference.

    ``per_seed_G``/``per_seed_gamma`` override the SolverSpec scalars
    with one step scale per seed (signal-norm-matched scales differ by
    seed).

    With ``hitting_level`` set (sgd_exp methods only), tracks
    Y_k = lam^{2k} ||x_true - x_k||^2 / G^2 each step and records the
    first k where Y_k reaches the level.
    """
    if checkpoint_every < 1:
        raise ValueError("checkpoint_every must be at least 1")
    seeds = list(seeds)
    S, d, T = len(seeds), spec.d, spec.T
    method = spec.method
    is_dataset = isinstance(stream.model, DatasetRows)
    if stream.model.d != d:
        raise ValueError(
            f"dimension mismatch: solver d={d}, measurement model d={stream.model.d}"
        )
    if x_true is None and not is_dataset:
        raise ValueError("x_true is required for synthetic streams")
    if hitting_level is not None and not method.startswith("sgd_exp"):
        raise ValueError("hitting-time tracking requires an sgd_exp method")

    Xt = None
    if x_true is not None:
        Xt = np.atleast_2d(np.asarray(x_true, dtype=float))
        if Xt.shape == (1, d) and S > 1:
            Xt = np.repeat(Xt, S, axis=0)
        if Xt.shape != (S, d):
            raise ValueError(f"x_true must have shape ({S}, {d}) or ({d},)")
        xt_norms = np.linalg.norm(Xt, axis=1)

    if x0 is None:
        x = np.zeros((S, d))
    else:
        x0 = np.asarray(x0, dtype=float)
        x = np.repeat(np.atleast_2d(x0), S, axis=0) if x0.ndim == 1 else x0.copy()
        if x.shape != (S, d):
            raise ValueError(f"x0 must have shape ({d},) or ({S}, {d})")

    gens = [_spawn_streams(s) for s in seeds]
    meas_rngs = [g[1] for g in gens]
    xi_rngs = [g[2] for g in gens]
    noise_rngs = [g[3] for g in gens]

    corr = stream.corruption
    p = corr.p
    is_flip = isinstance(corr, SignFlip)
    is_adversary = isinstance(corr, ResidualSignAdversary)
    is_oblivious = isinstance(corr, AdditiveOblivious)

    relu_response = stream.relu
    relu_solver = method.endswith("_relu") or method == "glmtron"
    is_exp = method.startswith("sgd_exp")
    is_root = method.startswith("sgd_root")
    is_tron = method == "glmtron"

    if is_dataset:
        resp = np.asarray(stream.responses, dtype=float)
        row_norms = stream.model.row_norms

    G_vec = gamma_vec = None
    if is_exp:
        G_vec = np.full(S, spec.G) if per_seed_G is None else np.asarray(per_seed_G, dtype=float)
        if G_vec.shape != (S,) or not np.all(G_vec > 0):
            raise ValueError("per_seed_G must be positive with one entry per seed")
    if is_root:
        gamma_vec = (
            np.full(S, spec.gamma)
            if per_seed_gamma is None
            else np.asarray(per_seed_gamma, dtype=float)
        )
        if gamma_vec.shape != (S,) or not np.all(gamma_vec > 0):
            raise ValueError("per_seed_gamma must be positive with one entry per seed")

    track_hit = hitting_level is not None
    if track_hit:
        lam2 = spec.lam * spec.lam
        g_sq = G_vec * G_vec
        lam2k = 1.0
        hit_k = np.full(S, -1, dtype=int)
        y0 = (xt_norms**2) / g_sq
        hit_k[y0 >= hitting_level] = 0

    step_viol = np.zeros(S, dtype=int)
    gate_viol = np.zeros(S, dtype=int)

    checkpoints = [[] for _ in range(S)]
    snaps, snap_ks = ([], []) if record_iterates else (None, None)
    t0 = time.perf_counter()

    def _record(k):
        elapsed = time.perf_counter() - t0
        for s_i in range(S):
            rel = (
                float(np.linalg.norm(Xt[s_i] - x[s_i]) / xt_norms[s_i])
                if Xt is not None and xt_norms[s_i] > 0
                else None
            )
            checkpoints[s_i].append(
                Checkpoint(k=k, relative_error=rel, clean_loss=None, elapsed_seconds=elapsed)
            )
        if record_iterates:
            snaps.append(x.copy())
            snap_ks.append(k)

    _record(0)

    block = max(1, min(2048, T, int(4_000_000 / max(S * d, 1)) or 1))
    k = 0
    while k < T:
        n = min(block, T - k)
        A = np.empty((S, n, d))
        idx = np.empty((S, n), dtype=int) if is_dataset else None
        for s_i in range(S):
            Ab, ib = sample_block(stream.model, meas_rngs[s_i], n)
            A[s_i] = Ab
            if is_dataset:
                idx[s_i] = ib
        XI = np.empty((S, n))
        for s_i in range(S):
            XI[s_i] = xi_rngs[s_i].random(n)
        NU = None
        if is_oblivious:
            NU = np.empty((S, n))
            for s_i in range(S):
                NU[s_i] = corr.law.draw(noise_rngs[s_i], n)

        if is_dataset:
            clean = resp[idx] / row_norms[idx]  # (S, n) in unit-row space
            if is_oblivious:
                NU = NU / row_norms[idx]
        else:
            clean = np.einsum("snd,sd->sn", A, Xt)
            if relu_response:
                np.maximum(clean, 0.0, out=clean)

        for j in range(n):
            a = A[:, j, :]
            dot = np.einsum("sd,sd->s", x, a)
            pred_model = np.maximum(dot, 0.0) if relu_response else dot

            y = clean[:, j]
            if p > 0.0:
                hit = XI[:, j] < p
                if is_flip:
                    y = np.where(hit, -y, y)
                elif is_adversary:
                    y = np.where(hit, 2.0 * pred_model - y, y)
                elif is_oblivious:
                    y = y + np.where(hit, NU[:, j], 0.0)

            if is_tron:
                pred = np.maximum(dot, 0.0)
                eta = _glmtron_eta(spec.schedule, spec.m, spec.lam, k)
                coef = eta * (y - pred)
            else:
                if relu_solver:
                    pred = np.maximum(dot, 0.0)
                    gate = dot >= 0.0
                    sgn = np.sign(y - pred) * gate
                else:
                    sgn = np.sign(y - dot)
                stepk = (
                    G_vec * spec.lam ** (-float(k))
                    if is_exp
                    else gamma_vec * (k + 1) ** (-0.5)
                )
                coef = stepk * sgn
                if validate_steps:
                    if is_exp:
                        dn = np.abs(coef) * np.linalg.norm(a, axis=1)
                        moved = sgn != 0.0
                        bad = np.where(
                            moved, np.abs(dn - stepk) > 1e-12 * stepk, dn != 0.0
                        )
                        step_viol += bad
                    if relu_solver:
                        gate_viol += (dot < 0.0) & (coef != 0.0)

            x += coef[:, None] * a
            k += 1

            if track_hit:
                lam2k *= lam2
                yk = lam2k * np.einsum("sd,sd->s", Xt - x, Xt - x) / g_sq
                newly = (hit_k < 0) & (yk >= hitting_level)
                hit_k[newly] = k

            if k % checkpoint_every == 0 or k == T:
                _record(k)

    out = []
    for s_i in range(S):
        out.append(
            Trajectory(
                solver=label or method,
                seed=seeds[s_i],
                checkpoints=checkpoints[s_i],
                x_final=x[s_i].copy(),
                step_law_violations=int(step_viol[s_i]),
                relu_gate_violations=int(gate_viol[s_i]),
                iterates=np.array([sn[s_i] for sn in snaps]) if record_iterates else None,
                iterate_ks=np.array(snap_ks) if record_iterates else None,
                hit_k=(int(hit_k[s_i]) if track_hit and hit_k[s_i] >= 0 else None),
            )
        )
    return out
