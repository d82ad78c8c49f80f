"""Config-driven experiment execution: runs, sweeps, aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import corruption as corr_mod
from .config import ConfigError, ExperimentConfig
from .datasets import DatasetMatrix, evaluate_clean_loss, load_csv
from .measurement import (
    DatasetRows,
    GaussianSphere,
    NormalizedIIDSubGaussian,
    NormalizedRademacher,
)
from .solvers import SolverSpec, StreamSpec, recommend_G, run_batch, signal_rng


def build_measurement(config: ExperimentConfig):
    """Instantiate the measurement model; returns (model, dataset-or-None)."""
    spec = config.measurement
    kind = spec["kind"]
    if kind == "gaussian_sphere":
        return GaussianSphere(config.dimension), None
    if kind == "normalized_rademacher":
        return NormalizedRademacher(config.dimension), None
    if kind == "normalized_iid_subgaussian":
        return NormalizedIIDSubGaussian(config.dimension, base=spec["base"]), None
    data = load_csv(
        spec["path"],
        spec["features"],
        spec["response"],
        center=spec["center"],
        z_score=spec["z_score"],
        row_normalize=spec["row_normalize"],
        center_response=spec["center_response"],
        delimiter=spec["delimiter"],
    )
    if data.d != config.dimension:
        raise ConfigError(
            f"measurement.path: dataset has {data.d} features, config dimension is "
            f"{config.dimension}"
        )
    return DatasetRows(data.features), data


def build_corruption(config: ExperimentConfig):
    spec = config.corruption
    kind = spec["kind"]
    if kind == "none":
        return corr_mod.NoCorruption()
    if kind == "sign_flip":
        return corr_mod.SignFlip(spec["p"])
    if kind == "residual_sign":
        return corr_mod.ResidualSignAdversary(spec["p"])
    law = spec["law"]
    noise = (
        corr_mod.Uniform(law["half_width"])
        if law["kind"] == "uniform"
        else corr_mod.Gaussian(law["variance"])
    )
    return corr_mod.AdditiveOblivious(spec["p"], noise)


def build_stream(config: ExperimentConfig):
    """Returns (StreamSpec, DatasetMatrix-or-None)."""
    model, data = build_measurement(config)
    channel = build_corruption(config)
    responses = data.responses if data is not None else None
    return (
        StreamSpec(
            model=model,
            corruption=channel,
            relu=(config.response == "relu"),
            responses=responses,
        ),
        data,
    )


def draw_signals(config: ExperimentConfig):
    """Per-seed planted signals (S, d), or None for dataset experiments."""
    if config.signal is None:
        return None
    d = config.dimension
    kind = config.signal["kind"]
    if kind == "fixed":
        v = np.asarray(config.signal["values"], dtype=float)
        return np.repeat(v[None, :], len(config.seeds), axis=0)
    out = np.empty((len(config.seeds), d))
    for i, seed in enumerate(config.seeds):
        g = signal_rng(seed).standard_normal(d)
        if kind == "scaled_standard_normal":
            norm = np.linalg.norm(g)
            while norm == 0.0:
                g = signal_rng(seed).standard_normal(d)
                norm = np.linalg.norm(g)
            g = g * (config.signal["norm"] / norm)
        out[i] = g
    return out


def resolve_solver(solver_cfg: dict, config: ExperimentConfig, signal_norms=None):
    """Build the SolverSpec and per-seed step scales for one solver entry.

    "auto" step scales resolve to the minimal admissible scale
    recommend_G(lam, ||x_true||) times g_scale, per seed; sgd_root's
    auto gamma follows the same rule (shared scale, different decay).
    """
    method = solver_cfg["method"]
    lam = solver_cfg["lam"]
    G = solver_cfg["G"]
    gamma = solver_cfg["gamma"]
    per_seed_G = per_seed_gamma = None

    def auto_scale():
        if signal_norms is None:
            raise ConfigError(
                f"solvers: {solver_cfg['name']!r} uses an 'auto' step scale, which "
                "needs a planted signal"
            )
        if lam is None:
            raise ConfigError(
                f"solvers: {solver_cfg['name']!r} uses an 'auto' step scale, which needs lam"
            )
        return solver_cfg["g_scale"] * np.array(
            [recommend_G(lam, n) for n in signal_norms]
        )

    if method.startswith("sgd_exp"):
        if G == "auto":
            per_seed_G = auto_scale()
            G = float(per_seed_G[0])
    elif method.startswith("sgd_root"):
        if gamma == "auto":
            per_seed_gamma = auto_scale()
            gamma = float(per_seed_gamma[0])

    spec = SolverSpec(
        method=method,
        d=config.dimension,
        T=config.horizon,
        lam=lam,
        G=G if isinstance(G, float) else None,
        gamma=gamma if isinstance(gamma, float) else None,
        schedule=solver_cfg["schedule"],
        m=solver_cfg["m"],
    )
    return spec, per_seed_G, per_seed_gamma


def run_experiment(config: ExperimentConfig, validate_steps: bool = True) -> list:
    """Run every (solver, seed) cell of the config; returns Trajectory list."""
    stream, data = build_stream(config)
    signals = draw_signals(config)
    norms = np.linalg.norm(signals, axis=1) if signals is not None else None
    want_clean = "clean_l2_loss" in config.metrics
    fingerprint = config.fingerprint()

    trajectories = []
    for solver_cfg in config.solvers:
        spec, per_g, per_gamma = resolve_solver(solver_cfg, config, norms)
        trajs = run_batch(
            spec,
            stream,
            config.seeds,
            x_true=signals,
            checkpoint_every=config.checkpoint_every,
            validate_steps=validate_steps,
            record_iterates=want_clean,
            label=solver_cfg["name"],
            per_seed_G=per_g,
            per_seed_gamma=per_gamma,
        )
        for traj in trajs:
            traj.fingerprint = fingerprint
            if want_clean and data is not None:
                for i, cp in enumerate(traj.checkpoints):
                    cp.clean_loss = evaluate_clean_loss(
                        traj.iterates[i], data, relu=(config.response == "relu")
                    )
                traj.iterates = None
                traj.iterate_ks = None
        trajectories.extend(trajs)
    return trajectories


def aggregate_mean(trajectories, metric: str = "relative_error"):
    """Pointwise mean of a checkpoint metric across seeds, per solver.

    Returns {solver: (ks, means)} with ks shared across that solver's
    trajectories.
    """
    by_solver = {}
    for traj in trajectories:
        by_solver.setdefault(traj.solver, []).append(traj)
    out = {}
    for solver, trajs in by_solver.items():
        ks = [cp.k for cp in trajs[0].checkpoints]
        for t in trajs[1:]:
            if [cp.k for cp in t.checkpoints] != ks:
                raise ValueError(f"trajectories of {solver!r} have mismatched checkpoints")
        values = np.array(
            [[getattr(cp, metric) for cp in t.checkpoints] for t in trajs], dtype=float
        )
        out[solver] = (np.array(ks), values.mean(axis=0))
    return out


@dataclass
class SweepRow:
    solver: str
    p: float
    k: int
    mean_value: float
    n_seeds: int
    metric: str


def run_sweep(config: ExperimentConfig, p_grid, seed_grid=None) -> list:
    """Run the config across a grid of corruption probabilities.

    Returns SweepRow records: the across-seed mean of the primary metric
    at every checkpoint, per (solver, p).
    """
    if config.corruption["kind"] == "none":
        raise ConfigError("corruption.kind: cannot sweep p over the 'none' channel")
    metric = "relative_error" if "relative_error" in config.metrics else "clean_l2_loss"
    rows = []
    for p in p_grid:
        corruption = dict(config.corruption)
        corruption["p"] = float(p)
        updates = {"corruption": corruption}
        if seed_grid is not None:
            updates["seeds"] = list(seed_grid)
        cell = config.with_updates(**updates)
        trajs = run_experiment(cell)
        for solver, (ks, means) in aggregate_mean(trajs, metric).items():
            n = sum(1 for t in trajs if t.solver == solver)
            for k, v in zip(ks, means):
                rows.append(
                    SweepRow(
                        solver=solver,
                        p=float(p),
                        k=int(k),
                        mean_value=float(v),
                        n_seeds=n,
                        metric=metric,
                    )
                )
    return rows
