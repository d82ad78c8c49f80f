#!/usr/bin/env python3
"""Linear regression under 40% sign-flip corruption: geometric vs sqrt decay.

Runs configs/linear_signflip.json (20 seeds, d=100, T=2e5) and writes the
trajectory CSV, manifest, and a semilog error chart.
"""

from pathlib import Path

from sgdexp.config import load_config
from sgdexp.experiment import aggregate_mean, run_experiment
from sgdexp.results import emit_plot, emit_results

ROOT = Path(__file__).resolve().parent.parent


def main():
    config = load_config(ROOT / "configs" / "linear_signflip.json")
    trajectories = run_experiment(config)
    out = ROOT / config.output_dir
    emit_results(trajectories, out)
    emit_plot(trajectories, out / "results.svg", title="sign-flip corruption, p = 0.4")
    for solver, (ks, means) in aggregate_mean(trajectories).items():
        print(f"{solver}: mean relative error at k={int(ks[-1])}: {means[-1]:.3e}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
