#!/usr/bin/env python3
"""ReLU regression: sign SGD with geometric decay vs stochastic GLM-Tron.

Two runs: sign-flip corruption at p=0.4 (configs/relu_signflip.json),
where the l2-residual GLM-Tron updates stall but the sign update keeps
converging, and the clean p=0 control (configs/relu_clean_glmtron.json),
where GLM-Tron with decaying steps recovers the signal.
"""

from pathlib import Path

from sgdexp.config import load_config
from sgdexp.experiment import aggregate_mean, run_experiment
from sgdexp.results import emit_plot, emit_results

ROOT = Path(__file__).resolve().parent.parent


def run_one(name, title):
    config = load_config(ROOT / "configs" / name)
    trajectories = run_experiment(config)
    out = ROOT / config.output_dir
    emit_results(trajectories, out)
    emit_plot(trajectories, out / "results.svg", title=title)
    for solver, (ks, means) in aggregate_mean(trajectories).items():
        print(f"  {solver}: final mean relative error {means[-1]:.3e}")
    print(f"  wrote {out}")


def main():
    print("sign corruption, p = 0.4:")
    run_one("relu_signflip.json", "ReLU regression, sign corruption p = 0.4")
    print("no corruption (control):")
    run_one("relu_clean_glmtron.json", "ReLU regression, p = 0")


if __name__ == "__main__":
    main()
