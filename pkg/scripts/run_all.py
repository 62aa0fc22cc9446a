"""Run every JSON config in scripts/configs (or the ones named) and print the fits."""
import argparse
import glob
import os
import time

from qslab.lab import ExperimentConfig, run_experiment

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("configs", nargs="*", help="config files (default: scripts/configs/*.json)")
    ap.add_argument("--out-root", default=".", help="prefix for each config's output directory")
    a = ap.parse_args()
    paths = a.configs or sorted(glob.glob(os.path.join(HERE, "configs", "*.json")))
    for path in paths:
        cfg = ExperimentConfig.load(path)
        out = os.path.join(a.out_root, cfg.output or os.path.join("results", cfg.scenario))
        t0 = time.time()
        rep = run_experiment(cfg, out)
        print(f"{os.path.basename(path)}: {len(rep.rows)} rows -> {out} ({time.time() - t0:.1f}s)")
        for k, v in rep.fit.items():
            print(f"    {k}: {v}")


if __name__ == "__main__":
    main()
