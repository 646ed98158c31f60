"""Write fig1/fig2 tables for all three modes and print a short comparison.

    python3 scripts/reproduce_figures.py --out results/ --seed 0
"""

import argparse
from pathlib import Path

import numpy as np

from entswap.sweep import SweepConfig, emit, run_fig1, run_fig2, table_lookup


def max_error(table, mode):
    errs = [abs(r.value - table_lookup(table, r.q, r.quantity, "theory").value)
            for r in table
            if r.mode == mode and r.value is not None and "low_statistics" not in r.flags]
    return max(errs) if errs else float("nan")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--shots", type=int, default=8192)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    cfg = SweepConfig(seed=args.seed, shots=args.shots, workers=args.workers)
    for name, run in (("fig1", run_fig1), ("fig2", run_fig2)):
        table = run(cfg)
        emit(table, "csv", args.out / f"{name}.csv")
        print(f"{name}: {len(table)} rows -> {args.out / (name + '.csv')}")
        for mode in ("ideal_sim", "noisy_sim"):
            print(f"  {mode:9s} max |sim - theory| = {max_error(table, mode):.3f}")
        if name == "fig2":
            q = np.array(cfg.q_values)
            ident = [table_lookup(table, v, "prob_identity", "noisy_sim").value for v in q]
            print("  prob_identity (noisy) vs (2q-1)^2:")
            for v, f in zip(q, ident):
                print(f"    q={v:.2f}  {f:+.3f}  {(2 * v - 1) ** 2:.3f}")


if __name__ == "__main__":
    main()
