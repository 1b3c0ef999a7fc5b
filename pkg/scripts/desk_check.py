"""Desk-scale cross-training check on correlated synthetic pairs.

For each seed, two GBM paths with correlated log-returns are generated and
every requested model is trained on both and tested on both. The script
prints the cross-minus-self mean MAPE per direction and counts how many
seeds keep the gap under the bound.

    python scripts/desk_check.py --seeds 5 --models AR,MLP_LINEAR
"""
from __future__ import annotations

import argparse
import time

from crossdex.config import ExperimentConfig, IndexRef
from crossdex.harness import run_experiment
from crossdex.models import ForecasterSpec
from crossdex.synth import correlated_gbm


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--days", type=int, default=2000)
    p.add_argument("--rho", type=float, default=0.95)
    p.add_argument("--models", default="AR,MLP_LINEAR")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--bound", type=float, default=0.02)
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args(argv)

    kinds = [k.strip() for k in args.models.split(",") if k.strip()]
    specs = tuple(ForecasterSpec(k) if args.epochs is None else ForecasterSpec(k, epochs=args.epochs)
                  for k in kinds)
    passes = {k: 0 for k in kinds}
    print("seed,model,train,test,self_mape,cross_mape,gap")
    for seed in range(args.seeds):
        a, b = correlated_gbm(args.days, rho=args.rho, seed=seed)
        cfg = ExperimentConfig((IndexRef("GBM_A", ""), IndexRef("GBM_B", "")), specs, seed=seed)
        t0 = time.perf_counter()
        m = run_experiment(cfg, {"GBM_A": a, "GBM_B": b}, threads=args.threads)
        for kind in kinds:
            gaps = []
            for train, test in (("GBM_A", "GBM_B"), ("GBM_B", "GBM_A")):
                own, cross = m.cell(kind, test, test), m.cell(kind, train, test)
                if own is None or cross is None:
                    gaps.append(float("inf"))
                    continue
                gap = cross.mean_mape - own.mean_mape
                gaps.append(gap)
                print(f"{seed},{kind},{train},{test},{own.mean_mape:.4f},{cross.mean_mape:.4f},{gap:+.4f}")
            passes[kind] += max(gaps) < args.bound
        print(f"# seed {seed} done in {time.perf_counter() - t0:.1f}s, {len(m.failures)} failed sessions")
    for kind, n in passes.items():
        verdict = "pass" if n > args.seeds / 2 else "fail"
        print(f"# {kind}: gap < {args.bound} on {n}/{args.seeds} seeds ({verdict})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
