"""Fit all five variants on the seeded plant corpus and print the R^2 table.

    python3 scripts/run_ordering_experiment.py [--swarm 50] [--iters 30] [--seed 0] [--json out.json]
"""

import argparse
import json
import logging

from iokoopman.experiment import run_reference_experiment
from iokoopman.optimizer import PsoConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--swarm", type=int, default=50)
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--json", help="write per-variant scores here")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    pso = PsoConfig(swarm_size=args.swarm, max_iterations=args.iters, seed=args.seed,
                    parallel=args.parallel)
    exp = run_reference_experiment(pso=pso)
    print(exp.table())
    print(f"total {exp.seconds:.0f}s")
    if args.json:
        rows = {v.value: {"train_one_step": s.train_one_step.tolist(),
                          "train_multi_step": None if s.train_multi_step is None else s.train_multi_step.tolist(),
                          "test_multi_step": None if s.test_multi_step is None else s.test_multi_step.tolist(),
                          "diverged_at": s.diverged_at, "objective": s.objective, "seconds": s.seconds}
                for v, s in exp.scores.items()}
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
