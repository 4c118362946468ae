#!/usr/bin/env python3
"""Solve an LP file with HiGHS and write `name value` lines.

Usage: highs_lp.py MODEL.lp OUT.sol [--time-limit SECONDS]
Meant for `ctlsynth synth --solver external --solver-cmd "python3 scripts/highs_lp.py {lp} {sol}"`.
"""
import argparse
import sys

import highspy


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("lp")
    ap.add_argument("sol")
    ap.add_argument("--time-limit", type=float, default=None)
    args = ap.parse_args()

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("threads", 1)
    if args.time_limit is not None:
        h.setOptionValue("time_limit", args.time_limit)
    if h.readModel(args.lp) != highspy.HighsStatus.kOk:
        print(f"cannot read {args.lp}", file=sys.stderr)
        return 3
    h.run()
    status = h.getModelStatus()
    with open(args.sol, "w") as out:
        if status == highspy.HighsModelStatus.kInfeasible:
            out.write("status infeasible\n")
            return 0
        info = h.getInfo()
        # a time limit may still leave an incumbent behind
        if info.primal_solution_status != 2:
            out.write("status unknown\n")
            return 0
        out.write("status feasible\n")
        values = h.getSolution().col_value
        lp = h.getLp()
        for name, v in zip(lp.col_names_, values):
            out.write(f"{name} {v:.12g}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
