"""Solve a CPLEX LP file with HiGHS, optionally warm-started from a name/value file.

Prints "<status> <objective>" on one line.
"""

import argparse
import sys


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("lp")
    ap.add_argument("--start", help="file with one 'name value' pair per line")
    ap.add_argument("--time-limit", type=float, default=300.0)
    args = ap.parse_args()

    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", args.time_limit)
    h.readModel(args.lp)
    if args.start:
        values = {}
        with open(args.start) as f:
            for line in f:
                name, value = line.split()
                values[name] = float(value)
        names = h.getLp().col_names_
        sol = highspy.HighsSolution()
        sol.col_value = [values.get(n, 0.0) for n in names]
        sol.value_valid = True
        h.setSolution(sol)
    h.run()
    status = h.modelStatusToString(h.getModelStatus()).replace(" ", "_")
    print(status, repr(h.getInfo().objective_function_value))
    return 0


if __name__ == "__main__":
    sys.exit(main())
