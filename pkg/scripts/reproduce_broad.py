"""Broad linear absorber in front of a Gaussian source: rejection rate and
p-value spread over slope alpha and photon budget N_T.

    python3 scripts/reproduce_broad.py --trials 100 --out-dir runs/broad
"""

from _common import print_table, run_and_save, sweep_parser

ALPHAS = (0.0, 0.004, 0.006, 0.008, 0.010, 0.012, 0.014, 0.016)


def main():
    p = sweep_parser(__doc__.splitlines()[0], "runs/broad")
    p.add_argument("--alpha", type=float, nargs="+", default=list(ALPHAS))
    args = p.parse_args()
    res = run_and_save("broad", args.alpha, args)
    for level in res.levels:
        print_table(res, level, "alpha")


if __name__ == "__main__":
    main()
