"""Regenerate the data behind the T-function, kappa-sweep and false-positive plots.

    python scripts/figure_data.py --out-dir results            # full sweeps (slow)
    python scripts/figure_data.py --out-dir results --quick    # reduced grids, a few minutes

Every table is an annotated CSV (see docs/formats.md).
"""

import argparse
import math
from pathlib import Path

from tardosfp.attacks import mu_min_strategy
from tardosfp.cli import main as cli
from tardosfp.fourier import length_search
from tardosfp.model import CodeParams

MU_SWEEPS = [(2, 7), (3, 7), (3, 20), (4, 7)]


def run(*argv):
    code = cli([str(a) for a in argv])
    if code:
        raise SystemExit(f"tardosfp {' '.join(map(str, argv))} exited with {code}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    ap.add_argument("--quick", action="store_true", help="reduced sweeps")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)

    for kappa in (0.2, 0.35, 0.9):
        run("t-table", "--q", 3, "--c", 20, "--kappa", kappa, "--out", out / f"t_q3_c20_k{kappa}.csv")

    for q, c in MU_SWEEPS:
        argv = ["mu-sweep", "--q", q, "--c", c, "--strategy", "mu_min", "--out", out / f"mu_q{q}_c{c}.csv"]
        if args.quick:
            argv[5:5] = ["--kappa", f"{1 / (2 * (q - 1)) + 0.01:.4f}:0.95:0.02"]
        run(*argv)

    sweep = "0.30:0.435:0.015" if args.quick else None
    argv = ["length-search", "--q", 3, "--c", 7, "--strategy", "mu_min", "--workers", args.workers,
            "--out", out / "length_q3_c7.csv"]
    if sweep:
        argv[5:5] = ["--kappa", sweep]
    run(*argv)

    # tail shapes on both sides of the majority-to-minority transition at q=3, c=7
    for kappa in (0.34, 0.36):
        params = CodeParams(3, 7, kappa)
        m = length_search(params, mu_min_strategy(params)).m_star
        run("fp-curve", "--q", 3, "--c", 7, "--kappa", kappa, "--m", m, "--strategy", "mu_min",
            "--z-grid", f"0:{math.ceil(math.sqrt(2 * math.log(1e17)))}:0.25",
            "--out", out / f"fp_q3_c7_k{kappa}.csv")
    print(f"wrote tables to {out}/")


if __name__ == "__main__":
    main()
