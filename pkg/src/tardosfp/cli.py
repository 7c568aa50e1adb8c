"""Command-line front end: ``tardosfp <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 validation breach.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from tardosfp.analytic import KbError, kb, kb_bruteforce, mu_tilde, t_values
from tardosfp.attacks import PathologicalKappaError, StrategyError
from tardosfp.formats import (
    DescriptorError,
    load_strategy,
    params_header,
    version_string,
    write_csv,
)
from tardosfp.fourier import NU_MAX, NoCodeLengthError, expansion, fp_curve, length_search
from tardosfp.model import CodeParams, ParamError
from tardosfp.special import ConvergenceError, PoleError, Precision

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_BREACH = 0, 1, 2, 3
SWEEP_POINTS = 50
SWEEP_DELTA = 0.01
SWEEP_TOP = 0.95
CROSSCHECK_MAX_TERMS = 2 * 10**5


class UsageError(Exception):
    pass


class ValidationBreach(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def parse_range(text: str) -> list[float]:
    """``x`` or ``lo:hi:step`` (hi included when it lies on the grid)."""
    parts = text.split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"malformed value or sweep {text!r}") from None
    if len(vals) == 1:
        return vals
    if len(vals) != 3:
        raise UsageError(f"sweep must be lo:hi:step, got {text!r}")
    lo, hi, step = vals
    if step <= 0 or hi < lo:
        raise UsageError(f"sweep {text!r} needs step > 0 and hi ≥ lo")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(n)]


def default_sweep(q: int) -> list[float]:
    lo = 1 / (2 * (q - 1)) + SWEEP_DELTA
    return [float(k) for k in np.linspace(lo, SWEEP_TOP, SWEEP_POINTS)]


@dataclass
class RunConfig:
    command: str
    q: int
    c: int
    kappas: list[float]
    m: int | None = None
    eps1: float = 1e-10
    strategy: str = "majority"
    nu_max: float = NU_MAX
    precision_bits: int = 128
    seed: int = 0
    out: str = "-"
    format: str = "csv"
    workers: int = 1
    extra: dict = field(default_factory=dict)

    @property
    def prec(self) -> Precision:
        return Precision.ext(self.precision_bits)

    def params(self, kappa: float, m: int | None = None) -> CodeParams:
        return CodeParams(self.q, self.c, kappa, m=m or 1, eps1=self.eps1)


def _emit(cfg: RunConfig, header: dict, columns: Sequence[str], rows: list) -> None:
    header = {**header, "command": cfg.command, "precision_bits": cfg.precision_bits}
    if cfg.format == "json":
        header.setdefault("version", version_string())
        doc = {"header": header, "columns": list(columns), "rows": [list(r) for r in rows]}
        text = json.dumps(doc, indent=1, default=float) + "\n"
        if cfg.out == "-":
            sys.stdout.write(text)
        else:
            with open(cfg.out, "w") as fh:
                fh.write(text)
        return
    write_csv(sys.stdout if cfg.out == "-" else cfg.out, header, columns, rows)


def _scalar_kappa(cfg: RunConfig) -> float:
    if len(cfg.kappas) != 1:
        raise UsageError(f"{cfg.command} needs a single --kappa value")
    return cfg.kappas[0]


def _map(fn, items, workers: int) -> list:
    """Ordered map, concurrently when workers > 1."""
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ------------------------------------------------------------------ commands

_KB_PATHS = {"class1": "class-1 root-of-unity sum", "class2": "class-2 root-of-unity sum",
             "class3": "class-3 root-of-unity sum", "bruteforce": "direct enumeration"}


def cmd_kb(cfg: RunConfig) -> None:
    params = cfg.params(_scalar_kappa(cfg))
    strat = load_strategy(cfg.strategy, params)
    K = kb(strat, params)
    header = params_header(params, strat, method=K.method, path=_KB_PATHS.get(K.method, K.method),
                           sum_rule=K.sum_rule())
    try:
        ref = kb_bruteforce(strat, params, max_terms=CROSSCHECK_MAX_TERMS)
        dev = float(np.max(np.abs(ref.values - K.values)))
        header["bruteforce_max_deviation"] = dev
    except KbError:
        dev = None
        header["bruteforce_max_deviation"] = None
    _emit(cfg, header, ["b", "value"], [(b, float(v)) for b, v in enumerate(K.values)])
    if dev is not None and dev > 1e-9:
        raise ValidationBreach(f"closed form and enumeration differ by {dev:.3g}")


def _mu_row(job):
    q, c, kappa, strategy = job
    params = CodeParams(q, c, kappa)
    try:
        strat = load_strategy(strategy, params)
    except PathologicalKappaError:
        return (kappa, None, None)
    mu = mu_tilde(kb(strat, params), params)
    return (kappa, mu, 2 / mu ** 2 if mu > 0 else None)


def cmd_mu_sweep(cfg: RunConfig) -> None:
    rows = _map(_mu_row, [(cfg.q, cfg.c, k, cfg.strategy) for k in cfg.kappas], cfg.workers)
    header = {"q": cfg.q, "c": cfg.c, "strategy": cfg.strategy, "kappa_points": len(cfg.kappas)}
    _emit(cfg, header, ["kappa", "mu_tilde", "code_length_constant"], rows)


def _length_row(job):
    q, c, kappa, strategy, eps1, nu_max, bits = job
    params = CodeParams(q, c, kappa, eps1=eps1)
    try:
        strat = load_strategy(strategy, params)
        res = length_search(params, strat, eps1, nu_max, prec=Precision.ext(bits))
    except (PathologicalKappaError, NoCodeLengthError, PoleError):
        return (kappa, None, None, None)
    return (kappa, res.m_star, res.ratio, res.gaussian_ratio)


def cmd_length_search(cfg: RunConfig) -> None:
    jobs = [(cfg.q, cfg.c, k, cfg.strategy, cfg.eps1, cfg.nu_max, cfg.precision_bits) for k in cfg.kappas]
    rows = _map(_length_row, jobs, cfg.workers)
    header = {"q": cfg.q, "c": cfg.c, "strategy": cfg.strategy, "eps1": cfg.eps1, "nu_max": cfg.nu_max}
    _emit(cfg, header, ["kappa", "m_star", "m_star_over_c2_log_inv_eps1", "code_length_constant"], rows)


def cmd_fp_curve(cfg: RunConfig) -> None:
    if cfg.m is None:
        raise UsageError("fp-curve needs --m")
    params = cfg.params(_scalar_kappa(cfg), cfg.m)
    strat = load_strategy(cfg.strategy, params)
    K = kb(strat, params)
    grid = parse_range(cfg.extra.get("z_grid") or "0:9:0.25")
    rows = fp_curve(grid, cfg.m, K, params, cfg.nu_max, cfg.prec)
    header = params_header(params, strat, m=cfg.m, nu_max=cfg.nu_max)
    _emit(cfg, header, ["Z_tilde", "R_m", "Omega"], rows)
    dump = cfg.extra.get("expansion_out")
    if dump:
        coeffs = expansion(cfg.m, K, params, cfg.nu_max, cfg.prec)
        sub = RunConfig(**{**cfg.__dict__, "out": dump})
        _emit(sub, header, ["nu_t", "omega_t", "alpha_t"],
              [(float(n), float(o), float(a)) for n, o, a in zip(coeffs.nu, coeffs.omega, coeffs.alpha)])


def cmd_t_table(cfg: RunConfig) -> None:
    params = cfg.params(_scalar_kappa(cfg))
    _emit(cfg, params_header(params), ["b", "value"], [(b, float(v)) for b, v in enumerate(t_values(params))])


def cmd_simulate(cfg: RunConfig) -> None:
    from tardosfp.montecarlo import MIN_EXPECTED_HITS, MIN_RATE, SimulationReachError, simulate_scores
    from tardosfp.fourier import gaussian_tail

    if cfg.m is None:
        raise UsageError("simulate needs --m")
    params = cfg.params(_scalar_kappa(cfg), cfg.m)
    strat = load_strategy(cfg.strategy, params)
    trials = int(cfg.extra.get("trials") or 10**5)
    thresholds = parse_range(cfg.extra.get("thresholds") or "1:3:1")
    for z in thresholds:
        omega = gaussian_tail(z)
        if omega < MIN_RATE or trials * omega < MIN_EXPECTED_HITS:
            raise SimulationReachError(
                f"tail at Z̃={z} (≈{omega:.2e}) is beyond the reach of {trials} trials; "
                f"need rate ≥ {MIN_RATE:g} and ≥ {MIN_EXPECTED_HITS} expected hits")
    rep = simulate_scores(params, strat, trials, cfg.seed, thresholds=thresholds, workers=cfg.workers)
    if cfg.format == "csv":
        edges, counts = rep.histogram(int(cfg.extra.get("bins") or 100))
        header = params_header(params, strat, m=cfg.m, trials=trials, seed=cfg.seed, report=rep.to_dict())
        _emit(cfg, header, ["bin_left", "bin_right", "count"],
              [(float(edges[i]), float(edges[i + 1]), int(n)) for i, n in enumerate(counts)])
    else:
        text = json.dumps({**rep.to_dict(), "version": version_string()}, indent=1) + "\n"
        if cfg.out == "-":
            sys.stdout.write(text)
        else:
            with open(cfg.out, "w") as fh:
                fh.write(text)


def cmd_validate(cfg: RunConfig) -> None:
    from tardosfp.validation import run_reference_suite

    results = run_reference_suite(seed=cfg.seed, quick=bool(cfg.extra.get("quick")))
    rows = [(r.name, "pass" if r.passed else "FAIL", r.value, r.tolerance, r.detail) for r in results]
    _emit(cfg, {"checks": len(rows), "seed": cfg.seed}, ["check", "status", "value", "tolerance", "detail"], rows)
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise ValidationBreach("failed: " + ", ".join(failed))


COMMANDS = {
    "kb": cmd_kb,
    "mu-sweep": cmd_mu_sweep,
    "length-search": cmd_length_search,
    "fp-curve": cmd_fp_curve,
    "t-table": cmd_t_table,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--q", type=int, default=3, help="alphabet size")
    common.add_argument("--c", type=int, default=5, help="coalition size")
    common.add_argument("--kappa", default=None, help="value or lo:hi:step sweep (sweeps default to 50 points)")
    common.add_argument("--m", type=int, default=None, help="code length")
    common.add_argument("--eps1", type=float, default=1e-10, help="false-positive target")
    common.add_argument("--strategy", default="majority", help="built-in name, descriptor path or inline JSON")
    common.add_argument("--nu-max", type=float, default=NU_MAX, help="truncation of the tail expansion")
    common.add_argument("--precision-bits", type=int, default=128, help="mantissa bits for extended arithmetic")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="-", help="output file ('-' for stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--workers", type=int, default=1, help="parallel sweep points / simulation threads")

    parser = _Parser(prog="tardosfp", description="q-ary Tardos code analysis")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("kb", parents=[common], help="attack parameters K_b")
    sub.add_parser("mu-sweep", parents=[common], help="μ̃ and 2/μ̃² over κ")
    sub.add_parser("length-search", parents=[common], help="sufficient code length over κ")
    fp = sub.add_parser("fp-curve", parents=[common], help="innocent accusation tail R_m vs Ω")
    fp.add_argument("--z-grid", default=None, help="lo:hi:step (default 0:9:0.25)")
    fp.add_argument("--expansion-out", default=None, help="also write (ν_t, ω_t, α_t) here")
    sub.add_parser("t-table", parents=[common], help="table of T(b)")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo report")
    sim.add_argument("--trials", type=int, default=None)
    sim.add_argument("--thresholds", default=None, help="Z̃ values, lo:hi:step (default 1:3:1)")
    sim.add_argument("--bins", type=int, default=None, help="histogram bins for csv output")
    val = sub.add_parser("validate", parents=[common], help="cross-oracle reference suite")
    val.add_argument("--quick", action="store_true", help="skip the slow tail checks")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    if ns.q < 2 or ns.c < 1:
        raise UsageError("need --q ≥ 2 and --c ≥ 1")
    if ns.kappa is None:
        kappas = default_sweep(ns.q) if ns.command in ("mu-sweep", "length-search") else [0.35]
    else:
        kappas = parse_range(ns.kappa)
    extra = {k: getattr(ns, k) for k in ("z_grid", "expansion_out", "trials", "thresholds", "bins", "quick")
             if hasattr(ns, k)}
    return RunConfig(ns.command, ns.q, ns.c, kappas, ns.m, ns.eps1, ns.strategy, ns.nu_max,
                     ns.precision_bits, ns.seed, ns.out, ns.format, ns.workers, extra)


def main(argv: Sequence[str] | None = None) -> int:
    from tardosfp.montecarlo import SimulationReachError

    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        COMMANDS[cfg.command](cfg)
    except PathologicalKappaError as e:
        print(f"tardosfp: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ParamError, DescriptorError, StrategyError, FileNotFoundError) as e:
        print(f"tardosfp: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationBreach as e:
        print(f"tardosfp: validation breach: {e}", file=sys.stderr)
        return EXIT_BREACH
    except (SimulationReachError, ConvergenceError, PoleError, KbError, NoCodeLengthError, ArithmeticError) as e:
        print(f"tardosfp: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
