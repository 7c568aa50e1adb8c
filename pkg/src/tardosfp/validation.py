"""Cross-oracle reference suite run by ``tardosfp validate``.

Each check compares two independent routes to the same quantity on a small
reference grid and reports the worst deviation against its tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import mpmath as mp
import numpy as np

from tardosfp.analytic import kb, kb_bruteforce, mu_tilde
from tardosfp.attacks import interleaving, majority, minority, mu_min_strategy
from tardosfp.fourier import expansion, gil_pelaez_tail, phi_tilde, r_m
from tardosfp.model import CodeParams


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


def reference_strategies(params: CodeParams, tie_break: str | None = None):
    return [interleaving(params.c), majority(), minority(), mu_min_strategy(params, tie_break=tie_break)]


def check_kb_equivalence(qs=(2, 3), cs=(3, 4, 5, 6), kappas=(0.2, 0.45), tol=1e-10) -> list[CheckResult]:
    worst_k, worst_sum, where = 0.0, 0.0, ""
    for q, c, kappa in product(qs, cs, kappas):
        params = CodeParams(q, c, kappa)
        for s in reference_strategies(params):
            K = kb(s, params)
            dev = float(np.max(np.abs(K.values - kb_bruteforce(s, params).values)))
            if dev > worst_k:
                worst_k, where = dev, f"q={q} c={c} kappa={kappa} {s.name}"
            worst_sum = max(worst_sum, abs(K.sum_rule() - 1))
    return [CheckResult("kb_closed_form_vs_enumeration", worst_k < tol, worst_k, tol, where),
            CheckResult("kb_sum_rule", worst_sum < 1e-9, worst_sum, 1e-9)]


def check_binary_invariance(tol=1e-8) -> CheckResult:
    worst = 0.0
    for c in range(1, 11):
        params = CodeParams(2, c, 0.5)
        for s in reference_strategies(params, tie_break="majority"):
            worst = max(worst, abs(mu_tilde(kb(s, params), params) - 2 / math.pi))
    return CheckResult("binary_mu_tilde_2_over_pi", worst < tol, worst, tol)


def check_phi_origin(tol=1e-9) -> CheckResult:
    params = CodeParams(3, 5, 0.35)
    K = kb(majority(), params)
    dev = float(abs(phi_tilde(0, K, params) - 1))
    ratios = [float(abs(phi_tilde(k, K, params) - (1 - mp.mpf(k) ** 2 / 2)) / k ** 2) for k in (1e-2, 1e-3)]
    ok = dev < tol and ratios[1] < ratios[0]
    return CheckResult("phi_tilde_origin", ok, dev, tol, f"|φ̃−(1−k²/2)|/k² = {ratios[0]:.3g}, {ratios[1]:.3g}")


def check_tail_routes(m=1000, tol=1e-6) -> CheckResult:
    params = CodeParams(3, 5, 0.35, m=m)
    K = kb(majority(), params)
    coeffs = expansion(m, K, params)
    zs = (1.0, 2.0, 3.0)
    inv = gil_pelaez_tail(zs, m, K, params)
    worst = max(abs(float(r_m(z, coeffs)) - v) for z, (v, _) in zip(zs, inv))
    return CheckResult(f"tail_expansion_vs_inversion_m{m}", worst < tol, worst, tol)


def check_simulation(seed=0, trials=200_000, m=100) -> list[CheckResult]:
    from tardosfp.montecarlo import simulate_scores

    params = CodeParams(3, 5, 0.35, m=m)
    strat = majority()
    K = kb(strat, params)
    rep = simulate_scores(params, strat, trials, seed, thresholds=(1.0, 2.0))
    mu = mu_tilde(K, params)
    z_mu = abs(rep.mu_tilde - mu) / rep.mu_tilde_stderr
    inv = gil_pelaez_tail([t.z_tilde for t in rep.tails], m, K, params)
    z_tail = max(abs(t.rate - v) / math.sqrt(v * (1 - v) / trials) for t, (v, _) in zip(rep.tails, inv))
    z_mean = abs(rep.innocent_mean) / rep.innocent_mean_stderr
    return [CheckResult("simulated_mu_tilde_sigmas", z_mu < 4, z_mu, 4.0),
            CheckResult("simulated_innocent_mean_sigmas", z_mean < 4, z_mean, 4.0),
            CheckResult("simulated_tail_vs_inversion_sigmas", z_tail < 4, z_tail, 4.0)]


def run_reference_suite(seed: int = 0, quick: bool = False) -> list[CheckResult]:
    out = check_kb_equivalence()
    out.append(check_binary_invariance())
    out.append(check_phi_origin())
    if not quick:
        out.append(check_tail_routes())
        out.extend(check_simulation(seed))
    return out
