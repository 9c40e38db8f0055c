"""Acceptance criteria, one test and one summary line each."""

import time

import numpy as np
from mpmath import mp

from kapitsa.dispersion import d_matrix, lambda_matrix, omega
from kapitsa.halfspace import (
    HalfspaceGrid,
    extract_temperature_jump,
    heat_flux_profile,
    interior_residual,
    mu_c_mesh,
    solve_halfspace,
)
from kapitsa.jump import (
    KGrid,
    epsilon0,
    epsilon0_bracket_root,
    epsilon_T,
    jump_coefficient,
)
from kapitsa.kernels import TIndex, j_integral, t_integral, t_zero
from kapitsa.moments import MOMENTS, moment, moment_closed_form
from kapitsa.params import ModelParams

from oracles import moment_mp, t_mp


def test_criterion_1_moment_oracle(record):
    MOMENTS.clear()
    t0 = time.perf_counter()
    errs = [abs(moment(float(n)) - moment_closed_form(n)) / moment_closed_form(n)
            for n in range(2, 13)]
    elapsed = time.perf_counter() - t0
    ok = max(errs) < 1e-10 and elapsed < 1.0
    assert record(1, ok, f"max rel err {max(errs):.2e} (< 1e-10), {elapsed:.3f} s (< 1 s)")


def test_criterion_2_diagonal_identities(record):
    # untransformed side g - T in 20-digit arithmetic, transformed side from the package
    t0 = time.perf_counter()
    k = np.geomspace(1e-3, 1e3, 50)
    worst = 0.0
    for g in (3, 4, 5):
        rhs1 = k * k * t_integral(TIndex.of(g, 1, 4, 2), k)
        rhs2 = k * k * t_integral(TIndex.of(g, 1, 3, 4), k)
        with mp.workdps(20):
            g4 = moment_mp(g + 4, 20)
            g3 = moment_mp(g + 3, 20)
            for i, kk in enumerate(k):
                lhs1 = float(g4 - t_mp(3 * g + 4, 0, g, kk, dps=20))
                lhs2 = float(g3 / 3 - t_mp(3 * g + 3, 2, g, kk, dps=20))
                worst = max(worst, abs(lhs1 - rhs1[i]) / abs(lhs1), abs(lhs2 - rhs2[i]) / abs(lhs2))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 30.0
    assert record(2, ok, f"max rel err {worst:.2e} (< 1e-8) over 2x50x3 points, "
                         f"{elapsed:.1f} s (< 30 s)")


def test_criterion_3_epsilon0(record):
    spread = 0.0
    for g in (3.0, 4.0, 5.0):
        p = ModelParams(g)
        vals = [epsilon0(p),
                t_zero(TIndex.of(g, 3, 3, 2)) / t_zero(TIndex.of(g, 3, 4, 1)),
                epsilon0_bracket_root(p)]
        spread = max(spread, (max(vals) - min(vals)) / vals[0])
    e3 = epsilon0(ModelParams(3.0))
    anchor = 0.0960941
    agree = spread < 1e-6
    anchor_ok = abs(e3 - anchor) < 1e-6
    assert record(3, agree and anchor_ok,
                  f"three-way spread {spread:.1e} (< 1e-6, {'ok' if agree else 'FAIL'}); "
                  f"eps0(3) = {e3:.7f} vs stated {anchor} (|diff| {abs(e3 - anchor):.1e}, "
                  f"{'ok' if anchor_ok else 'FAIL'})")


def test_criterion_4_jump_coefficient(record):
    c30 = jump_coefficient(ModelParams(3.0, 0.0))
    anchor_ok = abs(c30 - 0.788920) <= 1e-5
    worst_ratio = 0.0
    for g in (3.0, 4.0, 5.0, 6.5):
        for q1, q2 in ((0.0, 0.3), (0.3, 0.8), (0.1, 0.95)):
            r = jump_coefficient(ModelParams(g, q1)) / jump_coefficient(ModelParams(g, q2))
            exact = (1 + q1) * (1 - q2) / ((1 - q1) * (1 + q2))
            worst_ratio = max(worst_ratio, abs(r - exact) / exact)
    gammas = [round(3.0 + 0.1 * i, 12) for i in range(51)]
    qs = [round(0.01 * i, 12) for i in range(96)]
    dec = all(np.all(np.diff([jump_coefficient(ModelParams(g, q)) for g in gammas]) < 0)
              for q in (0.3, 0.5, 0.8))
    inc = all(np.all(np.diff([jump_coefficient(ModelParams(g, q)) for q in qs]) > 0)
              for g in (3.0, 4.0, 5.0))
    ok = anchor_ok and worst_ratio < 1e-12 and dec and inc
    assert record(4, ok, f"C(3,0) = {c30:.6f} vs 0.788920 +- 1e-5 ({'ok' if anchor_ok else 'FAIL'}); "
                         f"ratio law {worst_ratio:.1e}; decreasing in gamma {dec}; "
                         f"increasing in q {inc}")


def test_criterion_5_matrix_algebra(record):
    p = ModelParams(3.0)
    worst_prod = worst_det = 0.0
    for k in KGrid.log().nodes:
        dm = lambda_matrix(k, p)
        prod = dm.entries @ d_matrix(k, p)
        worst_prod = max(worst_prod, np.max(np.abs(prod - dm.lam * np.eye(2))) / abs(dm.lam))
        e = dm.entries
        det = e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0]
        ref = k * k * omega(k, p)
        worst_det = max(worst_det, abs(det - ref) / abs(ref))
    ok = worst_prod < 1e-10 and worst_det < 1e-10
    assert record(5, ok, f"max |Lambda D - lambda I|/|lambda| {worst_prod:.1e}, "
                         f"max |det - k^2 omega|/|k^2 omega| {worst_det:.1e} (< 1e-10, 400 nodes)")


def test_criterion_6_neumann_symmetry(record):
    rng = np.random.default_rng(20261016)
    k = 10.0 ** rng.uniform(-4, 4, 100)
    k1 = 10.0 ** rng.uniform(-4, 4, 100)
    worst = 0.0
    for abl in ((4, 4, 1), (3, 3, 3), (3, 4, 3), (4, 3, 3)):
        idx = TIndex.of(3.0, *abl)
        a = j_integral(idx, k, k1)
        b = j_integral(idx, k1, k)
        worst = max(worst, float(np.max(np.abs(a - b) / np.abs(a))))
    assert record(6, worst < 1e-10, f"max rel asymmetry {worst:.1e} (< 1e-10) on 100 pairs x 4 indices")


def test_criterion_7_series_sanity(record):
    p = ModelParams(3.0, 0.9)
    off = epsilon_T(p, orders=3, neumann=False)
    zeros = all(t == 0.0 for t in off.epsilon_terms[1:])
    r1 = epsilon_T(p, orders=2, b_plus=1.0)
    r2 = epsilon_T(p, orders=2, b_plus=2.0)
    lin = max(abs(b - 2 * a) / abs(2 * a) for a, b in
              zip(r1.epsilon_terms + [r1.epsilon_T], r2.epsilon_terms + [r2.epsilon_T]))
    ok = zeros and lin < 1e-12
    assert record(7, ok, f"Neumann off: eps_1, eps_2 = {off.epsilon_terms[1:]}; "
                         f"linearity in B+ {lin:.1e} (< 1e-12) over {len(r1.epsilon_terms)} orders")


def test_criterion_8_validator(record):
    p = ModelParams(3.0, 0.9)
    t0 = time.perf_counter()
    fld = solve_halfspace(p, 1.0)
    eps = extract_temperature_jump(fld)["epsilon_T"]
    elapsed = time.perf_counter() - t0
    analytic = 1.8257879
    dev = abs(eps - analytic) / analytic
    flux = heat_flux_profile(fld)
    spread = float(np.max(np.abs(flux - flux.mean())) / abs(flux.mean()))
    fine = extract_temperature_jump(solve_halfspace(p, 1.0, HalfspaceGrid().refined()))["epsilon_T"]
    change = abs(fine - eps) / eps
    ok = dev < 0.15 and spread < 5e-3 and change < 1e-2 and elapsed < 60.0
    assert record(8, ok, f"eps_T = {eps:.4f} vs {analytic} (dev {dev:.1%}, < 15%: "
                         f"{'ok' if dev < 0.15 else 'FAIL'}); flux spread {spread:.1e} (< 0.5%); "
                         f"grid doubling {change:.1e} (< 1%); {elapsed:.2f} s (< 60 s)")


def test_criterion_9_manufactured(record):
    mu, c = mu_c_mesh()
    worst = 0.0
    for g in (3.0, 4.0, 5.0):
        for q in (0.0, 0.5, 0.9):
            p = ModelParams(g, q)
            worst = max(worst, interior_residual(mu, p), interior_residual(c, p))
    assert record(9, worst < 1e-8, f"max residual of h = mu, h = C {worst:.1e} (< 1e-8)")
