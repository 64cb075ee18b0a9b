"""Acceptance criteria, one test per criterion.

Each test prints a single "[acceptance N] PASS/FAIL: ..." line with the
measured numbers, then asserts. Run as ``pytest tests/test_acceptance.py``
or directly as a script.
"""
import sys
import time

import numpy as np
import pytest

import oracles
from levytrap.approximants import (ALPHA, C_NORM, compare_ground_states, default_candidates,
                                   normalization_constant)
from levytrap.grid import Field, build_grid, inner, normalize, trapezoid
from levytrap.kernels import ground_amplitude, transition_density, well_kernel
from levytrap.operators import (apply_stable_generator, cauchy_operator, compatibility_potential,
                                laplacian_operator, make_potential, stable_constant)
from levytrap.spectral import (discretize_hamiltonian, ground_state, imaginary_time_ground,
                               lowest_eigenpairs, solve_finite_brownian_ground)
from levytrap.transport import load_scenario, run_scenario

# -- pinned tolerances -----------------------------------------------------------------
TABLE = {5: 1.1475, 20: 1.6395, 500: 2.2605, 1000: 2.3184, 5000: 2.3989, 50000: 2.4296}
TABLE_TOL = 5e-5
TABLE_SECONDS = 1.0
DEEP_BROWNIAN_SUP = 1e-2
BROWNIAN_SPECTRUM_REL = 1e-2
REFINE_FACTOR, REFINE_TOL = 4.0, 0.15
CAUCHY_ASYMPTOTIC_REL = 1e-2
CAUCHY_E1_REFERENCE, CAUCHY_E1_TOL = 1.1578, 1e-3
CROSS_DE, CROSS_SUP = 2e-2, 1e-3
L1_TARGET = 5e-3
STEP_FACTOR = 2
CK_TOL, MASS_TOL, BALANCE_TOL = 1e-6, 1e-6, 1e-10
ORDER, ORDER_TOL = 2.0, 0.3
C_TOL = 1e-4
EXPONENT, EXPONENT_TOL = 0.5, 0.05
SYMBOL_REL = 1e-2
CONSTANT_TOL = 1e-12
RANDOM_FIELDS = 100


def test_criterion_1_finite_well_table(acceptance):
    t0 = time.perf_counter()
    rows = {V0: solve_finite_brownian_ground(V0).E1 for V0 in TABLE}
    elapsed = time.perf_counter() - t0
    bad = {V0: rows[V0] - TABLE[V0] for V0 in TABLE if abs(rows[V0] - TABLE[V0]) > TABLE_TOL}
    limit_ok = abs(solve_finite_brownian_ground(1e12).E1 - np.pi**2 / 4) < TABLE_TOL
    ok = not bad and limit_ok and elapsed < TABLE_SECONDS
    detail = ", ".join(f"V0={v}: {rows[v]:.6f}" for v in TABLE)
    if bad:
        detail += "; off by " + ", ".join(f"V0={v}: {d:+.2e}" for v, d in bad.items())
    acceptance(1, ok, f"{detail}; deep limit ok={limit_ok}; {elapsed * 1e3:.1f} ms")
    assert not bad, bad
    assert limit_ok and elapsed < TABLE_SECONDS


def test_criterion_2_deep_brownian_wells(acceptance):
    x = np.linspace(-3, 3, 60001)
    cos = np.where(np.abs(x) < 1, np.cos(np.pi * x / 2), 0.0)
    d = [np.abs(solve_finite_brownian_ground(v)(x) - cos).max() for v in TABLE]
    ok = bool(np.all(np.diff(d) < 0)) and d[-1] < DEEP_BROWNIAN_SUP
    acceptance(2, ok, "sup distances " + ", ".join(f"{v:.3g}" for v in d))
    assert ok


def test_criterion_3_brownian_box_spectrum(acceptance):
    V = make_potential("infinite")
    exact = (np.arange(1, 6) * np.pi / 2) ** 2
    errs = {}
    for ppu in (50, 100, 200, 400):
        errs[ppu] = lowest_eigenpairs(discretize_hamiltonian("brownian", V, build_grid(1, ppu)), 5).energies - exact
    rel200 = np.abs(errs[200]) / exact
    ratios = np.array([errs[50] / errs[100], errs[100] / errs[200], errs[200] / errs[400]])
    ok = bool(np.all(rel200 < BROWNIAN_SPECTRUM_REL)
              and np.all(np.abs(ratios / REFINE_FACTOR - 1) < REFINE_TOL))
    acceptance(3, ok, f"max rel err at ppu 200 {rel200.max():.2e}; halving ratios "
                      f"{ratios.min():.3f}..{ratios.max():.3f}")
    assert ok


def test_criterion_4_cauchy_box_asymptotics(acceptance, cauchy_well_spectrum):
    E = cauchy_well_spectrum.energies
    n = np.arange(1, E.size + 1)
    rel = np.abs(E - (n * np.pi / 2 - np.pi / 8)) / E
    ok = bool(np.all(rel[9:15] < CAUCHY_ASYMPTOTIC_REL) and rel[0] > CAUCHY_ASYMPTOTIC_REL
              and abs(E[0] - CAUCHY_E1_REFERENCE) < CAUCHY_E1_TOL)
    acceptance(4, ok, f"n=10..15 max rel dev {rel[9:15].max():.2e}; n=1 rel dev {rel[0]:.3f}; "
                      f"E1 = {E[0]:.6f}")
    assert ok


def test_criterion_5_cross_method(acceptance):
    g = build_grid(50, 40)
    V = make_potential("finite", 500)
    dense = ground_state("cauchy", V, g)
    relaxed = imaginary_time_ground("cauchy", V, g, 1e-3, tol=1e-11)
    dE = abs(dense.energy - relaxed.energy)
    sup = np.abs(dense.state.values - relaxed.state.values).max()
    ok = dE < CROSS_DE and sup < CROSS_SUP
    acceptance(5, ok, f"E1 dense {dense.energy:.6f} vs relaxed {relaxed.energy:.6f} (|dE| {dE:.2e}); "
                      f"sup diff {sup:.2e}")
    assert ok


SCENARIOS = ["fig2_left", "fig2_right", "fig4_left", "fig4_right", "fig5_left", "fig5_right"]


@pytest.mark.slow
@pytest.mark.parametrize("name", SCENARIOS)
def test_criterion_6_equilibration(acceptance, name):
    cfg = load_scenario(name)
    res = run_scenario(cfg, threshold=L1_TARGET, horizon=STEP_FACTOR * cfg.steps)
    final = res.l1_at(cfg.steps)
    first = res.first_below
    at_steps = final < L1_TARGET
    # step counts to convergence are matched to a factor of two
    within = first is not None and first <= STEP_FACTOR * cfg.steps
    ok = at_steps or within
    if at_steps:
        how = "below at the listed step"
    elif first is None:
        how = f"not below within {STEP_FACTOR * cfg.steps} steps"
    else:
        how = f"first below at step {first} (t = {first * cfg.dt:g})"
    acceptance(6, ok, f"{name}: L1 {final:.2e} at step {cfg.steps} (t = {cfg.steps * cfg.dt:g}), {how}; "
                      f"clipped entries {res.stats.flagged}")
    assert ok


def test_criterion_7_kernel_identities(acceptance):
    x = np.linspace(-1, 1, 2001)
    h = x[1] - x[0]
    pairs = [(-0.5, 0.3), (0.0, 0.0), (0.7, -0.2), (0.95, 0.9)]
    ck = max(abs(trapezoid(well_kernel(0.1, a, x) * well_kernel(0.1, x, b), h) - well_kernel(0.2, a, b))
             for a, b in pairs)
    mass = max(abs(trapezoid(transition_density(t, x, y), h) - 1) for y in (-0.5, 0.0, 0.7) for t in (0.1, 1.0))
    rho = lambda z: ground_amplitude(z) ** 2  # noqa: E731
    bal = max(abs(transition_density(t, a, b) * rho(b) - transition_density(t, b, a) * rho(a))
              for a, b in pairs for t in (0.02, 0.3))
    ok = ck < CK_TOL and mass < MASS_TOL and bal <= BALANCE_TOL
    acceptance(7, ok, f"Chapman-Kolmogorov {ck:.1e}, mass {mass:.1e}, detailed balance {bal:.1e}")
    assert ok


def test_criterion_8_potential_forms(acceptance):
    diffs, exact_err = [], []
    for ppu in (10, 20, 40):
        g = build_grid(10, ppu)
        rho = normalize(Field(g, np.exp(-g.x**2 / 2)), "L1")
        lap = compatibility_potential(rho, "laplacian")
        drift = compatibility_potential(rho, "drift")
        core = (np.abs(g.x) <= 5) & lap.mask & drift.mask
        target = g.x**2 / 4 - 0.5
        diffs.append(np.abs(lap.field.values - drift.field.values)[core].max())
        exact_err.append(max(np.abs(lap.field.values - target)[core].max(),
                             np.abs(drift.field.values - target)[core].max()))
    orders = np.log2(np.array(diffs[:-1]) / np.array(diffs[1:]))
    ok = bool(np.all(np.abs(orders - ORDER) < ORDER_TOL)) and exact_err[-1] < 1e-2
    acceptance(8, ok, f"orders {', '.join(f'{o:.3f}' for o in orders)}; "
                      f"max distance to x^2/4 - 1/2 at ppu 40 {exact_err[-1]:.1e}")
    assert ok


def test_criterion_9_approximants(acceptance, cauchy_well_ground):
    ref = cauchy_well_ground.state
    rep = compare_ground_states(default_candidates(), ref)
    sc, kw, co = (rep[n].sup for n in ("semicircle_cosine", "kwasnicki_n1", "cosine"))
    C = normalization_constant(ALPHA)
    x = ref.grid.x
    sel = (x >= 0.9) & (x <= 0.999)
    slope = np.polyfit(np.log(1 - x[sel]), np.log(ref.values[sel]), 1)[0]
    ok = sc < kw and sc < co and abs(C - C_NORM) < C_TOL and abs(slope - EXPONENT) < EXPONENT_TOL
    acceptance(9, ok, f"sup: closed form {sc:.3g}, Kwasnicki n=1 {kw:.3g}, cos {co:.3g}; "
                      f"C = {C:.6f}; boundary exponent {slope:.3f}")
    assert ok


def test_criterion_10_generator(acceptance):
    g = build_grid(50, 40)
    worst = 0.0
    for mu in (0.5, 1.0, 1.5):
        for k in (0.5, 1.0, 2.0):
            f = np.exp(-g.x**2 / 200) * np.cos(k * g.x)
            exact = oracles.windowed_wave_power(g.x, k, 10.0, mu)
            num = -apply_stable_generator(Field(g, f), mu).values
            worst = max(worst, np.abs(num - exact).max() / np.abs(exact).max())
    const = abs(stable_constant(1.0) - 1 / np.pi)

    small = build_grid(5, 20)
    ops = [(laplacian_operator(small), -1.0), (cauchy_operator(small), 1.0)]
    rng = np.random.default_rng(2024)
    sym, pos = 0.0, True
    for _ in range(RANDOM_FIELDS):
        f = Field(small, oracles.smooth_random_field(rng, small.x, span=2.0, width=(0.2, 0.6)))
        k = Field(small, oracles.smooth_random_field(rng, small.x, span=2.0, width=(0.2, 0.6)))
        scale = np.sqrt(inner(f, f) * inner(k, k))
        for op, sgn in ops:
            sym = max(sym, abs(inner(f, op.apply(k)) - inner(op.apply(f), k)) / scale)
            pos = pos and sgn * inner(f, op.apply(f)) >= 0
    ok = worst < SYMBOL_REL and const < CONSTANT_TOL and sym < 1e-6 and pos
    acceptance(10, ok, f"symbol rel err {worst:.2e}; |C_1 - 1/pi| {const:.1e}; "
                       f"symmetry defect {sym:.1e}; positivity {pos} on {RANDOM_FIELDS} fields")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
