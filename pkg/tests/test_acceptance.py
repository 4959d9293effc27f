"""The acceptance gate: one test per criterion, at the stated tolerances.

Run with ``pytest -v tests/test_acceptance.py`` for one pass/fail line per
criterion.  The heavyweight artifacts (the full default sweep, the four
attack outcomes) are module-scoped fixtures so the invariant criterion can
inspect exactly the simulations the other criteria produced.
"""

import time

import numpy as np
import pytest

from linetsp.adversaries import run_attack
from linetsp.core import Instance, Request, Variant, normalize_instance
from linetsp.engine import check_invariants
from linetsp.experiments import GenParams, gen_instance, draw_mould, sweep
from linetsp.oracle import opt_bruteforce, opt_dp
from linetsp.predictions import apply_mould, side_bound_slack


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def attack_fc():
    return timed(run_attack, "fc", "farfirst", rank_n=201)


@pytest.fixture(scope="module")
def attack_fo():
    return timed(run_attack, "fo", "nearfirst", rank_n=201)


@pytest.fixture(scope="module")
def attack_flf():
    return timed(run_attack, "flf", "pivot", rank_n=201)


@pytest.fixture(scope="module")
def attack_classics():
    return timed(
        lambda: (run_attack("classic-open", "waitcopy"), run_attack("classic-closed", "waitcopy"))
    )


@pytest.fixture(scope="module")
def full_sweep():
    """The default-parameter sweep: 7500 instances, eta grid 0..1 step 0.05,
    all three algorithms, invariant checking on."""
    return timed(sweep, GenParams(seed=20250815))


def test_criterion_1_oracle_differential():
    rng = np.random.default_rng(424242)
    t0 = time.perf_counter()
    for _ in range(500):
        n = int(rng.integers(1, 8))  # plus the origin request: at most 8 total
        reqs = tuple(
            Request(j + 1, float(rng.uniform(-4, 4)), float(rng.uniform(0, 8)))
            for j in range(n)
        )
        for variant in (Variant.OPEN, Variant.CLOSED):
            inst = normalize_instance(Instance(variant, reqs))
            dp = opt_dp(inst)
            bf = opt_bruteforce(inst)
            assert dp.opt_makespan == pytest.approx(bf.opt_makespan, abs=1e-9)
            assert dp.ender_set == bf.ender_set
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    print(f"criterion 1 PASS: 500 dual-variant differentials in {elapsed:.1f}s")


def test_criterion_2_closed_locations_sandwich(attack_fc):
    outcome, elapsed = attack_fc
    assert outcome.oracle.opt_makespan == pytest.approx(4.0, abs=1e-9)
    alpha = 2.0 / 200.0  # rank 201 => finest spacing 2/(rank-1)
    assert (6.0 - 2.0 * alpha) / 4.0 - 1e-6 <= outcome.ratio <= 1.5 + 1e-6
    assert elapsed < 5.0
    print(f"criterion 2 PASS: ratio {outcome.ratio:.6f} in [1.49499, 1.500001], {elapsed:.2f}s")


def test_criterion_3_open_locations_sandwich(attack_fo):
    outcome, elapsed = attack_fo
    assert outcome.oracle.opt_makespan == pytest.approx(3.0, abs=1e-9)
    assert 13.0 / 9.0 - 0.03 <= outcome.ratio <= 5.0 / 3.0 + 1e-6
    assert elapsed < 5.0
    print(f"criterion 3 PASS: ratio {outcome.ratio:.6f} in [1.414, 1.667], {elapsed:.2f}s")


def test_criterion_4_final_request_sandwich(attack_flf):
    outcome, elapsed = attack_flf
    assert outcome.oracle.opt_makespan == pytest.approx(4.0, abs=1e-9)
    assert (5.0 - 2.0 * 0.01) / 4.0 - 1e-6 <= outcome.ratio <= 4.0 / 3.0 + 1e-6
    assert elapsed < 5.0
    print(f"criterion 4 PASS: ratio {outcome.ratio:.6f} in [1.24499, 1.333334], {elapsed:.2f}s")


def test_criterion_5_classic_baselines(attack_classics):
    (open_outcome, closed_outcome), elapsed = attack_classics
    assert open_outcome.oracle.opt_makespan == pytest.approx(1.0, abs=1e-9)
    assert open_outcome.ratio >= 2.0 - 1e-6
    assert closed_outcome.ratio >= 1.60
    assert elapsed < 5.0
    print(
        f"criterion 5 PASS: open {open_outcome.ratio:.4f} >= 2, "
        f"closed {closed_outcome.ratio:.4f} >= 1.60, {elapsed:.2f}s"
    )


def test_criterion_6_full_default_sweep(full_sweep):
    table, elapsed = full_sweep
    assert elapsed < 600.0

    # (a) nobody beats their own theorem bound at the measured errors
    assert table.theorem_violations(tol=1e-6).size == 0
    # (b) global robustness ceiling
    assert float(table.ratio.max()) <= 3.0 + 1e-6

    # (c) seed-dependent maxima, checked against wide windows and logged
    ff = float(table.filter("farfirst").ratio.max())
    nf = float(table.filter("nearfirst").ratio.max())
    pv = table.filter("pivot")
    perfect = (pv.eta <= 0.0) & (pv.delta <= 0.0)
    assert perfect.any()
    pv00 = float(pv.ratio[perfect].max())
    assert 1.3 <= ff <= 2.5
    assert 1.3 <= nf <= 2.4
    assert 1.0 <= pv00 <= 4.0 / 3.0 + 1e-6
    print(
        f"criterion 6 PASS: {len(table)} rows in {elapsed:.0f}s; maxima "
        f"farfirst {ff:.3f} (ref ~2.15), nearfirst {nf:.3f} (ref ~2.05), "
        f"pivot(0,0) {pv00:.3f} (ref ~1.11)"
    )


def test_criterion_7_side_bound_property():
    rng = np.random.default_rng(7)
    params = GenParams(n_max=10, seed=7)
    t0 = time.perf_counter()
    worst = np.inf
    for _ in range(10_000):
        inst = gen_instance(params, rng)
        mould = draw_mould(inst, rng)
        eta = float(rng.uniform(0.0, 1.0))
        preds = apply_mould(inst, mould, eta)
        slack = side_bound_slack(inst.with_predictions(preds))
        worst = min(worst, slack)
        assert slack >= -1e-9
    print(
        f"criterion 7 PASS: 10000 mould pairs, worst slack {worst:.3e} >= -1e-9, "
        f"{time.perf_counter() - t0:.1f}s"
    )


def test_criterion_8_engine_invariants(
    full_sweep, attack_fc, attack_fo, attack_flf, attack_classics
):
    table, _ = full_sweep
    # every sweep simulation went through the engine invariant check (which
    # also pins closed runs to the origin at the end)
    assert table.sims_total > 0
    assert table.sims_checked == table.sims_total

    (open_outcome, closed_outcome), _ = attack_classics
    outcomes = [attack_fc[0], attack_fo[0], attack_flf[0], open_outcome, closed_outcome]
    for outcome in outcomes:
        check_invariants(outcome.sim, outcome.instance)
        if outcome.instance.variant is Variant.CLOSED:
            assert abs(outcome.sim.trajectory.end_pos) <= 1e-9
    print(
        f"criterion 8 PASS: {table.sims_checked} sweep simulations verified, "
        f"{len(outcomes)} attack simulations re-verified"
    )
