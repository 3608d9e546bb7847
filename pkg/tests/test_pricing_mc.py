"""The Monte Carlo pricing operator: decompositions, parity, equivalence,
defects, infinite-price verdicts and estimator properties."""

import math

import numpy as np
import pytest

from dualfx import InfiniteContribution, MCConfig
from dualfx.catalog import get_model
from dualfx.pricing import (CLAIM_KINDS, Claim, intl_equivalence_table,
                            make_batches, make_claim, martingale_defect,
                            parity_table, price, price_euro_side,
                            scheme_convergence, tail_diagnostic)
from tests.test_oracles import DUAL_ABSORPTION, EXPECTED_X

CFG = MCConfig(n=100_000, seed=7)


@pytest.fixture(scope="module")
def bessel_batches():
    return make_batches(get_model("recip_bessel").model, CFG)


def test_euro_forward_decomposition(bessel_batches):
    model = get_model("recip_bessel").model
    p = price(model, make_claim("euro_forward"), CFG, bessel_batches)
    assert abs(p.classical.mean - EXPECTED_X) <= 3 * p.classical.stderr
    assert abs(p.correction.mean - DUAL_ABSORPTION) <= 3 * p.correction.stderr
    assert abs(p.total_dollar - 1.0) <= 3 * p.total_stderr
    assert p.total_euro * model.x0 == p.total_dollar
    assert not p.flags


def test_euro_side_decomposition_matches(bessel_batches):
    model = get_model("recip_bessel").model
    claim = make_claim("call", 1.0)
    p = price(model, claim, CFG, bessel_batches)
    ec, ecorr = price_euro_side(model, claim, CFG, bessel_batches)
    pe = ec.mean + ecorr.mean
    se = math.hypot(ec.stderr, ecorr.stderr, p.total_stderr)
    assert abs(p.total_euro - pe) <= 3 * se


def test_singular_forward_is_pure_correction():
    model = get_model("singular_timechange").model
    p = price(model, make_claim("euro_forward"), MCConfig(n=50_000, seed=3))
    assert p.classical.mean == 0.0
    assert p.correction.mean == 1.0
    assert p.correction.stderr == 0.0
    assert p.total_dollar == 1.0


def test_baseline_call_matches_lognormal_value():
    entry = get_model("exp_martingale_baseline")
    p = price(entry.model, make_claim("call", 1.25), MCConfig(n=100_000, seed=11))
    assert p.correction.mean == 0.0
    want = entry.analytic["call"](1.25)
    assert abs(p.total_dollar - want) <= 3 * p.total_stderr


def test_self_quantoed_analytic_infinity():
    for name in ("recip_bessel", "singular_timechange"):
        model = get_model(name).model
        p = price(model, make_claim("self_quantoed", 1.0),
                  MCConfig(n=20_000, seed=1))
        assert p.flags.get("analytic_infinite") is True
        assert p.total_dollar == math.inf and p.total_euro == math.inf
        assert p.correction is None
        assert p.classical is not None and math.isfinite(p.classical.mean)


def test_unknown_flag_propagates_infinite_contribution():
    model = get_model("qnv(1,0,0)").model   # same dynamics, no verdict
    with pytest.raises(InfiniteContribution):
        price(model, make_claim("self_quantoed", 1.0),
              MCConfig(n=20_000, steps=32, seed=1))


def test_baseline_self_quantoed_is_finite():
    model = get_model("exp_martingale_baseline").model
    p = price(model, make_claim("self_quantoed", 1.0), MCConfig(n=20_000, seed=2))
    assert math.isfinite(p.total_dollar)
    assert p.correction.mean == 0.0


def test_total_euro_scales_exactly_with_spot():
    model = get_model("recip_bessel", x0=2.0).model
    p = price(model, make_claim("euro_forward"), MCConfig(n=20_000, seed=3))
    assert p.total_euro * 2.0 == p.total_dollar
    assert abs(p.total_dollar - 2.0) <= 4 * p.total_stderr


def test_claim_pairs_consistent_on_finite_rates():
    rng = np.random.default_rng(123)
    x = rng.uniform(0.02, 8.0, 10_000)
    for kind in CLAIM_KINDS:
        claim = make_claim(kind, None if kind in ("euro_forward",
                                                  "digital_explosion") else 0.7)
        np.testing.assert_allclose(claim.euro_finite(x),
                                   claim.dollar_finite(x) / x,
                                   rtol=1e-12, atol=1e-15, err_msg=kind)


def test_parity_table_recip_bessel(bessel_batches):
    model = get_model("recip_bessel").model
    rows = parity_table(model, [0.5, 1.0, 2.0], CFG)
    for row in rows:
        assert abs(row.residual) <= 3 * row.residual_stderr
        assert abs(row.classical_violation + DUAL_ABSORPTION) \
            <= 3 * row.violation_stderr
        assert abs(row.minus_correction_mass + DUAL_ABSORPTION) \
            <= 3 * row.mass_stderr


def test_parity_table_zero_strike_degenerates_to_forward():
    model = get_model("recip_bessel").model
    rows = parity_table(model, [0.0], CFG)
    row = rows[0]
    fwd = price(model, make_claim("euro_forward"), CFG,
                make_batches(model, CFG))
    assert row.put.total_dollar == 0.0
    assert row.call.total_dollar == fwd.total_dollar
    assert abs(row.residual) <= 3 * row.residual_stderr


def test_parity_table_martingale_baseline():
    model = get_model("exp_martingale_baseline").model
    for row in parity_table(model, [0.5, 1.0, 2.0], MCConfig(n=50_000, seed=19)):
        assert row.minus_correction_mass == 0.0
        assert abs(row.residual) <= 3 * row.residual_stderr
        assert abs(row.classical_violation) <= 3 * row.violation_stderr


def test_intl_equivalence():
    for name, seed in (("recip_bessel", 23), ("exp_martingale_baseline", 29),
                       ("stopped_bm", 31)):
        model = get_model(name).model
        for row in intl_equivalence_table(model, [0.5, 1.0, 2.0],
                                          MCConfig(n=60_000, seed=seed)):
            assert abs(row.z_call) <= 3.0, (name, row)
            assert abs(row.z_put) <= 3.0, (name, row)


def test_intl_equivalence_tiny_strike():
    model = get_model("recip_bessel").model
    rows = intl_equivalence_table(model, [0.01], MCConfig(n=40_000, seed=37))
    assert abs(rows[0].z_call) <= 3.0 and abs(rows[0].z_put) <= 3.0


def test_martingale_defect_reports():
    rb = martingale_defect(get_model("recip_bessel").model, CFG)
    assert rb.strict
    assert abs(rb.z) <= 3.0
    assert abs(rb.defect - DUAL_ABSORPTION) <= 3 * rb.defect_stderr
    base = martingale_defect(get_model("exp_martingale_baseline").model,
                             MCConfig(n=50_000, seed=13))
    assert not base.strict
    assert base.dual_mass == 0.0
    sing = martingale_defect(get_model("singular_timechange").model,
                             MCConfig(n=20_000, seed=17))
    assert sing.defect == 1.0 and sing.dual_mass == 1.0 and sing.z == 0.0
    assert sing.strict


def test_monotonicity_in_strike_on_shared_batches():
    model = get_model("recip_bessel").model
    batches = make_batches(model, MCConfig(n=30_000, seed=41))
    strikes = [0.25, 0.5, 1.0, 2.0, 4.0]
    calls = [price(model, make_claim("call", k), CFG, batches).total_dollar
             for k in strikes]
    puts = [price(model, make_claim("put", k), CFG, batches).total_dollar
            for k in strikes]
    assert all(a >= b for a, b in zip(calls, calls[1:]))
    assert all(a <= b for a, b in zip(puts, puts[1:]))


def test_estimator_linearity_on_identical_batches():
    model = get_model("recip_bessel").model
    batches = make_batches(model, MCConfig(n=20_000, seed=43))
    c1, c2 = make_claim("call", 1.0), make_claim("put", 1.0)
    a = 2.5
    combo = Claim("combo", None,
                  lambda x: c1.dollar_finite(x) + a * c2.dollar_finite(x),
                  lambda x: c1.euro_finite(x) + a * c2.euro_finite(x),
                  c1.euro_at_explosion + a * c2.euro_at_explosion)
    p = price(model, combo, CFG, batches)
    p1 = price(model, c1, CFG, batches)
    p2 = price(model, c2, CFG, batches)
    assert p.classical.mean == pytest.approx(
        p1.classical.mean + a * p2.classical.mean, abs=1e-12)
    assert p.correction.mean == pytest.approx(
        p1.correction.mean + a * p2.correction.mean, abs=1e-12)


def test_tail_diagnostic_grows_for_nonintegrable_claims():
    claim = make_claim("self_quantoed", 1.0)
    for name in ("recip_bessel", "singular_timechange"):
        pts = tail_diagnostic(get_model(name).model, claim,
                              [1000, 10_000, 100_000],
                              MCConfig(seed=7, steps=16))
        means = [p.running_mean for p in pts]
        assert means[0] < means[1] < means[2], (name, means)


def test_scheme_convergence_recip_bessel():
    ref, rows = scheme_convergence(get_model("recip_bessel").model,
                                   [32, 128, 512], MCConfig(n=40_000, seed=1))
    diffs = [r.abs_diff for r in rows]
    assert diffs[0] > diffs[1] > diffs[2]
    assert diffs[2] < 0.05


def test_scheme_convergence_euler_exact_for_bm():
    """Constant volatility: euler with bridge absorption is already exact, so
    every refinement level sits within noise of the exact scheme."""
    ref, rows = scheme_convergence(get_model("stopped_bm").model,
                                   [8, 32, 128], MCConfig(n=50_000, seed=2))
    for r in rows:
        assert r.abs_diff <= 4 * math.hypot(r.stderr, ref.stderr)
