import itertools
import math
from decimal import Decimal

import mpmath
import pytest
from hypothesis import given, strategies as st

from fuplab.exponents import (
    FupInputs,
    LogReal,
    T_SEARCH_LIMIT,
    baker_gap_bounds,
    beta_fup,
    beta_hyperbolic,
    chain_for_fup,
    constant_chain,
    fit_shape_constant,
    general_fup_params,
)
from oracles import chain_oracle

DELTAS = (0.2, 0.35, 0.5, 0.65, 0.8)
CRS = (1.0, 1.5, 2.0, 3.0, 5.0)
GRID = list(itertools.product(DELTAS, CRS))


def close(a, b, rel=1e-12):
    return abs(mpmath.mpf(a) - mpmath.mpf(b)) <= rel * max(abs(mpmath.mpf(b)), 1)


# -- LogReal ----------------------------------------------------------------

class TestLogReal:
    def test_kinds(self):
        assert LogReal.direct(0.5).kind == "direct"
        assert LogReal.from_log(-3).kind == "log_only"
        assert LogReal.from_loglog(2).kind == "loglog_only"
        with pytest.raises(ValueError):
            LogReal("weird", 1)
        with pytest.raises(ValueError):
            LogReal.direct(-1.0)
        with pytest.raises(OverflowError):
            LogReal.direct(mpmath.mpf("1e-400"))
        with pytest.raises(ValueError):
            LogReal.from_log(float("inf"))

    def test_best_falls_back_to_log(self):
        assert LogReal.best(-10).kind == "direct"
        assert LogReal.best(-1e4).kind == "log_only"
        assert LogReal.best(1e4).kind == "log_only"

    @given(st.floats(1e-300, 0.999, allow_subnormal=False))
    def test_round_trip_below_one(self, q):
        x = LogReal.direct(q)
        for path in (("log_only", "direct"), ("loglog_only", "direct"), ("loglog_only", "log_only", "direct")):
            y = x
            for kind in path:
                y = y.to(kind)
            assert float(y) == pytest.approx(q, rel=4e-16, abs=0)

    # below ~1e-40 the direct kind cannot tell q from 1 at working precision
    @given(st.floats(-700, 700).filter(lambda v: v == 0 or abs(v) > 1e-40))
    def test_log_round_trip(self, lq):
        x = LogReal.from_log(lq)
        assert float(x.to("direct").to("log_only").value) == lq

    def test_loglog_of_one_or_more_rejected(self):
        with pytest.raises(ValueError):
            LogReal.direct(2.0).to("loglog_only")

    def test_ordering_across_kinds(self):
        tiny = LogReal.from_loglog(1000)
        small = LogReal.from_log(-1e5)
        mid = LogReal.direct(0.25)
        big = LogReal.from_log(1e4)
        assert tiny < small < mid < big
        assert LogReal.direct(0.5) == LogReal.direct(0.5).to("log_only")
        assert LogReal.direct(0.5) != LogReal.from_log(-0.69)
        assert LogReal.from_loglog(300) > LogReal.from_loglog(301)

    def test_float_and_text(self):
        assert float(LogReal.from_loglog(100)) == 0.0
        assert float(LogReal.from_log(1e4)) == math.inf
        assert LogReal.from_log(-2000 * math.log(10)).scientific(4) == "1.0e-2000"
        js = LogReal.direct(0.125).to_json()
        assert js["kind"] == "direct" and js["text"] == "1.250000e-01"
        assert LogReal.from_json(js) == LogReal.direct(0.125)
        with pytest.raises(ValueError):
            LogReal.from_json({"kind": "direct", "value": 1, "extra": 0})

    def test_products(self):
        a, b = LogReal.from_log(-1e5), LogReal.direct(0.5)
        assert close((a * b).log(), -1e5 + math.log(0.5))
        assert close((a ** 3).log(), -3e5)


# -- closed formulas ----------------------------------------------------------

class TestClosedFormulas:
    def test_fup_value(self):
        b = beta_fup(FupInputs(0.5, 1, 1))
        assert b.kind == "loglog_only" and b.value == 256

    def test_hyperbolic_value(self):
        b = beta_hyperbolic(FupInputs(0.5, 1, 1))
        assert b.kind == "loglog_only" and b.value == 65536

    def test_fup_near_one(self):
        b = beta_fup(FupInputs(0.9, 1, 1))
        expected = mpmath.power(mpmath.mpf(1) / (mpmath.mpf("0.9") * mpmath.mpf("0.1")), 100)
        # the stored field is ln(-ln beta) = (1/(0.9*0.1))^100, about 3.9e104
        assert close(b.value, expected, rel=1e-12)
        assert float(b) == 0.0

    def test_cr_makes_beta_smaller(self):
        assert beta_fup(FupInputs(0.5, 2, 1)) < beta_fup(FupInputs(0.5, 1, 1))

    def test_hyperbolic_below_fup(self):
        for d, cr in GRID:
            inp = FupInputs(d, cr, 1)
            assert beta_hyperbolic(inp) <= beta_fup(inp)

    def test_hyperbolic_decreasing_in_delta(self):
        assert beta_hyperbolic(FupInputs(0.75, 1, 1)) < beta_hyperbolic(FupInputs(0.5, 1, 1))

    @pytest.mark.parametrize("f", [beta_fup, beta_hyperbolic])
    def test_monotone_on_grid(self, f):
        for (d, cr1), (_, cr2) in itertools.product(GRID, GRID):
            if cr1 < cr2 and (d, cr2) in GRID:
                assert f(FupInputs(d, cr2, 1)) < f(FupInputs(d, cr1, 1))
        for d, cr in GRID:
            assert f(FupInputs(d, cr, 2)) < f(FupInputs(d, cr, 1))

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5])
    def test_delta_validated(self, bad):
        with pytest.raises(ValueError):
            FupInputs(bad, 1, 1)

    def test_cr_and_k_validated(self):
        with pytest.raises(ValueError):
            FupInputs(0.5, 0.5, 1)
        with pytest.raises(ValueError):
            FupInputs(0.5, 1, 0)

    def test_general_params(self):
        g = general_fup_params(FupInputs(0.5, 1, 1))
        assert g.beta.kind == "log_only" and g.beta.value == -65536
        assert g.rho == 1.0
        assert g.structural_discrepancy and not g.double_exponential

    @given(st.floats(0.05, 0.95), st.floats(1, 2), st.floats(0.01, 0.3))
    def test_general_rho_range(self, d, cr, K):
        g = general_fup_params(FupInputs(d, cr, K))
        assert 0.5 < g.rho <= 1.0
        assert g.beta.log() <= 0


# -- constant chain -------------------------------------------------------------

ANCHOR = (0.5, 1.0, 1 / 18, 1.0)


@pytest.fixture(scope="module")
def anchor_chain():
    return constant_chain(*ANCHOR)


class TestChain:
    def test_reference_values(self, anchor_chain):
        c = anchor_chain
        assert c.L == 81
        assert close(c.M_freq.log(), 139314069504, rel=1e-15)
        assert c.c4.kind == "loglog_only" and close(c.c4.value, 5184, rel=1e-15)
        assert close(c.tau.loglog(), 5184 + math.log(2), rel=1e-15)
        assert close(c.T_iter_log.value, 5183.2128049918239, rel=1e-15)
        assert close(c.beta.loglog(), 5184.69314718056, rel=1e-13)

    def test_matches_arbitrary_precision_oracle(self, anchor_chain):
        c, o = anchor_chain, chain_oracle(*ANCHOR, prec=80)
        def rel(a, b):
            return abs(Decimal(str(mpmath.nstr(mpmath.mpf(a), 40))) - b) / abs(b)
        assert rel(c.c2, o["c2"]) <= 1e-12
        assert rel(c.c3, o["c3"]) <= 1e-12
        for key in ("C1", "C2", "C3"):
            assert rel(c.C[key], o[key]) <= 1e-12
        assert c.L == o["L"]
        assert rel(c.M_freq.log(), o["ln_M_freq"]) <= 1e-12
        assert rel(c.kappa.loglog(), o["loglog_kappa"]) <= 1e-12
        assert rel(c.c4.loglog(), o["loglog_c4"]) <= 1e-12
        assert rel(c.tau.loglog(), o["loglog_tau"]) <= 1e-12
        assert rel(c.T_iter_log.log(), o["ln_T"]) <= 1e-12
        assert rel(c.beta.loglog(), o["loglog_beta"]) <= 1e-12

    @pytest.mark.parametrize("d,cr,c1,K", [ANCHOR, (0.3, 2.0, 0.2, 1.0), (0.7, 1.2, 0.01, 0.5)])
    def test_identities(self, d, cr, c1, K):
        c = constant_chain(d, cr, c1, K)
        assert close(c.c2, c1 ** 6 / K, rel=1e-12)
        assert close(c.c3, c1 * d * (1 - d) / (K * cr ** 2), rel=1e-12)
        assert c.L == math.ceil((3 * cr) ** (2 / (1 - d)) - 1e-9)
        assert close(c.C["C1"], K * cr ** 2 * (1 + math.log(1 / c1)) / (c1 * d * (1 - d)), rel=1e-12)
        # -ln beta = -ln tau + ln 2 + ln T + ln ln L to first order in tau
        lhs = -c.beta.log()
        rhs = -c.tau.log() + mpmath.log(2) + c.T_iter_log.log() + mpmath.log(mpmath.log(c.L))
        assert abs(lhs - rhs) <= 1e-9 * abs(rhs)
        assert c.beta.loglog() > c.c4.loglog()

    @pytest.mark.parametrize("K", [0.01, 0.05, 0.2])
    def test_direct_regime(self, K):
        # tiny K keeps tau a plain double, so T_iter is found by direct search too
        c = constant_chain(0.5, 1.0, 0.5, K)
        assert c.tau.kind == "direct" and c.T_search_ok and c.T_iter <= T_SEARCH_LIMIT
        tau, T, L = float(c.tau), c.T_iter, c.L
        cond = lambda t: (1 - K / L ** (t - 1)) ** -1 * (1 - tau) <= 1 - tau / 2
        assert cond(T) and (T == 1 or not cond(T - 1))
        beta = -math.log1p(-tau / 2) / (T * math.log(L))
        assert float(c.beta) == pytest.approx(beta, rel=1e-12)
        assert beta * 2 * T * math.log(L) / tau == pytest.approx(1, abs=tau)

    def test_first_order_ratio_when_tiny(self, anchor_chain):
        c = anchor_chain
        log_ratio = c.beta.log() + mpmath.log(2) + c.T_iter_log.log() + mpmath.log(mpmath.log(c.L)) - c.tau.log()
        assert abs(log_ratio) <= 1e-9

    @pytest.mark.parametrize("bad", [0.0, 1.0, 1.5, -0.2])
    def test_c1_validated(self, bad):
        with pytest.raises(ValueError):
            constant_chain(0.5, 1.0, bad, 1.0)

    def test_json_is_finite(self, anchor_chain):
        import json
        text = json.dumps(anchor_chain.to_json(), allow_nan=False)
        assert '"loglog_only"' in text

    def test_chain_from_the_other_members_is_smaller(self, anchor_chain):
        assert anchor_chain.c4_from_chain < anchor_chain.c4

    def test_shape_constant_stable(self):
        ks = []
        for d, cr in GRID:
            c = chain_for_fup(d, cr)
            assert float(c.c1) == pytest.approx(1 / (2 * c.L))
            k = fit_shape_constant(d, cr, c.beta.loglog())
            ks.append(k)
        assert max(ks) / min(ks) <= 10

    def test_chain_monotone_in_cr(self):
        for d in DELTAS:
            betas = [chain_for_fup(d, cr).beta for cr in CRS]
            assert all(b2 < b1 for b1, b2 in zip(betas, betas[1:]))


# -- gap bounds -----------------------------------------------------------------

class TestGapBounds:
    def test_pressure_for_mid_third(self):
        g = baker_gap_bounds(3, 2, 1)
        assert g.delta == pytest.approx(math.log(2) / math.log(3), abs=1e-15)
        assert g.pressure == 0.0
        assert not g["gap_p"].applicable and g["gap_t"].applicable

    def test_gap_p_value(self):
        g = baker_gap_bounds(8, 2, 1)
        b = g["gap_p"]
        assert b.applicable and b.base == pytest.approx(1 / 6, abs=1e-15)
        assert b.improvement.kind == "log_only"
        assert close(b.improvement.log(), -720 * mpmath.log(320), rel=1e-14)

    def test_gap_t_value(self):
        d = mpmath.log(2) / mpmath.log(3)
        b = baker_gap_bounds(3, 2, 1)["gap_t"]
        assert close(b.improvement.loglog(), mpmath.power(3, 1 / (1 - d) ** 2), rel=1e-14)

    def test_special_sequence_labels(self):
        g = baker_gap_bounds(8, 2, 1)
        assert g["gap_p_sp"].special_sequence and g["gap_t_sp"].special_sequence
        assert not g["gap_p"].special_sequence and not g["gap_ae"].special_sequence

    def test_additive_energy_applicability(self):
        assert baker_gap_bounds(3, 2, 1)["gap_ae"].applicable
        assert not baker_gap_bounds(64, 2, 10)["gap_ae"].applicable

    @pytest.mark.parametrize("M,A", [(3, 2), (4, 2), (8, 2), (5, 3), (7, 2), (9, 4)])
    def test_improvements_strictly_positive(self, M, A):
        g = baker_gap_bounds(M, A, 1)
        for b in g.bounds.values():
            if b.applicable:
                log_gain = b.improvement.log()
                assert mpmath.isfinite(log_gain)
                # the gain can be far below double resolution, so positivity is
                # read off its logarithm and the sum is only checked not to drop
                assert b.exponent >= g.pressure
                assert b.base >= 0.5 - g.delta - 1e-15 or b.name == "gap_ae"

    @pytest.mark.parametrize("M,A", [(3, 1), (3, 3), (2, 2)])
    def test_invalid_alphabet(self, M, A):
        with pytest.raises(ValueError):
            baker_gap_bounds(M, A, 1)
