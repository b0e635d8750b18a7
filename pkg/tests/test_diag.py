import math

import numpy as np
import pytest

import oracles
from lsmrs import (
    chain_variance,
    ess,
    ks_convergence_sequence,
    ks_statistic,
    mse,
)
from lsmrs.diag import report_from_trace


def ar1(phi, n, rng, sigma=1.0):
    innov = rng.standard_normal(n) * sigma
    out = np.empty(n)
    out[0] = innov[0] / math.sqrt(1 - phi**2) if phi else innov[0]
    for t in range(1, n):
        out[t] = phi * out[t - 1] + innov[t]
    return out


class TestEss:
    def test_iid_chain_near_full(self, rng):
        x = rng.standard_normal(100000)
        assert 0.95 <= ess(x) / x.size <= 1.05

    def test_ar1_matches_analytic_truncation(self, rng):
        x = ar1(0.6, 100000, rng)
        expected = oracles.ar1_truncated_ess_fraction(0.6)
        assert expected == pytest.approx(0.259, abs=0.001)
        assert ess(x) / x.size == pytest.approx(expected, abs=0.04)

    def test_antithetic_chain_clamped_to_n(self):
        x = np.tile([1.0, -1.0], 500)
        assert ess(x) == 1000.0

    def test_constant_chain_is_n_with_warning(self, caplog):
        with caplog.at_level("WARNING"):
            assert ess(np.full(50, 3.14)) == 50.0
        assert any("constant" in r.message for r in caplog.records)

    def test_short_chain_rejected(self):
        with pytest.raises(ValueError):
            ess(np.arange(5.0))

    def test_affine_invariance(self, rng):
        x = ar1(0.4, 20000, rng)
        assert ess(3.0 * x - 7.0) == pytest.approx(ess(x), rel=1e-6)

    def test_never_exceeds_n_and_positive(self, rng):
        for _ in range(20):
            x = ar1(float(rng.uniform(-0.9, 0.9)), 500, rng)
            e = ess(x)
            assert 0 < e <= 500


class TestMse:
    def test_exact_chain(self):
        assert mse(np.full(10, 2.5), 2.5) == 0.0

    def test_hand_values(self):
        assert mse([0.0, 2.0], 1.0) == 1.0
        assert mse([1.0, 2.0, 3.0], 0.0) == pytest.approx(14.0 / 3.0, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mse([], 0.0)


class TestVariance:
    def test_constant(self):
        assert chain_variance(np.full(5, 1.0)) == 0.0

    def test_hand_values(self):
        assert chain_variance([0.0, 2.0]) == 2.0
        assert chain_variance([1.0, 2.0, 3.0, 4.0]) == pytest.approx(5.0 / 3.0, abs=1e-12)

    def test_too_short(self):
        with pytest.raises(ValueError):
            chain_variance([1.0])

    def test_bias_variance_identity(self, rng):
        # mse = var * (n-1)/n + (mean - truth)^2
        for _ in range(25):
            x = rng.standard_normal(40) * rng.uniform(0.5, 3)
            truth = float(rng.normal())
            n = x.size
            lhs = mse(x, truth)
            rhs = chain_variance(x) * (n - 1) / n + (x.mean() - truth) ** 2
            assert lhs == pytest.approx(rhs, abs=1e-10)


class TestKs:
    def test_identical_samples(self, rng):
        x = rng.standard_normal(100)
        d, _ = ks_statistic(x, x)
        assert d == 0.0

    def test_disjoint_supports(self):
        d, _ = ks_statistic([0.0], [1.0])
        assert d == 1.0

    def test_critical_value(self):
        _, crit = ks_statistic(np.arange(50.0), np.arange(50.0))
        assert crit == pytest.approx(1.628 * math.sqrt(2.0 / 50.0), abs=1e-12)
        assert crit == pytest.approx(0.32560, abs=1e-5)

    def test_symmetric(self, rng):
        a, b = rng.standard_normal(60), rng.standard_normal(80)
        assert ks_statistic(a, b)[0] == ks_statistic(b, a)[0]

    def test_monotone_transform_invariant(self, rng):
        a, b = rng.standard_normal(60), rng.standard_normal(60)
        d_raw = ks_statistic(a, b)[0]
        d_tr = ks_statistic(np.exp(a), np.exp(b))[0]
        assert d_raw == d_tr

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ks_statistic([], [1.0])

    def test_agrees_with_scipy(self, rng):
        from scipy.stats import ks_2samp
        for _ in range(10):
            a = rng.standard_normal(37)
            b = rng.standard_normal(53) + rng.normal() * 0.3
            assert ks_statistic(a, b)[0] == pytest.approx(
                ks_2samp(a, b).statistic, abs=1e-12)


class TestKsSequence:
    def test_two_windows_one_comparison(self, rng):
        chain = rng.standard_normal(1000)
        seq = ks_convergence_sequence(chain, window=500, thin=10)
        assert len(seq) == 1
        assert seq[0][0] == 0

    def test_level_shift_fails_first_window(self):
        rng = np.random.default_rng(123)
        chain = rng.standard_normal(5000)
        chain[:500] += 10.0
        seq = ks_convergence_sequence(chain, window=500, thin=10)
        assert seq[0][3] is False or seq[0][1] > seq[0][2]  # window 0 rejected
        assert all(ok for (_w, _d, _c, ok) in seq[1:])

    def test_too_short(self, rng):
        with pytest.raises(ValueError):
            ks_convergence_sequence(rng.standard_normal(700), window=500)


class TestReport:
    def test_report_fields(self, default_prior):
        from lsmrs import ChainConfig, run_chain
        from lsmrs.scan import ScanPlan
        from lsmrs.synth import make_dataset, preset
        net, truth = make_dataset(preset("circular-poisson", 6), seed=1)
        trace = run_chain(net, default_prior, ChainConfig(
            iterations=60, seed=2, scan=ScanPlan("mrsg", q0=0.5, damping="none")))
        rep = report_from_trace(trace, truth)
        assert "alpha[r=1,t=1]" in rep.ess
        assert "x[node=1,dim=1,t=1]" in rep.mse
        assert rep.per_coordinate["dim=1"]["ess_mean"] > 0
        assert 0 <= rep.acceptance_means["alpha[r=1,t=1]"] <= 1
        assert rep.runtime_seconds > 0
        # JSON-serializable
        import json
        json.dumps(rep.to_dict())
