import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgdesign.model import (GevParams, ReliabilityData, ScenarioError,
                            annuity_factor, build_islanding_distribution,
                            gev_cdf, validate_scenario)
from mgdesign import toys


class TestAnnuityFactor:
    def test_hand_arithmetic(self):
        assert annuity_factor(1.0, 1.0) == pytest.approx(0.5)

    def test_fifteen_years(self):
        # direct evaluation of the closed form with extended precision
        expected = (1.0 - 1.05 ** -15) / 0.05
        assert expected == pytest.approx(10.3797, abs=1e-4)
        assert annuity_factor(0.05, 15.0) == pytest.approx(expected, rel=1e-12)

    def test_line_lifetime(self):
        expected = (1.0 - 1.05 ** -40) / 0.05
        assert expected == pytest.approx(17.159, abs=1e-3)
        assert annuity_factor(0.05, 40.0) == pytest.approx(expected, rel=1e-12)

    def test_zero_rate_rejected(self):
        with pytest.raises(ScenarioError):
            annuity_factor(0.0, 10.0)
        with pytest.raises(ScenarioError):
            annuity_factor(0.05, 0.0)

    @given(rate=st.floats(0.005, 0.5), lifetime=st.floats(1.0, 60.0),
           bump=st.floats(0.1, 10.0))
    @settings(max_examples=200)
    def test_monotone_in_lifetime(self, rate, lifetime, bump):
        assert annuity_factor(rate, lifetime + bump) > annuity_factor(rate, lifetime)

    @given(rate=st.floats(0.005, 0.5), lifetime=st.floats(1.0, 60.0),
           bump=st.floats(0.005, 0.5))
    @settings(max_examples=200)
    def test_decreasing_in_rate(self, rate, lifetime, bump):
        assert annuity_factor(rate + bump, lifetime) < annuity_factor(rate, lifetime)


class TestIslandingDistribution:
    def test_point_mass(self):
        isl = build_islanding_distribution(GevParams(0, 1, 0), 24, 1e-4,
                                           point_mass_h=5)
        assert isl.duration_probs[4] == 1.0
        assert sum(isl.duration_probs) == 1.0
        assert isl.expected_duration_h == 5.0

    def test_gumbel_matches_independent_cdf(self):
        # oracle: scipy's extreme-value CDF, independent of our closed form
        from scipy.stats import genextreme

        gev = GevParams(mu=8.0, sigma=4.0, xi=0.0)
        isl = build_islanding_distribution(gev, 24, 2.283e-4)
        cdf = lambda x: genextreme.cdf(x, c=-gev.xi, loc=gev.mu, scale=gev.sigma)
        total = cdf(24.0)
        expected = [cdf(1.0) / total]
        expected += [(cdf(k) - cdf(k - 1)) / total for k in range(2, 25)]
        assert sum(isl.duration_probs) == pytest.approx(1.0, abs=1e-9)
        for got, want in zip(isl.duration_probs, expected):
            assert got == pytest.approx(want, abs=1e-12)

    def test_occurrence_probability_stored_unchanged(self):
        isl = build_islanding_distribution(GevParams(8, 4, 0), 24, 2.283e-4)
        assert isl.p_start == 2.283e-4
        assert isl.events_per_year == pytest.approx(2.283e-4 * 8760)

    def test_no_mass_within_horizon(self):
        # xi > 0 with support entirely above the horizon
        with pytest.raises(ScenarioError):
            build_islanding_distribution(GevParams(mu=100.0, sigma=1.0, xi=0.5),
                                         horizon_h=4, p_start=1e-4)

    @given(mu=st.floats(1.0, 20.0), sigma=st.floats(0.5, 8.0),
           xi=st.floats(-0.4, 0.4), horizon=st.integers(2, 48))
    @settings(max_examples=150)
    def test_mass_sums_to_one(self, mu, sigma, xi, horizon):
        try:
            isl = build_islanding_distribution(GevParams(mu, sigma, xi),
                                               horizon, 1e-4)
        except ScenarioError:
            return  # no mass within the horizon: documented failure mode
        assert sum(isl.duration_probs) == pytest.approx(1.0, abs=1e-9)
        assert all(p >= 0 for p in isl.duration_probs)

    @given(mu=st.floats(1.0, 10.0), sigma=st.floats(0.5, 5.0),
           short=st.integers(3, 10), ext=st.integers(1, 30))
    @settings(max_examples=100)
    def test_truncation_preserves_ratios(self, mu, sigma, short, ext):
        gev = GevParams(mu, sigma, 0.0)
        try:
            a = build_islanding_distribution(gev, short, 1e-4)
            b = build_islanding_distribution(gev, short + ext, 1e-4)
        except ScenarioError:
            return  # all mass beyond the short horizon: documented failure mode
        # rescaling changes the normalizer only, never relative weights
        for j in range(short):
            for k in range(short):
                if b.duration_probs[k] > 1e-12 and a.duration_probs[k] > 1e-12:
                    assert (a.duration_probs[j] / a.duration_probs[k]
                            == pytest.approx(b.duration_probs[j] / b.duration_probs[k],
                                             rel=1e-9))

    def test_gev_cdf_requires_positive_scale(self):
        with pytest.raises(ScenarioError):
            gev_cdf(1.0, GevParams(0, 0, 0))


class TestValidateScenario:
    def test_toy_passes(self):
        cfg = toys.toy_feeder()
        assert validate_scenario(cfg) is cfg

    def test_export_above_import_rejected(self):
        import dataclasses

        cfg = toys.toy_feeder()
        export = list(cfg.tariff.export_usd_kwh)
        export[7] = cfg.tariff.import_usd_kwh[7] + 0.01
        bad = dataclasses.replace(cfg, tariff=dataclasses.replace(
            cfg.tariff, export_usd_kwh=tuple(export)))
        with pytest.raises(ScenarioError, match="hour 7"):
            validate_scenario(bad)

    def test_line_rate_scales_with_length(self):
        from mgdesign.model import Line

        rel = ReliabilityData(cable_rate_per_mile_y=0.1)
        line = Line("l", "a", "b", r_pu=0.01, rating_kva=100, length_mi=2.0)
        assert rel.line_rate(line) == pytest.approx(0.2)

    def test_zero_charge_efficiency_rejected(self):
        import dataclasses

        cfg = toys.toy_feeder()
        broken = tuple(dataclasses.replace(s, eta_ch=0.0)
                       if s.kind == "Storage" else s for s in cfg.ders)
        with pytest.raises(ScenarioError, match="eta_ch"):
            validate_scenario(dataclasses.replace(cfg, ders=broken))

    def test_violations_are_aggregated(self):
        import dataclasses

        cfg = toys.toy_feeder()
        broken = tuple(dataclasses.replace(s, eta_ch=0.0, dod_max=2.0)
                       if s.kind == "Storage" else s for s in cfg.ders)
        with pytest.raises(ScenarioError) as err:
            validate_scenario(dataclasses.replace(cfg, ders=broken))
        assert len(err.value.violations) >= 2

    def test_weights_must_cover_year(self):
        import dataclasses

        cfg = toys.toy_feeder()
        day = dataclasses.replace(cfg.days[0], weight=300.0)
        with pytest.raises(ScenarioError, match="365"):
            validate_scenario(dataclasses.replace(cfg, days=(day,)))
