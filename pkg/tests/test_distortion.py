import numpy as np
import pytest
from scipy import integrate

from skgeom import distortion as d
from skgeom.errors import DomainError, RangeError
from skgeom.mappings import MappingParams, build_mapping

PR = MappingParams(delta=0.6, alpha1=5.5, alpha2=2.0)
PS = MappingParams(delta=0.49, alpha1=2.75, alpha2=2.04)
PH = MappingParams(delta=0.63, alpha1=2.47, alpha2=3.9)
PM = MappingParams(delta=0.57, alpha1=6.0, alpha2=1.8, a=0.3)


def test_db_conversions():
    assert d.to_db(1000.0) == pytest.approx(30.0)
    assert float(d.from_db(d.to_db(7.3))) == pytest.approx(7.3)


def test_reference_curves():
    assert d.opta_sdr(0.0) == 1.0
    assert d.opta_sdr(1000.0) == pytest.approx(1001 ** (2 / 3))
    assert d.bpam_distortion(0.0) == pytest.approx(1.0)
    # each kept component keeps an MMSE residual 1/(1+snr)
    assert d.bpam_distortion(99.0) == pytest.approx((1 + 2 / 100) / 3)
    assert d.bpam_sdr(np.inf) == pytest.approx(3.0)
    with pytest.raises(DomainError):
        d.opta_sdr(-1.0)


def test_pointwise_expansions():
    s = 0.1
    assert d.mn_pointwise_distortion([(4.0, 0.0), (9.0, 0.0)], s, M=3) == pytest.approx(s * s * 13 / 3)
    assert d.mn_pointwise_distortion([(1.0, 2.0)], s, M=1) == pytest.approx(s * s + 0.75 * 4 * s ** 4)
    assert d.m1_channel_distortion_3rd(1.0, 2.0, 0.5, s, order=1) == pytest.approx(s * s)
    third = d.m1_channel_distortion_3rd(1.0, 2.0, 0.5, s) - d.m1_channel_distortion_3rd(1.0, 2.0, 0.5, s, order=2)
    assert third == pytest.approx(5 / 12 * 4 * 0.25 * s ** 6)
    assert d.one_n_weak_noise_2nd(4.0, 2.0, s) == pytest.approx(s * s / 4 * (1 + 0.25 * s * s * 4))
    assert d.curvature_correction_ratio(1.0, 1.0, 1e-3) == pytest.approx(0.75e-3)
    assert d.curvature_correction_ratio(1.0, 1.0, 1e-3, "expansion") == pytest.approx(0.25e-3)
    with pytest.raises(DomainError):
        d.mn_pointwise_distortion([(1.0, 0.0)], s)


def test_approximation_distortion():
    assert d.uniform_approximation_bound(3, 2, 1.0) == pytest.approx(1 / 36)
    assert d.approximation_distortion("rcasd", 0.6) == pytest.approx(0.01)
    assert d.approximation_distortion("helicoid", 1.0) == pytest.approx(0.026)
    assert d.approximation_distortion("bpam", 1.0) == pytest.approx(1 / 3)
    with pytest.raises(RangeError):
        d.approximation_distortion("helicoid", 3.5)
    with pytest.raises(RangeError):
        d.approximation_distortion("helicoid", 1.0, sigma_x=2.0)


@pytest.mark.parametrize("name,params", [("helicoid", PH), ("rcasd", PR), ("mscds", PM), ("snasu", PS)])
def test_channel_densities_normalized_and_variances(name, params):
    rng = np.random.default_rng(1)
    for st in d.channel_stats(name, params):
        assert st.check_normalized() == pytest.approx(1.0, abs=1e-6)
        lo, hi = st.support
        var, _ = integrate.quad(lambda z: z * z * st.pdf(z), lo, hi, points=[0.0], limit=400)
        assert var == pytest.approx(st.variance, rel=1e-4)
        emp = np.var(st.sampler(rng, 400_000))
        assert emp == pytest.approx(st.variance, rel=0.02)


def test_channel_power_formulas():
    s, eta = 1.0, 0.16
    c1, c2 = d.channel_stats("rcasd", PR)
    assert c1.variance == pytest.approx(2 * (2 * eta * np.pi ** 2 * s) ** 2 / (PR.delta * PR.alpha1) ** 2)
    assert c2.variance == pytest.approx(1 / PR.alpha2 ** 2)
    c1, c2 = d.channel_stats("snasu", PS)
    assert c1.variance == pytest.approx(15 * (eta * np.pi ** 2) ** 2 / (16 * PS.alpha1 ** 2 * PS.delta ** 2))
    assert d.channel_stats("snasu", PS.with_(alpha2=1.0))[1].variance == pytest.approx(2 * (np.pi ** 2 / 4 - 1))
    c1, c2 = d.channel_stats("mscds", PM)
    assert c2.variance == pytest.approx(1 / (PM.alpha2 * PM.B) ** 2)
    h1, h2 = d.channel_stats("helicoid", PH)
    assert h1.variance * PH.alpha1 ** 2 == pytest.approx(2.0)  # R = pi
    assert h2.variance * PH.alpha2 ** 2 == pytest.approx((np.pi / PH.delta) ** 2 + 0.5)
    h2n = d.channel_stats("helicoid", PH, plus_half=False)[1]
    assert h2n.variance * PH.alpha2 ** 2 == pytest.approx((np.pi / PH.delta) ** 2)
    cp = d.channel_power("rcasd", PR)
    assert cp.P == pytest.approx(0.5 * sum(cp.variances))


@pytest.mark.parametrize("name,params,tol", [("helicoid", PH, 1e-6), ("snasu", PS, 1e-4),
                                             ("rcasd", PR, 0.01), ("mscds", PM, 0.01)])
def test_closed_form_matches_quadrature(name, params, tol):
    m = build_mapping(name, params)
    sn = np.sqrt(1e-3)
    cut = sn if m.extras.get("radial") and name != "snasu" else 0.0
    num = d.weak_channel_distortion_integral(m, sigma_n=sn, z_cut=cut)
    assert d.closed_form_weak_distortion(m, sn) == pytest.approx(num, rel=tol)


def test_closed_form_matches_monte_carlo():
    m = build_mapping("snasu", PS)
    sn = 0.03
    mc = d.weak_channel_distortion_integral(m, sigma_n=sn, method="montecarlo", n_mc=400_000, seed=3)
    assert d.closed_form_weak_distortion(m, sn) == pytest.approx(mc, rel=0.02)


def test_simple_closed_forms():
    m = build_mapping("rcasd", MappingParams(alpha1=1.0, alpha2=1.0))
    assert d.closed_form_weak_distortion(m, 0.1) == pytest.approx(0.01 * 2 / 3)
    with pytest.raises(DomainError):
        d.closed_form_weak_distortion(build_mapping("bpam"), 0.1)


def test_snasu_variants_differ_in_second_channel():
    m = build_mapping("snasu", PS)
    ex = d.closed_form_weak_distortion(m, 0.1)
    pr = d.closed_form_weak_distortion(m, 0.1, variant="printed")
    assert pr > ex


def test_snasu_inverse_moment():
    st = d.channel_stats("snasu", PS)[0]
    num, _ = integrate.quad(lambda z: st.pdf(z) / z, 0.0, st.support[1], limit=400)
    assert d.snasu_inverse_moment(PS) == pytest.approx(2 * num, rel=1e-6)
    assert d.snasu_inverse_moment(PS, variant="series") != pytest.approx(2 * num, rel=0.05)


def test_mscds_inner_integral_closed_form():
    for cut in (1e-3, 0.03, 0.3):
        a = d.mscds_I1(PM, z_cut=cut)
        b = d.mscds_I1(PM, z_cut=cut, method="quadrature")
        assert a == pytest.approx(b, rel=1e-8)
    with pytest.raises(DomainError):
        d.mscds_I1(PM, z_cut=0.0)


def test_curvature_term_scales_with_fourth_power_of_noise():
    m = build_mapping("rcasd", PR)
    t1 = d.second_order_channel_term(m, 0.01, n=20000, seed=0)
    t2 = d.second_order_channel_term(m, 0.02, n=20000, seed=0)
    assert t1 > 0
    # same samples, but the cut at |z1| >= sigma_n moves; allow slack
    assert t2 / t1 == pytest.approx(16.0, rel=0.3)


def test_breakdown():
    m = build_mapping("rcasd", PR)
    b = d.analytical_breakdown(m, 1000.0, second_order=False)
    assert b.eps_ch_2nd == 0.0
    assert b.total == pytest.approx(0.01 + 1e-3 * (PR.alpha1 ** 2 + PR.alpha2 ** 2) / 3)
    assert b.sdr() == pytest.approx(1 / b.total)
    with pytest.raises(DomainError):
        d.DistortionBreakdown(-1.0, 0.0)
    bp = d.analytical_breakdown(build_mapping("bpam"), 100.0)
    assert bp.total == pytest.approx(d.bpam_distortion(100.0))


def test_rcasd_asymptotics():
    for snr_db, tol in ((40.0, 0.02), (60.0, 0.01)):
        snr = d.from_db(snr_db)
        assert d.rcasd_high_snr_delta(snr) == pytest.approx(d.rcasd_delta_exact(snr), rel=tol)
    a1 = d.rcasd_alpha1_on_boundary(0.6, 2.0)
    P = d.channel_power("rcasd", MappingParams(delta=0.6, alpha1=a1, alpha2=2.0)).P
    assert P == pytest.approx(1.0, rel=1e-12)


def test_splitting_slope():
    assert d.splitting_slope(2, 1) == 0.5
    assert d.splitting_slope(3, 2) == pytest.approx(1 / 3)
    assert d.splitting_slope(2, 2) == 0.5
    with pytest.raises(DomainError):
        d.splitting_slope(1, 2)
