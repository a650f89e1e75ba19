"""System-level laws: exact formulas vs simulation, wrappers, config plumbing."""

import math
import pickle

import numpy as np
import pytest
from scipy import stats
from scipy.special import zeta as scipy_zeta

from extlab.copulas import ClaytonGenerator, IndependenceGenerator, TiltedGenerator, diag_cdf
from extlab.sampling import (
    Degenerate,
    Pareto,
    PositiveStable,
    RandomStream,
    SymmetricStable,
    TwoPoint,
)
from extlab.systems import (
    BranchingHereditySystem,
    Calibrator,
    ConfigError,
    DuplicatedIidSystem,
    ExchangeableCopulaSystem,
    GeometricThresholdSystem,
    MixtureSpikeSystem,
    MonotoneTransformSystem,
    PowerLawGraphSystem,
    PowerTransform,
    RandomThresholdSystem,
    SizeJitterSystem,
    StableSizeGumbelSystem,
    build_system,
    mean_F_pow_nu,
    sample_replicate,
)


def _rng(seed, sid=0):
    return RandomStream(seed=seed, stream_id=sid).generator


def _empirical_max_matches_exact(system, n, probes, draws=60_000, seed=42):
    _, m = system.sample_batch(n, draws, _rng(seed))
    for u in probes:
        want = float(system.exact_max_cdf(n, u))
        got = float(np.mean(m <= u))
        se = math.sqrt(max(want * (1.0 - want), 1e-12) / draws)
        assert abs(got - want) < 4.0 * se + 1e-9, (system.name, u, got, want)


# ---------------------------------------------------------------------------
# exchangeable copula

def test_copula_exact_laws():
    sys_ = ExchangeableCopulaSystem(ClaytonGenerator(1.0))
    assert float(sys_.exact_max_cdf(2, 0.5)) == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert float(sys_.exact_mean_F_pow_nu(10, 0.9, r=2.0)) == pytest.approx(0.9**20, rel=1e-12)
    assert float(sys_.closed_form_u(100, 0.5)) == pytest.approx(0.5**0.01, rel=1e-12)


def test_copula_max_simulation_matches_diagonal():
    sys_ = ExchangeableCopulaSystem(ClaytonGenerator(1.0))
    _empirical_max_matches_exact(sys_, 64, [0.9, 0.97, 0.995])


def test_tilted_copula_max_simulation_matches_diagonal():
    gen = TiltedGenerator(IndependenceGenerator(), gamma=math.log(2.0))
    sys_ = ExchangeableCopulaSystem(gen)
    _empirical_max_matches_exact(sys_, 256, [0.985, 0.995, 0.999])
    # the exact max law is the tilted diagonal
    assert float(sys_.exact_max_cdf(256, 0.99)) == pytest.approx(
        float(diag_cdf(gen, 256, 0.99)), rel=1e-12
    )


def test_tilted_copula_validates_stage():
    sys_ = ExchangeableCopulaSystem(TiltedGenerator(ClaytonGenerator(1.0), gamma=2.0))
    with pytest.raises(ConfigError):
        sys_.validate_n(2)
    with pytest.raises(ConfigError):
        sys_.validate_n(7)  # ln 7 < 2
    sys_.validate_n(8)


# ---------------------------------------------------------------------------
# duplicated iid

def test_duplicated_iid_group_count():
    sys_ = DuplicatedIidSystem(2)
    assert float(sys_.exact_max_cdf(10, 0.9)) == pytest.approx(0.9**5, rel=1e-12)
    assert float(DuplicatedIidSystem(3).exact_max_cdf(11, 0.9)) == pytest.approx(
        0.9**4, rel=1e-12
    )
    _empirical_max_matches_exact(sys_, 10, [0.7, 0.9, 0.98])


def test_duplicated_iid_size_inverse_roundtrip():
    sys_ = DuplicatedIidSystem(4)
    d = np.array([4, 5, 8, 9])
    v = np.array([0.3, 0.5, 0.7, 0.9])
    u = sys_.max_inverse_given_size(d, v)
    assert np.allclose(sys_.max_cdf_given_size(d, u), v, rtol=1e-12)


def test_duplicated_iid_validates_m():
    with pytest.raises(ConfigError):
        DuplicatedIidSystem(1)


# ---------------------------------------------------------------------------
# mixture spike

def test_mixture_spike_exact_laws():
    sys_ = MixtureSpikeSystem(2.0)
    assert float(sys_.exact_max_cdf(10, 0.9)) == pytest.approx(0.9**29, rel=1e-12)
    want = 0.9 * (1.0 + (0.9**19 - 1.0) / 10.0)
    assert float(sys_.marginal_cdf(10, 0.9)) == pytest.approx(want, rel=1e-12)
    assert float(sys_.marginal_cdf(10, 1.0)) == 1.0
    assert float(sys_.marginal_cdf(10, 0.0)) == 0.0


def test_mixture_spike_max_simulation():
    _empirical_max_matches_exact(MixtureSpikeSystem(1.0), 10, [0.85, 0.95, 0.99])


# ---------------------------------------------------------------------------
# geometric threshold

def test_geometric_threshold_construction():
    sys_ = GeometricThresholdSystem(eps=0.1)
    nu, m = sys_.sample_batch(50, 100_000, _rng(7))
    assert np.all(m > 0.9)
    se = nu.std(ddof=1) / math.sqrt(nu.size)
    assert abs(nu.mean() - 10.0) < 4.0 * se


def test_geometric_threshold_exact_values():
    sys_ = GeometricThresholdSystem(eps=0.01)
    u = 0.5 / 0.505
    assert float(sys_.exact_mean_F_pow_nu(1000, u)) == pytest.approx(0.5, rel=1e-9)
    assert float(sys_.closed_form_u(1000, 0.5)) == pytest.approx(u, rel=1e-12)
    assert float(GeometricThresholdSystem(eps=0.2).exact_max_cdf(10, 0.9)) == pytest.approx(
        0.5, rel=1e-12
    )


def test_geometric_threshold_schedule_and_validation():
    sched = GeometricThresholdSystem(eps_exponent=0.5)
    assert sched.eps_at(10_000) == pytest.approx(0.01, rel=1e-12)
    with pytest.raises(ConfigError):
        GeometricThresholdSystem()
    with pytest.raises(ConfigError):
        GeometricThresholdSystem(eps=0.1, eps_exponent=0.5)
    with pytest.raises(ConfigError):
        GeometricThresholdSystem(eps=1.0)


# ---------------------------------------------------------------------------
# random threshold

def test_random_threshold_needs_mean_one():
    with pytest.raises(ConfigError):
        RandomThresholdSystem(TwoPoint(0.5, 1.6))
    RandomThresholdSystem(TwoPoint(0.5, 1.5))
    RandomThresholdSystem(Pareto(3.0, 2.0 / 3.0))


def test_random_threshold_size_law():
    sys_ = RandomThresholdSystem(TwoPoint(0.5, 1.5))
    n = 1000
    nu = sys_.sample_nu(n, 200_000, _rng(9))
    # E nu = n E(1/zeta) = 4n/3 for the balanced two-point law
    se = nu.std(ddof=1) / math.sqrt(nu.size)
    assert abs(nu.mean() - 4.0 * n / 3.0) < 4.0 * se


def test_random_threshold_exact_max_two_point():
    sys_ = RandomThresholdSystem(TwoPoint(0.5, 1.5))
    n = 1000
    # threshold mass is entirely below n, so the mixture is exact:
    # P(M <= 1 - w/n) = E (zeta - w)_+ / E zeta
    for w, want in ((0.3, 0.7), (0.9, 0.3), (1.2, 0.15), (1.6, 0.0)):
        assert float(sys_.exact_max_cdf(n, 1.0 - w / n)) == pytest.approx(want, abs=1e-12)
    assert float(sys_.exact_max_cdf(n, 1.0)) == pytest.approx(1.0, abs=1e-12)


def test_random_threshold_max_simulation():
    sys_ = RandomThresholdSystem(TwoPoint(0.5, 1.5))
    n = 1000
    _empirical_max_matches_exact(sys_, n, [1.0 - w / n for w in (0.3, 0.9, 1.2)],
                                 draws=100_000)


def test_random_threshold_exact_mean_two_point():
    sys_ = RandomThresholdSystem(TwoPoint(0.5, 1.5))
    n, u = 1000, 0.999
    want = 0.5 * sum(
        (z / n) * u / (1.0 - (1.0 - z / n) * u) for z in (0.5, 1.5)
    )
    assert float(sys_.exact_mean_F_pow_nu(n, u)) == pytest.approx(want, rel=1e-12)


def test_random_threshold_degenerate_collapses_to_geometric():
    rt = RandomThresholdSystem(Degenerate(1.0))
    gt = GeometricThresholdSystem(eps=0.001)
    n = 1000
    for u in (0.9995, 0.9999):
        assert float(rt.exact_max_cdf(n, u)) == pytest.approx(
            float(gt.exact_max_cdf(n, u)), rel=1e-9
        )
        assert float(rt.exact_mean_F_pow_nu(n, u)) == pytest.approx(
            float(gt.exact_mean_F_pow_nu(n, u)), rel=1e-9
        )


def test_random_threshold_pareto_variant_runs():
    sys_ = RandomThresholdSystem(Pareto(3.0, 2.0 / 3.0))
    assert sys_.zeta_biased.a == pytest.approx(2.0)
    nu, m = sys_.sample_batch(500, 20_000, _rng(11))
    assert np.all(nu >= 1) and np.all((m > 0.0) & (m < 1.0))
    got = float(np.mean(m <= 1.0 - 0.5 / 500))
    want = float(sys_.exact_max_cdf(500, 1.0 - 0.5 / 500))
    assert abs(got - want) < 4.0 * math.sqrt(want * (1 - want) / 20_000)


# ---------------------------------------------------------------------------
# stable size gumbel

def test_stable_size_distribution():
    sys_ = StableSizeGumbelSystem(beta=0.5, gamma=0.0)
    n = 10_000
    nu = sys_.sample_nu(n, 20_000, _rng(13))
    s = PositiveStable(0.5).sample(_rng(14), 20_000)
    assert stats.ks_2samp(nu / n, s).pvalue > 0.01


def test_stable_size_calibration_hits_target():
    sys_ = StableSizeGumbelSystem(beta=0.5, gamma=math.log(2.0))
    n = 10_000
    cal = Calibrator(sys_, n, stream=RandomStream(seed=15, stream_id=0))
    for s in (0.3, 0.6, 0.9):
        u = float(sys_.closed_form_u(n, s))
        got = float(cal.value(np.array([u]))[0])
        se = float(cal.stderr_at(np.array([u]))[0])
        # rounding nu to integers costs O(tau/n) on top of the pool noise
        assert abs(got - s) < 4.0 * se + 2e-3


def test_stable_size_validates_stage():
    sys_ = StableSizeGumbelSystem(beta=0.5, gamma=2.0)
    with pytest.raises(ConfigError):
        sys_.validate_n(2)
    with pytest.raises(ConfigError):
        sys_.validate_n(7)
    with pytest.raises(ConfigError):
        StableSizeGumbelSystem(beta=1.0, gamma=0.5)


# ---------------------------------------------------------------------------
# branching heredity

def test_branching_index_value():
    sys_ = BranchingHereditySystem({1: 0.5, 3: 0.5}, gamma=1.0, a=0.5)
    assert sys_.theta_def2() == pytest.approx(2.0 / 3.0, rel=1e-12)
    assert sys_.mu == pytest.approx(2.0)
    assert sys_.b == pytest.approx(0.5)


def test_branching_validates_offspring():
    with pytest.raises(ConfigError):
        BranchingHereditySystem({1: 0.6, 3: 0.5}, gamma=1.0, a=0.5)
    with pytest.raises(ConfigError):
        BranchingHereditySystem({0: 0.5, 4: 0.5}, gamma=1.0, a=0.5)
    with pytest.raises(ConfigError):
        BranchingHereditySystem({1: 1.0}, gamma=1.0, a=0.5)
    with pytest.raises(ConfigError):
        BranchingHereditySystem({1: 0.5, 3: 0.5}, gamma=2.5, a=0.5)
    with pytest.raises(ConfigError):
        BranchingHereditySystem({1: 0.5, 3: 0.5}, gamma=1.0, a=1.0)


def test_branching_budget_guard():
    sys_ = BranchingHereditySystem({2: 1.0}, gamma=1.0, a=0.5, particle_budget=1000)
    sys_.validate_n(9)  # 2^9 = 512
    with pytest.raises(ConfigError):
        sys_.validate_n(10)  # 2^10 = 1024


def test_branching_deterministic_doubling():
    sys_ = BranchingHereditySystem({2: 1.0}, gamma=2.0, a=0.3)
    nu, m = sys_.sample_batch(5, 300, _rng(17))
    assert np.all(nu == 32)
    assert np.all(np.isfinite(m))
    assert np.array_equal(sys_.sample_nu(5, 10, _rng(18)), np.full(10, 32))


def test_branching_size_laws_agree():
    sys_ = BranchingHereditySystem({1: 0.5, 3: 0.5}, gamma=1.0, a=0.5)
    n = 6
    nu_a = sys_.sample_batch(n, 4000, _rng(19))[0]
    nu_b = sys_.sample_nu(n, 4000, _rng(20))
    se = math.hypot(nu_a.std(ddof=1) / math.sqrt(nu_a.size),
                    nu_b.std(ddof=1) / math.sqrt(nu_b.size))
    assert abs(nu_a.mean() - nu_b.mean()) < 4.0 * se
    for k in (1, 4, 16):
        pa, pb = float(np.mean(nu_a <= k)), float(np.mean(nu_b <= k))
        s = math.sqrt(pa * (1 - pa) / nu_a.size + pb * (1 - pb) / nu_b.size)
        assert abs(pa - pb) < 4.0 * s + 1e-9


def test_heredity_step_preserves_stable_marginal():
    # the b weight is chosen so a X + b X' is again standard stable
    gamma, a = 1.3, 0.6
    b = (1.0 - a**gamma) ** (1.0 / gamma)
    dist = SymmetricStable(gamma)
    x = dist.sample(_rng(21), 40_000)
    y = dist.sample(_rng(22), 40_000)
    z = dist.sample(_rng(23), 40_000)
    assert stats.ks_2samp(a * x + b * y, z).pvalue > 0.01


def test_branching_cauchy_root_marginal():
    sys_ = BranchingHereditySystem({1: 0.5, 3: 0.5}, gamma=1.0, a=0.5)
    x = sys_.sample_marginal(4, 40_000, _rng(24))
    assert stats.kstest(x, "cauchy").pvalue > 0.01


# ---------------------------------------------------------------------------
# power-law graph

def test_graph_mean_degree_against_series():
    sys_ = PowerLawGraphSystem(beta=3.5, a=1.0)
    k = np.arange(1, 20_001, dtype=float)
    num = float(np.sum(k**-2.5)) + 20_000.5 ** (-1.5) / 1.5
    den = float(np.sum(k**-3.5)) + 20_000.5 ** (-2.5) / 2.5
    assert sys_.mean_degree() == pytest.approx(num / den, abs=1e-9)
    assert sys_.mean_degree() == pytest.approx(
        float(scipy_zeta(2.5) / scipy_zeta(3.5)), rel=1e-12
    )


def test_graph_parameter_conditions():
    PowerLawGraphSystem(beta=3.5, a=1.2)
    PowerLawGraphSystem(beta=2.5, a=0.4)
    with pytest.raises(ConfigError):
        PowerLawGraphSystem(beta=3.5, a=3.0)
    with pytest.raises(ConfigError):
        PowerLawGraphSystem(beta=3.5, a=1.25)
    with pytest.raises(ConfigError):
        PowerLawGraphSystem(beta=2.5, a=0.5)
    with pytest.raises(ConfigError):
        PowerLawGraphSystem(beta=2.0, a=0.1)


def test_graph_picks_are_distinct_and_not_self():
    sys_ = PowerLawGraphSystem(beta=3.5, a=1.0)
    rng = _rng(25)
    n = 50
    for d_val in (3, 30):  # small-degree rejection path and permutation path
        d = np.full(n, d_val)
        src, pick = sys_._distinct_picks(n, d, rng)
        assert src.size == n * d_val
        assert np.all(pick != src)
        for v in range(n):
            grp = pick[src == v]
            assert grp.size == d_val
            assert np.unique(grp).size == d_val
            assert np.all((grp >= 0) & (grp < n))


def test_graph_aggregates_bounded_below():
    sys_ = PowerLawGraphSystem(beta=3.5, a=1.0, x_min=2.0)
    x = sys_.sample_marginal(200, 5000, _rng(26))
    assert np.all(x >= 4.0)  # own activity plus at least one picked one
    nu, m = sys_.sample_batch(60, 50, _rng(27))
    assert np.all(nu == 60)
    assert np.all(m >= 4.0)


def test_graph_closed_form_u():
    sys_ = PowerLawGraphSystem(beta=3.5, a=1.0)
    ek = sys_.mean_degree()
    got = float(sys_.closed_form_u(100, math.exp(-1.0)))
    assert got == pytest.approx(100.0 * (1.0 + ek), rel=1e-12)


# ---------------------------------------------------------------------------
# wrappers

def test_monotone_transform_commutes_draw_by_draw():
    base = ExchangeableCopulaSystem(ClaytonGenerator(1.0))
    wrapped = MonotoneTransformSystem(base, PowerTransform(2.0))
    nu_b, m_b = base.sample_batch(32, 500, _rng(28))
    nu_w, m_w = wrapped.sample_batch(32, 500, _rng(28))
    assert np.array_equal(nu_b, nu_w)
    assert np.allclose(m_w, m_b**2, rtol=1e-12)


def test_monotone_transform_delegates_exact_laws():
    base = GeometricThresholdSystem(eps=0.1)
    wrapped = MonotoneTransformSystem(base, PowerTransform(2.0))
    u = 0.95
    assert float(wrapped.exact_max_cdf(10, u**2)) == pytest.approx(
        float(base.exact_max_cdf(10, u)), rel=1e-12
    )
    assert float(wrapped.exact_mean_F_pow_nu(10, u**2)) == pytest.approx(
        float(base.exact_mean_F_pow_nu(10, u)), rel=1e-12
    )
    assert float(wrapped.closed_form_u(10, 0.5)) == pytest.approx(
        float(base.closed_form_u(10, 0.5)) ** 2, rel=1e-12
    )
    assert wrapped.has_exact_mean and wrapped.has_exact_max_cdf
    assert wrapped.random_size == base.random_size


def test_monotone_transform_rejects_unbounded_base():
    graph = PowerLawGraphSystem(beta=3.5, a=1.0)
    with pytest.raises(ConfigError):
        MonotoneTransformSystem(graph, PowerTransform(2.0))


def test_size_jitter_moments_and_floor():
    base = ExchangeableCopulaSystem(ClaytonGenerator(1.0))
    sys_ = SizeJitterSystem(base)
    n = 400
    nu = sys_.sample_nu(n, 20_000, _rng(29))
    assert nu.min() >= 1
    se = nu.std(ddof=1) / math.sqrt(nu.size)
    assert abs(nu.mean() - n) < 4.0 * se
    assert abs(nu.std(ddof=1) - math.sqrt(n)) < 0.05 * math.sqrt(n)


def test_size_jitter_requires_conditional_inverse():
    with pytest.raises(ConfigError):
        SizeJitterSystem(GeometricThresholdSystem(eps=0.1))


# ---------------------------------------------------------------------------
# calibration

def test_calibrator_exact_path():
    sys_ = ExchangeableCopulaSystem(ClaytonGenerator(1.0))
    cal = Calibrator(sys_, 50)
    u = np.array([0.9, 0.99])
    assert np.allclose(cal.value(u, r=0.5), u**25, rtol=1e-12)
    assert np.all(cal.stderr_at(u) == 0.0)
    out = mean_F_pow_nu(sys_, 50, 0.99, r=1.0)
    assert out.exact and out.stderr == 0.0
    assert out.value == pytest.approx(0.99**50, rel=1e-12)


def test_calibrator_pool_determinism():
    sys_ = StableSizeGumbelSystem(beta=0.5, gamma=0.5)
    a = Calibrator(sys_, 1000, stream=RandomStream(seed=31, stream_id=0), pool_size=50_000)
    b = Calibrator(sys_, 1000, stream=RandomStream(seed=31, stream_id=0), pool_size=50_000)
    u = np.array([0.995, 0.999])
    assert np.array_equal(a.value(u), b.value(u))
    # explicit pool short-circuits sampling
    c = Calibrator(sys_, 1000, pool=a.pool)
    assert np.array_equal(a.value(u, r=0.7), c.value(u, r=0.7))


def test_calibrator_nu_pool_matches_independent_mc():
    sys_ = RandomThresholdSystem(TwoPoint(0.5, 1.5))
    n = 1000
    # force the pooled path and cross-check it against the closed form
    pool = sys_.sample_nu(n, 100_000, _rng(33))
    cal = Calibrator.__new__(Calibrator)
    cal.system, cal.n, cal.exact, cal.kind, cal.pool = sys_, n, False, "nu_pool", pool
    for u in (0.999, 0.9995):
        got = float(cal.value(np.array([u]))[0])
        se = float(cal.stderr_at(np.array([u]))[0])
        want = float(sys_.exact_mean_F_pow_nu(n, u))
        assert abs(got - want) < 4.0 * se


def test_calibrator_marginal_pool_edges():
    sys_ = PowerLawGraphSystem(beta=3.5, a=1.0)
    cal = Calibrator(sys_, 100, stream=RandomStream(seed=35, stream_id=0), pool_size=20_000)
    assert float(cal.value(np.array([1.5]))[0]) == 0.0  # below every aggregate
    mid = float(cal.value(np.array([300.0]))[0])
    assert 0.0 < mid < 1.0
    assert float(cal.stderr_at(np.array([300.0]))[0]) > 0.0


def test_calibrator_rejects_negative_power():
    cal = Calibrator(ExchangeableCopulaSystem(ClaytonGenerator(1.0)), 10)
    with pytest.raises(ConfigError):
        cal.value(np.array([0.5]), r=-1.0)


def test_sample_replicate_scalars():
    nu, m = sample_replicate(GeometricThresholdSystem(eps=0.2), 10,
                             RandomStream(seed=37, stream_id=0))
    assert isinstance(nu, int) and isinstance(m, float)
    assert nu >= 1 and 0.8 < m < 1.0


# ---------------------------------------------------------------------------
# config plumbing

_VALID_CONFIGS = [
    {"kind": "exchangeable_copula", "generator": {"family": "frank", "alpha": 2.0}},
    {"kind": "exchangeable_copula",
     "generator": {"family": "gumbel_hougaard", "alpha": 1.0, "tilt_gamma": 0.7}},
    {"kind": "duplicated_iid", "m": 3},
    {"kind": "mixture_spike", "gamma": 2.0},
    {"kind": "geometric_threshold", "eps_exponent": 0.5},
    {"kind": "random_threshold", "law": {"kind": "two_point", "delta": 0.5}},
    {"kind": "random_threshold", "law": {"kind": "pareto", "a": 3.0}},
    {"kind": "random_threshold", "law": {"kind": "gamma", "shape": 2.0}},
    {"kind": "stable_size_gumbel", "beta": 0.5, "gamma": 0.7},
    {"kind": "branching_heredity", "offspring": {"1": 0.5, "3": 0.5}, "gamma": 1.0, "a": 0.5},
    {"kind": "power_law_graph", "beta": 3.5, "a": 1.0},
    {"kind": "monotone_transform", "power": 2.0,
     "base": {"kind": "duplicated_iid", "m": 2}},
    {"kind": "size_jitter",
     "base": {"kind": "exchangeable_copula",
              "generator": {"family": "clayton", "alpha": 1.0}}},
]


@pytest.mark.parametrize("cfg", _VALID_CONFIGS, ids=lambda c: c["kind"])
def test_build_system_valid(cfg):
    sys_ = build_system(cfg)
    sys_.validate_n(12)
    nu, m = sys_.sample_batch(12, 64, _rng(39))
    assert nu.shape == m.shape == (64,)


@pytest.mark.parametrize(
    "cfg",
    [
        {"kind": "nope"},
        {"kind": "duplicated_iid"},
        {"kind": "duplicated_iid", "m": 2, "extra": 1},
        {"kind": "exchangeable_copula", "generator": {"family": "nope"}},
        {"kind": "exchangeable_copula", "generator": {"family": "clayton"}},
        {"kind": "random_threshold", "law": {"kind": "pareto", "a": 1.0}},
        {"kind": "random_threshold", "law": {"kind": "two_point", "delta": 1.5}},
        {"kind": "branching_heredity", "offspring": {"0": 1.0}, "gamma": 1.0, "a": 0.5},
        "not a dict",
    ],
)
def test_build_system_invalid(cfg):
    with pytest.raises(ConfigError):
        build_system(cfg)


@pytest.mark.parametrize(
    "cfg",
    [
        {"kind": "exchangeable_copula",
         "generator": {"family": "clayton", "alpha": 1.0, "tilt_gamma": 0.5}},
        {"kind": "random_threshold", "law": {"kind": "two_point", "delta": 0.5}},
        {"kind": "branching_heredity", "offspring": {"1": 0.5, "3": 0.5},
         "gamma": 1.0, "a": 0.5},
        {"kind": "power_law_graph", "beta": 3.5, "a": 1.0},
    ],
    ids=lambda c: c["kind"],
)
def test_systems_pickle_and_replay(cfg):
    sys_a = build_system(cfg)
    sys_b = pickle.loads(pickle.dumps(sys_a))
    nu_a, m_a = sys_a.sample_batch(10, 50, _rng(41))
    nu_b, m_b = sys_b.sample_batch(10, 50, _rng(41))
    assert np.array_equal(nu_a, nu_b)
    assert np.array_equal(m_a, m_b)
