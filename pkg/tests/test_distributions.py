import numpy as np
import pytest

from mclt.distributions import (
    DegreeDistribution,
    SolitonParams,
    closer,
    compute_R,
    from_pmf,
    ideal_soliton,
    point_mass,
    robust_soliton,
    sample_degree,
    soliton_structure,
    spike_degree,
    starter,
)

ALL_KINDS = [
    lambda p: ideal_soliton(p.k),
    robust_soliton,
    starter,
    closer,
]


def test_ideal_soliton_small_values():
    assert np.allclose(ideal_soliton(2).pmf, [0.5, 0.5])
    assert np.allclose(ideal_soliton(1).pmf, [1.0])
    # direct evaluation: 1/k, then 1/(d(d-1))
    assert np.allclose(ideal_soliton(4).pmf, [0.25, 0.5, 1 / 6, 1 / 12])
    assert abs(ideal_soliton(4).pmf.sum() - 1.0) < 1e-12


def test_ideal_soliton_rejects_bad_k():
    with pytest.raises(ValueError):
        ideal_soliton(0)


def test_compute_R_values():
    # independent high-precision evaluation of c*ln(k/delta)*sqrt(k)
    assert compute_R(SolitonParams(1000, 0.1, 0.1)) == pytest.approx(29.125653600847214, abs=1e-9)
    assert compute_R(SolitonParams(30, 0.1, 0.1)) == pytest.approx(3.12409032447184, abs=1e-9)
    assert round(compute_R(SolitonParams(1000, 0.1, 0.1)), 2) == 29.13
    assert round(compute_R(SolitonParams(30, 0.1, 0.1)), 2) == 3.12


def test_soliton_params_rejects_nonpositive_c():
    with pytest.raises(ValueError):
        SolitonParams(100, 0.0, 0.1)
    with pytest.raises(ValueError):
        SolitonParams(100, -1.0, 0.1)
    with pytest.raises(ValueError):
        SolitonParams(100, 0.1, 1.0)


def test_compute_R_monotonicity():
    base = compute_R(SolitonParams(100, 0.1, 0.1))
    for k in (150, 400, 900):
        assert compute_R(SolitonParams(k, 0.1, 0.1)) > base
    for c in (0.2, 0.5, 1.0):
        assert compute_R(SolitonParams(100, c, 0.1)) > base
    for delta in (0.05, 0.01):
        assert compute_R(SolitonParams(100, 0.1, delta)) > base


def test_robust_soliton_spike(params1000):
    dist = robust_soliton(params1000)
    # k/R ~ 34.33 -> spike at 34, a strict local maximum
    assert spike_degree(params1000) == 34
    assert dist.spike == 34
    p = dist.pmf
    assert p[33] > p[32] and p[33] > p[34]


def test_robust_soliton_tau_first_branch(params30):
    # pmf(1) = (rho(1) + tau(1))/beta with tau(1) = R/k
    s = soliton_structure(params30)
    R = compute_R(params30)
    assert s.tau[0] == pytest.approx(R / 30, rel=1e-12)
    dist = robust_soliton(params30)
    expect = (1 / 30 + R / 30) / s.beta
    assert dist.pmf[0] == pytest.approx(expect, rel=1e-12)


@pytest.mark.parametrize("make", ALL_KINDS)
@pytest.mark.parametrize(
    "k,c,delta",
    [(2, 0.9, 0.9), (5, 0.5, 0.5), (30, 0.1, 0.1), (100, 0.1, 0.1), (1000, 0.1, 0.1)],
)
def test_constructors_normalized(make, k, c, delta):
    dist = make(SolitonParams(k, c, delta))
    assert np.all(dist.pmf >= 0)
    assert abs(dist.pmf.sum() - 1.0) <= 1e-12
    assert abs(dist.cdf[-1] - 1.0) <= 1e-12
    assert np.all(np.diff(dist.cdf) >= -1e-15)


def test_starter_renormalization(params1000):
    rob = robust_soliton(params1000)
    sta = starter(params1000)
    d_star = rob.spike
    assert sta.pmf[d_star - 1] < rob.pmf[d_star - 1]
    assert sta.pmf[0] > rob.pmf[0]


def test_starter_gamma_identity(params1000, params30):
    # gamma = beta - tau(d*), and beta*robust = gamma*starter off the spike
    for params in (params1000, params30):
        s = soliton_structure(params)
        assert s.gamma == pytest.approx(s.beta - s.tau[s.spike - 1], rel=1e-12)
        rob = robust_soliton(params).pmf * s.beta
        sta = starter(params).pmf * s.gamma
        mask = np.ones(params.k, dtype=bool)
        mask[s.spike - 1] = False
        np.testing.assert_allclose(rob[mask], sta[mask], rtol=1e-9, atol=1e-15)


def test_closer_point_mass(params1000):
    dist = closer(params1000)
    assert dist.pmf[33] == 1.0
    assert dist.pmf.sum() == 1.0
    for rand in (0.0, 0.3, 0.999999):
        assert dist.sample(rand) == 34


def test_closer_for_k4_table_point_mass_at_4():
    # parameters with spike round(k/R) = 4 give the degree-4 point mass used
    # as the optimal second distribution at k=4
    params = SolitonParams(4, 0.25, 0.5)
    assert spike_degree(params) == 4
    dist = closer(params)
    assert dist.pmf[3] == 1.0


def test_pathological_spike_rejected():
    # spike round(k/R) > k -> invalid parameters
    with pytest.raises(ValueError):
        robust_soliton(SolitonParams(4, 0.1, 0.1))
    with pytest.raises(ValueError):
        closer(SolitonParams(4, 0.1, 0.1))


def test_sample_degree_inverse_transform():
    dist = from_pmf(2, [2 / 3, 1 / 3])
    assert sample_degree(dist, 0.5) == 1
    assert sample_degree(dist, 0.9) == 2
    assert sample_degree(dist, 2 / 3) == 2  # smallest d with cdf(d) > rand
    single = from_pmf(1, [1.0])
    assert sample_degree(single, 0.7) == 1


def test_sample_degree_matches_searchsorted(params30, np_rng):
    dist = robust_soliton(params30)
    rs = np_rng.random(1000)
    vectorized = np.searchsorted(dist.cdf, rs, side="right") + 1
    assert [dist.sample(r) for r in rs] == vectorized.tolist()


def test_empirical_sampling_frequencies(params30, np_rng):
    # 1e6 samples per degree within 4 standard errors of the pmf
    dist = robust_soliton(params30)
    n = 1_000_000
    rs = np_rng.random(n)
    degrees = np.searchsorted(dist.cdf, rs, side="right") + 1
    counts = np.bincount(degrees, minlength=dist.k + 1)[1:]
    freq = counts / n
    se = np.sqrt(np.maximum(dist.pmf * (1 - dist.pmf), 1e-12) / n)
    assert np.all(np.abs(freq - dist.pmf) <= 4 * se)


def test_invalid_pmf_rejected():
    with pytest.raises(ValueError):
        from_pmf(3, [0.5, 0.4, 0.2])  # sums to 1.1
    with pytest.raises(ValueError):
        from_pmf(3, [0.7, -0.1, 0.4])
    with pytest.raises(ValueError):
        point_mass(3, 4)
    with pytest.raises(ValueError):
        DegreeDistribution(k=2, pmf=np.array([0.5, 0.5]), cdf=np.array([0.6, 0.5]))


def test_distribution_immutable(params30):
    dist = robust_soliton(params30)
    with pytest.raises(ValueError):
        dist.pmf[0] = 0.5
