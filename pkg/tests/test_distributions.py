from __future__ import annotations

import math
from collections import Counter

import pytest
import scipy.stats

from gdlog.distributions import DomainError, Registry, RngStream


@pytest.fixture(scope="module")
def reg():
    return Registry.with_demo_distributions()


# -- pmf ---------------------------------------------------------------------


def test_flip_pmf(reg):
    flip = reg.get("Flip")
    assert flip.pmf(1, [0.3]) == 0.3
    assert flip.pmf(0, [0.3]) == 0.7
    assert flip.pmf(0, [1.0]) == 0.0
    assert flip.pmf(0.5, [0.3]) == 0.0


def test_poisson_pmf_at_zero(reg):
    # oracle: direct evaluation of lambda^x e^-lambda / x! at x=0, lambda=1
    assert reg.get("Poisson").pmf(0, [1.0]) == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_poisson_pmf_formula(reg):
    poisson = reg.get("Poisson")
    for lam in (0.5, 1.0, 2.0, 7.5):
        for x in range(12):
            direct = lam**x * math.exp(-lam) / math.factorial(x)
            assert poisson.pmf(x, [lam]) == pytest.approx(direct, rel=1e-12)
    assert poisson.pmf(-1, [1.0]) == 0.0
    assert poisson.pmf(2.5, [1.0]) == 0.0


def test_geo_pmf(reg):
    geo = reg.get("Geo")
    assert geo.pmf(2, [0.5]) == pytest.approx((1 - 0.5) ** 2 * 0.5, rel=1e-12)
    assert geo.pmf(2, [0.5]) == 0.125
    assert geo.pmf(0, [1.0]) == 1.0
    assert geo.pmf(-3, [0.5]) == 0.0


def test_demo_distributions(reg):
    dbl = reg.get("Dbl")
    assert dbl.pmf(4, [2.0]) == 1.0
    assert dbl.pmf(5, [2.0]) == 0.0
    fork = reg.get("Fork")
    assert fork.pmf(4, [2.0]) == 0.5
    assert fork.pmf(5, [2.0]) == 0.5
    assert fork.pmf(6, [2.0]) == 0.0


def test_parameter_domains(reg):
    with pytest.raises(DomainError, match="Flip"):
        reg.get("Flip").pmf(1, [1.5])
    with pytest.raises(DomainError, match="lambda"):
        reg.get("Poisson").pmf(1, [-1.0])
    with pytest.raises(DomainError, match="Poisson"):
        reg.get("Poisson").sample([-1.0], RngStream(0))
    with pytest.raises(DomainError, match="Geo"):
        reg.get("Geo").pmf(1, [0.0])
    with pytest.raises(DomainError, match="symbolic"):
        reg.get("Flip").pmf(1, ["Napa"])
    with pytest.raises(DomainError, match="parameters"):
        reg.get("Flip").pmf(1, [0.3, 0.4])


# -- enumerate_support --------------------------------------------------------


def test_flip_support_order(reg):
    assert reg.get("Flip").enumerate_support([0.3], 1.0) == [(1.0, 0.3), (0.0, 0.7)]
    # zero-mass points are never emitted
    assert reg.get("Flip").enumerate_support([1.0], 1.0) == [(1.0, 1.0)]


def test_poisson_support_to_mass_target(reg):
    # oracle first: sum lambda^x e^-lambda / x! ascending until >= 0.99
    lam = 1.0
    cum, hi = 0.0, 0
    while True:
        cum += lam**hi * math.exp(-lam) / math.factorial(hi)
        if cum >= 0.99:
            break
        hi += 1
    support = reg.get("Poisson").enumerate_support([lam], 0.99)
    assert [v for v, _ in support] == [float(x) for x in range(hi + 1)]
    total = sum(p for _, p in support)
    assert total >= 0.99
    assert total == pytest.approx(cum, rel=1e-12)


def test_geo_support_to_mass_target(reg):
    # oracle: geometric partial sums 0.5, 0.75, 0.875, 0.9375
    support = reg.get("Geo").enumerate_support([0.5], 0.9)
    assert [v for v, _ in support] == [0.0, 1.0, 2.0, 3.0]
    assert sum(p for _, p in support) == pytest.approx(0.9375, abs=1e-12)


def test_support_is_finite_even_at_full_mass(reg):
    support = reg.get("Poisson").enumerate_support([2.0], 1.0)
    assert len(support) < 200
    assert sum(p for _, p in support) == pytest.approx(1.0, abs=1e-9)


def test_support_invariants(reg):
    for name, params in [
        ("Flip", [0.3]),
        ("Poisson", [2.0]),
        ("Geo", [0.4]),
        ("Fork", [3.0]),
    ]:
        spec = reg.get(name)
        support = spec.enumerate_support(params, 1.0 - 1e-12)
        values = [v for v, _ in support]
        assert len(values) == len(set(values))
        cum = 0.0
        for _, p in support:
            assert p > 0.0
            prev = cum
            cum += p
            assert cum >= prev
        assert cum <= 1.0 + 1e-12
        if spec.finite_support:
            assert cum >= 1.0 - 1e-9


def test_bad_mass_target(reg):
    with pytest.raises(DomainError):
        reg.get("Flip").enumerate_support([0.5], 0.0)


def test_registry_rejects_duplicate_names():
    from gdlog.model import GdlogError

    reg = Registry.standard()
    with pytest.raises(GdlogError, match="already registered"):
        reg.register(reg.get("Flip"))
    assert reg.names() == ["Flip", "Geo", "Poisson"]


# -- sampling -----------------------------------------------------------------


def test_sampler_determinism():
    a = RngStream(1234, 7)
    b = RngStream(1234, 7)
    reg = Registry.standard()
    geo = reg.get("Geo")
    assert [geo.sample([0.4], a) for _ in range(500)] == [
        geo.sample([0.4], b) for _ in range(500)
    ]


def test_streams_differ_across_indexes():
    reg = Registry.standard()
    flip = reg.get("Flip")
    a = [flip.sample([0.5], RngStream(99, i)) for i in range(64)]
    b = [flip.sample([0.5], RngStream(99, i + 64)) for i in range(64)]
    assert a != b


def test_degenerate_flip_sample(reg):
    rng = RngStream(5)
    assert all(reg.get("Flip").sample([1.0], rng) == 1.0 for _ in range(20))


def test_flip_law_of_large_numbers(reg):
    rng = RngStream(2024, 0)
    flip = reg.get("Flip")
    n = 100_000
    ones = sum(flip.sample([0.3], rng) for _ in range(n))
    assert abs(ones / n - 0.3) < 0.01


@pytest.mark.parametrize(
    "name,params",
    [("Flip", [0.3]), ("Poisson", [2.0]), ("Geo", [0.4])],
)
def test_sampler_pmf_agreement_chi_square(reg, name, params):
    spec = reg.get(name)
    n = 100_000
    rng = RngStream(777, 0)
    counts = Counter(spec.sample(params, rng) for _ in range(n))
    support = spec.enumerate_support(params, 0.9999)
    observed, expected = [], []
    tail_obs = n
    tail_exp = float(n)
    for value, p in support:
        if p * n < 10:
            break  # lump small-expectation buckets into the tail
        observed.append(counts.get(value, 0))
        expected.append(p * n)
        tail_obs -= counts.get(value, 0)
        tail_exp -= p * n
    if tail_exp >= 10:
        observed.append(tail_obs)
        expected.append(tail_exp)
    else:  # negligible tail: fold it into the last bucket
        observed[-1] += tail_obs
        expected[-1] += tail_exp
    stat, pvalue = scipy.stats.chisquare(observed, expected)
    assert pvalue > 1e-3, f"{name}: chi2={stat}, p={pvalue}"
