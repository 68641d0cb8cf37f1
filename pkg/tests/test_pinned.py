import numpy as np
import pytest
from scipy.integrate import quad

from pinlab import (CoverageError, DomainError, FrostmanMeasure, Mollifier,
                    ResolutionError, build_product_cantor, chain_density,
                    circle_measure, composed_operator_density, cs_lower_bound,
                    density_mass, l2_energy, measure_mollify, natural_measure,
                    phase_function, pinned_density, support_measure,
                    uniform_grid_measure)
from pinlab.pinned import default_t_grid
from pinlab.profiles import bump_l2_constant, bump_norm_constant, bump_profile
from pinlab.rng import rng_for

PHI = phase_function("euclidean", 2)


def uniform_unit_density(n=801):
    """Synthetic nu: density 1 on [0, 1], zero padding past the ends."""
    dt = 1.0 / (n - 1)
    t = np.arange(-4, n + 4) * dt
    vals = ((t >= 0.0) & (t <= 1.0)).astype(float)
    return PinnedLike(t, vals)


def PinnedLike(t, values):
    from pinlab.pinned import PinnedDensity
    return PinnedDensity(np.zeros(2), 0.1, t, values, np.zeros(len(t)))


def test_mollifier_profile_constants():
    # unit mass by quadrature, support in [-2, 2], frozen L2 constant
    mass = quad(lambda u: float(bump_profile(u)), -2, 2, limit=200)[0]
    assert mass == pytest.approx(1.0, abs=1e-10)
    assert float(bump_profile(2.0)) == 0.0 and float(bump_profile(-2.1)) == 0.0
    assert bump_norm_constant() == pytest.approx(1.1261418105, abs=1e-8)
    assert bump_l2_constant() == pytest.approx(0.3375584065, abs=1e-8)
    moll = Mollifier(0.25)
    mass_eps = quad(lambda u: float(moll(u)), -0.5, 0.5, limit=200)[0]
    assert mass_eps == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(DomainError):
        Mollifier(0.0)


def test_circle_density_is_shifted_bump():
    mu = circle_measure(512)
    eps = 2.0 ** -5
    moll = Mollifier(eps)
    nu = pinned_density(mu, PHI, np.array([0.5, 0.5]), moll)
    expected = moll(nu.t_grid - 0.25)
    assert np.allclose(nu.values, expected, atol=1e-12)
    assert density_mass(nu) == pytest.approx(1.0, abs=1e-6)


def test_mass_epsilon_invariance():
    mu = natural_measure(build_product_cantor(2, 1 / 3, 4))
    pin = mu.points[37]
    for eps in [2.0 ** -3, 2.0 ** -4, 2.0 ** -5, 2.0 ** -6]:
        nu = pinned_density(mu, PHI, pin, Mollifier(eps))
        assert density_mass(nu) == pytest.approx(1.0, abs=1e-6)


def test_annulus_density_monte_carlo_vs_oracle():
    mu = uniform_grid_measure(2, 96)
    pin = np.array([0.5, 0.5])
    eps = 2.0 ** -6
    samples = 200_000
    nu = pinned_density(mu, PHI, pin, Mollifier(eps), mc_samples=samples, seed=21)
    i = int(np.argmin(np.abs(nu.t_grid - 0.25)))
    # oracle: independent brute-force pair counting in a window of width 2 eps
    dist = np.sqrt(((mu.points - pin) ** 2).sum(1))
    frac = float(mu.weights[np.abs(dist - 0.25) <= eps].sum())
    oracle = frac / (2 * eps)
    assert oracle == pytest.approx(2 * np.pi * 0.25, rel=0.05)
    assert nu.values[i] == pytest.approx(oracle, abs=max(3 * nu.stderr[i], 0.05))
    assert density_mass(nu) == pytest.approx(1.0, abs=3e-4)


def test_density_mass_coverage_error():
    mu = circle_measure(128)
    eps = 2.0 ** -4
    grid = np.arange(0.2, 0.26, eps / 16)   # clips the support around t=0.25
    nu = pinned_density(mu, PHI, np.array([0.5, 0.5]), Mollifier(eps), t_grid=grid)
    with pytest.raises(CoverageError):
        density_mass(nu)


def test_resolution_and_empty_errors():
    mu = circle_measure(64)
    eps = 2.0 ** -4
    grid = np.arange(0.0, 0.6, eps)   # dt = eps > eps/2
    with pytest.raises(ResolutionError):
        pinned_density(mu, PHI, np.array([0.5, 0.5]), Mollifier(eps), t_grid=grid)
    with pytest.raises(DomainError):
        FrostmanMeasure(np.zeros((0, 2)), np.zeros(0), exponent_s=1.0)


def test_uniform_density_energy_bound_support():
    nu = uniform_unit_density()
    dt = nu.dt
    assert density_mass(nu) == pytest.approx(1.0, abs=2 * dt)
    assert l2_energy([1.0], [nu]) == pytest.approx(1.0, abs=2 * dt)
    # indicator density: Cauchy-Schwarz equality, bound == support exactly
    assert cs_lower_bound(nu) == pytest.approx(support_measure(nu, 0.0), abs=1e-12)
    assert support_measure(nu, 0.0) == pytest.approx(1.0, abs=2 * dt)


def test_bump_density_energy_and_bound():
    mu = circle_measure(512)
    eps = 2.0 ** -5
    nu = pinned_density(mu, PHI, np.array([0.5, 0.5]), Mollifier(eps))
    energy = l2_energy([1.0], [nu])
    assert energy == pytest.approx(bump_l2_constant() / eps, rel=1e-6)
    bound = cs_lower_bound(nu)
    assert bound == pytest.approx(eps / bump_l2_constant(), rel=1e-5)
    assert support_measure(nu, 0.0) <= 4 * eps
    assert support_measure(nu, 0.0) >= bound - 1e-9


def test_cauchy_schwarz_literal_many_densities():
    mu = natural_measure(build_product_cantor(2, 2.0 ** (-2 / 1.7), 5))
    rng = rng_for(5, 0)
    pins = mu.points[rng.choice(len(mu), 6, replace=False)]
    for eps in (2.0 ** -4, 2.0 ** -6):
        for pin in pins:
            nu = pinned_density(mu, PHI, pin, Mollifier(eps))
            assert support_measure(nu, 0.0) >= cs_lower_bound(nu) - 1e-9


def test_cs_bound_stabilizes_above_threshold():
    # product Cantor s = 1.7: bound varies by < 1.5x across eps = 2^-4..2^-8
    mu = natural_measure(build_product_cantor(2, 2.0 ** (-2 / 1.7), 6))
    pin = mu.points[1234]
    bounds = []
    for k in (4, 5, 6, 7, 8):
        nu = pinned_density(mu, PHI, pin, Mollifier(2.0 ** -k))
        bounds.append(cs_lower_bound(nu))
    assert max(bounds) / min(bounds) <= 1.5


def test_l2_energy_epsilon_trajectory_regression():
    # lambda = mu over a pin subset; halving eps four times never decreases
    # the energy and stays under 1.5x the first value (s = 1.7 > 3/2)
    mu = natural_measure(build_product_cantor(2, 2.0 ** (-2 / 1.7), 6))
    rng = rng_for(7, 0)
    pins = mu.points[rng.choice(len(mu), 8, replace=False)]
    energies = []
    for k in (4, 5, 6, 7, 8):
        eps = 2.0 ** -k
        ref = np.asarray(PHI.value(pins[:, None, :], mu.points[None, :, :]))
        grid = default_t_grid(ref, eps)
        dens = [pinned_density(mu, PHI, p, Mollifier(eps), t_grid=grid) for p in pins]
        energies.append(l2_energy(np.full(len(pins), 1 / len(pins)), dens))
    energies = np.array(energies)
    assert np.all(np.diff(energies) >= -1e-9)
    assert energies.max() <= 1.5 * energies[0]


def test_l2_energy_grid_mismatch():
    mu = circle_measure(64)
    nu1 = pinned_density(mu, PHI, np.array([0.5, 0.5]), Mollifier(2.0 ** -4))
    nu2 = pinned_density(mu, PHI, np.array([0.4, 0.5]), Mollifier(2.0 ** -5))
    with pytest.raises(DomainError):
        l2_energy([0.5, 0.5], [nu1, nu2])


def test_chain_reduces_to_pinned_at_k1():
    mu = natural_measure(build_product_cantor(2, 1 / 3, 3))
    pin = mu.points[11]
    moll = Mollifier(2.0 ** -3)
    nu = pinned_density(mu, PHI, pin, moll)
    ch = chain_density(mu, PHI, pin, 1, moll, t_axes=(nu.t_grid,))
    assert np.allclose(ch.values, nu.values, atol=1e-10)
    val = composed_operator_density(mu, PHI, pin, 1, moll, [nu.t_grid[40]])
    assert val == pytest.approx(nu.values[40], abs=1e-10)


def test_chain_circle_concentrates_first_link():
    mu = circle_measure(256)
    eps = 2.0 ** -4
    moll = Mollifier(eps)
    ch = chain_density(mu, PHI, np.array([0.5, 0.5]), 2, moll)
    w2 = ch.axis_weights()[1]
    marginal = ch.values @ w2
    expected = moll(ch.t_axes[0] - 0.25)
    assert np.allclose(marginal, expected, atol=2e-3 * expected.max())
    assert density_mass(ch) == pytest.approx(1.0, abs=1e-3)


def test_chain_mass_monte_carlo():
    mu = natural_measure(build_product_cantor(2, 2.0 ** (-2 / 1.7), 4))
    ch = chain_density(mu, PHI, mu.points[100], 2, Mollifier(2.0 ** -3),
                       mc_samples=20_000, seed=3)
    assert density_mass(ch) == pytest.approx(1.0, abs=max(3 * ch.mass_stderr, 1e-3))


def test_composed_equals_chain_exact_mode():
    rng = rng_for(9, 0)
    pts = rng.uniform(0.1, 0.9, size=(200, 2))
    mu = FrostmanMeasure(pts, np.full(200, 1 / 200), exponent_s=2.0)
    pin = np.array([0.5, 0.5])
    moll = Mollifier(2.0 ** -3)
    for k in (1, 2, 3):
        axes = tuple(np.linspace(-0.4, 1.4, 37) for _ in range(k))
        ch = chain_density(mu, PHI, pin, k, moll, t_axes=axes)
        idx = (8, 19, 28)[:k]
        t = [axes[i][idx[i]] for i in range(k)]
        val = composed_operator_density(mu, PHI, pin, k, moll, t)
        assert val == pytest.approx(float(ch.values[tuple(idx)]), abs=1e-10)


def test_composed_monte_carlo_vs_chain_sampling():
    mu = natural_measure(build_product_cantor(2, 1 / 3, 3))
    pin = mu.points[7]
    moll = Mollifier(2.0 ** -2)
    t = [0.5, 0.4, 0.6]
    exact = composed_operator_density(mu, PHI, pin, 3, moll, t)
    mc = composed_operator_density(mu, PHI, pin, 3, moll, t, mc_samples=60_000, seed=2)
    ch = chain_density(mu, PHI, pin, 3,
                       moll, t_axes=tuple(np.array([v - 0.01, v, v + 0.01]) for v in t),
                       mc_samples=60_000, seed=5)
    direct = float(ch.values[1, 1, 1])
    scale = max(exact, 1e-3)
    assert mc == pytest.approx(exact, rel=0.15, abs=0.05 * scale)
    assert direct == pytest.approx(exact, abs=max(4 * float(ch.stderr[1, 1, 1]), 0.05 * scale))


def test_measure_mollify_point_mass_and_conservation():
    one = FrostmanMeasure(np.array([[0.5, 0.5]]), np.array([1.0]), exponent_s=0.0)
    theta = 1 / 8
    dens, h = measure_mollify(one, theta, 128)
    assert dens.sum() * h ** 2 == pytest.approx(1.0, abs=1e-8)
    peak = dens.max()
    expected_peak = (bump_profile(0.0) / theta) ** 2
    assert peak == pytest.approx(expected_peak, rel=0.01)

    mu = natural_measure(build_product_cantor(2, 1 / 3, 4))
    dens, h = measure_mollify(mu, 2.0 ** -5, 256)
    assert dens.sum() * h ** 2 == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ResolutionError):
        measure_mollify(mu, 2.0 ** -8, 128)


def test_measure_mollify_l2_converges():
    # confined support so mollification actually moves mass (the full-box
    # uniform measure is torus-invariant and shows no theta dependence)
    mu = uniform_grid_measure(1, 512, 0.25, 0.75)
    f_sq = []
    for theta in (1 / 8, 1 / 16, 1 / 32, 1 / 64):
        dens, h = measure_mollify(mu, theta, 2048)
        x = (np.arange(2048) + 0.5) * h
        f_sq.append(float((dens * x ** 2).sum() * h))
    diffs = np.abs(np.diff(f_sq))
    assert np.all(np.diff(diffs) < 0)
    exact = 2 * (0.75 ** 3 - 0.25 ** 3) / 3
    assert f_sq[-1] == pytest.approx(exact, abs=5e-3)
