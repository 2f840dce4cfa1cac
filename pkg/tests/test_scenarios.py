import numpy as np
import pytest

from snrloss.errors import DegenerateQ
from snrloss.linalg import solve_hermitian
from snrloss.sampling import RngStream
from snrloss.scenarios import (
    ArrayScenario,
    ScenarioPair,
    eigenvalue_mismatch,
    ger_blockdiag_mismatch,
    interference_covariance,
    inverse_wishart_mismatch,
    mpdr_mismatch,
    no_mismatch,
    random_ger_blockdiag_mismatch,
    steering_vector,
    surprise_interference,
)


@pytest.fixture(scope="module")
def ula16():
    scenario = ArrayScenario(n_elements=16)
    sigma = interference_covariance(scenario)
    v = steering_vector(scenario.soi_angle_deg, scenario.n_elements)
    return sigma, v


def collinearity_angle(sigma, sigma_t, v):
    # angle via the orthogonal residual (arcsin form), stable near zero
    a = solve_hermitian(sigma, v)
    b = solve_hermitian(sigma_t, v)
    a_hat = a / np.linalg.norm(a)
    b_perp = b - (a_hat.conj() @ b) * a_hat
    return np.arcsin(min(np.linalg.norm(b_perp) / np.linalg.norm(b), 1.0))


class TestSteeringVector:
    def test_broadside(self):
        v = steering_vector(0.0, 16)
        assert np.allclose(v, 0.25)

    def test_endfire_two_elements(self):
        v = steering_vector(90.0, 2)
        assert np.allclose(v, np.array([1.0, -1.0]) / np.sqrt(2), atol=1e-12)

    @pytest.mark.parametrize("angle", [-71.0, -12.0, 0.0, 9.3, 25.0, 88.0])
    def test_unit_norm(self, angle):
        assert abs(np.linalg.norm(steering_vector(angle, 16)) - 1.0) < 1e-14


class TestInterferenceCovariance:
    def test_no_interferers(self):
        scenario = ArrayScenario(n_elements=8, interference_angles_deg=(), interference_powers_db=())
        assert np.array_equal(interference_covariance(scenario), np.eye(8))

    def test_single_interferer_spectrum(self):
        scenario = ArrayScenario(n_elements=8, interference_angles_deg=(20.0,), interference_powers_db=(13.0,))
        cov = interference_covariance(scenario)
        eigs = np.sort(np.linalg.eigvalsh(cov))
        assert eigs[-1] == pytest.approx(1.0 + 10 ** 1.3, rel=1e-12)
        assert np.allclose(eigs[:-1], 1.0, atol=1e-12)

    def test_default_trace(self, ula16):
        sigma, _ = ula16
        expected = 16 + 10 ** 3.5 + 10 ** 2.5 + 10 ** 3.0
        assert np.trace(sigma).real == pytest.approx(expected, rel=1e-12)


class TestArrayScenarioValidation:
    def test_mismatched_lists(self):
        with pytest.raises(ValueError):
            ArrayScenario(n_elements=4, interference_angles_deg=(1.0,), interference_powers_db=())

    def test_too_few_training(self):
        with pytest.raises(ValueError):
            ArrayScenario(n_elements=8, n_training=7)


class TestMpdrMismatch:
    def test_no_soi_no_scaling(self, ula16):
        sigma, v = ula16
        pair = mpdr_mismatch(sigma, v, soi_power=0.0, gamma=1.0)
        assert np.allclose(pair.sigma_t, sigma)

    def test_pure_scaling(self, ula16):
        sigma, v = ula16
        pair = mpdr_mismatch(sigma, v, soi_power=0.0, gamma=2.0)
        assert np.allclose(pair.sigma_t, 2.0 * sigma)

    def test_soi_power_convention(self, ula16):
        # P chosen so that P * v^H sigma^-1 v equals 10 (10 dB)
        sigma, v = ula16
        v_sigma_v = (v.conj() @ solve_hermitian(sigma, v)).real
        power = 10.0 / v_sigma_v
        pair = mpdr_mismatch(sigma, v, soi_power=power, gamma=1.0)
        assert pair.params["soi_power"] == pytest.approx(power)
        assert pair.params["gamma"] == 1.0
        stored = (pair.params["soi_power"] * v_sigma_v)
        assert stored == pytest.approx(10.0, rel=1e-12)


class TestSurpriseInterference:
    def test_zero_q(self, ula16):
        sigma, v = ula16
        pair = surprise_interference(sigma, v, np.zeros(16), enforce_ger=True)
        assert np.allclose(pair.sigma, pair.sigma_t)

    def test_enforced_orthogonality(self, ula16):
        sigma_t, v = ula16
        q_raw = 10 ** (10 / 20) * steering_vector(14.0, 16)
        pair = surprise_interference(sigma_t, v, q_raw, enforce_ger=True)
        q = pair.params["q"]
        sigma_inv_v = solve_hermitian(pair.sigma, v)
        assert abs(q.conj() @ sigma_inv_v) <= 1e-10 * np.linalg.norm(q) * np.linalg.norm(sigma_inv_v)

    def test_unenforced_keeps_raw_q(self, ula16):
        sigma_t, v = ula16
        q_raw = steering_vector(14.0, 16)
        pair = surprise_interference(sigma_t, v, q_raw, enforce_ger=False)
        assert np.allclose(pair.params["q"], q_raw)

    def test_degenerate_projection(self, ula16):
        sigma_t, v = ula16
        s = solve_hermitian(sigma_t, v)
        with pytest.raises(DegenerateQ):
            surprise_interference(sigma_t, v, s, enforce_ger=True)


class TestGerBlockdiag:
    def test_identity_blocks_reproduce_sigma(self, ula16):
        sigma, v = ula16
        pair = ger_blockdiag_mismatch(sigma, v, np.eye(15), 1.0)
        assert np.allclose(pair.sigma_t, sigma, atol=1e-10 * np.abs(sigma).max())

    def test_scaled_soi_block_collinearity(self, ula16):
        sigma, v = ula16
        pair = ger_blockdiag_mismatch(sigma, v, np.eye(15), 3.0)
        assert collinearity_angle(pair.sigma, pair.sigma_t, v) < 1e-10

    @pytest.mark.parametrize("seed", range(5))
    def test_random_pair_collinearity(self, ula16, seed):
        sigma, v = ula16
        rng = RngStream(seed, 77)
        gamma = 10 ** (rng.generator.uniform(-6, 6) / 10)
        pair = random_ger_blockdiag_mismatch(sigma, v, gamma, rng)
        assert collinearity_angle(pair.sigma, pair.sigma_t, v) < 1e-8


class TestEigenvalueMismatch:
    def test_alpha_ones(self, ula16):
        sigma, v = ula16
        pair = eigenvalue_mismatch(sigma, v, alpha=np.ones(16))
        assert np.allclose(pair.sigma_t, sigma, atol=1e-10 * np.abs(sigma).max())

    def test_uniform_alpha_scales(self, ula16):
        sigma, v = ula16
        pair = eigenvalue_mismatch(sigma, v, alpha=np.full(16, 2.5))
        assert np.allclose(pair.sigma_t, 2.5 * sigma, atol=1e-9 * np.abs(sigma).max())

    def test_spectrum_of_ratio(self, ula16):
        sigma, v = ula16
        pair = eigenvalue_mismatch(sigma, v, rng=RngStream(21))
        alpha = pair.params["alpha"]
        ratio_eigs = np.sort(np.linalg.eigvals(np.linalg.solve(pair.sigma_t, pair.sigma)).real)
        assert np.allclose(ratio_eigs, np.sort(1.0 / alpha), rtol=1e-8)


class TestInverseWishartMismatch:
    def test_construction_law(self, ula16):
        # with W = gamma * I the congruence collapses to sigma / gamma
        from snrloss.linalg import cholesky

        sigma, _ = ula16
        g = cholesky(sigma)
        gamma = 3.0
        sigma_t = g @ np.linalg.solve(gamma * np.eye(16), g.conj().T)
        assert np.allclose(sigma_t, sigma / gamma)

    def test_seeded_draw_valid(self, ula16):
        sigma, v = ula16
        pair = inverse_wishart_mismatch(sigma, v, gamma=1.5, rng=RngStream(3, 9))
        assert np.abs(pair.sigma_t - pair.sigma_t.conj().T).max() < 1e-12 * np.abs(pair.sigma_t).max()
        assert np.all(np.linalg.eigvalsh(pair.sigma_t) > 0)

    def test_deterministic(self, ula16):
        sigma, v = ula16
        a = inverse_wishart_mismatch(sigma, v, gamma=0.8, rng=RngStream(5, 1))
        b = inverse_wishart_mismatch(sigma, v, gamma=0.8, rng=RngStream(5, 1))
        assert np.array_equal(a.sigma_t, b.sigma_t)


class TestScenarioPairValidation:
    def test_rejects_non_unit_signature(self, ula16):
        sigma, _ = ula16
        with pytest.raises(ValueError):
            ScenarioPair(sigma=sigma, sigma_t=sigma, v=np.ones(16))

    def test_no_mismatch_constructor(self, ula16):
        sigma, v = ula16
        pair = no_mismatch(sigma, v)
        assert pair.kind == "none"
        assert np.array_equal(pair.sigma, pair.sigma_t)
