"""分解変換と VMA(2) 縮約形のテスト"""

import json
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.estimation.decoupling import (
    decouple,
    factorization_residuals,
    implied_autocovariances,
    reduced_form,
    snr_matrix,
    snr_matrix_from_gammas,
)
from src.core.estimation.exceptions import NegativeSnrEigenvalue, NotPositiveDefinite
from src.core.estimation.models import AutocovSet, StructuralParams
from src.core.estimation.scalar_ma2 import theta_from_snr
from src.core.numerics.linalg import generalized_eigenvalues, symmetrize

PUBLISHED = Path(__file__).parent / "fixtures" / "published_covariances.json"


def _published() -> dict:
    with open(PUBLISHED, encoding="utf-8") as f:
        return json.load(f)


def _random_pair(rng: np.random.Generator, d: int) -> StructuralParams:
    a = rng.standard_normal((d, d))
    b = rng.standard_normal((d, d))
    return StructuralParams(
        sigma_eps=symmetrize(a @ a.T + d * np.eye(d)),
        sigma_xi=symmetrize(0.1 * (b @ b.T) + 1e-3 * np.eye(d)),
    )


class TestDecouple:
    """decouple のテスト"""

    def test_diagonalizes_both_covariances(self) -> None:
        """P⁻¹Σε(P')⁻¹ = I, P⁻¹Σξ(P')⁻¹ = Δ"""
        rng = np.random.default_rng(30)
        for d in range(1, 7):
            p = _random_pair(rng, d)
            dec = decouple(p)
            assert_allclose(dec.P_inv @ p.sigma_eps @ dec.P_inv.T, np.eye(d), atol=1e-10)
            assert_allclose(dec.P_inv @ p.sigma_xi @ dec.P_inv.T, np.diag(dec.delta), atol=1e-10)
            assert_allclose(dec.P @ dec.P_inv, np.eye(d), atol=1e-10)

    def test_delta_is_generalized_spectrum(self) -> None:
        """δ は ΣξΣε⁻¹ の固有値の降順"""
        rng = np.random.default_rng(31)
        p = _random_pair(rng, 4)
        dec = decouple(p)
        assert np.all(np.diff(dec.delta) <= 0)
        assert_allclose(dec.delta, generalized_eigenvalues(p.sigma_xi, p.sigma_eps), rtol=1e-10)

    def test_sign_convention(self) -> None:
        """P の各列は絶対値最大成分が正"""
        rng = np.random.default_rng(32)
        dec = decouple(_random_pair(rng, 5))
        for k in range(5):
            column = dec.P[:, k]
            assert column[np.argmax(np.abs(column))] > 0

    def test_published_covariances(self) -> None:
        """公表されている 8 変量の推定値から公表されている δ を再現する

        公表値は 4 桁に丸められているので、最小の δ には丸めに由来する絶対誤差を許容する。
        """
        data = _published()
        p = StructuralParams(sigma_eps=np.array(data["sigma_eps"]), sigma_xi=np.array(data["sigma_xi"]))
        dec = decouple(p)
        expected = np.array(data["delta"])
        assert np.all(np.abs(dec.delta - expected) <= 5e-3 * expected + 2e-5)
        assert dec.cointegration_rank == 0

    def test_zero_slope_covariance_is_common_trend(self) -> None:
        """Σξ = 0 なら δ はすべて 0 で共通トレンドの数は d"""
        dec = decouple(StructuralParams(sigma_eps=np.eye(3), sigma_xi=np.zeros((3, 3))))
        assert np.all(dec.delta == 0.0)
        assert dec.cointegration_rank == 3

    def test_negative_eigenvalue_raises(self) -> None:
        """ΣξΣε⁻¹ に負の固有値があれば NegativeSnrEigenvalue"""
        p = StructuralParams(sigma_eps=np.eye(2), sigma_xi=np.diag([1.0, -0.1]))
        with pytest.raises(NegativeSnrEigenvalue):
            decouple(p)

    def test_not_positive_definite_noise(self) -> None:
        """Σε が正定値でなければ NotPositiveDefinite"""
        p = StructuralParams(sigma_eps=np.diag([1.0, 0.0]), sigma_xi=np.eye(2))
        with pytest.raises(NotPositiveDefinite):
            decouple(p)

    def test_permutation_equivariance(self) -> None:
        """系列の並べ替えで δ は変わらない"""
        rng = np.random.default_rng(33)
        p = _random_pair(rng, 4)
        perm = np.array([2, 0, 3, 1])
        permuted = StructuralParams(
            sigma_eps=p.sigma_eps[np.ix_(perm, perm)], sigma_xi=p.sigma_xi[np.ix_(perm, perm)]
        )
        assert_allclose(decouple(permuted).delta, decouple(p).delta, rtol=1e-10)


class TestReducedForm:
    """reduced_form のテスト"""

    def test_autocovariance_round_trip(self) -> None:
        """縮約形から再計算した Γ が 6Σε+Σξ, -4Σε, Σε と 1e-9 以内で一致する"""
        rng = np.random.default_rng(34)
        for i in range(100):
            p = _random_pair(rng, 1 + i % 6)
            rf = reduced_form(p)
            assert factorization_residuals(p, rf).max() <= 1e-9

    def test_implied_autocovariances(self) -> None:
        """implied_autocovariances は Γ₁ = -4Γ₂ を満たす AutocovSet を返す"""
        rng = np.random.default_rng(35)
        p = _random_pair(rng, 3)
        g = implied_autocovariances(reduced_form(p))
        assert_allclose(g.gamma2, p.sigma_eps, rtol=1e-10, atol=1e-12)
        assert_allclose(g.gamma0, 6.0 * p.sigma_eps + p.sigma_xi, rtol=1e-10, atol=1e-12)

    def test_componentwise_coefficients(self) -> None:
        """α_k, β_k は δ_k のスカラー閉形式"""
        rng = np.random.default_rng(36)
        p = _random_pair(rng, 3)
        dec = decouple(p)
        rf = reduced_form(p, dec)
        for k, delta in enumerate(dec.delta):
            theta1, theta2 = theta_from_snr(float(delta))
            assert rf.alpha[k] == pytest.approx(theta1, abs=1e-14)
            assert rf.beta[k] == pytest.approx(theta2, abs=1e-14)

    def test_strictly_invertible(self) -> None:
        """Σξ が正定値なら可逆で、根の最小絶対値は 1 より大きい"""
        rng = np.random.default_rng(37)
        rf = reduced_form(_random_pair(rng, 4))
        assert rf.certificate.strictly_invertible
        assert rf.certificate.min_root_modulus > 1.0
        assert len(rf.certificate.scalar_margins) == 4

    def test_common_trend_limit(self) -> None:
        """Σξ = 0 なら Θ₁ = -2I, Θ₂ = I で全因子が単位根"""
        sigma_eps = np.array([[2.0, 0.3], [0.3, 1.0]])
        rf = reduced_form(StructuralParams(sigma_eps=sigma_eps, sigma_xi=np.zeros((2, 2))))
        assert_allclose(rf.theta1_mat, -2.0 * np.eye(2), atol=1e-12)
        assert_allclose(rf.theta2_mat, np.eye(2), atol=1e-12)
        assert_allclose(rf.omega, sigma_eps, atol=1e-12)
        assert rf.certificate.unit_root_factors == 2
        assert not rf.certificate.strictly_invertible

    def test_scalar_case(self) -> None:
        """d = 1 では単変量の閉形式と一致する"""
        rf = reduced_form(StructuralParams(sigma_eps=np.array([[2.0]]), sigma_xi=np.array([[2.0]])))
        theta1, theta2 = theta_from_snr(1.0)
        assert rf.theta1_mat[0, 0] == pytest.approx(theta1)
        assert rf.theta2_mat[0, 0] == pytest.approx(theta2)
        assert rf.omega[0, 0] == pytest.approx(2.0 / theta2)


class TestSnrMatrix:
    """信号雑音比行列のテスト"""

    def test_equals_p_delta_p_inverse(self) -> None:
        """ΣξΣε⁻¹ = PΔP⁻¹"""
        rng = np.random.default_rng(38)
        p = _random_pair(rng, 3)
        result = snr_matrix(p)
        assert result.decoupling is not None
        dec = result.decoupling
        assert_allclose(result.matrix, dec.P @ np.diag(dec.delta) @ dec.P_inv, atol=1e-10)
        assert_allclose(result.matrix, p.sigma_xi @ np.linalg.inv(p.sigma_eps), atol=1e-10)

    def test_indefinite_slope_covariance(self) -> None:
        """負の固有値があっても行列とスペクトルは返し、分解変換は None"""
        result = snr_matrix(StructuralParams(sigma_eps=np.eye(2), sigma_xi=np.diag([1.0, -0.5])))
        assert result.decoupling is None
        assert_allclose(result.eigenvalues, [1.0, -0.5])

    def test_from_gammas(self) -> None:
        """Γ₀Γ₂⁻¹ - 6I は ΣξΣε⁻¹ と一致する"""
        rng = np.random.default_rng(39)
        p = _random_pair(rng, 3)
        g = AutocovSet(
            gamma0=symmetrize(6.0 * p.sigma_eps + p.sigma_xi), gamma1=-4.0 * p.sigma_eps, gamma2=p.sigma_eps
        )
        assert_allclose(snr_matrix_from_gammas(g), snr_matrix(p).matrix, atol=1e-10)
