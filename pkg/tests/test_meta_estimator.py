"""META 推定のテスト"""

import json
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.estimation.exceptions import (
    AggregateFitError,
    DimensionMismatch,
    MissingAggregate,
    NegativeSnr,
    TooShort,
)
from src.core.estimation.meta_estimator import (
    aggregate,
    aggregation_set,
    difference_twice,
    extract_structural,
    meta_estimate,
    reconstruct_gammas,
    regularize,
    sample_estimate,
    shift_noise_covariance,
)
from src.core.estimation.models import ScalarMA2Fit, ScalarStructural, SimConfig, StructuralParams
from src.core.estimation.scalar_ma2 import ma2_from_structural
from src.core.numerics.linalg import generalized_eigenvalues, relative_frobenius_error
from src.core.schemas.types import MONTHLY_MIN_SNR
from src.core.simulation.monte_carlo import monte_carlo
from src.core.simulation.simulator import simulate

PUBLISHED = Path(__file__).parent / "fixtures" / "published_covariances.json"

SIGMA_EPS = np.array([[1.0, 0.3, 0.1], [0.3, 0.8, -0.2], [0.1, -0.2, 1.2]])
SIGMA_XI = np.array([[0.20, 0.05, 0.02], [0.05, 0.10, 0.01], [0.02, 0.01, 0.05]])


def _published() -> tuple[StructuralParams, float]:
    with open(PUBLISHED, encoding="utf-8") as f:
        data = json.load(f)
    p = StructuralParams(sigma_eps=np.array(data["sigma_eps"]), sigma_xi=np.array(data["sigma_xi"]))
    return p, float(data["alpha"])


def _exact_fits(sigma_eps: np.ndarray, sigma_xi: np.ndarray) -> dict[tuple[int, ...], ScalarMA2Fit]:
    """真の構造パラメータが含意する集計系列の MA(2) をそのまま推定結果とみなす"""
    fits = {}
    for w in aggregation_set(sigma_eps.shape[0]):
        vec = np.array(w, dtype=float)
        ma2 = ma2_from_structural(
            ScalarStructural(sigma_eps=float(vec @ sigma_eps @ vec), sigma_xi=float(vec @ sigma_xi @ vec))
        )
        fits[w] = ScalarMA2Fit(
            theta1=ma2.theta1,
            theta2=ma2.theta2,
            omega=ma2.omega,
            loglik=0.0,
            se_theta1=0.0,
            se_omega=0.0,
            gradient_at_optimum=0.0,
            n_used=100,
        )
    return fits


def _min_snr(p: StructuralParams) -> float:
    return float(generalized_eigenvalues(p.sigma_xi, p.sigma_eps)[-1])


class TestDifferencing:
    """二階差分と集計のテスト"""

    def test_second_difference(self) -> None:
        """二次関数の二階差分は定数"""
        t = np.arange(12.0)
        z = difference_twice(np.column_stack([t**2, 3.0 * t + 1.0]))
        assert z.shape == (10, 2)
        assert_allclose(z[:, 0], 2.0)
        assert_allclose(z[:, 1], 0.0, atol=1e-12)

    def test_too_short(self) -> None:
        """N = 11 は TooShort"""
        with pytest.raises(TooShort):
            difference_twice(np.zeros((11, 2)))

    def test_aggregation_set_order(self) -> None:
        """単位ベクトルの後に e_i + e_j を辞書順で並べる"""
        assert aggregation_set(3) == [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1)]
        assert len(aggregation_set(5)) == 15
        with pytest.raises(DimensionMismatch):
            aggregation_set(0)

    def test_aggregate(self) -> None:
        """x_t = w'z_t"""
        z = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        assert_allclose(aggregate(z, (1, 0, 1)), [4.0, 10.0])
        assert_allclose(aggregate(z, (0, 1, 0)), [2.0, 5.0])

    @pytest.mark.parametrize("w", [(1, 1, 1), (2, 0, 0), (0, 0, 0), (1, 0)])
    def test_aggregate_rejects_foreign_vectors(self, w: tuple[int, ...]) -> None:
        """𝒲 に属さない、または長さが違う w は DimensionMismatch"""
        with pytest.raises(DimensionMismatch):
            aggregate(np.ones((5, 3)), w)


class TestReconstruction:
    """Γ の再構成と構造パラメータの取り出しのテスト"""

    def test_exact_fits_recover_structure(self) -> None:
        """真の集計 MA(2) からは Σε, Σξ が正確に戻る"""
        gammas = reconstruct_gammas(_exact_fits(SIGMA_EPS, SIGMA_XI), 3)
        assert_allclose(gammas.gamma1, -4.0 * gammas.gamma2, atol=1e-12)
        structural = extract_structural(gammas)
        assert_allclose(structural.sigma_eps, SIGMA_EPS, rtol=1e-9, atol=1e-12)
        assert_allclose(structural.sigma_xi, SIGMA_XI, rtol=1e-8, atol=1e-10)
        assert structural.regularization_alpha == 0.0

    def test_missing_aggregate(self) -> None:
        """𝒲 の要素が欠けていれば MissingAggregate"""
        fits = _exact_fits(SIGMA_EPS, SIGMA_XI)
        del fits[(0, 1, 1)]
        with pytest.raises(MissingAggregate):
            reconstruct_gammas(fits, 3)


class TestRegularize:
    """Σξ の正則化のテスト"""

    def test_noop_when_satisfied(self) -> None:
        """既に目標を満たしていれば α = 0 で Σξ は変わらない"""
        p = StructuralParams(sigma_eps=SIGMA_EPS, sigma_xi=SIGMA_XI)
        out = regularize(p, MONTHLY_MIN_SNR)
        assert out.regularization_alpha == 0.0
        assert np.array_equal(out.sigma_xi, SIGMA_XI)

    def test_reaches_target_minimally(self) -> None:
        """正則化後の最小固有値は目標に一致し、α を少しでも減らすと目標を下回る"""
        sigma_xi = SIGMA_XI - 0.06 * np.eye(3)
        p = StructuralParams(sigma_eps=SIGMA_EPS, sigma_xi=sigma_xi)
        target = 0.01
        out = regularize(p, target)
        assert out.regularization_alpha > 0.0
        assert _min_snr(out) == pytest.approx(target, rel=1e-6)
        assert _min_snr(out) >= target
        smaller = StructuralParams(
            sigma_eps=SIGMA_EPS, sigma_xi=sigma_xi + (out.regularization_alpha - 1e-8) * np.eye(3)
        )
        assert _min_snr(smaller) < target

    def test_negative_target(self) -> None:
        """負の目標値は NegativeSnr"""
        with pytest.raises(NegativeSnr):
            regularize(StructuralParams(sigma_eps=SIGMA_EPS, sigma_xi=SIGMA_XI), -1.0)

    def test_published_alpha(self) -> None:
        """公表値から αI を引いて月次の目標で正則化し直すと α が戻る

        公表値は 4 桁に丸められているので、丸めに由来するずれを許容する。
        """
        p, alpha = _published()
        shifted = StructuralParams(sigma_eps=p.sigma_eps, sigma_xi=p.sigma_xi - alpha * np.eye(8))
        out = regularize(shifted, 1.0 / 14400.0)
        assert out.regularization_alpha == pytest.approx(alpha, rel=2e-2)
        assert _min_snr(out) == pytest.approx(1.0 / 14400.0, rel=1e-6)

    def test_translation_equivariance(self) -> None:
        """Σξ から cI を引くと、正則化量はちょうど c だけ増える"""
        p, alpha = _published()
        once = regularize(
            StructuralParams(sigma_eps=p.sigma_eps, sigma_xi=p.sigma_xi - alpha * np.eye(8)), 1.0 / 14400.0
        )
        twice = regularize(
            StructuralParams(sigma_eps=p.sigma_eps, sigma_xi=p.sigma_xi - 2.0 * alpha * np.eye(8)), 1.0 / 14400.0
        )
        assert twice.regularization_alpha - once.regularization_alpha == pytest.approx(alpha, abs=1e-10)

    def test_published_min_eigenvalue_near_monthly_target(self) -> None:
        """公表値の最小信号雑音比は丸め誤差の範囲で 1/14400"""
        p, _ = _published()
        assert abs(_min_snr(p) - 1.0 / 14400.0) < 2e-5


class TestShiftNoiseCovariance:
    """Σε のシフトのテスト"""

    def test_positive_definite_is_untouched(self) -> None:
        """正定値なら入力をそのまま返す"""
        p = StructuralParams(sigma_eps=SIGMA_EPS, sigma_xi=SIGMA_XI)
        assert shift_noise_covariance(p) is p

    def test_singular_is_shifted(self) -> None:
        """特異な Σε は最小固有値が 1e-8·trace/d になるまでシフトする"""
        p = StructuralParams(sigma_eps=np.diag([1.0, 0.0]), sigma_xi=np.eye(2))
        out = shift_noise_covariance(p)
        assert out.sigma_eps_alpha == pytest.approx(5e-9)
        assert np.linalg.eigvalsh(out.sigma_eps)[0] == pytest.approx(5e-9, rel=1e-6)
        assert np.array_equal(out.sigma_xi, p.sigma_xi)


class TestMetaEstimate:
    """meta_estimate と sample_estimate のテスト"""

    @staticmethod
    def _panel(n: int = 3000, seed: int = 40) -> np.ndarray:
        cfg = SimConfig(n=n, sigma_eps=SIGMA_EPS, sigma_xi=SIGMA_XI, seed=seed)
        return simulate(cfg).panel.values

    def test_estimates_simulated_panel(self) -> None:
        """シミュレーションしたパネルから Σε を 30% 以内で推定する"""
        est = meta_estimate(self._panel(), MONTHLY_MIN_SNR)
        assert est.method == "meta"
        assert [a.w for a in est.aggregates] == aggregation_set(3)
        assert est.autocov is not None
        assert relative_frobenius_error(est.unregularized.sigma_eps, SIGMA_EPS) < 0.3
        assert _min_snr(est.structural) >= MONTHLY_MIN_SNR * (1 - 1e-9)

    def test_threads_do_not_change_result(self) -> None:
        """並列実行しても結果はビット単位で同じ"""
        values = self._panel(n=400)
        serial = meta_estimate(values, MONTHLY_MIN_SNR)
        parallel = meta_estimate(values, MONTHLY_MIN_SNR, threads=2)
        assert np.array_equal(serial.structural.sigma_eps, parallel.structural.sigma_eps)
        assert np.array_equal(serial.structural.sigma_xi, parallel.structural.sigma_xi)

    def test_permutation_equivariance(self) -> None:
        """列を並べ替えると推定値も同じように並べ替わる"""
        values = self._panel(n=400)
        perm = np.array([2, 0, 1])
        base = meta_estimate(values, MONTHLY_MIN_SNR)
        permuted = meta_estimate(values[:, perm], MONTHLY_MIN_SNR)
        assert_allclose(
            permuted.structural.sigma_eps, base.structural.sigma_eps[np.ix_(perm, perm)], rtol=1e-9, atol=1e-12
        )
        assert_allclose(
            permuted.structural.sigma_xi, base.structural.sigma_xi[np.ix_(perm, perm)], rtol=1e-8, atol=1e-10
        )

    def test_failed_aggregate(self) -> None:
        """集計系列の推定に失敗すると AggregateFitError（終了コードは原因に従う）"""
        rng = np.random.default_rng(41)
        t = np.arange(50.0)
        values = np.column_stack([np.cumsum(np.cumsum(rng.standard_normal(50))), 2.0 * t])
        with pytest.raises(AggregateFitError) as excinfo:
            meta_estimate(values, MONTHLY_MIN_SNR)
        assert excinfo.value.w == (0, 1)
        assert excinfo.value.exit_code == 2

    def test_sample_estimate(self) -> None:
        """標本自己共分散によるベースライン"""
        est = sample_estimate(self._panel(), MONTHLY_MIN_SNR)
        assert est.method == "sample"
        assert est.autocov is None
        assert est.aggregates == []
        assert relative_frobenius_error(est.unregularized.sigma_eps, SIGMA_EPS) < 0.5


@pytest.mark.slow
class TestEfficiency:
    """META と標本自己共分散の比較（モンテカルロ）"""

    def test_meta_beats_sample(self) -> None:
        """d = 3, N = 500 で Σ̂ε の相対フロベニウス誤差の中央値が小さい"""
        cfg = SimConfig(n=500, sigma_eps=SIGMA_EPS, sigma_xi=SIGMA_XI, seed=1000)
        result = monte_carlo(cfg, 100)
        meta = result.summaries["meta"]
        sample = result.summaries["sample"]
        assert meta.median_frobenius_error < sample.median_frobenius_error
