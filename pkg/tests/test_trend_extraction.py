"""トレンド抽出のテスト"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.estimation.decoupling import decouple, reduced_form
from src.core.estimation.exceptions import DimensionMismatch, InputError, TooShort
from src.core.estimation.meta_estimator import meta_estimate
from src.core.estimation.models import SimConfig, StructuralParams
from src.core.filtering.trend_extraction import extract_trends, extract_trends_fixed, hp_smooth, lambdas_from_delta
from src.core.schemas.types import MONTHLY_MIN_SNR
from src.core.simulation.simulator import simulate


PUBLISHED = Path(__file__).parent / "fixtures" / "published_covariances.json"


def _dense_hp(x: np.ndarray, lam: float) -> np.ndarray:
    """(I + λD'D)μ = x を密行列で解く"""
    n = x.shape[0]
    d = np.diff(np.eye(n), 2, axis=0)
    return np.linalg.solve(np.eye(n) + lam * d.T @ d, x)


class TestHpSmooth:
    """hp_smooth のテスト"""

    @pytest.mark.parametrize("n", [4, 5, 13, 200])
    @pytest.mark.parametrize("lam", [0.5, 1600.0, 14400.0])
    def test_matches_dense_solve(self, n: int, lam: float) -> None:
        """密行列で解いた正規方程式と 1e-9 以内で一致する"""
        rng = np.random.default_rng(50 + n)
        x = rng.standard_normal(n)
        assert_allclose(hp_smooth(x, lam), _dense_hp(x, lam), rtol=1e-9, atol=1e-9)

    def test_reproduces_linear_trend(self) -> None:
        """直線はそのまま残る"""
        t = np.arange(100.0)
        x = 3.0 - 0.25 * t
        assert_allclose(hp_smooth(x, 14400.0), x, atol=1e-8)

    def test_zero_lambda_is_copy(self) -> None:
        """λ = 0 は入力のコピー"""
        x = np.arange(6.0)
        out = hp_smooth(x, 0.0)
        assert np.array_equal(out, x)
        assert out is not x

    def test_infinite_lambda_is_least_squares_line(self) -> None:
        """λ = inf は最小二乗直線"""
        rng = np.random.default_rng(51)
        x = rng.standard_normal(30)
        t = np.arange(30.0)
        slope, intercept = np.polyfit(t, x, 1)
        assert_allclose(hp_smooth(x, math.inf), intercept + slope * t, atol=1e-12)

    def test_smoothness_non_increasing_in_lambda(self) -> None:
        """Σ(Δ²μ)² は λ について単調非増加"""
        rng = np.random.default_rng(58)
        x = np.cumsum(np.cumsum(rng.standard_normal(150))) + rng.standard_normal(150)
        lams = [0.0, 0.1, 1.0, 10.0, 100.0, 1600.0, 14400.0, 1e5, 1e7, math.inf]
        roughness = [float(np.sum(np.diff(hp_smooth(x, lam), 2) ** 2)) for lam in lams]
        for lam, before, after in zip(lams[1:], roughness, roughness[1:], strict=False):
            assert after <= before * (1.0 + 1e-9) + 1e-12, f"λ={lam}"
        assert roughness[-1] == pytest.approx(0.0, abs=1e-12)

    def test_too_short(self) -> None:
        """N < 4 は TooShort"""
        with pytest.raises(TooShort):
            hp_smooth(np.ones(3), 1.0)

    @pytest.mark.parametrize("lam", [-1.0, math.nan])
    def test_invalid_lambda(self, lam: float) -> None:
        """負または NaN の λ は InputError"""
        with pytest.raises(InputError):
            hp_smooth(np.ones(10), lam)

    def test_rejects_matrix(self) -> None:
        """2 次元入力は DimensionMismatch"""
        with pytest.raises(DimensionMismatch):
            hp_smooth(np.ones((10, 2)), 1.0)


class TestLambdasFromDelta:
    """λ_k = 1/δ_k のテスト"""

    def test_values(self) -> None:
        """0 とみなす δ には inf を割り当てる"""
        assert_allclose(lambdas_from_delta([0.5, 1.0 / 14400.0, 1e-13, 0.0]), [2.0, 14400.0, math.inf, math.inf])


class TestExtractTrends:
    """extract_trends / extract_trends_fixed のテスト"""

    @staticmethod
    def _decoupling(delta: list[float]):
        d = len(delta)
        return decouple(StructuralParams(sigma_eps=np.eye(d), sigma_xi=np.diag(delta)))

    def test_diagonal_model_filters_each_series(self) -> None:
        """無相関なモデルでは各系列を自身の λ で平滑化する"""
        rng = np.random.default_rng(52)
        y = rng.standard_normal((80, 2))
        result = extract_trends(y, self._decoupling([0.1, 0.01]))
        assert_allclose(result.trend[:, 0], hp_smooth(y[:, 0], 10.0), atol=1e-10)
        assert_allclose(result.trend[:, 1], hp_smooth(y[:, 1], 100.0), atol=1e-10)
        assert_allclose(result.trend + result.cycle, y, atol=1e-12)
        assert_allclose(result.per_component_lambda, [10.0, 100.0])

    def test_additivity(self) -> None:
        """トレンド抽出は線形"""
        rng = np.random.default_rng(53)
        sigma_eps = np.array([[1.0, 0.4], [0.4, 2.0]])
        sigma_xi = np.array([[0.02, 0.005], [0.005, 0.01]])
        dec = decouple(StructuralParams(sigma_eps=sigma_eps, sigma_xi=sigma_xi))
        y1 = rng.standard_normal((120, 2))
        y2 = rng.standard_normal((120, 2))
        combined = extract_trends(y1 + y2, dec).trend
        assert_allclose(combined, extract_trends(y1, dec).trend + extract_trends(y2, dec).trend, atol=1e-10)

    def test_common_trend_component_is_straight_line(self) -> None:
        """δ = 0 の成分は最小二乗直線になる"""
        rng = np.random.default_rng(54)
        dec = self._decoupling([0.1, 0.0])
        result = extract_trends(rng.standard_normal((60, 2)), dec)
        assert result.per_component_lambda[1] == math.inf
        assert_allclose(np.diff(result.trend[:, 1], 2), 0.0, atol=1e-10)

    def test_threads_do_not_change_result(self) -> None:
        """並列実行しても結果は同じ"""
        rng = np.random.default_rng(55)
        y = rng.standard_normal((50, 3))
        dec = self._decoupling([0.3, 0.02, 0.001])
        assert np.array_equal(extract_trends(y, dec).trend, extract_trends(y, dec, threads=3).trend)

    def test_dimension_mismatch(self) -> None:
        """列数が分解変換の次元と違えば DimensionMismatch"""
        with pytest.raises(DimensionMismatch):
            extract_trends(np.ones((20, 3)), self._decoupling([0.1, 0.2]))

    def test_fixed_lambda(self) -> None:
        """固定 λ では全成分を同じ λ で平滑化する"""
        rng = np.random.default_rng(56)
        y = rng.standard_normal((40, 2))
        result = extract_trends_fixed(y, self._decoupling([0.1, 0.01]), 1600.0)
        assert_allclose(result.per_component_lambda, [1600.0, 1600.0])
        assert_allclose(result.trend[:, 0], hp_smooth(y[:, 0], 1600.0), atol=1e-10)

    @pytest.mark.parametrize("lam", [0.0, -5.0, math.nan])
    def test_fixed_lambda_validation(self, lam: float) -> None:
        """固定 λ は正である必要がある"""
        with pytest.raises(InputError):
            extract_trends_fixed(np.ones((20, 2)), self._decoupling([0.1, 0.2]), lam)

    def test_recovers_simulated_trend(self) -> None:
        """真のパラメータで抽出したトレンドは観測値より真のトレンドに近い"""
        sigma_eps = np.array([[1.0, 0.3], [0.3, 0.5]])
        sigma_xi = np.array([[0.01, 0.002], [0.002, 0.005]])
        sim = simulate(SimConfig(n=300, sigma_eps=sigma_eps, sigma_xi=sigma_xi, seed=57))
        dec = decouple(StructuralParams(sigma_eps=sigma_eps, sigma_xi=sigma_xi))
        trend = extract_trends(sim.panel, dec).trend
        rmse_trend = np.sqrt(np.mean((trend - sim.true_trend) ** 2))
        rmse_raw = np.sqrt(np.mean((sim.panel.values - sim.true_trend) ** 2))
        assert rmse_trend < 0.5 * rmse_raw


@pytest.mark.slow
class TestPerformance:
    """平滑化の計算量と高次元パネルの処理時間"""

    @staticmethod
    def _best_time(func, repeat: int = 3) -> float:
        best = math.inf
        for _ in range(repeat):
            start = time.perf_counter()
            func()
            best = min(best, time.perf_counter() - start)
        return best

    def test_smoother_scales_linearly(self) -> None:
        """N を 10 倍にしても hp_smooth の時間は 30 倍未満（O(N²) なら 100 倍）"""
        rng = np.random.default_rng(59)
        small = rng.standard_normal(200_000)
        large = rng.standard_normal(2_000_000)
        t_small = self._best_time(lambda: hp_smooth(small, 14400.0))
        t_large = self._best_time(lambda: hp_smooth(large, 14400.0))
        assert t_large < 30.0 * max(t_small, 1e-4)

    def test_eight_series_end_to_end(self) -> None:
        """d = 8, N = 479 の推定から縮約形・トレンド抽出までが 3 秒未満"""
        with open(PUBLISHED, encoding="utf-8") as f:
            data = json.load(f)
        cfg = SimConfig(
            n=479,
            sigma_eps=np.array(data["sigma_eps"]),
            sigma_xi=np.array(data["sigma_xi"]),
            seed=60,
        )
        panel = simulate(cfg).panel

        start = time.perf_counter()
        est = meta_estimate(panel, MONTHLY_MIN_SNR)
        dec = decouple(est.structural)
        rf = reduced_form(est.structural, dec)
        result = extract_trends(panel, dec)
        elapsed = time.perf_counter() - start

        assert elapsed < 3.0
        assert result.trend.shape == (479, 8)
        assert float(dec.delta.min()) >= MONTHLY_MIN_SNR * (1.0 - 1e-9)
        assert rf.certificate.min_root_modulus > 1.0
