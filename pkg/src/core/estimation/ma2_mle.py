"""
制約付きスカラー MA(2) の擬似最尤推定

θ₂ = -θ₁/(4+θ₁) の制約のもとで、条件付き（v₀ = v₋₁ = 0）ガウス擬似尤度を
θ₁ の 1 次元問題として最小化します。ω は解析的に集約化します。

残差とその θ₁ 微分はいずれも AR(2) 型の再帰なので scipy.signal.lfilter で計算します。
入力は二階差分系列を想定し、平均 0 として扱います（切片は推定しません）。
"""

import logging
import math

import numpy as np
import numpy.typing as npt
from scipy.optimize import minimize_scalar
from scipy.signal import lfilter

from src.core.estimation.exceptions import InputError, OutOfInvertibleRange, TooShort, ZeroResidualVariance
from src.core.estimation.models import ScalarMA2Fit
from src.core.estimation.scalar_ma2 import theta2_from_theta1

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]

MIN_SERIES_LENGTH = 10
THETA1_LOWER = -2.0 + 1e-8
THETA1_UPPER = -1e-8
BOUNDARY_TOL = 1e-6
DEFAULT_GRID_POINTS = 40
DEFAULT_THETA_TOLERANCE = 1e-10


def _as_series(x: npt.ArrayLike) -> FloatArray:
    """1 次元の有限な float 配列に変換する"""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InputError(f"スカラー系列は 1 次元である必要があります: shape={arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("スカラー系列に NaN または Inf が含まれています")
    return arr


def _check_theta1(theta1: float) -> None:
    if math.isnan(theta1) or theta1 < -2.0 or theta1 > 0.0:
        raise OutOfInvertibleRange(f"θ₁ は [-2, 0] の範囲である必要があります: θ₁={theta1!r}")


def _ar_filter(theta1: float, u: FloatArray) -> FloatArray:
    """w_t = u_t - θ₁w_{t-1} - θ₂w_{t-2}（w₀ = w₋₁ = 0）"""
    return np.asarray(lfilter([1.0], [1.0, theta1, theta2_from_theta1(theta1)], u), dtype=np.float64)


def residuals(x: npt.ArrayLike, theta1: float) -> FloatArray:
    """残差 v_t = x_t - θ₁v_{t-1} + θ₁/(4+θ₁)·v_{t-2}（v₀ = v₋₁ = 0）

    Args:
        x: スカラー系列
        theta1: θ₁ ∈ [-2, 0]

    Returns:
        長さ N の残差ベクトル
    """
    _check_theta1(theta1)
    return _ar_filter(theta1, _as_series(x))


def grad_residuals(x: npt.ArrayLike, theta1: float, v: FloatArray | None = None) -> FloatArray:
    """残差の θ₁ 微分 v′_t

    v′_t = -θ₁v′_{t-1} + θ₁/(4+θ₁)·v′_{t-2} - v_{t-1} + 4/(4+θ₁)²·v_{t-2}

    Args:
        x: スカラー系列
        theta1: θ₁
        v: 計算済みの残差（省略時は再計算）
    """
    if v is None:
        v = residuals(x, theta1)
    else:
        _check_theta1(theta1)
    forcing = np.zeros_like(v)
    forcing[1:] -= v[:-1]
    forcing[2:] += 4.0 / (4.0 + theta1) ** 2 * v[:-2]
    return _ar_filter(theta1, forcing)


def _residual_variance(x: FloatArray, theta1: float) -> float:
    """ω̂(θ₁) = N⁻¹Σv_t²"""
    v = _ar_filter(theta1, x)
    ss = float(np.dot(v, v))
    if ss == 0.0:
        raise ZeroResidualVariance("残差平方和が 0 のため尤度を定義できません")
    return ss / x.shape[0]


def neg_loglik(x: npt.ArrayLike, theta1: float) -> tuple[float, float]:
    """集約化された負の擬似対数尤度

    ℓ_t = ½log ω + v_t²/(2ω) の平均を ω について最小化すると
    ω̂ = N⁻¹Σv_t²、目的関数値は ½log ω̂ + ½ になります。

    Returns:
        (目的関数値, ω̂)

    Raises:
        ZeroResidualVariance: Σv_t² = 0 の場合
    """
    _check_theta1(theta1)
    omega_hat = _residual_variance(_as_series(x), theta1)
    return 0.5 * math.log(omega_hat) + 0.5, omega_hat


def score(x: npt.ArrayLike, theta1: float) -> float:
    """集約化された目的関数の θ₁ 微分 Σv_tv′_t / Σv_t²"""
    v = residuals(x, theta1)
    ss = float(np.dot(v, v))
    if ss == 0.0:
        raise ZeroResidualVariance("残差平方和が 0 のため尤度を定義できません")
    dv = grad_residuals(x, theta1, v)
    return float(np.dot(v, dv)) / ss


def fit(
    x: npt.ArrayLike,
    grid_points: int = DEFAULT_GRID_POINTS,
    theta_tolerance: float = DEFAULT_THETA_TOLERANCE,
) -> ScalarMA2Fit:
    """制約付き MA(2) を擬似最尤推定する

    1. [-2+1e-8, -1e-8] 上の等間隔グリッドで目的関数を評価し最良点を選ぶ
    2. 最良点の両隣を区間として有界 Brent 法で精密化（許容誤差 theta_tolerance）
    3. 解析的勾配によるガウス・ニュートン 1 ステップ（改善時のみ採用）

    最小化するのは ω̂(θ₁) そのもの（対数は単調なので最小点は同じ）で、
    入力を 2 の冪で定数倍しても探索経路が変わりません。

    Args:
        x: スカラー系列（N >= 10、平均 0 を想定）
        grid_points: 初期グリッドの点数
        theta_tolerance: θ₁ の許容誤差

    Returns:
        推定結果

    Raises:
        TooShort: N < 10 の場合
        ZeroResidualVariance: 入力が恒等的に 0 の場合
    """
    series = _as_series(x)
    n = series.shape[0]
    if n < MIN_SERIES_LENGTH:
        raise TooShort(n, MIN_SERIES_LENGTH, "MA(2) 推定の入力系列")

    grid = np.linspace(THETA1_LOWER, THETA1_UPPER, max(grid_points, 3))
    values = np.array([_residual_variance(series, float(t)) for t in grid])
    k = int(np.argmin(values))
    best_theta, best_value = float(grid[k]), float(values[k])

    lo = float(grid[max(k - 1, 0)])
    hi = float(grid[min(k + 1, grid.shape[0] - 1)])
    result = minimize_scalar(
        lambda t: _residual_variance(series, float(t)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": theta_tolerance},
    )
    if float(result.fun) < best_value:
        best_theta, best_value = float(result.x), float(result.fun)

    # ガウス・ニュートン 1 ステップ: Δθ = -Σvv′ / Σv′²
    v = _ar_filter(best_theta, series)
    dv = grad_residuals(series, best_theta, v)
    curvature = float(np.dot(dv, dv))
    if curvature > 0.0:
        candidate = best_theta - float(np.dot(v, dv)) / curvature
        if THETA1_LOWER <= candidate <= THETA1_UPPER:
            candidate_value = _residual_variance(series, candidate)
            if candidate_value < best_value:
                best_theta, best_value = candidate, candidate_value
                v = _ar_filter(best_theta, series)
                dv = grad_residuals(series, best_theta, v)
                curvature = float(np.dot(dv, dv))

    omega_hat = best_value
    ss = float(np.dot(v, v))
    gradient = float(np.dot(v, dv)) / ss
    # 情報行列の θ₁ 成分 N·E[v′²]/ω の E を標本平均で置き換える
    se_theta1 = math.sqrt(ss / (n * curvature)) if curvature > 0.0 else math.inf
    se_omega = omega_hat * math.sqrt(2.0 / n)

    boundary = (best_theta - (-2.0) < BOUNDARY_TOL) or (0.0 - best_theta < BOUNDARY_TOL)
    if boundary:
        logger.warning("θ̂₁ = %.10f が可逆域の境界にあります（共和分または白色雑音に近い）", best_theta)
    logger.debug("MA(2) 推定: N=%d, θ̂₁=%.10f, ω̂=%.6g, 勾配=%.3g", n, best_theta, omega_hat, gradient)

    return ScalarMA2Fit(
        theta1=best_theta,
        theta2=theta2_from_theta1(best_theta),
        omega=omega_hat,
        loglik=0.5 * math.log(omega_hat) + 0.5,
        se_theta1=se_theta1,
        se_omega=se_omega,
        gradient_at_optimum=gradient,
        boundary=boundary,
        n_used=n,
    )
