"""
多変量トレンド抽出

変換後の系列 ỹ_t = P⁻¹y_t は互いに無相関なスカラー smooth-trend モデルに従うので、
各成分を自身の信号雑音比 δ_k に対応する λ_k = 1/δ_k の HP フィルタで平滑化し、
μ_t = Pμ̃_t で元の座標に戻します。

HP フィルタの λ は雑音対信号比 σε/σξ です（月次の標準値 λ = 14400 は δ = 1/14400 に対応）。
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import numpy.typing as npt
from pydantic import ValidationError

from src.core.estimation.exceptions import DimensionMismatch, InputError, TooShort
from src.core.estimation.models import Decoupling, TimeSeriesPanel, TrendResult
from src.core.numerics.linalg import solve_pentadiagonal
from src.core.schemas.types import SNR_ZERO_TOL, create_smoothing_lambda

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]

MIN_SMOOTH_LENGTH = 4


def _second_difference_gram_bands(n: int) -> tuple[FloatArray, FloatArray, FloatArray]:
    """D'D（D は (N-2)×N の二階差分作用素）の主対角と第 1・第 2 上副対角"""
    main = np.full(n, 6.0)
    main[[0, -1]] = 1.0
    main[[1, -2]] = 5.0
    upper1 = np.full(n - 1, -4.0)
    upper1[[0, -1]] = -2.0
    upper2 = np.ones(n - 2)
    return main, upper1, upper2


def hp_smooth(x: npt.ArrayLike, lam: float) -> FloatArray:
    """HP フィルタ μ = argmin Σ(x_t - μ_t)² + λΣ(Δ²μ_t)²

    正規方程式 (I + λD'D)μ = x を五重対角ソルバーで O(N) で解きます。
    端点は自由境界（パディングや予測による延長はしない）。

    Args:
        x: スカラー系列（N >= 4）
        lam: 平滑化パラメータ（>= 0、math.inf は最小二乗直線）

    Raises:
        TooShort: N < 4 の場合
        InputError: λ が負または NaN の場合
    """
    series = np.asarray(x, dtype=np.float64)
    if series.ndim != 1:
        raise DimensionMismatch(f"スカラー系列は 1 次元である必要があります: shape={series.shape}")
    n = series.shape[0]
    if n < MIN_SMOOTH_LENGTH:
        raise TooShort(n, MIN_SMOOTH_LENGTH, "平滑化する系列")
    try:
        lam = create_smoothing_lambda(lam)
    except ValidationError as e:
        raise InputError(f"平滑化パラメータは非負である必要があります: λ={lam!r}") from e
    if lam == 0.0:
        return series.copy()
    t = np.arange(n, dtype=np.float64)
    if math.isinf(lam):
        coef = np.polynomial.polynomial.polyfit(t, series, 1)
        return np.asarray(np.polynomial.polynomial.polyval(t, coef), dtype=np.float64)
    main, upper1, upper2 = _second_difference_gram_bands(n)
    return solve_pentadiagonal(1.0 + lam * main, lam * upper1, lam * upper2, series)


def lambdas_from_delta(delta: npt.ArrayLike) -> FloatArray:
    """λ_k = 1/δ_k（δ_k <= 1e-12 の共通トレンド成分は math.inf）"""
    d = np.asarray(delta, dtype=np.float64)
    out = np.full(d.shape, math.inf)
    positive = d > SNR_ZERO_TOL
    out[positive] = 1.0 / d[positive]
    return out


def _smooth_components(
    y: TimeSeriesPanel | npt.ArrayLike, dec: Decoupling, lambdas: FloatArray, threads: int
) -> TrendResult:
    values = y.values if isinstance(y, TimeSeriesPanel) else np.asarray(y, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != dec.dim:
        raise DimensionMismatch(f"パネルの形状 {values.shape} が分解変換の次元 {dec.dim} と一致しません")
    transformed = values @ dec.P_inv.T

    def smooth(k: int) -> FloatArray:
        return hp_smooth(transformed[:, k], float(lambdas[k]))

    if threads > 1 and dec.dim > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            columns = list(executor.map(smooth, range(dec.dim)))
    else:
        columns = [smooth(k) for k in range(dec.dim)]

    trend = np.column_stack(columns) @ dec.P.T
    logger.debug("トレンド抽出: N=%d, d=%d, λ=%s", values.shape[0], dec.dim, lambdas.tolist())
    return TrendResult(trend=trend, cycle=values - trend, per_component_lambda=lambdas, transform_used=dec)


def extract_trends(y: TimeSeriesPanel | npt.ArrayLike, dec: Decoupling, threads: int = 1) -> TrendResult:
    """各変換成分を自身の λ_k = 1/δ_k で平滑化してトレンドを抽出する

    Raises:
        DimensionMismatch: パネルの列数が分解変換の次元と異なる場合
    """
    return _smooth_components(y, dec, lambdas_from_delta(dec.delta), threads)


def extract_trends_fixed(
    y: TimeSeriesPanel | npt.ArrayLike,
    dec: Decoupling,
    lambda_override: float,
    threads: int = 1,
) -> TrendResult:
    """全成分に同じ λ を使ってトレンドを抽出する

    Raises:
        InputError: lambda_override が正でない場合
    """
    if math.isnan(lambda_override) or lambda_override <= 0:
        raise InputError(f"固定 λ は正である必要があります: λ={lambda_override!r}")
    return _smooth_components(y, dec, np.full(dec.dim, float(lambda_override)), threads)
