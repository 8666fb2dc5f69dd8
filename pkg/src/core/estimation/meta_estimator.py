"""
META（集計によるモーメント推定）

多変量 smooth-trend モデルの (Σε, Σξ) を、d(d+1)/2 本の集計スカラー系列
x_t^(w) = w'z_t（w ∈ {e_i} ∪ {e_i + e_j}）への制約付き MA(2) 推定から組み立てます。

手順:
1. z_t = Δ²y_t を作る
2. 各 w について x^(w) を制約付き MA(2) で推定する（互いに独立なので並列実行できる）
3. モデルが含意する自己共分散 γ^(w) から Γ₀, Γ₁, Γ₂ を閉形式で再構成する
4. Σε = Γ₂, Σξ = Γ₀ - 6Γ₂ を取り出し、αI を加えて正則化する
"""

import logging
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import numpy.typing as npt

from src.core.estimation.exceptions import (
    AggregateFitError,
    DimensionMismatch,
    MissingAggregate,
    NegativeSnr,
    TooShort,
)
from src.core.estimation.ma2_mle import DEFAULT_GRID_POINTS, DEFAULT_THETA_TOLERANCE
from src.core.estimation.ma2_mle import fit as fit_ma2
from src.core.estimation.models import (
    AggregateFit,
    AutocovSet,
    MetaEstimate,
    ScalarMA2Fit,
    StructuralParams,
    TimeSeriesPanel,
)
from src.core.estimation.scalar_ma2 import autocov_from_fit
from src.core.numerics.linalg import cholesky, generalized_eigenvalues, symmetrize, sym_eig
from src.core.schemas.types import AggregateKey, EstimationMethod
from src.core.simulation.simulator import sample_autocovariances

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]

MIN_PANEL_LENGTH = 12
REGULARIZATION_TOL = 1e-12
NOISE_FLOOR_RATIO = 1e-8
MAX_BRACKET_DOUBLINGS = 64


def _panel_values(y: TimeSeriesPanel | npt.ArrayLike) -> FloatArray:
    if isinstance(y, TimeSeriesPanel):
        return y.values
    values = np.asarray(y, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, np.newaxis]
    if values.ndim != 2:
        raise DimensionMismatch(f"パネルは N×d の 2 次元配列である必要があります: shape={values.shape}")
    return values


def difference_twice(y: TimeSeriesPanel | npt.ArrayLike) -> FloatArray:
    """二階差分 z_t = y_t - 2y_{t-1} + y_{t-2}（長さ N-2）

    Raises:
        TooShort: N < 12 の場合
    """
    values = _panel_values(y)
    n = values.shape[0]
    if n < MIN_PANEL_LENGTH:
        raise TooShort(n, MIN_PANEL_LENGTH, "パネル")
    return values[2:] - 2.0 * values[1:-1] + values[:-2]


def aggregation_set(d: int) -> list[AggregateKey]:
    """集計ベクトルの集合 𝒲（単位ベクトル e_i の後に、e_i + e_j (i < j) を辞書順で）"""
    if d < 1:
        raise DimensionMismatch(f"系列数は 1 以上である必要があります: d={d}")
    singles = [tuple(1 if k == i else 0 for k in range(d)) for i in range(d)]
    pairs = [tuple(1 if k in (i, j) else 0 for k in range(d)) for i in range(d) for j in range(i + 1, d)]
    return singles + pairs


def aggregate(z: npt.ArrayLike, w: AggregateKey | npt.ArrayLike) -> FloatArray:
    """集計系列 x_t = w'z_t

    Raises:
        DimensionMismatch: w の長さが z の列数と異なる、または w ∉ 𝒲 の場合
    """
    panel = _panel_values(z)
    vec = np.asarray(w)
    if vec.shape != (panel.shape[1],):
        raise DimensionMismatch(f"集計ベクトルの長さ {vec.shape} が系列数 {panel.shape[1]} と一致しません")
    if not np.all((vec == 0) | (vec == 1)) or not 1 <= int(vec.sum()) <= 2:
        raise DimensionMismatch(f"集計ベクトル w={vec.tolist()} は 𝒲 の要素ではありません")
    columns = np.flatnonzero(vec)
    if columns.shape[0] == 1:
        return panel[:, columns[0]].copy()
    return panel[:, columns[0]] + panel[:, columns[1]]


def _pair_index(w: AggregateKey) -> tuple[int, ...]:
    return tuple(int(i) for i in np.flatnonzero(np.asarray(w)))


def reconstruct_gammas(fits: Mapping[AggregateKey, ScalarMA2Fit], d: int) -> AutocovSet:
    """集計系列の推定結果から Γ₀, Γ₁, Γ₂ を閉形式で再構成する

    (Γ_k)_ii = γ_k^(e_i), (Γ_k)_ij = ½(γ_k^(e_i+e_j) - (γ_k^(e_i) + γ_k^(e_j)))

    γ^(w) には標本自己共分散ではなく、推定したモデルが含意する値を使います。

    Raises:
        MissingAggregate: 𝒲 のいずれかの w の推定結果がない場合
    """
    gammas: dict[tuple[int, ...], tuple[float, float, float]] = {}
    for w in aggregation_set(d):
        key = tuple(w)
        if key not in fits:
            raise MissingAggregate(key)
        gammas[_pair_index(key)] = autocov_from_fit(fits[key])

    out = np.zeros((3, d, d), dtype=np.float64)
    for i in range(d):
        out[:, i, i] = gammas[(i,)]
    for i in range(d):
        for j in range(i + 1, d):
            for lag in range(3):
                value = 0.5 * (gammas[(i, j)][lag] - (gammas[(i,)][lag] + gammas[(j,)][lag]))
                out[lag, i, j] = value
                out[lag, j, i] = value
    return AutocovSet(gamma0=out[0], gamma1=out[1], gamma2=out[2])


def extract_structural(g: AutocovSet) -> StructuralParams:
    """Σε = Γ₂, Σξ = Γ₀ - 6Γ₂（正則化なし）"""
    return StructuralParams(
        sigma_eps=symmetrize(g.gamma2),
        sigma_xi=symmetrize(g.gamma0 - 6.0 * g.gamma2),
        regularization_alpha=0.0,
    )


def _min_snr(sigma_xi: FloatArray, sigma_eps: FloatArray) -> float:
    """ΣξΣε⁻¹ の最小固有値"""
    return float(generalized_eigenvalues(sigma_xi, sigma_eps)[-1])


def regularize(p: StructuralParams, target_min_snr: float) -> StructuralParams:
    """ΣξΣε⁻¹ の最小固有値が target_min_snr 以上になる最小の α で Σξ + αI とする

    最小固有値は α について狭義単調増加なので二分法で求めます（許容誤差 1e-12）。
    返す α は目標を満たす側の端点です。

    Args:
        p: 構造パラメータ（Σε は正定値）
        target_min_snr: 目標最小信号雑音比（>= 0）

    Raises:
        NegativeSnr: 目標値が負または非有限の場合
        NotPositiveDefinite: Σε が正定値でない場合
    """
    if not np.isfinite(target_min_snr) or target_min_snr < 0:
        raise NegativeSnr(f"目標最小信号雑音比は有限の非負値である必要があります: {target_min_snr!r}")
    cholesky(p.sigma_eps)
    identity = np.eye(p.dim)
    current = _min_snr(p.sigma_xi, p.sigma_eps)
    if current >= target_min_snr:
        logger.debug("正則化は不要です: 最小信号雑音比 %.6g >= 目標 %.6g", current, target_min_snr)
        return p.model_copy(update={"regularization_alpha": 0.0})

    # λmin((Σξ+αI)Σε⁻¹) >= λmin(ΣξΣε⁻¹) + α/λmax(Σε) なので hi は目標を満たす
    lam_max = float(sym_eig(p.sigma_eps).values[0])
    lo = 0.0
    hi = (target_min_snr - current) * lam_max
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if _min_snr(p.sigma_xi + hi * identity, p.sigma_eps) >= target_min_snr:
            break
        lo, hi = hi, 2.0 * hi
    iterations = 0
    while hi - lo > REGULARIZATION_TOL:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _min_snr(p.sigma_xi + mid * identity, p.sigma_eps) >= target_min_snr:
            hi = mid
        else:
            lo = mid
        iterations += 1
    logger.info("Σξ を正則化しました: α = %.10g（二分法 %d 回）", hi, iterations)
    return StructuralParams(
        sigma_eps=p.sigma_eps,
        sigma_xi=symmetrize(p.sigma_xi + hi * identity),
        regularization_alpha=hi,
        sigma_eps_alpha=p.sigma_eps_alpha,
    )


def shift_noise_covariance(p: StructuralParams) -> StructuralParams:
    """Σε の最小固有値が 1e-8·trace(Σε)/d を下回る場合に αI を加えて正定値にする

    シフトしなかった場合は入力をそのまま返します。
    """
    floor = NOISE_FLOOR_RATIO * float(np.trace(p.sigma_eps)) / p.dim
    lam_min = float(sym_eig(p.sigma_eps).values[-1])
    if floor <= 0.0 or lam_min >= floor:
        return p
    shift = floor - lam_min
    logger.warning("Σ̃ε が正定値ではありません（最小固有値 %.6g）。%.6g·I を加えます", lam_min, shift)
    return StructuralParams(
        sigma_eps=symmetrize(p.sigma_eps + shift * np.eye(p.dim)),
        sigma_xi=p.sigma_xi,
        regularization_alpha=p.regularization_alpha,
        sigma_eps_alpha=shift,
    )


def _finalize(
    raw: StructuralParams,
    target_min_snr: float,
    method: EstimationMethod,
    autocov: AutocovSet | None = None,
    aggregates: list[AggregateFit] | None = None,
) -> MetaEstimate:
    """Σε のシフトと Σξ の正則化を施して MetaEstimate にまとめる"""
    warnings: list[str] = []
    shifted = shift_noise_covariance(raw)
    if shifted.sigma_eps_alpha > 0.0:
        warnings.append(f"Σ̃ε が正定値でないため {shifted.sigma_eps_alpha:.6g}·I を加えました")
    min_snr = _min_snr(shifted.sigma_xi, shifted.sigma_eps)
    if min_snr < 0.0:
        logger.warning("Σ̃ξΣ̃ε⁻¹ に負の固有値 %.6g があります", min_snr)
        warnings.append(f"Σ̃ξΣ̃ε⁻¹ の最小固有値が負です: {min_snr:.6g}")
    structural = regularize(shifted, target_min_snr)
    for item in aggregates or []:
        if item.fit.boundary:
            warnings.append(f"集計ベクトル w={list(item.w)} の推定が境界最適です: θ̂₁={item.fit.theta1:.8f}")
    return MetaEstimate(
        structural=structural,
        unregularized=raw,
        autocov=autocov,
        aggregates=aggregates or [],
        target_min_snr=target_min_snr,
        method=method,
        warnings=warnings,
    )


def meta_estimate(
    y: TimeSeriesPanel | npt.ArrayLike,
    target_min_snr: float,
    threads: int = 1,
    grid_points: int = DEFAULT_GRID_POINTS,
    theta_tolerance: float = DEFAULT_THETA_TOLERANCE,
) -> MetaEstimate:
    """META 推定を実行する

    difference_twice → aggregate → fit → reconstruct_gammas → extract_structural → regularize

    集計系列の推定は threads > 1 のときスレッドプールで並列に実行し、
    結果は完了順ではなく w をキーにして集約します。

    Args:
        y: N×d のパネル（N >= 12）
        target_min_snr: 正則化の目標最小信号雑音比
        threads: 並列ワーカー数
        grid_points: MA(2) 推定の初期グリッド点数
        theta_tolerance: θ₁ の許容誤差

    Raises:
        TooShort: N < 12 の場合
        AggregateFitError: いずれかの集計系列の推定に失敗した場合（最初に失敗した w を報告）
    """
    z = difference_twice(y)
    d = z.shape[1]
    keys = aggregation_set(d)
    logger.info("META 推定を開始します: N=%d, d=%d, 集計系列 %d 本, スレッド %d", z.shape[0] + 2, d, len(keys), threads)

    def run(w: AggregateKey) -> ScalarMA2Fit | Exception:
        try:
            return fit_ma2(aggregate(z, w), grid_points=grid_points, theta_tolerance=theta_tolerance)
        except Exception as e:
            return e

    if threads > 1 and len(keys) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            outcomes = dict(zip(keys, executor.map(run, keys), strict=True))
    else:
        outcomes = {w: run(w) for w in keys}

    fits: dict[AggregateKey, ScalarMA2Fit] = {}
    for w in keys:
        outcome = outcomes[w]
        if isinstance(outcome, Exception):
            raise AggregateFitError(w, outcome) from outcome
        fits[w] = outcome
        logger.debug("w=%s: θ̂₁=%.8f, ω̂=%.6g", list(w), outcome.theta1, outcome.omega)

    gammas = reconstruct_gammas(fits, d)
    raw = extract_structural(gammas)
    aggregates = [AggregateFit(w=w, fit=fits[w]) for w in keys]
    return _finalize(raw, target_min_snr, "meta", autocov=gammas, aggregates=aggregates)


def sample_estimate(y: TimeSeriesPanel | npt.ArrayLike, target_min_snr: float) -> MetaEstimate:
    """標本自己共分散によるベースライン推定 Σ̂ε = Γ̂₂, Σ̂ξ = Γ̂₀ - 6Γ̂₂

    比較実験用です。正則化の手順は meta_estimate と同じです。
    """
    z = difference_twice(y)
    gamma0, _, gamma2 = sample_autocovariances(z, 2)
    raw = StructuralParams(
        sigma_eps=symmetrize(gamma2),
        sigma_xi=symmetrize(symmetrize(gamma0) - 6.0 * symmetrize(gamma2)),
    )
    logger.info("標本自己共分散による推定: N=%d, d=%d", z.shape[0] + 2, z.shape[1])
    return _finalize(raw, target_min_snr, "sample")
