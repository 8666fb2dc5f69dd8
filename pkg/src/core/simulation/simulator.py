"""
smooth-trend モデルからのパネル生成

y_t = μ_t + ε_t, μ_{t+1} = μ_t + β_t, β_{t+1} = β_t + ξ_t（ε ⊥ ξ）を
シードから再現可能に生成します。推定量のモンテカルロ検証に使います。
"""

import logging
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from src.core.estimation.exceptions import DimensionMismatch, LagTooLarge
from src.core.estimation.models import SimConfig, TimeSeriesPanel

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]


class SimulationResult(NamedTuple):
    """生成したパネルと真のトレンド μ_t"""

    panel: TimeSeriesPanel
    true_trend: FloatArray


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 ビット生成器による乱数生成器（numpy のバージョン間で系列が固定されている）"""
    return np.random.Generator(np.random.PCG64(seed))


def _covariance_factor(cov: FloatArray) -> FloatArray:
    """LL' = Σ を満たす L（半正定値でも使えるよう固有分解から作る）"""
    values, vectors = np.linalg.eigh(0.5 * (cov + cov.T))
    return vectors * np.sqrt(np.clip(values, 0.0, None))


def _standard_draws(rng: np.random.Generator, cfg: SimConfig, shape: tuple[int, int]) -> FloatArray:
    """平均 0・分散 1 の独立ノイズ（t 分布は分散 1 に尺度調整）"""
    if cfg.noise_dist == "student_t":
        assert cfg.df is not None
        return rng.standard_t(cfg.df, size=shape) * np.sqrt((cfg.df - 2.0) / cfg.df)
    return rng.standard_normal(shape)


def simulate(cfg: SimConfig) -> SimulationResult:
    """設定に従ってパネルと真のトレンドを生成する

    ε を全期間ぶん引いた後に ξ を引くので、同じシードなら出力はビット単位で一致します。
    """
    rng = make_rng(cfg.seed)
    n, d = cfg.n, cfg.dim
    eps = _standard_draws(rng, cfg, (n, d)) @ _covariance_factor(cfg.sigma_eps).T
    xi = _standard_draws(rng, cfg, (n - 1, d)) @ _covariance_factor(cfg.sigma_xi).T

    mu0 = cfg.init_mu if cfg.init_mu is not None else np.zeros(d)
    beta0 = cfg.init_beta if cfg.init_beta is not None else np.zeros(d)
    beta = np.empty((n, d))
    beta[0] = beta0
    beta[1:] = beta0 + np.cumsum(xi, axis=0)
    mu = np.empty((n, d))
    mu[0] = mu0
    mu[1:] = mu0 + np.cumsum(beta[:-1], axis=0)

    logger.debug("シミュレーション: N=%d, d=%d, seed=%d, ノイズ=%s", n, d, cfg.seed, cfg.noise_dist)
    panel = TimeSeriesPanel(values=mu + eps, names=cfg.series_names(), frequency="custom")
    return SimulationResult(panel=panel, true_trend=mu)


def sample_autocovariances(z: TimeSeriesPanel | npt.ArrayLike, max_lag: int) -> list[FloatArray]:
    """標本自己共分散 Γ̂_j = N⁻¹Σ z_t z_{t-j}'（j = 0..max_lag、平均は引かない）

    Raises:
        LagTooLarge: max_lag >= N/4 の場合
    """
    values = z.values if isinstance(z, TimeSeriesPanel) else np.asarray(z, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, np.newaxis]
    if values.ndim != 2:
        raise DimensionMismatch(f"パネルは N×d の 2 次元配列である必要があります: shape={values.shape}")
    n = values.shape[0]
    if max_lag < 0 or 4 * max_lag >= n:
        raise LagTooLarge(f"ラグ {max_lag} が大きすぎます（N={n} に対して N/4 未満が必要）")
    return [values[j:].T @ values[: n - j] / n for j in range(max_lag + 1)]
