"""
推定量のモンテカルロ評価

シード列 seed + r（r = 0..R-1）でパネルを生成し、推定法ごとに
正則化前の Σ̂ε, Σ̂ξ のバイアス・RMSE と Σ̂ε の相対フロベニウス誤差を集計します。
"""

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.core.estimation.exceptions import InvalidConfiguration
from src.core.estimation.meta_estimator import meta_estimate, sample_estimate
from src.core.estimation.models import FloatMatrix, MetaEstimate, SimConfig, StructuralParams
from src.core.numerics.linalg import relative_frobenius_error
from src.core.schemas.types import MONTHLY_MIN_SNR, EstimationMethod
from src.core.simulation.simulator import simulate

logger = logging.getLogger(__name__)

# SimConfig.seed の上限（この値未満）
SEED_LIMIT = 2**64


class EstimatorSummary(BaseModel):
    """1 つの推定法のモンテカルロ集計"""

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    method: EstimationMethod
    replications: int = Field(ge=1, description="成功した反復数")
    bias_sigma_eps: FloatMatrix = Field(description="E[Σ̂ε] - Σε")
    bias_sigma_xi: FloatMatrix = Field(description="E[Σ̂ξ] - Σξ")
    rmse_sigma_eps: FloatMatrix = Field(description="要素ごとの RMSE（Σ̂ε）")
    rmse_sigma_xi: FloatMatrix = Field(description="要素ごとの RMSE（Σ̂ξ）")
    frobenius_errors: list[float] = Field(description="反復ごとの ‖Σ̂ε - Σε‖_F / ‖Σε‖_F")

    @property
    def median_frobenius_error(self) -> float:
        return float(np.median(self.frobenius_errors))

    @property
    def frobenius_standard_error(self) -> float:
        """相対フロベニウス誤差の平均の標準誤差（反復が 1 回なら NaN）"""
        n = len(self.frobenius_errors)
        if n < 2:
            return float("nan")
        return float(np.std(self.frobenius_errors, ddof=1) / np.sqrt(n))


class MonteCarloResult(BaseModel):
    """モンテカルロ実験の結果（推定法ごとの集計と失敗した反復）"""

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    config: SimConfig
    summaries: dict[EstimationMethod, EstimatorSummary]
    failures: dict[EstimationMethod, list[int]] = Field(
        default_factory=dict, description="推定が例外で終わった反復番号"
    )


def _estimate(method: EstimationMethod, cfg: SimConfig, target_min_snr: float) -> MetaEstimate:
    panel = simulate(cfg).panel
    if method == "meta":
        return meta_estimate(panel, target_min_snr)
    return sample_estimate(panel, target_min_snr)


def _summarize(method: EstimationMethod, truth: SimConfig, estimates: list[StructuralParams]) -> EstimatorSummary:
    eps = np.stack([e.sigma_eps for e in estimates])
    xi = np.stack([e.sigma_xi for e in estimates])
    return EstimatorSummary(
        method=method,
        replications=len(estimates),
        bias_sigma_eps=eps.mean(axis=0) - truth.sigma_eps,
        bias_sigma_xi=xi.mean(axis=0) - truth.sigma_xi,
        rmse_sigma_eps=np.sqrt(((eps - truth.sigma_eps) ** 2).mean(axis=0)),
        rmse_sigma_xi=np.sqrt(((xi - truth.sigma_xi) ** 2).mean(axis=0)),
        frobenius_errors=[relative_frobenius_error(e.sigma_eps, truth.sigma_eps) for e in estimates],
    )


def monte_carlo(
    cfg: SimConfig,
    replications: int,
    estimators: Sequence[EstimationMethod] = ("meta", "sample"),
    target_min_snr: float = MONTHLY_MIN_SNR,
    threads: int = 1,
) -> MonteCarloResult:
    """モンテカルロ実験を実行する

    反復 r では cfg.seed + r をシードとして同じパネルを全推定法に与えます。
    数値的に失敗した反復は推定法ごとに記録し、集計から除外します。

    Args:
        cfg: シミュレーション設定（真の Σε, Σξ を含む）
        replications: 反復数
        estimators: 評価する推定法
        target_min_snr: 正則化の目標最小信号雑音比
        threads: 反復を並列実行するワーカー数

    Raises:
        InvalidConfiguration: 反復数が 1 未満、推定法が空、シードが上限を超える、またはある推定法が全反復で失敗した場合
    """
    if replications < 1:
        raise InvalidConfiguration(f"反復数は 1 以上である必要があります: {replications}")
    if not estimators:
        raise InvalidConfiguration("評価する推定法が指定されていません")
    if cfg.seed + replications > SEED_LIMIT:
        raise InvalidConfiguration(
            f"反復のシード cfg.seed + r が上限 2**64 - 1 を超えます: seed={cfg.seed}, replications={replications}"
        )
    configs = [cfg.model_copy(update={"seed": cfg.seed + r}) for r in range(replications)]
    logger.info("モンテカルロ実験: 反復 %d, 推定法 %s, N=%d, d=%d", replications, list(estimators), cfg.n, cfg.dim)

    summaries: dict[EstimationMethod, EstimatorSummary] = {}
    failures: dict[EstimationMethod, list[int]] = {}
    for method in estimators:

        def run(c: SimConfig, method: EstimationMethod = method) -> StructuralParams | None:
            try:
                return _estimate(method, c, target_min_snr).unregularized
            except (ArithmeticError, ValueError) as e:
                logger.warning("反復 seed=%d の %s 推定に失敗しました: %s", c.seed, method, e)
                return None

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as executor:
                outcomes = list(executor.map(run, configs))
        else:
            outcomes = [run(c) for c in configs]

        failed = [r for r, o in enumerate(outcomes) if o is None]
        ok = [o for o in outcomes if o is not None]
        if not ok:
            raise InvalidConfiguration(f"{method} 推定がすべての反復で失敗しました")
        failures[method] = failed
        summaries[method] = _summarize(method, cfg, ok)
        logger.info(
            "%s: 相対フロベニウス誤差の中央値 %.4g（失敗 %d 回）",
            method,
            summaries[method].median_frobenius_error,
            len(failed),
        )
    return MonteCarloResult(config=cfg, summaries=summaries, failures=failures)
