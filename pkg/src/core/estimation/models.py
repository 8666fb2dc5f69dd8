"""
推定・分解・トレンド抽出のドメインモデル

このモジュールでは、多変量 smooth-trend モデルの推定パイプラインが受け渡す
構造化データを Pydantic モデルとして定義します。主なカテゴリ:

1. 入力データ（TimeSeriesPanel）
2. スカラー MA(2) のパラメータと推定結果（ScalarMA2, ScalarMA2Fit）
3. 多変量の自己共分散・構造パラメータ（AutocovSet, StructuralParams）
4. 分解と縮約形（Decoupling, ReducedForm）
5. トレンド抽出結果・シミュレーション設定・推定レポート

行列は numpy 配列で保持するため arbitrary_types_allowed=True を指定します。
"""

import logging
import math
from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator

from src.core.schemas.types import (
    AggregateKey,
    DateLabel,
    DegreesOfFreedom,
    EstimationMethod,
    Frequency,
    NoiseDistribution,
    SeriesName,
)

logger = logging.getLogger(__name__)

# 対称性・制約判定の許容誤差
THETA2_CONSTRAINT_TOL = 1e-12
PSD_RTOL = 1e-10
GAMMA_CONSTRAINT_RTOL = 1e-8


def _as_float_array(v: Any) -> np.ndarray:
    """リストや配列を float64 の ndarray に変換する"""
    return np.array(v, dtype=np.float64)


FloatVector = Annotated[np.ndarray, BeforeValidator(_as_float_array)]
"""1 次元 float64 配列"""

FloatMatrix = Annotated[np.ndarray, BeforeValidator(_as_float_array)]
"""2 次元 float64 配列"""


def _require_square(m: np.ndarray, name: str, d: int | None = None) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name}は正方行列である必要があります: shape={m.shape}")
    if d is not None and m.shape[0] != d:
        raise ValueError(f"{name}の次元が {d} ではありません: shape={m.shape}")


def _require_symmetric(m: np.ndarray, name: str) -> None:
    scale = max(float(np.max(np.abs(m))) if m.size else 0.0, 1.0)
    if float(np.max(np.abs(m - m.T))) > PSD_RTOL * scale:
        raise ValueError(f"{name}が対称ではありません")


# =============================================================================
# 入力データ
# =============================================================================


class TimeSeriesPanel(BaseModel):
    """
    多変量時系列パネル

    Attributes:
        values: N×d の観測値 y_t（行 = 時点、列 = 系列）
        names: 列名（長さ d、重複なし）
        dates: 日付ラベル（長さ N、任意）。暦計算はせず不透明なラベルとして保持する
        frequency: データ頻度（SNR 下限の既定値を決める）
    """

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    values: FloatMatrix = Field(description="N×d の観測値")
    names: list[SeriesName] = Field(description="系列名")
    dates: list[DateLabel] | None = Field(default=None, description="日付ラベル（ISO-8601）")
    frequency: Frequency = Field(default="monthly", description="データ頻度")

    @model_validator(mode="after")
    def validate_shape(self) -> "TimeSeriesPanel":
        """形状・有限性・列名の一意性を検証"""
        if self.values.ndim != 2:
            raise ValueError(f"values は 2 次元配列である必要があります: ndim={self.values.ndim}")
        n, d = self.values.shape
        if d < 1:
            raise ValueError("系列が 1 本もありません")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values に NaN または Inf が含まれています")
        if len(self.names) != d:
            raise ValueError(f"列名の数 {len(self.names)} が系列数 {d} と一致しません")
        if len(set(self.names)) != d:
            raise ValueError(f"列名が重複しています: {self.names}")
        if self.dates is not None and len(self.dates) != n:
            raise ValueError(f"日付ラベルの数 {len(self.dates)} が観測数 {n} と一致しません")
        return self

    @property
    def n_obs(self) -> int:
        """観測数 N"""
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        """系列数 d"""
        return int(self.values.shape[1])


# =============================================================================
# スカラー MA(2)
# =============================================================================


class ScalarMA2(BaseModel):
    """
    制約付きスカラー MA(2): z_t = (1 + θ₁L + θ₂L²)u_t, Var(u_t) = ω

    θ₂ = -θ₁/(4+θ₁) の制約を満たす必要があります。
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    theta1: float = Field(ge=-2.0, le=0.0, description="1 次係数 θ₁")
    theta2: float = Field(description="2 次係数 θ₂ = -θ₁/(4+θ₁)")
    omega: float = Field(ge=0.0, description="イノベーション分散 ω")

    @model_validator(mode="after")
    def validate_constraint(self) -> "ScalarMA2":
        """θ₂ の制約を検証"""
        expected = -self.theta1 / (4.0 + self.theta1)
        if abs(self.theta2 - expected) > THETA2_CONSTRAINT_TOL * max(1.0, abs(expected)):
            raise ValueError(f"θ₂ = {self.theta2!r} が制約 -θ₁/(4+θ₁) = {expected!r} を満たしません")
        return self


class ScalarStructural(BaseModel):
    """スカラー smooth-trend モデルの構造パラメータ（σε, σξ）"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    sigma_eps: float = Field(gt=0.0, description="観測ノイズ分散 σε")
    sigma_xi: float = Field(ge=0.0, allow_inf_nan=False, description="傾きショック分散 σξ")

    @property
    def delta(self) -> float:
        """信号雑音比 δ = σξ/σε"""
        return self.sigma_xi / self.sigma_eps


class ScalarMA2Fit(ScalarMA2):
    """
    制約付き MA(2) の擬似最尤推定結果

    Attributes:
        loglik: 最適点での集約化された負の擬似対数尤度 ½log ω̂ + ½
        se_theta1: θ̂₁ の漸近標準誤差
        se_omega: ω̂ の漸近標準誤差
        gradient_at_optimum: 最適点での目的関数の θ₁ 微分
        boundary: 最適点が可逆域の端（-2 または 0）の 1e-6 以内にあるか
        n_used: 推定に使った観測数
    """

    loglik: float = Field(description="集約化された負の擬似対数尤度")
    se_theta1: float = Field(ge=0.0, description="θ̂₁ の漸近標準誤差")
    se_omega: float = Field(ge=0.0, description="ω̂ の漸近標準誤差")
    gradient_at_optimum: float = Field(description="最適点での目的関数の勾配")
    boundary: bool = Field(default=False, description="境界最適フラグ")
    n_used: int = Field(ge=1, description="推定に使った観測数")

    @model_validator(mode="after")
    def validate_interior(self) -> "ScalarMA2Fit":
        """推定値は開区間 (-2, 0) 内かつ ω > 0"""
        if not (-2.0 < self.theta1 < 0.0):
            raise ValueError(f"θ̂₁ = {self.theta1!r} が開区間 (-2, 0) にありません")
        if self.omega <= 0.0:
            raise ValueError(f"ω̂ = {self.omega!r} は正である必要があります")
        return self


class AggregateFit(BaseModel):
    """集計ベクトル w と、その集計系列 w'z_t に対する推定結果の組"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    w: AggregateKey = Field(description="0/1 の集計ベクトル")
    fit: ScalarMA2Fit = Field(description="集計系列の推定結果")


# =============================================================================
# 多変量パラメータ
# =============================================================================


class AutocovSet(BaseModel):
    """
    Δ²y_t の自己共分散 Γ₀, Γ₁, Γ₂

    Γ₁ = -4Γ₂ を満たすこと（smooth-trend モデルの制約）を検証します。
    """

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    gamma0: FloatMatrix = Field(description="Γ₀")
    gamma1: FloatMatrix = Field(description="Γ₁")
    gamma2: FloatMatrix = Field(description="Γ₂")

    @model_validator(mode="after")
    def validate_structure(self) -> "AutocovSet":
        """正方・同次元・対称・Γ₁ = -4Γ₂"""
        _require_square(self.gamma0, "Γ₀")
        d = self.gamma0.shape[0]
        _require_square(self.gamma1, "Γ₁", d)
        _require_square(self.gamma2, "Γ₂", d)
        for m, name in ((self.gamma0, "Γ₀"), (self.gamma1, "Γ₁"), (self.gamma2, "Γ₂")):
            _require_symmetric(m, name)
        scale = max(float(np.max(np.abs(m))) for m in (self.gamma0, self.gamma1, self.gamma2))
        if float(np.max(np.abs(self.gamma1 + 4.0 * self.gamma2))) > GAMMA_CONSTRAINT_RTOL * scale:
            raise ValueError("Γ₁ = -4Γ₂ の制約を満たしていません")
        return self

    @property
    def dim(self) -> int:
        return int(self.gamma0.shape[0])


class StructuralParams(BaseModel):
    """
    多変量 smooth-trend モデルの構造パラメータ

    Attributes:
        sigma_eps: 観測ノイズ共分散 Σε（d×d 対称）
        sigma_xi: 傾きショック共分散 Σξ（d×d 対称）
        regularization_alpha: Σξ に加えた αI の α（未正則化なら 0）
        sigma_eps_alpha: Σε が正定値でなかった場合に加えたシフト量（通常 0）
    """

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    sigma_eps: FloatMatrix = Field(description="Σε")
    sigma_xi: FloatMatrix = Field(description="Σξ")
    regularization_alpha: float = Field(default=0.0, ge=0.0, description="Σξ の正則化量 α")
    sigma_eps_alpha: float = Field(default=0.0, ge=0.0, description="Σε のシフト量")

    @model_validator(mode="after")
    def validate_matrices(self) -> "StructuralParams":
        """正方・同次元・対称"""
        _require_square(self.sigma_eps, "Σε")
        _require_square(self.sigma_xi, "Σξ", self.sigma_eps.shape[0])
        _require_symmetric(self.sigma_eps, "Σε")
        _require_symmetric(self.sigma_xi, "Σξ")
        return self

    @property
    def dim(self) -> int:
        return int(self.sigma_eps.shape[0])


class Decoupling(BaseModel):
    """
    分解変換 P（P⁻¹Σε(P')⁻¹ = I, P⁻¹Σξ(P')⁻¹ = Δ）

    Attributes:
        P: d×d の変換行列 P = M'Q（各列の絶対値最大成分が正）
        P_inv: P の逆行列 Q'(M')⁻¹
        delta: 信号雑音比 δ₁ ≥ … ≥ δ_d ≥ 0
        cointegration_rank: δ_k = 0（共通トレンド）とみなした成分の数
    """

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    P: FloatMatrix = Field(description="変換行列 P")
    P_inv: FloatMatrix = Field(description="P の逆行列")
    delta: FloatVector = Field(description="信号雑音比（降順）")
    cointegration_rank: int = Field(ge=0, description="δ = 0 の成分数")

    @model_validator(mode="after")
    def validate_shapes(self) -> "Decoupling":
        _require_square(self.P, "P")
        d = self.P.shape[0]
        _require_square(self.P_inv, "P⁻¹", d)
        if self.delta.shape != (d,):
            raise ValueError(f"δ の長さが {d} ではありません: shape={self.delta.shape}")
        if np.any(self.delta < 0):
            raise ValueError("δ に負の値があります")
        if np.any(np.diff(self.delta) > 0):
            raise ValueError("δ が降順に並んでいません")
        return self

    @property
    def dim(self) -> int:
        return int(self.P.shape[0])


class InvertibilityCertificate(BaseModel):
    """
    縮約形の可逆性の証明書

    det(I + Θ₁z + Θ₂z²) はスカラー因子 1 + α_k z + β_k z² の積に分解されるので、
    各因子の根の最小絶対値で可逆性を判定します。
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    scalar_margins: list[float] = Field(description="各スカラー因子の根の最小絶対値")
    min_root_modulus: float = Field(description="全因子を通じた根の最小絶対値")
    unit_root_factors: int = Field(ge=0, description="単位根（|z| = 1）を持つ因子の数")

    @property
    def strictly_invertible(self) -> bool:
        return self.unit_root_factors == 0 and self.min_root_modulus > 1.0


class ReducedForm(BaseModel):
    """
    VMA(2) 縮約形 z_t = (I + Θ₁L + Θ₂L²)η_t, Var(η_t) = Ω

    Attributes:
        theta1_mat: Θ₁ = P diag(α) P⁻¹
        theta2_mat: Θ₂ = P diag(β) P⁻¹
        omega: Ω = P diag(1/β) P'
        alpha: 各成分の θ₁
        beta: 各成分の θ₂
        certificate: 可逆性の証明書
    """

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    theta1_mat: FloatMatrix = Field(description="Θ₁")
    theta2_mat: FloatMatrix = Field(description="Θ₂")
    omega: FloatMatrix = Field(description="Ω")
    alpha: FloatVector = Field(description="成分ごとの θ₁")
    beta: FloatVector = Field(description="成分ごとの θ₂")
    certificate: InvertibilityCertificate = Field(description="可逆性の証明書")

    @model_validator(mode="after")
    def validate_shapes(self) -> "ReducedForm":
        _require_square(self.theta1_mat, "Θ₁")
        d = self.theta1_mat.shape[0]
        _require_square(self.theta2_mat, "Θ₂", d)
        _require_square(self.omega, "Ω", d)
        _require_symmetric(self.omega, "Ω")
        return self


# =============================================================================
# トレンド抽出
# =============================================================================


class TrendResult(BaseModel):
    """
    トレンド抽出結果

    Attributes:
        trend: N×d のトレンド μ̂
        cycle: N×d の循環成分 y - μ̂
        per_component_lambda: 変換後の各成分に使った平滑化パラメータ λ_k（inf は直線当てはめ）
        transform_used: 使用した分解変換
    """

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    trend: FloatMatrix = Field(description="トレンド")
    cycle: FloatMatrix = Field(description="循環成分")
    per_component_lambda: FloatVector = Field(description="成分ごとの λ")
    transform_used: Decoupling = Field(description="使用した分解変換")

    @model_validator(mode="after")
    def validate_shapes(self) -> "TrendResult":
        if self.trend.shape != self.cycle.shape or self.trend.ndim != 2:
            raise ValueError(f"trend と cycle の形状が一致しません: {self.trend.shape} / {self.cycle.shape}")
        if self.per_component_lambda.shape != (self.trend.shape[1],):
            raise ValueError("λ の数が系列数と一致しません")
        return self


# =============================================================================
# シミュレーション
# =============================================================================


class SimConfig(BaseModel):
    """
    smooth-trend モデルからのシミュレーション設定

    μ_{t+1} = μ_t + β_t, β_{t+1} = β_t + ξ_t, y_t = μ_t + ε_t を生成します。
    Σε = 0 や Σξ = 0 の退化ケースも扱えるよう、両共分散は半正定値まで許容します。
    """

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    n: int = Field(ge=12, description="系列長 N")
    sigma_eps: FloatMatrix = Field(description="Σε（半正定値）")
    sigma_xi: FloatMatrix = Field(description="Σξ（半正定値）")
    seed: int = Field(default=0, ge=0, lt=2**64, description="乱数シード")
    noise_dist: NoiseDistribution = Field(default="gaussian", description="ノイズ分布")
    df: Annotated[DegreesOfFreedom, Field(gt=4.0, allow_inf_nan=False)] | None = Field(
        default=None, description="t 分布の自由度（> 4）"
    )
    init_mu: FloatVector | None = Field(default=None, description="μ₁ の初期値（既定 0）")
    init_beta: FloatVector | None = Field(default=None, description="β₁ の初期値（既定 0）")
    names: list[SeriesName] | None = Field(default=None, description="出力パネルの列名")

    @model_validator(mode="after")
    def validate_config(self) -> "SimConfig":
        """形状・半正定値性・t 分布の自由度を検証"""
        _require_square(self.sigma_eps, "Σε")
        d = self.sigma_eps.shape[0]
        _require_square(self.sigma_xi, "Σξ", d)
        for m, name in ((self.sigma_eps, "Σε"), (self.sigma_xi, "Σξ")):
            _require_symmetric(m, name)
            eig = np.linalg.eigvalsh(0.5 * (m + m.T))
            if eig.size and eig[0] < -PSD_RTOL * max(float(np.max(np.abs(eig))), 1.0):
                raise ValueError(f"{name}が半正定値ではありません: 最小固有値 {eig[0]:.3g}")
        if self.noise_dist == "student_t" and self.df is None:
            raise ValueError("noise_dist='student_t' には df（> 4）の指定が必要です")
        for v, name in ((self.init_mu, "init_mu"), (self.init_beta, "init_beta")):
            if v is not None and v.shape != (d,):
                raise ValueError(f"{name} の長さが {d} ではありません")
        if self.names is not None and len(self.names) != d:
            raise ValueError(f"names の長さが {d} ではありません")
        return self

    @property
    def dim(self) -> int:
        return int(self.sigma_eps.shape[0])

    def series_names(self) -> list[SeriesName]:
        """列名（未指定なら y1, y2, ...）"""
        return self.names if self.names is not None else [f"y{i + 1}" for i in range(self.dim)]


# =============================================================================
# 推定レポート
# =============================================================================


class MetaEstimate(BaseModel):
    """
    META 推定の結果一式

    Attributes:
        structural: 正則化後の構造パラメータ
        unregularized: 正則化前の構造パラメータ（Σ̃ε = Γ̃₂, Σ̃ξ = Γ̃₀ - 6Γ̃₂）
        autocov: 再構成した自己共分散（sample 法では標本自己共分散から作らないので None）
        aggregates: 集計ベクトルごとの推定結果（𝒲 の順）
        target_min_snr: 正則化の目標最小信号雑音比
        method: 推定法
        warnings: 境界最適・Σε シフトなどの警告
    """

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    structural: StructuralParams
    unregularized: StructuralParams
    autocov: AutocovSet | None = None
    aggregates: list[AggregateFit] = Field(default_factory=list)
    target_min_snr: float = Field(ge=0.0, allow_inf_nan=False)
    method: EstimationMethod = "meta"
    warnings: list[str] = Field(default_factory=list)

    def boundary_aggregates(self) -> list[AggregateKey]:
        """境界最適になった集計ベクトルの一覧"""
        return [a.w for a in self.aggregates if a.fit.boundary]


class EstimationReport(BaseModel):
    """
    estimate コマンドが出力するレポート

    推定結果に加えて、分解変換と縮約形、系列名を保持します。
    """

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    names: list[SeriesName]
    estimate: MetaEstimate
    decoupling: Decoupling
    reduced_form: ReducedForm

    @model_validator(mode="after")
    def validate_dims(self) -> "EstimationReport":
        d = self.estimate.structural.dim
        if len(self.names) != d or self.decoupling.dim != d:
            raise ValueError("レポート内の次元が一致しません")
        return self

    @property
    def min_snr_eigenvalue(self) -> float:
        """ΣξΣε⁻¹ の最小固有値"""
        return float(self.decoupling.delta[-1]) if self.decoupling.delta.size else math.nan
