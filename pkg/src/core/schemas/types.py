"""
ドメイン型定義モジュール

primitive型を直接使わず、推定・フィルタリングのドメイン特有の型を定義します。

3つのレベル:
- Level 1: type エイリアス（制約なし、単純な意味付け）
- Level 2: NewType + Annotated（制約付き、型レベル区別）
- Level 3: BaseModel（複雑なドメイン型）は src/core/estimation/models.py に置く
"""

import math
from typing import Annotated, Literal, NewType

from pydantic import AfterValidator, Field, TypeAdapter

# =============================================================================
# Level 1: type エイリアス（制約なし、単純な意味付け）
# =============================================================================

type SeriesName = str
"""系列名（CSV ヘッダーの列名）"""

type DateLabel = str
"""日付ラベル（ISO-8601 文字列、暦計算は行わない不透明なラベル）"""

type Frequency = Literal["monthly", "quarterly", "custom"]
"""データ頻度プリセット（SNR 下限の既定値を決める）"""

type EstimationMethod = Literal["meta", "sample"]
"""推定法（META 法または標本自己共分散によるベースライン）"""

type NoiseDistribution = Literal["gaussian", "student_t"]
"""シミュレーションのノイズ分布"""

type AggregateKey = tuple[int, ...]
"""集計ベクトル w の 0/1 表現（長さ d のタプル）"""

type MatrixRows = list[list[float | None]]
"""行優先の行列表現（JSON シリアライズ用）"""

type ExitCode = int
"""CLI の終了コード"""


# =============================================================================
# Level 2: NewType + Annotated（制約付き、型レベル区別）
# =============================================================================


def validate_signal_noise_ratio(v: float) -> float:
    """信号雑音比 δ の検証（有限かつ非負）"""
    if not math.isfinite(v):
        raise ValueError(f"信号雑音比は有限である必要がありますが、{v}が指定されました")
    if v < 0:
        raise ValueError(f"信号雑音比は非負である必要がありますが、{v}が指定されました")
    return v


SignalNoiseRatio = NewType("SignalNoiseRatio", float)
"""スカラー信号雑音比 δ = σξ/σε（>= 0、有限）"""

SignalNoiseRatioValidator: TypeAdapter[float] = TypeAdapter(
    Annotated[float, AfterValidator(validate_signal_noise_ratio)]
)


def create_signal_noise_ratio(value: float) -> SignalNoiseRatio:
    """信号雑音比を生成

    Args:
        value: δ の値

    Returns:
        検証済みのSignalNoiseRatio型

    Raises:
        ValidationError: 値が負または非有限の場合
    """
    validated = SignalNoiseRatioValidator.validate_python(value)
    return SignalNoiseRatio(validated)


def validate_smoothing_lambda(v: float) -> float:
    """HP 平滑化パラメータ λ の検証（非負、+inf は直線当てはめを表す番兵）"""
    if math.isnan(v) or v < 0:
        raise ValueError(f"平滑化パラメータは非負である必要がありますが、{v}が指定されました")
    return v


SmoothingLambda = NewType("SmoothingLambda", float)
"""HP フィルタの平滑化パラメータ λ = 1/δ（>= 0、math.inf は最小二乗直線）"""

SmoothingLambdaValidator: TypeAdapter[float] = TypeAdapter(Annotated[float, AfterValidator(validate_smoothing_lambda)])


def create_smoothing_lambda(value: float) -> SmoothingLambda:
    """平滑化パラメータを生成

    Raises:
        ValidationError: 値が負または NaN の場合
    """
    validated = SmoothingLambdaValidator.validate_python(value)
    return SmoothingLambda(validated)


def validate_theta1(v: float) -> float:
    """制約付き MA(2) の θ₁ の検証（可逆域 [-2, 0]）"""
    if math.isnan(v) or v < -2.0 or v > 0.0:
        raise ValueError(f"θ₁ は [-2, 0] の範囲である必要がありますが、{v}が指定されました")
    return v


Theta1 = NewType("Theta1", float)
"""制約付き MA(2) の 1 次係数 θ₁（θ₂ = -θ₁/(4+θ₁) が従属して決まる）"""

Theta1Validator: TypeAdapter[float] = TypeAdapter(Annotated[float, AfterValidator(validate_theta1)])


def create_theta1(value: float) -> Theta1:
    """θ₁ を生成

    Raises:
        ValidationError: [-2, 0] の範囲外の場合
    """
    validated = Theta1Validator.validate_python(value)
    return Theta1(validated)


ThreadCount = NewType("ThreadCount", int)
"""並列ワーカー数（1〜256）"""

ThreadCountValidator: TypeAdapter[int] = TypeAdapter(Annotated[int, Field(ge=1, le=256)])


def create_thread_count(value: int) -> ThreadCount:
    """並列ワーカー数を生成

    Raises:
        ValidationError: 1〜256 の範囲外の場合
    """
    validated = ThreadCountValidator.validate_python(value)
    return ThreadCount(validated)


DegreesOfFreedom = NewType("DegreesOfFreedom", float)
"""t 分布の自由度（4 より大きい: 4 次モーメント有限。制約は SimConfig のフィールドで課す）"""


# =============================================================================
# 定数
# =============================================================================

MONTHLY_MIN_SNR = 1.0 / 14400.0
"""月次データの標準信号雑音比（HP フィルタの λ = 14400 に対応）"""

QUARTERLY_MIN_SNR = 1.0 / 1600.0
"""四半期データの標準信号雑音比（HP フィルタの λ = 1600 に対応）"""

SNR_ZERO_TOL = 1e-12
"""δ を厳密な共和分（δ = 0）とみなす相対許容誤差"""
