"""
スカラー信号雑音比 δ と制約付き MA(2) パラメータの閉形式変換

スカラー smooth-trend モデルの二階差分 z_t = Δ²y_t は
z_t = (1 + θ₁L + θ₂L²)u_t, θ₂ = -θ₁/(4+θ₁) の可逆 MA(2) に従います。
このモジュールは δ ↔ θ₁ の写像と、縮約形のモーメント関係を提供します。
"""

import logging
import math

from pydantic import ValidationError

from src.core.estimation.exceptions import NegativeSnr, OutOfInvertibleRange
from src.core.estimation.models import ScalarMA2, ScalarMA2Fit, ScalarStructural
from src.core.schemas.types import create_signal_noise_ratio, create_theta1

logger = logging.getLogger(__name__)


def theta2_from_theta1(theta1: float) -> float:
    """制約 θ₂ = -θ₁/(4+θ₁)"""
    return -theta1 / (4.0 + theta1)


def theta_from_snr(delta: float) -> tuple[float, float]:
    """信号雑音比 δ から (θ₁, θ₂) を求める

    θ₁ = -2 + ½√(-2δ + 2√(δ²+16δ)) を、桁落ちのない同値な形
    θ₁ = -128δ / ((r+δ)²(s+4)), r = √(δ²+16δ), s = √(32δ/(r+δ))
    で評価します。δ が大きいとき θ₁ ≈ -4/δ に漸近します。

    Args:
        delta: 信号雑音比（>= 0、有限）

    Returns:
        (θ₁, θ₂)。δ = 0 では境界の組 (-2, 1)

    Raises:
        NegativeSnr: δ が負または非有限の場合
    """
    try:
        delta = create_signal_noise_ratio(delta)
    except ValidationError as e:
        raise NegativeSnr(f"信号雑音比は有限の非負値である必要があります: δ={delta!r}") from e
    if delta == 0.0:
        return -2.0, 1.0
    r = math.sqrt(delta * delta + 16.0 * delta)
    s = math.sqrt(32.0 * delta / (r + delta))
    theta1 = -128.0 * delta / ((r + delta) ** 2 * (s + 4.0))
    return theta1, theta2_from_theta1(theta1)


def snr_from_theta(theta1: float) -> float:
    """θ₁ から信号雑音比 δ を求める（theta_from_snr の逆写像）

    δ = (1+θ₁²+θ₂²)/θ₂ - 6 は θ₂ = -θ₁/(4+θ₁) のもとで
    δ = -(θ₁+2)⁴ / (θ₁(4+θ₁)) に簡約されるので、こちらで評価します。

    Raises:
        OutOfInvertibleRange: θ₁ が [-2, 0] の外にある場合
    """
    try:
        theta1 = create_theta1(theta1)
    except ValidationError as e:
        raise OutOfInvertibleRange(f"θ₁ は [-2, 0] の範囲である必要があります: θ₁={theta1!r}") from e
    if theta1 == 0.0:
        return math.inf
    a = theta1 + 2.0
    return -(a**4) / (theta1 * (4.0 + theta1))


def omega_from_snr(delta: float, sigma_eps: float = 1.0) -> float:
    """構造パラメータ (δ, σε) に対応するイノベーション分散 ω = σε/θ₂"""
    _, theta2 = theta_from_snr(delta)
    return sigma_eps / theta2


def ma2_from_structural(structural: ScalarStructural) -> ScalarMA2:
    """構造パラメータ (σε, σξ) から縮約形 MA(2) を求める"""
    theta1, theta2 = theta_from_snr(structural.delta)
    return ScalarMA2(theta1=theta1, theta2=theta2, omega=structural.sigma_eps / theta2)


def autocov_from_fit(fit: ScalarMA2) -> tuple[float, float, float]:
    """MA(2) パラメータが含意する自己共分散 (γ₀, γ₁, γ₂)

    γ₂ = θ₂ω, γ₁ = θ₁(θ₂+1)ω, γ₀ = ω(1+θ₁²+θ₂²)。
    制約のもとで γ₁ = -4γ₂ が成り立ちます。
    """
    t1, t2, w = fit.theta1, fit.theta2, fit.omega
    gamma2 = t2 * w
    gamma1 = t1 * (t2 + 1.0) * w
    gamma0 = w * (1.0 + t1 * t1 + t2 * t2)
    return gamma0, gamma1, gamma2


def structural_from_fit(fit: ScalarMA2) -> ScalarStructural:
    """MA(2) パラメータから構造パラメータ (σε, σξ) = (γ₂, γ₀ - 6γ₂) を求める

    σξ は γ₀ - 6γ₂ と代数的に等しい δ·γ₂ で計算し、丸めで負にならないようにします。
    """
    _, _, gamma2 = autocov_from_fit(fit)
    return ScalarStructural(sigma_eps=gamma2, sigma_xi=snr_from_theta(fit.theta1) * gamma2)


def _quadratic_root_moduli(a2: float, a1: float) -> list[float]:
    """1 + a1·z + a2·z² の根の絶対値"""
    if a2 == 0.0:
        return [] if a1 == 0.0 else [abs(1.0 / a1)]
    disc = a1 * a1 - 4.0 * a2
    if disc < 0.0:
        # 共役複素根: |z|² = 1/a2
        modulus = math.sqrt(1.0 / a2)
        return [modulus, modulus]
    q = -0.5 * (a1 + math.copysign(math.sqrt(disc), a1))
    return [abs(q / a2), abs(1.0 / q)]


def invertibility_margin(fit: ScalarMA2 | ScalarMA2Fit) -> float:
    """1 + θ₁z + θ₂z² の根の最小絶対値

    δ > 0 では 1 より大きく、δ = 0（θ = (-2, 1)、(1-z)²）でちょうど 1 になります。
    根がない退化ケース θ₁ = θ₂ = 0 では +inf を返します。
    """
    moduli = _quadratic_root_moduli(fit.theta2, fit.theta1)
    return min(moduli) if moduli else math.inf
