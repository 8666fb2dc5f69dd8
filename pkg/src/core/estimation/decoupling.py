"""
分解変換と VMA(2) 縮約形の閉形式計算

Σε = M'M（Cholesky）、(M')⁻¹ΣξM⁻¹ = QΔQ'（固有分解）とすると P = M'Q は
P⁻¹Σε(P')⁻¹ = I, P⁻¹Σξ(P')⁻¹ = Δ を満たし、系を d 本の無相関なスカラー
smooth-trend モデルに分解します。各成分の δ_k から (α_k, β_k) を閉形式で求め、
Θ₁ = P diag(α) P⁻¹, Θ₂ = P diag(β) P⁻¹, Ω = P diag(1/β) P' を組み立てます。
"""

import logging
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from src.core.estimation.exceptions import NegativeSnrEigenvalue
from src.core.estimation.models import (
    AutocovSet,
    Decoupling,
    InvertibilityCertificate,
    ReducedForm,
    ScalarMA2,
    StructuralParams,
)
from src.core.estimation.scalar_ma2 import invertibility_margin, theta_from_snr
from src.core.numerics.linalg import (
    cholesky,
    generalized_eigenvalues,
    relative_frobenius_error,
    sym_eig,
    symmetrize,
)
from src.core.schemas.types import SNR_ZERO_TOL

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]

UNIT_ROOT_TOL = 1e-12


def decouple(p: StructuralParams) -> Decoupling:
    """分解変換 P と信号雑音比 δ（降順）を求める

    |δ_k| <= 1e-12·max(1, max|δ|) の成分は δ_k = 0（共通トレンド）に丸めます。
    P の各列は絶対値最大成分が正になるよう符号をそろえます（スケールは変えない）。

    Raises:
        NotPositiveDefinite: Σε が正定値でない場合
        NegativeSnrEigenvalue: δ_k < -1e-12·max(1, max|δ|) の場合（正則化の適用漏れ）
    """
    m = cholesky(p.sigma_eps)
    # A = (M')⁻¹ Σξ M⁻¹
    left = scipy.linalg.solve_triangular(m, p.sigma_xi, trans="T", lower=False)
    a = symmetrize(scipy.linalg.solve_triangular(m, left.T, trans="T", lower=False))
    values, q = sym_eig(a)

    tol = SNR_ZERO_TOL * max(1.0, float(np.max(np.abs(values))))
    if values[-1] < -tol:
        raise NegativeSnrEigenvalue(float(values[-1]))
    delta = np.where(np.abs(values) <= tol, 0.0, values)
    delta = np.maximum(delta, 0.0)

    p_mat = m.T @ q
    p_inv = scipy.linalg.solve_triangular(m, q, lower=False).T
    # 列の符号規約: Q の列を反転すると P の列と P⁻¹ の行が同時に反転する
    rows = np.argmax(np.abs(p_mat), axis=0)
    signs = np.sign(p_mat[rows, np.arange(p.dim)])
    signs[signs == 0] = 1.0
    p_mat = p_mat * signs
    p_inv = signs[:, np.newaxis] * p_inv

    rank = int(np.count_nonzero(delta == 0.0))
    if rank:
        logger.info("信号雑音比が 0 の成分が %d 個あります（共通トレンド）", rank)
    logger.debug("分解変換: δ = %s", np.array2string(delta, precision=6))
    return Decoupling(P=p_mat, P_inv=p_inv, delta=delta, cointegration_rank=rank)


def _certificate(alpha: FloatArray, beta: FloatArray) -> InvertibilityCertificate:
    margins = [
        invertibility_margin(ScalarMA2(theta1=float(a), theta2=float(b), omega=1.0))
        for a, b in zip(alpha, beta, strict=True)
    ]
    unit = sum(1 for mod in margins if mod <= 1.0 + UNIT_ROOT_TOL)
    return InvertibilityCertificate(
        scalar_margins=margins,
        min_root_modulus=min(margins) if margins else float("inf"),
        unit_root_factors=unit,
    )


def reduced_form(p: StructuralParams, dec: Decoupling | None = None) -> ReducedForm:
    """一意な可逆 VMA(2) 縮約形 (Θ₁, Θ₂, Ω) を閉形式で求める

    Args:
        p: 構造パラメータ
        dec: 計算済みの分解変換（省略時は decouple(p) を計算）

    Raises:
        NotPositiveDefinite, NegativeSnrEigenvalue: decouple と同じ
    """
    if dec is None:
        dec = decouple(p)
    pairs = [theta_from_snr(float(d)) for d in dec.delta]
    alpha = np.array([a for a, _ in pairs])
    beta = np.array([b for _, b in pairs])
    theta1_mat = dec.P @ np.diag(alpha) @ dec.P_inv
    theta2_mat = dec.P @ np.diag(beta) @ dec.P_inv
    omega = symmetrize(dec.P @ np.diag(1.0 / beta) @ dec.P.T)
    certificate = _certificate(alpha, beta)
    if certificate.unit_root_factors:
        logger.info("縮約形に単位根を持つ因子が %d 個あります", certificate.unit_root_factors)
    return ReducedForm(
        theta1_mat=theta1_mat,
        theta2_mat=theta2_mat,
        omega=omega,
        alpha=alpha,
        beta=beta,
        certificate=certificate,
    )


class SnrMatrix(NamedTuple):
    """信号雑音比行列 ΣξΣε⁻¹ とそのスペクトル

    decoupling は Σξ が半正定値でない（正則化前の）場合 None になります。
    """

    matrix: FloatArray
    eigenvalues: FloatArray
    decoupling: Decoupling | None


def snr_matrix(p: StructuralParams) -> SnrMatrix:
    """信号雑音比行列 ΣξΣε⁻¹ = PΔP⁻¹

    Raises:
        NotPositiveDefinite: Σε が正定値でない場合
    """
    m = cholesky(p.sigma_eps)
    # ΣξΣε⁻¹ = (Σε⁻¹Σξ)'
    matrix = scipy.linalg.cho_solve((m, False), p.sigma_xi).T
    eigenvalues = generalized_eigenvalues(p.sigma_xi, p.sigma_eps)
    try:
        dec: Decoupling | None = decouple(p)
    except NegativeSnrEigenvalue:
        dec = None
    return SnrMatrix(matrix=matrix, eigenvalues=eigenvalues, decoupling=dec)


def snr_matrix_from_gammas(g: AutocovSet) -> FloatArray:
    """自己共分散から直接求める信号雑音比行列 Γ₀Γ₂⁻¹ - 6I"""
    m = cholesky(g.gamma2)
    return scipy.linalg.cho_solve((m, False), g.gamma0).T - 6.0 * np.eye(g.dim)


def _implied_matrices(rf: ReducedForm) -> tuple[FloatArray, FloatArray, FloatArray]:
    t1, t2, om = rf.theta1_mat, rf.theta2_mat, rf.omega
    gamma0 = om + t1 @ om @ t1.T + t2 @ om @ t2.T
    gamma1 = t1 @ om + t2 @ om @ t1.T
    gamma2 = t2 @ om
    return gamma0, gamma1, gamma2


def implied_autocovariances(rf: ReducedForm) -> AutocovSet:
    """縮約形が含意する自己共分散

    Γ₀ = Ω + Θ₁ΩΘ₁' + Θ₂ΩΘ₂', Γ₁ = Θ₁Ω + Θ₂ΩΘ₁', Γ₂ = Θ₂Ω
    """
    gamma0, gamma1, gamma2 = _implied_matrices(rf)
    return AutocovSet(gamma0=symmetrize(gamma0), gamma1=symmetrize(gamma1), gamma2=symmetrize(gamma2))


class FactorizationResiduals(NamedTuple):
    """縮約形から再計算した Γ と構造パラメータから求めた Γ の相対フロベニウス誤差"""

    gamma0: float
    gamma1: float
    gamma2: float

    def max(self) -> float:
        return max(self.gamma0, self.gamma1, self.gamma2)


def factorization_residuals(p: StructuralParams, rf: ReducedForm) -> FactorizationResiduals:
    """6Σε+Σξ, -4Σε, Σε に対する Γ₀, Γ₁, Γ₂ の相対誤差（正準分解の検証）"""
    gamma0, gamma1, gamma2 = _implied_matrices(rf)
    return FactorizationResiduals(
        gamma0=relative_frobenius_error(gamma0, 6.0 * p.sigma_eps + p.sigma_xi),
        gamma1=relative_frobenius_error(gamma1, -4.0 * p.sigma_eps),
        gamma2=relative_frobenius_error(gamma2, p.sigma_eps),
    )
