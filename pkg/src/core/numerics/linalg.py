"""
小規模密行列の線形代数・求根カーネル

全モジュールが共有する数値計算の基本演算を提供します。
実際の分解は LAPACK（numpy / scipy 経由）に任せ、このモジュールは
前提条件の検査・並び順と符号の規約・エラーの変換を担います。

すべての関数は値を受け取り新しい配列を返す純関数で、スレッド間で安全に共有できます。
"""

from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from src.core.estimation.exceptions import (
    AsymmetricMatrix,
    DegenerateLeadingCoefficient,
    DimensionMismatch,
    NoConvergence,
    NotPositiveDefinite,
)

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]
type ComplexArray = npt.NDArray[np.complex128]

# 対称性判定の相対許容誤差（入力検査用）
SYMMETRY_RTOL = 1e-10

# 四次方程式の最高次係数の下限
LEADING_COEFFICIENT_FLOOR = 1e-300


def as_square_matrix(a: npt.ArrayLike, name: str = "行列") -> FloatArray:
    """2 次元の正方 float 配列に変換する

    Raises:
        DimensionMismatch: 正方行列でない、または空の場合
    """
    m = np.array(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatch(f"{name}は空でない正方行列である必要があります: shape={m.shape}")
    return m


def symmetrize(a: npt.ArrayLike) -> FloatArray:
    """(A + A')/2 を返す（結果の (i,j) と (j,i) はビット単位で一致する）"""
    m = as_square_matrix(a)
    return 0.5 * (m + m.T)


def ensure_symmetric(a: npt.ArrayLike, name: str = "行列", rtol: float = SYMMETRY_RTOL) -> FloatArray:
    """対称性を検査し、厳密に対称化した行列を返す

    Args:
        a: 入力行列
        name: エラーメッセージに使う行列名
        rtol: max|A - A'| / max(max|A|, 1) の許容値

    Raises:
        AsymmetricMatrix: 非対称性が許容値を超える場合
    """
    m = as_square_matrix(a, name)
    if not np.all(np.isfinite(m)):
        raise AsymmetricMatrix(f"{name}に非有限値が含まれています")
    scale = max(float(np.max(np.abs(m))), 1.0)
    asym = float(np.max(np.abs(m - m.T)))
    if asym > rtol * scale:
        raise AsymmetricMatrix(f"{name}が対称ではありません: max|A - A'| = {asym:.3g}")
    return 0.5 * (m + m.T)


def cholesky(a: npt.ArrayLike) -> FloatArray:
    """上三角の Cholesky 因子 M（A = M'M）を返す

    Args:
        a: 対称正定値行列

    Returns:
        対角が正の上三角行列 M

    Raises:
        NotPositiveDefinite: いずれかのピボットが d·ε·max|a_ij| 以下の場合
    """
    m = symmetrize(a)
    d = m.shape[0]
    threshold = d * np.finfo(np.float64).eps * float(np.max(np.abs(m)))
    try:
        factor = scipy.linalg.cholesky(m, lower=False, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NotPositiveDefinite(f"Cholesky 分解に失敗しました: {e}") from e
    pivots = np.diag(factor) ** 2
    if np.any(pivots <= threshold):
        raise NotPositiveDefinite(f"Cholesky ピボットが閾値 {threshold:.3g} 以下です: min={float(np.min(pivots)):.3g}")
    return np.triu(factor)


def _normalize_signs(vectors: FloatArray) -> FloatArray:
    """各列の絶対値最大成分が正になるよう符号をそろえる

    丸め誤差程度の差しかない成分が複数ある場合は先頭のものを採用します。
    """
    out = vectors.copy()
    magnitude = np.abs(out)
    near_max = magnitude >= magnitude.max(axis=0) * (1.0 - 1e-12)
    rows = np.argmax(near_max, axis=0)
    signs = np.sign(out[rows, np.arange(out.shape[1])])
    signs[signs == 0] = 1.0
    return out * signs


class EigenPair(NamedTuple):
    """固有値（降順）と対応する固有ベクトル（列 k が固有値 k に対応）の組"""

    values: FloatArray
    vectors: FloatArray


def sym_eig(a: npt.ArrayLike) -> EigenPair:
    """対称行列の固有分解

    固有値は降順、各固有ベクトルは絶対値最大成分が正になる規約で返します。

    Raises:
        NoConvergence: LAPACK の反復が収束しなかった場合
    """
    m = symmetrize(a)
    try:
        values, vectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"対称固有値分解が収束しませんでした: {e}") from e
    order = np.argsort(values, kind="stable")[::-1]
    return EigenPair(values[order], _normalize_signs(vectors[:, order]))


def generalized_eigenvalues(a: npt.ArrayLike, b: npt.ArrayLike) -> FloatArray:
    """対称 A と正定値 B の一般化固有値（= AB⁻¹ の固有値）を降順で返す

    Raises:
        NotPositiveDefinite: B が正定値でない場合
    """
    ma = symmetrize(a)
    mb = symmetrize(b)
    if ma.shape != mb.shape:
        raise DimensionMismatch(f"行列の次元が一致しません: {ma.shape} と {mb.shape}")
    try:
        values = scipy.linalg.eigh(ma, mb, eigvals_only=True)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"一般化固有値問題の右辺行列が正定値ではありません: {e}") from e
    return np.sort(values)[::-1]


def solve_pentadiagonal(
    main: npt.ArrayLike,
    upper1: npt.ArrayLike,
    upper2: npt.ArrayLike,
    rhs: npt.ArrayLike,
) -> FloatArray:
    """対称正定値の五重対角系 Ax = b を O(N) で解く

    対称なので 5 本の帯のうち独立な 3 本（主対角、第 1・第 2 上副対角）を受け取ります。

    Args:
        main: 主対角（長さ N）
        upper1: 第 1 上副対角（長さ N-1）
        upper2: 第 2 上副対角（長さ N-2）
        rhs: 右辺ベクトル（長さ N）

    Raises:
        DimensionMismatch: 帯の長さが N と整合しない場合
        NotPositiveDefinite: ピボットが正でない場合
    """
    d0 = np.asarray(main, dtype=np.float64)
    d1 = np.asarray(upper1, dtype=np.float64)
    d2 = np.asarray(upper2, dtype=np.float64)
    b = np.asarray(rhs, dtype=np.float64)
    n = d0.shape[0]
    if b.shape != (n,) or d1.shape != (max(n - 1, 0),) or d2.shape != (max(n - 2, 0),):
        raise DimensionMismatch(
            f"帯の長さが不正です: main={d0.shape}, upper1={d1.shape}, upper2={d2.shape}, rhs={b.shape}"
        )
    # scipy の上側帯格納形式: ab[u + i - j, j] = A[i, j]
    ab = np.zeros((3, n), dtype=np.float64)
    ab[2, :] = d0
    ab[1, 1:] = d1
    ab[0, 2:] = d2
    try:
        return scipy.linalg.solveh_banded(ab, b, lower=False, check_finite=True)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"五重対角行列が正定値ではありません: {e}") from e


def quartic_roots(c0: float, c1: float, c2: float, c3: float, c4: float) -> ComplexArray:
    """c4 z⁴ + c3 z³ + c2 z² + c1 z + c0 の 4 根をコンパニオン行列の固有値として求める

    Raises:
        DegenerateLeadingCoefficient: |c4| が 1e-300 未満の場合
    """
    if abs(c4) < LEADING_COEFFICIENT_FLOOR:
        raise DegenerateLeadingCoefficient(f"四次の係数がほぼ 0 です: c4={c4!r}")
    # numpy.roots はコンパニオン行列の固有値を返す
    return np.roots([c4, c3, c2, c1, c0]).astype(np.complex128)


def relative_frobenius_error(estimate: npt.ArrayLike, reference: npt.ArrayLike) -> float:
    """‖A − B‖_F / ‖B‖_F（B = 0 のときは ‖A‖_F）"""
    a = np.asarray(estimate, dtype=np.float64)
    b = np.asarray(reference, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"行列の次元が一致しません: {a.shape} と {b.shape}")
    denom = float(np.linalg.norm(b))
    diff = float(np.linalg.norm(a - b))
    return diff / denom if denom > 0 else diff
