"""mvhp compare コマンド

2 つのレポート（または factorize 出力）の Σε, Σξ, Ω を相対フロベニウス誤差で比較します。
"""

from pathlib import Path

from src.core.estimation.exceptions import InvalidConfiguration
from src.core.io.report_io import COMPARED_MATRICES, load_matrices
from src.core.numerics.linalg import relative_frobenius_error


def compare_files(estimate_path: Path, reference_path: Path) -> dict[str, float]:
    """両方のファイルにある行列ごとの ‖A - B‖_F / ‖B‖_F（B = reference）

    Raises:
        InvalidConfiguration: 共通の行列が 1 つも無い場合
        DimensionMismatch: 行列の次元が異なる場合
    """
    a = load_matrices(estimate_path)
    b = load_matrices(reference_path)
    keys = [k for k in COMPARED_MATRICES if k in a and k in b]
    if not keys:
        raise InvalidConfiguration(f"{estimate_path} と {reference_path} に共通の行列がありません")
    return {k: relative_frobenius_error(a[k], b[k]) for k in keys}


def run_compare(estimate_path: Path, reference_path: Path) -> dict[str, str]:
    """比較結果を表示用の要約にする"""
    errors = compare_files(estimate_path, reference_path)
    details = {"比較": str(estimate_path), "基準": str(reference_path)}
    details.update({k: f"{v:.6g}" for k, v in errors.items()})
    return details
