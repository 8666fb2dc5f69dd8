"""mvhp factorize コマンド

Σε, Σξ の JSON から一意な可逆 VMA(2) 縮約形を閉形式で求めます。
"""

from pathlib import Path

from src.core.estimation.decoupling import decouple, factorization_residuals, reduced_form
from src.core.io.report_io import dump_json, factorization_to_dict, load_covariances


def run_factorize(input_path: Path, out_path: Path) -> dict[str, str]:
    """縮約形を計算して JSON で書き出す

    Raises:
        AsymmetricMatrix: 入力行列が対称でない場合
        NotPositiveDefinite: Σε が正定値でない場合
        NegativeSnrEigenvalue: Σξ が半正定値でない場合
    """
    p = load_covariances(input_path)
    dec = decouple(p)
    rf = reduced_form(p, dec)
    residuals = factorization_residuals(p, rf)
    dump_json(factorization_to_dict(p, dec, rf, residuals._asdict()), out_path)
    return {
        "入力": str(input_path),
        "出力": str(out_path),
        "δ": ", ".join(f"{d:.6g}" for d in dec.delta),
        "最小根の絶対値": f"{rf.certificate.min_root_modulus:.10g}",
        "Γ 残差": f"{residuals.max():.3g}",
    }
