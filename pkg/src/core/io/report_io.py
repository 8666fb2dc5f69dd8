"""
推定レポート・共分散・シミュレーション設定の JSON / YAML 入出力

行列は行優先の配列の配列で書き出します。キーはソート済み、浮動小数点数は
往復で値が変わらない最短表記（有限でない値は null）なので、同じ入力からは
バイト単位で同じファイルが得られます。
"""

import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt
import yaml
from pydantic import ValidationError

from src.core.estimation.exceptions import InvalidConfiguration, ParseError
from src.core.estimation.models import (
    AggregateFit,
    AutocovSet,
    Decoupling,
    EstimationReport,
    InvertibilityCertificate,
    MetaEstimate,
    ReducedForm,
    ScalarMA2Fit,
    SimConfig,
    StructuralParams,
)
from src.core.numerics.linalg import ensure_symmetric
from src.core.schemas.types import MatrixRows

logger = logging.getLogger(__name__)


def _num(x: float) -> float | None:
    value = float(x)
    return value if math.isfinite(value) else None


def _rows(m: npt.ArrayLike) -> MatrixRows:
    return [[_num(v) for v in row] for row in np.asarray(m, dtype=np.float64).tolist()]


def _vec(v: npt.ArrayLike) -> list[float | None]:
    return [_num(x) for x in np.asarray(v, dtype=np.float64).tolist()]


def _as_float(v: Any, missing: float = math.inf) -> float:
    """null は missing（既定は inf）として読む"""
    return missing if v is None else float(v)


def _as_array(v: Any) -> np.ndarray:
    if v and isinstance(v[0], list):
        return np.array([[_as_float(x) for x in row] for row in v])
    return np.array([_as_float(x) for x in v])


def _structural_dict(p: StructuralParams) -> dict[str, Any]:
    return {
        "sigma_eps": _rows(p.sigma_eps),
        "sigma_xi": _rows(p.sigma_xi),
        "alpha": _num(p.regularization_alpha),
        "sigma_eps_alpha": _num(p.sigma_eps_alpha),
    }


def _aggregate_dict(item: AggregateFit) -> dict[str, Any]:
    f = item.fit
    return {
        "w": list(item.w),
        "theta1": _num(f.theta1),
        "theta2": _num(f.theta2),
        "omega": _num(f.omega),
        "se_theta1": _num(f.se_theta1),
        "se_omega": _num(f.se_omega),
        "loglik": _num(f.loglik),
        "gradient": _num(f.gradient_at_optimum),
        "boundary": f.boundary,
        "n_used": f.n_used,
    }


def report_to_dict(report: EstimationReport) -> dict[str, Any]:
    """EstimationReport を JSON 用の辞書に変換する"""
    est, dec, rf = report.estimate, report.decoupling, report.reduced_form
    out: dict[str, Any] = {
        "method": est.method,
        "names": list(report.names),
        "target_min_snr": _num(est.target_min_snr),
        **_structural_dict(est.structural),
        "unregularized": _structural_dict(est.unregularized),
        "P": _rows(dec.P),
        "P_inv": _rows(dec.P_inv),
        "delta": _vec(dec.delta),
        "cointegration_rank": dec.cointegration_rank,
        "theta1_mat": _rows(rf.theta1_mat),
        "theta2_mat": _rows(rf.theta2_mat),
        "omega": _rows(rf.omega),
        "alpha_k": _vec(rf.alpha),
        "beta_k": _vec(rf.beta),
        "per_aggregate": [_aggregate_dict(a) for a in est.aggregates],
        "diagnostics": {
            "min_snr_eigenvalue": _num(report.min_snr_eigenvalue),
            "invertibility_margins": _vec(rf.certificate.scalar_margins),
            "min_root_modulus": _num(rf.certificate.min_root_modulus),
            "unit_root_factors": rf.certificate.unit_root_factors,
            "boundary_aggregates": [list(w) for w in est.boundary_aggregates()],
        },
        "warnings": list(est.warnings),
    }
    if est.autocov is not None:
        out["gamma0"] = _rows(est.autocov.gamma0)
        out["gamma1"] = _rows(est.autocov.gamma1)
        out["gamma2"] = _rows(est.autocov.gamma2)
    return out


def dump_json(data: dict[str, Any], path: Path | str) -> Path:
    """辞書をキー順・インデント付きで書き出す（末尾改行つき）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    logger.debug("JSON を書き出しました: %s", path)
    return path


def write_report(report: EstimationReport, path: Path | str) -> Path:
    """推定レポートを JSON で書き出す"""
    return dump_json(report_to_dict(report), path)


def load_json(path: Path | str) -> dict[str, Any]:
    """JSON オブジェクトを読み込む

    Raises:
        FileNotFoundError: ファイルが存在しない場合
        ParseError: JSON として解釈できない、またはトップレベルがオブジェクトでない場合
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"ファイルが見つかりません: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"JSON を解析できません: {e.msg}", row=e.lineno, column=e.colno, context=str(path)) from e
    if not isinstance(data, dict):
        raise ParseError("トップレベルが JSON オブジェクトではありません", context=str(path))
    return data


def _structural_from(data: dict[str, Any]) -> StructuralParams:
    return StructuralParams(
        sigma_eps=_as_array(data["sigma_eps"]),
        sigma_xi=_as_array(data["sigma_xi"]),
        regularization_alpha=_as_float(data.get("alpha"), 0.0),
        sigma_eps_alpha=_as_float(data.get("sigma_eps_alpha"), 0.0),
    )


def _aggregate_from(item: dict[str, Any]) -> AggregateFit:
    fit = ScalarMA2Fit(
        theta1=float(item["theta1"]),
        theta2=float(item["theta2"]),
        omega=float(item["omega"]),
        se_theta1=_as_float(item["se_theta1"]),
        se_omega=_as_float(item["se_omega"]),
        loglik=float(item["loglik"]),
        gradient_at_optimum=_as_float(item["gradient"], math.nan),
        boundary=bool(item["boundary"]),
        n_used=int(item["n_used"]),
    )
    return AggregateFit(w=tuple(int(x) for x in item["w"]), fit=fit)


def read_report(path: Path | str) -> EstimationReport:
    """write_report が書き出した JSON からレポートを復元する

    Raises:
        ParseError: JSON として解釈できない場合
        InvalidConfiguration: 必須キーの欠落や値の検証に失敗した場合
    """
    data = load_json(path)
    try:
        autocov = None
        if "gamma0" in data:
            autocov = AutocovSet(
                gamma0=_as_array(data["gamma0"]),
                gamma1=_as_array(data["gamma1"]),
                gamma2=_as_array(data["gamma2"]),
            )
        estimate = MetaEstimate(
            structural=_structural_from(data),
            unregularized=_structural_from(data["unregularized"]),
            autocov=autocov,
            aggregates=[_aggregate_from(a) for a in data.get("per_aggregate", [])],
            target_min_snr=float(data["target_min_snr"]),
            method=data["method"],
            warnings=list(data.get("warnings", [])),
        )
        diagnostics = data.get("diagnostics", {})
        certificate = InvertibilityCertificate(
            scalar_margins=[_as_float(x) for x in diagnostics.get("invertibility_margins", [])],
            min_root_modulus=_as_float(diagnostics.get("min_root_modulus")),
            unit_root_factors=int(diagnostics.get("unit_root_factors", 0)),
        )
        return EstimationReport(
            names=list(data["names"]),
            estimate=estimate,
            decoupling=Decoupling(
                P=_as_array(data["P"]),
                P_inv=_as_array(data["P_inv"]),
                delta=_as_array(data["delta"]),
                cointegration_rank=int(data["cointegration_rank"]),
            ),
            reduced_form=ReducedForm(
                theta1_mat=_as_array(data["theta1_mat"]),
                theta2_mat=_as_array(data["theta2_mat"]),
                omega=_as_array(data["omega"]),
                alpha=_as_array(data["alpha_k"]),
                beta=_as_array(data["beta_k"]),
                certificate=certificate,
            ),
        )
    except KeyError as e:
        raise InvalidConfiguration(f"レポートに必須キー {e.args[0]!r} がありません", context=str(path)) from e
    except (ValidationError, TypeError, IndexError) as e:
        raise InvalidConfiguration(f"レポートの内容が不正です: {e}", context=str(path)) from e


def load_covariances(path: Path | str) -> StructuralParams:
    """{"sigma_eps": [[...]], "sigma_xi": [[...]]} 形式の JSON を読み込む

    Raises:
        AsymmetricMatrix: いずれかの行列が対称でない場合
        InvalidConfiguration: キーの欠落・形状の不一致
    """
    data = load_json(path)
    try:
        sigma_eps = ensure_symmetric(data["sigma_eps"], "Σε")
        sigma_xi = ensure_symmetric(data["sigma_xi"], "Σξ")
        return StructuralParams(sigma_eps=sigma_eps, sigma_xi=sigma_xi)
    except (KeyError, TypeError) as e:
        raise InvalidConfiguration(f"共分散ファイルに必須キー {e.args[0]!r} がありません", context=str(path)) from e
    except ValidationError as e:
        raise InvalidConfiguration(f"共分散ファイルの内容が不正です: {e}", context=str(path)) from e


def factorization_to_dict(
    p: StructuralParams,
    dec: Decoupling,
    rf: ReducedForm,
    residuals: dict[str, float],
) -> dict[str, Any]:
    """factorize コマンドの出力辞書"""
    return {
        **_structural_dict(p),
        "P": _rows(dec.P),
        "P_inv": _rows(dec.P_inv),
        "delta": _vec(dec.delta),
        "cointegration_rank": dec.cointegration_rank,
        "theta1_mat": _rows(rf.theta1_mat),
        "theta2_mat": _rows(rf.theta2_mat),
        "omega": _rows(rf.omega),
        "alpha_k": _vec(rf.alpha),
        "beta_k": _vec(rf.beta),
        "diagnostics": {
            "invertibility_margins": _vec(rf.certificate.scalar_margins),
            "min_root_modulus": _num(rf.certificate.min_root_modulus),
            "unit_root_factors": rf.certificate.unit_root_factors,
            "gamma_residuals": {k: _num(v) for k, v in residuals.items()},
        },
    }


COMPARED_MATRICES = ("sigma_eps", "sigma_xi", "omega")


def load_matrices(path: Path | str) -> dict[str, np.ndarray]:
    """レポートまたは factorize 出力から比較対象の行列（Σε, Σξ, Ω）を取り出す

    存在しないキーは結果に含めません。
    """
    data = load_json(path)
    try:
        return {key: _as_array(data[key]) for key in COMPARED_MATRICES if key in data}
    except (TypeError, IndexError) as e:
        raise InvalidConfiguration(f"行列を読み込めません: {e}", context=str(path)) from e


def load_sim_config(path: Path | str) -> SimConfig:
    """シミュレーション設定を JSON または YAML（拡張子 .yaml / .yml）から読み込む

    Raises:
        ParseError: ファイルを解析できない場合
        InvalidConfiguration: 設定値の検証に失敗した場合
    """
    path = Path(path)
    if path.suffix.lower() in (".yaml", ".yml"):
        if not path.exists():
            raise FileNotFoundError(f"ファイルが見つかりません: {path}")
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as e:
            raise ParseError(f"YAML を解析できません: {e}", context=str(path)) from e
        if not isinstance(data, dict):
            raise ParseError("トップレベルがマッピングではありません", context=str(path))
    else:
        data = load_json(path)
    try:
        return SimConfig.model_validate(data)
    except ValidationError as e:
        raise InvalidConfiguration(f"シミュレーション設定が不正です: {e}", context=str(path)) from e
