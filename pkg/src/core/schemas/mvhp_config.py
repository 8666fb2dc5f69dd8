"""
mvhp設定管理モジュール

pyproject.toml の [tool.mvhp] セクションから設定を読み込み、
バリデーションを行うPydanticモデルを提供します。
"""

import math
import tomllib
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.core.estimation.exceptions import InvalidConfiguration
from src.core.schemas.types import MONTHLY_MIN_SNR, QUARTERLY_MIN_SNR, Frequency

# 頻度プリセットごとの目標最小信号雑音比
FREQUENCY_PRESETS: dict[str, float] = {
    "monthly": MONTHLY_MIN_SNR,
    "quarterly": QUARTERLY_MIN_SNR,
}


class MvhpConfig(BaseModel):
    """
    mvhpの設定を管理するPydanticモデル

    pyproject.tomlの[tool.mvhp]セクションに対応します。
    """

    model_config = ConfigDict(extra="forbid")

    # データ頻度（SNR 下限のプリセットを決める）
    frequency: Frequency = Field(default="monthly", description="データ頻度（monthly, quarterly, custom）")

    # custom 頻度の SNR 下限
    snr_floor: float | None = Field(
        default=None,
        gt=0.0,
        description="frequency='custom' のときの目標最小信号雑音比",
    )

    # 出力ディレクトリ
    output_dir: str = Field(default="out", description="出力ファイルの保存先ディレクトリ（末尾スラッシュは自動削除）")

    # 図の出力フラグ
    emit_plots: bool = Field(default=False, description="detrend で SVG を出力するかどうか")

    # 並列ワーカー数
    threads: int = Field(default=1, ge=1, le=256, description="集計系列の推定・平滑化の並列ワーカー数")

    # MA(2) 推定の初期グリッド点数
    grid_points: int = Field(default=40, ge=3, description="MA(2) 推定の初期グリッド点数")

    # θ₁ の許容誤差
    theta_tolerance: float = Field(default=1e-10, gt=0.0, lt=1e-2, description="θ₁ の許容誤差")

    # 系列あたりの図の枚数
    plot_windows: int = Field(default=2, ge=1, description="系列あたりの図の期間数")

    # 固定 λ（比較用 HP トレンド）
    fixed_lambda: float | None = Field(
        default=None,
        gt=0.0,
        description="比較用の固定 λ（None なら 1/目標最小信号雑音比）",
    )

    @field_validator("output_dir", mode="before")
    @classmethod
    def normalize_output_dir(cls, v: Any) -> Any:
        """output_dirの末尾スラッシュを削除"""
        if isinstance(v, str):
            return v.rstrip("/") or "."
        return v

    @model_validator(mode="after")
    def validate_custom_floor(self) -> "MvhpConfig":
        """custom 頻度には snr_floor が必要"""
        if self.frequency == "custom" and self.snr_floor is None:
            raise ValueError("frequency='custom' には snr_floor の指定が必要です")
        return self

    def target_min_snr(self) -> float:
        """頻度プリセット（custom なら snr_floor）から目標最小信号雑音比を返す"""
        if self.frequency == "custom":
            assert self.snr_floor is not None
            return self.snr_floor
        return FREQUENCY_PRESETS[self.frequency]

    def comparison_lambda(self) -> float:
        """比較用 HP トレンドの λ"""
        if self.fixed_lambda is not None:
            return self.fixed_lambda
        floor = self.target_min_snr()
        return 1.0 / floor if floor > 0 else math.inf

    def with_overrides(self, **overrides: Any) -> "MvhpConfig":
        """None でない値だけを上書きした設定を返す（CLI オプション用）"""
        values = {k: v for k, v in overrides.items() if v is not None}
        if not values:
            return self
        return MvhpConfig.model_validate({**self.model_dump(), **values})

    def get_output_dir(self, project_root: Path) -> Path:
        """
        出力ディレクトリの絶対パスを取得します。

        Args:
            project_root: プロジェクトルートディレクトリ
        """
        return (project_root / self.output_dir).resolve()

    def to_pyproject_section(self) -> dict[str, Any]:
        """
        設定をpyproject.tomlの[tool.mvhp]セクション形式で返します。

        None のフィールドは TOML で表現できないので省きます。
        """
        return {k: v for k, v in self.model_dump().items() if v is not None}

    @classmethod
    def from_pyproject_toml(cls, project_root: Path | None = None) -> "MvhpConfig":
        """
        pyproject.tomlから設定を読み込みます。

        Args:
            project_root: プロジェクトルートディレクトリ
                （Noneの場合はカレントディレクトリから親を遡って探索し、見つからなければ既定値）

        Returns:
            設定オブジェクト

        Raises:
            FileNotFoundError: project_root を指定したのに pyproject.toml が無い場合
            ValueError: TOMLパースエラー・設定値の検証エラーの場合
        """
        if project_root is None:
            current = Path.cwd()
            pyproject_path = None
            for parent in [current, *current.parents]:
                candidate = parent / "pyproject.toml"
                if candidate.exists():
                    pyproject_path = candidate
                    break
            if pyproject_path is None:
                return cls()
        else:
            pyproject_path = project_root / "pyproject.toml"
            if not pyproject_path.exists():
                raise FileNotFoundError(f"pyproject.toml not found at {pyproject_path}")

        return cls.from_toml_file(pyproject_path)

    @classmethod
    def from_toml_file(cls, pyproject_path: Path) -> "MvhpConfig":
        """指定した TOML ファイルの [tool.mvhp] を読み込む（セクションが無ければ既定値）"""
        try:
            with open(pyproject_path, "rb") as f:
                toml_data = tomllib.load(f)
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise InvalidConfiguration(f"Failed to parse pyproject.toml: {e}", context=str(pyproject_path)) from e

        section = toml_data.get("tool", {}).get("mvhp", {})
        return cls.model_validate(section)
