"""
出力ファイル管理モジュール

MvhpConfig を基に統一的な出力パスを生成します。
すべての出力ファイル（レポート JSON, トレンド・循環成分 CSV, SVG）のパス管理を一元化。
"""

from pathlib import Path

from .schemas.mvhp_config import MvhpConfig


class OutputPathManager:
    """
    出力ファイルのパスを統一的に管理するマネージャー

    出力ディレクトリは CLI の --out-dir、なければ設定の output_dir（プロジェクトルート相対）です。
    get_* はいずれも親ディレクトリを作成してからパスを返します。
    """

    def __init__(self, config: MvhpConfig, project_root: Path | None = None, out_dir: Path | None = None):
        """
        初期化

        Args:
            config: mvhp設定
            project_root: プロジェクトルートディレクトリ
                （デフォルト: カレントディレクトリ）
            out_dir: 出力ディレクトリ（指定時は設定より優先）
        """
        self.config = config
        self.project_root = project_root or Path.cwd()
        self.base_dir = out_dir.resolve() if out_dir is not None else config.get_output_dir(self.project_root)

    def _file(self, filename: str) -> Path:
        path = self.base_dir / filename
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def get_report_path(self, filename: str = "report.json") -> Path:
        """推定レポートのパス（例: out/report.json）"""
        return self._file(filename)

    def get_trend_path(self) -> Path:
        """トレンド CSV のパス（例: out/trend.csv）"""
        return self._file("trend.csv")

    def get_cycle_path(self) -> Path:
        """循環成分 CSV のパス（例: out/cycle.csv）"""
        return self._file("cycle.csv")

    def get_true_trend_path(self) -> Path:
        """シミュレーションの真のトレンド CSV のパス"""
        return self._file("true_trend.csv")

    def get_plot_dir(self) -> Path:
        """
        SVG の出力ディレクトリ

        Returns:
            図の出力先（例: out/plots）
        """
        plot_dir = self.base_dir / "plots"
        plot_dir.mkdir(parents=True, exist_ok=True)
        return plot_dir
