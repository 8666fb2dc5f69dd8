"""mvhp detrend コマンド

推定済みレポート（なければその場で推定）の分解変換を使ってトレンドと循環成分を抽出し、
入力と同じレイアウトの CSV（と任意で SVG）を書き出します。
"""

import logging
from pathlib import Path

from src.cli.commands.estimate import estimate_panel
from src.core.estimation.exceptions import DimensionMismatch
from src.core.filtering.trend_extraction import extract_trends, extract_trends_fixed
from src.core.io.panel_io import load_panel, write_panel
from src.core.io.plotting import plot_trends
from src.core.io.report_io import read_report
from src.core.output_manager import OutputPathManager
from src.core.schemas.mvhp_config import MvhpConfig

logger = logging.getLogger(__name__)


def run_detrend(
    input_path: Path,
    config: MvhpConfig,
    report_path: Path | None = None,
    out_dir: Path | None = None,
    threads: int = 1,
) -> dict[str, str]:
    """トレンド抽出を実行する

    Args:
        input_path: パネル CSV
        config: 設定（emit_plots, fixed_lambda, plot_windows を使う）
        report_path: estimate が書き出したレポート（None なら推定から行う）
        out_dir: 出力ディレクトリ（None なら設定の output_dir）
        threads: 並列ワーカー数

    Returns:
        成功時に表示する要約

    Raises:
        DimensionMismatch: レポートの系列数がパネルと異なる場合
    """
    panel = load_panel(input_path, config.frequency)
    if report_path is not None:
        report = read_report(report_path)
        if report.decoupling.dim != panel.dim:
            raise DimensionMismatch(
                f"レポートの系列数 {report.decoupling.dim} がパネルの系列数 {panel.dim} と一致しません",
                context=str(report_path),
            )
        if list(report.names) != list(panel.names):
            logger.warning("レポートの系列名 %s がパネルの列名 %s と異なります", report.names, panel.names)
        dec = report.decoupling
    else:
        logger.info("レポートが指定されていないため推定から実行します")
        dec = estimate_panel(panel, config, threads).decoupling

    result = extract_trends(panel, dec, threads)
    paths = OutputPathManager(config, out_dir=out_dir)
    trend_path = write_panel(panel, paths.get_trend_path(), result.trend)
    cycle_path = write_panel(panel, paths.get_cycle_path(), result.cycle)

    details = {
        "入力": str(input_path),
        "トレンド": str(trend_path),
        "循環成分": str(cycle_path),
        "共通トレンド": str(dec.cointegration_rank),
    }
    if config.emit_plots:
        fixed_lambda = config.comparison_lambda()
        fixed = extract_trends_fixed(panel, dec, fixed_lambda, threads)
        plots = plot_trends(
            panel,
            result.trend,
            fixed.trend,
            paths.get_plot_dir(),
            fixed_lambda,
            windows=config.plot_windows,
        )
        details["図"] = f"{len(plots)} 枚 ({paths.get_plot_dir()})"
    return details
