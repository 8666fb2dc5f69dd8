"""mvhp simulate コマンド

JSON / YAML のシミュレーション設定からパネル CSV と真のトレンド CSV を生成します。
"""

from pathlib import Path

from src.core.io.panel_io import write_panel
from src.core.io.report_io import load_sim_config
from src.core.output_manager import OutputPathManager
from src.core.schemas.mvhp_config import MvhpConfig
from src.core.simulation.simulator import simulate


def run_simulate(config_path: Path, out_path: Path, true_trend_path: Path | None = None) -> dict[str, str]:
    """パネルを生成して書き出す

    Args:
        config_path: シミュレーション設定（.json / .yaml / .yml）
        out_path: パネル CSV の出力先
        true_trend_path: 真のトレンドの出力先（None なら out_path と同じディレクトリの true_trend.csv）
    """
    cfg = load_sim_config(config_path)
    result = simulate(cfg)
    if true_trend_path is None:
        true_trend_path = OutputPathManager(MvhpConfig(), out_dir=out_path.parent).get_true_trend_path()
    write_panel(result.panel, out_path)
    write_panel(result.panel, true_trend_path, result.true_trend)
    return {
        "設定": str(config_path),
        "パネル": str(out_path),
        "真のトレンド": str(true_trend_path),
        "系列": f"{result.panel.dim} 本 × {result.panel.n_obs} 期",
        "シード": str(cfg.seed),
    }
