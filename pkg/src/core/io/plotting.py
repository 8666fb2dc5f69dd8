"""
トレンド抽出結果の SVG 出力

系列ごとに標本を plot_windows 個の期間に分け、期間ごとに 1 枚（1200×400 px）の図を描きます。
元系列は灰色、多変量トレンドは太線、固定 λ の HP トレンドは細線です。
"""

import logging
import re
from collections import Counter
from pathlib import Path

import matplotlib

matplotlib.use("svg")

import numpy as np  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from src.core.estimation.exceptions import InvalidConfiguration  # noqa: E402
from src.core.estimation.models import TimeSeriesPanel  # noqa: E402

logger = logging.getLogger(__name__)

FIGURE_SIZE = (12.0, 4.0)
FIGURE_DPI = 100


def _sanitize(name: str) -> str:
    return re.sub(r"[^0-9A-Za-z_.-]+", "_", name).strip("._") or "series"


def plot_filename(name: str, window: int) -> str:
    """ファイル名に使えない文字を _ に置き換えた `<系列名>_<期間番号>.svg`"""
    return f"{_sanitize(name)}_{window + 1}.svg"


def series_stems(names: list[str]) -> list[str]:
    """系列ごとのファイル名の語幹

    置き換え後に同じ語幹になる系列（"a b" と "a_b" など）には列番号 `_col<k>`（1 始まり）を付けます。
    """
    stems = [_sanitize(name) for name in names]
    counts = Counter(stems)
    return [f"{stem}_col{k + 1}" if counts[stem] > 1 else stem for k, stem in enumerate(stems)]


def _windows(n: int, count: int) -> list[slice]:
    edges = np.linspace(0, n, count + 1).round().astype(int)
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:], strict=True) if b > a]


def plot_trends(
    panel: TimeSeriesPanel,
    trend: np.ndarray,
    fixed_trend: np.ndarray,
    out_dir: Path | str,
    fixed_lambda: float,
    windows: int = 2,
) -> list[Path]:
    """系列ごと・期間ごとの SVG を書き出す

    Args:
        panel: 元のパネル（列名と日付ラベルを使う）
        trend: 多変量トレンド（N×d）
        fixed_trend: 固定 λ のトレンド（N×d）
        out_dir: 出力ディレクトリ
        fixed_lambda: 凡例に表示する固定 λ
        windows: 系列あたりの期間数

    Returns:
        書き出したファイルのパス（系列順、期間順）
    """
    if windows < 1:
        raise InvalidConfiguration(f"plot_windows は 1 以上である必要があります: {windows}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = panel.dates if panel.dates is not None else [str(t + 1) for t in range(panel.n_obs)]
    written: list[Path] = []

    with matplotlib.rc_context({"svg.hashsalt": "mvhp", "svg.fonttype": "none"}):
        stems = series_stems(panel.names)
        for k, name in enumerate(panel.names):
            for w, window in enumerate(_windows(panel.n_obs, windows)):
                fig = Figure(figsize=FIGURE_SIZE, dpi=FIGURE_DPI)
                ax = fig.add_subplot()
                t = np.arange(panel.n_obs)[window]
                ax.plot(t, panel.values[window, k], color="0.6", linewidth=1.0, label=name)
                ax.plot(t, trend[window, k], color="black", linewidth=2.5, label="META trend")
                ax.plot(t, fixed_trend[window, k], color="black", linewidth=0.7, label=f"HP (λ={fixed_lambda:g})")
                ticks = t[:: max(1, len(t) // 8)]
                ax.set_xticks(ticks, [labels[i] for i in ticks])
                ax.set_title(f"{name} ({labels[window.start]} .. {labels[window.stop - 1]})")
                ax.legend(loc="best")
                path = out / plot_filename(stems[k], w)
                fig.savefig(path, format="svg", metadata={"Date": None})
                written.append(path)

    logger.info("図を %d 枚書き出しました: %s", len(written), out)
    return written
