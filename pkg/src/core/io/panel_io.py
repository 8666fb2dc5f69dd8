"""
パネル CSV の読み書き

1 行目はヘッダー（系列名）、任意で先頭列 `date` に日付ラベルを置けます。
日付は暦として解釈せず文字列のまま保持します。数値セルは 1 つずつ検査し、
空欄・NaN・文字列があればその行・列を示して拒否します。
"""

import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd

from src.core.estimation.exceptions import MissingHeader, NonNumericCell, ParseError
from src.core.estimation.models import TimeSeriesPanel
from src.core.schemas.types import Frequency

logger = logging.getLogger(__name__)

DATE_COLUMN = "date"
FLOAT_FORMAT = "%.17g"


def _looks_numeric(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _read_raw(path: Path) -> pd.DataFrame:
    """全セルを文字列として読み込む（NaN 変換はしない）"""
    if not path.exists():
        raise FileNotFoundError(f"ファイルが見つかりません: {path}")
    try:
        return pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError as e:
        raise ParseError("CSV ファイルが空です", context=str(path)) from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise ParseError(f"CSV を解析できません: {e}", context=str(path)) from e


def _parse_header(raw: pd.DataFrame, path: Path) -> tuple[list[str], bool]:
    header = [str(c).strip() if isinstance(c, str) else "" for c in raw.iloc[0].tolist()]
    has_dates = bool(header) and header[0].lower() == DATE_COLUMN
    names = header[1:] if has_dates else header
    if not names:
        raise MissingHeader("系列の列がありません", row=0, context=str(path))
    for k, name in enumerate(names):
        column = k + 2 if has_dates else k + 1
        if not name:
            raise MissingHeader("列名が空です", row=0, column=column, context=str(path))
        if _looks_numeric(name):
            raise MissingHeader(f"ヘッダー行がありません（数値 {name!r} が列名の位置にあります）", row=0, column=column, context=str(path))
    if len(set(names)) != len(names):
        raise MissingHeader(f"列名が重複しています: {names}", row=0, context=str(path))
    return names, has_dates


def _parse_cell(cell: object, row: int, column: str, path: Path) -> float:
    if not isinstance(cell, str) or not cell.strip():
        raise NonNumericCell("空のセルがあります", row=row, column=column, context=str(path))
    try:
        value = float(cell)
    except ValueError as e:
        raise NonNumericCell(f"数値ではないセル {cell!r} があります", row=row, column=column, context=str(path)) from e
    if not math.isfinite(value):
        raise NonNumericCell(f"有限でない値 {cell!r} があります", row=row, column=column, context=str(path))
    return value


def load_panel(path: Path | str, frequency: Frequency = "monthly") -> TimeSeriesPanel:
    """CSV からパネルを読み込む

    Args:
        path: CSV ファイルのパス
        frequency: データ頻度

    Returns:
        読み込んだパネル

    Raises:
        FileNotFoundError: ファイルが存在しない場合
        ParseError: 空のファイル・列数の不一致など CSV として解釈できない場合
        MissingHeader: ヘッダー行が無い、または列名が空・重複している場合
        NonNumericCell: 数値でないセルがある場合（行はデータ行の 1 始まり）
    """
    path = Path(path)
    raw = _read_raw(path)
    names, has_dates = _parse_header(raw, path)
    body = raw.iloc[1:]
    if body.empty:
        raise ParseError("データ行がありません", context=str(path))

    offset = 1 if has_dates else 0
    values = np.empty((body.shape[0], len(names)), dtype=np.float64)
    for i, row in enumerate(body.itertuples(index=False, name=None)):
        for k, name in enumerate(names):
            values[i, k] = _parse_cell(row[k + offset], i + 1, name, path)
    dates = [str(c) for c in body.iloc[:, 0].tolist()] if has_dates else None

    logger.info("パネルを読み込みました: %s (N=%d, d=%d)", path, values.shape[0], values.shape[1])
    return TimeSeriesPanel(values=values, names=names, dates=dates, frequency=frequency)


def panel_frame(panel: TimeSeriesPanel, values: np.ndarray | None = None) -> pd.DataFrame:
    """パネル（または同じ形状の値）を日付列つきの DataFrame にする"""
    frame = pd.DataFrame(panel.values if values is None else values, columns=panel.names)
    if panel.dates is not None:
        frame.insert(0, DATE_COLUMN, panel.dates)
    return frame


def write_panel(panel: TimeSeriesPanel, path: Path | str, values: np.ndarray | None = None) -> Path:
    """パネルを CSV に書き出す（17 有効桁なので load_panel で値が完全に復元される）

    Args:
        panel: 列名・日付を提供するパネル
        path: 出力先
        values: 代わりに書き出す N×d の値（トレンド・循環成分の出力に使う）
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    panel_frame(panel, values).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug("CSV を書き出しました: %s", path)
    return path
