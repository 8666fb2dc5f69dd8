"""
CLIコマンド共通ユーティリティ

全コマンドで共通の設定ファイル読み込みとワーカー数解決のロジックを提供します。
"""

import os
from pathlib import Path

from src.core.estimation.exceptions import InvalidConfiguration
from src.core.schemas.mvhp_config import MvhpConfig
from src.core.schemas.types import create_thread_count

THREADS_ENV = "MVHP_THREADS"


def load_config(config_path: str | None = None) -> MvhpConfig:
    """
    設定ファイルを読み込みます。

    Args:
        config_path: 設定ファイルまたはディレクトリのパス
            - None: カレントディレクトリから親を遡ってpyproject.tomlを探索（無ければ既定値）
            - ファイルパス: そのファイルを直接読み込み
            - ディレクトリパス: そのディレクトリ内のpyproject.tomlを読み込み

    Returns:
        設定オブジェクト

    Raises:
        FileNotFoundError: 設定ファイルが見つからない場合
        ValueError: 設定ファイルのパースに失敗した場合
    """
    if config_path is None:
        return MvhpConfig.from_pyproject_toml(None)

    path = Path(config_path)

    if not path.exists():
        raise FileNotFoundError(f"Config path not found: {config_path}")

    if path.is_file():
        return MvhpConfig.from_toml_file(path)
    if path.is_dir():
        return MvhpConfig.from_pyproject_toml(path)
    raise ValueError(f"Invalid config path: {config_path}")


def resolve_threads(cli_threads: int | None, config: MvhpConfig) -> int:
    """
    並列ワーカー数を解決します。

    Note:
        優先順位:
        1. コマンドラインの --threads
        2. 環境変数 MVHP_THREADS
        3. pyproject.tomlのthreads

    Raises:
        InvalidConfiguration: 値が整数でない、または 1〜256 の範囲外の場合
    """
    env = os.environ.get(THREADS_ENV, "").strip()
    raw: int | str
    if cli_threads is not None:
        raw, source = cli_threads, "--threads"
    elif env:
        raw, source = env, THREADS_ENV
    else:
        raw, source = config.threads, "[tool.mvhp] threads"
    try:
        return int(create_thread_count(int(raw)))
    except ValueError as e:
        raise InvalidConfiguration(f"{source} の値が不正です: {raw!r}") from e
