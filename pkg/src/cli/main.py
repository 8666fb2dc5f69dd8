"""mvhp のコマンドラインインターフェース"""

import importlib.metadata
import logging
import os
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from src.core.estimation.exceptions import EXIT_INPUT, EXIT_INTERNAL, MvhpError
from src.core.output_manager import OutputPathManager
from src.core.schemas.mvhp_config import MvhpConfig
from src.core.schemas.types import EstimationMethod

from .commands.compare import run_compare
from .commands.detrend import run_detrend
from .commands.estimate import run_estimate
from .commands.factorize import run_factorize
from .commands.init import run_init
from .commands.simulate import run_simulate
from .utils import load_config, resolve_threads

logger = logging.getLogger(__name__)


def get_version() -> str:
    """パッケージのバージョンを取得する"""
    try:
        return importlib.metadata.version("mvhp")
    except importlib.metadata.PackageNotFoundError:
        return "0.0.0"


class MvhpCLI:
    """mvhp CLIツールのメインクラス"""

    def __init__(self) -> None:
        """CLIツールを初期化する"""
        self.console = Console()

    def show_success_message(self, message: str, details: dict[str, str]) -> None:
        """成功メッセージを表示する"""
        table = Table(title=f"✅ {message}", show_header=False, box=None)
        table.add_column("項目", style="cyan", width=14)
        table.add_column("値", style="white")

        for key, value in details.items():
            table.add_row(key, value)

        self.console.print(table)

    def show_error_message(self, message: str, error: str) -> None:
        """エラーメッセージを表示する"""
        self.console.print(f"[red]❌ エラー: {message}[/red]")
        self.console.print(f"[red]詳細: {error}[/red]")


cli_instance = MvhpCLI()


def exit_code_for(error: BaseException) -> int:
    """例外を終了コードに対応づける（1 = 入力, 2 = 数値, 3 = 内部）"""
    if isinstance(error, MvhpError):
        return int(error.exit_code)
    if isinstance(error, (FileNotFoundError, ValidationError, click.BadParameter)):
        return EXIT_INPUT
    return EXIT_INTERNAL


class MvhpGroup(click.Group):
    """引数の解析エラーを入力エラー（終了コード 1）として扱うコマンドグループ

    click の既定では UsageError は終了コード 2 だが、mvhp では 2 を数値エラーに割り当てている。
    """

    def make_context(
        self,
        info_name: str | None,
        args: list[str],
        parent: click.Context | None = None,
        **extra: Any,
    ) -> click.Context:
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as e:
            e.exit_code = EXIT_INPUT
            raise

    def invoke(self, ctx: click.Context) -> Any:
        # サブコマンドの解析もここで行われる
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_INPUT
            raise


def _execute(ctx: click.Context, message: str, action: Callable[[], dict[str, str]]) -> None:
    """コマンド本体を実行し、成功時は要約、失敗時はエラーと終了コードを返す"""
    try:
        details = action()
    except Exception as e:
        code = exit_code_for(e)
        if code == EXIT_INTERNAL:
            logger.exception("内部エラーが発生しました")
        cli_instance.show_error_message(f"{message}に失敗しました", f"{type(e).__name__}: {e}")
        ctx.exit(code)
    cli_instance.show_success_message(f"{message}が完了しました", details)


def _config(ctx: click.Context) -> MvhpConfig:
    """ルートグループの --config から設定を読み込む（ctx.obj にキャッシュ）"""
    if "settings" not in ctx.obj:
        ctx.obj["settings"] = load_config(ctx.obj.get("config"))
    settings: MvhpConfig = ctx.obj["settings"]
    return settings


@click.group(cls=MvhpGroup, context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(version=get_version())
@click.option("--verbose", is_flag=True, help="詳細ログを出力")
@click.option("--config", type=click.Path(exists=True), help="設定ファイル (pyproject.toml) またはそのディレクトリ")
@click.pass_context
def cli(ctx: click.Context, verbose: bool, config: str | None) -> None:
    """mvhp: 多変量 Hodrick-Prescott モデルの推定とトレンド抽出

    使用例:
        mvhp estimate --input panel.csv --freq monthly --out report.json
        mvhp detrend --input panel.csv --report report.json --out-dir out/ --emit-plots
        mvhp simulate --config sim.yaml --out panel.csv
        mvhp factorize --input covs.json --out rf.json
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else os.getenv("LOG_LEVEL", "WARNING"),
        format="%(asctime)s - %(levelname)s - %(message)s",
    )
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    ctx.obj["config"] = config


_freq_option = click.option(
    "--freq",
    "frequency",
    type=click.Choice(["monthly", "quarterly", "custom"]),
    default=None,
    help="データ頻度（目標最小 SNR のプリセット）",
)
_snr_floor_option = click.option(
    "--snr-floor", type=float, default=None, help="--freq custom のときの目標最小信号雑音比"
)
_threads_option = click.option(
    "--threads", type=int, default=None, help="並列ワーカー数（未指定時は MVHP_THREADS、次に設定ファイル）"
)


@cli.command("estimate")
@click.option("--input", "-i", "input_path", type=click.Path(path_type=Path), required=True, help="パネル CSV")
@click.option("--out", "-o", "out_path", type=click.Path(path_type=Path), default=None, help="レポート JSON の出力先")
@_freq_option
@_snr_floor_option
@click.option("--method", type=click.Choice(["meta", "sample"]), default="meta", help="推定法")
@_threads_option
@click.pass_context
def estimate(
    ctx: click.Context,
    input_path: Path,
    out_path: Path | None,
    frequency: str | None,
    snr_floor: float | None,
    method: EstimationMethod,
    threads: int | None,
) -> None:
    """META 法で構造パラメータを推定し、縮約形を含むレポートを書き出す"""

    def action() -> dict[str, str]:
        config = _config(ctx).with_overrides(frequency=frequency, snr_floor=snr_floor)
        target = out_path or OutputPathManager(config).get_report_path()
        return run_estimate(input_path, target, config, resolve_threads(threads, config), method)

    _execute(ctx, "推定", action)


@cli.command("detrend")
@click.option("--input", "-i", "input_path", type=click.Path(path_type=Path), required=True, help="パネル CSV")
@click.option("--report", "report_path", type=click.Path(path_type=Path), default=None, help="estimate のレポート")
@click.option("--out-dir", type=click.Path(path_type=Path), default=None, help="出力ディレクトリ")
@click.option("--emit-plots", is_flag=True, default=None, help="系列ごとの SVG を出力")
@click.option("--fixed-lambda", type=float, default=None, help="比較用 HP トレンドの λ")
@_freq_option
@_snr_floor_option
@_threads_option
@click.pass_context
def detrend(
    ctx: click.Context,
    input_path: Path,
    report_path: Path | None,
    out_dir: Path | None,
    emit_plots: bool | None,
    fixed_lambda: float | None,
    frequency: str | None,
    snr_floor: float | None,
    threads: int | None,
) -> None:
    """分解変換を使ってトレンドと循環成分を抽出する"""

    def action() -> dict[str, str]:
        config = _config(ctx).with_overrides(
            emit_plots=emit_plots or None,
            fixed_lambda=fixed_lambda,
            frequency=frequency,
            snr_floor=snr_floor,
        )
        return run_detrend(input_path, config, report_path, out_dir, resolve_threads(threads, config))

    _execute(ctx, "トレンド抽出", action)


@cli.command("simulate")
@click.option(
    "--config", "-c", "sim_config", type=click.Path(path_type=Path), required=True, help="シミュレーション設定"
)
@click.option("--out", "-o", "out_path", type=click.Path(path_type=Path), required=True, help="パネル CSV の出力先")
@click.option("--true-trend", type=click.Path(path_type=Path), default=None, help="真のトレンド CSV の出力先")
@click.pass_context
def simulate(ctx: click.Context, sim_config: Path, out_path: Path, true_trend: Path | None) -> None:
    """smooth-trend モデルからパネルを生成する"""
    _execute(ctx, "シミュレーション", lambda: run_simulate(sim_config, out_path, true_trend))


@cli.command("factorize")
@click.option("--input", "-i", "input_path", type=click.Path(path_type=Path), required=True, help="Σε, Σξ の JSON")
@click.option("--out", "-o", "out_path", type=click.Path(path_type=Path), required=True, help="縮約形 JSON の出力先")
@click.pass_context
def factorize(ctx: click.Context, input_path: Path, out_path: Path) -> None:
    """Σε, Σξ から一意な可逆 VMA(2) 縮約形を計算する"""
    _execute(ctx, "縮約形の計算", lambda: run_factorize(input_path, out_path))


@cli.command("compare")
@click.argument("estimate_path", type=click.Path(path_type=Path))
@click.argument("reference_path", type=click.Path(path_type=Path))
@click.pass_context
def compare(ctx: click.Context, estimate_path: Path, reference_path: Path) -> None:
    """2 つの推定結果の Σε, Σξ, Ω を相対フロベニウス誤差で比較する"""
    _execute(ctx, "比較", lambda: run_compare(estimate_path, reference_path))


@cli.command("init")
@click.option("--force", is_flag=True, help="既存の設定を上書きする")
def init(force: bool) -> None:
    """pyproject.toml に mvhp の設定を追加

    プロジェクトのルートディレクトリで実行し、
    pyproject.toml に [tool.mvhp] セクションを追加します。

    使用例:
        mvhp init
        mvhp init --force  # 既存設定を上書き
    """
    run_init(force)


if __name__ == "__main__":
    cli()
