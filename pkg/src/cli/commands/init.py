"""mvhp init コマンド

プロジェクトに mvhp の設定を追加するコマンドです。
"""

import re
from pathlib import Path

from rich.console import Console
from rich.panel import Panel

from src.core.schemas.mvhp_config import MvhpConfig


def run_init(force: bool = False, project_root: Path | None = None) -> bool:
    """mvhp の設定を pyproject.toml に追加

    Args:
        force: 既存の設定を上書きするかどうか
        project_root: pyproject.toml のあるディレクトリ（デフォルト: カレントディレクトリ）

    Returns:
        設定を書き込んだかどうか
    """
    console = Console()
    pyproject_path = (project_root or Path.cwd()) / "pyproject.toml"

    if not pyproject_path.exists():
        console.print(
            Panel(
                "[red]pyproject.toml が見つかりませんでした[/red]\n\n"
                "[dim]このコマンドはプロジェクトのルートディレクトリで実行してください[/dim]",
                title="[bold red]❌ エラー[/bold red]",
                border_style="red",
            )
        )
        return False

    content = pyproject_path.read_text(encoding="utf-8")

    if "[tool.mvhp]" in content and not force:
        console.print(
            Panel(
                (
                    "[yellow]pyproject.toml に既に [tool.mvhp] "
                    "セクションが存在します[/yellow]\n\n"
                    "[dim]上書きする場合は --force "
                    "オプションを使用してください[/dim]"
                ),
                title="[bold yellow]⚠️  警告[/bold yellow]",
                border_style="yellow",
            )
        )
        return False

    config_text = _generate_config_text(MvhpConfig())

    if "[tool.mvhp]" in content:
        # [tool.mvhp] から次のセクション（または EOF）までを削除
        content = re.sub(r"\[tool\.mvhp\].*?(?=\n\[|\Z)", "", content, flags=re.DOTALL)
        content = content.rstrip("\n") + "\n"

    if not content.endswith("\n"):
        content += "\n"
    content += "\n" + config_text + "\n"
    pyproject_path.write_text(content, encoding="utf-8")

    console.print(
        Panel(
            (
                "[bold green]✅ mvhp の設定を pyproject.toml "
                "に追加しました[/bold green]\n\n"
                f"[bold cyan]設定ファイル:[/bold cyan] {pyproject_path}\n\n"
                "[dim]設定は [tool.mvhp] "
                "セクションで確認・編集できます[/dim]"
            ),
            title="[bold green]🎉 初期化完了[/bold green]",
            border_style="green",
        )
    )
    return True


# キーの直前に置くコメント行
_SECTION_COMMENTS: dict[str, list[str]] = {
    "frequency": ["# データ頻度（monthly: 目標最小 SNR 1/14400, quarterly: 1/1600, custom: snr_floor を使用）"],
    "output_dir": ["", "# 出力先と図の出力"],
    "threads": ["", "# 並列ワーカー数（環境変数 MVHP_THREADS が優先）"],
    "grid_points": ["", "# MA(2) 推定"],
    "plot_windows": ["", "# 系列あたりの図の期間数"],
}

# 値が None のとき代わりに出すコメントアウト行
_OPTIONAL_EXAMPLES: dict[str, str] = {
    "snr_floor": "# snr_floor = 0.0001",
    "fixed_lambda": "# fixed_lambda = 14400.0  # 比較用 HP トレンドの λ（未指定時は 1/目標最小 SNR）",
}


def _toml_value(value: object) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, str):
        return f'"{value}"'
    return repr(value)


def _generate_config_text(config: MvhpConfig) -> str:
    """MvhpConfig から pyproject.toml の設定テキストを生成

    Args:
        config: MvhpConfig インスタンス

    Returns:
        pyproject.toml に追加する設定テキスト
    """
    section = config.to_pyproject_section()
    lines = ["[tool.mvhp]", "# mvhp の設定", ""]

    for key, value in section.items():
        lines.extend(_SECTION_COMMENTS.get(key, []))
        lines.append(f"{key} = {_toml_value(value)}")

    omitted = [example for key, example in _OPTIONAL_EXAMPLES.items() if key not in section]
    if omitted:
        lines.append("")
        lines.extend(omitted)

    return "\n".join(lines)
