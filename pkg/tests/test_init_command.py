"""mvhp init コマンドのテスト"""

import tomllib
from pathlib import Path

from src.cli.commands.init import _generate_config_text, run_init
from src.core.schemas.mvhp_config import MvhpConfig


class TestInitCommand:
    """mvhp init コマンドのテスト"""

    def test_init_creates_config_in_pyproject(self, tmp_path: Path, monkeypatch) -> None:
        """pyproject.toml に設定が追加されることを確認"""
        # テスト用のディレクトリに移動
        monkeypatch.chdir(tmp_path)

        # 空の pyproject.toml を作成
        pyproject = tmp_path / "pyproject.toml"
        pyproject.write_text('[project]\nname = "test-project"\nversion = "0.1.0"\n')

        # init コマンド実行
        assert run_init() is True

        # pyproject.toml を確認
        content = pyproject.read_text()
        assert "[tool.mvhp]" in content
        assert 'frequency = "monthly"' in content

    def test_generated_config_round_trips(self, tmp_path: Path) -> None:
        """生成した設定は TOML として読めて既定値と一致する"""
        pyproject = tmp_path / "pyproject.toml"
        pyproject.write_text('[project]\nname = "test"\n')

        run_init(project_root=tmp_path)

        section = tomllib.loads(pyproject.read_text())["tool"]["mvhp"]
        assert MvhpConfig.model_validate(section) == MvhpConfig()

    def test_init_preserves_existing_content(self, tmp_path: Path, monkeypatch) -> None:
        """既存の内容が保持されることを確認"""
        monkeypatch.chdir(tmp_path)

        # 既存の内容を持つ pyproject.toml を作成
        pyproject = tmp_path / "pyproject.toml"
        original_content = '[project]\nname = "test-project"\nversion = "0.1.0"\n\n[tool.mypy]\nstrict = true\n'
        pyproject.write_text(original_content)

        run_init()

        # 既存の内容が保持されているか確認
        content = pyproject.read_text()
        assert "[project]" in content
        assert 'name = "test-project"' in content
        assert "[tool.mypy]" in content
        assert "strict = true" in content
        assert "[tool.mvhp]" in content

    def test_init_without_pyproject_fails(self, tmp_path: Path, monkeypatch) -> None:
        """pyproject.toml がない場合は何も書き込まないことを確認"""
        # 空のディレクトリに移動
        empty_dir = tmp_path / "empty"
        empty_dir.mkdir()
        monkeypatch.chdir(empty_dir)

        assert run_init() is False

        # pyproject.toml が作成されていないことを確認
        assert not (empty_dir / "pyproject.toml").exists()

    def test_init_with_force_overwrites_config(self, tmp_path: Path, monkeypatch) -> None:
        """--force オプションで既存の設定を上書きできることを確認"""
        monkeypatch.chdir(tmp_path)

        pyproject = tmp_path / "pyproject.toml"
        pyproject.write_text(
            '[project]\nname = "test-project"\n\n[tool.mvhp]\nfrequency = "quarterly"\n\n[tool.ruff]\nline-length = 100\n'
        )

        assert run_init(force=True) is True

        # 設定が更新され、後続のセクションは残ることを確認
        data = tomllib.loads(pyproject.read_text())
        assert data["tool"]["mvhp"]["frequency"] == "monthly"
        assert data["tool"]["ruff"]["line-length"] == 100

    def test_init_without_force_preserves_existing_config(self, tmp_path: Path, monkeypatch) -> None:
        """--force なしでは既存の設定を保持することを確認"""
        monkeypatch.chdir(tmp_path)

        pyproject = tmp_path / "pyproject.toml"
        original = '[project]\nname = "test-project"\n\n[tool.mvhp]\nfrequency = "quarterly"\n'
        pyproject.write_text(original)

        assert run_init(force=False) is False

        assert pyproject.read_text() == original

    def test_generated_config_has_comments(self, tmp_path: Path, monkeypatch) -> None:
        """生成される設定にコメントが含まれることを確認"""
        monkeypatch.chdir(tmp_path)

        pyproject = tmp_path / "pyproject.toml"
        pyproject.write_text('[project]\nname = "test"\n')

        run_init()

        content = pyproject.read_text()
        assert "# mvhp の設定" in content
        # 任意項目はコメントアウトされている
        assert "# snr_floor" in content
        assert "# fixed_lambda" in content

    def test_value_lines_follow_config_section(self) -> None:
        """値の行は to_pyproject_section() のキーと値から作る"""
        config = MvhpConfig(frequency="custom", snr_floor=0.002, threads=3)
        text = _generate_config_text(config)

        section = tomllib.loads(text)["tool"]["mvhp"]
        assert section == config.to_pyproject_section()
        assert MvhpConfig.model_validate(section) == config
        # 値のあるキーはコメントアウト行を出さない
        assert "# snr_floor" not in text
        assert "# fixed_lambda" in text
