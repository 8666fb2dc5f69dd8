"""
推定・フィルタリングのカスタム例外定義

エラーを構造化して扱うための例外クラスを提供します。
CLI の終了コード規約（1 = 入力、2 = 数値、3 = 内部）は ``exit_code`` 属性で表します。
"""

from src.core.schemas.types import AggregateKey, ExitCode

EXIT_INPUT: ExitCode = 1
EXIT_NUMERICAL: ExitCode = 2
EXIT_INTERNAL: ExitCode = 3


class MvhpError(Exception):
    """
    mvhp エラーの基底クラス

    すべての推定・入出力例外の親クラスです。
    """

    exit_code: ExitCode = EXIT_INTERNAL

    def __init__(self, message: str, context: str | None = None) -> None:
        """
        エラーを初期化します。

        Args:
            message: エラーメッセージ
            context: エラー発生箇所の補足情報（ファイル名など、オプション）
        """
        self.message = message
        self.context = context
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        """フォーマット済みエラーメッセージを生成"""
        if self.context:
            return f"{self.message} ({self.context})"
        return self.message


# =============================================================================
# 入力エラー（終了コード 1）
# =============================================================================


class InputError(MvhpError, ValueError):
    """
    入力エラー

    入力データ・引数・設定が前提条件を満たさない場合に発生します。
    ValueError を継承して標準のエラー階層からも捕捉できるようにします。
    """

    exit_code = EXIT_INPUT


class ParseError(InputError):
    """
    CSV / JSON の解析エラー

    行・列番号が分かる場合はメッセージに含めます。
    """

    def __init__(
        self,
        message: str,
        row: int | None = None,
        column: int | str | None = None,
        context: str | None = None,
    ) -> None:
        """
        解析エラーを初期化します。

        Args:
            message: エラーメッセージ
            row: エラーが発生したデータ行番号（1 始まり、ヘッダー除く、オプション）
            column: エラーが発生した列（番号または列名、オプション）
            context: ファイルパスなど（オプション）
        """
        self.row = row
        self.column = column
        super().__init__(message, context)

    def _format_message(self) -> str:
        """行・列を含むエラーメッセージを生成"""
        base_msg = super()._format_message()
        if self.row is not None and self.column is not None:
            return f"{base_msg} (行: {self.row}, 列: {self.column})"
        if self.row is not None:
            return f"{base_msg} (行: {self.row})"
        return base_msg


class MissingHeader(ParseError):
    """ヘッダー行が無い、または列名が空・重複している場合に発生します。"""


class NonNumericCell(ParseError):
    """数値として解釈できないセル（空欄・NaN・文字列）がある場合に発生します。"""


class TooShort(InputError):
    """系列長が処理の最小長に満たない場合に発生します。"""

    def __init__(self, length: int, minimum: int, what: str = "系列") -> None:
        self.length = length
        self.minimum = minimum
        super().__init__(f"{what}が短すぎます: N={length} (必要: N >= {minimum})")


class DimensionMismatch(InputError):
    """行列・ベクトルの次元が一致しない場合に発生します。"""


class MissingAggregate(InputError):
    """META の再構成に必要な集計ベクトル w の推定結果が欠けている場合に発生します。"""

    def __init__(self, w: AggregateKey) -> None:
        self.w = w
        super().__init__(f"集計ベクトル w={list(w)} の推定結果がありません")


class NegativeSnr(InputError):
    """負の信号雑音比が指定された場合に発生します。"""


class OutOfInvertibleRange(InputError):
    """θ₁ が可逆域 [-2, 0] の外にある場合に発生します。"""


class DegenerateLeadingCoefficient(InputError):
    """多項式の最高次係数がほぼ 0 の場合に発生します。"""


class AsymmetricMatrix(InputError):
    """対称であるべき行列が対称でない場合に発生します。"""


class LagTooLarge(InputError):
    """標本自己共分散のラグが大きすぎる場合に発生します。"""


class InvalidConfiguration(InputError):
    """
    設定エラー

    Pydantic による設定・入力の検証に失敗した場合に発生します。
    """


# =============================================================================
# 数値エラー（終了コード 2）
# =============================================================================


class NumericalError(MvhpError, ArithmeticError):
    """
    数値計算エラー

    正定値性の破れや収束失敗など、入力が形式的には正しいが計算が成立しない場合に発生します。
    """

    exit_code = EXIT_NUMERICAL


class NotPositiveDefinite(NumericalError):
    """正定値であるべき行列が正定値でない場合に発生します（上流での正則化が必要）。"""


class NoConvergence(NumericalError):
    """反復計算が上限回数内に収束しなかった場合に発生します。"""


class ZeroResidualVariance(NumericalError):
    """残差平方和が 0（定数 0 の入力など）で尤度が定義できない場合に発生します。"""


class NegativeSnrEigenvalue(NumericalError):
    """ΣξΣε⁻¹ に負の固有値がある場合に発生します（正則化の適用漏れ）。"""

    def __init__(self, eigenvalue: float) -> None:
        self.eigenvalue = eigenvalue
        super().__init__(f"信号雑音比行列に負の固有値があります: {eigenvalue:.6g} (先に正則化してください)")


class AggregateFitError(NumericalError):
    """
    集計系列の推定失敗

    1 つでも集計系列の推定に失敗すると Γ の部分再構成は無意味なので、推定全体を失敗させます。
    """

    def __init__(self, w: AggregateKey, cause: Exception) -> None:
        self.w = w
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", EXIT_NUMERICAL)
        super().__init__(f"集計ベクトル w={list(w)} の MA(2) 推定に失敗しました: {cause}")
