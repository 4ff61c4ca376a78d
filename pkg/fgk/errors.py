"""
例外定義モジュール

パッケージ内で送出されるすべての例外の基底クラスと派生クラスを定義する。
"""

from typing import Any, Dict, Optional, Tuple


class FgkError(Exception):
    """パッケージ共通の基底例外"""


class ParseError(FgkError):
    """多項式テキストの構文エラー（位置つき）"""

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        super().__init__(f"{message} (位置 {position}: {text!r})")


class ChartMismatchError(FgkError):
    """異なるチャート上の値を混在させた"""


class FiberVariableError(FgkError):
    """ファイバー変数を含んではならない入力にファイバー変数が含まれている"""


class NonTerminatingSeriesError(FgkError):
    """指数級数が宣言された切断次数で停止しない"""


class InsufficientOrderError(FgkError):
    """有効次数が要求された計算に足りない"""


class NotNaturalError(FgkError):
    """自然な作用素ではない（order(A_r) > r となる次数がある）"""

    def __init__(self, grade: int):
        self.grade = grade
        super().__init__(f"作用素は自然ではありません: ν^{grade} の階数が {grade} を超えています")


class NonFlatError(FgkError):
    """平坦チャート（定数テンソル）でのみ定義される演算に非定数テンソルが渡された"""


class NuOrderError(FgkError):
    """ν 次数の前提条件違反（例: B − 1 が ν⁰ 成分を持つ）"""


class KahlerPoissonViolation(FgkError):
    """Kähler-Poisson 条件の違反"""

    def __init__(self, identity: str, indices: Dict[str, int], residual: str):
        self.identity = identity
        self.indices = indices
        self.residual = residual
        where = ",".join(f"{k}={v}" for k, v in indices.items())
        super().__init__(f"KP条件 {identity} が ({where}) で成り立ちません: 残差 {residual}")


class ReconstructionError(FgkError):
    """二階微分データから F_n を再構成できない"""


class FiltrationError(FgkError):
    """フィルトレーション次数の前提条件違反"""


class WordLengthError(FgkError):
    """語の長さが上限を超えた"""


class IncoherentFamilyError(FgkError):
    """コヒーレント族の性質 A/B が成り立たない"""

    def __init__(self, prop: str, witness: Tuple[str, ...], residual: str, detail: Optional[str] = None):
        self.prop = prop
        self.witness = witness
        self.residual = residual
        message = f"性質 {prop} が成り立ちません: 入力 {list(witness)} で残差 {residual}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class OperatorPropertyError(FgkError):
    """補助作用素 V_n などの構成上の性質チェックに失敗した"""


class ConfigError(FgkError):
    """設定ファイルの読み込み・検証エラー"""

    def __init__(self, message: str, details: Any = None):
        self.details = details
        super().__init__(message)
