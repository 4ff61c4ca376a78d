"""
シリアライズユーティリティ - 多項式や形式関数を含む値をレポート用の JSON 形式に変換する
"""

from typing import Any

from sympy.polys.rings import PolyElement

from fgk.calculus.algebra import FormalFunction
from fgk.calculus.parser import format_formal, format_polynomial


def to_serializable(obj: Any) -> Any:
    """
    レポートの data 欄に入れる値を JSON シリアライズ可能な形式に変換する

    引数:
        obj: 多項式・形式関数・pydantic モデル・コンテナなど
    戻り値:
        文字列・数値・リスト・辞書からなる値（多項式は正準文字列）
    """
    if isinstance(obj, PolyElement):
        return format_polynomial(obj)
    elif isinstance(obj, FormalFunction):
        return format_formal(obj)
    elif hasattr(obj, 'model_dump'):
        return to_serializable(obj.model_dump())
    elif isinstance(obj, (bool, int, str, type(None))):
        return obj
    elif isinstance(obj, (list, tuple)):
        return [to_serializable(item) for item in obj]
    elif isinstance(obj, dict):
        return {str(key): to_serializable(value) for key, value in obj.items()}
    else:
        return str(obj)
