"""
チェックレコードの構築

恒等式の残差（形式関数・多項式・作用素）を正準文字列に変換し、
入力ケースを順に評価して最初の非零残差を証人つきで記録する。
"""

from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

from sympy.polys.rings import PolyElement

from fgk.calculus.algebra import FormalFunction
from fgk.calculus.operators import FormalOperator
from fgk.calculus.parser import format_formal, format_polynomial
from fgk.errors import FgkError
from fgk.schemas import FAIL, PASS, SKIPPED, CheckRecord
from fgk.utils.logging_config import ERROR_ICON, SKIP_ICON, SUCCESS_ICON, setup_logger

logger = setup_logger('checks')

Residual = Union[FormalFunction, PolyElement, FormalOperator, int, None]
Case = Tuple[Sequence[str], Callable[[], Residual]]


def residual_text(residual: Residual) -> str:
    """残差の正準文字列（零なら "0"）"""
    if residual is None:
        return "0"
    if isinstance(residual, FormalFunction):
        return format_formal(residual.reliable())
    if isinstance(residual, FormalOperator):
        return "0" if residual.is_zero() else repr(residual)
    if isinstance(residual, PolyElement):
        return format_polynomial(residual)
    return str(residual)


def witness_text(value) -> str:
    if isinstance(value, FormalFunction):
        return format_formal(value)
    if isinstance(value, PolyElement):
        return format_polynomial(value)
    return str(value)


def residual_detail(residual: Residual) -> Optional[str]:
    """形式関数の残差なら最低ファイバー次数"""
    if isinstance(residual, FormalFunction):
        return f"fiber_degree={residual.reliable().filtration_degree()}"
    return None


def run_identity(name: str, cases: Iterable[Case]) -> CheckRecord:
    """各ケースの残差を計算し、最初に非零となったケースで fail を返す"""
    count = 0
    for witness, compute in cases:
        count += 1
        try:
            residual = compute()
        except FgkError as e:
            logger.error(f"{ERROR_ICON} {name}: {e}")
            return CheckRecord(name=name, status=FAIL, residual="error", witness=list(witness),
                               detail=str(e))
        text = residual_text(residual)
        if text != "0":
            logger.error(f"{ERROR_ICON} {name}: 入力 {list(witness)} で残差 {text}")
            return CheckRecord(name=name, status=FAIL, residual=text, witness=list(witness),
                               detail=residual_detail(residual))
    logger.info(f"{SUCCESS_ICON} {name} ({count} 件)")
    return CheckRecord(name=name, status=PASS, detail=f"cases={count}")


def skipped(name: str, reason: str) -> CheckRecord:
    logger.info(f"{SKIP_ICON} {name}: {reason}")
    return CheckRecord(name=name, status=SKIPPED, detail=reason)


def single(name: str, compute: Callable[[], Residual], witness: Optional[Sequence[str]] = None) -> CheckRecord:
    return run_identity(name, [(witness or [], compute)])
