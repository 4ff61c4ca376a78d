"""
コンテキストマネージャーモジュール

コマンド実行の開始・終了ログと経過時間の計測を提供する
"""

import time
from contextlib import contextmanager
from typing import Iterator, List

from fgk.utils.logging_config import ERROR_ICON, SUCCESS_ICON, setup_logger

logger = setup_logger('context_managers')


@contextmanager
def command_run(command: str) -> Iterator[List[float]]:
    """
    コマンド実行用のコンテキストマネージャ

    使用例:
    with command_run("verify") as elapsed:
        # コマンドの処理を実行
    elapsed[0] に経過秒数が入る
    """
    elapsed = [0.0]
    start = time.perf_counter()
    logger.info(f"--- {command} を開始します ---")
    try:
        yield elapsed
    except Exception as e:
        elapsed[0] = time.perf_counter() - start
        logger.error(f"{ERROR_ICON} {command} が失敗しました: {e}")
        raise
    elapsed[0] = time.perf_counter() - start
    logger.info(f"{SUCCESS_ICON} {command} が終了しました ({elapsed[0]:.2f} 秒)")
