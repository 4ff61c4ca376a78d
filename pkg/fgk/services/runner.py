"""
チェック実行モジュール

独立したチェック（ジョブ）をスレッドプールで並列に実行し、
結果をチェック名の順に並べて返す。
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple

from fgk.errors import FgkError
from fgk.schemas import FAIL, CheckRecord
from fgk.utils.logging_config import ERROR_ICON, setup_logger

logger = setup_logger('runner')

Job = Tuple[str, Callable[[], List[CheckRecord]]]


def _guarded(name: str, job: Callable[[], List[CheckRecord]]) -> List[CheckRecord]:
    try:
        return job()
    except FgkError as e:
        logger.error(f"{ERROR_ICON} ジョブ {name} が例外で終了しました: {e}")
        return [CheckRecord(name=name, status=FAIL, residual="error", detail=str(e))]


def run_jobs(jobs: Sequence[Job], workers: int = 1) -> List[CheckRecord]:
    """
    ジョブを実行してチェック結果を集める

    引数:
        jobs: (ジョブ名, チェック結果のリストを返す関数) の列
        workers: スレッド数（1 なら逐次実行）
    戻り値:
        チェック名の昇順に並べたチェック結果
    """
    logger.info(f"{len(jobs)} 件のジョブを {workers} スレッドで実行します")
    records: List[CheckRecord] = []
    if workers <= 1:
        for name, job in jobs:
            records.extend(_guarded(name, job))
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_guarded, name, job) for name, job in jobs]
            for future in futures:
                records.extend(future.result())
    return sorted(records, key=lambda record: record.name)
