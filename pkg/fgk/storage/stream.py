import sys
import threading
from typing import Optional, TextIO

from .base import BaseReportStorage
from fgk.schemas import Report


class StreamReportStorage(BaseReportStorage):
    """標準出力（または任意のテキストストリーム）へのレポート出力"""

    def __init__(self, stream: Optional[TextIO] = None):
        self._stream = stream
        # 出力の混在を防ぐロック
        self._lock = threading.Lock()

    def save(self, report: Report) -> None:
        stream = self._stream or sys.stdout
        with self._lock:
            stream.write(self.render(report))
            stream.flush()
