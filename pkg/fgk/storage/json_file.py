import os

from .base import BaseReportStorage
from fgk.schemas import Report
from fgk.utils.logging_config import SUCCESS_ICON, setup_logger

logger = setup_logger('storage')


class JsonFileReportStorage(BaseReportStorage):
    """--json で指定されたファイルへのレポート出力"""

    def __init__(self, path: str):
        self.path = path

    def save(self, report: Report) -> None:
        directory = os.path.dirname(os.path.abspath(self.path))
        os.makedirs(directory, exist_ok=True)
        # 一時ファイルに書いてから置き換える
        tmp_path = f"{self.path}.tmp"
        with open(tmp_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.render(report))
        os.replace(tmp_path, self.path)
        logger.info(f"{SUCCESS_ICON} レポートを書き出しました: {self.path}")
