from .base import BaseReportStorage
from .json_file import JsonFileReportStorage
from .stream import StreamReportStorage

__all__ = ["BaseReportStorage", "JsonFileReportStorage", "StreamReportStorage"]
