from abc import ABC, abstractmethod

from fgk.schemas import Report


class BaseReportStorage(ABC):
    """レポート出力先の抽象基底クラス"""

    @abstractmethod
    def save(self, report: Report) -> None:
        """レポートを書き出す"""
        pass

    @staticmethod
    def render(report: Report) -> str:
        """レポートの正準 JSON 文字列（同じ入力なら常に同じバイト列）"""
        return report.model_dump_json(indent=2) + "\n"
