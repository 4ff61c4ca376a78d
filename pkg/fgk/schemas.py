from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from fgk.calculus.algebra import ChartSpec

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"

CheckStatus = Literal["pass", "fail", "skipped"]


class ChartConfig(BaseModel):
    """チャート設定（JSON 設定ファイルの内容）"""
    model_config = ConfigDict(extra="forbid")

    dimension: int = Field(..., ge=1, description="底空間の次元 d")
    flavor: Literal["complex", "real"] = Field(..., description="チャートの種別")
    tensor: List[List[str]] = Field(..., description="テンソル成分の多項式文字列（g^{l̄k} または η^{ij}）")
    fiber_truncation: int = Field(4, ge=0, description="ファイバー次数の切断 N_fib")
    nu_truncation: int = Field(0, ge=0, description="ν 次数の切断 N_ν")
    basis_degree: int = Field(3, ge=0, description="検証に使う単項式基底の次数上限")
    trials: int = Field(10, ge=0, description="乱数入力による検証の試行回数")
    rng_seed: int = Field(0, ge=0, description="乱数シード（FGK_SEED で上書き可能）")
    word_length: int = Field(3, ge=0, le=5, description="語計算の検証に使う語の長さの上限")

    @model_validator(mode="after")
    def _check_shape(self) -> "ChartConfig":
        d = self.dimension
        if len(self.tensor) != d or any(len(row) != d for row in self.tensor):
            raise ValueError(f"tensor の形が {d}×{d} ではありません")
        return self

    def chart_spec(self) -> ChartSpec:
        return ChartSpec(dimension=self.dimension, flavor=self.flavor,
                         fiber_truncation=self.fiber_truncation, nu_truncation=self.nu_truncation)


class CheckRecord(BaseModel):
    """1 つの恒等式の検証結果"""
    name: str = Field(..., description="チェック名（レポート内で一意）")
    status: CheckStatus = Field(..., description="pass / fail / skipped")
    residual: str = Field("0", description="残差の正準多項式文字列（pass のときは \"0\"）")
    witness: List[str] = Field(default_factory=list, description="失敗した入力の文字列表現")
    detail: Optional[str] = Field(None, description="補足（スキップ理由・例外メッセージなど）")


class Report(BaseModel):
    """コマンド実行結果のレポート"""
    command: str = Field(..., description="実行したサブコマンド")
    config: Dict[str, Any] = Field(..., description="使用した設定のエコー")
    checks: List[CheckRecord] = Field(default_factory=list, description="チェック結果（名前順）")
    data: Dict[str, Any] = Field(default_factory=dict, description="コマンド固有の出力")
    wall_time_seconds: Optional[float] = Field(None, description="実行時間（--timing 指定時のみ）")

    @model_validator(mode="after")
    def _sort_checks(self) -> "Report":
        self.checks.sort(key=lambda record: record.name)
        return self

    @property
    def passed(self) -> bool:
        return all(record.status != FAIL for record in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


class FamilyTerm(BaseModel):
    """多重微分作用素の 1 項 c·∂^{α_1}f_1 ⋯ ∂^{α_k}f_k"""
    coefficient: str = Field(..., description="係数の多項式文字列")
    derivatives: List[List[int]] = Field(..., description="引数ごとの微分多重指数")


class FamilySpec(BaseModel):
    """extend-family の入力：C₀..Cₙ の項リスト"""
    operators: List[List[FamilyTerm]] = Field(..., description="k 番目が C_k の項リスト")

    @model_validator(mode="before")
    @classmethod
    def _accept_bare_list(cls, value: Any) -> Any:
        if isinstance(value, list):
            return {"operators": value}
        return value
