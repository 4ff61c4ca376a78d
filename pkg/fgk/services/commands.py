"""
サブコマンドの実装

各コマンドは検証済みの設定を受け取り、Report を返す。数学的な失敗は fail レコードとして
レポートに入り、設定の誤りだけが ConfigError として呼び出し側に伝わる。
"""

from typing import Dict, List, Optional, Tuple

from pydantic import ValidationError

from fgk.calculus.algebra import ChartSpec, Polynomial
from fgk.calculus.checks import run_identity, witness_text
from fgk.calculus.families import extend_family, family_from_spec, verify_family
from fgk.calculus.groupoid import (GroupoidData, KahlerPoissonTensor, assemble, kp_check,
                                   solver_checks)
from fgk.calculus.parser import format_formal, parse_poly
from fgk.calculus.poisson import PoissonTensor, jacobi_violation
from fgk.errors import ConfigError, FgkError, KahlerPoissonViolation, ParseError
from fgk.schemas import FAIL, PASS, ChartConfig, CheckRecord, FamilySpec, Report
from fgk.services.runner import run_jobs
from fgk.services.suites import jet_payload, verify_jobs
from fgk.utils.logging_config import ERROR_ICON, SUCCESS_ICON, setup_logger
from fgk.utils.serialization import to_serializable

logger = setup_logger('commands')


# ---------------------------------------------------------------------------
# 共通処理
# ---------------------------------------------------------------------------

def parse_tensor(config: ChartConfig, chart: ChartSpec) -> List[List[Polynomial]]:
    """テンソル成分の文字列を多項式に変換する"""
    rows = []
    for i, row in enumerate(config.tensor):
        parsed = []
        for j, text in enumerate(row):
            try:
                parsed.append(parse_poly(text, chart))
            except ParseError as e:
                raise ConfigError(f"tensor[{i}][{j}] を解析できません: {e}") from e
        rows.append(parsed)
    return rows


def real_tensor(config: ChartConfig) -> PoissonTensor:
    chart = config.chart_spec()
    entries = parse_tensor(config, chart)
    try:
        return PoissonTensor(chart=chart, entries=tuple(tuple(row) for row in entries))
    except ValidationError as e:
        raise ConfigError("Poisson テンソルが不正です", details=e.errors(include_url=False)) from e


def require_groupoid_config(config: ChartConfig) -> None:
    if config.flavor != "complex":
        raise ConfigError(f"このコマンドは複素チャートでのみ実行できます: flavor={config.flavor}")
    if config.fiber_truncation < 2:
        raise ConfigError(f"fiber_truncation は 2 以上でなければなりません: {config.fiber_truncation}")


def _report(command: str, config: ChartConfig, checks: List[CheckRecord], data: Optional[Dict] = None) -> Report:
    return Report(command=command, config=config.model_dump(), checks=checks,
                  data=to_serializable(data or {}))


def kp_record(entries: List[List[Polynomial]], chart: ChartSpec) -> Tuple[CheckRecord, Optional[KahlerPoissonTensor]]:
    """KP 条件を確認し、チェックレコードと（成立時は）テンソルを返す"""
    name = "kp.conditions"
    try:
        tensor = kp_check(entries, chart)
    except KahlerPoissonViolation as e:
        witness = [f"{key}={value}" for key, value in e.indices.items()]
        logger.error(f"{ERROR_ICON} {name}: {e}")
        return CheckRecord(name=name, status=FAIL, residual=e.residual, witness=witness, detail=e.identity), None
    logger.info(f"{SUCCESS_ICON} {name}")
    return CheckRecord(name=name, status=PASS), tensor


def jacobi_record(eta: PoissonTensor, name: str) -> CheckRecord:
    def compute():
        violation = jacobi_violation(eta)
        return None if violation is None else violation[1]

    violation = jacobi_violation(eta)
    witness = [] if violation is None else [witness_text(eta.chart.base_ring.gens[i]) for i in violation[0]]
    return run_identity(name, [(witness, compute)])


def _prepare_groupoid(config: ChartConfig) -> Tuple[List[CheckRecord], Optional[GroupoidData]]:
    """KP 確認と F の構成（失敗時はレコードのみ返す）"""
    require_groupoid_config(config)
    chart = config.chart_spec()
    record, tensor = kp_record(parse_tensor(config, chart), chart)
    if tensor is None:
        return [record], None
    try:
        data = assemble(tensor)
    except FgkError as e:
        logger.error(f"{ERROR_ICON} F の構成に失敗しました: {e}")
        return [record, CheckRecord(name="groupoid.solve", status=FAIL, residual="error", detail=str(e))], None
    return [record], data


def f_components(data: GroupoidData) -> Dict[str, str]:
    """F をファイバー次数ごとに出力する"""
    return {str(n): format_formal(data.F.homogeneous(n))
            for n in range(2, data.chart.fiber_truncation + 1)}


# ---------------------------------------------------------------------------
# サブコマンド
# ---------------------------------------------------------------------------

def cmd_kp_check(config: ChartConfig) -> Report:
    """複素チャートでは KP 条件、実チャートでは η の Jacobi 恒等式を確認する"""
    chart = config.chart_spec()
    if chart.is_complex:
        record, _ = kp_record(parse_tensor(config, chart), chart)
    else:
        record = jacobi_record(real_tensor(config), "kp.jacobi")
    return _report("kp-check", config, [record])


def cmd_solve_f(config: ChartConfig) -> Report:
    """F を解き、次数ごとの成分と解の検証結果を返す"""
    records, data = _prepare_groupoid(config)
    if data is None:
        return _report("solve-f", config, records)
    records.extend(solver_checks(data, config.basis_degree))
    return _report("solve-f", config, records, {"F": f_components(data)})


def cmd_verify(config: ChartConfig, workers: int = 1) -> Report:
    """亜群・スター積・語計算のすべての検証スイートを実行する"""
    records, data = _prepare_groupoid(config)
    if data is None:
        return _report("verify", config, records)
    records.extend(run_jobs(verify_jobs(config, data), workers))
    payload = {"F": f_components(data), "alpha": jet_payload(data)}
    return _report("verify", config, records, payload)


def cmd_extend_family(config: ChartConfig, spec: FamilySpec) -> Report:
    """コヒーレント族を 1 つ拡張し、拡張後の族の性質を検証する"""
    if config.flavor != "real":
        raise ConfigError(f"extend-family は実チャートでのみ実行できます: flavor={config.flavor}")
    tensor = real_tensor(config)
    seed, trials = config.rng_seed, config.trials

    jacobi = jacobi_record(tensor, "family.tensor_jacobi")
    if jacobi.status == FAIL:
        return _report("extend-family", config, [jacobi])

    family = family_from_spec(spec, tensor)
    records = [jacobi] + verify_family(family, seed, trials, prefix="family.input")
    if any(record.status == FAIL for record in records):
        logger.error(f"{ERROR_ICON} 入力族がコヒーレントではないため拡張しません")
        return _report("extend-family", config, records)

    try:
        extended = extend_family(family, seed, trials, check=False)
    except FgkError as e:
        logger.error(f"{ERROR_ICON} 拡張に失敗しました: {e}")
        records.append(CheckRecord(name="family.extension", status=FAIL, residual="error", detail=str(e)))
        return _report("extend-family", config, records)

    records.extend(verify_family(extended, seed, trials, prefix="family.extended", include_phi=True))
    logger.info(f"C_{family.size} を構成しました")
    return _report("extend-family", config, records, {"operators": extended.to_spec().operators})
