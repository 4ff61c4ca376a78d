"""
fgk コマンドラインエントリポイント

    fgk kp-check --config <path>
    fgk solve-f --config <path>
    fgk verify --config <path> [--json <out>]
    fgk extend-family --config <path> --family <path>

終了コード: 0 すべて pass、1 いずれかが fail、2 使用法・設定の誤り。
"""

import argparse
import sys
from typing import List, Optional

from fgk.config import load_chart_config, load_environment, load_family_spec, worker_count
from fgk.errors import ConfigError
from fgk.schemas import Report
from fgk.services.commands import cmd_extend_family, cmd_kp_check, cmd_solve_f, cmd_verify
from fgk.storage import BaseReportStorage, JsonFileReportStorage, StreamReportStorage
from fgk.utils.context_managers import command_run
from fgk.utils.logging_config import ERROR_ICON, set_console_level, setup_logger

logger = setup_logger('main')

EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fgk",
        description="形式シンプレクティック亜群の切断計算と検証")
    parser.add_argument('--log-level', type=str, default=None,
                        help='コンソールのログレベル（DEBUG, INFO, WARNING, ERROR）')
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_command(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument('--config', type=str, required=True, help='チャート設定 JSON ファイル')
        sub.add_argument('--json', type=str, default=None, help='レポートの出力先（省略時は標準出力）')
        sub.add_argument('--timing', action='store_true', help='レポートに実行時間を含める')
        return sub

    add_command("kp-check", "KP 条件（実チャートでは Jacobi 恒等式）を確認する")
    add_command("solve-f", "生成ハミルトニアン F を解く")
    verify = add_command("verify", "亜群・スター積・語計算の全検証を実行する")
    verify.add_argument('--workers', type=int, default=None,
                        help='検証に使うスレッド数（既定は FGK_WORKERS または 4）')
    extend = add_command("extend-family", "コヒーレント族を 1 つ拡張する")
    extend.add_argument('--family', type=str, required=True, help='族の指定 JSON ファイル')
    return parser


def run_command(args: argparse.Namespace) -> Report:
    config = load_chart_config(args.config)
    with command_run(args.command) as elapsed:
        if args.command == "kp-check":
            report = cmd_kp_check(config)
        elif args.command == "solve-f":
            report = cmd_solve_f(config)
        elif args.command == "verify":
            report = cmd_verify(config, worker_count(args.workers))
        else:
            report = cmd_extend_family(config, load_family_spec(args.family))
    if args.timing:
        report = report.model_copy(update={"wall_time_seconds": round(elapsed[0], 6)})
    return report


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse は使用法の誤りで 2、--help で 0 を返す
        return int(e.code or 0)

    load_environment()
    if args.log_level:
        set_console_level(args.log_level)

    try:
        report = run_command(args)
    except ConfigError as e:
        logger.error(f"{ERROR_ICON} 設定エラー: {e}")
        if e.details:
            logger.error(f"詳細: {e.details}")
        return EXIT_USAGE

    storage: BaseReportStorage = JsonFileReportStorage(args.json) if args.json else StreamReportStorage()
    storage.save(report)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
