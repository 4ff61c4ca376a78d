"""
設定読み込みモジュール

.env を読み込んでから JSON のチャート設定とファミリー指定を検証し、
環境変数 FGK_SEED による rng_seed の上書きを適用する。
"""

import json
import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from fgk.errors import ConfigError
from fgk.schemas import ChartConfig, FamilySpec
from fgk.utils.logging_config import SUCCESS_ICON, setup_logger

logger = setup_logger('config')

DEFAULT_WORKERS = 4

_env_loaded = False


def load_environment(env_path: Optional[str] = None) -> None:
    """カレントディレクトリ（または env_path）の .env を一度だけ読み込む"""
    global _env_loaded
    if _env_loaded and env_path is None:
        return
    path = env_path or os.path.join(os.getcwd(), '.env')
    if os.path.exists(path):
        load_dotenv(path, override=False)
        logger.debug(f"{SUCCESS_ICON} 環境変数を読み込みました: {path}")
    _env_loaded = True


def _read_json(path: str, what: str):
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"{what}が見つかりません: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{what}の JSON が不正です: {path} ({e.msg}, 行 {e.lineno})") from e


def seed_override() -> Optional[int]:
    value = os.getenv("FGK_SEED")
    if value is None or value.strip() == "":
        return None
    try:
        seed = int(value)
    except ValueError as e:
        raise ConfigError(f"FGK_SEED は非負整数でなければなりません: {value!r}") from e
    if seed < 0:
        raise ConfigError(f"FGK_SEED は非負整数でなければなりません: {value!r}")
    return seed


def parse_chart_config(payload) -> ChartConfig:
    """辞書からチャート設定を作り、FGK_SEED を適用する"""
    try:
        config = ChartConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigError("チャート設定の検証に失敗しました", details=e.errors(include_url=False)) from e
    seed = seed_override()
    if seed is not None and seed != config.rng_seed:
        logger.info(f"FGK_SEED により rng_seed を {config.rng_seed} から {seed} に上書きします")
        config = config.model_copy(update={"rng_seed": seed})
    return config


def load_chart_config(path: str) -> ChartConfig:
    load_environment()
    return parse_chart_config(_read_json(path, "設定ファイル"))


def load_family_spec(path: str) -> FamilySpec:
    try:
        return FamilySpec.model_validate(_read_json(path, "ファミリー指定ファイル"))
    except ValidationError as e:
        raise ConfigError("ファミリー指定の検証に失敗しました", details=e.errors(include_url=False)) from e


def worker_count(requested: Optional[int] = None) -> int:
    """チェック実行に使うスレッド数（引数 > FGK_WORKERS > 既定値）"""
    if requested is not None:
        return max(1, requested)
    value = os.getenv("FGK_WORKERS")
    if not value:
        return DEFAULT_WORKERS
    try:
        return max(1, int(value))
    except ValueError as e:
        raise ConfigError(f"FGK_WORKERS は正の整数でなければなりません: {value!r}") from e
