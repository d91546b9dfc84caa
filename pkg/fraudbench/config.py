import logging
import logging.config
import os
from pathlib import Path
from typing import Dict, Optional, Union

from pydantic import BaseModel

from fraudbench.errors import InvalidConfig

LOGGING_INI = Path(__file__).with_name("logging.ini")


class Settings(BaseModel):
    database_url: str = "sqlite:///./fraudbench.db"
    csv_path: Optional[Path] = None
    log_config: Path = LOGGING_INI
    n_jobs: int = 1


# シングルトンで設定を管理（環境変数は初回のみ読む）
_settings_instance: Optional[Settings] = None


def get_settings() -> Settings:
    global _settings_instance
    if _settings_instance is None:
        csv_path = os.getenv("FRAUDBENCH_CSV")
        _settings_instance = Settings(
            database_url=os.getenv("DATABASE_URL", "sqlite:///./fraudbench.db"),
            csv_path=Path(csv_path) if csv_path else None,
            log_config=Path(os.getenv("FRAUDBENCH_LOG_CONFIG", str(LOGGING_INI))),
            n_jobs=int(os.getenv("FRAUDBENCH_N_JOBS", "1")),
        )
    return _settings_instance


def reset_settings() -> None:
    global _settings_instance
    _settings_instance = None


def configure_logging(verbose: bool = False) -> None:
    settings = get_settings()
    logging.config.fileConfig(settings.log_config, disable_existing_loggers=False)
    if verbose:
        logging.getLogger("fraudbench").setLevel(logging.DEBUG)


def read_key_values(source: Union[str, Path]) -> Dict[str, str]:
    """key=value 形式の設定ファイルを辞書に読み込む。

    - '#' で始まる行と空行は無視
    - 同じキーが2回出たらエラー
    """
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidConfig(f"line {lineno}", f"expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise InvalidConfig(f"line {lineno}", "empty key")
        if key in values:
            raise InvalidConfig(key, "duplicated key")
        values[key] = value
    return values
