"""Plain-text ``key=value`` configuration with defaults < file < flags precedence."""

import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import msgspec

from .errors import ConfigError
from .models import TrackerConfig

logger = logging.getLogger(__name__)

CONFIG_KEYS = frozenset(TrackerConfig.__struct_fields__)
LIST_KEYS = frozenset({"scales"})


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """Parse ``key=value`` lines; ``#`` starts a comment, blank lines are skipped."""
    values: Dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{number}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{number}: unknown key {key!r}")
        values[key] = _split_list(value) if key in LIST_KEYS else value
    return values


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    values = parse_config_text(text, source=str(path))
    logger.debug(f"Loaded {len(values)} config keys from {path}")
    return values


def build_config(values: Mapping[str, Any]) -> TrackerConfig:
    """Coerce raw (possibly string) values into a validated ``TrackerConfig``."""
    unknown = set(values) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    prepared = {k: (_split_list(v) if k in LIST_KEYS else v) for k, v in values.items()}
    try:
        return msgspec.convert(prepared, TrackerConfig, strict=False)
    except msgspec.ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def resolve_config(
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> TrackerConfig:
    """Merge built-in defaults, an optional config file and flag overrides (flags win)."""
    values: Dict[str, Any] = {}
    if config_path is not None:
        values.update(load_config_file(config_path))
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return build_config(values)
