import logging
import os
import re
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import orjson
import pandas as pd

from symfloq.errors import InvalidParamsError

logger = logging.getLogger(__name__)

THREADS_ENV = 'SYMFLOQ_THREADS'
FLOAT_FORMAT = '%.17g'
_ANGLE = re.compile(r'([+-]?)(\d+(?:\.\d*)?|\.\d+)?\*?pi(?:/(\d+(?:\.\d*)?))?')


def parse_angle(text) -> float:
    """Float, or a multiple of pi such as "pi/4", "2pi/3", "-pi/12", "1.5*pi" """
    if isinstance(text, (int, float)):
        return float(text)
    cleaned = str(text).strip().lower().replace(' ', '').replace('π', 'pi')
    try:
        return float(cleaned)
    except ValueError:
        pass
    match = _ANGLE.fullmatch(cleaned)
    if not match:
        raise InvalidParamsError(f"cannot read {text!r} as an angle")
    sign, factor, divisor = match.groups()
    value = float(factor or 1) * np.pi / float(divisor or 1)
    return -value if sign == '-' else value


def read_config(config_path) -> Dict[str, str]:
    """key=value lines; '#' comments and blank lines skipped, '-' in keys normalised to '_'"""
    values = {}
    with open(config_path, 'r', encoding='utf-8') as f:
        for number, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            if '=' not in line:
                raise InvalidParamsError(f"{config_path}:{number}: expected key=value, got {line!r}")
            key, value = line.split('=', 1)
            values[key.strip().lstrip('-').replace('-', '_')] = value.strip()
    return values


def split_values(text) -> List[str]:
    """Config value of a repeatable option: items separated by whitespace or ';'"""
    return [item for item in re.split(r'[;\s]+', str(text).strip()) if item]


def worker_count(requested: Optional[int] = None) -> int:
    """Requested pool size capped by SYMFLOQ_THREADS (default: all cores)"""
    raw = os.environ.get(THREADS_ENV)
    cap = os.cpu_count() or 1
    if raw is not None:
        try:
            cap = int(raw)
        except ValueError:
            raise InvalidParamsError(f"{THREADS_ENV} must be an integer, got {raw!r}")
        if cap < 1:
            raise InvalidParamsError(f"{THREADS_ENV} must be >= 1, got {cap}")
    if requested is None:
        return cap
    if requested < 1:
        raise InvalidParamsError(f"worker count must be >= 1, got {requested}")
    return min(requested, cap)


def write_table(frame: pd.DataFrame, out_path, fmt: str = 'csv') -> Path:
    out_path = Path(out_path)
    if out_path.parent != Path('.'):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == 'csv':
        frame.to_csv(out_path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    elif fmt == 'json':
        write_json(frame.to_dict(orient='records'), out_path)
    else:
        raise InvalidParamsError(f"unknown output format {fmt!r}")
    return out_path


def write_json(payload: Any, out_path) -> Path:
    out_path = Path(out_path)
    if out_path.parent != Path('.'):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, 'wb') as f:
        f.write(orjson.dumps(payload, option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY))
    return out_path


def read_json(path) -> Any:
    with open(path, 'rb') as f:
        return orjson.loads(f.read())


def companion_path(out_path, suffix: str) -> Path:
    """sweep.csv -> sweep.<suffix>.json"""
    out_path = Path(out_path)
    return out_path.with_name(f"{out_path.stem}.{suffix}.json")
