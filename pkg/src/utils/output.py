"""
结果文件输出
先写临时文件再原子替换，输出内容只由输入决定
"""

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple, Union

import pandas as pd


def render_csv(frame: pd.DataFrame, notes: Iterable[Tuple[str, Any]] = ()) -> str:
    """CSV 文本，前置 "# key=value" 注释行，浮点按 %.17g 输出"""
    header = "".join(f"# {key}={value}\n" for key, value in notes)
    return header + frame.to_csv(index=False, float_format="%.17g", na_rep="")


def atomic_write(path: Union[str, Path], text: str):
    """写入同目录临时文件后 os.replace"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(temp_name, target)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise


def write_csv(frame: pd.DataFrame, path: Optional[Union[str, Path]],
              notes: Iterable[Tuple[str, Any]] = ()) -> str:
    """写出 CSV；path 为空时只返回文本"""
    text = render_csv(frame, notes)
    if path is not None:
        atomic_write(path, text)
    return text


def write_json(payload: Dict[str, Any], path: Union[str, Path]) -> str:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    atomic_write(path, text)
    return text
