"""Deterministic text output: 17-significant-digit floats, atomic file writes.

Every float the package serializes goes through :func:`format_float` so that
re-running a command yields byte-identical files and parsing the text back
recovers the exact double.
"""

from __future__ import annotations

import math
import os
import tempfile

from .errors import InputError


def format_float(x: float) -> str:
    """Render a float with 17 significant digits (exact round-trip)."""
    x = float(x)
    if not math.isfinite(x):
        raise InputError(f"cannot serialize non-finite float {x!r}")
    text = f"{x:.17g}"
    if not any(c in text for c in ".eE"):
        text += ".0"
    return text


def dumps_json(obj, indent: int = 0) -> str:
    """Deterministic JSON text: insertion-ordered keys, floats via format_float."""
    pad = " " * indent
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad}  {dumps_json(str(k))}: {dumps_json(v, indent + 2)}' for k, v in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = ", ".join(dumps_json(v, indent) for v in obj)
        return "[" + items + "]"
    # numpy scalars and arrays reduce to the cases above
    if hasattr(obj, "tolist"):
        return dumps_json(obj.tolist(), indent)
    raise InputError(f"cannot serialize object of type {type(obj).__name__}")


def atomic_write_text(path: str, text: str) -> None:
    """Write text to ``path`` via a temp file + rename in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
