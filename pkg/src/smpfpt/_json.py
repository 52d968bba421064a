"""JSON writer with controlled float formatting and one-line numeric rows."""

import json
import math

import numpy as np


def _num(x, fmt):
    x = float(x)
    if math.isfinite(x):
        return repr(x) if fmt is None else format(x, fmt)
    return '"nan"' if math.isnan(x) else ('"inf"' if x > 0 else '"-inf"')


def _scalar(v):
    return isinstance(v, (int, float, np.number)) and not isinstance(v, (bool, np.bool_))


def dumps(obj, fmt=".17g", indent=2, _level=0):
    """Serialize ``obj``; floats use ``format(x, fmt)`` (``fmt=None`` gives shortest repr).

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, fmt, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(_scalar(v) for v in obj):
            return "[" + ", ".join(dumps(v, fmt) for v in obj) + "]"
        return ("[\n" + ",\n".join(pad + dumps(v, fmt, indent, _level + 1) for v in obj)
                + "\n" + end + "]")
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj, fmt)
    return json.dumps(str(obj), ensure_ascii=False)
