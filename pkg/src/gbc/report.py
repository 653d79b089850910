"""Deterministic report serialization.

Reports are reproducibility artifacts: floats are serialized with 17
significant digits, keys keep insertion order, and the byte stream is
identical across runs with the same config and seed (wall time and
timestamp fields aside).  A SHA-256 of the packaged convention ledger is
embedded so convention drift across versions is detectable.
"""

import hashlib
import importlib.resources
import math

from .errors import GbcError

SCHEMA_VERSION = 1


def convention_ledger_hash():
    data = importlib.resources.files("gbc").joinpath("conventions.md").read_bytes()
    return hashlib.sha256(data).hexdigest()


def _fmt_float(x):
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return f"{x:.17g}"


def _escape(s):
    out = []
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def dumps(obj, indent=0):
    """Deterministic JSON text with 17-significant-digit floats."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return _escape(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{_escape(str(k))}: {dumps(v, indent + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{dumps(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    # numpy scalars and anything float-like
    if hasattr(obj, "item"):
        return dumps(obj.item(), indent)
    raise TypeError(f"cannot serialize {type(obj)!r}")


def write_report(report, path):
    try:
        with open(path, "w") as fh:
            fh.write(dumps(report))
            fh.write("\n")
    except OSError as exc:
        raise GbcError(f"cannot write report to {path!r}: {exc}") from exc


def sweep_csv_lines(rows, param_names):
    """CSV for sweep output: one column per family parameter, then the
    action value; degenerate members emit an empty action cell."""
    lines = [",".join(list(param_names) + ["action_value"])]
    for row in rows:
        cells = [f"{row.params[name]:.17g}" for name in param_names]
        cells.append("" if row.action is None else f"{row.action:.17g}")
        lines.append(",".join(cells))
    return lines


def write_sweep_csv(rows, param_names, path):
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(sweep_csv_lines(rows, param_names)))
            fh.write("\n")
    except OSError as exc:
        raise GbcError(f"cannot write CSV to {path!r}: {exc}") from exc
