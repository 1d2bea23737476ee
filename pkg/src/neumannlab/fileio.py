"""Serialization of tensors, frequency fields, gridded values and reports.

Formats
-------
* Frequency-field CSV: header ``xi_1..xi_n, weight`` followed by complex
  payload pairs ``<P>0_re, <P>0_im, ...`` where the prefix ``P`` is ``G``
  (Neumann data), ``phi`` (Dirichlet traces) or ``f`` (mode coefficients).
* Reports: canonical JSON with sorted keys and floats written with
  ``format(x, ".17g")``, which round-trips every double exactly.
* Manifest: one ``manifest.json`` per output directory with the resolved
  configuration, package versions, SHA-256 of the inputs and a timestamp
  (taken from ``SOURCE_DATE_EPOCH`` when set).
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
import os
import platform
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from .halfspace import FrequencyField, ModeField
from .operators import CoefTensor

__all__ = [
    "SchemaError",
    "PREFIX_KIND",
    "read_frequency_field",
    "write_frequency_field",
    "write_solution_field",
    "write_grid_csv",
    "write_rows_csv",
    "canonical_json",
    "write_report",
    "read_report",
    "read_tensor",
    "write_tensor",
    "write_manifest",
]

PREFIX_KIND = {"G": "neumann", "phi": "trace", "f": "modes"}
KIND_PREFIX = {v: k for k, v in PREFIX_KIND.items()}


class SchemaError(ValueError):
    """Input file does not match the documented schema."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ----------------------------------------------------------------------
# canonical JSON
# ----------------------------------------------------------------------


def _encode(obj) -> str:
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return _fmt(x)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(f"{json.dumps(k, ensure_ascii=False)}:{_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    if hasattr(obj, "to_json"):
        return _encode(obj.to_json())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Canonical JSON text: sorted keys, no whitespace, ``%.17g`` floats."""
    return _encode(obj) + "\n"


def write_report(path, report) -> None:
    """Write a report (dict or object with ``to_json``) as canonical JSON."""
    Path(path).write_text(canonical_json(report), encoding="utf-8")


def read_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# ----------------------------------------------------------------------
# CSV
# ----------------------------------------------------------------------


def write_rows_csv(path, header, rows) -> None:
    """Write a header and rows, formatting floats with ``%.17g``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _payload_header(prefix: str, k: int) -> list[str]:
    out = []
    for j in range(k):
        out += [f"{prefix}{j}_re", f"{prefix}{j}_im"]
    return out


def write_frequency_field(path, field: FrequencyField, prefix: str | None = None) -> None:
    """Write a frequency field using the documented CSV schema."""
    prefix = prefix or KIND_PREFIX.get(field.kind, "G")
    n, k = field.n, field.values.shape[1]
    header = [f"xi_{j + 1}" for j in range(n)] + ["weight"] + _payload_header(prefix, k)
    rows = []
    for xi, w, v in zip(field.xi, field.weights, field.values):
        pay = []
        for z in v:
            pay += [float(z.real), float(z.imag)]
        rows.append([float(x) for x in xi] + [float(w)] + pay)
    write_rows_csv(path, header, rows)


def read_frequency_field(path, arity: int | None = None, prefix: str | None = None) -> FrequencyField:
    """Parse a frequency-field CSV.

    Parameters
    ----------
    path : path-like
    arity : int, optional
        Required number of complex payload components.
    prefix : str, optional
        Required payload prefix (``"G"``, ``"phi"`` or ``"f"``).

    Raises
    ------
    SchemaError
        On a malformed header, an empty file, non-numeric or non-finite
        values, a zero frequency (the file line is reported) or a
        nonpositive weight.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    n = 0
    while n < len(header) and header[n] == f"xi_{n + 1}":
        n += 1
    if n == 0 or n >= len(header) or header[n] != "weight":
        raise SchemaError(f"{path}: header must start with xi_1..xi_n, weight")
    pay = header[n + 1:]
    if len(pay) == 0 or len(pay) % 2:
        raise SchemaError(f"{path}: payload must be real/imag pairs")
    k = len(pay) // 2
    found = pay[0][: -len("0_re")] if pay[0].endswith("0_re") else None
    if found is None or found not in PREFIX_KIND or pay != _payload_header(found, k):
        raise SchemaError(f"{path}: payload columns must be <P>0_re, <P>0_im, ... with P in G, phi, f")
    if prefix is not None and found != prefix:
        raise SchemaError(f"{path}: expected payload prefix {prefix!r}, found {found!r}")
    if arity is not None and k != arity:
        raise SchemaError(f"{path}: expected {arity} payload components, found {k}")
    body = [(i + 2, r) for i, r in enumerate(rows[1:]) if any(c.strip() for c in r)]
    if not body:
        raise SchemaError(f"{path}: no data rows")
    xi, w, v = [], [], []
    for line, r in body:
        if len(r) != len(header):
            raise SchemaError(f"{path}:{line}: expected {len(header)} columns, found {len(r)}")
        try:
            nums = np.array([float(c) for c in r])
        except ValueError as exc:
            raise SchemaError(f"{path}:{line}: {exc}") from None
        if not np.all(np.isfinite(nums)):
            raise SchemaError(f"{path}:{line}: non-finite value")
        if not np.any(nums[:n] != 0):
            raise SchemaError(f"{path}:{line}: zero frequency is excluded")
        if not nums[n] > 0:
            raise SchemaError(f"{path}:{line}: weight must be positive")
        xi.append(nums[:n])
        w.append(nums[n])
        v.append(nums[n + 1::2] + 1j * nums[n + 2::2])
    return FrequencyField(np.array(xi), np.array(w), np.array(v), PREFIX_KIND[found])


def write_solution_field(path, field: ModeField) -> None:
    """Solution CSV: frequency, weight, status, coefficients and basis terms.

    Each basis term ``k`` is ``t^{pow_k} exp(lam_k t)``.
    """
    n, m = field.n, field.values.shape[1]
    header = [f"xi_{j + 1}" for j in range(n)] + ["weight", "status"] + _payload_header("f", m)
    header += _payload_header("lam", m) + [f"pow{k}" for k in range(m)]
    rows = []
    for xi, w, st, f, mc in zip(field.xi, field.weights, field.status, field.values, field.modes):
        row = [float(x) for x in xi] + [float(w), st]
        for z in f:
            row += [float(z.real), float(z.imag)]
        terms = mc.basis.terms if mc is not None else [(complex("nan"), 0)] * m
        for lam, _ in terms:
            row += [float(lam.real), float(lam.imag)]
        row += [int(r) for _, r in terms]
        rows.append(row)
    write_rows_csv(path, header, rows)


def write_grid_csv(path, x, t, values, multiindices) -> None:
    """Gridded synthesis CSV ``x_1..x_n, t`` then real/imag pairs per component.

    Component columns are named ``w`` for order 0 and ``d<exponents>``
    otherwise (e.g. ``d011`` for ``d_2 d_t``).
    """
    x = np.atleast_2d(x)
    n = x.shape[1]
    names = ["w" if sum(g) == 0 else "d" + "".join(str(e) for e in g) for g in multiindices]
    header = [f"x_{j + 1}" for j in range(n)] + ["t"]
    for nm in names:
        header += [f"{nm}_re", f"{nm}_im"]
    rows = []
    for p in range(x.shape[0]):
        for q, tq in enumerate(np.atleast_1d(t)):
            row = [float(v) for v in x[p]] + [float(tq)]
            for k in range(len(names)):
                z = values[k, p, q]
                row += [float(z.real), float(z.imag)]
            rows.append(row)
    write_rows_csv(path, header, rows)


# ----------------------------------------------------------------------
# tensors and manifests
# ----------------------------------------------------------------------


def read_tensor(path) -> CoefTensor:
    """Load a coefficient tensor from its JSON form."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return CoefTensor.from_json(obj)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: invalid tensor file ({exc})") from None


def write_tensor(path, A: CoefTensor) -> None:
    write_report(path, A.to_json())


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _version(dist: str) -> str:
    try:
        return metadata.version(dist)
    except metadata.PackageNotFoundError:
        return "unknown"


def write_manifest(outdir, config: dict, inputs=(), command: str = "") -> Path:
    """Write ``manifest.json`` echoing the resolved configuration."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch else _dt.datetime.now(_dt.timezone.utc)
    manifest = {
        "command": command,
        "config": config,
        "versions": {
            "neumannlab": _version("artifact"),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "inputs": {str(p): _sha256(p) for p in inputs},
        "timestamp": when.isoformat(),
    }
    path = Path(outdir) / "manifest.json"
    write_report(path, manifest)
    return path
