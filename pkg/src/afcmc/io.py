"""Plain-text file formats: coefficients, metric specs, surfaces and tables.

Floats are written with ``repr`` so that write -> read -> write is
byte-identical.

Coefficient block::

    L_max 2
    0 0 3.5449077018110318
    1 -1 0.0
    ...

Metric spec: ``q_model``, optional ``param`` lines, ``inner_radius`` and
``lmax`` followed by six ``block hIJ`` coefficient blocks. Surface file:
``center x y z`` followed by one coefficient block for rho.
"""

import csv
import importlib
import io as _io

import numpy as np

from .errors import InvalidArgumentError
from .harmonics import build_basis, mode_degrees_orders, n_modes, SphereFunction
from .metric import BUILTINS, CallableRemainder, MetricField, SchwarzschildTail

__all__ = [
    "format_coefficients",
    "parse_coefficients",
    "write_coefficients",
    "read_coefficients",
    "format_metric_spec",
    "parse_metric_spec",
    "write_metric_spec",
    "read_metric_spec",
    "format_surface",
    "parse_surface",
    "write_surface",
    "read_surface",
    "write_table",
    "load_metric",
    "parse_builtin",
]

COMPONENTS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
COMPONENT_NAMES = ("h11", "h12", "h13", "h22", "h23", "h33")


def _fmt(x):
    return repr(float(x))


def _lines(text):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line


def format_coefficients(coeffs):
    coeffs = np.asarray(coeffs, dtype=float)
    L = int(round(np.sqrt(coeffs.size))) - 1
    if n_modes(L) != coeffs.size:
        raise InvalidArgumentError(f"{coeffs.size} is not a square mode count")
    l, m = mode_degrees_orders(L)
    out = [f"L_max {L}"]
    out += [f"{a} {b} {_fmt(v)}" for a, b, v in zip(l, m, coeffs)]
    return "\n".join(out) + "\n"


def _parse_block(lines, it_start=0):
    """Parse one block starting at ``lines[it_start]``; returns (coeffs, next index)."""
    head = lines[it_start].split()
    if len(head) != 2 or head[0] != "L_max":
        raise InvalidArgumentError(f"expected 'L_max <int>', got {lines[it_start]!r}")
    L = int(head[1])
    if L < 0:
        raise InvalidArgumentError("L_max must be >= 0")
    N = n_modes(L)
    ls, ms = mode_degrees_orders(L)
    body = lines[it_start + 1: it_start + 1 + N]
    if len(body) != N:
        raise InvalidArgumentError(f"expected {N} coefficient lines, got {len(body)}")
    coeffs = np.empty(N)
    for k, line in enumerate(body):
        parts = line.split()
        if len(parts) != 3:
            raise InvalidArgumentError(f"bad coefficient line {line!r}")
        l, m = int(parts[0]), int(parts[1])
        if (l, m) != (ls[k], ms[k]):
            raise InvalidArgumentError(f"mode ({l}, {m}) out of order; expected ({ls[k]}, {ms[k]})")
        coeffs[k] = float(parts[2])
    return coeffs, it_start + 1 + N


def parse_coefficients(text):
    lines = list(_lines(text))
    if not lines:
        raise InvalidArgumentError("empty coefficient file")
    coeffs, end = _parse_block(lines)
    if end != len(lines):
        raise InvalidArgumentError("trailing content after coefficient block")
    return coeffs


def write_coefficients(path, coeffs):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_coefficients(coeffs))


def read_coefficients(path):
    with open(path, encoding="ascii") as fh:
        return parse_coefficients(fh.read())


def _q_description(field):
    q = field.q
    if q is None:
        return "none", []
    if isinstance(q, SchwarzschildTail):
        return "schwarzschild-tail", [("m", [q.m]), ("center", list(q.center))]
    if isinstance(q, CallableRemainder):
        name = getattr(q.func, "__module__", None), getattr(q.func, "__qualname__", None)
        if None in name or "<" in name[1]:
            raise InvalidArgumentError("callable remainder is not importable; cannot serialize")
        return "user-supplied-callable", [("target", [f"{name[0]}:{name[1]}"])]
    raise InvalidArgumentError(f"unsupported remainder {type(q).__name__}")


def format_metric_spec(field):
    qname, params = _q_description(field)
    out = [f"q_model {qname}"]
    for key, vals in params:
        out.append("param " + key + " " + " ".join(v if isinstance(v, str) else _fmt(v) for v in vals))
    out.append(f"inner_radius {_fmt(field.inner_radius)}")
    out.append(f"lmax {field.L_h}")
    for (i, j), name in zip(COMPONENTS, COMPONENT_NAMES):
        out.append(f"block {name}")
        out.append(format_coefficients(field.h1[i, j]).rstrip("\n"))
    return "\n".join(out) + "\n"


def _import_target(target):
    mod, _, attr = target.partition(":")
    obj = importlib.import_module(mod)
    for part in attr.split("."):
        obj = getattr(obj, part)
    return obj


def parse_metric_spec(text):
    lines = list(_lines(text))
    header, params = {}, {}
    k = 0
    while k < len(lines) and not lines[k].startswith("block"):
        parts = lines[k].split()
        if parts[0] == "param":
            if len(parts) < 3:
                raise InvalidArgumentError(f"bad param line {lines[k]!r}")
            params[parts[1]] = parts[2:]
        elif len(parts) == 2:
            header[parts[0]] = parts[1]
        else:
            raise InvalidArgumentError(f"bad header line {lines[k]!r}")
        k += 1
    for key in ("q_model", "inner_radius", "lmax"):
        if key not in header:
            raise InvalidArgumentError(f"metric spec missing {key!r}")
    L = int(header["lmax"])
    h1 = np.zeros((3, 3, n_modes(L)))
    seen = set()
    while k < len(lines):
        parts = lines[k].split()
        if len(parts) != 2 or parts[0] != "block" or parts[1] not in COMPONENT_NAMES:
            raise InvalidArgumentError(f"expected 'block hIJ', got {lines[k]!r}")
        i, j = COMPONENTS[COMPONENT_NAMES.index(parts[1])]
        coeffs, k = _parse_block(lines, k + 1)
        m = min(coeffs.size, h1.shape[2])
        h1[i, j, :m] = h1[j, i, :m] = coeffs[:m]
        seen.add(parts[1])
    if seen != set(COMPONENT_NAMES):
        raise InvalidArgumentError(f"missing blocks: {sorted(set(COMPONENT_NAMES) - seen)}")
    qm = header["q_model"]
    if qm == "none":
        q = None
    elif qm == "schwarzschild-tail":
        q = SchwarzschildTail(float(params["m"][0]),
                              [float(v) for v in params.get("center", [0, 0, 0])])
    elif qm == "user-supplied-callable":
        q = CallableRemainder(_import_target(params["target"][0]))
    else:
        raise InvalidArgumentError(f"unknown q_model {qm!r}")
    return MetricField(h1, q, inner_radius=float(header["inner_radius"]), name="file")


def write_metric_spec(path, field):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_metric_spec(field))


def read_metric_spec(path):
    with open(path, encoding="ascii") as fh:
        return parse_metric_spec(fh.read())


def format_surface(surface):
    c = " ".join(_fmt(v) for v in surface.center)
    return f"center {c}\n" + format_coefficients(surface.rho.coeffs)


def parse_surface(text, basis=None):
    from .surface import GraphSurface

    lines = list(_lines(text))
    if not lines or not lines[0].startswith("center"):
        raise InvalidArgumentError("surface file must start with 'center x y z'")
    parts = lines[0].split()
    if len(parts) != 4:
        raise InvalidArgumentError("center needs three components")
    center = [float(v) for v in parts[1:]]
    coeffs, end = _parse_block(lines, 1)
    if end != len(lines):
        raise InvalidArgumentError("trailing content after surface block")
    L = int(round(np.sqrt(coeffs.size))) - 1
    basis = basis or build_basis(max(L, 1))
    full = np.zeros(basis.size)
    full[:coeffs.size] = coeffs
    return GraphSurface(SphereFunction(full, basis), center)


def write_surface(path, surface):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_surface(surface))


def read_surface(path, basis=None):
    with open(path, encoding="ascii") as fh:
        return parse_surface(fh.read(), basis)


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return _fmt(v)
    return str(v)


def format_table(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_table(path, header, rows):
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(format_table(header, rows))


def _parse_value(text):
    if ";" in text:
        return [float(v) for v in text.split(";")]
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse_builtin(spec):
    """``"schwarzschild,m=2,center=1;0;0"`` -> (name, kwargs)."""
    name, *items = spec.split(",")
    kwargs = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise InvalidArgumentError(f"bad builtin parameter {item!r}")
        kwargs[key.strip()] = _parse_value(val.strip())
    return name.strip(), kwargs


def load_metric(spec):
    """A builtin (``builtin:name,k=v``) or a metric-spec file path."""
    if spec.startswith("builtin:"):
        name, kwargs = parse_builtin(spec[len("builtin:"):])
        if name not in BUILTINS:
            raise InvalidArgumentError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}")
        try:
            return BUILTINS[name](**kwargs)
        except TypeError as err:
            raise InvalidArgumentError(f"bad parameters for {name}: {err}") from err
    return read_metric_spec(spec)
