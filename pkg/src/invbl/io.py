"""Problem files, covariance files and the report writer.

Problem file::

    space dim=2
    mode = rational
    factor dim=1 c=2 rows=
      1 0
    factor dim=1 c=-1/2 rows=
      0 1
    kernel rows=
      1 0
      0 -1

Covariance file (for the cdp command)::

    covariance dim=2 rows=
      1 1/2
      1/2 1
    block dim=1 p=1/2
    block dim=1 p=1/2

Numbers are decimal literals or rationals p/q; '#' starts a comment.
"""
from dataclasses import dataclass
from fractions import Fraction
import math
import re

import numpy as np

from .problem import Problem


class ParseError(ValueError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line else msg)


_KV = re.compile(r"^(\w+)\s*=\s*(\S*)$")


def parse_number(tok: str, line=None) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"not a number: {tok!r}", line) from None


def _lines(text):
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if s:
            yield no, s


def _header(s, no):
    parts = s.split()
    head, opts = parts[0], {}
    rest = parts[1:]
    # "mode = rational" style
    joined = " ".join(rest)
    if joined.startswith("="):
        return head, {"": joined[1:].strip()}
    for tok in rest:
        if "=" not in tok:
            raise ParseError(f"expected key=value, got {tok!r}", no)
        k, v = tok.split("=", 1)
        opts[k] = v
    return head, opts


def _need(opts, key, head, no):
    if key not in opts:
        raise ParseError(f"{head} needs {key}=", no)
    return opts[key]


def _int(v, no):
    try:
        x = int(v)
    except ValueError:
        raise ParseError(f"expected an integer, got {v!r}", no) from None
    if x < 0:
        raise ParseError("dimensions must be nonnegative", no)
    return x


def _read_rows(it, count, width, no):
    rows = []
    for _ in range(count):
        try:
            rno, s = next(it)
        except StopIteration:
            raise ParseError(f"expected {count} matrix rows after this line", no) from None
        toks = s.split()
        if len(toks) != width:
            raise ParseError(f"expected {width} numbers, got {len(toks)}", rno)
        rows.append([parse_number(t, rno) for t in toks])
    return rows


class _Peek:
    def __init__(self, it):
        self.it = iter(it)
        self.buf = []

    def __iter__(self):
        return self

    def __next__(self):
        return self.buf.pop() if self.buf else next(self.it)


def parse_problem(text: str, kernel_convention: str = "pi") -> Problem:
    it = _Peek(_lines(text))
    n = None
    mode = "float"
    factors = []
    kernel = None
    for no, s in it:
        head, opts = _header(s, no)
        if head == "space":
            n = _int(_need(opts, "dim", head, no), no)
        elif head == "mode":
            mode = opts.get("", opts.get("mode", "")).strip()
            if mode not in ("float", "rational"):
                raise ParseError("mode must be float or rational", no)
        elif head == "factor":
            if n is None:
                raise ParseError("space dim= must come first", no)
            nk = _int(_need(opts, "dim", head, no), no)
            c = parse_number(_need(opts, "c", head, no), no)
            if factors and c > 0 and factors[-1][1] <= 0:
                raise ParseError("positive exponents must be listed first", no)
            factors.append((_read_rows(it, nk, n, no), c, no))
        elif head == "kernel":
            if n is None:
                raise ParseError("space dim= must come first", no)
            kernel = _read_rows(it, n, n, no)
        else:
            raise ParseError(f"unknown section {head!r}", no)
    if n is None:
        raise ParseError("missing 'space dim=' line")
    if kernel_convention not in ("pi", "half"):
        raise ValueError("kernel convention must be pi or half")
    rational = mode == "rational"
    conv = (lambda x: x) if rational else float
    maps = tuple(np.array([[conv(x) for x in r] for r in rows], dtype=object if rational else float)
                 .reshape(len(rows), n) for rows, _, _ in factors)
    cs = tuple(conv(c) for _, c, _ in factors)
    K = None
    if kernel is not None:
        K = np.array([[conv(x) for x in r] for r in kernel], dtype=object if rational else float).reshape(n, n)
        if kernel_convention == "half":
            if rational:
                raise ParseError("--kernel-convention half needs float mode (it divides by pi)")
            # e^{-<x,Mx>/2} = e^{-pi <x,Qx>} with Q = M / (2 pi)
            K = K / (2 * math.pi)
    return Problem(n, maps, cs, K, mode)


def _fmt_number(x, exact):
    if exact:
        x = Fraction(x)
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    x = float(x)
    return repr(x) if math.isfinite(x) else str(x)


def serialize_problem(p: Problem) -> str:
    ex = p.exact
    out = [f"space dim={p.dim}", f"mode = {p.mode}"]
    for B, c in zip(p.maps, p.exponents):
        out.append(f"factor dim={B.shape[0]} c={_fmt_number(c, ex)} rows=")
        out += ["  " + " ".join(_fmt_number(x, ex) for x in row) for row in B]
    if np.any(np.array(p.kernel, dtype=float)):
        out.append("kernel rows=")
        out += ["  " + " ".join(_fmt_number(x, ex) for x in row) for row in p.kernel]
    return "\n".join(out) + "\n"


@dataclass
class CovarianceFile:
    cov: np.ndarray
    dims: list
    ps: list


def parse_covariance(text: str) -> CovarianceFile:
    it = _Peek(_lines(text))
    cov, dims, ps = None, [], []
    for no, s in it:
        head, opts = _header(s, no)
        if head == "covariance":
            n = _int(_need(opts, "dim", head, no), no)
            cov = np.array(_read_rows(it, n, n, no), dtype=float).reshape(n, n)
        elif head == "block":
            dims.append(_int(_need(opts, "dim", head, no), no))
            p_ = parse_number(_need(opts, "p", head, no), no)
            if p_ == 0:
                raise ParseError("p must be nonzero", no)
            ps.append(float(p_))
        else:
            raise ParseError(f"unknown section {head!r}", no)
    if cov is None:
        raise ParseError("missing 'covariance dim=' section")
    if sum(dims) != cov.shape[0]:
        raise ParseError("block dimensions must add up to the covariance size")
    return CovarianceFile(cov, dims, ps)


# ---- report writer -----------------------------------------------------

def _plain(x):
    """Convert to JSON-ready values; floats become 17-significant-digit tokens."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (float, np.floating)):
        return _Float(float(x))
    return x


class _Float(float):
    pass


def _emit(x, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f'{pad}{_emit(str(k), indent, level + 1)}: {_emit(v, indent, level + 1)}' for k, v in x.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(x, list):
        if not x:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in x):
            return "[" + ", ".join(_emit(v, indent, level + 1) for v in x) + "]"
        return "[\n" + ",\n".join(pad + _emit(v, indent, level + 1) for v in x) + "\n" + end + "]"
    if isinstance(x, _Float):
        if math.isnan(x):
            return '"nan"'
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        return "%.17g" % x
    if x is None:
        return "null"
    if x is True:
        return "true"
    if x is False:
        return "false"
    if isinstance(x, int):
        return str(x)
    s = str(x).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{s}"'


def dumps_report(obj, indent: int = 2) -> str:
    """JSON text with every float written with 17 significant digits; infinities as strings."""
    return _emit(_plain(obj), indent, 0) + "\n"
