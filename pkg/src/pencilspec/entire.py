"""Entire functions of the spectral parameter as small expression trees.

Every node can produce its truncated Taylor expansion at a point, i.e. the
scaled derivatives ``f^<j>(z) = f^(j)(z) / j!``.  Sums and products combine
expansions exactly (the product is a Cauchy product, which is the Leibniz
rule at this scaling), so derivatives of tree nodes are exact up to rounding.

Nodes of type :class:`SolverBacked` delegate to a registered callable, e.g.
a value computed by integrating an ODE.  Their derivatives come from Cauchy
contour quadrature.
"""

from __future__ import annotations

import math
import threading
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from ._jsonio import decode_complex, encode_complex
from .contour import taylor_coefficients
from .errors import InputError, NumericalError

MAX_ORDER = 8
CAUCHY_RADIUS = 0.1
CAUCHY_NODES = 32


class EntireExpr:
    """Base class; subclasses implement :meth:`taylor`."""

    def taylor(self, lam, order: int) -> np.ndarray:
        """Array of shape ``(order + 1,) + shape(lam)`` with ``f^<j>(lam)``."""
        raise NotImplementedError

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        out = self.taylor(lam, 0)[0]
        return out[()] if out.ndim == 0 else out

    def deriv(self, lam, nu: int):
        if nu < 0 or nu > MAX_ORDER:
            raise InputError(f"derivative order {nu} outside 0..{MAX_ORDER}", "entire.deriv")
        lam = np.asarray(lam, dtype=complex)
        out = self.taylor(lam, nu)[nu]
        return out[()] if out.ndim == 0 else out

    # operator sugar
    def __add__(self, other):
        return Sum((self, as_expr(other)))

    __radd__ = __add__

    def __mul__(self, other):
        return Product((self, as_expr(other)))

    __rmul__ = __mul__

    def __neg__(self):
        return Neg(self)

    def __sub__(self, other):
        return Sum((self, Neg(as_expr(other))))

    def __rsub__(self, other):
        return Sum((as_expr(other), Neg(self)))

    def to_json(self) -> dict:
        raise NotImplementedError


def _zeros(lam: np.ndarray, order: int) -> np.ndarray:
    return np.zeros((order + 1,) + lam.shape, dtype=complex)


class Const(EntireExpr):
    def __init__(self, value: complex) -> None:
        self.value = complex(value)

    def taylor(self, lam, order):
        lam = np.asarray(lam, dtype=complex)
        out = _zeros(lam, order)
        out[0] = self.value
        return out

    def to_json(self):
        return {"op": "const", "value": encode_complex(self.value)}

    def __repr__(self):
        return f"Const({self.value})"


class Var(EntireExpr):
    def taylor(self, lam, order):
        lam = np.asarray(lam, dtype=complex)
        out = _zeros(lam, order)
        out[0] = lam
        if order >= 1:
            out[1] = 1.0
        return out

    def to_json(self):
        return {"op": "var"}

    def __repr__(self):
        return "Var()"


class Poly(EntireExpr):
    """``sum_k coeffs[k] * lam**k`` (ascending order)."""

    def __init__(self, coeffs: Sequence[complex]) -> None:
        self.coeffs = np.array(coeffs, dtype=complex).ravel()
        if self.coeffs.size == 0:
            self.coeffs = np.zeros(1, complex)

    def taylor(self, lam, order):
        lam = np.asarray(lam, dtype=complex)
        out = _zeros(lam, order)
        c = self.coeffs
        for j in range(order + 1):
            if j >= c.size:
                break
            out[j] = P.polyval(lam, P.polyder(c, j) / math.factorial(j)) if j else P.polyval(lam, c)
        return out

    def to_json(self):
        return {"op": "poly", "coeffs": [encode_complex(c) for c in self.coeffs]}

    def __repr__(self):
        return f"Poly({self.coeffs.tolist()})"


class _Affine(EntireExpr):
    """Base for ``g(a*lam + b)`` with ``g`` in {sin, cos, exp}."""

    op = ""

    def __init__(self, a: complex = 1.0, b: complex = 0.0) -> None:
        self.a = complex(a)
        self.b = complex(b)

    def _shifted(self, z: np.ndarray, j: int) -> np.ndarray:
        raise NotImplementedError

    def taylor(self, lam, order):
        lam = np.asarray(lam, dtype=complex)
        z = self.a * lam + self.b
        out = _zeros(lam, order)
        for j in range(order + 1):
            out[j] = self.a**j * self._shifted(z, j) / math.factorial(j)
        return out

    def to_json(self):
        return {"op": self.op, "arg": {"op": "axpb", "a": encode_complex(self.a), "b": encode_complex(self.b)}}

    def __repr__(self):
        return f"{type(self).__name__}({self.a}, {self.b})"


class Sin(_Affine):
    op = "sin"

    def _shifted(self, z, j):
        return np.sin(z + j * np.pi / 2)


class Cos(_Affine):
    op = "cos"

    def _shifted(self, z, j):
        return np.cos(z + j * np.pi / 2)


class Exp(_Affine):
    op = "exp"

    def _shifted(self, z, j):
        return np.exp(z)


class Sum(EntireExpr):
    def __init__(self, terms: Sequence[EntireExpr]) -> None:
        self.terms = tuple(terms)

    def taylor(self, lam, order):
        lam = np.asarray(lam, dtype=complex)
        out = _zeros(lam, order)
        for t in self.terms:
            out = out + t.taylor(lam, order)
        return out

    def to_json(self):
        return {"op": "add", "args": [t.to_json() for t in self.terms]}

    def __repr__(self):
        return f"Sum({list(self.terms)})"


class Product(EntireExpr):
    def __init__(self, factors: Sequence[EntireExpr]) -> None:
        self.factors = tuple(factors)

    def taylor(self, lam, order):
        lam = np.asarray(lam, dtype=complex)
        out = _zeros(lam, order)
        out[0] = 1.0
        for f in self.factors:
            g = f.taylor(lam, order)
            new = _zeros(lam, order)
            for nu in range(order + 1):
                for j in range(nu + 1):
                    new[nu] += out[j] * g[nu - j]
            out = new
        return out

    def to_json(self):
        return {"op": "mul", "args": [f.to_json() for f in self.factors]}

    def __repr__(self):
        return f"Product({list(self.factors)})"


class Neg(EntireExpr):
    def __init__(self, arg: EntireExpr) -> None:
        self.arg = arg

    def taylor(self, lam, order):
        return -self.arg.taylor(lam, order)

    def to_json(self):
        return {"op": "neg", "arg": self.arg.to_json()}

    def __repr__(self):
        return f"Neg({self.arg!r})"


# -- solver-backed nodes ------------------------------------------------------

class _SolverEntry:
    def __init__(self, func: Callable, singularities: Sequence[complex]) -> None:
        self.func = func
        self.singularities = tuple(complex(s) for s in singularities)
        self.memo: dict[complex, complex] = {}
        self.lock = threading.Lock()


_SOLVERS: dict[str, _SolverEntry] = {}


def register_solver(tag: str, func: Callable, singularities: Sequence[complex] = ()) -> None:
    """Register ``func`` (vectorized over an array of lambda) under ``tag``.

    Re-registering a tag replaces the callable and clears its memo table.
    ``singularities`` are guard markers checked before contour differentiation.
    """
    _SOLVERS[tag] = _SolverEntry(func, singularities)


def unregister_solver(tag: str) -> None:
    _SOLVERS.pop(tag, None)


class SolverBacked(EntireExpr):
    """Entire function evaluated by a registered callable, memoized by lambda."""

    def __init__(self, tag: str) -> None:
        self.tag = tag

    def _entry(self) -> _SolverEntry:
        try:
            return _SOLVERS[self.tag]
        except KeyError:
            raise InputError(f"unregistered solver tag {self.tag!r}", "entire.eval") from None

    def values(self, lam) -> np.ndarray:
        entry = self._entry()
        lam = np.asarray(lam, dtype=complex)
        flat = lam.ravel()
        memo = entry.memo
        missing = sorted({complex(z) for z in flat if complex(z) not in memo}, key=lambda z: (z.real, z.imag))
        if missing:
            got = np.asarray(entry.func(np.array(missing, dtype=complex)), dtype=complex).ravel()
            with entry.lock:
                memo.update(zip(missing, got))
        return np.array([memo[complex(z)] for z in flat], dtype=complex).reshape(lam.shape)

    def taylor(self, lam, order):
        lam = np.asarray(lam, dtype=complex)
        out = _zeros(lam, order)
        out[0] = self.values(lam)
        if order == 0:
            return out
        entry = self._entry()
        for idx, z in np.ndenumerate(lam):
            for s in entry.singularities:
                if abs(z - s) <= CAUCHY_RADIUS * 1.01:
                    raise NumericalError(
                        f"contour around {z} meets singularity marker {s}", "entire.deriv"
                    )
            coef = taylor_coefficients(self.values, complex(z), order, CAUCHY_RADIUS, CAUCHY_NODES)
            out[(slice(1, None),) + idx] = coef[1:]
        return out

    def to_json(self):
        return {"op": "solver", "tag": self.tag}

    def __repr__(self):
        return f"SolverBacked({self.tag!r})"


# -- helpers ------------------------------------------------------------------

def as_expr(obj) -> EntireExpr:
    if isinstance(obj, EntireExpr):
        return obj
    if isinstance(obj, (int, float, complex, np.number)):
        return Const(complex(obj))
    raise TypeError(f"cannot convert {type(obj).__name__} to an entire expression")


def const(c: complex) -> Const:
    return Const(c)


def var() -> Var:
    return Var()


def poly(coeffs: Sequence[complex]) -> Poly:
    return Poly(coeffs)


def sin(a: complex = 1.0, b: complex = 0.0) -> Sin:
    return Sin(a, b)


def cos(a: complex = 1.0, b: complex = 0.0) -> Cos:
    return Cos(a, b)


def exp(a: complex = 1.0, b: complex = 0.0) -> Exp:
    return Exp(a, b)


def eval(f: EntireExpr, lam):  # noqa: A001 - operation name in the public API
    return f(lam)


def deriv(f: EntireExpr, lam, nu: int):
    return f.deriv(lam, nu)


def _affine_args(node: dict, stage: str) -> tuple[complex, complex]:
    if not isinstance(node, dict):
        raise InputError("argument of sin/cos/exp must be an object", stage)
    op = node.get("op")
    if op == "var":
        return 1.0, 0.0
    if op == "axpb":
        return decode_complex(node.get("a", 1.0), stage=stage), decode_complex(node.get("b", 0.0), stage=stage)
    if op == "poly":
        c = [decode_complex(v, stage=stage) for v in node.get("coeffs", [])]
        if len(c) <= 2:
            c = c + [0.0] * (2 - len(c))
            return c[1], c[0]
    raise InputError("sin/cos/exp take an affine argument (var, axpb, or degree-1 poly)", stage)


def from_json(node) -> EntireExpr:
    """Parse the JSON expression grammar, e.g. ``{"op": "sin", "arg": {"op": "axpb", "a": 1, "b": 0}}``."""
    stage = "entire.from_json"
    if isinstance(node, (int, float, list)) and not isinstance(node, bool):
        return Const(decode_complex(node, stage=stage))
    if not isinstance(node, dict) or "op" not in node:
        raise InputError(f"malformed expression node {node!r}", stage)
    op = node["op"]
    if op == "const":
        return Const(decode_complex(node.get("value", 0.0), stage=stage))
    if op == "var":
        return Var()
    if op == "axpb":
        a = decode_complex(node.get("a", 1.0), stage=stage)
        b = decode_complex(node.get("b", 0.0), stage=stage)
        return Poly([b, a])
    if op == "poly":
        return Poly([decode_complex(v, stage=stage) for v in node.get("coeffs", [])])
    if op in ("sin", "cos", "exp"):
        a, b = _affine_args(node.get("arg", {"op": "var"}), stage)
        return {"sin": Sin, "cos": Cos, "exp": Exp}[op](a, b)
    if op in ("add", "sum"):
        return Sum([from_json(a) for a in node.get("args", [])])
    if op in ("mul", "product"):
        return Product([from_json(a) for a in node.get("args", [])])
    if op == "neg":
        return Neg(from_json(node["arg"]))
    if op == "solver":
        tag = node.get("tag")
        if not isinstance(tag, str):
            raise InputError("solver node needs a string tag", stage)
        return SolverBacked(tag)
    raise InputError(f"unknown expression op {op!r}", stage)
