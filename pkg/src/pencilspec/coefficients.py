"""Grid representation of the pencil coefficients ``p`` and ``sigma``.

``p`` is the piecewise-linear interpolant of samples on a uniform grid.
``sigma`` is a piecewise-linear interpolant plus Heaviside steps; a step of
height ``c`` at ``x0`` encodes the term ``c * delta(x - x0)`` in ``q = sigma'``.
At a step location ``sigma`` takes its right limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._jsonio import decode_array, decode_complex, encode_array, encode_complex
from .errors import InputError


def _interp(x: np.ndarray, grid: np.ndarray, values: np.ndarray) -> np.ndarray:
    return np.interp(x, grid, values.real) + 1j * np.interp(x, grid, values.imag)


@dataclass(frozen=True, eq=False)
class CoefficientPair:
    """Coefficients ``(p, sigma)`` on ``interval = (a, b)``.

    Parameters
    ----------
    interval : (a, b)
        Domain endpoints, ``a < b``.
    p_samples, sigma_base : array_like, shape (G,)
        Complex samples on ``numpy.linspace(a, b, G)``, ``G >= 2``.
    jumps : sequence of (x0, c)
        Steps added to ``sigma``; every ``x0`` lies strictly inside ``(a, b)``.
    """

    interval: tuple[float, float]
    p_samples: np.ndarray
    sigma_base: np.ndarray
    jumps: tuple[tuple[float, complex], ...] = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        stage = "coefficients.CoefficientPair"
        try:
            a, b = (float(v) for v in self.interval)
        except (TypeError, ValueError) as exc:
            raise InputError("interval must be a pair of reals", stage) from exc
        if not (np.isfinite(a) and np.isfinite(b) and a < b):
            raise InputError(f"invalid interval ({a}, {b})", stage)
        p = np.array(self.p_samples, dtype=complex).ravel()
        s = np.array(self.sigma_base, dtype=complex).ravel()
        if p.size < 2 or p.size != s.size:
            raise InputError("p and sigma need the same number (>= 2) of samples", stage)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(s))):
            raise InputError("coefficient samples must be finite", stage)
        jumps = tuple(sorted(((float(x0), complex(c)) for x0, c in self.jumps), key=lambda j: j[0]))
        for x0, _ in jumps:
            if not a < x0 < b:
                raise InputError(f"jump location {x0} outside ({a}, {b})", stage)
        if len({x0 for x0, _ in jumps}) != len(jumps):
            raise InputError("jump locations must be distinct", stage)
        p.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "interval", (a, b))
        object.__setattr__(self, "p_samples", p)
        object.__setattr__(self, "sigma_base", s)
        object.__setattr__(self, "jumps", jumps)

    # -- construction -----------------------------------------------------
    @classmethod
    def constant(
        cls,
        p: complex = 0.0,
        sigma: complex = 0.0,
        interval: tuple[float, float] = (0.0, np.pi),
        jumps: Sequence[tuple[float, complex]] = (),
    ) -> "CoefficientPair":
        return cls(interval, np.full(2, p, complex), np.full(2, sigma, complex), tuple(jumps))

    @classmethod
    def from_functions(
        cls,
        p: Callable | complex = 0.0,
        sigma: Callable | complex = 0.0,
        interval: tuple[float, float] = (0.0, np.pi),
        size: int = 513,
        jumps: Sequence[tuple[float, complex]] = (),
    ) -> "CoefficientPair":
        """Sample callables (or constants) on a uniform grid of ``size`` nodes."""
        x = np.linspace(interval[0], interval[1], size)
        pv = p(x) if callable(p) else np.full(size, p)
        sv = sigma(x) if callable(sigma) else np.full(size, sigma)
        return cls(interval, np.broadcast_to(pv, x.shape), np.broadcast_to(sv, x.shape), tuple(jumps))

    # -- basic properties -------------------------------------------------
    @property
    def a(self) -> float:
        return self.interval[0]

    @property
    def b(self) -> float:
        return self.interval[1]

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.p_samples.size)

    def _check_domain(self, x: np.ndarray, stage: str) -> None:
        tol = 1e-12 * max(1.0, abs(self.a), abs(self.b))
        if np.any(~np.isfinite(x)) or np.any(x < self.a - tol) or np.any(x > self.b + tol):
            raise InputError(f"x outside [{self.a}, {self.b}]", stage)

    # -- evaluation -------------------------------------------------------
    def p(self, x):
        x = np.asarray(x, dtype=float)
        self._check_domain(x, "coefficients.eval_p")
        out = _interp(x, self.grid, self.p_samples)
        return out[()] if out.ndim == 0 else out

    def sigma(self, x):
        x = np.asarray(x, dtype=float)
        self._check_domain(x, "coefficients.eval_sigma")
        out = _interp(x, self.grid, self.sigma_base)
        for x0, c in self.jumps:
            out = out + c * (x >= x0)
        return out[()] if out.ndim == 0 else out

    def sigma_left(self, x):
        """Left limit of ``sigma`` (differs from :meth:`sigma` only at jumps)."""
        x = np.asarray(x, dtype=float)
        out = _interp(x, self.grid, self.sigma_base)
        for x0, c in self.jumps:
            out = out + c * (x > x0)
        return out[()] if out.ndim == 0 else out

    def mean_p(self) -> complex:
        """``(1/(b-a)) * integral of p``; trapezoid rule, exact for the interpolant."""
        return complex(np.trapezoid(self.p_samples, self.grid) / self.length)

    # -- derived pairs ----------------------------------------------------
    def with_sigma_shift(self, h: complex) -> "CoefficientPair":
        return CoefficientPair(self.interval, self.p_samples, self.sigma_base + h, self.jumps)

    def refined(self, factor: int) -> "CoefficientPair":
        """Same functions on a grid subdivided ``factor`` times."""
        size = (self.p_samples.size - 1) * factor + 1
        x = np.linspace(self.a, self.b, size)
        return CoefficientPair(
            self.interval,
            _interp(x, self.grid, self.p_samples),
            _interp(x, self.grid, self.sigma_base),
            self.jumps,
        )

    # -- JSON ---------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "interval": [self.a, self.b],
            "p": encode_array(self.p_samples),
            "sigma": encode_array(self.sigma_base),
            "jumps": [[x0, encode_complex(c)] for x0, c in self.jumps],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CoefficientPair":
        stage = "coefficients.from_json"
        if not isinstance(obj, dict):
            raise InputError("coefficient object must be a JSON object", stage)
        try:
            interval = tuple(float(v) for v in obj["interval"])
            p = decode_array(obj["p"], stage=stage)
            sigma = decode_array(obj["sigma"], stage=stage)
            jumps = tuple(
                (float(x0), decode_complex(c, stage=stage)) for x0, c in obj.get("jumps", [])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed coefficient object: {exc}", stage) from exc
        if len(interval) != 2:
            raise InputError("interval must have two entries", stage)
        return cls(interval, p, sigma, jumps)


def eval_p(cp: CoefficientPair, x):
    return cp.p(x)


def eval_sigma(cp: CoefficientPair, x):
    return cp.sigma(x)


def mean_p(cp: CoefficientPair) -> complex:
    return cp.mean_p()


def glue(left: CoefficientPair, right: CoefficientPair) -> CoefficientPair:
    """Concatenate two pairs sharing an endpoint into one pair.

    The right ``sigma`` is shifted by a constant so that ``sigma`` is continuous
    at the junction; no delta term is created there. Both grids must have the
    same spacing.
    """
    stage = "coefficients.glue"
    if abs(left.b - right.a) > 1e-12 * max(1.0, abs(left.b)):
        raise InputError("pairs do not share an endpoint", stage)
    hl = left.length / (left.p_samples.size - 1)
    hr = right.length / (right.p_samples.size - 1)
    if abs(hl - hr) > 1e-9 * hl:
        raise InputError("grids must have equal spacing", stage)
    left_steps = sum((c for _, c in left.jumps), 0j)
    shift = left.sigma_left(left.b) - right.sigma(right.a)
    p = np.concatenate([left.p_samples, right.p_samples[1:]])
    # the composite base absorbs the left steps, which keep acting for x > junction
    s = np.concatenate([left.sigma_base, right.sigma_base[1:] + shift - left_steps])
    return CoefficientPair((left.a, right.b), p, s, left.jumps + right.jumps)
