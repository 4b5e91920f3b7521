"""Transformation kernels of the boundary functions and their coefficient form.

For coefficients on ``(0, pi)`` with ``omega0 = mean(p)``::

    lam * S(pi, lam) = sin(pi (lam - omega0)) + int K(t) exp(i lam t) dt
    S^[1](pi, lam)   = cos(pi (lam - omega0)) + int N(t) exp(i lam t) dt

with ``K, N`` supported on ``(-pi, pi)``.  Writing ``c_n = int K(t) e^{int} dt``
we have ``int K e^{i lam t} dt = sum_n c_n sinc(lam - n)`` (normalized sinc),
so values at integer ``lam`` are the Fourier coefficients themselves.

The kernels generally jump at ``t = +-pi``, so ``c_n`` decays only like
``1/n``.  Coefficients beyond the band ``|n| <= N`` are modeled by the
endpoint expansion ``c_n ~ sum_m b_m (-1)^n (N/(i n))^m`` whose amplitudes
``b_m`` are fitted on the outer half of the band; the sinc sums of these tail
atoms have closed forms in terms of the digamma and Hurwitz zeta functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._jsonio import decode_array, decode_complex, encode_array, encode_complex
from .coefficients import CoefficientPair
from .errors import InputError
from .forward import boundary_S

TAIL_ORDER = 3
SMALL_LAM = 0.25
_SERIES_TERMS = 40


# -- special sums -----------------------------------------------------------------

def _zeta_tail(order: int, N: int) -> float:
    """``sum_{|n| > N} n^-order``; zero for odd order."""
    if order % 2:
        return 0.0
    return 2.0 * float(special.zeta(order, N + 1))


def tail_sums(lam, N: int, J: int) -> np.ndarray:
    """``A_m(lam) = sum_{|n| > N} 1 / (n^m (lam - n))`` for ``m = 0..J``.

    Shape ``lam.shape + (J + 1,)``.
    """
    lam = np.asarray(lam, dtype=complex)
    out = np.empty(lam.shape + (J + 1,), complex)
    small = np.abs(lam) < 1.0
    big = ~small
    if np.any(big):
        z = lam[big]
        a = special.psi(N + 1 - z) - special.psi(N + 1 + z)
        out[big, 0] = a
        for m in range(1, J + 1):
            a = (_zeta_tail(m, N) + a) / z
            out[big, m] = a
    if np.any(small):
        z = lam[small]
        zs = np.array([_zeta_tail(k, N) for k in range(J + _SERIES_TERMS + 2)])
        for m in range(J + 1):
            acc = np.zeros_like(z)
            for k in range(_SERIES_TERMS - 1, -1, -1):
                acc = acc * z + zs[m + k + 1]
            out[small, m] = -acc
    return out


def tail_atoms(lam, N: int, J: int) -> np.ndarray:
    """``tau_m(lam) = sum_{|n|>N} (-1)^n (N/(i n))^m sinc(lam - n)``, ``m = 1..J``."""
    lam = np.asarray(lam, dtype=complex)
    if J == 0:
        return np.zeros(lam.shape + (0,), complex)
    m = np.arange(1, J + 1)
    scale = (N / 1j) ** m
    n = np.round(lam.real)
    hit = (lam == n) & (np.abs(n) > N)
    with np.errstate(invalid="ignore", divide="ignore"):
        a = tail_sums(np.where(hit, lam + 0.5, lam), N, J)[..., 1:]
        out = (np.sin(np.pi * lam) / np.pi)[..., None] * scale * a
    # an atom sits on an integer outside the band: sinc picks that single term
    if np.any(hit):
        nh = n[hit][..., None]
        out[hit] = (-1.0) ** nh * (N / (1j * nh)) ** m
    return out


def tail_gram(N: int, J: int) -> np.ndarray:
    """Gram matrix of the conjugated tail atoms in ``L2(-pi, pi)``.

    Entry ``(m, l)`` equals ``(1/2pi) sum_{|n|>N} (N/(in))^m conj((N/(in))^l)``.
    """
    g = np.empty((J, J), complex)
    for m in range(1, J + 1):
        for l in range(1, J + 1):
            g[m - 1, l - 1] = N ** (m + l) * (1j) ** (-m) * (-1j) ** (-l) * _zeta_tail(m + l, N) / (2 * np.pi)
    return g


def sinc(z):
    """``np.sinc`` that also accepts subnormal complex arguments (it overflows there)."""
    z = np.asarray(z, dtype=complex)
    return np.sinc(np.where(np.abs(z) < 1e-300, 0.0, z))


def sinc_row(lam, N: int) -> np.ndarray:
    """``sinc(lam - n)`` for ``n = -N..N``; shape ``lam.shape + (2N+1,)``."""
    lam = np.asarray(lam, dtype=complex)
    n = np.arange(-N, N + 1)
    return sinc(lam[..., None] - n)


def fit_tail(coeffs: np.ndarray, J: int = TAIL_ORDER) -> np.ndarray:
    """Least-squares amplitudes ``b_m`` of the endpoint expansion.

    Fitted on ``N/2 < |n| <= N`` of the band ``coeffs`` (length ``2N+1``).
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    N = (coeffs.size - 1) // 2
    if J == 0:
        return np.zeros(0, complex)
    n = np.arange(-N, N + 1)
    sel = np.abs(n) > N // 2
    ns = n[sel]
    design = ((-1.0) ** ns)[:, None] * (N / (1j * ns[:, None])) ** np.arange(1, J + 1)
    b, *_ = np.linalg.lstsq(design, coeffs[sel], rcond=None)
    return b


def kernel_transform(coeffs, tail, lam) -> np.ndarray:
    """``int K(t) exp(i lam t) dt`` from band coefficients and tail amplitudes."""
    coeffs = np.asarray(coeffs, dtype=complex)
    tail = np.asarray(tail, dtype=complex)
    N = (coeffs.size - 1) // 2
    lam = np.asarray(lam, dtype=complex)
    out = sinc_row(lam, N) @ coeffs
    if tail.size:
        out = out + tail_atoms(lam, N, tail.size) @ tail
    return out


# -- the triple -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundaryTriple:
    """``omega0`` with kernel coefficients ``c_n = int K e^{int}``, ``n = -N..N``.

    ``K_tail`` and ``N_tail`` hold the amplitudes of the out-of-band model;
    empty tails mean plain truncation.
    """

    omega0: complex
    K_coeffs: np.ndarray
    N_coeffs: np.ndarray
    K_tail: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    N_tail: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    def __post_init__(self) -> None:
        stage = "kernels.BoundaryTriple"
        arrays = {}
        for name in ("K_coeffs", "N_coeffs", "K_tail", "N_tail"):
            v = np.array(getattr(self, name), dtype=complex).ravel()
            if not np.all(np.isfinite(v)):
                raise InputError(f"{name} must be finite", stage)
            v.setflags(write=False)
            arrays[name] = v
        if arrays["K_coeffs"].size != arrays["N_coeffs"].size or arrays["K_coeffs"].size % 2 == 0:
            raise InputError("K and N need the same odd length 2N+1", stage)
        if arrays["K_tail"].size != arrays["N_tail"].size:
            raise InputError("K and N tails need the same length", stage)
        for name, v in arrays.items():
            object.__setattr__(self, name, v)
        object.__setattr__(self, "omega0", complex(self.omega0))

    @property
    def N(self) -> int:
        return (self.K_coeffs.size - 1) // 2

    @classmethod
    def free(cls, N: int = 64, omega0: complex = 0.0, tail_order: int = 0) -> "BoundaryTriple":
        z = np.zeros(2 * N + 1, complex)
        t = np.zeros(tail_order, complex)
        return cls(omega0, z, z, t, t)

    def negated(self) -> "BoundaryTriple":
        return BoundaryTriple(self.omega0, -self.K_coeffs, -self.N_coeffs, -self.K_tail, -self.N_tail)

    def with_omega0(self, omega0: complex) -> "BoundaryTriple":
        return BoundaryTriple(omega0, self.K_coeffs, self.N_coeffs, self.K_tail, self.N_tail)

    # -- evaluation -------------------------------------------------------
    def lam_S(self, lam):
        """``lam * S(pi, lam)``, entire."""
        lam = np.asarray(lam, dtype=complex)
        return np.sin(np.pi * (lam - self.omega0)) + kernel_transform(self.K_coeffs, self.K_tail, lam)

    def S(self, lam):
        lam = np.asarray(lam, dtype=complex)
        small = np.abs(lam) < SMALL_LAM
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(self.lam_S(lam) / lam)
        if np.any(small):
            out = np.array(out, copy=True)
            out[small] = _divide_by_lam_near_zero(self.lam_S, lam[small])
        return out[()] if out.ndim == 0 else out

    def S1(self, lam):
        lam = np.asarray(lam, dtype=complex)
        out = np.cos(np.pi * (lam - self.omega0)) + kernel_transform(self.N_coeffs, self.N_tail, lam)
        return out[()] if np.ndim(out) == 0 else out

    # -- JSON ---------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "omega0": encode_complex(self.omega0),
            "K": encode_array(self.K_coeffs),
            "N": encode_array(self.N_coeffs),
            "K_tail": encode_array(self.K_tail),
            "N_tail": encode_array(self.N_tail),
        }

    @classmethod
    def from_json(cls, obj) -> "BoundaryTriple":
        stage = "kernels.from_json"
        if not isinstance(obj, dict):
            raise InputError("triple must be a JSON object", stage)
        try:
            return cls(
                decode_complex(obj["omega0"], stage=stage),
                decode_array(obj["K"], stage=stage),
                decode_array(obj["N"], stage=stage),
                decode_array(obj.get("K_tail", []), stage=stage),
                decode_array(obj.get("N_tail", []), stage=stage),
            )
        except KeyError as exc:
            raise InputError(f"triple is missing {exc}", stage) from exc


def _divide_by_lam_near_zero(numerator, lam, radius: float = 0.5, nodes: int = 32):
    """``numerator(lam) / lam`` for small ``lam`` via Cauchy's formula on ``|z| = radius``.

    The numerator must vanish at zero.
    """
    z = radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    vals = numerator(z)  # (nodes,)
    return np.mean(vals[None, :] / (z[None, :] - lam[:, None]), axis=1)


# -- operations -----------------------------------------------------------------

def extract_triple(cp: CoefficientPair, N: int = 64, tail_order: int = TAIL_ORDER, **kw) -> BoundaryTriple:
    """Sample the kernels' Fourier coefficients at integer ``lam = -N..N``."""
    stage = "kernels.extract_triple"
    if N < 8:
        raise InputError("N must be at least 8", stage)
    if abs(cp.length - np.pi) > 1e-12:
        raise InputError("kernel extraction needs an interval of length pi", stage)
    omega0 = cp.mean_p()
    n = np.arange(-N, N + 1).astype(complex)
    ev = boundary_S(cp, n, **kw)
    fk = n * ev.y - np.sin(np.pi * (n - omega0))
    fn = ev.y1 - np.cos(np.pi * (n - omega0))
    # lam = 0: lam * S vanishes exactly
    fk[N] = np.sin(np.pi * omega0)
    return BoundaryTriple(omega0, fk, fn, fit_tail(fk, tail_order), fit_tail(fn, tail_order))


def eval_S_from_triple(bt: BoundaryTriple, lam):
    return bt.S(lam)


def eval_S1_from_triple(bt: BoundaryTriple, lam):
    return bt.S1(lam)


def kernel_integral(bt: BoundaryTriple) -> complex:
    """``int K(t) dt``, the ``n = 0`` coefficient."""
    return complex(bt.K_coeffs[bt.N])
