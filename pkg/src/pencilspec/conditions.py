"""Finite-section diagnostics for the hypotheses of the inverse problem.

Every quantity here is a proxy computed from finitely many eigenvalues:

* (S): ``f1`` and ``f2`` do not vanish together on the subspectrum;
* (A): imaginary parts stay bounded and repeated values stop after ``n0``;
* Gram proxy for the exponential family ``{e^{i lam_n t}}`` on ``(-h, h)``,
  with derivative rows ``(it)^nu e^{i lam t}`` for repeated values.

A bounded-below smallest singular value over growing sections is consistent
with a Riesz basis; it says nothing about completeness, which is probed
separately by :func:`completeness_proxy`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .entire import as_expr
from .forward import Subspectrum
from .kernels import sinc

IM_BOUND = 10.0
S_REL = 1e-9


@dataclass(frozen=True)
class ConditionReport:
    """Verdicts of the finite-section checks; all are proxies."""

    S_ok: bool
    S_min: float
    A_ok: bool
    max_abs_im: float
    n0: int
    gram_sigma_min: float
    gram_cond: float
    gram_ok: bool
    rows: int
    notes: list = field(default_factory=list)
    label: str = "finite-section proxy"

    def to_json(self) -> dict:
        out = asdict(self)
        out["gram_cond"] = out["gram_cond"] if math.isfinite(out["gram_cond"]) else "inf"
        return out


def check_S(sub: Subspectrum, f1, f2, rel: float = S_REL, radius: float = 0.5) -> tuple[bool, float]:
    """``(ok, min_n max(|f1(lam_n)|, |f2(lam_n)|))``.

    The threshold is ``rel`` times the size of ``f1, f2`` on a circle of
    ``radius`` around each point, so it adapts to the local scale.
    """
    f1, f2 = as_expr(f1), as_expr(f2)
    lam = np.unique(np.asarray(sub.values, dtype=complex))
    if lam.size == 0:
        return True, math.inf
    here = np.maximum(np.abs(f1(lam)), np.abs(f2(lam)))
    ring = lam[:, None] + radius * np.exp(2j * np.pi * np.arange(16) / 16)
    scale = np.max(np.maximum(np.abs(f1(ring)), np.abs(f2(ring))), axis=1)
    ok = bool(np.all(here > rel * np.maximum(scale, np.finfo(float).tiny)))
    return ok, float(np.min(here))


def check_A(sub: Subspectrum, n0_search: int | None = None, im_bound: float = IM_BOUND) -> tuple[bool, dict]:
    """Bounded imaginary parts and eventual simplicity on the available window.

    ``n0`` is the first 1-based index after which no value repeats; the check
    passes when ``n0 <= n0_search`` (default: half the window) and
    ``max |Im lam_n| <= im_bound``.
    """
    vals = np.asarray(sub.values, dtype=complex)
    n = vals.size
    limit = max(1, n // 2) if n0_search is None else n0_search
    n0 = 1
    for start, _value, mult in sub.groups():
        if mult > 1:
            n0 = start + mult + 1
    max_im = float(np.max(np.abs(vals.imag))) if n else 0.0
    ok = max_im <= im_bound and n0 <= limit
    return ok, {"n0": n0, "max_abs_im": max_im, "im_bound": im_bound, "window": n, "n0_search": limit}


def _gauss_legendre_moments(d: complex, k: int, h: float) -> complex:
    """``int_{-h}^{h} (i t)^k e^{i d t} dt`` by Gauss-Legendre quadrature."""
    nodes = int(64 + 2 * abs(d) * h)
    x, w = np.polynomial.legendre.leggauss(nodes)
    t = h * x
    return complex(h * np.sum(w * (1j * t) ** k * np.exp(1j * d * t)))


def _base_integral(d: np.ndarray, h: float) -> np.ndarray:
    """``int_{-h}^{h} e^{i d t} dt = 2 sin(h d) / d``."""
    return 2 * h * sinc(h * d / np.pi)


def gram_matrix(sub: Subspectrum, halfwidth: float = 2 * np.pi, T: float | None = None) -> np.ndarray:
    """Unnormalized Gram matrix of the exponential family with derivative rows."""
    rows = []  # (lam, nu)
    for _start, lam, mult in sub.groups():
        if T is not None and abs(lam.real) > T:
            continue
        rows.extend((lam, nu) for nu in range(mult))
    m = len(rows)
    lam = np.array([r[0] for r in rows], complex)
    nu = np.array([r[1] for r in rows], int)
    d = lam[None, :] - np.conj(lam)[:, None]
    G = _base_integral(d, halfwidth).astype(complex)
    for a in range(m):
        for b in range(m):
            k = nu[a] + nu[b]
            if k:
                # conj((it)^mu) (it)^nu = (-1)^mu (it)^(mu+nu); scaled by 1/(mu! nu!)
                val = _gauss_legendre_moments(d[a, b], k, halfwidth)
                G[a, b] = (-1) ** nu[a] * val / (math.factorial(nu[a]) * math.factorial(nu[b]))
    return G


def gram_diagnostic(sub: Subspectrum, halfwidth: float = 2 * np.pi, T: float | None = None) -> tuple[float, float]:
    """``(sigma_min, cond)`` of the unit-diagonal Gram section."""
    G = gram_matrix(sub, halfwidth, T)
    if G.size == 0:
        return 0.0, math.inf
    dscale = 1.0 / np.sqrt(np.real(np.diag(G)))
    Gn = G * dscale[:, None] * dscale[None, :]
    s = np.linalg.svd(Gn, compute_uv=False)
    smin = float(max(s[-1], 0.0))
    cond = float(s[0] / s[-1]) if s[-1] > 0 else math.inf
    return smin, cond


def completeness_proxy(sub: Subspectrum, halfwidth: float = 2 * np.pi, T: float | None = None) -> float:
    """Smallest squared cosine between reference exponentials and the family span.

    The reference family ``e^{i pi n t / h}`` with ``|pi n / h| <= T`` is
    orthogonal on ``(-h, h)``.  A value near one means every reference
    vector lies close to the span of the section; zero means some reference
    vector is orthogonal to it.
    """
    lam = np.array([g[1] for g in sub.groups()], complex)
    if T is None:
        T = float(np.max(np.abs(lam.real))) if lam.size else 0.0
    lam = lam[np.abs(lam.real) <= T + 1e-12]
    nmax = int(math.floor(T * halfwidth / np.pi + 1e-9))
    ref = np.pi * np.arange(-nmax, nmax + 1) / halfwidth
    G = gram_matrix(Subspectrum(lam), halfwidth)
    C = _base_integral(lam[None, :] - ref[:, None], halfwidth)  # <ref_i, e_j>
    proj = C @ np.linalg.pinv(G, rcond=1e-12, hermitian=True) @ C.conj().T / (2 * halfwidth)
    return float(np.min(np.linalg.eigvalsh(0.5 * (proj + proj.conj().T))))


def moment_proxy(sub: Subspectrum, f1, f2, T: int, **kw):
    """Conditioning of the moment rows ``{v_k}``, the (C)/(B) proxy of :func:`inverse.solve_u`."""
    from .inverse import build_moment_system, solve_u

    ms = build_moment_system(sub, f1, f2, T, **kw)
    _u, report = solve_u(ms, rank_fraction=0.0, return_report=True)
    return report


def check_all(
    sub: Subspectrum,
    f1,
    f2,
    *,
    halfwidth: float = 2 * np.pi,
    T: float | None = None,
    n0_search: int | None = None,
    im_bound: float = IM_BOUND,
    sigma_floor: float = 1e-8,
) -> ConditionReport:
    s_ok, s_min = check_S(sub, f1, f2)
    a_ok, a_info = check_A(sub, n0_search, im_bound)
    smin, cond = gram_diagnostic(sub, halfwidth, T)
    notes = []
    if not s_ok:
        notes.append("f1 and f2 vanish together at a subspectrum point")
    if not a_ok:
        notes.append("imaginary parts or multiplicities violate the (A) proxy")
    gram_ok = smin > sigma_floor
    if not gram_ok:
        notes.append("Gram section is numerically singular")
    return ConditionReport(
        s_ok, s_min, a_ok, a_info["max_abs_im"], a_info["n0"], smin, cond, gram_ok,
        int(sum(m for *_x, m in sub.groups())), notes,
    )


__all__ = [
    "ConditionReport",
    "check_A",
    "check_S",
    "check_all",
    "completeness_proxy",
    "gram_diagnostic",
    "gram_matrix",
    "moment_proxy",
]
