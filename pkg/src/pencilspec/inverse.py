"""Reconstruction of the boundary functions from a subspectrum.

The unknown ``u = [conj(N), conj(K)]`` lives in ``H = L2(-pi, pi)^2`` with
``(g, h) = int conj(g1) h1 + conj(g2) h2``.  Each eigenvalue ``lam_n`` (and
each extra multiplicity) contributes one moment equation
``(u, v^<nu>(., lam_n)) = w^<nu>(lam_n)`` with::

    v(t, lam) = [lam f1(lam) e^{i lam t}, f2(lam) e^{i lam t}]
    w(lam)    = -f1(lam) lam cos(pi (lam - omega0)) - f2(lam) sin(pi (lam - omega0))

plus the row ``v0 = [0, 1]``, ``w0 = sin(pi omega0)``.

Each component of an :class:`HVector` is stored as in-band coefficients
``x_n`` of ``e^{int}``, ``|n| <= T``, plus amplitudes of the out-of-band atoms
described in :mod:`pencilspec.kernels`.  Vectors that do not lie in this
span, such as ``e^{i lam t}``, are stored as their orthogonal projection.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import contour
from ._jsonio import decode_array, encode_array
from .coefficients import CoefficientPair
from .entire import MAX_ORDER, EntireExpr, as_expr, cos, sin, var
from .errors import ConditionError, InputError, NumericalError
from .forward import Subspectrum, boundary_S, find_zeros, reduce_mod1
from .kernels import TAIL_ORDER, BoundaryTriple, fit_tail, sinc_row, tail_atoms, tail_gram

log = logging.getLogger(__name__)

RIDGE = 1e-10
RANK_FRACTION = 0.8
ROW_RADIUS = 0.25
S1_FLOOR = 1e-10


# -- Hilbert-space vectors --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HVector:
    """Element of ``L2 + L2`` in the truncated exponential basis plus tail atoms."""

    first: np.ndarray
    second: np.ndarray
    first_tail: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    second_tail: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    def __post_init__(self) -> None:
        for name in ("first", "second", "first_tail", "second_tail"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex).ravel())
        if self.first.size != self.second.size or self.first.size % 2 == 0:
            raise InputError("both components need the same odd length 2T+1", "inverse.HVector")
        if self.first_tail.size != self.second_tail.size:
            raise InputError("tail lengths differ", "inverse.HVector")

    @property
    def T(self) -> int:
        return (self.first.size - 1) // 2

    @property
    def J(self) -> int:
        return self.first_tail.size

    @classmethod
    def zeros(cls, T: int, J: int = 0) -> "HVector":
        z = np.zeros(2 * T + 1, complex)
        t = np.zeros(J, complex)
        return cls(z, z, t, t)

    @classmethod
    def from_array(cls, arr: np.ndarray, T: int, J: int) -> "HVector":
        n = 2 * T + 1
        return cls(arr[:n], arr[n + J: 2 * n + J], arr[n: n + J], arr[2 * n + J:])

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.first, self.first_tail, self.second, self.second_tail])

    def inner(self, other: "HVector") -> complex:
        """``(self, other)``, conjugate-linear in ``self``."""
        return complex(np.conj(self.to_array()) @ (metric(self.T, self.J) @ other.to_array()))

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self).real, 0.0))

    def to_json(self) -> dict:
        return {
            "first": encode_array(self.first),
            "second": encode_array(self.second),
            "first_tail": encode_array(self.first_tail),
            "second_tail": encode_array(self.second_tail),
        }

    @classmethod
    def from_json(cls, obj) -> "HVector":
        stage = "inverse.HVector.from_json"
        try:
            return cls(
                decode_array(obj["first"], stage=stage),
                decode_array(obj["second"], stage=stage),
                decode_array(obj.get("first_tail", []), stage=stage),
                decode_array(obj.get("second_tail", []), stage=stage),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed HVector: {exc}", stage) from exc


def metric(T: int, J: int) -> np.ndarray:
    """Gram matrix of the coordinate system used by :class:`HVector`."""
    n = 2 * T + 1
    block = np.zeros((n + J, n + J), complex)
    block[:n, :n] = 2 * np.pi * np.eye(n)
    if J:
        block[n:, n:] = tail_gram(T, J)
    out = np.zeros((2 * (n + J), 2 * (n + J)), complex)
    out[: n + J, : n + J] = block
    out[n + J:, n + J:] = block
    return out


def hvector_from_triple(bt: BoundaryTriple) -> HVector:
    """``u = [conj(N), conj(K)]`` for a known triple."""
    return HVector(
        np.conj(bt.N_coeffs) / (2 * np.pi),
        np.conj(bt.K_coeffs) / (2 * np.pi),
        np.conj(bt.N_tail),
        np.conj(bt.K_tail),
    )


# -- moment system ----------------------------------------------------------------

def _exp_coordinates(lam, T: int, J: int, ginv) -> np.ndarray:
    """Coordinates of ``e^{i lam t}`` (in-band sinc values, projected tail)."""
    lam = np.asarray(lam, dtype=complex)
    band = sinc_row(lam, T)
    if J == 0:
        return band
    tail = tail_atoms(lam, T, J) @ ginv.T
    return np.concatenate([band, tail], axis=-1)


def _exp_taylor(lam: complex, order: int, T: int, J: int, ginv) -> np.ndarray:
    """Scaled lambda-derivatives of the coordinates of ``e^{i lam t}``; (order+1, 2T+1+J)."""
    if order == 0:
        return _exp_coordinates(lam, T, J, ginv)[None, :]
    return contour.taylor_coefficients(
        lambda z: _exp_coordinates(z, T, J, ginv), lam, order, radius=ROW_RADIUS, nodes=32
    )


def w_expr(f1, f2, omega0) -> EntireExpr:
    """``w(lam) = -f1 lam cos(pi(lam - omega0)) - f2 sin(pi(lam - omega0))``."""
    f1, f2 = as_expr(f1), as_expr(f2)
    shift = -np.pi * complex(omega0)
    return -(f1 * var() * cos(np.pi, shift)) - f2 * sin(np.pi, shift)


@dataclass(frozen=True, eq=False)
class MomentSystem:
    """Rows ``v_k`` and right-hand sides ``w_k``; ``labels`` holds ``(lam, nu)``."""

    vs: list
    ws: np.ndarray
    labels: list
    T: int
    J: int
    omega0_mod1: complex

    def __iter__(self):  # supports ``vs, ws = build_moment_system(...)``
        return iter((self.vs, self.ws))

    def residual(self, u: HVector) -> np.ndarray:
        return np.array([u.inner(v) for v in self.vs]) - self.ws


def build_moment_system(
    sub: Subspectrum,
    f1,
    f2,
    T: int,
    *,
    omega0_mod1: complex | None = None,
    tail_order: int = TAIL_ORDER,
    max_abs: float | None = None,
) -> MomentSystem:
    """Rows of the moment problem for ``u``.

    Groups with ``|lam_n| > max_abs`` (default ``T + 1/2``) are skipped so that
    ``e^{i lam_n t}`` stays concentrated inside the coefficient band.
    """
    stage = "inverse.build_moment_system"
    if T < 4:
        raise InputError("truncation T must be at least 4", stage)
    f1, f2 = as_expr(f1), as_expr(f2)
    omega = sub.omega0_mod1 if omega0_mod1 is None else complex(omega0_mod1)
    limit = (T + 0.5) if max_abs is None else float(max_abs)
    J = tail_order
    ginv = np.linalg.inv(tail_gram(T, J)) if J else None
    width = 2 * T + 1 + J
    w_fn = w_expr(f1, f2, omega)
    lam_f1 = f1 * var()

    zero = np.zeros(width, complex)
    one = np.zeros(width, complex)
    one[T] = 1.0
    vs = [HVector.from_array(np.concatenate([zero, one]), T, J)]
    ws = [complex(np.sin(np.pi * omega))]
    labels = [(0j, 0)]
    for _start, lam, mult in sub.groups():
        if abs(lam) > limit:
            continue
        if mult - 1 > MAX_ORDER:
            raise InputError(f"multiplicity {mult} exceeds the derivative limit", stage)
        order = mult - 1
        e = _exp_taylor(lam, order, T, J, ginv)
        a = lam_f1.taylor(lam, order)
        b = f2.taylor(lam, order)
        wv = w_fn.taylor(lam, order)
        for nu in range(mult):
            first = sum(a[j] * e[nu - j] for j in range(nu + 1))
            second = sum(b[j] * e[nu - j] for j in range(nu + 1))
            vs.append(HVector.from_array(np.concatenate([first, second]), T, J))
            ws.append(complex(wv[nu]))
            labels.append((lam, nu))
    return MomentSystem(vs, np.array(ws), labels, T, J, omega)


# -- least squares ----------------------------------------------------------------

@dataclass(frozen=True)
class SolveReport:
    rows: int
    unknowns: int
    rank: int
    sigma_min: float
    sigma_max: float
    residual: float

    @property
    def rank_fraction(self) -> float:
        return self.rank / max(self.unknowns, 1)

    @property
    def condition(self) -> float:
        return self.sigma_max / self.sigma_min if self.sigma_min > 0 else math.inf


def _tail_closure(T: int, J: int) -> np.ndarray:
    """Linear map from band coordinates to tail coordinates of one component.

    The tail amplitudes of a kernel are the least-squares fit of its outer
    band coefficients; in ``u`` coordinates (conjugated, scaled by 1/2pi)
    that becomes ``xi = 2 pi conj(F) x``.
    """
    n = 2 * T + 1
    basis = np.eye(n, dtype=complex)
    fit = np.stack([fit_tail(basis[:, j], J) for j in range(n)], axis=1)  # (J, n): b = F c
    return 2 * np.pi * np.conj(fit)


def solve_u(
    vs,
    ws=None,
    count: int | None = None,
    *,
    ridge: float = RIDGE,
    rank_fraction: float = RANK_FRACTION,
    tail_closure: bool = True,
    return_report: bool = False,
):
    """Ridge least-squares solution of ``(u, v_k) = w_k``.

    Minimizes ``sum |(u, v_k) - w_k|^2 + eps ||u||^2`` with
    ``eps = ridge * ||Gram||``.  Components on which every row vanishes are
    left at zero.  Raises :class:`ConditionError` when the numerical rank
    falls below ``rank_fraction`` of the active unknowns, the finite-section
    signal that the rows are not complete.
    """
    stage = "inverse.solve_u"
    if isinstance(vs, MomentSystem):
        vs, ws = vs.vs, vs.ws
    vs = list(vs)
    ws = np.asarray(ws, dtype=complex)
    if count is not None:
        if count > len(vs):
            raise InputError(f"count {count} exceeds the {len(vs)} available rows", stage)
        vs, ws = vs[:count], ws[:count]
    if not vs:
        raise InputError("no rows to solve", stage)
    T, J = vs[0].T, vs[0].J
    n = 2 * T + 1
    half = n + J
    M = metric(T, J)
    V = np.stack([v.to_array() for v in vs])  # rows in coordinates
    # (u, v) = conj(u) . M v  =>  A u = conj(w) with A = conj(M V^T)^T
    A = np.conj(V @ M.T)
    rhs = np.conj(ws)

    active = [np.any(np.abs(A[:, :half]) > 0), np.any(np.abs(A[:, half:]) > 0)]
    cols = np.concatenate([np.arange(half) if active[0] else np.zeros(0, int),
                           np.arange(half, 2 * half) if active[1] else np.zeros(0, int)])
    if not active[0]:
        log.warning("first component unconstrained by every row (f1 vanishes on the data); left at zero")
    A_act = A[:, cols]
    n_moment_rows = A.shape[0]
    if tail_closure and J:
        closure = _tail_closure(T, J)
        scale = np.median(np.linalg.norm(A_act, axis=1))
        extra = []
        for comp in range(2):
            if not active[comp]:
                continue
            row = np.zeros((J, 2 * half), complex)
            off = comp * half
            row[:, off: off + n] = -closure
            row[:, off + n: off + half] = np.eye(J)
            extra.append(scale * row[:, cols])
        A_act = np.vstack([A_act] + extra)
        rhs = np.concatenate([rhs, np.zeros(A_act.shape[0] - rhs.size, complex)])

    # metric-aware ridge: change variables y = L^H u with M = L L^H
    L = np.linalg.cholesky(M[np.ix_(cols, cols)])
    B = np.linalg.solve(L.conj(), A_act.T).T  # B = A L^{-H}
    U, s, Vh = np.linalg.svd(B, full_matrices=False)
    eps = ridge * (s[0] ** 2 if s.size else 0.0)
    filt = s / (s**2 + eps)
    y = Vh.conj().T @ (filt * (U.conj().T @ rhs))
    u_act = np.linalg.solve(L.conj().T, y)
    u = np.zeros(2 * half, complex)
    u[cols] = u_act

    rank = int(np.sum(s > math.sqrt(eps))) if s.size else 0
    resid = float(np.max(np.abs(A[:n_moment_rows] @ u - np.conj(ws))))
    report = SolveReport(A_act.shape[0], cols.size, rank, float(s[-1]) if s.size else 0.0,
                         float(s[0]) if s.size else 0.0, resid)
    log.debug("solve_u: %s", report)
    if report.rank_fraction < rank_fraction:
        raise ConditionError(
            f"moment rows have numerical rank {rank} for {cols.size} unknowns "
            f"(fraction {report.rank_fraction:.2f} < {rank_fraction}); completeness proxy fails",
            stage,
        )
    out = HVector.from_array(u, T, J)
    return (out, report) if return_report else out


def reconstruct_triple(u: HVector, omega0_mod1: complex) -> BoundaryTriple:
    """Kernel coefficients from ``u = [conj(N), conj(K)]``."""
    return BoundaryTriple(
        omega0_mod1,
        2 * np.pi * np.conj(u.second),
        2 * np.pi * np.conj(u.first),
        np.conj(u.second_tail),
        np.conj(u.first_tail),
    )


def invert(
    sub: Subspectrum,
    f1,
    f2,
    T: int,
    *,
    omega0_mod1: complex | None = None,
    return_report: bool = False,
    **kw,
):
    """Boundary triple from a subspectrum: moment rows, least squares, kernels.

    ``kw`` goes to :func:`solve_u`.
    """
    ms = build_moment_system(sub, f1, f2, T, omega0_mod1=omega0_mod1)
    u, report = solve_u(ms, return_report=True, **kw)
    bt = reconstruct_triple(u, ms.omega0_mod1)
    return (bt, report) if return_report else bt


# -- zeros of S(pi, .) ----------------------------------------------------------------

def _lamS_with_derivative(bt: BoundaryTriple, lam, radius: float = 0.05):
    """``lam S`` and its derivative by a 16-node Cauchy rule around each point."""
    lam = np.asarray(lam, dtype=complex)
    angles = 2 * np.pi * np.arange(16) / 16
    w = radius * np.exp(1j * angles)
    vals = bt.lam_S(lam[..., None] + w)
    coef = np.fft.fft(vals, axis=-1) / 16
    return coef[..., 0], coef[..., 1] / radius


def _label(values: np.ndarray, centre: complex) -> np.ndarray:
    """Integer labels ``round(Re(theta - centre))``; collisions move outward."""
    raw = np.round((values - centre).real).astype(int)
    order = np.argsort(np.abs(values - centre), kind="stable")
    taken: set[int] = set()
    out = np.empty(values.size, int)
    for i in order:
        k = int(raw[i])
        step = 1 if (values[i] - centre).real >= 0 else -1
        while k in taken:
            k += step
        taken.add(k)
        out[i] = k
    return out


def locate_thetas(
    bt: BoundaryTriple,
    K: int,
    *,
    seed_offset: float = 0.0,
    cluster_tol: float = 1e-7,
    include_zero: bool = True,
    im_halfwidth: float = 3.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Zeros ``theta`` of ``S(pi, .)`` with ``|Re(theta - c)| < K + 1/2``.

    ``c`` is the representative of ``omega0`` modulo one with real part in
    ``[-1/2, 1/2]``; ``omega0`` is not needed beyond that.  Newton's method on
    ``lam S`` runs from the seeds ``k + c``, and the root count is checked
    against the winding number of ``lam S`` around the window, with a full
    argument-principle search when they disagree.  The zero that ``lam S``
    always has at ``lam = 0`` is removed; ``theta = 0`` is reported only when
    ``S(pi, 0)`` itself vanishes.

    Returns ``(thetas, labels)`` sorted by real part, multiple roots repeated
    adjacently; ``labels`` are ``round(Re(theta - c))`` made unique.
    """
    stage = "inverse.locate_thetas"
    if K < 1:
        raise InputError("K must be positive", stage)
    centre = bt.omega0 - round(bt.omega0.real)
    ks = np.array([k for k in range(-K, K + 1) if k])
    seeds = ks + centre + seed_offset
    box = (
        centre.real - K - 0.5,
        centre.real + K + 0.5,
        min(-1.0, centre.imag - im_halfwidth),
        max(1.0, centre.imag + im_halfwidth),
    )
    try:
        roots = find_zeros(
            lambda z: _lamS_with_derivative(bt, z), box, seeds, cell_width=0.5, cluster_tol=cluster_tol
        )
    except NumericalError as exc:
        raise NumericalError(f"zeros of S not isolated: {exc.args[0]}", stage) from exc
    values = []
    for z, m in roots:
        if abs(z) < 1e-8:
            z, m = 0j, m - 1  # the zero of the factor lam
            if m == 0 or not include_zero:
                continue
        values.extend([complex(z)] * m)
    vals = np.array(values, complex)
    vals = vals[np.lexsort((vals.imag, vals.real))] if vals.size else vals
    return vals, _label(vals, centre)


# -- Weyl residues ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WeylData:
    """Zeros of ``S(pi, .)`` with residues ``M_{n+nu}`` and index labels.

    ``residues`` has one entry per theta entry; the entry for a ``theta = 0``
    row with an empty residue range is NaN.  ``s1_known`` is False when the
    data could not determine ``S^[1]`` (the residues are then unusable).
    """

    thetas: np.ndarray
    residues: np.ndarray
    indices: np.ndarray
    omega0: complex = 0j
    s1_known: bool = True

    def groups(self):
        return Subspectrum(self.thetas).groups()

    def to_json(self) -> dict:
        return {
            "thetas": encode_array(self.thetas),
            "residues": encode_array(np.nan_to_num(self.residues, nan=0.0)),
            "defined": [bool(np.isfinite(r)) for r in self.residues],
            "indices": [int(k) for k in self.indices],
            "omega0": encode_array([self.omega0])[0],
            "s1_known": self.s1_known,
        }

    @classmethod
    def from_json(cls, obj) -> "WeylData":
        stage = "inverse.WeylData.from_json"
        try:
            th = decode_array(obj["thetas"], stage=stage)
            res = decode_array(obj["residues"], stage=stage)
            defined = obj.get("defined", [True] * res.size)
            res = np.where(np.asarray(defined, bool), res, np.nan)
            idx = np.asarray(obj.get("indices", range(1, th.size + 1)), int)
            om = decode_array([obj.get("omega0", [0.0, 0.0])], stage=stage)[0]
            return cls(th, res, idx, om, bool(obj.get("s1_known", True)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed Weyl data: {exc}", stage) from exc


def _inv_S(bt: BoundaryTriple):
    def f(z):
        z = np.asarray(z, dtype=complex)
        return z / bt.lam_S(z)
    return f


def _cluster_radius(value: complex, others: Sequence[complex]) -> float:
    dist = [abs(value - o) for o in others if abs(value - o) > 1e-9]
    return 0.5 * min(dist) if dist else 0.5


def residue_contour(bt: BoundaryTriple, theta: complex, nu: int, radius: float, nodes: int = 64) -> complex:
    """``Res (lam - theta)^nu / S(pi, lam)`` at ``theta`` by circle quadrature."""
    inv = _inv_S(bt)
    return contour.circle_residue(lambda z: (z - theta) ** nu * inv(z), theta, radius, nodes)


def residue_derivative(bt: BoundaryTriple, theta: complex) -> complex:
    """``1 / S'(pi, theta)`` for a simple zero, from the derivative of ``lam S``."""
    f, d = _lamS_with_derivative(bt, np.array([theta]))
    # S = lamS / lam  =>  S'(theta) = (lamS)'(theta) / theta at a zero
    return complex(theta / d[0])


def weyl_residues(bt: BoundaryTriple, thetas, indices=None, *, s1_known: bool = True) -> WeylData:
    """``M_{n+nu} = Res (theta - theta_n)^nu / S(pi, theta) / S^[1](pi, theta_n)``."""
    stage = "inverse.weyl_residues"
    thetas = np.asarray(thetas, dtype=complex)
    indices = np.arange(1, thetas.size + 1) if indices is None else np.asarray(indices, int)
    sub = Subspectrum(thetas)
    distinct = [g[1] for g in sub.groups()]
    res = np.full(thetas.size, np.nan, complex)
    for start, value, mult in sub.groups():
        s1 = complex(bt.S1(value))
        if s1_known and abs(s1) < S1_FLOOR:
            raise NumericalError(f"S^[1] vanishes at theta = {value:.6g}", stage)
        is_zero = abs(value) < 1e-12
        nus = range(mult - 1) if is_zero else range(mult)
        if mult == 1 and not is_zero:
            res[start] = residue_derivative(bt, value) / s1
            continue
        r = _cluster_radius(value, distinct)
        for nu in nus:
            res[start + nu] = residue_contour(bt, value, nu, r) / s1
    return WeylData(thetas, res, indices, bt.omega0, s1_known)


# -- corrections ----------------------------------------------------------------------

def parity_fix(bt: BoundaryTriple, omega0_true: complex, tol: float = 1e-6) -> BoundaryTriple:
    """Negate the kernels when ``omega0 - (omega0 mod 1)`` is odd and store ``omega0``."""
    omega0_true = complex(omega0_true)
    diff = omega0_true - bt.omega0
    m = round(diff.real)
    if abs(diff.real - m) > tol or abs(diff.imag) > tol:
        raise InputError(
            f"omega0 {omega0_true} differs from the stored representative {bt.omega0} by a non-integer",
            "inverse.parity_fix",
        )
    out = bt.negated() if m % 2 else bt
    return out.with_omega0(omega0_true)


def snap_omega0(estimate: complex, omega0_mod1: complex) -> complex:
    """The representative of ``omega0_mod1 + Z`` closest to ``estimate``."""
    m = round((complex(estimate) - complex(omega0_mod1)).real)
    return complex(omega0_mod1) + m


def sigma_shift(
    bt_target: BoundaryTriple,
    cp_candidate: CoefficientPair,
    probe_lambdas=None,
    *,
    tol: float = 1e-4,
    min_abs_S: float = 1e-6,
) -> complex:
    """Constant ``h`` with ``sigma = sigma_candidate + h``.

    ``h = (S~^[1](pi, lam) - S^[1](pi, lam)) / S(pi, lam)`` must not depend on
    ``lam``; the spread across probes is checked against ``tol``.
    """
    stage = "inverse.sigma_shift"
    if probe_lambdas is None:
        probe_lambdas = 0.5 + np.arange(10) * 0.37 + 0.5j
    lam = np.asarray(probe_lambdas, dtype=complex)
    s = np.asarray(bt_target.S(lam))
    if np.any(np.abs(s) <= min_abs_S):
        raise InputError("probe lambda too close to a zero of S(pi, .)", stage)
    s1 = np.asarray(bt_target.S1(lam))
    cand = boundary_S(cp_candidate, lam)
    h = (cand.y1 - s1) / s
    mean = complex(np.mean(h))
    spread = float(np.max(np.abs(h - mean)))
    if spread >= tol:
        raise NumericalError(f"shift varies across probes (spread {spread:.3g} >= {tol:g})", stage)
    return mean


__all__ = [
    "HVector",
    "MomentSystem",
    "SolveReport",
    "WeylData",
    "build_moment_system",
    "hvector_from_triple",
    "invert",
    "locate_thetas",
    "metric",
    "parity_fix",
    "reconstruct_triple",
    "residue_contour",
    "residue_derivative",
    "sigma_shift",
    "snap_omega0",
    "solve_u",
    "w_expr",
    "weyl_residues",
    "reduce_mod1",
]
