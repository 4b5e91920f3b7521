"""Forward problem: endpoint values, characteristic function, eigenvalues.

Integration uses classical RK4 on a fixed mesh aligned with every coefficient
grid node and every sigma step, followed by one Richardson extrapolation
against the mesh with all steps halved.  Since ``y`` and ``y1`` are both
continuous across sigma steps, alignment is the only treatment jumps need.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _integrator
from ._jsonio import decode_array, decode_complex, encode_array, encode_complex
from .coefficients import CoefficientPair
from .entire import as_expr
from .errors import InputError, NumericalError

log = logging.getLogger(__name__)

STEPS_PER_PI = 4096
RICHARDSON = True
CLUSTER_TOL = 1e-7
_GOLDEN = 0.5 * (math.sqrt(5.0) - 1.0)


# -- data types ---------------------------------------------------------------

@dataclass(frozen=True)
class EndpointValues:
    """Solution value ``y`` and quasi-derivative ``y1`` at the final endpoint.

    ``dy`` and ``dy1`` hold lambda-derivatives when requested.
    """

    y: np.ndarray | complex
    y1: np.ndarray | complex
    dy: np.ndarray | complex | None = None
    dy1: np.ndarray | complex | None = None


def reduce_mod1(z: complex) -> complex:
    z = complex(z)
    return complex(z.real - math.floor(z.real), z.imag)


@dataclass(frozen=True, eq=False)
class Subspectrum:
    """Eigenvalues with multiplicity by repetition, plus ``omega0 mod 1``."""

    values: np.ndarray
    omega0_mod1: complex = 0j

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=complex).ravel()
        seen: set[complex] = set()
        prev = None
        for v in vals:
            v = complex(v)
            if v != prev and v in seen:
                raise InputError(
                    f"equal values must be adjacent (value {v} repeats non-adjacently)",
                    "forward.Subspectrum",
                )
            seen.add(v)
            prev = v
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "omega0_mod1", reduce_mod1(self.omega0_mod1))

    def __len__(self) -> int:
        return self.values.size

    def groups(self) -> list[tuple[int, complex, int]]:
        """``(start index, value, multiplicity)`` for each distinct value."""
        out = []
        i = 0
        vals = self.values
        while i < vals.size:
            j = i
            while j + 1 < vals.size and vals[j + 1] == vals[i]:
                j += 1
            out.append((i, complex(vals[i]), j - i + 1))
            i = j + 1
        return out

    def to_json(self) -> dict:
        return {"values": encode_array(self.values), "omega0_mod1": encode_complex(self.omega0_mod1)}

    @classmethod
    def from_json(cls, obj) -> "Subspectrum":
        stage = "forward.Subspectrum.from_json"
        if not isinstance(obj, dict) or "values" not in obj:
            raise InputError("subspectrum object needs a 'values' list", stage)
        return cls(decode_array(obj["values"], stage=stage), decode_complex(obj.get("omega0_mod1", 0.0), stage=stage))


# -- mesh ---------------------------------------------------------------------

def _mesh(cp: CoefficientPair, steps_per_pi: int, direction: str):
    key = ("mesh", steps_per_pi, direction)
    cached = cp._cache.get(key)
    if cached is not None:
        return cached
    a, b = cp.interval
    tol = 1e-12 * max(1.0, abs(a), abs(b))
    jump_x = np.array([x0 for x0, _ in cp.jumps], dtype=float)
    grid = cp.grid
    # grid nodes within tol of a jump are replaced by the jump location
    if jump_x.size:
        keep = np.min(np.abs(grid[:, None] - jump_x[None, :]), axis=1) > tol
        keep[0] = keep[-1] = True
        nodes = np.unique(np.concatenate([grid[keep], jump_x]))
    else:
        nodes = grid
    h_target = np.pi / steps_per_pi
    pieces = np.diff(nodes)
    counts = np.maximum(1, np.ceil(pieces / h_target - 1e-9).astype(int))
    xs = np.concatenate(
        [nodes[i] + pieces[i] * np.arange(counts[i]) / counts[i] for i in range(pieces.size)] + [nodes[-1:]]
    )
    h = np.diff(xs)
    if np.any(h <= tol):
        raise NumericalError("step-size underflow while building the mesh", "forward.integrate")
    left, right = xs[:-1], xs[1:]
    pa, pb = cp.p(left), cp.p(right)
    sa = cp.sigma(left)
    sb = cp.sigma_left(right)
    if direction == "backward":
        h, pa, pb, sa, sb = -h[::-1], pb[::-1], pa[::-1], sb[::-1], sa[::-1]
    arrays = tuple(np.ascontiguousarray(v) for v in (h, pa, pb, sa, sb))
    cp._cache[key] = arrays
    return arrays


def _halve(h, pa, pb, sa, sb):
    n = h.size
    hh = np.repeat(h / 2, 2)
    pm = 0.5 * (pa + pb)
    sm = 0.5 * (sa + sb)
    pa2 = np.empty(2 * n, complex)
    pb2 = np.empty(2 * n, complex)
    sa2 = np.empty(2 * n, complex)
    sb2 = np.empty(2 * n, complex)
    pa2[0::2], pa2[1::2] = pa, pm
    pb2[0::2], pb2[1::2] = pm, pb
    sa2[0::2], sa2[1::2] = sa, sm
    sb2[0::2], sb2[1::2] = sm, sb
    return hh, pa2, pb2, sa2, sb2


# -- piecewise pairs ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Chain:
    """Contiguous pairs integrated one after another.

    ``y`` and ``y' = sigma y + y^[1]`` are continuous at every junction, so
    ``q`` carries no delta there while ``p`` may jump.  Unlike ``glue`` this
    keeps a jump of ``p`` at a junction exact.
    """

    pieces: tuple

    def __post_init__(self) -> None:
        pieces = tuple(self.pieces)
        if not pieces:
            raise InputError("a chain needs at least one piece", "forward.Chain")
        for left, right in zip(pieces, pieces[1:]):
            if abs(left.b - right.a) > 1e-12 * max(1.0, abs(left.b)):
                raise InputError("chain pieces must be contiguous", "forward.Chain")
        object.__setattr__(self, "pieces", pieces)

    @property
    def interval(self) -> tuple[float, float]:
        return (self.pieces[0].a, self.pieces[-1].b)

    @property
    def length(self) -> float:
        return self.pieces[-1].b - self.pieces[0].a

    def mean_p(self) -> complex:
        return sum(cp.mean_p() * cp.length for cp in self.pieces) / self.length


def _integrate_chain(chain: Chain, lam, y0, y10, direction, *, derivative=False, dy0=0.0, dy10=0.0, **kw):
    pieces = chain.pieces if direction == "forward" else chain.pieces[::-1]
    y, y1, dy, dy1 = y0, y10, dy0, dy10
    ev = None
    for i, cp in enumerate(pieces):
        if i:
            prev = pieces[i - 1]
            if direction == "forward":
                jump = prev.sigma_left(prev.b) - cp.sigma(cp.a)
            else:
                jump = prev.sigma(prev.a) - cp.sigma_left(cp.b)
            # y' is continuous: sigma_prev y + y1_prev = sigma_next y + y1_next
            y1 = y1 + jump * y
            dy1 = dy1 + jump * dy
        ev = integrate(cp, lam, y, y1, direction, derivative=derivative, dy0=dy, dy10=dy1, **kw)
        y, y1 = ev.y, ev.y1
        if derivative:
            dy, dy1 = ev.dy, ev.dy1
    return ev


# -- integration --------------------------------------------------------------

def integrate(
    cp: CoefficientPair,
    lam,
    y0=0.0,
    y10=1.0,
    direction: str = "forward",
    *,
    derivative: bool = False,
    steps_per_pi: int | None = None,
    richardson: bool | None = None,
    dy0=0.0,
    dy10=0.0,
) -> EndpointValues:
    """Integrate the regularized system across the whole interval.

    ``direction="forward"`` starts at ``a`` and returns values at ``b``;
    ``"backward"`` starts at ``b`` and returns values at ``a``.  ``lam``,
    ``y0`` and ``y10`` broadcast against each other.  ``dy0, dy10`` are the
    initial lambda-derivatives, used with ``derivative=True``.  ``cp`` may be
    a :class:`Chain`.
    """
    if direction not in ("forward", "backward"):
        raise InputError(f"unknown direction {direction!r}", "forward.integrate")
    if isinstance(cp, Chain):
        return _integrate_chain(
            cp, lam, y0, y10, direction, derivative=derivative, dy0=dy0, dy10=dy10,
            steps_per_pi=steps_per_pi, richardson=richardson,
        )
    steps = steps_per_pi or STEPS_PER_PI
    rich = RICHARDSON if richardson is None else richardson
    lam_arr, y0_arr, y10_arr, d0_arr, d10_arr = np.broadcast_arrays(
        *(np.asarray(v, dtype=complex) for v in (lam, y0, y10, dy0, dy10))
    )
    shape = lam_arr.shape
    if not np.all(np.isfinite(lam_arr)):
        raise InputError("lambda must be finite", "forward.integrate")
    flat = [np.ascontiguousarray(v.ravel()) for v in (lam_arr, y0_arr, y10_arr, d0_arr, d10_arr)]
    mesh = _mesh(cp, steps, direction)
    out = _integrator.propagate(flat[0], *mesh, *flat[1:], derivative)
    if rich:
        key = ("mesh2", steps, direction)
        fine = cp._cache.get(key)
        if fine is None:
            fine = cp._cache[key] = tuple(np.ascontiguousarray(v) for v in _halve(*mesh))
        out2 = _integrator.propagate(flat[0], *fine, *flat[1:], derivative)
        out = (16.0 * out2 - out) / 15.0
    if not np.all(np.isfinite(out[:, :2])):
        raise NumericalError("integration overflow", "forward.integrate")

    def pick(col):
        v = out[:, col].reshape(shape)
        return v[()] if v.ndim == 0 else v

    if derivative:
        return EndpointValues(pick(0), pick(1), pick(2), pick(3))
    return EndpointValues(pick(0), pick(1))


def boundary_S(cp: CoefficientPair, lam, **kw) -> EndpointValues:
    """``S(b, lam)`` and ``S^[1](b, lam)`` with ``S(a) = 0``, ``S^[1](a) = 1``."""
    return integrate(cp, lam, 0.0, 1.0, **kw)


def boundary_C(cp: CoefficientPair, lam, **kw) -> EndpointValues:
    """``C(b, lam)`` and ``C^[1](b, lam)`` with ``C(a) = 1``, ``C^[1](a) = 0``."""
    return integrate(cp, lam, 1.0, 0.0, **kw)


def wronskian(cp: CoefficientPair, lam, **kw):
    """``C S^[1] - C^[1] S`` at the right endpoint; equals 1 identically."""
    s = boundary_S(cp, lam, **kw)
    c = boundary_C(cp, lam, **kw)
    return c.y * s.y1 - c.y1 * s.y


def char_fn(cp: CoefficientPair, f1, f2, lam, **kw):
    """``Delta(lam) = f1(lam) S^[1](pi, lam) + f2(lam) S(pi, lam)``."""
    f1, f2 = as_expr(f1), as_expr(f2)
    s = boundary_S(cp, lam, **kw)
    return f1(lam) * s.y1 + f2(lam) * s.y


def char_fn_with_derivative(cp: CoefficientPair, f1, f2, lam, **kw):
    f1, f2 = as_expr(f1), as_expr(f2)
    lam = np.asarray(lam, dtype=complex)
    s = boundary_S(cp, lam, derivative=True, **kw)
    t1 = f1.taylor(lam, 1)
    t2 = f2.taylor(lam, 1)
    delta = t1[0] * s.y1 + t2[0] * s.y
    ddelta = t1[1] * s.y1 + t1[0] * s.dy1 + t2[1] * s.y + t2[0] * s.dy
    return delta, ddelta


# -- eigenvalue search ----------------------------------------------------------

class _LogDerivative:
    """Batch evaluator of ``F'/F`` with a running evaluation count.

    ``fn(lam)`` returns the pair ``(F(lam), F'(lam))``.
    """

    def __init__(self, fn):
        self.fn = fn
        self.evaluations = 0

    def values(self, lam):
        lam = np.asarray(lam, dtype=complex)
        self.evaluations += lam.size
        return self.fn(lam)

    def __call__(self, lam):
        d, dd = self.values(lam)
        with np.errstate(divide="ignore", invalid="ignore"):
            return dd / d


def _edge_integrals(logd: _LogDerivative, starts, ends, tol: float, max_level: int = 11):
    """Integrals of ``g`` and ``lam * g`` along straight segments, ``g = Delta'/Delta``.

    Composite trapezoid with repeated halving; the last two levels are
    combined by one Richardson step.  The raw difference between levels must
    also be small: near a zero the trapezoid error is not yet ``O(h^2)`` and a
    Richardson step alone can agree with itself by accident.
    Returns ``(I0, I1, converged)``.
    """
    starts = np.asarray(starts, dtype=complex)
    ends = np.asarray(ends, dtype=complex)
    m = starts.size
    lengths = np.abs(ends - starts)
    n0 = np.maximum(8, np.ceil(6 * lengths).astype(int))
    # level 0 nodes
    t_nodes = [np.linspace(0.0, 1.0, n + 1) for n in n0]
    pts = np.concatenate([starts[i] + (ends[i] - starts[i]) * t_nodes[i] for i in range(m)])
    vals = logd(pts)
    offs = np.concatenate([[0], np.cumsum(n0 + 1)])
    samples = [vals[offs[i]:offs[i + 1]] for i in range(m)]
    zs = [pts[offs[i]:offs[i + 1]] for i in range(m)]
    dl = ends - starts
    prev0 = np.array([np.trapezoid(samples[i], dx=1.0 / n0[i]) * dl[i] for i in range(m)])
    prev1 = np.array([np.trapezoid(samples[i] * zs[i], dx=1.0 / n0[i]) * dl[i] for i in range(m)])
    best0, best1 = prev0.copy(), prev1.copy()
    done = np.zeros(m, bool)
    n = n0.copy()
    for _ in range(max_level):
        active = np.flatnonzero(~done)
        if active.size == 0:
            break
        new_pts = []
        for i in active:
            tm = (np.arange(n[i]) + 0.5) / n[i]
            new_pts.append(starts[i] + dl[i] * tm)
        vals = logd(np.concatenate(new_pts))
        pos = 0
        for i, npts in zip(active, new_pts):
            v = vals[pos:pos + npts.size]
            pos += npts.size
            merged = np.empty(2 * n[i] + 1, complex)
            mz = np.empty(2 * n[i] + 1, complex)
            merged[0::2], merged[1::2] = samples[i], v
            mz[0::2], mz[1::2] = zs[i], npts
            samples[i], zs[i] = merged, mz
            n[i] *= 2
            cur0 = np.trapezoid(merged, dx=1.0 / n[i]) * dl[i]
            cur1 = np.trapezoid(merged * mz, dx=1.0 / n[i]) * dl[i]
            if np.isfinite(cur0) and np.isfinite(prev0[i]):
                rich0 = cur0 + (cur0 - prev0[i]) / 3.0
                rich1 = cur1 + (cur1 - prev1[i]) / 3.0
                if abs(rich0 - best0[i]) < tol and abs(cur0 - prev0[i]) < 5 * tol:
                    done[i] = True
                best0[i], best1[i] = rich0, rich1
            prev0[i], prev1[i] = cur0, cur1
    return best0, best1, done


@dataclass
class _Box:
    x0: float
    x1: float
    y0: float
    y1: float
    wind: complex = 0j  # contour integral of Delta'/Delta / (2 pi i)
    first: complex = 0j  # contour integral of lam Delta'/Delta / (2 pi i)

    @property
    def size(self) -> float:
        return max(self.x1 - self.x0, self.y1 - self.y0)

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return (self.x0 - margin <= z.real <= self.x1 + margin) and (self.y0 - margin <= z.imag <= self.y1 + margin)


def _box_integrals(logd, boxes: Sequence[_Box], tol):
    starts, ends = [], []
    for bx in boxes:
        c = [complex(bx.x0, bx.y0), complex(bx.x1, bx.y0), complex(bx.x1, bx.y1), complex(bx.x0, bx.y1)]
        for k in range(4):
            starts.append(c[k])
            ends.append(c[(k + 1) % 4])
    i0, i1, ok = _edge_integrals(logd, starts, ends, tol)
    out = []
    for j, bx in enumerate(boxes):
        sl = slice(4 * j, 4 * j + 4)
        out.append((i0[sl].sum() / (2j * np.pi), i1[sl].sum() / (2j * np.pi), bool(ok[sl].all())))
    return out


def _near_integer(w: complex, tol: float = 0.05) -> bool:
    return abs(w.real - round(w.real)) < tol and abs(w.imag) < tol


def _strip_scan(logd, box, width, tol):
    """Winding numbers and first moments of vertical strips tiling ``box``."""
    x0, x1, y0, y1 = box
    nstrip = max(1, int(math.ceil((x1 - x0) / width)))
    # interior cuts at an irrational offset keep them off lattice-like root sets
    cuts = x0 + (x1 - x0) * (np.arange(1, nstrip) - 0.5 + _GOLDEN) / nstrip
    xs = np.concatenate([[x0], cuts, [x1]])
    # vertical edges (upward) and horizontal edges (rightward)
    v_start = xs + 1j * y0
    v_end = xs + 1j * y1
    b_start = xs[:-1] + 1j * y0
    b_end = xs[1:] + 1j * y0
    t_start = xs[:-1] + 1j * y1
    t_end = xs[1:] + 1j * y1
    starts = np.concatenate([v_start, b_start, t_start])
    ends = np.concatenate([v_end, b_end, t_end])
    i0, i1, ok = _edge_integrals(logd, starts, ends, tol)
    nv = xs.size
    V0, B0, T0 = i0[:nv], i0[nv:nv + nstrip], i0[nv + nstrip:]
    V1, B1, T1 = i1[:nv], i1[nv:nv + nstrip], i1[nv + nstrip:]
    okv, okb, okt = ok[:nv], ok[nv:nv + nstrip], ok[nv + nstrip:]
    boxes = []
    for j in range(nstrip):
        w = (B0[j] + V0[j + 1] - T0[j] - V0[j]) / (2j * np.pi)
        f = (B1[j] + V1[j + 1] - T1[j] - V1[j]) / (2j * np.pi)
        good = okv[j] and okv[j + 1] and okb[j] and okt[j]
        boxes.append((_Box(xs[j], xs[j + 1], y0, y1, w, f), good))
    return boxes


def _split(logd, bx: _Box, tol, depth=0, min_size=1e-4):
    """Recursively isolate zeros; returns list of (estimate, multiplicity, box)."""
    m = int(round(bx.wind.real))
    if m <= 0:
        return []
    if m == 1:
        return [(bx.first, 1, bx)]
    if bx.size < min_size or depth > 40:
        return [(bx.first / m, m, bx)]
    # off-center cut avoids symmetric root placements landing on the cut
    frac = 0.5 + 0.0137
    if bx.x1 - bx.x0 >= bx.y1 - bx.y0:
        xc = bx.x0 + frac * (bx.x1 - bx.x0)
        a = _Box(bx.x0, xc, bx.y0, bx.y1)
        b = _Box(xc, bx.x1, bx.y0, bx.y1)
    else:
        yc = bx.y0 + frac * (bx.y1 - bx.y0)
        a = _Box(bx.x0, bx.x1, bx.y0, yc)
        b = _Box(bx.x0, bx.x1, yc, bx.y1)
    (w, f, ok), = _box_integrals(logd, [a], tol)
    if not ok or not _near_integer(w):
        raise NumericalError("winding number did not settle on a sub-box", "forward.eigenvalues")
    a.wind, a.first = complex(round(w.real)), f
    b.wind, b.first = bx.wind - a.wind, bx.first - f
    return _split(logd, a, tol, depth + 1, min_size) + _split(logd, b, tol, depth + 1, min_size)


def _newton(logd: _LogDerivative, z0: np.ndarray, mult: np.ndarray, max_iter: int = 40):
    z = np.array(z0, dtype=complex)
    active = np.ones(z.size, bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        d, dd = logd.values(z[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            step = mult[idx] * d / dd
        bad = ~np.isfinite(step)
        step[bad] = 0.0
        z[idx] -= step
        conv = (np.abs(step) <= 1e-14 * np.maximum(1.0, np.abs(z[idx]))) | bad
        active[idx[conv]] = False
    return z, ~active


def cluster_roots(roots: Iterable[tuple[complex, int]], tol: float = CLUSTER_TOL) -> list[tuple[complex, int]]:
    """Merge roots closer than ``tol * max(1, |z|)`` into one multiple root."""
    items = sorted(((complex(z), int(m)) for z, m in roots), key=lambda t: (t[0].real, t[0].imag))
    merged: list[list] = []
    for z, m in items:
        for entry in merged:
            if abs(entry[0] - z) <= tol * max(1.0, abs(z)):
                tot = entry[1] + m
                entry[0] = (entry[0] * entry[1] + z * m) / tot
                entry[1] = tot
                break
        else:
            merged.append([z, m])
    merged.sort(key=lambda t: (round(t[0].real, 9), t[0].imag))
    return [(z, m) for z, m in merged]


def _box_count(logd, box, tol):
    x0, x1, y0, y1 = box
    (w, _f, ok), = _box_integrals(logd, [_Box(x0, x1, y0, y1)], tol)
    return w, ok


def eigenvalues(
    cp: CoefficientPair,
    f1=0.0,
    f2=1.0,
    search_box: Sequence[float] = (-10.0, 10.0, -5.0, 5.0),
    hint_asymptotics: Sequence[complex] | None = None,
    *,
    cell_width: float | None = None,
    tol: float = 2e-2,
    cluster_tol: float = CLUSTER_TOL,
    max_jitter: int = 5,
    **kw,
) -> Subspectrum:
    """All zeros of ``Delta`` inside ``search_box = (re0, re1, im0, im1)``.

    Zeros are counted by the argument principle on vertical strips, isolated
    by bisection, and polished by Newton's method (multiplicity-weighted for
    clusters).  With ``hint_asymptotics`` the Newton iteration is seeded
    directly and the total count is checked against the box winding number;
    on mismatch the full search runs.
    """
    f1, f2 = as_expr(f1), as_expr(f2)
    x0, x1, y0, y1 = (float(v) for v in search_box)
    if not (x0 < x1 and y0 < y1):
        raise InputError("search box must have positive width and height", "forward.eigenvalues")
    coarse = _counting_options((x0, x1, y0, y1), cp.length, kw)
    roots = find_zeros(
        lambda z: char_fn_with_derivative(cp, f1, f2, z, **kw),
        (x0, x1, y0, y1),
        hint_asymptotics,
        counting_fn=lambda z: char_fn_with_derivative(cp, f1, f2, z, **coarse),
        cell_width=cell_width or 0.5 * np.pi / cp.length,
        tol=tol,
        cluster_tol=cluster_tol,
        max_jitter=max_jitter,
    )
    values = [z for z, m in roots for _ in range(m)]
    omega = reduce_mod1(cp.mean_p() * cp.length / np.pi)
    return Subspectrum(np.array(values, dtype=complex), omega)


def find_zeros(
    fn,
    box: Sequence[float],
    hints: Sequence[complex] | None = None,
    *,
    counting_fn=None,
    cell_width: float = 0.5,
    tol: float = 2e-2,
    cluster_tol: float = CLUSTER_TOL,
    max_jitter: int = 5,
) -> list[tuple[complex, int]]:
    """Zeros ``(z, multiplicity)`` of an analytic ``F`` inside ``box``.

    ``fn(lam)`` returns ``(F, F')`` for an array of points; ``counting_fn``
    is an optional cheaper version used only for winding numbers.  Newton
    runs from ``hints`` first and is accepted when the root count matches
    the box winding number.
    """
    x0, x1, y0, y1 = (float(v) for v in box)
    logd = _LogDerivative(fn)
    counter = _LogDerivative(counting_fn or fn)
    roots = None
    if hints is not None:
        roots = _hinted(logd, counter, np.asarray(hints, dtype=complex), (x0, x1, y0, y1), tol, cluster_tol)
    if roots is None:
        roots = _full_search(logd, counter, (x0, x1, y0, y1), cell_width, tol, cluster_tol, max_jitter)
    log.debug(
        "find_zeros: %d roots, %d counting + %d polishing evaluations",
        sum(m for _, m in roots), counter.evaluations, logd.evaluations,
    )
    return roots


def _counting_options(box, length, kw):
    """Coarse integration settings for winding numbers.

    Winding numbers only need ``Delta`` to a relative accuracy well below one,
    so the mesh is sized to keep ``|lam| h`` near 0.1.
    """
    if "steps_per_pi" in kw or "richardson" in kw:
        return kw
    radius = max(abs(complex(box[i], box[j])) for i in (0, 1) for j in (2, 3))
    steps = int(2 ** math.ceil(math.log2(max(256.0, 32.0 * radius * length / np.pi))))
    if steps >= STEPS_PER_PI:
        return kw
    return {**kw, "steps_per_pi": steps, "richardson": False}


def _hinted(logd, counter, seeds, box, tol, cluster_tol):
    x0, x1, y0, y1 = box
    z, ok = _newton(logd, seeds, np.ones(seeds.size))
    found = [(zz, 1) for zz, good in zip(z, ok) if good and x0 <= zz.real <= x1 and y0 <= zz.imag <= y1]
    found = cluster_roots(found, cluster_tol)
    found = [(zz, 1) for zz, _ in found]  # duplicates from neighbouring seeds
    w, good = _box_count(counter, box, tol)
    if good and _near_integer(w) and int(round(w.real)) == len(found):
        return found
    log.info("hinted search found %d roots, box winding %.3f; running full search", len(found), w.real)
    return None


def _full_search(logd, counter, box, width, tol, cluster_tol, max_jitter):
    x0, x1, y0, y1 = box
    span = x1 - x0
    for attempt in range(max_jitter + 1):
        jit = 0.0 if attempt == 0 else 1e-3 * attempt * (1 + 0.37 * attempt)
        bx = (x0 - jit * span * 1e-2, x1 + jit * span * 1e-2, y0 - jit, y1 + jit)
        try:
            strips = _strip_scan(counter, bx, width * (1 + 0.01 * attempt), tol)
            if not all(good and _near_integer(s.wind) for s, good in strips):
                raise NumericalError("non-integer winding on a strip", "forward.eigenvalues")
            cand = []
            for s, _ in strips:
                s.wind = complex(round(s.wind.real))
                cand.extend(_split(counter, s, tol))
        except NumericalError as exc:
            log.info("eigenvalue search attempt %d failed (%s); jittering box", attempt, exc)
            continue
        if not cand:
            return []
        est = np.array([c[0] for c in cand])
        mult = np.array([c[1] for c in cand], dtype=float)
        z, ok = _newton(logd, est, mult)
        escaped = [not (good and b.contains(zz, max(0.05 * b.size, 1e-6))) for zz, good, (_e, _m, b) in zip(z, ok, cand)]
        if any(escaped):
            # a wrong winding number leaves a box whose moment estimate is not a zero
            log.info("eigenvalue search attempt %d: %d Newton polishes left their box; jittering box",
                     attempt, sum(escaped))
            continue
        roots = cluster_roots([(zz, c[1]) for zz, c in zip(z, cand)], cluster_tol)
        return [(zz, m) for zz, m in roots if x0 <= zz.real <= x1 and y0 <= zz.imag <= y1]
    raise NumericalError("no consistent zero set after repeated jitter", "forward.eigenvalues")
