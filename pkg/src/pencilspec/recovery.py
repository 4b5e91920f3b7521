"""Recovery of ``(p, sigma)`` from Weyl data by output least squares.

This module is a surrogate: it does not implement a constructive method for
the Weyl-data inverse problem.  It fits cosine-series coefficients of ``p``
and ``sigma`` by damped Gauss-Newton, with the forward solver in the loop,
to the residuals::

    S_cand(pi, theta_k)                                   (zeros of S)
    sqrt(rho_k) * (M_cand(theta_k) - M_k),  rho_k = 1/(1+|k|)^2

where ``M_cand(theta) = 1 / (S_cand^[1](pi, theta) * d/dlam S_cand(pi, theta))``
for simple zeros and the contour form for clustered ones.  ``sigma`` is
recovered in the gauge ``sigma(0) = 0``.  All coefficients are complex and
the residuals are holomorphic in them, so the Jacobian uses complex
finite differences.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coefficients import CoefficientPair
from .errors import InputError, NumericalError
from .forward import boundary_S
from .inverse import WeylData

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RecoveryConfig:
    """Settings of the Gauss-Newton fit.

    ``basis_dim`` cosine modes are used for ``p`` (``cos(jx)``, ``j < basis_dim``)
    and for ``sigma`` (``cos(jx) - 1``, ``1 <= j <= basis_dim``).  ``steps``
    optionally lists ``sigma`` step locations whose heights are also fitted;
    ``fit_step_locations`` additionally frees those locations.
    """

    basis_dim: int = 8
    max_iter: int = 30
    tikhonov: float = 0.0
    init: str = "asymptotic"
    grid_size: int = 257
    steps: tuple[float, ...] = ()
    fit_step_locations: bool = False
    shifts: tuple[int, ...] = (-2, -1, 0, 1, 2)
    misfit_tol: float = 1e-8
    strict: bool = False
    steps_per_pi: int | None = 2048

    def __post_init__(self) -> None:
        stage = "recovery.RecoveryConfig"
        if self.basis_dim < 1:
            raise InputError("basis_dim must be at least 1", stage)
        if self.tikhonov < 0:
            raise InputError("tikhonov must be non-negative", stage)
        if self.init not in ("zero", "asymptotic"):
            raise InputError(f"unknown init {self.init!r}", stage)
        if self.max_iter < 0:
            raise InputError("max_iter must be non-negative", stage)

    @classmethod
    def from_json(cls, obj) -> "RecoveryConfig":
        if not isinstance(obj, dict):
            raise InputError("recovery config must be a JSON object", "recovery.RecoveryConfig")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise InputError(f"unknown recovery settings {sorted(unknown)}", "recovery.RecoveryConfig")
        kw = dict(obj)
        for key in ("steps", "shifts"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw)

    def to_json(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


@dataclass
class RecoveryResult:
    pair: CoefficientPair
    params: np.ndarray
    misfit: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


class _Model:
    """Map from parameter vectors to coefficient pairs."""

    def __init__(self, cfg: RecoveryConfig, interval=(0.0, np.pi)):
        self.cfg = cfg
        self.interval = interval
        self.x = np.linspace(interval[0], interval[1], cfg.grid_size)
        B = cfg.basis_dim
        xi = (self.x - interval[0]) * np.pi / (interval[1] - interval[0])
        self.p_basis = np.cos(np.outer(np.arange(B), xi))
        self.s_basis = np.cos(np.outer(np.arange(1, B + 1), xi)) - 1.0
        self.n_steps = len(cfg.steps)

    @property
    def size(self) -> int:
        n = 2 * self.cfg.basis_dim + self.n_steps
        return n + (self.n_steps if self.cfg.fit_step_locations else 0)

    def initial(self, omega0: complex) -> np.ndarray:
        x0 = np.zeros(self.size, complex)
        x0[0] = omega0
        if self.cfg.fit_step_locations:
            x0[2 * self.cfg.basis_dim + self.n_steps:] = self.cfg.steps
        return x0

    def pair(self, params: np.ndarray) -> CoefficientPair:
        B = self.cfg.basis_dim
        p = params[:B] @ self.p_basis
        s = params[B:2 * B] @ self.s_basis
        heights = params[2 * B:2 * B + self.n_steps]
        if self.cfg.fit_step_locations:
            locs = params[2 * B + self.n_steps:].real
        else:
            locs = np.asarray(self.cfg.steps, float)
        a, b = self.interval
        locs = np.clip(locs, a + 1e-6 * (b - a), b - 1e-6 * (b - a))
        return CoefficientPair(self.interval, p, s, tuple(zip(locs, heights)))


def _weights(wd: WeylData) -> np.ndarray:
    return 1.0 / (1.0 + np.abs(wd.indices)) ** 2


def _candidate_residuals(cp: CoefficientPair, wd: WeylData, steps_per_pi) -> np.ndarray:
    """Residual vector of one candidate against the Weyl data."""
    kw = {"steps_per_pi": steps_per_pi} if steps_per_pi else {}
    groups = wd.groups()
    thetas = np.array([g[1] for g in groups])
    ev = boundary_S(cp, thetas, derivative=True, **kw)
    rs = []
    rm = []
    sqrt_rho = np.sqrt(_weights(wd))
    for gi, (start, theta, mult) in enumerate(groups):
        if mult == 1:
            rs.append(ev.y[gi])
            if wd.s1_known and np.isfinite(wd.residues[start]):
                m_cand = 1.0 / (ev.y1[gi] * ev.dy[gi])
                rm.append(sqrt_rho[start] * (m_cand - wd.residues[start]))
            continue
        # clustered zero: values of the candidate on a small circle
        radius = 0.1
        z = theta + radius * np.exp(2j * np.pi * np.arange(32) / 32)
        cz = boundary_S(cp, z, **kw)
        coef = np.fft.fft(cz.y) / 32 * radius ** -np.arange(32.0)
        rs.extend(coef[:mult])  # S^<nu>(theta) = 0 for nu < mult
        if not wd.s1_known:
            continue
        s1 = ev.y1[gi]
        for nu in range(mult):
            if not np.isfinite(wd.residues[start + nu]):
                continue
            w = z - theta
            m_cand = np.mean(w ** (nu + 1) / cz.y) / s1
            rm.append(sqrt_rho[start + nu] * (m_cand - wd.residues[start + nu]))
    return np.concatenate([np.asarray(rs, complex), np.asarray(rm, complex)])


def cesaro_omega0(thetas: Sequence[complex], indices: Sequence[int]) -> complex:
    """Cesaro mean of ``theta_k - k`` ordered by ``|k|``."""
    thetas = np.asarray(thetas, complex)
    indices = np.asarray(indices)
    mask = indices != 0
    order = np.argsort(np.abs(indices[mask]), kind="stable")
    d = (thetas[mask] - indices[mask])[order]
    if d.size == 0:
        raise InputError("no labelled thetas for the asymptotic estimate", "recovery.cesaro_omega0")
    partial = np.cumsum(d) / np.arange(1, d.size + 1)
    return complex(np.mean(partial))


def _gauss_newton(model: _Model, wd: WeylData, x0: np.ndarray, cfg: RecoveryConfig):
    tik = cfg.tikhonov

    def resid(x):
        return _candidate_residuals(model.pair(x), wd, cfg.steps_per_pi)

    def objective(r, x):
        return float(np.vdot(r, r).real + tik * np.vdot(x, x).real)

    x = x0.copy()
    r = resid(x)
    f = objective(r, x)
    history = [f]
    mu = 1e-3
    it = 0
    for it in range(1, cfg.max_iter + 1):
        h = 1e-6
        J = np.empty((r.size, x.size), complex)
        for j in range(x.size):
            xp = x.copy()
            xp[j] += h
            J[:, j] = (resid(xp) - r) / h
        if not np.all(np.isfinite(J)):
            raise NumericalError("non-finite Jacobian", "recovery.recover_pq")
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[0] == 0 or sv[-1] < 1e-14 * sv[0]:
            log.warning("Jacobian nearly rank deficient (sigma_min/sigma_max = %.2e)", sv[-1] / max(sv[0], 1e-300))
        accepted = False
        for _ in range(12):
            # Levenberg damping acts on the step, Tikhonov on the parameters
            rows = [J, math.sqrt(mu) * sv[0] * np.eye(x.size)]
            rhs = [-r, np.zeros(x.size)]
            if tik:
                rows.append(math.sqrt(tik) * np.eye(x.size))
                rhs.append(-math.sqrt(tik) * x)
            A, b = np.vstack(rows), np.concatenate(rhs)
            step, *_ = np.linalg.lstsq(A, b, rcond=None)
            xn = x + step
            try:
                rn = resid(xn)
            except NumericalError:
                mu *= 10
                continue
            fn = objective(rn, xn)
            if fn <= f:
                x, r, f = xn, rn, fn
                mu = max(mu / 10, 1e-12)
                accepted = True
                break
            mu *= 10
        history.append(f)
        if not accepted:
            break
        if abs(history[-2] - f) <= 1e-12 * max(history[-2], 1e-300) or f < cfg.misfit_tol * 1e-6:
            break
        if np.linalg.norm(step) < 1e-10 * max(1.0, np.linalg.norm(x)):
            break
    return x, f, it, history


def recover_pq(wd: WeylData, cfg: RecoveryConfig | None = None, *, return_result: bool = False,
               interval=(0.0, np.pi)):
    """Fit ``(p, sigma)`` on ``interval`` to Weyl data.

    With ``init="asymptotic"`` the constant mode of ``p`` starts from the
    Cesaro estimate of ``omega0``; since theta labels determine ``omega0``
    only up to an integer, every shift in ``cfg.shifts`` is tried and the
    lowest misfit wins.  ``init="zero"`` starts from ``p = 0``.
    """
    cfg = cfg or RecoveryConfig()
    stage = "recovery.recover_pq"
    model = _Model(cfg, interval)
    usable = wd.thetas.size * (2 if wd.s1_known else 1)
    if usable < 2 * cfg.basis_dim:
        raise InputError(
            f"{usable} data rows are too few for basis_dim {cfg.basis_dim} (need {2 * cfg.basis_dim})", stage
        )
    if not wd.s1_known:
        log.warning("residues unavailable; fitting zeros of S only")
    if cfg.init == "zero":
        starts = [0j]
    else:
        base = cesaro_omega0(wd.thetas, wd.indices)
        starts = [base + s for s in sorted(cfg.shifts, key=abs)]
    best = None
    for omega in starts:
        try:
            out = _gauss_newton(model, wd, model.initial(omega), cfg)
        except NumericalError as exc:
            log.info("start omega0=%.4g failed: %s", omega, exc)
            continue
        log.debug("start omega0=%s: misfit %.3e after %d iterations", omega, out[1], out[2])
        if best is None or out[1] < best[1]:
            best = out
        if best[1] <= cfg.misfit_tol:
            break
    if best is None:
        raise NumericalError("every Gauss-Newton start failed", stage)
    x, f, it, history = best
    converged = f <= cfg.misfit_tol
    if not converged:
        msg = f"misfit {f:.3e} above {cfg.misfit_tol:g} after {it} iterations"
        if cfg.strict:
            raise NumericalError(msg, stage)
        log.warning(msg)
    pair = model.pair(x)
    if return_result:
        return RecoveryResult(pair, x, f, it, converged, history)
    return pair


__all__ = ["RecoveryConfig", "RecoveryResult", "cesaro_omega0", "recover_pq"]
