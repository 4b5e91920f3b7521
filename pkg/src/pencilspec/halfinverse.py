"""Half-interval inverse problem on ``(0, 2 pi)``.

Data: the Dirichlet spectrum ``{mu_k}`` of the pencil on ``(0, 2 pi)`` and
the coefficients on ``(pi, 2 pi)``.  With ``phi`` the solution on the known
half with ``phi(2 pi) = 0``, ``phi^[1](2 pi) = 1``, the eigenvalues are the
zeros of::

    phi^[1](pi, lam) S(pi, lam) - phi(pi, lam) S^[1](pi, lam)

so the left half is an instance of the subspectrum problem with
``f1 = -phi(pi, .)`` and ``f2 = phi^[1](pi, .)``.  ``sigma`` is taken
continuous at ``pi``; the recovered left ``sigma`` is in that gauge.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import conditions, inverse
from ._jsonio import decode_complex, encode_complex
from .coefficients import CoefficientPair
from .entire import SolverBacked, register_solver, unregister_solver
from .errors import ConditionError, InputError, NumericalError, PencilError
from .forward import Chain, Subspectrum, eigenvalues, integrate, reduce_mod1
from .kernels import BoundaryTriple
from .recovery import RecoveryConfig, recover_pq

log = logging.getLogger(__name__)

TAIL_SPREAD = 0.1
ROW_MARGIN = 0.75
_tags = itertools.count()


@dataclass(frozen=True, eq=False)
class HalfProblem:
    """Known right half, Dirichlet spectrum on the whole interval, right-half mean of ``p``."""

    known_half: CoefficientPair
    spectrum: Subspectrum
    known_mean: complex | None = None

    def __post_init__(self) -> None:
        a, b = self.known_half.interval
        if abs(a - np.pi) > 1e-12 or abs(b - 2 * np.pi) > 1e-12:
            raise InputError("known half must live on (pi, 2 pi)", "halfinverse.HalfProblem")
        if self.known_mean is None:
            object.__setattr__(self, "known_mean", self.known_half.mean_p())
        object.__setattr__(self, "known_mean", complex(self.known_mean))

    def to_json(self) -> dict:
        return {
            "known_half": self.known_half.to_json(),
            "spectrum": self.spectrum.to_json(),
            "known_mean": encode_complex(self.known_mean),
        }

    @classmethod
    def from_json(cls, obj) -> "HalfProblem":
        stage = "halfinverse.HalfProblem.from_json"
        if not isinstance(obj, dict) or "known_half" not in obj or "spectrum" not in obj:
            raise InputError("half problem needs 'known_half' and 'spectrum'", stage)
        mean = obj.get("known_mean")
        return cls(
            CoefficientPair.from_json(obj["known_half"]),
            Subspectrum.from_json(obj["spectrum"]),
            None if mean is None else decode_complex(mean, stage=stage),
        )


def phi_at_midpoint(known_half: CoefficientPair, lam, **kw):
    """``(phi(pi, lam), phi^[1](pi, lam))`` by backward integration from ``2 pi``."""
    ev = integrate(known_half, lam, 0.0, 1.0, "backward", **kw)
    return ev.y, ev.y1


class _PhiCache:
    """Joint memo of ``phi`` and ``phi^[1]``: one integration serves both."""

    def __init__(self, known_half: CoefficientPair, **kw):
        self.known_half = known_half
        self.kw = kw
        self.memo: dict[complex, tuple[complex, complex]] = {}

    def _fill(self, lam: np.ndarray) -> None:
        missing = [complex(z) for z in lam.ravel() if complex(z) not in self.memo]
        if missing:
            y, y1 = phi_at_midpoint(self.known_half, np.array(missing), **self.kw)
            self.memo.update(zip(missing, zip(np.atleast_1d(y), np.atleast_1d(y1))))

    def minus_phi(self, lam):
        lam = np.asarray(lam, dtype=complex)
        self._fill(lam)
        return np.array([-self.memo[complex(z)][0] for z in lam.ravel()]).reshape(lam.shape)

    def phi1(self, lam):
        lam = np.asarray(lam, dtype=complex)
        self._fill(lam)
        return np.array([self.memo[complex(z)][1] for z in lam.ravel()]).reshape(lam.shape)


class BoundaryFunctions:
    """Context manager registering ``f1 = -phi(pi, .)`` and ``f2 = phi^[1](pi, .)``."""

    def __init__(self, known_half: CoefficientPair, **kw):
        self.cache = _PhiCache(known_half, **kw)
        n = next(_tags)
        self.tags = (f"half.minus_phi.{n}", f"half.phi1.{n}")

    def __enter__(self):
        register_solver(self.tags[0], self.cache.minus_phi)
        register_solver(self.tags[1], self.cache.phi1)
        return SolverBacked(self.tags[0]), SolverBacked(self.tags[1])

    def __exit__(self, *exc):
        for t in self.tags:
            unregister_solver(t)
        return False


def default_indices(n: int) -> np.ndarray:
    """Labels ``-K..-1, 1..K`` for ``n = 2K`` sorted eigenvalues."""
    if n % 2:
        raise InputError("odd eigenvalue count; pass explicit indices", "halfinverse.estimate_omega0_mod1")
    K = n // 2
    return np.concatenate([np.arange(-K, 0), np.arange(1, K + 1)])


def estimate_omega0_mod1(
    spectrum: Subspectrum,
    known_mean: complex,
    indices=None,
    *,
    min_tail: int = 16,
    max_spread: float = TAIL_SPREAD,
) -> complex:
    """``omega0 mod 1`` from ``mu_k ~ k/2 + c`` with ``c = (omega0 + known_mean)/2``.

    ``c`` is the median over the last half of ``|k|`` of the symmetric pair
    averages ``(mu_k + mu_-k)/2`` (unpaired labels use ``mu_k - k/2``).
    """
    stage = "halfinverse.estimate_omega0_mod1"
    vals = np.asarray(spectrum.values, dtype=complex)
    idx = default_indices(vals.size) if indices is None else np.asarray(indices, int)
    if idx.size != vals.size:
        raise InputError("indices and spectrum differ in length", stage)
    by_k = dict(zip(idx.tolist(), vals))
    ks = sorted({abs(k) for k in by_k if k != 0})
    tail = ks[len(ks) // 2:]
    if len(tail) < min_tail:
        raise InputError(f"need at least {min_tail} tail labels, have {len(tail)}", stage)
    est = []
    for k in tail:
        if k in by_k and -k in by_k:
            est.append(0.5 * (by_k[k] + by_k[-k]))
        else:
            kk = k if k in by_k else -k
            est.append(by_k[kk] - kk / 2)
    est = np.array(est)
    spread = float(np.ptp(est.real) + np.ptp(est.imag))
    if spread > max_spread:
        raise NumericalError(f"tail estimates spread {spread:.3g} > {max_spread}", stage)
    c = complex(np.median(est.real), np.median(est.imag))
    return reduce_mod1(2 * c - complex(known_mean))


@dataclass
class HalfResult:
    pair: CoefficientPair
    omega0_mod1: complex
    omega0: complex
    shift: complex
    triple: BoundaryTriple
    weyl: inverse.WeylData
    report: conditions.ConditionReport | None = None
    notes: list = field(default_factory=list)


def solve_half(
    hp: HalfProblem,
    cfg: RecoveryConfig | None = None,
    T: int = 64,
    *,
    K: int = 24,
    indices=None,
    check: bool = True,
    shift_tol: float = 1e-4,
    return_result: bool = False,
):
    """Recover ``(p, sigma)`` on ``(0, pi)``.

    The spectrum should reach ``|mu| >= T + 3/4`` (labels up to ``2T + 2``).
    ``shift_tol`` bounds the probe spread of the sigma shift; interior steps
    of ``sigma`` limit the triple accuracy and need a looser bound.

    Stages: boundary functions from the known half, ``omega0 mod 1`` from the
    spectrum tail, moment solve for the triple, zeros and residues of the
    triple, least-squares recovery, parity fix, and the sigma shift.
    """
    cfg = cfg or RecoveryConfig()
    with BoundaryFunctions(hp.known_half) as (f1, f2):
        report = None
        if check:
            s_ok, s_min = conditions.check_S(hp.spectrum, f1, f2)
            a_ok, a_info = conditions.check_A(hp.spectrum)
            if not (s_ok and a_ok):
                raise ConditionError(
                    f"condition proxies fail: S={s_ok} (min {s_min:.3g}), A={a_ok} ({a_info})",
                    "halfinverse.solve_half",
                )
        omega_mod1 = estimate_omega0_mod1(hp.spectrum, hp.known_mean, indices)
        # rows come two per unit length; the margin keeps mu_{+-(2T+1)} inside
        limit = T + ROW_MARGIN
        if np.max(np.abs(hp.spectrum.values.real)) < limit:
            log.warning("spectrum ends below |mu| = %g; the moment system is underdetermined", limit)
        ms = inverse.build_moment_system(hp.spectrum, f1, f2, T, omega0_mod1=omega_mod1, max_abs=limit)
        u = inverse.solve_u(ms)
    bt = inverse.reconstruct_triple(u, omega_mod1)
    thetas, labels = inverse.locate_thetas(bt, K)
    wd = inverse.weyl_residues(bt, thetas, labels)
    rec = recover_pq(wd, cfg, return_result=True)
    omega = inverse.snap_omega0(rec.pair.mean_p(), omega_mod1)
    fixed = inverse.parity_fix(bt, omega)
    shift = inverse.sigma_shift(fixed, rec.pair, tol=shift_tol)
    pair = rec.pair.with_sigma_shift(shift)
    if not return_result:
        return pair
    return HalfResult(pair, omega_mod1, omega, shift, fixed, wd, report)


def composite_spectrum(left: CoefficientPair, right: CoefficientPair, K: int, **kw) -> Subspectrum:
    """Dirichlet eigenvalues ``mu_k``, ``0 < |k| <= K``, of the pair on ``(0, 2 pi)`` made of both halves."""
    full = Chain((left, right))
    c = complex(full.mean_p())
    ks = np.concatenate([np.arange(-K, 0), np.arange(1, K + 1)])
    edge = K / 2 + 0.25
    sub = eigenvalues(
        full, 0.0, 1.0, (c.real - edge, c.real + edge, c.imag - 3.0, c.imag + 3.0),
        hint_asymptotics=ks / 2 + c, **kw,
    )
    if len(sub) != 2 * K:
        raise NumericalError(f"found {len(sub)} eigenvalues, expected {2 * K}", "halfinverse.composite_spectrum")
    return sub


def verify(left: CoefficientPair, hp: HalfProblem) -> float:
    """Max distance between the given spectrum and the spectrum of the glued recovered pair."""
    K = len(hp.spectrum) // 2
    try:
        sub = composite_spectrum(left, hp.known_half, K)
    except PencilError as exc:
        log.warning("verification spectrum failed: %s", exc)
        return float("inf")
    return float(np.max(np.abs(sub.values - hp.spectrum.values)))


__all__ = [
    "BoundaryFunctions",
    "HalfProblem",
    "HalfResult",
    "composite_spectrum",
    "default_indices",
    "estimate_omega0_mod1",
    "phi_at_midpoint",
    "solve_half",
    "verify",
]
