"""Command-line front end.

Every command reads JSON, writes JSON or CSV, and leaves a run manifest
next to its primary output.  Exit codes: 0 success, 2 invalid input,
3 numerical failure, 4 failed condition check.  Error messages carry the
``module.operation`` tag of the stage that raised them.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, conditions, entire, halfinverse, inverse, kernels
from ._jsonio import dump_json, file_digest, load_json
from .coefficients import CoefficientPair
from .errors import ConditionError, InputError, PencilError
from .forward import Subspectrum, boundary_C, boundary_S, eigenvalues
from .recovery import RecoveryConfig, recover_pq

log = logging.getLogger("pencilspec")

FORWARD_COLUMNS = (
    "lambda_re", "lambda_im", "S_re", "S_im", "S1_re", "S1_im", "C_re", "C_im",
    "C1_re", "C1_im", "Delta_re", "Delta_im", "wronskian_re", "wronskian_im",
)
SPECTRUM_COLUMNS = ("index", "lambda_re", "lambda_im")
ROUNDTRIP_COLUMNS = ("quantity", "error")


@dataclass
class RunManifest:
    """What a run consumed and produced; contains no timestamps so reruns compare equal."""

    command: str
    inputs: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    trunc: int | None = None
    seed: int | None = None
    outputs: list = field(default_factory=list)
    version: str = __version__

    def add_input(self, path: str | None) -> None:
        if path:
            self.inputs[str(path)] = file_digest(path)

    def write(self, path: str | Path) -> None:
        dump_json(asdict(self), path)


# -- parsing helpers ----------------------------------------------------------

def _complex_arg(text: str) -> complex:
    """``"0.3"``, ``"0.3,0.1"`` or a Python complex literal such as ``"0.3+0.1j"``."""
    try:
        if "," in text:
            re_, im_ = text.split(",")
            return complex(float(re_), float(im_))
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def _grid_arg(text: str) -> tuple[float, float, int]:
    try:
        a, b, n = text.split(":")
        out = float(a), float(b), int(n)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}") from exc
    if out[2] < 1:
        raise argparse.ArgumentTypeError("grid needs at least one point")
    return out


def _box_arg(text: str) -> tuple[float, float, float, float]:
    try:
        vals = tuple(float(v) for v in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected re0:re1:im0:im1, got {text!r}") from exc
    if len(vals) != 4:
        raise argparse.ArgumentTypeError(f"expected re0:re1:im0:im1, got {text!r}")
    return vals


def _load_expr(path: str | None, default: complex):
    if path is None:
        return entire.const(default)
    return entire.from_json(load_json(path, stage="cli.load"))


def _load_pair(path: str) -> CoefficientPair:
    return CoefficientPair.from_json(load_json(path, stage="cli.load"))


def _load_sub(path: str, omega0_mod1: complex | None = None) -> Subspectrum:
    sub = Subspectrum.from_json(load_json(path, stage="cli.load"))
    if omega0_mod1 is not None:
        sub = Subspectrum(sub.values, omega0_mod1)
    return sub


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: str | Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def _finish(manifest: RunManifest, args, primary: str | None) -> None:
    target = getattr(args, "manifest", None) or (f"{primary}.manifest.json" if primary else None)
    if target:
        manifest.write(target)


def default_window(cp: CoefficientPair, K: int) -> tuple[float, float, float, float]:
    """Search box holding the ``2K`` Dirichlet eigenvalues ``k + omega0``, ``0 < |k| <= K``."""
    c = cp.mean_p() * cp.length / np.pi
    scale = np.pi / cp.length
    edge = (K + 0.5) * scale
    return (c.real * scale - edge, c.real * scale + edge, c.imag * scale - 3.0, c.imag * scale + 3.0)


# -- commands -------------------------------------------------------------------

def cmd_forward(args) -> int:
    cp = _load_pair(args.problem)
    f1, f2 = _load_expr(args.f1, 0.0), _load_expr(args.f2, 1.0)
    a, b, n = args.lambda_grid
    lam = np.linspace(a, b, n) + 1j * args.imag
    s = boundary_S(cp, lam)
    c = boundary_C(cp, lam)
    delta = f1(lam) * s.y1 + f2(lam) * s.y
    wr = c.y * s.y1 - c.y1 * s.y
    cols = (lam, s.y, s.y1, c.y, c.y1, delta, wr)
    rows = [[v for z in (col[i] for col in cols) for v in (z.real, z.imag)] for i in range(n)]
    _write_csv(args.out, FORWARD_COLUMNS, rows)
    m = RunManifest("forward", outputs=[args.out])
    for p in (args.problem, args.f1, args.f2):
        m.add_input(p)
    _finish(m, args, args.out)
    return 0


def cmd_spectrum(args) -> int:
    cp = _load_pair(args.problem)
    f1, f2 = _load_expr(args.f1, 0.0), _load_expr(args.f2, 1.0)
    box = args.box or default_window(cp, args.count)
    sub = eigenvalues(cp, f1, f2, box, cluster_tol=args.tol)
    dump_json(sub.to_json(), args.out)
    outputs = [args.out]
    if args.csv:
        _write_csv(args.csv, SPECTRUM_COLUMNS, [[str(i), z.real, z.imag] for i, z in enumerate(sub.values)])
        outputs.append(args.csv)
    m = RunManifest("spectrum", tolerances={"cluster_tol": args.tol}, outputs=outputs)
    for p in (args.problem, args.f1, args.f2):
        m.add_input(p)
    _finish(m, args, args.out)
    print(f"{len(sub)} eigenvalues in box {tuple(round(v, 6) for v in box)}")
    return 0


def cmd_invert(args) -> int:
    sub = _load_sub(args.subspectrum, args.omega0_mod1)
    f1, f2 = _load_expr(args.f1, 0.0), _load_expr(args.f2, 1.0)
    bt, report = inverse.invert(sub, f1, f2, args.trunc, ridge=args.tol, return_report=True)
    dump_json(bt.to_json(), args.out)
    outputs = [args.out]
    if args.emit_weyl:
        K = args.thetas or args.trunc // 2
        thetas, idx = inverse.locate_thetas(bt, K)
        wd = inverse.weyl_residues(bt, thetas, idx, s1_known=_s1_known(f1))
        dump_json(wd.to_json(), args.emit_weyl)
        outputs.append(args.emit_weyl)
    m = RunManifest("invert", tolerances={"ridge": args.tol}, trunc=args.trunc, outputs=outputs)
    for p in (args.subspectrum, args.f1, args.f2):
        m.add_input(p)
    _finish(m, args, args.out)
    print(
        f"rows {report.rows}, unknowns {report.unknowns}, rank {report.rank}, "
        f"sigma_min {report.sigma_min:.3e}, residual {report.residual:.3e}"
    )
    return 0


def _s1_known(f1) -> bool:
    """``S^[1]`` enters the data only through ``f1``; a zero ``f1`` leaves it undetermined."""
    return not (isinstance(f1, entire.Const) and f1.value == 0)


def cmd_recover(args) -> int:
    wd = inverse.WeylData.from_json(load_json(args.weyl, stage="cli.load"))
    cfg = RecoveryConfig.from_json(load_json(args.config, stage="cli.load")) if args.config else RecoveryConfig()
    if args.tol is not None:
        cfg = RecoveryConfig.from_json({**cfg.to_json(), "misfit_tol": args.tol})
    res = recover_pq(wd, cfg, return_result=True)
    dump_json(res.pair.to_json(), args.out)
    m = RunManifest("recover", tolerances={"misfit_tol": cfg.misfit_tol}, outputs=[args.out])
    m.add_input(args.weyl)
    m.add_input(args.config)
    _finish(m, args, args.out)
    print(f"misfit {res.misfit:.3e} after {res.iterations} iterations (converged: {res.converged})")
    return 0


def cmd_check(args) -> int:
    sub = _load_sub(args.subspectrum)
    f1, f2 = _load_expr(args.f1, 0.0), _load_expr(args.f2, 1.0)
    rep = conditions.check_all(sub, f1, f2, T=args.trunc)
    dump_json(rep.to_json(), args.report)
    m = RunManifest("check", trunc=args.trunc, outputs=[args.report])
    for p in (args.subspectrum, args.f1, args.f2):
        m.add_input(p)
    _finish(m, args, args.report)
    verdict = rep.S_ok and rep.A_ok and rep.gram_ok
    print(
        f"S {'ok' if rep.S_ok else 'FAIL'}, A {'ok' if rep.A_ok else 'FAIL'}, "
        f"Gram sigma_min {rep.gram_sigma_min:.3e} ({rep.label})"
    )
    if not verdict:
        raise ConditionError("; ".join(rep.notes), "conditions.check_all")
    return 0


def cmd_half(args) -> int:
    hp = halfinverse.HalfProblem.from_json(load_json(args.problem, stage="cli.load"))
    cfg = RecoveryConfig.from_json(load_json(args.recover, stage="cli.load")) if args.recover else RecoveryConfig()
    kw = {} if args.tol is None else {"shift_tol": args.tol}
    res = halfinverse.solve_half(hp, cfg, args.trunc, return_result=True, **kw)
    dump_json(res.pair.to_json(), args.out)
    m = RunManifest("half", tolerances={"shift_tol": kw.get("shift_tol", 1e-4)}, trunc=args.trunc, outputs=[args.out])
    m.add_input(args.problem)
    m.add_input(args.recover)
    _finish(m, args, args.out)
    print(f"omega0 {res.omega0.real:.10g}{res.omega0.imag:+.3g}j, sigma shift {res.shift:.6g}")
    if args.verify:
        print(f"spectrum misfit {halfinverse.verify(res.pair, hp):.3e}")
    return 0


# -- round trip -------------------------------------------------------------------

def roundtrip_case(name: str, seed: int | None = None, size: int = 513) -> CoefficientPair:
    """Synthetic coefficient pairs on ``(0, pi)``."""
    if name == "free":
        return CoefficientPair.from_functions(0.0, 0.0, size=size)
    if name == "const":
        return CoefficientPair.from_functions(0.5, 0.0, size=size)
    if name == "cosine":
        return CoefficientPair.from_functions(lambda x: 0.3 * np.cos(x), 0.0, size=size)
    if name == "random":
        rng = np.random.default_rng(seed)
        a = rng.normal(scale=0.1, size=3)
        b = rng.normal(scale=0.1, size=3)
        return CoefficientPair.from_functions(
            lambda x: sum(a[j] * np.cos(j * x) for j in range(3)),
            lambda x: sum(b[j] * (np.cos((j + 1) * x) - 1) for j in range(3)),
            size=size,
        )
    raise InputError(f"unknown case {name!r}", "cli.roundtrip")


def run_roundtrip(cp: CoefficientPair, T: int, f1=0.0, f2=1.0, cfg: RecoveryConfig | None = None,
                  K: int | None = None) -> dict:
    """Forward spectrum, inverse pipeline, and the error table against the truth."""
    f1, f2 = entire.as_expr(f1), entire.as_expr(f2)
    K = K or T // 2
    truth = kernels.extract_triple(cp, T)
    sub = eigenvalues(cp, f1, f2, default_window(cp, T))
    bt = inverse.invert(sub, f1, f2, T)
    s1_known = _s1_known(f1)

    def rel(a, b):
        return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1.0))

    thetas, idx = inverse.locate_thetas(bt, K)
    true_thetas, _ = inverse.locate_thetas(truth, K)
    errors = {}
    # the mod-1 triple may be the negated one; errors are taken against the matching sign
    errors["kernel_K"] = min(rel(bt.K_coeffs, truth.K_coeffs), rel(-bt.K_coeffs, truth.K_coeffs))
    if s1_known:
        errors["kernel_N"] = min(rel(bt.N_coeffs, truth.N_coeffs), rel(-bt.N_coeffs, truth.N_coeffs))
    errors["theta"] = (
        float(np.max(np.abs(thetas - true_thetas))) if thetas.size == true_thetas.size else float("inf")
    )
    wd = inverse.weyl_residues(bt, thetas, idx, s1_known=s1_known)
    rec = recover_pq(wd, cfg, return_result=True)
    pair = rec.pair
    if s1_known:
        omega = inverse.snap_omega0(pair.mean_p(), sub.omega0_mod1)
        pair = pair.with_sigma_shift(inverse.sigma_shift(inverse.parity_fix(bt, omega), pair))
    x = np.linspace(cp.a, cp.b, 257)
    pt, pr = cp.p(x), pair.p(x)
    errors["p"] = float(np.linalg.norm(pr - pt) / max(np.linalg.norm(pt), 1.0))
    st, sr = cp.sigma(x), pair.sigma(x)
    if not s1_known:
        st, sr = st - st[0], sr - sr[0]  # sigma compared in the gauge sigma(0) = 0
    errors["sigma"] = float(np.max(np.abs(sr - st)))
    return {"errors": errors, "pair": pair, "triple": bt, "subspectrum": sub, "recovery": rec}


def cmd_roundtrip(args) -> int:
    cp = _load_pair(args.problem) if args.problem else roundtrip_case(args.case, args.seed)
    f1, f2 = _load_expr(args.f1, 0.0), _load_expr(args.f2, 1.0)
    cfg = RecoveryConfig.from_json(load_json(args.recover, stage="cli.load")) if args.recover else RecoveryConfig()
    out = run_roundtrip(cp, args.trunc, f1, f2, cfg)
    rows = sorted(out["errors"].items())
    for name, err in rows:
        print(f"{name:10s} {err:.3e}")
    m = RunManifest("roundtrip", trunc=args.trunc, seed=args.seed)
    for p in (args.problem, args.f1, args.f2, args.recover):
        m.add_input(p)
    if args.out:
        _write_csv(args.out, ROUNDTRIP_COLUMNS, [[k, v] for k, v in rows])
        m.outputs.append(args.out)
    _finish(m, args, args.out)
    return 0


# -- entry point --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pencilspec", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    parser.add_argument("--manifest", help="manifest path (default: <output>.manifest.json)")
    sub = parser.add_subparsers(dest="command", required=True)

    def boundary(p):
        p.add_argument("--f1", help="JSON expression for f1 (default 0)")
        p.add_argument("--f2", help="JSON expression for f2 (default 1)")

    p = sub.add_parser("forward", help="boundary values on a lambda grid, as CSV")
    p.add_argument("--problem", required=True)
    p.add_argument("--lambda-grid", required=True, type=_grid_arg, metavar="A:B:N")
    p.add_argument("--imag", type=float, default=0.0, help="constant imaginary part of the grid")
    boundary(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("spectrum", help="zeros of the characteristic function in a box")
    p.add_argument("--problem", required=True)
    boundary(p)
    p.add_argument("--box", type=_box_arg, metavar="RE0:RE1:IM0:IM1")
    p.add_argument("--count", type=int, default=20, help="half-count K of the default window")
    p.add_argument("--tol", type=float, default=1e-7, help="root clustering tolerance")
    p.add_argument("--out", required=True)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("invert", help="boundary triple from a subspectrum")
    p.add_argument("--subspectrum", required=True)
    p.add_argument("--omega0-mod1", type=_complex_arg)
    boundary(p)
    p.add_argument("--trunc", type=int, default=64)
    p.add_argument("--tol", type=float, default=inverse.RIDGE, help="relative ridge")
    p.add_argument("--thetas", type=int, help="K for the theta search (default trunc/2)")
    p.add_argument("--out", required=True)
    p.add_argument("--emit-weyl")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("recover", help="fit (p, sigma) to Weyl data")
    p.add_argument("--weyl", required=True)
    p.add_argument("--config")
    p.add_argument("--tol", type=float, help="misfit tolerance")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("check", help="finite-section condition diagnostics")
    p.add_argument("--subspectrum", required=True)
    boundary(p)
    p.add_argument("--trunc", type=float, help="only eigenvalues with |Re| <= trunc enter the Gram")
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("half", help="left half from a spectrum on (0, 2 pi) and the right half")
    p.add_argument("--problem", required=True)
    p.add_argument("--trunc", type=int, default=64)
    p.add_argument("--recover")
    p.add_argument("--tol", type=float, help="sigma-shift probe spread bound")
    p.add_argument("--out", required=True)
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_half)

    p = sub.add_parser("roundtrip", help="synthetic forward/inverse round trip with an error table")
    p.add_argument("--case", choices=("free", "const", "cosine", "random"), default="free")
    p.add_argument("--problem", help="coefficient JSON on (0, pi); overrides --case")
    boundary(p)
    p.add_argument("--trunc", type=int, default=32)
    p.add_argument("--recover")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_roundtrip)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("numba").setLevel(logging.WARNING)
    try:
        return args.func(args)
    except PencilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except json.JSONDecodeError as exc:
        print(f"error: [cli] invalid JSON ({exc.msg})", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
