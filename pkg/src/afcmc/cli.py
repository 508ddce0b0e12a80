"""Command-line front end.

Precedence: command-line flags override values from ``--config FILE``
(a JSON object whose keys are flag names without dashes, e.g.
``{"metric": "builtin:schwarzschild,m=1", "lmax": 8}``), which override
built-in defaults. Summaries go to standard output as ``key: value`` lines;
tables are written as CSV into ``--out``.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import io as afio
from .adm import DEFAULT_RADII, adm_mass, center_of_mass
from .cmc_solver import DEFAULT_TOL, build_foliation, solve_cmc, verify_leaf
from .errors import AFError
from .harmonic_coords import (build_harmonic_map, cube_directions, ellipticity_check,
                              harmonic_residual, transform_metric)
from .metric import coordinate_laplacian
from .surface import (GraphSurface, gauss_map_diagnostics, identity_integrals,
                      surface_geometry)

__all__ = ["main", "run", "build_parser"]

DEFAULTS = {"lmax": None, "radii": None, "tol": DEFAULT_TOL, "out": None,
            "center": None, "radius": None, "surface": None, "band_width": 1.0,
            "pin_translations": False, "n_eigs": 4}


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from err


def _vec3(text):
    v = _floats(text)
    if len(v) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return v


def _positive(text):
    try:
        v = float(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from err
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _common(p, radii=False, solver=False, surface=False):
    p.add_argument("--config", help="JSON file with default values for these flags")
    p.add_argument("--metric", help="builtin:NAME[,k=v...] or a metric-spec file "
                   "(builtins: flat, example51, schwarzschild, perturbed)")
    p.add_argument("--lmax", type=int, help="harmonic truncation degree")
    p.add_argument("--out", help="directory for table and coefficient files")
    if radii:
        p.add_argument("--radii", type=_floats, help="comma-separated radius schedule")
    if solver or surface:
        p.add_argument("--center", type=_vec3, help="x,y,z center of the surface")
        p.add_argument("--radius", type=_positive, help="mean radius R of the surface")
    if surface:
        p.add_argument("--surface", help="surface file (overrides --radius/--center)")
    if solver:
        p.add_argument("--tol", type=_positive, help="relative residual tolerance")
        p.add_argument("--pin-translations", dest="pin_translations", action="store_true",
                       default=None, help="pin degree-1 modes (off-center diagnostic leaves)")


def build_parser():
    parser = argparse.ArgumentParser(prog="afcmc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    p = sub.add_parser("mass", help="ADM mass by flux extrapolation")
    _common(p, radii=True)
    p = sub.add_parser("com", help="ADM mass and center of mass")
    _common(p, radii=True)
    p = sub.add_parser("harmonize", help="asymptotically harmonic coordinates")
    _common(p, radii=True)
    p = sub.add_parser("geometry", help="geometry of a surface or coordinate sphere")
    _common(p, surface=True)
    p = sub.add_parser("solve-cmc", help="solve for one CMC sphere")
    _common(p, solver=True)
    p = sub.add_parser("foliate", help="CMC foliation over a radius schedule")
    _common(p, radii=True, solver=True)
    p = sub.add_parser("verify", help="identity battery on a leaf")
    _common(p, solver=True, surface=True)
    p.add_argument("--n-eigs", dest="n_eigs", type=int, help="Jacobi eigenvalues to report")
    p = sub.add_parser("diagnose-gauss", help="Gauss-map band diagnostics")
    _common(p, solver=True, surface=True)
    p.add_argument("--band-width", dest="band_width", type=_positive,
                   help="band width in e-folds (default 1)")
    return parser


def _resolve(args, parser):
    opts = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            raise AFError(f"cannot read config {args.config}: {err}") from err
        if not isinstance(cfg, dict):
            raise AFError("config must be a JSON object")
        unknown = set(cfg) - set(vars(args)) - {"command"}
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")
        opts.update({k.replace("-", "_"): v for k, v in cfg.items()})
    opts.update({k: v for k, v in vars(args).items() if v is not None})
    if isinstance(opts.get("radii"), str):
        opts["radii"] = _floats(opts["radii"])
    if isinstance(opts.get("center"), str):
        opts["center"] = _vec3(opts["center"])
    if not opts.get("metric"):
        parser.error("--metric is required (flag or config)")
    if opts["tol"] is not None and not opts["tol"] > 0:
        parser.error("tol must be > 0")
    return opts


def _emit(key, value, stream):
    if isinstance(value, (list, tuple, np.ndarray)):
        value = " ".join(repr(float(v)) for v in np.ravel(value))
    elif isinstance(value, (float, np.floating)):
        value = repr(float(value))
    print(f"{key}: {value}", file=stream)


def _outdir(opts):
    out = opts.get("out")
    if out:
        os.makedirs(out, exist_ok=True)
    return out


def _cmd_mass(field, opts, stream, with_center=False):
    radii = opts["radii"] or DEFAULT_RADII
    rep = (center_of_mass if with_center else adm_mass)(field, radii, L_max=opts["lmax"])
    for k, v in rep.summary().items():
        _emit(k, v, stream)
    for note in rep.notes:
        _emit("note", note, stream)
    out = _outdir(opts)
    if out:
        afio.write_table(os.path.join(out, "adm_rows.csv"),
                         ["radius", "mass_estimate", "Cx", "Cy", "Cz"], rep.rows())


def _cmd_harmonize(field, opts, stream):
    cmap = build_harmonic_map(field, L_max=opts["lmax"])
    tm = transform_metric(cmap, field)
    _emit("lambda0", cmap.lambda0, stream)
    _emit("xhat_coefficients", cmap.xhat_coefficients(), stream)
    _emit("invertibility_threshold", cmap.threshold, stream)
    for note in cmap.notes:
        _emit("warning", note, stream)
    d = cube_directions()
    rows = []
    for r in opts["radii"] or (1e2, 1e3, 1e4):
        x = r * d
        gy = np.abs(harmonic_residual(cmap, field, x)).max() * r ** 3
        gx = np.abs(coordinate_laplacian(field, x)).max() * r ** 3
        rows.append((float(r), float(gy), float(gx)))
        _emit(f"residual_r3[{r:g}]", [gy, gx], stream)
    ell = ellipticity_check(tm)
    for k, v in ell.summary().items():
        _emit(k, v, stream)
    out = _outdir(opts)
    if out:
        for k, axis in enumerate("xyz"):
            afio.write_coefficients(os.path.join(out, f"angular_{axis}.coef"),
                                    cmap.angular.coeffs[k])
        afio.write_table(os.path.join(out, "residual_decay.csv"),
                         ["radius", "r3_laplacian_y", "r3_laplacian_x"], rows)


def _surface_from(opts, field):
    if opts.get("surface"):
        s = afio.read_surface(opts["surface"])
        if opts["lmax"] and opts["lmax"] != s.L_max:
            s = s.resampled(opts["lmax"])
        return s
    R = opts.get("radius")
    if R is None:
        raise AFError("need --surface or --radius")
    return GraphSurface.sphere(R, opts["center"] or (0, 0, 0), L_max=opts["lmax"] or 8)


def _cmd_geometry(field, opts, stream):
    s = _surface_from(opts, field)
    rep = surface_geometry(s, field)
    for k, v in rep.summary().items():
        _emit(k, v, stream)
    ids = identity_integrals(rep)
    for k in ("divergence", "gauss_bonnet", "H2", "traceless2", "stability", "balancing"):
        _emit(k, ids[k], stream)
    out = _outdir(opts)
    if out:
        afio.write_table(os.path.join(out, "nodes.csv"),
                         ["theta", "phi", "x", "y", "z", "H", "H_e", "K_e"], rep.node_rows())


def _solve(field, opts):
    R = opts.get("radius")
    if R is None:
        raise AFError("need --radius")
    return solve_cmc(field, opts["center"] or (0, 0, 0), R, L_max=opts["lmax"] or 8,
                     tol=opts["tol"], pin_translations=bool(opts["pin_translations"]))


def _cmd_solve(field, opts, stream):
    sol = _solve(field, opts)
    _emit("H", sol.H, stream)
    _emit("mean_radius", sol.surface.mean_radius, stream)
    _emit("residual", sol.residual, stream)
    _emit("galerkin_residual", sol.galerkin_residual, stream)
    _emit("iterations", sol.iterations, stream)
    _emit("r0", sol.surface.r0, stream)
    _emit("r1", sol.surface.r1, stream)
    _emit("flags", ";".join(sol.flags) or "ok", stream)
    out = _outdir(opts)
    if out:
        afio.write_surface(os.path.join(out, "leaf.surf"), sol.surface)


def _cmd_foliate(field, opts, stream):
    sched = opts["radii"] or [100.0 * 2 ** k for k in range(5)]
    fol = build_foliation(field, sched, center=opts["center"], L_max=opts["lmax"] or 8,
                          tol=opts["tol"])
    _emit("center", fol.center, stream)
    _emit("flags", ";".join(fol.flags) or "ok", stream)
    header = ["R", "H", "r0", "r1", "willmore", "min_jacobi", "flags"]
    print(",".join(header), file=stream)
    rows = fol.summary_rows()
    print(afio.format_table(header, rows).split("\n", 1)[1], end="", file=stream)
    out = _outdir(opts)
    if out:
        afio.write_table(os.path.join(out, "foliation.csv"), header, rows)
        for k, leaf in enumerate(fol.leaves):
            if leaf.surface is not None:
                afio.write_surface(os.path.join(out, f"leaf_{k:03d}.surf"), leaf.surface)
    if not fol.complete:
        raise AFError("foliation incomplete: " + "; ".join(fol.flags))


def _cmd_verify(field, opts, stream):
    if opts.get("surface"):
        target = _surface_from(opts, field)
    else:
        target = _solve(field, opts)
    ver = verify_leaf(target, field, tol=opts["tol"], n_eigs=opts["n_eigs"])
    for k, v in ver.values.items():
        if isinstance(v, dict):
            for a, d in v.items():
                _emit(f"{k}[{a}]", [d["defect"], d["scale"], d["ratio"]], stream)
        else:
            _emit(k, v, stream)
    for k, v in ver.passed.items():
        _emit(f"pass.{k}", "yes" if v else "no", stream)
    _emit("verdict", "pass" if ver.ok else "fail", stream)


def _cmd_gauss(field, opts, stream):
    s = _surface_from(opts, field) if opts.get("surface") else _solve(field, opts).surface
    diag = gauss_map_diagnostics(s, field, band_width=opts["band_width"])
    header = ["r_lo", "r_hi", "energy", "tension_sup", "hopf_l1", "nodes"]
    print(",".join(header), file=stream)
    print(afio.format_table(header, diag.rows()).split("\n", 1)[1], end="", file=stream)
    _emit("end_peaked", "yes" if diag.profile_is_end_peaked() else "no", stream)
    for note in diag.notes:
        _emit("note", note, stream)
    out = _outdir(opts)
    if out:
        afio.write_table(os.path.join(out, "gauss_bands.csv"), header, diag.rows())


COMMANDS = {
    "mass": lambda f, o, s: _cmd_mass(f, o, s, False),
    "com": lambda f, o, s: _cmd_mass(f, o, s, True),
    "harmonize": _cmd_harmonize,
    "geometry": _cmd_geometry,
    "solve-cmc": _cmd_solve,
    "foliate": _cmd_foliate,
    "verify": _cmd_verify,
    "diagnose-gauss": _cmd_gauss,
}


def run(argv=None, stdout=None, stderr=None):
    """Run one subcommand; returns the exit code (0 ok, 1 domain error, 2 usage)."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        opts = _resolve(args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        field = afio.load_metric(opts["metric"])
        COMMANDS[args.command](field, opts, stdout)
    except (AFError, OSError) as err:
        print(f"error: {err}".splitlines()[0], file=stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
