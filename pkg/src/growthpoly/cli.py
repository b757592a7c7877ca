"""Batch command-line front end.

Subcommands: solve-map, density, kl, zeros, trajectory, evolve,
validate.  Every command reads one JSON config, writes CSV/JSON ground
truth (plus optional SVG figures) into the output directory, and embeds
the config hash and package version in every file.  Reruns with the
same config and seed are byte-identical for CSV/JSON.

Exit codes: 0 ok, 1 config or usage error, 2 regime violation,
3 parameter solve failure, 4 quadrature failure, 5 orthogonalization or
root-finding failure, 6 curve/trajectory failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, figures
from .conformal import (RationalMap, boundary_polygon, classify_regime,
                        droplet_map, is_univalent, map_derivative,
                        map_forward, sample_boundary, solve_params)
from .errors import (BranchPointHit, CuspSingular, DegenerateElimination,
                     DegenerateMap, EvalOutsideDomain, GrowthError,
                     InteriorPoint, NoConvergence, NoInteriorComponent,
                     NonIntegerBeta, NotConfining, NotPositiveDefinite,
                     PathCrossesCut, QuadratureUnstable, RegimeViolation,
                     RootFindingFailure, SelfIntersection, SingularPoint)
from .moments import Potential, check_confinement
from .orthopoly import (basis_to_json_dict, build_basis, compute_gram,
                        eval_density, orthogonalize, orthonormality_residual,
                        zeros as polynomial_zeros)
from .quadrature import build_grid, gram_matrix, gram_oracle_integer_beta, \
    integrate, prewhitener_log
from .spectral import (build_curve, curve_to_json_dict, kl_divergence,
                       trace_trajectory, zero_trajectory_distance)

_EXIT_CODES = [
    ((RegimeViolation,), 2),
    ((NoConvergence, DegenerateMap, SelfIntersection), 3),
    ((NotConfining, QuadratureUnstable, NonIntegerBeta, EvalOutsideDomain,
      SingularPoint), 4),
    ((NotPositiveDefinite, RootFindingFailure), 5),
    ((DegenerateElimination, BranchPointHit, PathCrossesCut,
      NoInteriorComponent, CuspSingular, InteriorPoint), 6),
]


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Validated run configuration."""

    potential: Potential
    degrees: list
    scaling_mode: str          # "area" | "fixed"
    fixed_N: float | None
    theta_factor: float
    radial_factor: float
    boundary_samples: int
    raster_resolution: int
    seed: int
    extended: bool
    evolve_t0: list
    trajectory_grid: int
    config_hash: str
    raw: dict = field(repr=False, default_factory=dict)


def _num(value, what):
    """Numbers may be given as decimal strings to avoid locale issues."""
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError as exc:
            raise ConfigError(f"{what}: cannot parse number {value!r}") from exc
    if isinstance(value, (int, float)):
        return float(value)
    raise ConfigError(f"{what}: expected a number, got {type(value).__name__}")


def _cnum(value, what):
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"{what}: complex values are [re, im] pairs")
        return complex(_num(value[0], what), _num(value[1], what))
    return complex(_num(value, what), 0.0)


def load_config(path, *, seed_override=None, extended=False) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    t0 = _num(raw.get("t0", 1.0), "t0")
    if t0 <= 0:
        raise ConfigError("t0 must be positive")
    mom = raw.get("moments")
    if not isinstance(mom, dict) or "kind" not in mom:
        raise ConfigError("moments: need an object with a 'kind' field")
    if mom["kind"] == "geometric":
        beta = _num(mom.get("beta", 0.0), "moments.beta")
        a = _cnum(mom.get("a", 1.0), "moments.a")
        if beta < 0:
            raise ConfigError("moments.beta must be nonnegative")
        if beta > 0 and a == 0:
            raise ConfigError("moments.a must be nonzero")
        potential = Potential.geometric(t0, beta, a)
    elif mom["kind"] == "explicit":
        coeffs = [_cnum(c, "moments.coefficients")
                  for c in mom.get("coefficients", [])]
        potential = Potential.explicit(t0, coeffs)
    else:
        raise ConfigError(f"moments.kind {mom['kind']!r} unknown")

    degrees = raw.get("degrees", [5, 10, 20])
    if (not isinstance(degrees, list) or not degrees
            or any((not isinstance(n, int)) or n < 1 for n in degrees)):
        raise ConfigError("degrees must be a nonempty list of positive ints")
    degrees = sorted(set(degrees))

    scaling = raw.get("scaling", {"mode": "area"})
    mode = scaling.get("mode", "area")
    fixed_N = None
    if mode == "fixed":
        fixed_N = _num(scaling.get("N"), "scaling.N")
        if fixed_N <= 0:
            raise ConfigError("scaling.N must be positive")
    elif mode != "area":
        raise ConfigError("scaling.mode must be 'area' or 'fixed'")

    grid = raw.get("grid", {})
    theta_factor = _num(grid.get("theta_factor", 1.0), "grid.theta_factor")
    radial_factor = _num(grid.get("radial_factor", 1.0), "grid.radial_factor")
    if theta_factor <= 0 or radial_factor <= 0:
        raise ConfigError("grid factors must be positive")

    boundary_samples = int(raw.get("boundary_samples", 512))
    if boundary_samples < 128:
        raise ConfigError("boundary_samples must be at least 128")
    raster_resolution = int(raw.get("raster_resolution", 160))
    if raster_resolution < 16:
        raise ConfigError("raster_resolution must be at least 16")

    seed = int(raw.get("seed", 0)) if seed_override is None else seed_override

    ev = raw.get("evolve", {})
    if "t0_values" in ev:
        evolve_t0 = [_num(v, "evolve.t0_values") for v in ev["t0_values"]]
    else:
        start = _num(ev.get("start", 0.1), "evolve.start")
        stop = _num(ev.get("stop", t0), "evolve.stop")
        count = int(ev.get("count", 8))
        if count < 2 or start <= 0 or stop <= start:
            raise ConfigError("evolve needs 0 < start < stop and count >= 2")
        evolve_t0 = list(np.linspace(start, stop, count))
    trajectory_grid = int(raw.get("trajectory", {}).get("grid_size", 257))

    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(
        (canon + f"|seed={seed}|extended={extended}").encode()).hexdigest()

    return RunConfig(potential=potential, degrees=degrees, scaling_mode=mode,
                     fixed_N=fixed_N, theta_factor=theta_factor,
                     radial_factor=radial_factor,
                     boundary_samples=boundary_samples,
                     raster_resolution=raster_resolution, seed=seed,
                     extended=extended, evolve_t0=evolve_t0,
                     trajectory_grid=trajectory_grid,
                     config_hash=digest, raw=raw)


# --- output helpers ----------------------------------------------------------

def _fmt(x):
    return "%.17g" % x


def write_csv(path, header, rows, cfg):
    lines = [f"# schema_version=1 config_sha256={cfg.config_hash} "
             f"version={__version__}"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v)
                              for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path, doc, cfg):
    doc = dict(doc)
    doc.setdefault("schema_version", 1)
    doc["config_sha256"] = cfg.config_hash
    doc["version"] = __version__
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def _pack(z: complex):
    return [z.real, z.imag]


def _basis_for(cfg, n):
    N = cfg.fixed_N if cfg.scaling_mode == "fixed" else None
    mode = "extended" if cfg.extended else "auto"
    return build_basis(cfg.potential, n, t0=cfg.potential.t0, N=N, mode=mode)


def _droplet(cfg, t0=None):
    p = cfg.potential
    if not p.is_geometric:
        raise ConfigError("this command needs geometric moment data")
    return droplet_map(p.beta, p.a, p.t0 if t0 is None else t0)


def _dump_grid(cfg, outdir):
    p = cfg.potential
    n = min(cfg.degrees)
    N = cfg.fixed_N if cfg.scaling_mode == "fixed" else n / p.t0
    grid = build_grid(p, N, n, theta_factor=cfg.theta_factor,
                      radial_factor=cfg.radial_factor)
    rows = [(float(z.real), float(z.imag), float(w))
            for z, w in zip(grid.z, grid.weights)]
    write_csv(outdir / "grid.csv", ["re_z", "im_z", "weight"], rows, cfg)


# --- commands ----------------------------------------------------------------

def cmd_solve_map(cfg: RunConfig, outdir: Path, make_figures=True):
    p = cfg.potential
    if not p.is_geometric:
        raise ConfigError("solve-map needs geometric moment data")
    regime = classify_regime(p.beta, p.a)
    if regime.tag != "SimplyConnected":
        write_json(outdir / "map.json",
                   {"regime": regime.tag, "R1": regime.R1, "R2": regime.R2},
                   cfg)
        raise RegimeViolation(
            f"doubly connected regime (R1={regime.R1:.6g}, R2={regime.R2:.6g})")
    m = solve_params(p.beta, p.a, p.t0)
    beta_b, a_b, t0_b = (p.beta, p.a, p.t0)
    doc = {
        "r": m.r, "u": _pack(m.u), "v": _pack(m.v), "A": _pack(m.A),
        "t0": t0_b, "beta": beta_b, "a": _pack(a_b),
        "regime": regime.tag, "R1": regime.R1, "R2": regime.R2,
        "univalent": bool(m.univalent),
    }
    write_json(outdir / "map.json", doc, cfg)
    theta, zb, measure = _boundary_samples_safe(m, 1024)
    rows = [(float(t), float(z.real), float(z.imag), float(w))
            for t, z, w in zip(theta, zb, measure)]
    write_csv(outdir / "boundary.csv", ["theta", "re_z", "im_z", "measure"],
              rows, cfg)
    if make_figures:
        figures.render_boundary(outdir / "boundary.svg", zb, measure,
                                marks={"a": p.a},
                                title="solved droplet boundary")
    return 0


def _boundary_samples_safe(m, M):
    """Boundary samples, shifting nodes off an exact critical point."""
    try:
        bs = sample_boundary(m, M)
        return bs.theta, bs.z, bs.measure
    except CuspSingular:
        theta = 2.0 * np.pi * (np.arange(M) + 0.5) / M
        zeta = np.exp(1j * theta)
        zb = map_forward(m, zeta)
        fp = np.abs(map_derivative(m, zeta))
        return theta, zb, 1.0 / fp


def cmd_density(cfg: RunConfig, outdir: Path, make_figures=True,
                dump_grid=False):
    p = cfg.potential
    if p.is_geometric and p.beta > 0:
        m = _droplet(cfg)
        bs = sample_boundary(m, cfg.boundary_samples)
        conformal = bs.measure
        zb = bs.z
        theta = bs.theta
    else:
        radius = math.sqrt(p.t0)
        theta = 2.0 * np.pi * np.arange(cfg.boundary_samples) \
            / cfg.boundary_samples
        zb = radius * np.exp(1j * theta)
        conformal = np.full(theta.size, 1.0 / radius)
    if dump_grid:
        _dump_grid(cfg, outdir)
    for n in cfg.degrees:
        basis = _basis_for(cfg, n)
        write_json(outdir / f"basis_n{n}.json", basis_to_json_dict(basis),
                   cfg)
        rho = eval_density(basis, n, zb)
        rows = [(float(t), float(r), float(c))
                for t, r, c in zip(theta, rho, conformal)]
        write_csv(outdir / f"profile_n{n}.csv",
                  ["theta", "rho", "conformal_measure"], rows, cfg)
        # raster over the droplet bounding box scaled by 1.5
        x_mid = 0.5 * (zb.real.min() + zb.real.max())
        y_mid = 0.5 * (zb.imag.min() + zb.imag.max())
        half_x = 0.75 * (zb.real.max() - zb.real.min())
        half_y = 0.75 * (zb.imag.max() - zb.imag.min())
        xs = np.linspace(x_mid - half_x, x_mid + half_x,
                         cfg.raster_resolution)
        ys = np.linspace(y_mid - half_y, y_mid + half_y,
                         cfg.raster_resolution)
        zz = xs[None, :] + 1j * ys[:, None]
        vals = eval_density(basis, n, zz)
        rows = [(float(zz[i, j].real), float(zz[i, j].imag),
                 float(vals[i, j]))
                for i in range(zz.shape[0]) for j in range(zz.shape[1])]
        write_csv(outdir / f"density_n{n}.csv", ["re_z", "im_z", "rho"],
                  rows, cfg)
        if make_figures:
            figures.render_profiles(outdir / f"profile_n{n}.svg", theta, rho,
                                    conformal, n)
            figures.render_raster(outdir / f"density_n{n}.svg", xs, ys, vals,
                                  boundary_z=zb,
                                  title=f"weighted density n={n}")
    return 0


def cmd_kl(cfg: RunConfig, outdir: Path, make_figures=True):
    p = cfg.potential
    if p.is_geometric and p.beta > 0:
        m = _droplet(cfg)
    else:
        m = RationalMap(r=math.sqrt(p.t0), u=0j, v=0j, A=0j, univalent=True)
    rows = []
    raws, adjs = [], []
    for n in cfg.degrees:
        basis = _basis_for(cfg, n)
        raw, adj = kl_divergence(basis, n, m, M=cfg.boundary_samples)
        rows.append((n, float(raw), float(adj)))
        raws.append(raw)
        adjs.append(adj)
    write_csv(outdir / "kl.csv", ["k", "raw", "mean_adjusted"], rows, cfg)
    if make_figures:
        figures.render_kl(outdir / "kl.svg", cfg.degrees, raws, adjs)
    return 0


def cmd_zeros(cfg: RunConfig, outdir: Path, make_figures=True):
    zs_by_degree = {}
    for n in cfg.degrees:
        basis = _basis_for(cfg, n)
        zs = polynomial_zeros(basis, n, seed=cfg.seed)
        zs_by_degree[n] = zs
        rows = [(float(z.real), float(z.imag)) for z in zs]
        write_csv(outdir / f"zeros_n{n}.csv", ["re", "im"], rows, cfg)
    if make_figures:
        boundary = None
        p = cfg.potential
        if p.is_geometric and p.beta > 0:
            boundary = sample_boundary(_droplet(cfg), 512).z
        figures.render_zeros(outdir / "zeros.svg", zs_by_degree,
                             boundary_z=boundary)
    return 0


def cmd_trajectory(cfg: RunConfig, outdir: Path, make_figures=True):
    p = cfg.potential
    m = _droplet(cfg)
    curve = build_curve(m, p)
    bs = sample_boundary(m, 1024)
    traj = trace_trajectory(curve, bs, grid_size=cfg.trajectory_grid)
    rows = [(float(z.real), float(z.imag), float(r))
            for z, r in zip(traj.points, traj.rho_s)]
    write_csv(outdir / "trajectory.csv", ["re", "im", "rho_s"], rows, cfg)
    write_json(outdir / "curve.json", curve_to_json_dict(curve), cfg)

    n_top = max(cfg.degrees)
    basis = _basis_for(cfg, n_top)
    zs = polynomial_zeros(basis, n_top, seed=cfg.seed)
    dmax, dmean = zero_trajectory_distance(zs, traj)
    write_json(outdir / "distance.json", {
        "degree": n_top,
        "max_normalized_distance": dmax,
        "mean_normalized_distance": dmean,
        "trajectory_mass": traj.mass,
        "t0": p.t0,
        "branch_points": [_pack(traj.z1), _pack(traj.z2)],
    }, cfg)
    if make_figures:
        figures.render_zeros(outdir / "trajectory.svg", {n_top: zs},
                             boundary_z=bs.z, trajectory=traj.points)
    return 0


def cmd_evolve(cfg: RunConfig, outdir: Path, make_figures=True):
    p = cfg.potential
    if not p.is_geometric or p.beta <= 0:
        raise ConfigError("evolve needs geometric moment data with beta > 0")
    boundaries = []
    rows = []
    statuses = []
    for t0 in cfg.evolve_t0:
        status, zb = _evolve_step(p, t0)
        statuses.append((t0, status))
        if zb is not None:
            boundaries.append((t0, zb))
            for th, z in zip(np.linspace(0, 2 * np.pi, zb.size,
                                         endpoint=False), zb):
                rows.append((float(t0), float(th), float(z.real),
                             float(z.imag)))
    write_csv(outdir / "boundaries.csv", ["t0", "theta", "re_z", "im_z"],
              rows, cfg)

    cusp_t0 = None
    flips = [(a, b) for (a, sa), (b, sb) in zip(statuses[:-1], statuses[1:])
             if sa == "univalent" and sb != "univalent"]
    if flips:
        lo, hi = flips[0]
        for _ in range(64):
            if hi - lo <= 1e-6:
                break
            mid = 0.5 * (lo + hi)
            if _evolve_step(p, mid)[0] == "univalent":
                lo = mid
            else:
                hi = mid
        cusp_t0 = 0.5 * (lo + hi)

    nested = _check_nesting(boundaries)
    write_json(outdir / "evolution.json", {
        "t0_values": [t for t, _ in statuses],
        "status": [s for _, s in statuses],
        "nested": nested,
        "cusp_t0": cusp_t0,
        "cusp_bracket_width": 1e-6 if cusp_t0 is not None else None,
    }, cfg)
    if make_figures:
        figures.render_evolution(outdir / "evolution.svg", boundaries,
                                 cusp_t0=cusp_t0)
    return 0


def _evolve_step(p, t0):
    try:
        m = droplet_map(p.beta, p.a, t0)
    except (NoConvergence, RegimeViolation):
        return "unsolvable", None
    zb = map_forward(m, np.exp(1j * np.linspace(0, 2 * np.pi, 512,
                                                endpoint=False)))
    return ("univalent" if m.univalent else "non-univalent"), zb


def _check_nesting(boundaries):
    from shapely.geometry import Polygon
    polys = [Polygon(np.column_stack([zb.real, zb.imag])).buffer(0)
             for _, zb in boundaries]
    for small, big in zip(polys[:-1], polys[1:]):
        if not big.buffer(1e-9).contains(small):
            return False
    return True


def cmd_validate(cfg: RunConfig, outdir: Path, make_figures=True,
                 dump_grid=False):
    p = cfg.potential
    checks = []

    def record(name, passed, detail):
        checks.append({"name": name, "passed": bool(passed),
                       "detail": detail})
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")

    # pure-Gaussian Gram is the identity in the prewhitened basis
    p0 = Potential.geometric(1.0, 0.0, 1.0)
    g0 = build_grid(p0, 8.0, 8)
    gram0 = gram_matrix(g0, p0, 8)
    dev = float(np.max(np.abs(gram0 - np.eye(9))))
    record("gaussian_gram_identity", dev <= 1e-12, f"max deviation {dev:.3e}")

    # Gaussian closed-form integrals
    mass = integrate(g0, lambda z: np.ones_like(z), p0, 8.0)
    err = abs(mass - math.pi / 8.0) / (math.pi / 8.0)
    record("gaussian_mass", err <= 1e-12, f"relative error {err:.3e}")

    # quadrature Gram against the binomial oracle (integer N*beta)
    po = Potential.geometric(1.0, 0.5, 2.0)
    go = build_grid(po, 8.0, 8)
    gm = gram_matrix(go, po, 8)
    lpw = prewhitener_log(8.0, np.arange(9))
    worst = 0.0
    scale = 0.0
    oracle = np.empty((9, 9), dtype=complex)
    for i in range(9):
        for j in range(9):
            oracle[i, j] = gram_oracle_integer_beta(i, j, 4, 2.0, 8.0) \
                * math.exp(lpw[i] + lpw[j])
    scale = float(np.abs(oracle).max())
    for i in range(9):
        for j in range(9):
            worst = max(worst, abs(gm[i, j] - oracle[i, j])
                        / (abs(oracle[i, j]) + 1e-4 * scale))
    record("gram_oracle_agreement", worst <= 1e-9, f"worst error {worst:.3e}")

    # confinement of the configured weight
    n_max = 2 * max(cfg.degrees)
    N_chk = cfg.fixed_N or max(cfg.degrees) / p.t0
    ok = check_confinement(p, N_chk, n_max)
    record("confinement", ok, f"N={N_chk:g}, moment order {n_max}")

    # map roundtrip for geometric data
    if p.is_geometric and p.beta > 0:
        try:
            from .conformal import forward_params
            m = droplet_map(p.beta, p.a, p.t0)
            beta_b, a_b, t0_b = forward_params(m)
            err = max(abs(-beta_b - p.beta) / max(1.0, p.beta),
                      abs(a_b - p.a) / max(1.0, abs(p.a)),
                      abs(t0_b - p.t0) / max(1.0, p.t0))
            record("map_roundtrip", err <= 1e-10, f"residual {err:.3e}")
        except GrowthError as exc:
            record("map_roundtrip", False, str(exc))

    # orthonormality at the smallest configured degree
    n0 = min(cfg.degrees)
    basis = _basis_for(cfg, n0)
    resid = orthonormality_residual(basis)
    record("orthonormality", resid <= 1e-8, f"residual {resid:.3e} (n={n0})")

    # density normalization via a refined Gram
    g_ref = compute_gram(p, n0, t0=p.t0,
                         N=cfg.fixed_N if cfg.scaling_mode == "fixed"
                         else None,
                         mode="extended" if basis.extended else "double",
                         dps=basis.dps, theta_factor=1.5, radial_factor=1.5)
    norms = np.real(np.diag(basis.coeffs @ g_ref.entries
                            @ basis.coeffs.conj().T))
    dev = float(np.max(np.abs(norms - 1.0)))
    record("density_normalization", dev <= 1e-8, f"max |norm-1| {dev:.3e}")

    # grid refinement stability
    gm2 = gram_matrix(build_grid(po, 8.0, 8, theta_factor=2.0,
                                 radial_factor=2.0), po, 8)
    change = float(np.max(np.abs(gm - gm2)))
    gscale = float(np.abs(gm).max())
    record("grid_refinement", change <= 1e-10 * max(gscale, 1.0),
           f"max change {change:.3e} at scale {gscale:.3e}")

    if dump_grid:
        _dump_grid(cfg, outdir)
    passed = all(c["passed"] for c in checks)
    write_json(outdir / "validate_report.json",
               {"passed": passed, "checks": checks}, cfg)
    return 0 if passed else 4


_COMMANDS = {
    "solve-map": cmd_solve_map,
    "density": cmd_density,
    "kl": cmd_kl,
    "zeros": cmd_zeros,
    "trajectory": cmd_trajectory,
    "evolve": cmd_evolve,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="growthpoly",
        description="Droplet growth approximation via planar orthogonal "
                    "polynomials")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker hint; results are identical for any "
                             "value (fixed-shape reductions)")
    parser.add_argument("--extended-precision", action="store_true",
                        help="force extended-precision Gram assembly")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for root-finder restarts")
    parser.add_argument("--dump-grid", action="store_true",
                        help="also write the quadrature grid as CSV")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip SVG figure rendering")
    args = parser.parse_args(argv)

    if args.threads is not None and args.threads > 0:
        try:
            from threadpoolctl import threadpool_limits
            threadpool_limits(limits=args.threads)
        except ImportError:
            pass

    try:
        cfg = load_config(args.config, seed_override=args.seed,
                          extended=args.extended_precision)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}),
              file=sys.stderr)
        return 1

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    func = _COMMANDS[args.command]
    kwargs = {"make_figures": not args.no_figures}
    if args.command in ("density", "validate"):
        kwargs["dump_grid"] = args.dump_grid
    try:
        return func(cfg, outdir, **kwargs)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}),
              file=sys.stderr)
        return 1
    except GrowthError as exc:
        for types, code in _EXIT_CODES:
            if isinstance(exc, types):
                print(json.dumps({"error": type(exc).__name__,
                                  "message": str(exc)}), file=sys.stderr)
                return code
        print(json.dumps({"error": type(exc).__name__,
                          "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
