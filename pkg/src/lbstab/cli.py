"""Command-line front end: figure data as CSV, simulations and the invariant suite.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 simulation instability detected.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass

import numpy as np

from .equilibrium import AF_PRESSURE, ISOTROPIC_PRESSURE, MODELS, get_model
from .modes import (
    DegenerateModesError,
    HyperbolicityError,
    analyze,
    attenuation_rates,
    beta_from_viscosity,
    viscosity_factor_from_modes,
    viscosity_from_beta,
)
from .spectral import RootFindingError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_UNSTABLE = 4

# the second-order polynomial equilibrium coincides with the isotropic
# product form on D1Q3, so it shares that pressure for mode analysis
MODE_PRESSURES = {"product-af": AF_PRESSURE, "product-iso": ISOTROPIC_PRESSURE, "poly2": ISOTROPIC_PRESSURE}
FIG1_EXTENT = 1.5
BOUNDARY_BAND = 1e-9


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: str
    beta: float | None
    nu: float | None
    us: np.ndarray
    k_points: int
    angle: float
    grid: tuple[int, ...] | None
    steps: int
    eps: float
    mode_index: int
    out: str | None
    svg: str | None
    seed: int | None


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x) + 0.0)  # no signed zeros
    return str(x)


def write_csv(rows, header, out=None) -> str:
    """Render rows as CSV (LF line endings); write to ``out`` if given, else stdout."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    return text


def _banner(text: str):
    print(text, file=sys.stderr)


def _parse_grid(text):
    if text is None:
        return None
    try:
        ext = tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"--grid expects N or Nx,Ny, got {text!r}") from exc
    if len(ext) not in (1, 2) or any(n < 2 for n in ext):
        raise ConfigError(f"--grid expects one or two extents >= 2, got {text!r}")
    return ext


def _u_values(args, default_min, default_max, default_steps):
    if args.u is not None:
        if any(x is not None for x in (args.u_min, args.u_max, args.u_steps)):
            raise ConfigError("--u is exclusive with --u-min/--u-max/--u-steps")
        us = np.array([args.u], dtype=float)
    else:
        lo = default_min if args.u_min is None else args.u_min
        hi = default_max if args.u_max is None else args.u_max
        n = default_steps if args.u_steps is None else args.u_steps
        if n < 1 or lo > hi or (n == 1 and lo != hi):
            raise ConfigError(f"empty or inverted u range [{lo}, {hi}] with {n} steps")
        us = np.linspace(lo, hi, n)
    if np.any(np.abs(us) > 1.0) or not np.all(np.isfinite(us)):
        raise ConfigError("flow velocities must satisfy |u| <= 1")
    return us


def build_config(args, u_defaults=(-1.0, 1.0, 201)) -> RunConfig:
    if args.beta is not None and args.nu is not None:
        raise ConfigError("supply at most one of --beta and --nu")
    if args.beta is not None and not 0.0 < args.beta <= 1.0:
        raise ConfigError(f"--beta must lie in (0, 1], got {args.beta}")
    if args.nu is not None and not args.nu >= 0.0:
        raise ConfigError(f"--nu must be non-negative, got {args.nu}")
    if args.model not in MODELS:
        raise ConfigError(f"unknown model {args.model!r}")
    if args.k_points < 2:
        raise ConfigError("--k-points must be at least 2")
    if args.steps < 0:
        raise ConfigError("--steps must be non-negative")
    return RunConfig(
        command=args.command,
        model=args.model,
        beta=args.beta,
        nu=args.nu,
        us=_u_values(args, *u_defaults),
        k_points=args.k_points,
        angle=args.angle,
        grid=_parse_grid(args.grid),
        steps=args.steps,
        eps=args.eps,
        mode_index=args.mode_index,
        out=args.out,
        svg=args.svg,
        seed=args.seed,
    )


def resolve_beta(cfg: RunConfig, default_beta: float | None = None) -> float:
    """Relaxation parameter from --beta or --nu; prints both in the banner."""
    if cfg.beta is not None:
        beta = cfg.beta
    elif cfg.nu is not None:
        beta = float(beta_from_viscosity(cfg.nu))
    elif default_beta is not None:
        beta = default_beta
    else:
        raise ConfigError("one of --beta or --nu is required")
    _banner(f"# {cfg.command}: model={cfg.model} beta={beta!r} nu={float(viscosity_from_beta(beta))!r}")
    return beta


# -- subcommands --------------------------------------------------------------


def cmd_modes(cfg: RunConfig):
    pm = MODE_PRESSURES[cfg.model]
    if cfg.beta is not None or cfg.nu is not None:
        resolve_beta(cfg)
    rows = []
    for u in cfg.us:
        m = analyze(pm, float(u))
        rows.append((m.u, m.pi_star, m.dpi_star, m.c_plus, m.c_minus, m.A, m.B, m.R_plus, m.R_minus))
    header = [
        "u[c]", "pi_star[c^2]", "dpi_star[c]", "c_plus[c]", "c_minus[c]",
        "A[1]", "B[c^3]", "R_plus[1]", "R_minus[1]",
    ]
    return write_csv(rows, header, cfg.out)


def fig1_cell(c_plus: float, c_minus: float) -> tuple:
    """(sign R+, sign R-, sign A, outside CFL box, |R| within boundary band) at one point.

    The rate signs are blank on the degenerate diagonal c+ = c-.
    """
    a = float(viscosity_factor_from_modes(c_plus, c_minus))
    try:
        rp, rm = (float(x) for x in attenuation_rates(c_plus, c_minus))
        signs = (int(np.sign(rp)), int(np.sign(rm)))
        near = min(abs(rp), abs(rm)) <= BOUNDARY_BAND
    except DegenerateModesError:
        signs, near = ("", ""), ""
    outside = abs(c_plus) > 1.0 or abs(c_minus) > 1.0
    return (*signs, int(np.sign(a)), outside, near)


def fig1_rows(resolution: int = 61):
    """Sign map of (R+, R-, A) over the (c+, c-) plane, then the two boxes."""
    axis = np.linspace(-FIG1_EXTENT, FIG1_EXTENT, resolution)
    rows = [("cell", float(cp), float(cm), *fig1_cell(cp, cm)) for cp in axis for cm in axis]
    for cp, cm in ((0.0, -1.0), (1.0, -1.0), (1.0, 0.0), (0.0, 0.0)):
        rows.append(("necessary_box", cp, cm, "", "", "", "", ""))
    for cp, cm in ((-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)):
        rows.append(("cfl_box", cp, cm, "", "", "", "", ""))
    return rows


FIG1_HEADER = [
    "kind", "c_plus[c]", "c_minus[c]", "sign_R_plus", "sign_R_minus", "sign_A",
    "outside_cfl", "near_R_zero",
]


def cmd_fig1(cfg: RunConfig, resolution: int = 61):
    return write_csv(fig1_rows(resolution), FIG1_HEADER, cfg.out)


def root_locus_svg(rows) -> str:
    size, scale = 400, 150.0
    centre = size / 2
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<circle cx="{centre}" cy="{centre}" r="{scale}" fill="none" stroke="black" stroke-width="1"/>',
    ]
    for _, _, re, im, mod in rows:
        colour = "red" if mod > 1.0 + 1e-9 else "blue"
        parts.append(f'<circle cx="{centre + scale * re:.3f}" cy="{centre - scale * im:.3f}" r="1.5" fill="{colour}"/>')
    parts.append("</svg>\n")
    return "\n".join(parts)


def cmd_root_locus(cfg: RunConfig):
    from .stability import k_grid, root_locus

    if cfg.grid is not None and len(cfg.grid) != 1:
        raise ConfigError("root-locus is defined for D1Q3 only")
    beta = resolve_beta(cfg, default_beta=0.9994)
    u = float(cfg.us[0]) if cfg.us.size == 1 else 1.0
    ks = k_grid(cfg.k_points, include_zero=True)
    rows = []
    for k, roots in root_locus(get_model(cfg.model), u, beta, ks):
        for j, z in enumerate(sorted(roots, key=lambda z: (-abs(z), z.real, z.imag)), start=1):
            rows.append((float(k), j, float(z.real), float(z.imag), float(abs(z))))
    text = write_csv(rows, ["k[1/dx]", "j", "re_lambda[1]", "im_lambda[1]", "abs_lambda[1]"], cfg.out)
    if cfg.svg:
        with open(cfg.svg, "w", newline="", encoding="utf-8") as fh:
            fh.write(root_locus_svg(rows))
    return text


def fig3_nus(points: int = 12, lo: float = 1e-5, hi: float = 1e-1) -> np.ndarray:
    return np.geomspace(lo, hi, points)


def cmd_fig3(cfg: RunConfig, nus=None, models=None):
    from .stability import stability_domain

    nus = fig3_nus() if nus is None else nus
    labels = ["poly2", "product-iso", "product-af"] if models is None else models
    dom = stability_domain(
        [get_model(m) for m in labels], nus, dim=2, k_points=cfg.k_points, k_angle=math.radians(cfg.angle)
    )
    rows = [(label, nu, u_max) for label, nu, u_max, _, _ in dom.rows]
    return write_csv(rows, ["model", "nu[dx^2/dt]", "u_max[c]"], cfg.out)


def cmd_simulate(cfg: RunConfig):
    from .simulator import density_mode_amplitude, init_uniform_perturbed, step

    beta = resolve_beta(cfg)
    ext = cfg.grid or (128,)
    if cfg.us.size != 1:
        raise ConfigError("simulate takes a single --u")
    u0 = float(cfg.us[0])
    if not 1 <= cfg.mode_index < ext[0]:
        raise ConfigError(f"--mode-index must satisfy 1 <= m < {ext[0]}")
    if not 0.0 <= cfg.eps < 1.0:
        raise ConfigError("--eps must lie in [0, 1)")
    model = get_model(cfg.model)
    velocity = (u0,) if len(ext) == 1 else (u0, 0.0)
    grid = init_uniform_perturbed(model, ext if len(ext) > 1 else ext[0], 1.0, velocity, cfg.eps, cfg.mode_index)

    def row(status):
        mom = grid.total_momentum()
        return (grid.step_count, density_mode_amplitude(grid, cfg.mode_index), grid.total_mass(), *mom, status)

    rows = [row("ok")]
    unstable = False
    for _ in range(cfg.steps):
        st = step(grid, beta, model)
        if not st.ok:
            rows.append(row("unstable: " + st.reason))
            unstable = True
            break
        rows.append(row("ok"))
    header = ["step", "mode_amplitude[rho]", "mass[rho dx^D]"]
    header += [f"momentum_{a}[rho c dx^D]" for a in "xy"[: len(ext)]] + ["status"]
    write_csv(rows, header, cfg.out)
    return EXIT_UNSTABLE if unstable else EXIT_OK


def cmd_verify(cfg: RunConfig):
    from .verify import run_suite

    results = run_suite()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_NUMERICAL


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", default="product-af", choices=sorted(MODELS))
    common.add_argument("--beta", type=float)
    common.add_argument("--nu", type=float)
    common.add_argument("--u", type=float)
    common.add_argument("--u-min", type=float)
    common.add_argument("--u-max", type=float)
    common.add_argument("--u-steps", type=int)
    common.add_argument("--k-points", type=int, default=64)
    common.add_argument("--angle", type=float, default=0.0, help="k direction in degrees")
    common.add_argument("--grid", help="N or Nx,Ny")
    common.add_argument("--steps", type=int, default=1000)
    common.add_argument("--eps", type=float, default=1e-6)
    common.add_argument("--mode-index", type=int, default=1)
    common.add_argument("--out", help="CSV path (stdout if omitted)")
    common.add_argument("--svg", help="root-locus only: SVG scatter path")
    common.add_argument("--seed", type=int, help="reserved; no default path uses randomness")

    p = argparse.ArgumentParser(prog="lbstab", description="LBGK linear stability toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("modes", parents=[common], help="mode speeds, attenuation rates, A and B over u")
    sub.add_parser("fig1", parents=[common], help="sign map of attenuation rates over (c+, c-)")
    sub.add_parser("root-locus", parents=[common], help="D1Q3 eigenvalues over k")
    sub.add_parser("fig3", parents=[common], help="maximal stable velocity against viscosity")
    sub.add_parser("simulate", parents=[common], help="seeded LBGK run with a per-step time series")
    sub.add_parser("verify", parents=[common], help="run the invariant suite")
    return p


COMMANDS = {
    "modes": cmd_modes,
    "fig1": cmd_fig1,
    "root-locus": cmd_root_locus,
    "fig3": cmd_fig3,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        defaults = (1.0, 1.0, 1) if args.command in ("root-locus", "simulate") else (-1.0, 1.0, 201)
        if args.command == "simulate" and args.u is None and args.u_min is None:
            defaults = (0.0, 0.0, 1)
        cfg = build_config(args, defaults)
        result = COMMANDS[args.command](cfg)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, (HyperbolicityError, DegenerateModesError)):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BrokenPipeError:
        return EXIT_OK
    except (RootFindingError, RuntimeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
