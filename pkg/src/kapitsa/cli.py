"""``kapitsa`` command-line front end.

Commands: moments, dispersion, jump, figure1, figure2, validate.
Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import DomainError, KapitsaError, NumericalError
from .params import ModelParams, PhononRegimeWarning, PhysicalParams

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3

COMMANDS = ("moments", "dispersion", "jump", "figure1", "figure2", "validate")


class UsageError(KapitsaError):
    pass


@dataclass
class RunConfig:
    command: str
    model: ModelParams
    phys: PhysicalParams | None = None
    sweep: dict = field(default_factory=dict)
    out: str | None = None
    fmt: str = "json"
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _range(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("range must be START:STOP:STEP")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from exc
    if not step > 0 or hi < lo:
        raise argparse.ArgumentTypeError("range needs STOP >= START and STEP > 0")
    return lo, hi, step


def _range_values(r: tuple[float, float, float]) -> list[float]:
    lo, hi, step = r
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, 12) for i in range(n + 1)]


def _phys(text: str) -> dict:
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        key, sep, val = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"--phys entries must be key=value, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad value in --phys: {item!r}") from exc
    return out


def _common(p: argparse.ArgumentParser, fmt: str) -> None:
    p.add_argument("--gamma", type=float, default=3.0)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default=fmt)
    p.add_argument("--config", default=None, help="key = value file; flags override it")


def _kgrid_args(p: argparse.ArgumentParser, kmax: float | None) -> None:
    p.add_argument("--kmin", type=float, default=1e-4)
    p.add_argument("--kmax", type=float, default=kmax,
                   help="upper wavenumber (default depends on gamma)" if kmax is None else None)
    p.add_argument("--knodes", type=int, default=400)


def _slab_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--slab-L", dest="slab_L", type=float, default=20.0)
    p.add_argument("--mu-nodes", dest="mu_nodes", type=int, default=16)
    p.add_argument("--c-nodes", dest="c_nodes", type=int, default=24)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kapitsa", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="moments g_n of the Bose weight")
    _common(p, "csv")
    p.add_argument("--n", dest="n_values", type=_float_list,
                   default=[float(n) for n in range(2, 13)])

    p = sub.add_parser("dispersion", help="dispersion matrix and omega(k) on a k-grid")
    _common(p, "csv")
    _kgrid_args(p, 1e3)

    p = sub.add_parser("jump", help="temperature-jump series and Kapitsa resistance")
    _common(p, "json")
    p.add_argument("--orders", type=int, default=2)
    p.add_argument("--b-plus", dest="b_plus", type=float, default=1.0)
    p.add_argument("--phys", type=_phys, default=None, help="T_s=..,u0=..,s=..")
    p.add_argument("--validate", action="store_true", help="add the half-space cross-check")
    _kgrid_args(p, None)
    _slab_args(p)

    p = sub.add_parser("figure1", help="C(gamma, q) against gamma for several q")
    _common(p, "csv")
    p.add_argument("--gamma-range", dest="gamma_range", type=_range, default=(3.0, 8.0, 0.1))
    p.add_argument("--q-list", dest="q_list", type=_float_list, default=[0.3, 0.5, 0.8])

    p = sub.add_parser("figure2", help="C(gamma, q) against q for several gamma")
    _common(p, "csv")
    p.add_argument("--q-range", dest="q_range", type=_range, default=(0.0, 0.95, 0.01))
    p.add_argument("--gamma-list", dest="gamma_list", type=_float_list, default=[3.0, 4.0, 5.0])

    p = sub.add_parser("validate", help="discrete-ordinates cross-check of eps_T")
    _common(p, "json")
    p.add_argument("--orders", type=int, default=2)
    p.add_argument("--b-plus", dest="b_plus", type=float, default=1.0)
    p.add_argument("--no-refine", dest="refine", action="store_false",
                   help="skip the grid-doubling and slab-length study")
    _kgrid_args(p, None)
    _slab_args(p)
    return parser


def read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep or not key.strip():
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            out[key.strip().replace("-", "_")] = val.strip()
    return out


_CONFIG_ALIASES = {"format": "fmt", "n": "n_values", "no_refine": "refine"}


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sub._actions}
        try:
            raw = read_config_file(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        defaults = {}
        for key, val in raw.items():
            key = _CONFIG_ALIASES.get(key, key)
            act = actions.get(key)
            if act is None or key in ("config", "help"):
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            if isinstance(act, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                defaults[key] = val.lower() in ("1", "true", "yes", "on")
            else:
                conv = act.type or str
                try:
                    defaults[key] = conv(val)
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise UsageError(f"bad config value for {key}: {exc}") from exc
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _model(args) -> ModelParams:
    return ModelParams(args.gamma, args.q)


def _physical(args) -> PhysicalParams | None:
    spec = getattr(args, "phys", None)
    if spec is None:
        return None
    allowed = {"T_s", "u0", "s", "a", "n_conc", "m_mass"}
    bad = set(spec) - allowed
    if bad:
        raise UsageError(f"unknown --phys keys: {sorted(bad)}")
    return PhysicalParams(**spec)


def config_from_args(args) -> RunConfig:
    tol = {k: getattr(args, k) for k in ("kmin", "kmax", "knodes", "slab_L", "mu_nodes", "c_nodes")
           if hasattr(args, k)}
    sweep = {k: getattr(args, k) for k in ("gamma_range", "q_list", "q_range", "gamma_list")
             if hasattr(args, k)}
    opts = {k: getattr(args, k) for k in ("orders", "b_plus", "validate", "refine", "n_values")
            if hasattr(args, k)}
    if "q_list" in sweep or "q_range" in sweep:
        qs = sweep.get("q_list") or _range_values(sweep["q_range"])
        if any(not 0.0 <= q < 1.0 for q in qs):
            raise UsageError("sweep values of q must lie in [0, 1)")
    return RunConfig(command=args.command, model=_model(args), phys=_physical(args),
                     sweep=sweep, out=args.out, fmt=args.fmt, tolerances=tol, options=opts)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return "" if v is None else str(v)


def _to_csv(columns: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _table_json(command: str, columns, rows) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "columns": list(columns),
            "rows": [[_jsonable(v) for v in r] for r in rows]}


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _workers() -> int | None:
    raw = os.environ.get("KAPITSA_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"KAPITSA_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("KAPITSA_THREADS must be >= 1")
    return n


def _parallel_rows(fn, points: list) -> list:
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        rows = list(pool.map(fn, points))
    return sorted(rows)


def _kgrid(cfg: RunConfig):
    from .jump import KGrid

    t = cfg.tolerances
    if t.get("kmax") is None:
        return KGrid.for_gamma(cfg.model.gamma, t.get("kmin", 1e-4), t.get("knodes", 400))
    return KGrid.log(t["kmin"], t["kmax"], t["knodes"])


def _slab(cfg: RunConfig):
    from .halfspace import HalfspaceGrid

    t = cfg.tolerances
    return HalfspaceGrid(L=t.get("slab_L", 20.0), n_mu=t.get("mu_nodes", 16),
                         n_c=t.get("c_nodes", 24))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_moments(cfg: RunConfig) -> tuple[str, int]:
    from .moments import moment, moment_closed_form

    rows = []
    for n in cfg.options["n_values"]:
        exact = moment_closed_form(int(n)) if float(n).is_integer() and n >= 2 else None
        rows.append([n, moment(n), exact])
    cols = ["n", "g_n", "closed_form"]
    return _render(cfg, "moments", cols, rows), EXIT_OK


def cmd_dispersion(cfg: RunConfig) -> tuple[str, int]:
    from .dispersion import dispersion_tables, lambda_entries

    t = cfg.tolerances
    k = np.geomspace(t["kmin"], t["kmax"], t["knodes"])
    tab = dispersion_tables(k, cfg.model.gamma)
    ent = lambda_entries(k, cfg.model.gamma)
    om = tab.omega()
    det = ent[:, 0, 0] * ent[:, 1, 1] - ent[:, 0, 1] * ent[:, 1, 0]
    rows = [[k[i], ent[i, 0, 0].real, ent[i, 0, 1].imag, ent[i, 1, 0].imag, ent[i, 1, 1].real,
             om[i], abs(det[i] - k[i] ** 2 * om[i]) / abs(k[i] ** 2 * om[i])]
            for i in range(k.size)]
    cols = ["k", "L11", "L12_imag", "L21_imag", "L22", "omega", "det_rel_residual"]
    return _render(cfg, "dispersion", cols, rows), EXIT_OK


def _render(cfg: RunConfig, command: str, cols, rows) -> str:
    if cfg.fmt == "csv":
        return _to_csv(cols, rows)
    return json.dumps(_table_json(command, cols, rows), indent=2) + "\n"


def cmd_figure1(cfg: RunConfig) -> tuple[str, int]:
    from .jump import jump_coefficient

    gammas = _range_values(cfg.sweep["gamma_range"])
    points = [(g, q) for q in cfg.sweep["q_list"] for g in gammas]

    def row(pt):
        g, q = pt
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PhononRegimeWarning)
            return [g, q, jump_coefficient(ModelParams(g, q))]

    rows = _parallel_rows(row, points)
    rows.sort(key=lambda r: (r[1], r[0]))
    return _render(cfg, "figure1", ["gamma", "q", "C_coeff"], rows), EXIT_OK


def cmd_figure2(cfg: RunConfig) -> tuple[str, int]:
    from .jump import jump_coefficient

    qs = _range_values(cfg.sweep["q_range"])
    points = [(q, g) for g in cfg.sweep["gamma_list"] for q in qs]

    def row(pt):
        q, g = pt
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PhononRegimeWarning)
            return [q, g, jump_coefficient(ModelParams(g, q))]

    rows = _parallel_rows(row, points)
    rows.sort(key=lambda r: (r[1], r[0]))
    return _render(cfg, "figure2", ["q", "gamma", "C_coeff"], rows), EXIT_OK


def _validator_block(cfg: RunConfig, analytic: float, refine: bool) -> dict:
    from .halfspace import HalfspaceGrid, extract_temperature_jump, solve_halfspace

    b = cfg.options.get("b_plus", 1.0)
    grid = _slab(cfg)
    fld = solve_halfspace(cfg.model, b, grid)
    res = extract_temperature_jump(fld, b)
    block = {
        "epsilon_T": res["epsilon_T"] * b,
        "epsilon_T_per_unit_flux": res["epsilon_T"],
        "b_eff": res["b_eff"],
        "relative_deviation": abs(res["epsilon_T"] * b - analytic) / abs(analytic),
        "flux_spread": fld.diagnostics.get("flux_spread"),
        "boundary_residual": fld.boundary_residual(),
        "outer_iterations": fld.diagnostics["outer_iterations"],
        "n_cells": fld.diagnostics["n_cells"],
    }
    if refine:
        table = [{"grid": "base", "L": grid.L, "n_mu": grid.n_mu, "n_c": grid.n_c,
                  "n_cells": fld.diagnostics["n_cells"], "epsilon_T": res["epsilon_T"]}]
        for name, gr in (("refined", grid.refined()), ("long_slab", HalfspaceGrid(
                L=2 * grid.L, n_mu=grid.n_mu, n_c=grid.n_c))):
            f2 = solve_halfspace(cfg.model, b, gr)
            e2 = extract_temperature_jump(f2, b)["epsilon_T"]
            table.append({"grid": name, "L": gr.L, "n_mu": gr.n_mu, "n_c": gr.n_c,
                          "n_cells": f2.diagnostics["n_cells"], "epsilon_T": e2,
                          "relative_change": abs(e2 - res["epsilon_T"]) / abs(res["epsilon_T"])})
        block["convergence"] = table
    return block


def cmd_jump(cfg: RunConfig) -> tuple[str, int]:
    from .jump import epsilon_T

    opts = cfg.options
    report = epsilon_T(cfg.model, orders=opts["orders"], b_plus=opts["b_plus"],
                       kgrid=_kgrid(cfg) if opts["orders"] > 1 else None, phys=cfg.phys)
    doc = {"schema_version": SCHEMA_VERSION, "command": "jump"}
    doc.update(report.to_dict())
    code = EXIT_OK
    if opts.get("validate"):
        try:
            doc["validator"] = _validator_block(cfg, report.epsilon_T, refine=False)
        except NumericalError as exc:
            doc["validator"] = {"error": {"type": type(exc).__name__, "message": str(exc)}}
            code = EXIT_NUMERICAL
    if cfg.fmt == "csv":
        cols = ["gamma", "q", "orders", "epsilon_T", "C", "R_SI"]
        return _to_csv(cols, [[doc[c] for c in cols]]), code
    return json.dumps(_jsonable(doc), indent=2) + "\n", code


def cmd_validate(cfg: RunConfig) -> tuple[str, int]:
    from .jump import epsilon0, epsilon_T

    opts = cfg.options
    q = cfg.model.q
    zeroth = (1 + q) / (1 - q) * epsilon0(cfg.model) * opts["b_plus"]
    doc = {"schema_version": SCHEMA_VERSION, "command": "validate",
           "gamma": cfg.model.gamma, "q": q, "b_plus": opts["b_plus"],
           "analytic_zeroth": zeroth}
    try:
        series = epsilon_T(cfg.model, orders=opts["orders"], b_plus=opts["b_plus"],
                           kgrid=_kgrid(cfg) if opts["orders"] > 1 else None)
        doc["analytic_series"] = series.epsilon_T
        doc["epsilon_terms"] = series.epsilon_terms
    except NumericalError as exc:
        doc["analytic_series"] = None
        doc["analytic_error"] = {"type": type(exc).__name__, "message": str(exc)}
    doc["validator"] = _validator_block(cfg, zeroth, refine=opts.get("refine", True))
    if doc["analytic_series"] is not None:
        doc["validator"]["relative_deviation_series"] = (
            abs(doc["validator"]["epsilon_T"] - doc["analytic_series"]) / abs(doc["analytic_series"]))
    if cfg.fmt == "csv":
        cols = ["gamma", "q", "analytic_zeroth", "analytic_series", "numerical", "relative_deviation"]
        row = [cfg.model.gamma, q, zeroth, doc["analytic_series"], doc["validator"]["epsilon_T"],
               doc["validator"]["relative_deviation"]]
        return _to_csv(cols, [row]), EXIT_OK
    return json.dumps(_jsonable(doc), indent=2) + "\n", EXIT_OK


_DISPATCH = {
    "moments": cmd_moments,
    "dispersion": cmd_dispersion,
    "jump": cmd_jump,
    "figure1": cmd_figure1,
    "figure2": cmd_figure2,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"kapitsa: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = config_from_args(args)
        text, code = _DISPATCH[cfg.command](cfg)
    except (UsageError, DomainError) as exc:
        print(f"kapitsa: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"kapitsa: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _emit(cfg, text)
    return code


if __name__ == "__main__":
    sys.exit(main())
