"""Command-line front end: grids, ladder tables, chains, Gram reports and
verification suites, written as CSV or JSON to stdout.

Exit codes: 0 success, 2 usage error, 3 numeric failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import hlgrid, iterations, orthosys, specfun, verify
from .errors import LadderError
from .hlgrid import QuadratureSpec
from .ladder import Ladder, LadderConfig, required_grid_t_max

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

DEFAULT_SUITES = list(verify.SUITES) + ["determinism"]
SUITE_CHOICES = ["all"] + DEFAULT_SUITES + list(verify.OPTIONAL_SUITES)


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything a command depends on; there is no random state."""

    grid_t_max: float | None = None
    a: float = 7.0
    T0: float = 100.0
    rel_tol: float = orthosys.GRAM_REL_TOL
    output_format: str = "csv"
    cache_path: str | None = None
    jobs: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        return cls(
            grid_t_max=args.t_max, a=args.a, T0=args.T0, rel_tol=args.rel_tol,
            output_format=args.format, cache_path=args.cache, jobs=args.jobs,
        )

    @property
    def ladder_config(self) -> LadderConfig:
        return LadderConfig(a=self.a, T0=self.T0)


# --------------------------------------------------------------- formatting

def format_value(v) -> str:
    """Floats with 17 significant digits; everything else via str."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.16e}" if math.isfinite(v) else str(v)
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def render(rows: list[dict], columns: list[str], fmt: str) -> str:
    if fmt == "json":
        body = [{c: _json_value(r.get(c)) for c in columns} for r in rows]
        return json.dumps({"columns": columns, "rows": body}, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(columns)
    for r in rows:
        writer.writerow([format_value(r.get(c)) for c in columns])
    return buf.getvalue()


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ------------------------------------------------------------------ commands

def open_ladder(cfg: RunConfig, T_needed: float) -> Ladder:
    spec = QuadratureSpec()
    t_max = max(cfg.grid_t_max or 0.0, required_grid_t_max(T_needed, cfg.ladder_config, spec))
    grid = hlgrid.load_or_build(t_max, spec, cfg.cache_path)
    return Ladder(grid, cfg.ladder_config)


GRID_COLUMNS = ["path", "format", "t_max", "coverage", "n_panels", "n_nodes", "F_t_max"]


def cmd_grid(cfg: RunConfig, t_max: float):
    spec = QuadratureSpec()
    path = Path(cfg.cache_path) if cfg.cache_path else hlgrid.default_cache_path(spec)
    grid = hlgrid.build_grid(t_max, spec)
    path.parent.mkdir(parents=True, exist_ok=True)
    hlgrid.save_grid(grid, path)
    row = {
        "path": str(path), "format": hlgrid.FORMAT_VERSION, "t_max": float(t_max),
        "coverage": grid.coverage, "n_panels": grid.n_panels, "n_nodes": grid.z2.size,
        "F_t_max": float(hlgrid.hl_integral(t_max, grid)),
    }
    return [row], GRID_COLUMNS, True


LADDER_COLUMNS = [
    "T", "phi", "phi1", "T_minus_phi1", "one_minus_c_pi", "ratio",
    "complementarity", "omega_over_lnT", "hl_residual", "error",
]


def ladder_row(L: Ladder, T: float) -> dict:
    row = {"T": T}
    try:
        phi = L.solve_phi(T)
        y = 0.5 * phi
        cp = (1.0 - specfun.EULER_C) * specfun.prime_count(T)
        row.update(
            phi=phi, phi1=y, T_minus_phi1=T - y, one_minus_c_pi=cp, ratio=(T - y) / cp,
            complementarity=(y + cp) / T, omega_over_lnT=L.omega(T) / math.log(T),
            hl_residual=L.hl_representation_residual(T),
        )
    except LadderError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_ladder(cfg: RunConfig, Ts, ladder: Ladder | None = None):
    Ts = [float(T) for T in Ts]
    ok_T = [T for T in Ts if math.isfinite(T) and T >= cfg.T0]
    L = ladder or open_ladder(cfg, max(ok_T, default=cfg.T0))
    rows = _map(lambda T: ladder_row(L, T), Ts, cfg.jobs)
    return rows, LADDER_COLUMNS, all(not r.get("error") for r in rows)


CHAIN_COLUMNS = ["k", "lo", "hi", "length", "gap", "gap_ratio"]


def _chain_reach(T: float, U: float, k: int) -> float:
    # reverse points grow by about a factor 1 + 1/ln T per step
    return (T + U) * (1.0 + 0.1 * k)


def cmd_chain(cfg: RunConfig, T: float, U: float | None, k: int, allow_inadmissible: bool = False, ladder: Ladder | None = None):
    U = T / (20.0 * math.log(T)) if U is None else U
    iterations.check_admissible(T, U, allow_inadmissible)
    L = ladder or open_ladder(cfg, _chain_reach(T, U, k))
    chain = iterations.build_chain(T, U, k, L, allow_inadmissible=allow_inadmissible)
    gaps = [None] + list(chain.gaps())
    ratios = [None] + list(chain.gap_ratios())
    rows = [
        {"k": s.k, "lo": s.lo, "hi": s.hi, "length": s.length,
         "gap": None if g is None else float(g), "gap_ratio": None if r is None else float(r)}
        for s, g, r in zip(chain.segments, gaps, ratios)
    ]
    return rows, CHAIN_COLUMNS, True


GRAM_COLUMNS = ["m", "n", "entry", "transported", "expected", "max_offdiag_ratio", "diag_scale"]

BASES = {"legendre": orthosys.legendre_system, "trig": orthosys.trigonometric_system}


def cmd_gram(cfg: RunConfig, base: str, p: int, T: float, N: int, p2: int | None = None, ladder: Ladder | None = None):
    system = BASES[base]()
    if p < 0 or (p2 is not None and p2 < 1):
        raise UsageError("--p must be >= 0 and --p2 >= 1")
    if p == 0:
        if p2 is not None:
            raise UsageError("--p2 needs --p >= 1")
        rep = orthosys.base_gram(system, N, rel_tol=cfg.rel_tol)
    else:
        depth = max(p, p2 or 0)
        L = ladder or open_ladder(cfg, _chain_reach(T, 2.0 * system.l, depth))
        specs = [orthosys.iterated_spec(system, p, T, L)]
        if p2 is not None:
            specs.append(orthosys.iterated_spec(system, p2, T, L))
        rep = orthosys.iterated_gram(specs, L, N, rel_tol=cfg.rel_tol)
    norms = system.norms(N)
    rows = []
    for m in range(N):
        for n in range(N):
            rows.append({
                "m": m, "n": n, "entry": float(rep.entries[m, n]),
                "transported": float(rep.entries[m, n] / rep.diag_scale),
                "expected": float(norms[m]) if m == n else 0.0,
                "max_offdiag_ratio": rep.max_offdiag_ratio, "diag_scale": rep.diag_scale,
            })
    return rows, GRAM_COLUMNS, True


VERIFY_COLUMNS = ["suite", "check", "passed", "value", "threshold", "detail"]


def determinism_checks(cfg: RunConfig, ladder: Ladder) -> list[verify.Check]:
    """Re-render representative commands and compare the output bytes."""
    out = []
    cases = {
        "ladder": lambda c: cmd_ladder(c, [1e3, 5e3, 1e4], ladder=ladder),
        "chain": lambda c: cmd_chain(c, 1e4, None, 3, ladder=ladder),
        "gram": lambda c: cmd_gram(c, "legendre", 1, 1e4, 4, ladder=ladder),
    }
    for name, fn in cases.items():
        texts = []
        for jobs, fmt in ((1, "csv"), (1, "csv"), (2, "csv"), (1, "json"), (2, "json")):
            c = RunConfig.from_dict({**cfg.to_dict(), "jobs": jobs, "output_format": fmt})
            rows, cols, _ = fn(c)
            texts.append(render(rows, cols, fmt))
        same = texts[0] == texts[1] == texts[2] and texts[3] == texts[4]
        out.append(verify.Check("determinism", f"{name} identical across runs and jobs", same, float(same), 1.0))
    with tempfile.TemporaryDirectory() as tmp:
        blobs = []
        for i in range(2):
            path = Path(tmp) / f"g{i}.bin"
            hlgrid.save_grid(hlgrid.build_grid(2e3), path)
            blobs.append(path.read_bytes())
    same = blobs[0] == blobs[1]
    out.append(verify.Check("determinism", "grid cache bytes identical across builds", same, float(same), 1.0))
    return out


def cmd_verify(cfg: RunConfig, suites, timings: bool = False):
    names = []
    for s in suites:
        names += DEFAULT_SUITES if s == "all" else [s]
    names = list(dict.fromkeys(names))
    ctx = verify.Context(QuadratureSpec(), cfg.ladder_config, cfg.cache_path)
    checks = []
    times = {}
    for name in names:
        if name == "determinism":
            got = determinism_checks(cfg, ctx.ladder)
            t = None
        else:
            got, t = verify.run([name], ctx)
        checks += got
        if t:
            times.update(t)
    rows = [
        {"suite": c.suite, "check": c.name, "passed": c.passed, "value": c.value, "threshold": c.threshold, "detail": c.detail}
        for c in checks
    ]
    if timings:
        rows += [{"suite": n, "check": "runtime seconds", "passed": True, "value": v, "threshold": None, "detail": "wall clock"} for n, v in times.items()]
    return rows, VERIFY_COLUMNS, all(c.passed for c in checks)


# -------------------------------------------------------------------- parser

def _float(s: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}")


def _add_common(p: argparse.ArgumentParser, suppress: bool) -> None:
    # subcommands repeat the options without defaults so they do not
    # overwrite values given before the command name
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--t-max", type=_float, default=d(None), help="grid coverage (default: what the command needs)")
    p.add_argument("--a", type=_float, default=d(7.0), help="mu-family parameter a in [7, 8]")
    p.add_argument("--T0", type=_float, default=d(100.0), help="smallest admissible T")
    p.add_argument("--rel-tol", type=_float, default=d(orthosys.GRAM_REL_TOL), help="adaptive quadrature relative tolerance")
    p.add_argument("--format", choices=["csv", "json"], default=d("csv"))
    p.add_argument("--cache", default=d(None), metavar="PATH", help=f"grid cache file (default under ${hlgrid.CACHE_ENV} or ~/.cache)")
    p.add_argument("--jobs", type=int, default=d(1), help="worker threads for row-level work")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _add_common(common, suppress=True)

    parser = argparse.ArgumentParser(prog="jacobs-ladder", description=__doc__.splitlines()[0])
    _add_common(parser, suppress=False)
    parser.add_argument("--verify", dest="verify_flag", choices=SUITE_CHOICES, metavar="SUITE", help="shortcut for 'verify SUITE'")
    sub = parser.add_subparsers(dest="command")

    sub.add_parser("grid", parents=[common], help="build and cache the Z^2 grid")

    p = sub.add_parser("ladder", parents=[common], help="tabulate phi, phi_1 and the complementarity ratio")
    p.add_argument("--T", type=_float, nargs="+", required=True)

    p = sub.add_parser("chain", parents=[common], help="reverse segments, lengths and gaps")
    p.add_argument("--T", type=_float, required=True)
    p.add_argument("--U", type=_float, default=None, help="segment length (default T/(20 ln T))")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--allow-inadmissible", action="store_true", help="skip the gate U <= T/(10 ln T)")

    p = sub.add_parser("gram", parents=[common], help="Gram matrix of an iterated system")
    p.add_argument("--base", choices=sorted(BASES), default="legendre")
    p.add_argument("--p", type=int, default=1, help="depth (0 gives the base system)")
    p.add_argument("--p2", type=int, default=None, help="inner depth of a two-stage composition")
    p.add_argument("--T", type=_float, default=1e4)
    p.add_argument("--N", type=int, default=6)

    p = sub.add_parser("verify", parents=[common], help="run verification suites")
    p.add_argument("suites", nargs="+", choices=SUITE_CHOICES, metavar="SUITE", help=", ".join(SUITE_CHOICES))
    p.add_argument("--timings", action="store_true", help="append wall-clock rows (not reproducible)")
    return parser


def dispatch(args) -> tuple[list[dict], list[str], bool]:
    cfg = RunConfig.from_args(args)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    cmd = args.command
    if cmd is None and args.verify_flag:
        return cmd_verify(cfg, [args.verify_flag])
    if cmd == "grid":
        if args.t_max is None:
            raise UsageError("grid needs --t-max")
        return cmd_grid(cfg, args.t_max)
    if cmd == "ladder":
        return cmd_ladder(cfg, args.T)
    if cmd == "chain":
        return cmd_chain(cfg, args.T, args.U, args.k, args.allow_inadmissible)
    if cmd == "gram":
        if args.N < 2:
            raise UsageError("--N must be >= 2")
        return cmd_gram(cfg, args.base, args.p, args.T, args.N, args.p2)
    if cmd == "verify":
        return cmd_verify(cfg, args.suites, args.timings)
    raise UsageError("a command is required")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        rows, columns, ok = dispatch(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LadderError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(render(rows, columns, args.format))
    sys.stdout.flush()
    return EXIT_OK if ok else EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
