"""Command-line interface: ``apollonian <command> [options]``.

Exit codes: 0 success, 1 usage or invalid input, 2 integer overflow,
3 memory cap exceeded, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from .descartes import (
    PRESETS,
    CurvatureOverflowError,
    DescartesForm,
    GeneratorSet,
    eval_form,
    is_reduced,
    reduce_to_root,
    resolve_root,
)

COMMANDS = ("generate", "count", "fit-delta", "congruence", "primes", "sieve-report",
            "geometry-verify", "validate", "gnuplot")
MEMORY_ENV = "APOLLONIAN_MEMORY_CAP"

EXIT_USAGE, EXIT_OVERFLOW, EXIT_MEMORY, EXIT_VERIFY = 1, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    root: tuple[int, ...] = PRESETS["strip3d"]
    T: int = 1000
    norm: str = "max"
    slack: str = "1"
    workers: int = 1
    checkpoints: list[str] | None = None
    engine: str = "auto"
    out: str | None = None
    fmt: str = "csv"
    state: str | None = None
    memory_cap: int | None = None
    almost_r: int = 0
    primes_list: list[int] = field(default_factory=lambda: [5, 7, 11, 13])
    check_mult: list[tuple[int, int]] = field(default_factory=list)
    ks: list[int] = field(default_factory=lambda: [1, 2])
    D: int = 10**6
    z: int | None = None
    bad_primes: list[int] = field(default_factory=list)
    csv_in: str | None = None
    seed: int = 0
    strict: bool = False
    notes: list[str] = field(default_factory=list)

    def fingerprint(self) -> str:
        skip = {"out", "workers", "memory_cap", "state", "notes", "fmt"}
        canon = {k: v for k, v in asdict(self).items() if k not in skip}
        return hashlib.sha256(json.dumps(canon, sort_keys=True, default=str).encode()).hexdigest()[:16]

    def header(self) -> str:
        now = dt.datetime.now(dt.timezone.utc).replace(microsecond=0).isoformat()
        return f"# fingerprint={self.fingerprint()} created={now}"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _pairs(s: str) -> list[tuple[int, int]]:
    out = []
    for part in s.split(","):
        a, _, b = part.lower().partition("x")
        if not b:
            raise argparse.ArgumentTypeError(f"expected pairs like 5x7, got {part!r}")
        out.append((int(a), int(b)))
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="apollonian", description="Apollonian curvature orbits: counts, congruences, primes, geometry checks.",
                epilog="A user-supplied root is assumed to have a discrete orbit; this is not checked. "
                       "Exit codes: 0 ok, 1 usage, 2 overflow, 3 memory cap, 4 verification.")
    p.add_argument("--config", help="JSON file with option defaults (command-line flags win)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def orbit_opts(sp):
        sp.add_argument("--root", help=f"curvatures like 0,0,1,1,1 or a preset: {', '.join(PRESETS)}")
        sp.add_argument("--T", type=int, help="norm bound (strict)")
        sp.add_argument("--norm", choices=["max", "euclidean"])
        sp.add_argument("--slack", help="exploration margin for the bfs engine (rational >= 1)")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--checkpoints", help="comma-separated thresholds (default: dyadic grid)")
        sp.add_argument("--engine", choices=["auto", "tree", "bfs", "python"])
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", dest="fmt", choices=["csv", "json", "tsv-stream"])
        sp.add_argument("--state", help="resume state file (tree engine)")
        sp.add_argument("--memory-cap", type=int, help=f"byte budget (env {MEMORY_ENV})")

    for name, helptext in [("generate", "stream every orbit vector, sorted, tab-separated"),
                           ("count", "census of N(T_j) at each checkpoint"),
                           ("fit-delta", "fit the growth exponent of N(T)"),
                           ("primes", "prime and almost-prime curvature counts")]:
        sp = sub.add_parser(name, help=helptext)
        orbit_opts(sp)
        if name == "primes":
            sp.add_argument("--almost-r", type=int, help="also count r-almost primes for r = 1..R")

    sp = sub.add_parser("congruence", help="orbit sizes and densities g_k modulo primes")
    sp.add_argument("--root")
    sp.add_argument("--primes", dest="primes_list", type=_int_list)
    sp.add_argument("--check-mult", type=_pairs, help="coprime pairs like 5x7,7x11")
    sp.add_argument("--k", dest="ks", type=_int_list, help="which f_k to check (default 1,2)")
    sp.add_argument("--out")
    sp.add_argument("--format", dest="fmt", choices=["csv", "json"])
    sp.add_argument("--strict", action="store_true", help="exit 4 if a multiplicativity check fails")

    sp = sub.add_parser("sieve-report", help="Selberg main term, tau_3 weights, Mertens products")
    sp.add_argument("--D", type=int)
    sp.add_argument("--z", type=int)
    sp.add_argument("--bad-primes", type=_int_list)
    sp.add_argument("--out")

    sp = sub.add_parser("geometry-verify", help="numerical checks of the hyperbolic formulas")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.add_argument("--format", dest="fmt", choices=["text", "json"])

    sp = sub.add_parser("validate", help="compare slack 1, slack 3 and the tree engine")
    sp.add_argument("--root")
    sp.add_argument("--T", type=int)
    sp.add_argument("--norm", choices=["max", "euclidean"])

    sp = sub.add_parser("gnuplot", help="print a gnuplot script for a census CSV")
    sp.add_argument("csv_in", metavar="CSV")
    sp.add_argument("--out")
    return p


def _load_root(spec) -> tuple[tuple[int, ...], list[str]]:
    try:
        root = resolve_root(spec)
    except (ValueError, TypeError) as e:
        raise UsageError(str(e)) from None
    if len(root) not in (4, 5):
        raise UsageError(f"root needs 4 or 5 curvatures, got {len(root)}")
    form = DescartesForm(len(root) - 2)
    q = eval_form(form, root, exact=True)
    if q != 0:
        raise UsageError(f"root {','.join(map(str, root))} is off the cone: Q = {q}")
    notes = []
    gens = GeneratorSet(form.n)
    if not is_reduced(gens, root):
        red, word = reduce_to_root(gens, root)
        notes.append(f"root {root} reduced to {red.vector} by word {word}")
        root = red.vector
    return root, notes


def parse_config(argv=None) -> RunConfig:
    """Validated :class:`RunConfig` from flags, an optional JSON file and the environment."""
    ns = build_parser().parse_args(argv)
    values = {}
    if ns.config:
        try:
            values.update(json.loads(Path(ns.config).read_text()))
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config file: {e}") from None
    for k, v in vars(ns).items():
        if k != "config" and v is not None:
            values[k] = v
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(values) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    if "memory_cap" not in values and os.environ.get(MEMORY_ENV):
        values["memory_cap"] = int(os.environ[MEMORY_ENV])
    if "root" in values:
        values["root"], notes = _load_root(values["root"])
        values["notes"] = notes
    if isinstance(values.get("checkpoints"), str):
        values["checkpoints"] = [c for c in values["checkpoints"].split(",") if c.strip()]
    cfg = RunConfig(**values)
    if cfg.T < 1:
        raise UsageError("--T must be positive")
    try:
        if Fraction(cfg.slack) < 1:
            raise UsageError("--slack must be at least 1")
    except ValueError:
        raise UsageError(f"bad slack {cfg.slack!r}") from None
    if cfg.workers < 1:
        raise UsageError("--workers must be positive")
    if cfg.fmt == "tsv-stream" and cfg.command != "generate":
        raise UsageError("tsv-stream output is only available for generate")
    if cfg.state and cfg.engine == "bfs":
        raise UsageError("--state needs the tree engine")
    return cfg


# ---------------------------------------------------------------------------


def _emit(cfg: RunConfig, text: str) -> None:
    body = cfg.header() + "\n" + text
    if cfg.out:
        Path(cfg.out).write_text(body)
    else:
        sys.stdout.write(body)


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _enum_config(cfg: RunConfig, primes: bool = False):
    from .enumerate import EnumerationConfig

    cps = None
    if cfg.checkpoints:
        cps = tuple(Fraction(c) for c in cfg.checkpoints)
    return EnumerationConfig(cfg.root, cfg.T, norm=cfg.norm, slack=Fraction(cfg.slack),
                             workers=cfg.workers, memory_cap=cfg.memory_cap, checkpoints=cps,
                             engine=cfg.engine, primes=primes, almost_r=cfg.almost_r)


def _census(cfg: RunConfig, primes: bool = False):
    from .enumerate import enumerate_orbit

    ec = _enum_config(cfg, primes)
    if ec.slack == 1 and ec.resolved_engine() == "bfs":
        print("note: slack 1 assumes connectivity inside the ball; check with `apollonian validate`",
              file=sys.stderr)
    census = enumerate_orbit(ec, state_path=cfg.state)
    if census.violations:
        print(f"warning: {census.violations} tree edges decreased the norm; rerun with --engine bfs",
              file=sys.stderr)
    return census


def _cmd_count(cfg: RunConfig, primes: bool = False) -> int:
    census = _census(cfg, primes)
    if cfg.fmt == "json":
        _emit(cfg, census.to_json() + "\n")
    else:
        _emit(cfg, _csv_text(census.csv_rows()))
    print(f"N({cfg.T}) = {census.total}  [{census.engine}, {census.elapsed:.2f}s]", file=sys.stderr)
    return 0


def _cmd_generate(cfg: RunConfig) -> int:
    from .enumerate import sorted_orbit

    rows = sorted_orbit(cfg.root, cfg.T, cfg.norm)
    lines = "".join("\t".join(map(str, r)) + "\n" for r in rows)
    _emit(cfg, lines)
    print(f"{len(rows)} vectors with norm < {cfg.T}", file=sys.stderr)
    return 0


def _cmd_fit(cfg: RunConfig) -> int:
    from .enumerate import _fmt, fit_exponent

    census = _census(cfg)
    fit = fit_exponent(census)
    rows = [["T", "N", "window_slope"]]
    slopes = [""] + [f"{w:.6f}" for w in fit.window_slopes]
    pts = [(c, n) for c, n in zip(census.checkpoints, census.counts) if n > 0]
    for (c, n), s in zip(pts, slopes):
        rows.append([_fmt(c), str(n), s])
    if cfg.fmt == "json":
        _emit(cfg, json.dumps({"delta": fit.delta, "windows": fit.windows,
                               "counts": [[str(c), n] for c, n in pts]}, indent=2) + "\n")
    else:
        _emit(cfg, _csv_text(rows))
    print(f"delta_hat = {fit.delta:.6f} (last window {fit.window_slopes[-1]:.6f})", file=sys.stderr)
    return 0


def _cmd_congruence(cfg: RunConfig) -> int:
    from . import congruence as cg

    gens = GeneratorSet(len(cfg.root) - 2)
    stats = [cg.congruence_stats(cfg.root, p, gens) for p in cfg.primes_list]
    checks = []
    failed = False
    for d1, d2 in cfg.check_mult:
        for k in cfg.ks:
            mc = cg.check_multiplicativity(cfg.root, gens, d1, d2, k)
            checks.append(mc)
            failed |= not mc.equal
    if cfg.fmt == "json":
        data = {
            "root": list(cfg.root),
            "stats": [{"d": s.d, "orbit_size": s.orbit_size, "zero_counts": list(s.zero_counts),
                       "g": [str(g) for g in s.g]} for s in stats],
            "multiplicativity": [{"d1": c.d1, "d2": c.d2, "k": c.k, "lhs": str(c.lhs), "rhs": str(c.rhs),
                                  "equal": c.equal} for c in checks],
        }
        _emit(cfg, json.dumps(data, indent=2) + "\n")
    else:
        _emit(cfg, _csv_text([cg.csv_header(len(cfg.root))] + [s.csv_row() for s in stats]))
    for s in stats:
        pg = ", ".join(f"p*g{k}={float(s.d * g):.4f}" for k, g in enumerate(s.g, 1) if k <= 2)
        print(f"p={s.d}: orbit {s.orbit_size}, {pg}", file=sys.stderr)
    for c in checks:
        verdict = "equal" if c.equal else "DIFFERENT"
        print(f"g_{c.k}({c.d1 * c.d2}) = {c.lhs} vs g_{c.k}({c.d1}) g_{c.k}({c.d2}) = {c.rhs}: {verdict}",
              file=sys.stderr)
    return EXIT_VERIFY if (failed and cfg.strict) else 0


def _cmd_sieve(cfg: RunConfig) -> int:
    from .primes import sieve_report

    if cfg.D < 4:
        raise UsageError("--D must be at least 4")
    rep = sieve_report(cfg.D, z=cfg.z, bad_primes=cfg.bad_primes)
    _emit(cfg, rep.to_json() + "\n")
    return 0


def _cmd_geometry(cfg: RunConfig) -> int:
    from .hyperbolic import geometry_verify

    checks = geometry_verify(cfg.seed)
    if cfg.fmt == "json":
        _emit(cfg, json.dumps([asdict(c) for c in checks], indent=2) + "\n")
    else:
        width = max(len(c.name) for c in checks)
        lines = [f"{'check':<{width}}  {'residual':>12}  {'tolerance':>10}  result"]
        for c in checks:
            lines.append(f"{c.name:<{width}}  {c.residual:12.3e}  {c.tolerance:10.1e}  "
                         f"{'pass' if c.passed else 'FAIL'}")
        _emit(cfg, "\n".join(lines) + "\n")
    return 0 if all(c.passed for c in checks) else EXIT_VERIFY


def _cmd_validate(cfg: RunConfig) -> int:
    from .enumerate import validate_connectivity

    if cfg.T > 1000:
        raise UsageError("validate is limited to T <= 1000")
    rep = validate_connectivity(cfg.root, cfg.T, cfg.norm)
    print(f"root {rep.root}, T={rep.T}: slack1={rep.slack1} slack3={rep.slack3} tree={rep.tree}")
    for v in rep.only_via_large:
        print("only via large intermediates:", v)
    return 0 if rep.consistent else EXIT_VERIFY


def gnuplot_script(csv_path: str) -> str:
    return "\n".join([
        "set datafile separator ','",
        "set logscale xy",
        "set key left top",
        "set xlabel 'T'",
        "set ylabel 'N(T)'",
        "f(x) = c * x**d",
        "c = 1; d = 2.5",
        f"fit f(x) '{csv_path}' every ::1 using 1:2 via c, d",
        f"plot '{csv_path}' every ::1 using 1:2 with points title 'N(T)', f(x) title sprintf('%.3f T^{{%.3f}}', c, d)",
        "",
    ])


def run(cfg: RunConfig) -> int:
    for note in cfg.notes:
        print("note:", note, file=sys.stderr)
    handlers = {
        "generate": _cmd_generate,
        "count": _cmd_count,
        "fit-delta": _cmd_fit,
        "primes": lambda c: _cmd_count(c, primes=True),
        "congruence": _cmd_congruence,
        "sieve-report": _cmd_sieve,
        "geometry-verify": _cmd_geometry,
        "validate": _cmd_validate,
        "gnuplot": lambda c: (_emit(c, gnuplot_script(c.csv_in)), 0)[1],
    }
    return handlers[cfg.command](cfg)


def main(argv=None) -> int:
    from .enumerate import MemoryCapExceeded, ResumeMismatch

    try:
        cfg = parse_config(argv)
        return run(cfg)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CurvatureOverflowError, OverflowError) as e:
        print(f"overflow: {e}", file=sys.stderr)
        return EXIT_OVERFLOW
    except MemoryCapExceeded as e:
        print(f"memory cap exceeded: {e}", file=sys.stderr)
        partial = e.census
        if partial is not None:
            print(f"partial census: {list(zip(map(str, partial.checkpoints), partial.counts))}", file=sys.stderr)
        return EXIT_MEMORY
    except (ResumeMismatch, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
