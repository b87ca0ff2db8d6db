"""Command-line entry point.

Subcommands: phi, fnu, region, verify, reconstruct, obstruction, sample,
paircorr.  Exit codes: 0 success, 1 failed mimicry or obstruction
assertion, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import __version__, correlation, kernels, mimicry, obstruction
from .errors import InvalidParameter, IoFailure, MimicryError
from .samplers import RngState, SamplerSpec

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
ROUTE_TOL = 1e-10


# --------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def emit_csv(rows: Iterable[Sequence[Any]], header: Sequence[str], path=None) -> str:
    """Write comma-separated rows with LF endings and 17 significant digits.

    With ``path=None`` the text is only returned.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        row = list(row)
        if len(row) != len(header):
            raise InvalidParameter(f"row width {len(row)} does not match header width {len(header)}")
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        try:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc
    return text


def _emit_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n"
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc
    return text


def _out(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    command: str
    options: Dict[str, Any] = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None


def _window(v) -> List[float]:
    w = [float(x) for x in v]
    if len(w) != 2 or not w[1] >= w[0]:
        raise argparse.ArgumentTypeError(f"window needs LO HI with LO <= HI, got {v}")
    return w


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bandmimic", description="Band-limited mimicry of point processes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="JSON file of option values; command-line flags win")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("phi", help="limiting factorial moments Phi_n(a)")
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--route", choices=["both", "closed", "cycle-index"], default="both")
    s.add_argument("--csv")

    s = sub.add_parser("fnu", help="cyclic indicator integrals f_nu(r)")
    s.add_argument("--nu", type=int, required=True)
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--mode", choices=["both", "closed", "numeric"], default="both")
    s.add_argument("--grid", type=int, default=obstruction.DEFAULT_GRID)
    s.add_argument("--csv")

    s = sub.add_parser("region", help="mimicry region map in the (a, B) plane")
    s.add_argument("--process", choices=["poisson", "sine"], required=True)
    s.add_argument("--step", type=float, default=0.01)
    s.add_argument("--a-max", type=float, default=2.0)
    s.add_argument("--B-max", type=float, default=3.0)
    s.add_argument("--a", type=float, help="classify a single point (needs --B)")
    s.add_argument("--B", type=float)
    s.add_argument("--csv")
    s.add_argument("--svg")

    s = sub.add_parser("verify", help="check mimicry on a test battery")
    s.add_argument("--process", choices=["poisson", "sine"], required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--B", type=float, required=True)
    s.add_argument("--levels", type=int, default=2)
    s.add_argument("--lam", type=float, default=1.0)
    s.add_argument("--replicas", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--window", nargs=2, type=float, default=[-20.0, 20.0])
    s.add_argument("--analytic", action="store_true", help="compare analytic values on both sides")
    s.add_argument("--json")

    s = sub.add_parser("reconstruct", help="lattice atoms from a continuous structure")
    s.add_argument("--process", choices=["poisson", "sine"], required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--B", type=float, required=True)
    s.add_argument("--k", type=float, nargs="+", required=True)
    s.add_argument("--lam", type=float, default=1.0)
    s.add_argument("--eps", type=float)
    s.add_argument("--method", choices=["bump", "sinc"], default="bump")

    s = sub.add_parser("obstruction", help="moment obstruction report")
    s.add_argument("--a", type=float, nargs="+", required=True)
    s.add_argument("--json")

    s = sub.add_parser("sample", help="draw one configuration")
    s.add_argument("--process", choices=["poisson", "discrete_poisson", "discrete_sine", "continuous_sine"],
                   required=True)
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--lam", type=float, default=1.0)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--window", nargs=2, type=float, default=[-20.0, 20.0])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--csv")

    s = sub.add_parser("paircorr", help="empirical pair correlation with analytic overlay")
    s.add_argument("--process", choices=["poisson", "discrete_poisson", "discrete_sine", "continuous_sine"],
                   required=True)
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--lam", type=float, default=1.0)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--window", nargs=2, type=float, default=[-20.0, 20.0])
    s.add_argument("--replicas", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--bin", type=float)
    s.add_argument("--max-sep", type=float, default=5.0)
    s.add_argument("--buffer", type=float)
    s.add_argument("--csv")
    s.add_argument("--svg")
    return p


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._actions:  # noqa: SLF001
        if isinstance(action, argparse._SubParsersAction):  # noqa: SLF001
            return action.choices[command]
    raise KeyError(command)


def _config_path(argv: Sequence[str]) -> Optional[str]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    return known.config


def resolve_config(argv: Sequence[str]) -> RunConfig:
    """Parse flags, filling unset options from the ``--config`` JSON file."""
    parser = build_parser()
    path = _config_path(argv)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            parser.error(f"--config {path}: {exc}")
        if not isinstance(cfg, dict):
            parser.error(f"--config {path}: expected a JSON object")
        command = next((a for a in argv if a in COMMANDS), cfg.get("command"))
        if command not in COMMANDS:
            parser.error("no command given")
        if command not in argv:
            argv = list(argv) + [command]
        sub = _subparser(parser, command)
        cfg = {k.replace("-", "_"): v for k, v in cfg.items() if k != "command"}
        known = {a.dest for a in sub._actions}  # noqa: SLF001
        unknown = sorted(set(cfg) - known)
        if unknown:
            parser.error(f"--config {path}: unknown keys {unknown}")
        for action in sub._actions:  # noqa: SLF001
            if action.dest in cfg:
                action.required = False
        sub.set_defaults(**cfg)
    ns = parser.parse_args(argv)
    opts = vars(ns)
    opts.pop("config", None)
    if "window" in opts:
        try:
            opts["window"] = _window(opts["window"])
        except argparse.ArgumentTypeError as exc:
            parser.error(f"--window: {exc}")
    return RunConfig(opts.pop("command"), opts)


# --------------------------------------------------------------------------
# commands


def cmd_phi(cfg: RunConfig) -> int:
    routes = ["closed", "cycle-index"] if cfg.route == "both" else [cfg.route]
    if cfg.n > 4 and "closed" in routes:
        routes = ["cycle-index"]
    rows = [(cfg.n, cfg.a, obstruction.phi(cfg.n, cfg.a, r).value, r) for r in routes]
    _out(emit_csv(rows, ["n", "a", "phi", "route"], cfg.csv), cfg.csv)
    if len(rows) == 2:
        gap = abs(rows[0][2] - rows[1][2])
        ok = gap <= ROUTE_TOL
        print(f"route agreement: |closed - cycle-index| = {gap:.3e} ({'ok' if ok else 'MISMATCH'})", file=sys.stderr)
        return EXIT_OK if ok else EXIT_FAIL
    return EXIT_OK


def cmd_fnu(cfg: RunConfig) -> int:
    modes = ["closed", "numeric"] if cfg.mode == "both" else [cfg.mode]
    if cfg.nu > 4 and "closed" in modes:
        modes = ["numeric"]
    rows = [(cfg.nu, cfg.r, obstruction.f_nu(cfg.nu, cfg.r, m, cfg.grid), m) for m in modes]
    _out(emit_csv(rows, ["nu", "r", "f", "mode"], cfg.csv), cfg.csv)
    return EXIT_OK


def cmd_region(cfg: RunConfig) -> int:
    from .plotting import emit_region_svg

    if (cfg.a is None) != (cfg.B is None):
        raise InvalidParameter("--a and --B must be given together")
    if cfg.a is not None:
        pts = [mimicry.classify_region(cfg.process, cfg.a, cfg.B)]
    else:
        pts = mimicry.region_grid(cfg.process, cfg.step, cfg.a_max, cfg.B_max)
    text = emit_csv((p.row() for p in pts), ["a", "B", "verdict", "rule"], cfg.csv)
    _out(text, cfg.csv)
    if cfg.svg:
        emit_region_svg(pts, cfg.svg, cfg.process, cfg.a_max, cfg.B_max)
    return EXIT_OK


def _sides(process: str, a: float, lam: float, window):
    if process == "poisson":
        return (kernels.poisson(lam), kernels.poisson_lattice(a, lam),
                SamplerSpec("discrete_poisson", tuple(window), lam=lam, a=a))
    return kernels.sine(), kernels.sine_lattice(a), SamplerSpec("discrete_sine", tuple(window), a=a)


def cmd_verify(cfg: RunConfig) -> int:
    A, lattice, spec = _sides(cfg.process, cfg.a, cfg.lam, cfg.window)
    other = lattice if cfg.analytic else spec
    verdict = mimicry.mimicry_test(A, other, cfg.B, cfg.levels, replicas=cfg.replicas, seed=cfg.seed)
    text = _emit_json(verdict.as_dict(), cfg.json)
    _out(text, cfg.json)
    region = mimicry.classify_region(cfg.process, cfg.a, cfg.B)
    print(f"verdict: {verdict.label} (region: {region.verdict})", file=sys.stderr)
    return EXIT_OK if verdict.passed else EXIT_FAIL


def cmd_reconstruct(cfg: RunConfig) -> int:
    rho = kernels.poisson(cfg.lam) if cfg.process == "poisson" else kernels.sine()
    n = len(cfg.k)
    if cfg.method == "bump":
        val = mimicry.nyquist_reconstruct(rho, cfg.a, n, cfg.k, cfg.B, cfg.eps)
    else:
        val = mimicry.sinc_interpolate_measure(rho, cfg.a, n, cfg.k)
    rows = [(cfg.process, cfg.a, cfg.B, " ".join(_fmt(x) for x in cfg.k), val, cfg.method)]
    _out(emit_csv(rows, ["process", "a", "B", "k", "atom", "method"]), None)
    return EXIT_OK


def cmd_obstruction(cfg: RunConfig) -> int:
    reports = [obstruction.obstruction_report(a) for a in cfg.a]
    ok = all((r.a <= 0.5) == (not r.obstructed) and (not r.obstructed or r.witness < 0) for r in reports)
    payload = [r.as_dict() for r in reports]
    text = _emit_json(payload if len(payload) > 1 else payload[0], cfg.json)
    _out(text, cfg.json)
    return EXIT_OK if ok else EXIT_FAIL


def _spec(cfg: RunConfig) -> SamplerSpec:
    return SamplerSpec(cfg.process, tuple(cfg.window), lam=cfg.lam, a=cfg.a, delta=cfg.delta)


def cmd_sample(cfg: RunConfig) -> int:
    conf = _spec(cfg).sample(RngState(cfg.seed))
    _out(emit_csv(conf.to_rows(), ["position", "multiplicity"], cfg.csv), cfg.csv)
    return EXIT_OK


def _pair_theory(spec: SamplerSpec):
    if spec.process == "poisson":
        return lambda x: np.full_like(x, spec.lam ** 2)
    if spec.process == "discrete_poisson":
        return lambda x: np.full_like(x, (spec.a * spec.lam) ** 2)
    if spec.process == "discrete_sine":
        return lambda x: spec.a ** 2 * (1.0 - kernels.sinc(x) ** 2)
    return lambda x: 1.0 - kernels.sinc(x) ** 2


def cmd_paircorr(cfg: RunConfig) -> int:
    from .plotting import emit_paircorr_svg

    spec = _spec(cfg)
    bin_width = cfg.bin if cfg.bin is not None else (spec.a if spec.is_lattice else 0.05)
    configs = correlation.sample_replicas(spec, cfg.replicas, RngState(cfg.seed))
    hist = correlation.empirical_pair_correlation(configs, bin_width, cfg.max_sep, cfg.buffer)
    theory = _pair_theory(spec)
    rows = [(c, r, s, float(theory(np.array([c]))[0])) for c, r, s in hist.rows()]
    _out(emit_csv(rows, ["separation", "rate", "stderr", "analytic"], cfg.csv), cfg.csv)
    if cfg.svg:
        emit_paircorr_svg(hist.centers, hist.rate, hist.stderr, cfg.svg, theory)
    return EXIT_OK


COMMANDS = {
    "phi": cmd_phi,
    "fnu": cmd_fnu,
    "region": cmd_region,
    "verify": cmd_verify,
    "reconstruct": cmd_reconstruct,
    "obstruction": cmd_obstruction,
    "sample": cmd_sample,
    "paircorr": cmd_paircorr,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = resolve_config(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[cfg.command](cfg)
    except MimicryError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
