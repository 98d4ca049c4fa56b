"""Command-line driver for the check suites.

``timeops run --suite algebra,timeop --g 2 --out results`` runs suites and
writes, under the output directory,

* ``<suite>.json``          all reports of the suite,
* ``plotdata/*.csv``        one ``resolution,residual`` file per convergence table,
* ``matrices/*.txt``        dumped operators (``timeop`` suite),
* ``summary.txt``           one line per residual row and the exit status.

Exit status: 0 when every toleranced and trend row passes, 2 when any of them
fails, 1 on a hard error, 64 on an invalid configuration.
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import dataclasses
import json
import math
import os
import re
import sys
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bg_coherent import CONVENTIONS, PRINCIPAL, default_quadrature, resolution_of_identity, verify_coherent_states
from .grid_rep import (
    MOMENTUM_LINE,
    POSITION_HALF_LINE,
    GridSpec,
    arrival_report,
    canonical_pair_report,
    identity_22_refinement,
    momentum_harmonic_report,
    omega_limit_report,
    position_spectrum_report,
    su11_closure_report,
    verify_similarity_21_26,
)
from .operators import Basis, OperatorMatrix
from .report import CheckReport
from .su11_fock import (
    ModelParams,
    energy_eigenstate_20,
    vacuum_limit_diagnostic,
    verify_algebra,
    verify_identity_17,
    verify_identity_18,
    verify_similarity_19,
)
from .time_operator import (
    AS_WRITTEN,
    PREFACTOR_MODES,
    TimeOperatorConfig,
    assemble_T_quadrature,
    branch_difference,
    commutator_structure,
    compare_assemblies,
    gauge_report,
    uncertainty_report,
)

SUITES = ("algebra", "coherent", "timeop", "arrival", "similarity")
ENV_OUT = "TIMEOPS_DEFAULT_OUT"
FALLBACK_OUT = "timeops-out"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MISMATCH = 2
EXIT_CONFIG = 64


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class MatrixFormatError(ValueError):
    """Malformed matrix file."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on.

    ``N`` is the Fock truncation of the algebra suite, ``timeop_N`` the size of
    the time-operator matrix. ``grid_count``/``grid_extent`` set the position
    half-line used for the spectrum check.
    """

    suites: tuple[str, ...] = SUITES
    omega: float = 1.0
    g: float = 2.0
    N: int = 64
    timeop_N: int = 16
    branch: tuple[str, ...] = (PRINCIPAL,)
    prefactor: str = AS_WRITTEN
    radial_nodes: int = 200
    angular_nodes: int = 256
    grid_count: int = 1024
    grid_extent: float = 8.0
    out: str = FALLBACK_OUT
    parallel: bool = False

    def __post_init__(self):
        if not self.suites:
            raise ConfigError("suite", "no suite selected")
        for s in self.suites:
            if s not in SUITES:
                raise ConfigError("suite", f"unknown suite {s!r} (choose from {', '.join(SUITES)}, all)")
        try:
            self.params
        except ValueError as exc:
            raise ConfigError("omega" if "omega" in str(exc) else "g", str(exc)) from None
        if self.N < 8:
            raise ConfigError("N", f"need N >= 8, got {self.N}")
        if self.timeop_N < 16:
            raise ConfigError("timeop_N", f"need timeop_N >= 16, got {self.timeop_N}")
        if not self.branch:
            raise ConfigError("branch", "no branch selected")
        for b in self.branch:
            if b not in CONVENTIONS:
                raise ConfigError("branch", f"unknown branch {b!r} (choose from {', '.join(CONVENTIONS)})")
        if self.prefactor not in PREFACTOR_MODES:
            raise ConfigError("prefactor", f"unknown prefactor {self.prefactor!r}")
        if self.radial_nodes < 200:
            raise ConfigError("radial_nodes", "need >= 200 radial nodes")
        if self.angular_nodes < 256:
            raise ConfigError("angular_nodes", "need >= 256 angular nodes")
        if self.grid_count < 16 or self.grid_count % 2:
            raise ConfigError("grid_count", "need an even grid_count >= 16")
        if not (math.isfinite(self.grid_extent) and self.grid_extent > 0):
            raise ConfigError("grid_extent", "must be finite and positive")

    @property
    def params(self) -> ModelParams:
        return ModelParams(omega=self.omega, g=self.g)

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out")
        d.pop("parallel")
        d["suites"] = list(self.suites)
        d["branch"] = list(self.branch)
        return d


def _split(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in str(text).split(",") if s.strip())


def _parse_bool(name: str, text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(name, f"expected a boolean, got {text!r}")


# config key -> (RunConfig field, converter)
def _converters():
    def num(kind, name):
        def conv(v):
            try:
                return kind(v)
            except (TypeError, ValueError):
                raise ConfigError(name, f"expected {kind.__name__}, got {v!r}") from None

        return conv

    def suites(v):
        names = _split(v)
        return SUITES if "all" in names else names

    return {
        "suite": ("suites", suites),
        "omega": ("omega", num(float, "omega")),
        "g": ("g", num(float, "g")),
        "N": ("N", num(int, "N")),
        "timeop_N": ("timeop_N", num(int, "timeop_N")),
        "branch": ("branch", _split),
        "prefactor": ("prefactor", str),
        "radial_nodes": ("radial_nodes", num(int, "radial_nodes")),
        "angular_nodes": ("angular_nodes", num(int, "angular_nodes")),
        "grid_count": ("grid_count", num(int, "grid_count")),
        "grid_extent": ("grid_extent", num(float, "grid_extent")),
        "out": ("out", str),
        "parallel": ("parallel", lambda v: _parse_bool("parallel", v)),
    }


CONFIG_KEYS = tuple(_converters())


def read_config_file(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{i}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(key, f"{path}:{i}: unknown key")
        out[key] = value
    return out


def build_config(file_values: dict | None = None, flag_values: dict | None = None, env=None) -> RunConfig:
    """Defaults, then ``TIMEOPS_DEFAULT_OUT``, then the config file, then flags."""
    env = os.environ if env is None else env
    merged: dict = {}
    if env.get(ENV_OUT):
        merged["out"] = env[ENV_OUT]
    merged.update(file_values or {})
    merged.update({k: v for k, v in (flag_values or {}).items() if v is not None})
    conv = _converters()
    kwargs = {}
    for key, value in merged.items():
        if key not in conv:
            raise ConfigError(key, "unknown key")
        name, fn = conv[key]
        kwargs[name] = fn(value)
    return RunConfig(**kwargs)


# ---------------------------------------------------------------------------
# matrix and plot-data files
# ---------------------------------------------------------------------------


def _fmt_entry(c: complex) -> str:
    return f"{c.real:.17g}{c.imag:+.17g}i"


def dump_matrix(m: OperatorMatrix, path, k: float, omega: float) -> Path:
    """Text dump: a ``# basis=.. dim=.. k=.. omega=..`` header and ``a+bi`` rows."""
    path = Path(path)
    lines = [f"# basis={m.basis.kind} dim={m.dim} k={k!r} omega={omega!r}"]
    for row in m.entries:
        lines.append(" ".join(_fmt_entry(complex(c)) for c in row))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write matrix to {path}: {exc.strerror}") from None
    return path


_HEADER = re.compile(r"^# basis=(\S+) dim=(\d+) k=(\S+) omega=(\S+)$")


def load_matrix(path) -> tuple[OperatorMatrix, dict]:
    """Inverse of :func:`dump_matrix`; entries round-trip bit for bit."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read matrix from {path}: {exc.strerror}") from None
    if not lines:
        raise MatrixFormatError(path, 1, "empty file")
    head = _HEADER.match(lines[0])
    if head is None:
        raise MatrixFormatError(path, 1, "bad header")
    kind, dim = head.group(1), int(head.group(2))
    meta = {"basis": kind, "dim": dim, "k": float(head.group(3)), "omega": float(head.group(4))}
    rows = lines[1:]
    if len(rows) != dim:
        raise MatrixFormatError(path, len(lines), f"expected {dim} rows, found {len(rows)}")
    out = np.empty((dim, dim), complex)
    for i, text in enumerate(rows):
        parts = text.split()
        if len(parts) != dim:
            raise MatrixFormatError(path, i + 2, f"expected {dim} entries, found {len(parts)}")
        for j, tok in enumerate(parts):
            if not tok.endswith("i"):
                raise MatrixFormatError(path, i + 2, f"bad entry {tok!r}")
            try:
                out[i, j] = complex(tok[:-1] + "j")
            except ValueError:
                raise MatrixFormatError(path, i + 2, f"bad entry {tok!r}") from None
    label = (meta["k"],) if kind == "fock" else ()
    return OperatorMatrix(out, Basis(kind, label)), meta


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text).strip("_")


def write_table_csv(rows, path) -> Path:
    """``resolution,residual`` CSV; an empty table gives a header-only file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = ["resolution,residual"] + [f"{float(r)!r},{float(v)!r}" for r, v in rows]
    path.write_text("\n".join(body) + "\n")
    return path


def emit_plotdata(report: CheckReport, directory, prefix: str = "") -> list[Path]:
    """One CSV per convergence table of ``report``."""
    directory = Path(directory)
    stem = _slug(f"{prefix}{report.name}")
    return [
        write_table_csv(rows, directory / f"{stem}__{_slug(label)}.csv")
        for label, rows in report.convergence.items()
    ]


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


@dataclass
class SuiteResult:
    name: str
    reports: list[CheckReport] = field(default_factory=list)
    matrices: dict[str, OperatorMatrix] = field(default_factory=dict)
    error: str | None = None

    @property
    def status(self) -> int:
        if self.error is not None:
            return EXIT_ERROR
        if all(r.passed and r.trends_passed for r in self.reports):
            return EXIT_OK
        return EXIT_MISMATCH


def _suite_algebra(cfg: RunConfig, res: SuiteResult) -> None:
    p = cfg.params
    res.reports += [
        verify_algebra(p, cfg.N),
        verify_identity_17(p, cfg.N),
        verify_identity_18(p, cfg.N),
        verify_similarity_19(p),
        energy_eigenstate_20(p, cfg.N)[1],
        vacuum_limit_diagnostic(p, cfg.N),
    ]


def _suite_coherent(cfg: RunConfig, res: SuiteResult) -> None:
    p = cfg.params
    quad = default_quadrature(p, 12, cfg.radial_nodes, cfg.angular_nodes)
    res.reports += [verify_coherent_states(p), resolution_of_identity(p, 12, quad)]


def _suite_timeop(cfg: RunConfig, res: SuiteResult) -> None:
    p = cfg.params
    principal = None
    for branch in cfg.branch:
        tc = TimeOperatorConfig(p, cfg.timeop_N, branch, cfg.prefactor)
        rep = compare_assemblies(tc)
        t = assemble_T_quadrature(tc)
        res.reports.append(rep)
        res.matrices[f"T_{branch}_{cfg.prefactor}"] = t
        if branch == PRINCIPAL:
            principal = t
    if len(set(cfg.branch)) > 1:
        res.reports.append(branch_difference(p, cfg.timeop_N))
    if principal is None:
        principal = assemble_T_quadrature(TimeOperatorConfig(p, cfg.timeop_N, PRINCIPAL, cfg.prefactor))
    # |z| = 2 needs more than 16 Fock states to keep the norm tail below 1e-10
    wide = assemble_T_quadrature(TimeOperatorConfig(p, max(cfg.timeop_N, 32), PRINCIPAL, cfg.prefactor))
    res.reports += [
        commutator_structure(principal, p),
        gauge_report(principal, p),
        uncertainty_report(2.0, wide, p),
    ]


def _suite_arrival(cfg: RunConfig, res: SuiteResult) -> None:
    w = cfg.omega
    res.reports += [
        momentum_harmonic_report(GridSpec(MOMENTUM_LINE, 512, 16.0), w),
        canonical_pair_report(),
        identity_22_refinement(omega=w),
        arrival_report(omega=w),
        omega_limit_report(),
    ]


def _suite_similarity(cfg: RunConfig, res: SuiteResult) -> None:
    p = cfg.params
    res.reports += [
        position_spectrum_report(GridSpec(POSITION_HALF_LINE, cfg.grid_count, cfg.grid_extent), p),
        su11_closure_report(params=p),
        verify_similarity_21_26(p),
    ]


_SUITE_FUNCS = {
    "algebra": _suite_algebra,
    "coherent": _suite_coherent,
    "timeop": _suite_timeop,
    "arrival": _suite_arrival,
    "similarity": _suite_similarity,
}


def run_one_suite(name: str, cfg: RunConfig) -> SuiteResult:
    res = SuiteResult(name)
    try:
        _SUITE_FUNCS[name](cfg, res)
    except Exception as exc:  # reported, not raised: one suite must not sink the rest
        res.error = f"{type(exc).__name__}: {exc}"
    return res


def _suite_json(res: SuiteResult, cfg: RunConfig) -> str:
    doc = {
        "suite": res.name,
        "artifact_version": __version__,
        "config": cfg.echo(),
        "error": res.error,
        "pass": res.status == EXIT_OK,
        "reports": [r.to_dict() for r in res.reports],
    }
    return json.dumps(doc, indent=1) + "\n"


def write_outputs(results: list[SuiteResult], cfg: RunConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"timeops {__version__}"]
    status = EXIT_OK
    for res in results:
        (out / f"{res.name}.json").write_text(_suite_json(res, cfg))
        for rep in res.reports:
            emit_plotdata(rep, out / "plotdata", prefix=f"{res.name}__")
        p = cfg.params
        for label, m in res.matrices.items():
            dump_matrix(m, out / "matrices" / f"{label}.txt", p.k, p.omega)
        lines.append(f"# suite {res.name}: {('PASS', 'ERROR', 'FAIL')[res.status]}")
        if res.error:
            lines.append(f"  error: {res.error}")
        for rep in res.reports:
            lines += rep.summary_lines()
        status = max(status, res.status, key=lambda s: (EXIT_OK, EXIT_MISMATCH, EXIT_ERROR).index(s))
    lines.append(f"exit status {status}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    return status


def run_suites(cfg: RunConfig) -> list[SuiteResult]:
    """Run the selected suites; ``parallel`` uses one process per suite."""
    if cfg.parallel and len(cfg.suites) > 1:
        with cf.ProcessPoolExecutor(max_workers=len(cfg.suites)) as pool:
            futures = [pool.submit(run_one_suite, s, cfg) for s in cfg.suites]
            return [f.result() for f in futures]
    return [run_one_suite(s, cfg) for s in cfg.suites]


def run_suite(cfg: RunConfig) -> int:
    """Run, write every output file and return the exit status."""
    return write_outputs(run_suites(cfg), cfg, Path(cfg.out))


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors, not math failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="file of 'key = value' lines; flags override it")
    p.add_argument("--omega", help="oscillator frequency (default 1)")
    p.add_argument("--g", help="inverse-square coupling (default 2)")
    p.add_argument("--N", help="Fock truncation for the algebra suite (default 64)")
    p.add_argument("--timeop-N", dest="timeop_N", help="time-operator matrix size (default 16)")
    p.add_argument("--branch", help="principal, positive or both comma-separated")
    p.add_argument("--prefactor", help="as-written or frequency-scaled")
    p.add_argument("--radial-nodes", dest="radial_nodes")
    p.add_argument("--angular-nodes", dest="angular_nodes")
    p.add_argument("--grid-count", dest="grid_count", help="position half-line points (default 1024)")
    p.add_argument("--grid-extent", dest="grid_extent", help="position half-line length (default 8)")
    p.add_argument("--out", help=f"output directory (default ${ENV_OUT} or {FALLBACK_OUT})")
    p.add_argument("--parallel", action="store_const", const=True, default=None)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="timeops", description="Time-operator check suites")
    parser.add_argument("--version", action="version", version=f"timeops {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run check suites")
    run.add_argument("--suite", help=f"comma-separated from {', '.join(SUITES)}, or all")
    _add_common(run)

    dump = sub.add_parser("dump-t", help="write the time-operator matrix")
    _add_common(dump)

    sweep = sub.add_parser("sweep", help="run suites once per value of one parameter")
    sweep.add_argument("--suite", help="suites to run at each value")
    sweep.add_argument("--param", required=True, help="configuration key to vary")
    sweep.add_argument("--values", required=True, help="comma-separated values")
    _add_common(sweep)
    return parser


def _config_from_args(args, extra: dict | None = None) -> RunConfig:
    file_values = read_config_file(args.config) if args.config else {}
    flags = {k: getattr(args, k, None) for k in CONFIG_KEYS if k != "suite"}
    flags["suite"] = getattr(args, "suite", None)
    flags.update(extra or {})
    return build_config(file_values, flags)


def _cmd_dump(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    p = cfg.params
    for branch in cfg.branch:
        t = assemble_T_quadrature(TimeOperatorConfig(p, cfg.timeop_N, branch, cfg.prefactor))
        path = dump_matrix(t, out / f"T_{branch}_{cfg.prefactor}.txt", p.k, p.omega)
        print(path)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    if args.param not in CONFIG_KEYS or args.param in ("suite", "out", "parallel", "branch", "prefactor"):
        raise ConfigError("param", f"cannot sweep {args.param!r}")
    values = _split(args.values)
    if not values:
        raise ConfigError("values", "no values given")
    configs = [(v, _config_from_args(args, {args.param: v})) for v in values]
    base = Path(configs[0][1].out)
    order = (EXIT_OK, EXIT_MISMATCH, EXIT_ERROR)
    status = EXIT_OK
    lines = []
    for v, cfg in configs:
        sub = dataclasses.replace(cfg, out=str(base / _slug(f"{args.param}={v}")))
        s = run_suite(sub)
        lines.append(f"{args.param}={v}: exit status {s}")
        status = max(status, s, key=order.index)
    base.mkdir(parents=True, exist_ok=True)
    (base / "sweep.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return status


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            return _cmd_sweep(args)
        cfg = _config_from_args(args)
        if args.command == "dump-t":
            return _cmd_dump(cfg)
        status = run_suite(cfg)
        print((Path(cfg.out) / "summary.txt").read_text(), end="")
        return status
    except ConfigError as exc:
        print(f"timeops: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception:
        traceback.print_exc()
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
