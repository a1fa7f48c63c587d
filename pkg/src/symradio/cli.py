"""Experiment configuration, figure-data runners and the command-line entry point.

Config files are INI text (UTF-8) with three sections::

    [experiment]
    sweep = PowerSweep          # PowerSweep | BdCountSweep | RsVsRbdCurve | SingleRun
    methods = MRC, CorrelationEig, SDR
    n_realizations = 1
    mc_trials = 10000
    seed = 7
    output = fig3.csv

    [system]
    p_dbm = -10:30:5            # a single value, a comma list, or start:stop:step (inclusive)
    sigma2_dbm = -110
    beta_hd_db = -120
    beta_h_db = -110
    beta_g_db = -20
    alpha = 1
    K = 128
    M = 4
    J = 200
    bd_symbol_model = CSCG

    [sweep]
    J = 0, 1, 2, 5              # BdCountSweep
    gamma_db = 10, 15, 20, 25   # RsVsRbdCurve
    rbd = 0:8:0.05              # RsVsRbdCurve

dB and dBm values stay in dB inside :class:`ExperimentConfig` and are
converted to linear scale only when :meth:`ExperimentConfig.system_params`
builds a :class:`SystemParams`.

Seeds: realization ``r`` of a run with master seed ``s`` draws its channels
from the stream ``(s, channel, r)`` and its Monte Carlo symbols from
``(s, symbols, r)``, so raising ``n_realizations`` only appends new
realizations.
"""

import argparse
import configparser
import csv
import enum
import logging
import math
import sys
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import beamforming as bf
from .channel import BdSymbolModel, SystemParams, sample_channels
from .numerics import NumericError, ValidationError
from .rates import bd_sum_rate_logdet, primary_rate_mc, rs_given_rbd

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

DEFAULT_GAMMA_DB = (10.0, 15.0, 20.0, 25.0)
DEFAULT_J_LIST = (0, 1, 2, 5, 10, 20, 50, 100, 200, 500)

CSV_COLUMNS = (
    "sweep_value",
    "method",
    "primary_rate_bps_hz",
    "secondary_rate_bps_hz",
    "stderr_bps_hz",
    "secondary_stderr_bps_hz",
    "n_samples",
    "status",
)


class ConfigError(ValueError):
    """Malformed or incomplete experiment configuration."""


class Sweep(str, enum.Enum):
    POWER = "PowerSweep"
    BD_COUNT = "BdCountSweep"
    RS_VS_RBD = "RsVsRbdCurve"
    SINGLE = "SingleRun"


@dataclass(frozen=True)
class ExperimentConfig:
    sweep: Sweep = Sweep.SINGLE
    methods: tuple = (bf.BeamMethod.CORRELATION_EIG.value,)
    n_realizations: int = 1
    mc_trials: int = 10_000
    seed: int = 0
    output_path: str = ""
    p_dbm: tuple = (0.0,)
    sigma2_dbm: float = -110.0
    beta_hd_db: float = -120.0
    beta_h_db: float = -110.0
    beta_g_db: float = -20.0
    alpha: float = 1.0
    K: int = 128
    M: int = 4
    J: int = 0
    bd_symbol_model: str = BdSymbolModel.CSCG.value
    j_list: tuple = ()
    gamma_db: tuple = ()
    rbd_grid: tuple = ()

    def __post_init__(self):
        try:
            object.__setattr__(self, "sweep", Sweep(self.sweep))
        except ValueError:
            raise ConfigError(f"experiment.sweep: unknown sweep {self.sweep!r}") from None
        for m in self.methods:
            try:
                bf.BeamMethod(m)
            except ValueError:
                raise ConfigError(f"experiment.methods: unknown method {m!r}") from None
        if not self.methods:
            raise ConfigError("experiment.methods: at least one method is required")
        if self.n_realizations < 1:
            raise ConfigError("experiment.n_realizations must be >= 1")
        if self.mc_trials < 1:
            raise ConfigError("experiment.mc_trials must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("experiment.seed must be an unsigned 64-bit integer")
        if not self.p_dbm:
            raise ConfigError("system.p_dbm: at least one value is required")
        if self.sweep is Sweep.BD_COUNT and not self.j_list:
            raise ConfigError("sweep.J: required for BdCountSweep")
        if self.sweep is Sweep.RS_VS_RBD:
            if not self.gamma_db:
                raise ConfigError("sweep.gamma_db: required for RsVsRbdCurve")
            if not self.rbd_grid:
                raise ConfigError("sweep.rbd: required for RsVsRbdCurve")
        if any(j < 0 for j in self.j_list):
            raise ConfigError("sweep.J: BD counts must be >= 0")
        if any(r < 0 for r in self.rbd_grid):
            raise ConfigError("sweep.rbd: rates must be >= 0")
        try:
            self.system_params()
        except ValidationError as exc:
            raise ConfigError(f"system: {exc}") from None

    def system_params(self, p_dbm=None, J=None):
        """Linear-scale parameters; the only place dB fields are converted."""
        return SystemParams.from_db(
            p_dbm=self.p_dbm[0] if p_dbm is None else p_dbm,
            sigma2_dbm=self.sigma2_dbm,
            beta_hd_db=self.beta_hd_db,
            beta_h_db=self.beta_h_db,
            beta_g_db=self.beta_g_db,
            alpha=self.alpha,
            K=self.K,
            M=self.M,
            J=self.J if J is None else J,
            bd_symbol_model=self.bd_symbol_model,
        )

    @property
    def system(self):
        return self.system_params()

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass
class ResultRow:
    sweep_value: float
    method: str
    primary_rate: float
    secondary_rate: float
    stderr: float
    n_samples: int
    secondary_stderr: float = 0.0
    status: str = "ok"

    def __post_init__(self):
        if not (self.stderr >= 0 or math.isnan(self.stderr)):
            raise ValidationError("stderr must be >= 0")


# ---------------------------------------------------------------- config I/O

_EXPERIMENT_KEYS = {"sweep", "methods", "n_realizations", "mc_trials", "seed", "output"}
_SYSTEM_KEYS = {"p_dbm", "sigma2_dbm", "beta_hd_db", "beta_h_db", "beta_g_db",
                "alpha", "K", "M", "J", "bd_symbol_model"}
_SWEEP_KEYS = {"J", "gamma_db", "rbd"}
_SECTIONS = {"experiment": _EXPERIMENT_KEYS, "system": _SYSTEM_KEYS, "sweep": _SWEEP_KEYS}


def _line_of(text, section, key):
    current = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
        elif current == section and line.split("=", 1)[0].strip() == key:
            return n
    return None


def parse_number_list(text, integer=False):
    """``"a"``, ``"a, b, c"`` or inclusive ``"start:stop:step"``."""
    text = text.strip()
    if ":" in text:
        parts = [float(v) for v in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise ValueError(f"bad range {text!r}; expected start:stop:step with step > 0")
        start, stop, step = parts
        n = int(round((stop - start) / step))
        if abs(start + n * step - stop) > 1e-9 * max(1.0, abs(stop)):
            raise ValueError(f"range {text!r} does not land on its stop value")
        values = [round(start + k * step, 12) for k in range(n + 1)]
    else:
        values = [float(v) for v in text.split(",") if v.strip()]
    if integer:
        if any(v != int(v) for v in values):
            raise ValueError(f"expected integers, got {text!r}")
        return tuple(int(v) for v in values)
    return tuple(values)


def parse_config(text, source="<string>"):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None

    def where(section, key):
        n = _line_of(text, section, key)
        return f"{source}:{n}" if n else source

    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key in parser[section]:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"{where(section, key)}: unknown field {section}.{key}")

    kw = {}

    def get(section, key, conv, dest=None):
        if not parser.has_option(section, key):
            return
        raw = parser.get(section, key)
        try:
            kw[dest or key] = conv(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{where(section, key)}: field {section}.{key}: {exc}") from None

    def as_int(s):
        return int(s.strip())

    get("experiment", "sweep", lambda s: Sweep(s.strip()))
    get("experiment", "methods",
        lambda s: tuple(bf.BeamMethod(m.strip()).value for m in s.split(",") if m.strip()))
    get("experiment", "n_realizations", as_int)
    get("experiment", "mc_trials", as_int)
    get("experiment", "seed", as_int)
    get("experiment", "output", str.strip, "output_path")
    get("system", "p_dbm", parse_number_list)
    for key in ("sigma2_dbm", "beta_hd_db", "beta_h_db", "beta_g_db", "alpha"):
        get("system", key, float)
    for key in ("K", "M", "J"):
        get("system", key, as_int)
    get("system", "bd_symbol_model", lambda s: BdSymbolModel(s.strip()).value)
    get("sweep", "J", lambda s: parse_number_list(s, integer=True), "j_list")
    get("sweep", "gamma_db", parse_number_list)
    get("sweep", "rbd", parse_number_list, "rbd_grid")
    try:
        return ExperimentConfig(**kw)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, source=str(path))


def _fmt_list(values):
    return ", ".join(repr(v) for v in values)


def dump_config(cfg):
    """INI text that :func:`parse_config` maps back to ``cfg``."""
    lines = [
        "[experiment]",
        f"sweep = {cfg.sweep.value}",
        f"methods = {', '.join(cfg.methods)}",
        f"n_realizations = {cfg.n_realizations}",
        f"mc_trials = {cfg.mc_trials}",
        f"seed = {cfg.seed}",
    ]
    if cfg.output_path:
        lines.append(f"output = {cfg.output_path}")
    lines += [
        "",
        "[system]",
        f"p_dbm = {_fmt_list(cfg.p_dbm)}",
        f"sigma2_dbm = {cfg.sigma2_dbm!r}",
        f"beta_hd_db = {cfg.beta_hd_db!r}",
        f"beta_h_db = {cfg.beta_h_db!r}",
        f"beta_g_db = {cfg.beta_g_db!r}",
        f"alpha = {cfg.alpha!r}",
        f"K = {cfg.K}",
        f"M = {cfg.M}",
        f"J = {cfg.J}",
        f"bd_symbol_model = {cfg.bd_symbol_model}",
    ]
    sweep = []
    if cfg.j_list:
        sweep.append(f"J = {', '.join(str(j) for j in cfg.j_list)}")
    if cfg.gamma_db:
        sweep.append(f"gamma_db = {_fmt_list(cfg.gamma_db)}")
    if cfg.rbd_grid:
        sweep.append(f"rbd = {_fmt_list(cfg.rbd_grid)}")
    if sweep:
        lines += ["", "[sweep]", *sweep]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- CSV I/O

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_csv(rows, path, metadata=None):
    """Write rows with ``# key: value`` metadata lines and a unit-bearing header.

    ``path`` may be ``"-"`` for stdout. Output depends only on the inputs,
    so identical runs produce byte-identical files.
    """
    out = sys.stdout if path == "-" else open(path, "w", encoding="utf-8", newline="")
    try:
        for key, value in (metadata or {}).items():
            out.write(f"# {key}: {value}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([_fmt(float(r.sweep_value)), r.method, _fmt(float(r.primary_rate)),
                             _fmt(float(r.secondary_rate)), _fmt(float(r.stderr)),
                             _fmt(float(r.secondary_stderr)), int(r.n_samples), r.status])
    finally:
        if out is not sys.stdout:
            out.close()


def read_csv(path):
    """Inverse of :func:`emit_csv`: ``(rows, metadata)``."""
    metadata = {}
    body = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, value = line[2:].rstrip("\n").partition(": ")
                metadata[key] = value
            else:
                body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValidationError(f"unexpected CSV header {header}")
    rows = [ResultRow(float(r[0]), r[1], float(r[2]), float(r[3]), float(r[4]),
                      int(r[6]), float(r[5]), r[7]) for r in reader]
    return rows, metadata


# ---------------------------------------------------------------- runners

def run_fig2(gamma_list_db=DEFAULT_GAMMA_DB, rbd_grid=None, K=128, M=4):
    """Primary rate against the BD sum rate for each direct-link SNR ``gamma``."""
    if rbd_grid is None:
        rbd_grid = parse_number_list("0:8:0.05")
    rows = []
    for g_db in gamma_list_db:
        gamma = 10.0 ** (g_db / 10.0)
        if not gamma > 0:
            raise ValidationError(f"gamma must be > 0, got {g_db} dB")
        for rbd in rbd_grid:
            rows.append(ResultRow(float(rbd), f"gamma={g_db:g}dB",
                                  rs_given_rbd(gamma, float(rbd), K, M), float(rbd),
                                  0.0, 0, 0.0, "analytic"))
    return rows


def _mean_se(values):
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def _evaluate(cfg, params, realizations, methods):
    """Per-method mean primary (MC) and secondary (log-det) rates over realizations."""
    rows = []
    secondary = [bd_sum_rate_logdet(real, params) for real in realizations]
    sec_mean, sec_se = _mean_se(secondary)
    for method in methods:
        rates, ses = [], []
        status = "ok"
        for r, real in enumerate(realizations):
            try:
                kw = {"seed": cfg.seed} if method == bf.BeamMethod.SDR.value else {}
                res = bf.beamformer(method, real, params, **kw)
            except (bf.SolverError, NumericError) as exc:
                status = f"solver_failed: {exc}"
                log.warning("%s failed on realization %d: %s", method, r, exc)
                break
            est = primary_rate_mc(res.wd, real, params, cfg.mc_trials, cfg.seed, r)
            rates.append(est.mean)
            ses.append(est.stderr)
        n = len(realizations)
        if status != "ok":
            rows.append(ResultRow(math.nan, method, math.nan, sec_mean, math.nan, 0, sec_se, status))
            continue
        if n == 1:
            mean, se = rates[0], ses[0]
        else:
            mean, se = _mean_se(rates)
        rows.append(ResultRow(math.nan, method, mean, sec_mean, se, n * cfg.mc_trials, sec_se))
    return rows


def run_fig3(cfg):
    """Primary rate against transmit power for each beamformer on fixed channels."""
    base = cfg.system_params()
    realizations = [sample_channels(base, cfg.seed, r) for r in range(cfg.n_realizations)]
    rows = []
    for p in cfg.p_dbm:
        log.info("p = %g dBm", p)
        params = cfg.system_params(p_dbm=p)
        for row in _evaluate(cfg, params, realizations, cfg.methods):
            row.sweep_value = float(p)
            rows.append(row)
    return rows


def run_fig4_fig5(cfg):
    """Mean primary and secondary rates against the number of BDs.

    Channels are drawn once per realization with the largest BD count and
    truncated, so every J shares its first BDs with the larger ones.
    """
    j_max = max(cfg.j_list)
    params_max = cfg.system_params(J=j_max)
    full = [sample_channels(params_max, cfg.seed, r) for r in range(cfg.n_realizations)]
    rows = []
    for J in cfg.j_list:
        log.info("J = %d", J)
        params = cfg.system_params(J=J)
        realizations = [real.subset(J) for real in full]
        for row in _evaluate(cfg, params, realizations, cfg.methods):
            row.sweep_value = float(J)
            rows.append(row)
    return rows


def run_config(cfg):
    if cfg.sweep is Sweep.RS_VS_RBD:
        return run_fig2(cfg.gamma_db, cfg.rbd_grid, cfg.K, cfg.M)
    if cfg.sweep is Sweep.BD_COUNT:
        return run_fig4_fig5(cfg)
    return run_fig3(cfg)


# ---------------------------------------------------------------- defaults

def default_config(command):
    if command == "fig2":
        return ExperimentConfig(sweep=Sweep.RS_VS_RBD, gamma_db=DEFAULT_GAMMA_DB,
                                rbd_grid=parse_number_list("0:8:0.05"), output_path="fig2.csv")
    if command == "fig3":
        return ExperimentConfig(sweep=Sweep.POWER, methods=("MRC", "CorrelationEig", "SDR"),
                                p_dbm=parse_number_list("-10:30:5"), J=200, seed=7,
                                output_path="fig3.csv")
    if command in ("fig4", "fig5"):
        return ExperimentConfig(sweep=Sweep.BD_COUNT, j_list=DEFAULT_J_LIST,
                                n_realizations=1000, seed=11, output_path=f"{command}.csv")
    return ExperimentConfig(sweep=Sweep.SINGLE, methods=("MRC", "CorrelationEig", "SDR"),
                            J=20, n_realizations=10, output_path="run.csv")


_COMMAND_SWEEP = {"fig2": Sweep.RS_VS_RBD, "fig3": Sweep.POWER,
                  "fig4": Sweep.BD_COUNT, "fig5": Sweep.BD_COUNT}


def metadata_for(command, cfg):
    meta = {
        "command": command,
        "sweep": cfg.sweep.value,
        "sweep_value_unit": {Sweep.POWER: "p_dBm", Sweep.BD_COUNT: "J",
                             Sweep.RS_VS_RBD: "R_BD_bps_hz", Sweep.SINGLE: "p_dBm"}[cfg.sweep],
        "seed": cfg.seed,
        "n_realizations": cfg.n_realizations,
        "mc_trials": cfg.mc_trials,
        "system": ", ".join(f"{k}={v}" for k, v in asdict(cfg).items()
                            if k in ("sigma2_dbm", "beta_hd_db", "beta_h_db", "beta_g_db",
                                     "alpha", "K", "M", "J", "bd_symbol_model")),
        "primary_rate": "Monte Carlo mean of log2(1 + SNR) over BD symbols",
        "secondary_rate": "log-det sum rate with MMSE-SIC",
        "stderr": "MC standard error (one realization) or standard error across realizations",
    }
    if cfg.sweep is Sweep.RS_VS_RBD:
        meta["gamma_db"] = f"{_fmt_list(cfg.gamma_db)} (default set chosen by this tool)"
        meta["primary_rate"] = "massive-BD primary rate given the BD sum rate"
        meta["secondary_rate"] = "R_BD (the sweep value)"
    return meta


# ---------------------------------------------------------------- entry point

def build_parser():
    parser = argparse.ArgumentParser(prog="symradio",
                                     description="Symbiotic-radio beamforming experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("fig2", "primary rate against BD sum rate (analytic)"),
        ("fig3", "primary rate against transmit power for each beamformer"),
        ("fig4", "primary rate against number of BDs"),
        ("fig5", "secondary rate against number of BDs"),
        ("run", "run whatever sweep the config describes"),
        ("validate-config", "parse a config file and report problems"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="INI experiment config")
        if name == "validate-config":
            continue
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--out", help="output CSV path, '-' for stdout")
        p.add_argument("--methods", help="comma list of MRC, CorrelationEig, SDR")
        p.add_argument("--trials", type=int, help="Monte Carlo trials per realization")
        p.add_argument("--realizations", type=int, help="number of channel realizations")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _resolve_config(args):
    cfg = load_config(args.config) if args.config else default_config(args.command)
    if args.command in _COMMAND_SWEEP and cfg.sweep is not _COMMAND_SWEEP[args.command]:
        raise ConfigError(f"{args.command} needs sweep = {_COMMAND_SWEEP[args.command].value}, "
                          f"config has {cfg.sweep.value}")
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["output_path"] = args.out
    if args.methods is not None:
        changes["methods"] = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    if args.trials is not None:
        changes["mc_trials"] = args.trials
    if args.realizations is not None:
        changes["n_realizations"] = args.realizations
    return cfg.with_(**changes) if changes else cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "validate-config":
        if not args.config:
            print("error: validate-config needs --config", file=sys.stderr)
            return EXIT_CONFIG
        try:
            cfg = load_config(args.config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"ok: {cfg.sweep.value}, methods={','.join(cfg.methods)}, "
              f"realizations={cfg.n_realizations}")
        return EXIT_OK

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _resolve_config(args)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = run_config(cfg)
    except (bf.SolverError, NumericError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    emit_csv(rows, cfg.output_path or "-", metadata_for(args.command, cfg))
    if any(r.status.startswith("solver_failed") for r in rows):
        print("solver failure on at least one point; see the status column", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
