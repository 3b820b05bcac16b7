"""Command-line front end.

Subcommands ``denoise``, ``simulate``, ``forecast`` and ``bench`` read and
write CSV.  Settings come from, in increasing precedence: built-in defaults,
a flat ``key = value`` config file (``--config``), and command-line flags.
Every output starts with ``#`` lines echoing the resolved settings.

Exit codes: 0 success, 2 configuration error, 3 input-format error,
4 numerical error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import sys
import warnings
from collections.abc import Sequence

import numpy as np

from .errors import (ConfigError, DomainError, InputFormatError, NumericalError)
from .evaluation import (ALGORITHMS, INDEX_ORDERS, index_sequence, offline_estimate,
                         online_learner, rate_study, rolling_forecast)
from .core import run_protocol
from .signals import SIGNALS, add_noise, make_signal

__all__ = ["main", "build_parser", "resolve", "read_series", "read_baseline"]

EXIT_OK, EXIT_CONFIG, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3, 4

DEFAULT_NS = "256,512,1024,2048,4096,8192,16384"

# Per-command defaults; keys double as config-file keys (dashes or
# underscores) and as flag names.
DEFAULTS = {
    "denoise": dict(input=None, output="-", algorithm="aligator", expert_kind="average",
                    eta=None, sigma=None, seed=0, baseline_csv=None, alpha=0.5, beta=0.3),
    "simulate": dict(input=None, output="-", signal="doppler", n=2048, amplitude=None,
                     algorithm="aligator", expert_kind="average", eta=None, sigma=0.25,
                     delta=0.1, seed=0, index_order="isotonic"),
    "forecast": dict(input=None, output="-", algorithm="aligator-hedged", expert_kind="1",
                     window=None, horizon=None, stride=1, start=None, seed=0,
                     alpha=0.5, beta=0.3),
    "bench": dict(output="-", signal="doppler", ns=DEFAULT_NS, sigma=0.25, trials=5,
                  algorithms="aligator,running-mean", mode="offline", amplitude=None,
                  expert_kind="average", seed=0),
}

_INT_KEYS = {"n", "seed", "window", "horizon", "stride", "start", "trials"}
_FLOAT_KEYS = {"eta", "sigma", "delta", "alpha", "beta", "amplitude"}


def _convert(key: str, value):
    if value is None or key not in _INT_KEYS | _FLOAT_KEYS:
        return value
    if isinstance(value, str) and value.strip().lower() in ("", "none"):
        return None
    try:
        return int(value) if key in _INT_KEYS else float(value)
    except (TypeError, ValueError):
        kind = "an integer" if key in _INT_KEYS else "a number"
        raise ConfigError(f"{key} must be {kind}, got {value!r}") from None


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` and ``;`` start comments."""
    parser = configparser.ConfigParser(interpolation=None,
                                       inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_string("[run]\n" + handle.read(), source=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from None
    return {key.replace("-", "_"): value for key, value in parser["run"].items()}


def resolve(command: str, flags: dict, config_path: str | None = None) -> dict:
    """Merge defaults, config file and flags for ``command``."""
    defaults = DEFAULTS[command]
    merged = dict(defaults)
    if config_path:
        file_values = read_config(config_path)
        file_values.pop("command", None)
        unknown = sorted(set(file_values) - set(defaults))
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
        merged.update(file_values)
    merged.update({k: v for k, v in flags.items() if v is not None and k in defaults})
    return {k: _convert(k, v) for k, v in merged.items()}


def _header(command: str, settings: dict) -> list[str]:
    lines = [f"# command={command}"]
    lines += [f"# {key}={settings[key]}" for key in sorted(settings)]
    return lines


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write(path: str, header: list[str], columns: Sequence[str], rows) -> None:
    buffer = io.StringIO()
    for line in header:
        buffer.write(line + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buffer.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def _read_table(path: str, required: Sequence[str], optional: Sequence[str]) -> dict:
    """Numeric columns of a CSV with a header row; ``#`` lines are skipped."""
    if path is None:
        raise ConfigError("an input CSV is required (--input)")
    try:
        with open(path, encoding="utf-8", newline="") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read input {path}: {exc}") from None
    header, columns = None, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = [c.strip() for c in next(csv.reader([line]))]
        if header is None:
            header = cells
            missing = [c for c in required if c not in header]
            if missing:
                raise InputFormatError(
                    f"{path}, line {lineno}: header lacks column(s) {', '.join(missing)}")
            if len(set(header)) != len(header):
                raise InputFormatError(f"{path}, line {lineno}: duplicate column names")
            columns = {c: [] for c in header if c in (*required, *optional)}
            continue
        if len(cells) != len(header):
            raise InputFormatError(
                f"{path}, line {lineno}: expected {len(header)} fields, got {len(cells)}")
        for name, cell in zip(header, cells):
            if name not in columns:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise InputFormatError(
                    f"{path}, line {lineno}: column {name!r} is not a number: {cell!r}"
                ) from None
            if not math.isfinite(value):
                raise InputFormatError(f"{path}, line {lineno}: column {name!r} is not finite")
            columns[name].append(value)
    if header is None:
        raise InputFormatError(f"{path}: no header row")
    if not columns[required[0]]:
        raise InputFormatError(f"{path}: no data rows")
    return {k: np.asarray(v) for k, v in columns.items()}


def read_series(path: str) -> dict:
    """Columns ``y`` (required), ``t`` and ``theta`` (optional)."""
    return _read_table(path, ("y",), ("t", "theta"))


def read_baseline(path: str, n: int) -> np.ndarray:
    """External estimates in ``t,estimate`` form, aligned by ``t`` (1-based)."""
    table = _read_table(path, ("t", "estimate"), ())
    out = np.full(n, np.nan)
    for t, est in zip(table["t"], table["estimate"]):
        if t != int(t) or not 1 <= t <= n:
            raise InputFormatError(f"{path}: t={t} is not an index in [1, {n}]")
        out[int(t) - 1] = est
    if np.isnan(out).any():
        raise InputFormatError(f"{path}: estimates do not cover every t in [1, {n}]")
    return out


def _report(message: str) -> None:
    sys.stderr.write(message + "\n")


def cmd_denoise(s: dict) -> None:
    data = read_series(s["input"])
    y = data["y"]
    n = len(y)
    if n < 2 and s["algorithm"] in ("wavelet", "holt"):
        raise InputFormatError("the wavelet and Holt baselines need at least two rows")
    estimate = offline_estimate(y, s["algorithm"], s["sigma"], s["eta"],
                                _expert_kind(s["expert_kind"]), s["alpha"], s["beta"])
    t = data.get("t", np.arange(1, n + 1))
    theta = data.get("theta")
    baseline = None if s["baseline_csv"] is None else read_baseline(s["baseline_csv"], n)
    columns = ["t", "y", "estimate"]
    parts = [t, y, estimate]
    if baseline is not None:
        columns.append("baseline")
        parts.append(baseline)
    if theta is not None:
        columns += ["theta", "sq_error"]
        parts += [theta, (estimate - theta) ** 2]
    _write(s["output"], _header("denoise", s), columns, zip(*parts))
    if theta is not None:
        err = float(np.sum((estimate - theta) ** 2))
        _report(f"cumulative squared error: {err!r}")
        _report(f"mse: {err / n!r}")
        if baseline is not None:
            base_err = float(np.sum((baseline - theta) ** 2))
            _report(f"baseline cumulative squared error: {base_err!r}")


def cmd_simulate(s: dict) -> None:
    if s["input"] is not None:
        table = _read_table(s["input"], ("theta",), ("t",))
        theta = table["theta"]
    else:
        if s["signal"] not in SIGNALS:
            raise ConfigError(f"unknown signal {s['signal']!r}; "
                              f"choose from {', '.join(sorted(SIGNALS))}")
        if s["n"] is None or s["n"] < 2:
            raise ConfigError("simulate needs n >= 2")
        theta = make_signal(s["signal"], s["n"], s["amplitude"]).values
    if s["sigma"] is None or s["sigma"] < 0:
        raise ConfigError("simulate needs sigma >= 0")
    n = len(theta)
    indices = index_sequence(s["index_order"], n, s["seed"])
    # one noise draw per round: repeated queries see fresh noise
    y = theta[indices - 1] + add_noise(np.zeros(n), s["sigma"], s["seed"])
    learner = online_learner(s["algorithm"], n, float(np.max(np.abs(theta))), s["sigma"],
                             s["eta"], s["delta"], _expert_kind(s["expert_kind"]))
    trace = run_protocol(learner, indices, y, theta[indices - 1])
    sq = trace.squared_errors()
    cum = np.cumsum(sq)
    rows = zip(range(1, n + 1), indices, y, trace.predictions, theta[indices - 1], sq, cum)
    _write(s["output"], _header("simulate", s),
           ["t", "i_t", "y_t", "yhat_t", "theta", "sq_error", "cum_error"], rows)
    _report(f"cumulative squared error: {float(cum[-1])!r}")


def cmd_forecast(s: dict) -> None:
    if s["window"] is None or s["horizon"] is None:
        raise ConfigError("forecast needs --window and --horizon")
    if s["horizon"] < 1:
        raise ConfigError("forecast horizon must be >= 1")
    y = read_series(s["input"])["y"]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        origins = rolling_forecast(y, s["window"], s["horizon"], s["algorithm"], s["stride"],
                                   s["start"], _expert_kind(s["expert_kind"]),
                                   s["alpha"], s["beta"])
    for w in caught:
        _report(f"warning: {w.message}")
    rows = []
    for o in origins:
        for j, (f, a) in enumerate(zip(o.forecasts, o.actual), start=1):
            rows.append((o.origin + 1, j, o.origin + j, f, a, o.rmse))
    _write(s["output"], _header("forecast", s),
           ["origin", "step", "t", "forecast", "actual", "origin_rmse"], rows)
    if origins:
        _report(f"average rmse: {float(np.mean([o.rmse for o in origins]))!r}")


def cmd_bench(s: dict) -> None:
    try:
        ns = [int(v) for v in str(s["ns"]).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"ns must be a comma-separated list of integers, got {s['ns']!r}") from None
    if not ns or min(ns) < 2:
        raise ConfigError("ns must list lengths >= 2")
    algorithms = [a.strip() for a in str(s["algorithms"]).split(",") if a.strip()]
    if s["signal"] not in SIGNALS:
        raise ConfigError(f"unknown signal {s['signal']!r}")
    result = rate_study(s["signal"], ns, s["sigma"], s["trials"], algorithms, s["seed"],
                        s["mode"], s["amplitude"], _expert_kind(s["expert_kind"]))
    _write(s["output"], _header("bench", s),
           ["algorithm", "n", "mean_cum_error", "std"], result.rows)
    for alg, slope in result.slopes.items():
        _report(f"log-log slope {alg}: {'undefined' if slope is None else repr(slope)}")


def _expert_kind(value):
    text = str(value)
    return int(text) if text.isdigit() else text


COMMANDS = {"denoise": cmd_denoise, "simulate": cmd_simulate,
            "forecast": cmd_forecast, "bench": cmd_bench}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aligator",
                                     description="Adaptive trend estimation and forecasting.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, algorithms=ALGORITHMS):
        p.add_argument("--config", help="flat key=value file; flags override it")
        p.add_argument("-o", "--output", help="output CSV path ('-' for stdout)")
        p.add_argument("--seed", type=int)
        if algorithms:
            p.add_argument("--algorithm", choices=algorithms)
        p.add_argument("--expert-kind", dest="expert_kind",
                       help="'average', or a polynomial degree such as 1")

    p = sub.add_parser("denoise", help="offline estimate of a fully observed series")
    common(p)
    p.add_argument("-i", "--input", help="CSV with column y (optional t, theta)")
    p.add_argument("--eta", type=float)
    p.add_argument("--sigma", type=float, help="noise level; MAD estimate when omitted")
    p.add_argument("--baseline-csv", dest="baseline_csv",
                   help="external estimates as t,estimate for comparison")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)

    p = sub.add_parser("simulate", help="play the online protocol on a synthetic signal")
    common(p, ("aligator", "aligator-hedged", "aligator-heuristic"))
    p.add_argument("-i", "--input", help="CSV with a theta column instead of --signal")
    p.add_argument("--signal")
    p.add_argument("-n", "--n", type=int)
    p.add_argument("--amplitude", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--index-order", dest="index_order", choices=INDEX_ORDERS)

    p = sub.add_parser("forecast", help="rolling-origin forecast evaluation")
    common(p, ("aligator", "aligator-hedged", "holt"))
    p.add_argument("-i", "--input", help="CSV with column y")
    p.add_argument("--window", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--start", type=int, help="first origin (0-based count of past values)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)

    p = sub.add_parser("bench", help="cumulative error versus n")
    common(p, ())
    p.add_argument("--signal")
    p.add_argument("--ns", help="comma-separated lengths")
    p.add_argument("--sigma", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--algorithms", help="comma-separated; may include running-mean")
    p.add_argument("--mode", choices=("offline", "online"))
    p.add_argument("--amplitude", type=float)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        settings = resolve(args.command, flags, args.config)
        COMMANDS[args.command](settings)
    except ConfigError as exc:
        _report(f"config error: {exc}")
        return EXIT_CONFIG
    except InputFormatError as exc:
        _report(f"input error: {exc}")
        return EXIT_INPUT
    except NumericalError as exc:
        _report(f"numerical error: {exc}")
        return EXIT_NUMERICAL
    except DomainError as exc:
        _report(f"config error: {exc}")
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
