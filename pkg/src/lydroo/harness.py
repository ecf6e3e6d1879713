"""Experiment driver: config files, per-frame CSV metrics, run summaries."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .config import ConfigError, SystemConfig, WdProfile, default_config, validate_config
from .engine import SCHEMES, make_scheme, simulate

SCALAR_KEYS = (
    "n_wd",
    "frame_duration",
    "bandwidth",
    "rate_overhead",
    "noise_power",
    "cycles_per_bit",
    "energy_efficiency",
    "lyapunov_v",
    "energy_queue_scale",
    "data_unit",
)
PER_WD_KEYS = tuple(f.name for f in fields(WdProfile))
PER_WD_COLUMNS = ("h", "Q", "Y", "x", "tau", "f", "eO", "rO", "D", "e", "A")
TAIL_COLUMNS = ("G", "M_t", "m_star", "loss", "decide_ms")


# -- config text format ------------------------------------------------------

def parse_config(text: str) -> SystemConfig:
    """Build a config from ``key = value`` lines.

    Blank lines and ``#`` comments are ignored. Per-WD keys take either one
    value (broadcast) or a comma-separated list of ``n_wd`` values. Keys not
    given fall back to the default network.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCALAR_KEYS and key not in PER_WD_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value

    try:
        n_wd = int(values.pop("n_wd", "10"))
    except ValueError as exc:
        raise ConfigError(f"n_wd: {exc}") from None
    base = default_config(n_wd)
    scalars = {}
    for key in SCALAR_KEYS[1:]:
        if key in values:
            scalars[key] = _number(key, values.pop(key))
    if "bandwidth" in scalars and "noise_power" not in scalars:
        scalars["noise_power"] = base.noise_power * scalars["bandwidth"] / base.bandwidth

    columns = {}
    for key in PER_WD_KEYS:
        if key in values:
            items = [_number(key, v) for v in values.pop(key).split(",")]
            if len(items) == 1:
                items = items * n_wd
            if len(items) != n_wd:
                raise ConfigError(f"{key}: expected 1 or {n_wd} values, got {len(items)}")
            columns[key] = items
    profiles = tuple(
        replace(p, **{key: col[i] for key, col in columns.items()}) for i, p in enumerate(base.per_wd)
    )
    return validate_config(replace(base, per_wd=profiles, **scalars))


def _number(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {text.strip()!r}") from None


def format_config(cfg: SystemConfig) -> str:
    """Inverse of :func:`parse_config`; floats round-trip exactly."""
    lines = [f"n_wd = {cfg.n_wd}"]
    lines += [f"{key} = {getattr(cfg, key)!r}" for key in SCALAR_KEYS[1:]]
    for key in PER_WD_KEYS:
        lines.append(f"{key} = " + ", ".join(repr(getattr(p, key)) for p in cfg.per_wd))
    return "\n".join(lines) + "\n"


def load_config(path) -> SystemConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# -- per-frame CSV ----------------------------------------------------------

def csv_header(n_wd: int) -> list[str]:
    cols = ["frame"]
    for i in range(1, n_wd + 1):
        cols += [f"{name}_{i}" for name in PER_WD_COLUMNS]
    return cols + list(TAIL_COLUMNS)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def csv_row(record, with_timing: bool = True) -> list[str]:
    y = record.allocation
    row = [str(record.frame_index)]
    for i in range(record.channel.shape[0]):
        row += [
            _cell(record.channel[i]),
            _cell(record.data_queue[i]),
            _cell(record.energy_queue[i]),
            str(int(record.action.bits[i])),
            _cell(y.tau[i]),
            _cell(y.cpu[i]),
            _cell(y.offload_energy[i]),
            _cell(y.offload_rate[i]),
            _cell(record.processed[i]),
            _cell(record.energy[i]),
            _cell(record.arrivals[i]),
        ]
    ms = record.decide_seconds * 1e3 if with_timing and record.decide_seconds is not None else None
    row += [_cell(record.objective), _cell(record.candidate_count), _cell(record.best_order),
            _cell(record.loss), _cell(ms)]
    return row


class CsvWriter:
    """Streams frame records to a UTF-8 CSV with '\\n' line endings."""

    def __init__(self, path, n_wd: int, with_timing: bool = True):
        self.file = open(path, "w", encoding="utf-8", newline="")
        self.writer = csv.writer(self.file, lineterminator="\n")
        self.writer.writerow(csv_header(n_wd))
        self.with_timing = with_timing

    def __call__(self, t, record) -> None:
        self.writer.writerow(csv_row(record, self.with_timing))

    def close(self) -> None:
        self.file.close()


def read_metrics(path) -> dict[str, np.ndarray]:
    """Load a metrics CSV into float columns; empty cells become NaN."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) if v != "" else math.nan for v in row] for row in reader]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


# -- analysis ---------------------------------------------------------------

def moving_average(series, window: int = 200) -> np.ndarray:
    """Trailing mean: entry t averages entries max(0, t-window+1)..t."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(series, dtype=float)
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def tail_slope(series, tail: float = 0.25, window: int = 200) -> float:
    """Least-squares slope (per frame) over the last ``tail`` fraction of the smoothed series."""
    smooth = moving_average(series, window)
    start = int(math.floor(smooth.size * (1.0 - tail)))
    y = smooth[start:]
    t = np.arange(y.size, dtype=float)
    return float(np.polyfit(t, y, 1)[0])


def stability_verdict(series, mean_arrival: float, tail: float = 0.25, eps_slope: float = 0.01,
                      window: int = 200) -> str:
    """``"diverging"`` if the smoothed tail grows faster than eps_slope * mean_arrival per frame."""
    if len(series) < 400:
        raise ValueError("stability verdict needs at least 400 frames")
    return "diverging" if tail_slope(series, tail, window) > eps_slope * mean_arrival else "stable"


@dataclass
class RunSummary:
    scheme: str
    seed: int
    frames: int
    lambda_scale: float
    weighted_rate: float
    avg_power: np.ndarray
    mean_queue: float
    tail_queue: float
    verdict: str
    decide_ms: float | None

    def lines(self) -> list[str]:
        power = ", ".join(f"{p:.6g}" for p in self.avg_power)
        out = [
            f"scheme: {self.scheme}",
            f"seed: {self.seed}",
            f"frames: {self.frames}",
            f"lambda_scale: {self.lambda_scale:g}",
            f"avg_weighted_rate_bps: {self.weighted_rate:.10g}",
            f"avg_power_w: [{power}]",
            f"max_avg_power_w: {float(np.max(self.avg_power)):.6g}",
            f"mean_total_queue_bits: {self.mean_queue:.10g}",
            f"tail_total_queue_bits: {self.tail_queue:.10g}",
            f"stability: {self.verdict}",
        ]
        if self.decide_ms is not None:
            out.append(f"mean_decide_ms: {self.decide_ms:.4g}")
        return out


def summarize(columns: dict[str, np.ndarray], cfg: SystemConfig, scheme: str, seed: int,
              lambda_scale: float = 1.0, tail: float = 0.25) -> RunSummary:
    """Run statistics from column arrays (as produced by :func:`records_to_columns`)."""
    n = cfg.n_wd
    D = np.column_stack([columns[f"D_{i}"] for i in range(1, n + 1)])
    e = np.column_stack([columns[f"e_{i}"] for i in range(1, n + 1)])
    Q = np.column_stack([columns[f"Q_{i}"] for i in range(1, n + 1)])
    frames = D.shape[0]
    total_q = Q.sum(axis=1)
    verdict = (
        stability_verdict(total_q, float(cfg.arrival_means.sum()), tail) if frames >= 400 else "undetermined"
    )
    ms = columns["decide_ms"]
    decide = float(np.mean(ms)) if frames and not np.all(np.isnan(ms)) else None
    return RunSummary(
        scheme=scheme,
        seed=seed,
        frames=frames,
        lambda_scale=lambda_scale,
        weighted_rate=float((D @ cfg.weights).mean() / cfg.frame_duration),
        avg_power=e.mean(axis=0) / cfg.frame_duration,
        mean_queue=float(total_q.mean()),
        tail_queue=float(total_q[int(frames * (1 - tail)):].mean()),
        verdict=verdict,
        decide_ms=decide,
    )


def records_to_columns(records, with_timing: bool = True) -> dict[str, np.ndarray]:
    """Same columns as the CSV, built in memory without the text round trip."""
    n = records[0].channel.shape[0] if records else 0
    header = csv_header(n)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(csv_row(r, with_timing) for r in records)
    buf.seek(0)
    rows = [[float(v) if v != "" else math.nan for v in row] for row in csv.reader(buf)]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


@dataclass
class ExperimentResult:
    records: list
    summary: RunSummary
    config: SystemConfig


def run_experiment(cfg: SystemConfig | str | Path | None, scheme: str, frames: int, seed: int = 0,
                   out=None, sequential: bool = True, lambda_scale: float = 1.0, progress=None,
                   **scheme_kwargs) -> ExperimentResult:
    """Simulate one scheme and optionally stream its metrics to ``out``.

    ``sequential=False`` lets the learner train on a worker thread and logs
    decision wall time in the CSV; sequential runs leave that column empty so
    identical inputs give byte-identical files.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if frames < 1:
        raise ValueError("frames must be >= 1")
    if cfg is None:
        cfg = default_config()
    elif not isinstance(cfg, SystemConfig):
        cfg = load_config(cfg)
    if lambda_scale != 1.0:
        cfg = validate_config(cfg.with_arrival_scale(lambda_scale))
    if scheme == "lydroo":
        scheme_kwargs.setdefault("concurrent", not sequential)
    runner = make_scheme(scheme, cfg, seed=seed, **scheme_kwargs)
    writer = None
    if out is not None:
        writer = CsvWriter(out, cfg.n_wd, with_timing=not sequential)

    def on_frame(t, record):
        if writer is not None:
            writer(t, record)
        if progress is not None:
            progress(t, record)

    try:
        records = simulate(runner, cfg, frames, seed, progress=on_frame)
    finally:
        if writer is not None:
            writer.close()
    columns = records_to_columns(records, with_timing=True)
    summary = summarize(columns, cfg, scheme, seed, lambda_scale)
    return ExperimentResult(records, summary, cfg)
