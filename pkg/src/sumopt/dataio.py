"""Data plumbing: IDX image/label files, batch streams, TOML run
configuration with dotted keys, and the metrics CSV format.
"""

from __future__ import annotations

import csv
import gzip
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

try:
    import tomllib as _toml  # py311+
except ImportError:
    import tomli as _toml

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

CSV_HEADER = ["run_id", "seed", "formulation", "mu", "lambda", "t", "eta",
              "train_loss", "grad_norm", "region_flag", "wall_ms"]


@dataclass
class Dataset:
    inputs: np.ndarray   # (n, d), values in [0, 1]
    labels: np.ndarray   # (n,), integers in [0, 10)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels)
        if self.inputs.ndim != 2 or self.labels.ndim != 1:
            raise ValueError("inputs must be a matrix and labels a vector")
        if len(self.inputs) != len(self.labels):
            raise ValueError(f"{len(self.inputs)} input rows vs {len(self.labels)} labels")
        if len(self.labels) == 0:
            raise ValueError("dataset is empty")
        if self.inputs.size and (self.inputs.min() < 0.0 or self.inputs.max() > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")
        if not np.issubdtype(self.labels.dtype, np.integer):
            raise ValueError("labels must be integers")
        if self.labels.min() < 0 or self.labels.max() >= 10:
            raise ValueError("labels must lie in [0, 10)")

    def __len__(self) -> int:
        return len(self.labels)


def _read_idx_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def load_idx(path, expected_kind: str) -> np.ndarray:
    """Parse one big-endian IDX file (raw or gzip).

    images -> (n, rows*cols) float64 scaled by 1/255; labels -> (n,) int64.
    """
    if expected_kind not in ("images", "labels"):
        raise ValueError(f"expected_kind must be 'images' or 'labels', got {expected_kind!r}")
    raw = _read_idx_bytes(path)
    if len(raw) < 4:
        raise ValueError(f"{path}: truncated file, no magic number")
    magic = struct.unpack(">I", raw[:4])[0]
    want = IMAGES_MAGIC if expected_kind == "images" else LABELS_MAGIC
    if magic != want:
        raise ValueError(
            f"{path}: bad magic number 0x{magic:08x} at offset 0, expected "
            f"0x{want:08x} for {expected_kind}")
    if expected_kind == "images":
        if len(raw) < 16:
            raise ValueError(f"{path}: truncated header, need 16 bytes")
        n, rows, cols = struct.unpack(">III", raw[4:16])
        need = 16 + n * rows * cols
        if len(raw) != need:
            raise ValueError(f"{path}: expected {need} bytes for {n} images of "
                             f"{rows}x{cols}, file has {len(raw)}")
        pixels = np.frombuffer(raw, dtype=np.uint8, count=n * rows * cols, offset=16)
        return pixels.reshape(n, rows * cols).astype(np.float64) / 255.0
    if len(raw) < 8:
        raise ValueError(f"{path}: truncated header, need 8 bytes")
    n = struct.unpack(">I", raw[4:8])[0]
    need = 8 + n
    if len(raw) != need:
        raise ValueError(f"{path}: expected {need} bytes for {n} labels, file has {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8, count=n, offset=8).astype(np.int64)


def load_dataset(images_path, labels_path) -> Dataset:
    return Dataset(inputs=load_idx(images_path, "images"),
                   labels=load_idx(labels_path, "labels"))


def minibatch_indices(n: int, batch: int, seed: int, mode: str) -> Iterator[np.ndarray]:
    """Endless stream of batch index arrays.

    with_replacement draws each batch independently and uniformly;
    epoch_shuffle walks a fresh seeded permutation per epoch, including
    the short last batch.
    """
    if mode not in ("with_replacement", "epoch_shuffle"):
        raise ValueError(f"unknown batch mode {mode!r}")
    if not 1 <= batch <= n:
        raise ValueError(f"batch must lie in [1, {n}], got {batch}")
    rng = np.random.default_rng(seed)
    if mode == "with_replacement":
        while True:
            yield rng.integers(0, n, batch)
    else:
        while True:
            perm = rng.permutation(n)
            for lo in range(0, n, batch):
                yield perm[lo:lo + batch]


def minibatch_stream(dataset: Dataset, batch: int, seed: int, mode: str):
    for idx in minibatch_indices(len(dataset), batch, seed, mode):
        yield dataset.inputs[idx], dataset.labels[idx]


# --- run configuration ------------------------------------------------------

PROBLEM_KINDS = ("noisy_quadratic", "noisy_rosenbrock", "logistic_synthetic", "mnist_mlp")


@dataclass
class RunConfig:
    kind: str
    dim: int = 2
    condition_number: float = 10.0
    noise_radius: float = 1.0
    problem_seed: int = 0
    mu: float = 0.0
    lam: float = 0.0
    formulation: str = "sum"
    alpha: float = 0.1
    K: int | None = None
    K_frac: float | None = None
    p: float = 1.0
    steps: int | None = None
    epochs: int | None = None
    batch: int | None = None
    seeds: int = 5
    output_mode: str = "last"
    batch_mode: str = "with_replacement"
    hidden: tuple = (128,)
    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None
    out_path: str | None = None


# dotted key -> (RunConfig field, expected type)
CONFIG_SCHEMA = {
    "problem.kind": ("kind", str),
    "problem.dim": ("dim", int),
    "problem.condition_number": ("condition_number", (int, float)),
    "problem.noise_radius": ("noise_radius", (int, float)),
    "problem.seed": ("problem_seed", int),
    "optimizer.mu": ("mu", (int, float)),
    "optimizer.lambda": ("lam", (int, float)),
    "optimizer.formulation": ("formulation", str),
    "schedule.alpha": ("alpha", (int, float)),
    "schedule.K": ("K", int),
    "schedule.K_frac": ("K_frac", (int, float)),
    "schedule.p": ("p", (int, float)),
    "run.steps": ("steps", int),
    "run.epochs": ("epochs", int),
    "run.batch": ("batch", int),
    "run.seeds": ("seeds", int),
    "run.output_mode": ("output_mode", str),
    "run.batch_mode": ("batch_mode", str),
    "model.hidden": ("hidden", list),
    "data.train_images": ("train_images", str),
    "data.train_labels": ("train_labels", str),
    "data.test_images": ("test_images", str),
    "data.test_labels": ("test_labels", str),
    "output.path": ("out_path", str),
}

_REQUIRED_KEYS = ("problem.kind", "optimizer.mu", "optimizer.lambda", "schedule.alpha")


def _flatten(tree: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in tree.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def parse_override(text: str) -> tuple[str, object]:
    """Parse one --set KEY=VALUE override; VALUE uses TOML literal syntax,
    falling back to a bare string."""
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ValueError(f"override must look like key=value, got {text!r}")
    try:
        parsed = _toml.loads(f"v = {value}")["v"]
    except _toml.TOMLDecodeError:
        parsed = value
    return key.strip(), parsed


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Load, merge overrides, and validate a run configuration."""
    text = Path(path).read_text()
    try:
        tree = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ValueError(f"{path}: {exc}") from exc
    flat = _flatten(tree)
    if overrides:
        flat.update(overrides)
    if not flat:
        raise ValueError(f"{path}: empty configuration")
    return config_from_flat(flat, source=str(path))


def config_from_flat(flat: dict, source: str = "<config>") -> RunConfig:
    unknown = sorted(set(flat) - set(CONFIG_SCHEMA))
    if unknown:
        raise ValueError(f"{source}: unknown configuration keys: {', '.join(unknown)}")
    missing = [k for k in _REQUIRED_KEYS if k not in flat]
    if missing:
        raise ValueError(f"{source}: missing required keys: {', '.join(missing)}")
    kwargs = {}
    for dotted, value in flat.items():
        attr, want = CONFIG_SCHEMA[dotted]
        if isinstance(value, bool) or not isinstance(value, want):
            raise ValueError(f"{source}: {dotted} must be {want}, got {value!r}")
        kwargs[attr] = value
    cfg = RunConfig(**kwargs)

    if cfg.kind not in PROBLEM_KINDS:
        raise ValueError(f"{source}: problem.kind must be one of {PROBLEM_KINDS}, got {cfg.kind!r}")
    hidden = tuple(cfg.hidden)
    if not hidden or not all(isinstance(h, int) and not isinstance(h, bool) and h >= 1
                             for h in hidden):
        raise ValueError(f"{source}: model.hidden must be a list of positive integers")
    cfg.hidden = hidden
    if cfg.K is not None and cfg.K_frac is not None:
        raise ValueError(f"{source}: give schedule.K or schedule.K_frac, not both")
    if cfg.K is None and cfg.K_frac is None:
        cfg.K_frac = 0.9
    if cfg.output_mode not in ("last", "random", "minimum"):
        raise ValueError(f"{source}: run.output_mode must be last, random, or minimum")
    if cfg.batch_mode not in ("with_replacement", "epoch_shuffle"):
        raise ValueError(f"{source}: run.batch_mode must be with_replacement or epoch_shuffle")
    if cfg.formulation not in ("sum", "zou", "yan"):
        raise ValueError(f"{source}: optimizer.formulation must be sum, zou, or yan")
    if cfg.kind == "mnist_mlp":
        if cfg.epochs is None or cfg.batch is None:
            raise ValueError(f"{source}: mnist_mlp needs run.epochs and run.batch")
    else:
        if cfg.steps is None:
            raise ValueError(f"{source}: synthetic problems need run.steps")

    # surface optimizer/schedule domain errors now rather than at run time
    from .optimizer_core import make_config
    make_config(float(cfg.mu), float(cfg.lam))
    from .schedules import ScheduleSpec
    if cfg.K is not None:
        ScheduleSpec(alpha=float(cfg.alpha), K=cfg.K, p=float(cfg.p))
    else:
        if not 0.0 <= cfg.K_frac <= 1.0:
            raise ValueError(f"{source}: schedule.K_frac must lie in [0, 1]")
        ScheduleSpec(alpha=float(cfg.alpha), K=0, p=float(cfg.p))
    return cfg


# --- metrics CSV ------------------------------------------------------------

@dataclass(frozen=True)
class MetricsRow:
    run_id: str
    seed: int
    formulation: str
    mu: float
    lam: float
    t: int
    eta: float
    train_loss: float
    grad_norm: float   # NaN when not evaluated at this step
    region_flag: int
    wall_ms: float


def _fmt_float(v: float) -> str:
    v = float(v)
    if math.isnan(v):
        return ""
    return repr(v)


def write_metrics(rows, path) -> None:
    """Write rows grouped by run, t strictly increasing within each run."""
    seen: set = set()
    current = None
    last_t = None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            if row.run_id != current:
                if row.run_id in seen:
                    raise ValueError(f"rows of run {row.run_id!r} are interleaved with another run")
                seen.add(row.run_id)
                current = row.run_id
                last_t = None
            if last_t is not None and row.t <= last_t:
                raise ValueError(f"t not strictly increasing in run {row.run_id!r}: "
                                 f"{row.t} after {last_t}")
            last_t = row.t
            writer.writerow([
                row.run_id, row.seed, row.formulation, _fmt_float(row.mu),
                _fmt_float(row.lam), row.t, _fmt_float(row.eta),
                _fmt_float(row.train_loss), _fmt_float(row.grad_norm),
                int(row.region_flag), _fmt_float(row.wall_ms),
            ])


def read_metrics(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = []
        for rec in reader:
            rows.append(MetricsRow(
                run_id=rec[0], seed=int(rec[1]), formulation=rec[2],
                mu=float(rec[3]), lam=float(rec[4]), t=int(rec[5]),
                eta=float(rec[6]), train_loss=float(rec[7]),
                grad_norm=float(rec[8]) if rec[8] else math.nan,
                region_flag=int(rec[9]), wall_ms=float(rec[10]),
            ))
    return rows


def rows_from_trajectory(run_id: str, trajectory) -> list:
    """Flatten one trajectory into MetricsRow records."""
    cfg = trajectory.config
    out = []
    for i in range(len(trajectory.t)):
        out.append(MetricsRow(
            run_id=run_id, seed=trajectory.seed, formulation=trajectory.formulation,
            mu=cfg.mu, lam=cfg.lam, t=int(trajectory.t[i]), eta=float(trajectory.eta[i]),
            train_loss=float(trajectory.loss[i]), grad_norm=float(trajectory.grad_norm[i]),
            region_flag=int(trajectory.region_flag[i]), wall_ms=float(trajectory.wall_ms[i]),
        ))
    return out
