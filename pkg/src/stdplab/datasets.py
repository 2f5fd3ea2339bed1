"""Biological datasets, CSV (de)serialization and key-value parameter files.

Dataset CSV schema (times in milliseconds, weight changes fractional)::

    variant,dt_ms,dt1_ms,dt2_ms,t_sep_ms,rho_hz,reps,dw_exp,sem,label,source

``variant`` is one of pairing / triplet_pre_post_pre /
triplet_post_pre_post / quadruplet; timing columns not used by the
variant stay empty. ``rho_hz`` defaults to 1 and ``reps`` to 60 when
empty. Lines starting with ``#`` are metadata comments; ``# dataset:
NAME`` declares the dataset name. The two bundled datasets keep a
``source`` tag per row naming the table the value was transcribed from.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .protocols import (DEFAULT_REPS, DEFAULT_RHO, PairingProtocol, ProtocolError,
                        ProtocolSpec, QuadrupletProtocol, TripletPostPrePost,
                        TripletPrePostPre)

__all__ = [
    "DataPoint",
    "Dataset",
    "DatasetError",
    "load_dataset",
    "write_dataset",
    "bundled_dataset",
    "bundled_param_file",
    "load_params",
    "write_params",
    "format_number",
]

# Point counts of the named reference datasets; anything else is free-form.
KNOWN_SIZES = {"visual_cortex": 10, "hippocampal": 13}

CSV_COLUMNS = ["variant", "dt_ms", "dt1_ms", "dt2_ms", "t_sep_ms",
               "rho_hz", "reps", "dw_exp", "sem", "label", "source"]


class DatasetError(ValueError):
    """Raised for malformed dataset files or invalid dataset contents."""


@dataclass(frozen=True)
class DataPoint:
    """One measured weight change with its protocol and standard error."""

    protocol: ProtocolSpec
    dw_exp: float
    sem: float
    label: str = ""
    source: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.dw_exp)):
            raise DatasetError(f"dw_exp must be finite, got {self.dw_exp!r}")
        if not (self.sem > 0.0 and math.isfinite(self.sem)):
            raise DatasetError(f"sem must be finite and > 0, got {self.sem!r}")


@dataclass(frozen=True)
class Dataset:
    """A named list of data points."""

    name: str
    points: tuple[DataPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        expected = KNOWN_SIZES.get(self.name)
        if expected is not None and len(self.points) != expected:
            raise DatasetError(
                f"dataset {self.name!r} must have exactly {expected} points, "
                f"got {len(self.points)}")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def protocols(self) -> tuple[ProtocolSpec, ...]:
        return tuple(p.protocol for p in self.points)

    @property
    def dw_exp(self):
        return [p.dw_exp for p in self.points]

    @property
    def sems(self):
        return [p.sem for p in self.points]


def format_number(x: float, sig: int = 12) -> str:
    """Serialize a float with explicit precision so outputs are platform-stable."""
    if x == 0:
        return "0"
    s = f"{x:.{sig}g}"
    return s


def _parse_float(row_no: int, field: str, raw: str, required: bool):
    raw = (raw or "").strip()
    if raw == "":
        if required:
            raise DatasetError(f"row {row_no}: field {field!r} is required for this variant")
        return None
    try:
        return float(raw)
    except ValueError:
        raise DatasetError(f"row {row_no}: field {field!r} is not a number: {raw!r}") from None


def _row_to_point(row_no: int, row: dict) -> DataPoint:
    variant = (row.get("variant") or "").strip()
    rho = _parse_float(row_no, "rho_hz", row.get("rho_hz", ""), required=False)
    rho = DEFAULT_RHO if rho is None else rho
    reps_raw = (row.get("reps") or "").strip()
    reps = DEFAULT_REPS if reps_raw == "" else int(reps_raw)
    ms = 1e-3
    try:
        if variant == "pairing":
            dt = _parse_float(row_no, "dt_ms", row.get("dt_ms", ""), required=True)
            protocol = PairingProtocol(dt=dt * ms, rho=rho, reps=reps)
        elif variant == "triplet_pre_post_pre":
            dt1 = _parse_float(row_no, "dt1_ms", row.get("dt1_ms", ""), required=True)
            dt2 = _parse_float(row_no, "dt2_ms", row.get("dt2_ms", ""), required=True)
            protocol = TripletPrePostPre(dt1=dt1 * ms, dt2=dt2 * ms, rho=rho, reps=reps)
        elif variant == "triplet_post_pre_post":
            dt1 = _parse_float(row_no, "dt1_ms", row.get("dt1_ms", ""), required=True)
            dt2 = _parse_float(row_no, "dt2_ms", row.get("dt2_ms", ""), required=True)
            protocol = TripletPostPrePost(dt1=dt1 * ms, dt2=dt2 * ms, rho=rho, reps=reps)
        elif variant == "quadruplet":
            dt1 = _parse_float(row_no, "dt1_ms", row.get("dt1_ms", ""), required=True)
            dt2 = _parse_float(row_no, "dt2_ms", row.get("dt2_ms", ""), required=True)
            t_sep = _parse_float(row_no, "t_sep_ms", row.get("t_sep_ms", ""), required=True)
            if dt1 != -dt2:
                raise DatasetError(
                    f"row {row_no}: quadruplet timing must satisfy dt1 = -dt2 "
                    f"(got dt1={dt1:g} ms, dt2={dt2:g} ms)")
            protocol = QuadrupletProtocol(dt=dt2 * ms, t_sep=t_sep * ms, rho=rho, reps=reps)
        else:
            raise DatasetError(f"row {row_no}: unknown variant {variant!r}")
    except ProtocolError as exc:
        raise DatasetError(f"row {row_no}: {exc}") from exc

    dw_exp = _parse_float(row_no, "dw_exp", row.get("dw_exp", ""), required=True)
    sem = _parse_float(row_no, "sem", row.get("sem", ""), required=True)
    try:
        return DataPoint(protocol=protocol, dw_exp=dw_exp, sem=sem,
                         label=(row.get("label") or "").strip(),
                         source=(row.get("source") or "").strip())
    except DatasetError as exc:
        raise DatasetError(f"row {row_no}: {exc}") from exc


def _load_dataset_text(text: str, fallback_name: str) -> Dataset:
    name = fallback_name
    data_lines = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("#"):
            meta = stripped.lstrip("#").strip()
            if meta.lower().startswith("dataset:"):
                name = meta.split(":", 1)[1].strip()
            continue
        if stripped == "":
            continue
        data_lines.append(line)
    if not data_lines:
        raise DatasetError("dataset file is empty")
    reader = csv.DictReader(io.StringIO("\n".join(data_lines)))
    missing = [c for c in ("variant", "dw_exp", "sem") if c not in (reader.fieldnames or [])]
    if missing:
        raise DatasetError(f"dataset header is missing columns: {', '.join(missing)}")
    points = [_row_to_point(i, row) for i, row in enumerate(reader, start=2)]
    if not points:
        raise DatasetError("dataset file has a header but no data rows")
    return Dataset(name=name, points=tuple(points))


def load_dataset(path) -> Dataset:
    """Load and validate a dataset CSV; errors name the offending row/field."""
    path = Path(path)
    return _load_dataset_text(path.read_text(encoding="utf-8"), fallback_name=path.stem)


def _point_row(point: DataPoint) -> list[str]:
    p = point.protocol
    cells = {c: "" for c in CSV_COLUMNS}
    per_ms = 1e3
    if isinstance(p, PairingProtocol):
        cells["variant"] = "pairing"
        cells["dt_ms"] = format_number(p.dt * per_ms)
    elif isinstance(p, TripletPrePostPre):
        cells["variant"] = "triplet_pre_post_pre"
        cells["dt1_ms"] = format_number(p.dt1 * per_ms)
        cells["dt2_ms"] = format_number(p.dt2 * per_ms)
    elif isinstance(p, TripletPostPrePost):
        cells["variant"] = "triplet_post_pre_post"
        cells["dt1_ms"] = format_number(p.dt1 * per_ms)
        cells["dt2_ms"] = format_number(p.dt2 * per_ms)
    elif isinstance(p, QuadrupletProtocol):
        cells["variant"] = "quadruplet"
        cells["dt1_ms"] = format_number(-p.dt * per_ms)
        cells["dt2_ms"] = format_number(p.dt * per_ms)
        cells["t_sep_ms"] = format_number(p.t_sep * per_ms)
    else:  # pragma: no cover - new variants must extend the writer
        raise DatasetError(f"cannot serialize protocol {type(p).__name__}")
    cells["rho_hz"] = format_number(p.rho)
    cells["reps"] = str(p.reps)
    cells["dw_exp"] = format_number(point.dw_exp)
    cells["sem"] = format_number(point.sem)
    cells["label"] = point.label
    cells["source"] = point.source
    return [cells[c] for c in CSV_COLUMNS]


def write_dataset(dataset: Dataset, path) -> None:
    """Write a dataset CSV that ``load_dataset`` round-trips exactly."""
    path = Path(path)
    lines = [f"# dataset: {dataset.name}", ",".join(CSV_COLUMNS)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for point in dataset.points:
        writer.writerow(_point_row(point))
    path.write_text("\n".join(lines) + "\n" + buf.getvalue(), encoding="utf-8")


def bundled_dataset(name: str) -> Dataset:
    """Load one of the datasets shipped with the package."""
    ref = resources.files("stdplab").joinpath(f"data/{name}.csv")
    if not ref.is_file():
        raise DatasetError(f"no bundled dataset named {name!r}")
    return _load_dataset_text(ref.read_text(encoding="utf-8"), fallback_name=name)


def bundled_param_file(name: str) -> dict[str, float]:
    """Load one of the parameter files shipped with the package."""
    ref = resources.files("stdplab").joinpath(f"data/params/{name}.kv")
    if not ref.is_file():
        raise DatasetError(f"no bundled parameter file named {name!r}")
    return _parse_params_text(ref.read_text(encoding="utf-8"), origin=f"{name}.kv")


def _parse_params_text(text: str, origin: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise DatasetError(f"{origin}:{lineno}: expected 'name = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        try:
            out[key] = float(value.strip())
        except ValueError:
            raise DatasetError(f"{origin}:{lineno}: value for {key!r} is not a number") from None
    return out


def load_params(path) -> dict[str, float]:
    """Read a flat ``name = value`` parameter file."""
    path = Path(path)
    return _parse_params_text(path.read_text(encoding="utf-8"), origin=str(path))


def write_params(params: dict[str, float], path, header: str | None = None) -> None:
    """Write a flat ``name = value`` parameter file (12 significant digits)."""
    path = Path(path)
    lines = []
    if header:
        lines.extend(f"# {line}" for line in header.splitlines())
    for key in params:
        lines.append(f"{key} = {format_number(float(params[key]))}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
