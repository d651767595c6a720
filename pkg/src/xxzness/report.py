"""Sweep specifications, deterministic tabular output, and quick-look figures.

Output contract: CSV (one header row, comma separated, UTF-8, LF) with
shortest round-trip float formatting, so re-reading and re-emitting a file
is byte identical; JSON (sorted keys) for fit reports and metadata.  The
metadata block echoes the sweep specification verbatim plus tool version,
git commit, seed, and a timestamp honoring SOURCE_DATE_EPOCH so identical
spec + seed reproduce identical bytes.  Figures are rendered with
matplotlib next to the delimited output (deterministic SVG: fixed hash salt,
no embedded date).
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

TOOL_NAME = "xxzness"
TOOL_VERSION = "0.1.0"


@dataclass(frozen=True)
class GridAxis:
    """One sweep axis: name, inclusive bounds, point count, linear or log."""

    name: str
    lo: float
    hi: float
    count: int
    log: bool = False

    def __post_init__(self):
        if self.count < 1:
            raise ValidationError("grid", f"axis {self.name}: count must be >= 1")
        if self.log and (self.lo <= 0 or self.hi <= 0):
            raise ValidationError("grid", f"axis {self.name}: log axis needs positive bounds")

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.lo], dtype=float)
        if self.log:
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)

    def spec_string(self) -> str:
        s = f"{self.name}={self.lo!r}:{self.hi!r}:{self.count}"
        return s + (":log" if self.log else "")


def parse_grid_spec(text: str) -> list[GridAxis]:
    """Parse 'name=lo:hi:count[:log],name2=...' into grid axes."""
    axes = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValidationError("grid", f"malformed axis {part!r}; want name=lo:hi:count[:log]")
        name, rhs = part.split("=", 1)
        bits = rhs.split(":")
        if len(bits) not in (3, 4):
            raise ValidationError("grid", f"malformed axis {part!r}; want name=lo:hi:count[:log]")
        log = len(bits) == 4
        if log and bits[3] != "log":
            raise ValidationError("grid", f"unknown axis scale {bits[3]!r} in {part!r}")
        try:
            lo, hi, count = float(bits[0]), float(bits[1]), int(bits[2])
        except ValueError as exc:
            raise ValidationError("grid", f"malformed axis {part!r}: {exc}") from None
        axes.append(GridAxis(name=name.strip(), lo=lo, hi=hi, count=count, log=log))
    if not axes:
        raise ValidationError("grid", "no axes given")
    return axes


@dataclass
class SweepSpec:
    """Everything defining one CLI run; echoed verbatim into metadata."""

    command: str
    variant: str = "coherent_drive"
    grid: list = field(default_factory=list)
    fixed: dict = field(default_factory=dict)
    observables: list = field(default_factory=list)
    output: str = "out"
    fmt: str = "csv"
    seed: int = 0
    threads: int = 1

    def echo(self) -> dict:
        return {
            "command": self.command,
            "variant": self.variant,
            "grid": [ax.spec_string() for ax in self.grid],
            "fixed": {k: self.fixed[k] for k in sorted(self.fixed)},
            "observables": list(self.observables),
            "output": self.output,
            "format": self.fmt,
            "seed": self.seed,
            "threads": self.threads,
        }


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch is not None else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def build_meta(spec: SweepSpec, extra: dict | None = None) -> dict:
    meta = {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "git_commit": os.environ.get("XXZNESS_GIT_COMMIT", "unknown"),
        "seed": spec.seed,
        "timestamp": _timestamp(),
        "spec": spec.echo(),
    }
    if extra:
        meta.update(extra)
    return meta


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _parse_cell(text: str):
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


@dataclass
class SweepResult:
    """Tabular scan output: column names, row tuples, metadata dict."""

    columns: list
    rows: list
    meta: dict = field(default_factory=dict)

    def to_csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValidationError("rows", "row length does not match columns")
            lines.append(",".join(_format_cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv_text())

    @classmethod
    def read_csv(cls, path: str) -> "SweepResult":
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        lines = text.splitlines()
        columns = lines[0].split(",")
        rows = [tuple(_parse_cell(c) for c in line.split(",")) for line in lines[1:] if line]
        return cls(columns=columns, rows=rows)

    def to_json_text(self) -> str:
        payload = {"columns": self.columns,
                   "rows": [list(r) for r in self.rows],
                   "meta": self.meta}
        return json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n"

    def write_meta(self, path: str):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(self.meta, indent=2, sort_keys=True, allow_nan=True) + "\n")

    def write(self, base: str, fmt: str = "csv"):
        """Write `<base>.csv` (or .json) plus `<base>.meta.json`; returns paths."""
        paths = []
        if fmt == "json":
            path = base + ".json"
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(self.to_json_text())
            paths.append(path)
        else:
            path = base + ".csv"
            self.write_csv(path)
            paths.append(path)
        meta_path = base + ".meta.json"
        self.write_meta(meta_path)
        paths.append(meta_path)
        return paths


# ---------------------------------------------------------------------------
# figures

def _mpl():
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = TOOL_NAME
    import matplotlib.pyplot as plt
    return plt


def _savefig(fig, path: str):
    kwargs = {"metadata": {"Date": None}} if path.endswith(".svg") else {}
    fig.tight_layout()
    fig.savefig(path, **kwargs)
    import matplotlib.pyplot as plt
    plt.close(fig)


def save_line_figure(path: str, x, series: dict, xlabel: str, ylabel: str,
                     logx: bool = False, logy: bool = False, title: str = "",
                     vlines=()):
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in series.items():
        ax.plot(x, y, lw=1.5, marker="o" if len(np.atleast_1d(x)) <= 40 else None,
                ms=3, label=label)
    for v in vlines:
        ax.axvline(v, color="0.5", ls="--", lw=0.8)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend(frameon=False, fontsize=8)
    ax.grid(True, alpha=0.3)
    _savefig(fig, path)


def save_heatmap_figure(path: str, x, y, z, xlabel: str, ylabel: str,
                        zlabel: str, title: str = "", boundary=None):
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(x, y, z, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=zlabel)
    if boundary is not None:
        bx, by = boundary
        ax.plot(bx, by, "w--", lw=1.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    _savefig(fig, path)
