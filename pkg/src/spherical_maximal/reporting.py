"""CSV / JSON writers and matplotlib figures for experiment output."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def _plain(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def write_rows(path, rows: list[dict], fmt: str = "csv", meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        payload = {"rows": _plain(rows)}
        if meta:
            payload.update(_plain(meta))
        path.write_text(json.dumps(payload, indent=2))
        return path
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    keys: list[str] = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: _plain(v) for k, v in r.items()})
    return path


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(payload), indent=2))
    return path


def write_plotdata(path, x, y) -> Path:
    """Two whitespace-separated columns, one point per line."""
    path = Path(path)
    with path.open("w") as fh:
        for a, b in zip(x, y):
            fh.write(f"{float(a)!r} {float(b)!r}\n")
    return path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def figure_exponent_fit(path, Lambdas, values, slope: float, reference: float | None = None,
                        title: str = "", ylabel: str = "measured") -> Path:
    """Log-log plot of values against Lambda with the fitted and reference slopes."""
    plt = _pyplot()
    L = np.asarray(Lambdas, dtype=float)
    v = np.asarray(values, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(L, v, "o", label=ylabel, base=2)
    anchor = np.exp(np.mean(np.log(v)) - slope * np.mean(np.log(L)))
    ax.loglog(L, anchor * L**slope, "-", label=f"fit slope {slope:.3f}", base=2)
    if reference is not None:
        a2 = np.exp(np.mean(np.log(v)) - reference * np.mean(np.log(L)))
        ax.loglog(L, a2 * L**reference, "--", label=f"reference {reference:.3f}", base=2)
    ax.set_xlabel("Lambda")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)


def figure_series(path, x, series: dict, title: str = "", xlabel: str = "", ylabel: str = "",
                  logy: bool = False) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, y in series.items():
        ax.plot(x, y, "o-", label=name)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)


def figure_regions(path, regions, points=()) -> Path:
    """Filled polygons of the exponent regions in the (1/p, 1/r) square."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for reg in regions:
        vs = np.array(reg.vertices + reg.vertices[:1])
        ax.fill(vs[:, 0], vs[:, 1], alpha=0.3, label=f"{reg.name}({reg.d})")
    for x, y in points:
        ax.plot([x], [y], "k.")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("1/p")
    ax.set_ylabel("1/r")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)
