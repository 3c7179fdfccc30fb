"""Report emission: delimited curve files, versioned JSON summaries, and
figure rendering.

Curves are written as RFC-4180 style CSV (comma separated, CRLF line
endings, header row, '.' decimal separator, minimal quoting) and summaries
as canonical JSON (sorted keys, two-space indent, trailing newline).  Apart
from the ``timing`` block of the JSON report, identical inputs produce
byte-identical files: floats are serialized with shortest round-trip
representations and no environment-dependent state is consulted.

Figures are rendered with the non-interactive matplotlib backend into PNG
files living alongside the delimited output, one per stored curve, so a
results directory is browsable without any plotting code of its own.
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
import os
from typing import Iterable

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import DomainError  # noqa: E402

__all__ = [
    "REPORT_VERSION",
    "write_csv",
    "write_json",
    "read_json",
    "report_payload",
    "write_report",
    "render_curve_figure",
    "render_report_figures",
]

REPORT_VERSION = "mbm-lab/1"


def _cell(value) -> str:
    """Deterministic text form of one CSV cell."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: str | os.PathLike, header: Iterable[str], rows: Iterable) -> None:
    """Write a curve file: header row then data rows, CRLF terminated."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_json(path: str | os.PathLike, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2, default=_jsonable)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def read_json(path: str | os.PathLike) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# --------------------------------------------------------------------------
# experiment report
# --------------------------------------------------------------------------

def report_payload(report, curve_files: dict, elapsed: float) -> dict:
    """Assemble the versioned JSON payload for an ExperimentReport.

    ``curve_files`` maps (statistic index, curve name) to the CSV filename
    written for it.  The ``timing`` block is the only run-dependent part and
    is ignored by byte-identity comparisons.
    """
    results = []
    for i, res in enumerate(report.results):
        results.append({
            "name": res.name,
            "verdict": res.verdict,
            "summary": res.summary,
            "curves": {cname: {"file": curve_files[(i, cname)], "kind": kind}
                       for cname, (kind, _, _) in res.curves.items()},
            "error": res.error,
        })
    return {
        "version": REPORT_VERSION,
        "config": report.config.to_dict(),
        "results": results,
        "exit_code": report.exit_code,
        "timing": {
            "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "elapsed_seconds": round(float(elapsed), 3),
        },
    }


def write_report(report, out_dir: str | os.PathLike, elapsed: float) -> str:
    """Write report.json plus one CSV per curve into ``out_dir``.

    Returns the path of the JSON report.  Curve filenames are derived from
    the statistic position and curve name so repeated statistics of the same
    kind never collide.
    """
    os.makedirs(out_dir, exist_ok=True)
    curve_files: dict = {}
    for i, res in enumerate(report.results):
        for cname, (kind, header, rows) in res.curves.items():
            fname = f"{i:02d}-{cname}.csv"
            write_csv(os.path.join(out_dir, fname), header, rows)
            curve_files[(i, cname)] = fname
    payload = report_payload(report, curve_files, elapsed)
    report_path = os.path.join(out_dir, "report.json")
    write_json(report_path, payload)
    return report_path


# --------------------------------------------------------------------------
# figures
# --------------------------------------------------------------------------

def _read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise DomainError(f"empty curve file {path}")
    return rows[0], rows[1:]


def _numeric_columns(header: list[str], rows: list[list[str]]) -> dict[str, np.ndarray]:
    cols: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[j]) for r in rows])
        except ValueError:
            cols[name] = np.array([r[j] for r in rows], dtype=object)
    return cols


def render_curve_figure(csv_path: str, kind: str, out_png: str, title: str = "") -> str:
    """Render one stored curve CSV to a PNG; returns the PNG path.

    Curve kinds: "modulus" (log-x ratio curves), "distance" (log-x
    energy-distance ladder with p-values), "path" (time series), "profile"
    (level profiles), "table" (bar/stem view of the leading numeric column
    pair).  Unknown kinds fall back to "table".
    """
    header, rows = _read_csv(csv_path)
    cols = _numeric_columns(header, rows)
    names = list(cols)
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    try:
        if kind == "modulus" and len(names) >= 2:
            x = cols[names[0]]
            for name in names[1:]:
                ax.plot(x, cols[name], marker=".", label=name)
            ax.set_xscale("log")
            ax.invert_xaxis()
            ax.set_xlabel(names[0])
            ax.set_ylabel("ratio")
            ax.legend(fontsize=8)
        elif kind == "distance" and len(names) >= 2:
            x = cols[names[0]]
            ax.plot(x, cols[names[1]], marker="o", label=names[1])
            ax.set_xscale("log")
            ax.invert_xaxis()
            ax.set_xlabel(names[0])
            ax.set_ylabel(names[1])
            if len(names) >= 3:
                ax2 = ax.twinx()
                ax2.plot(x, cols[names[2]], marker="s", color="tab:orange",
                         label=names[2])
                ax2.set_ylabel(names[2])
            ax.legend(fontsize=8, loc="upper left")
        elif kind in ("path", "profile") and len(names) >= 2:
            x = cols[names[0]]
            for name in names[1:]:
                ax.plot(x, cols[name], lw=0.8, label=name)
            ax.set_xlabel(names[0])
            ax.legend(fontsize=8)
        else:
            numeric = [n for n in names if cols[n].dtype != object]
            if len(numeric) >= 2:
                ax.plot(cols[numeric[0]], cols[numeric[1]], marker="o", ls="none")
                ax.set_xlabel(numeric[0])
                ax.set_ylabel(numeric[1])
            elif numeric:
                ax.plot(cols[numeric[0]], marker="o", ls="none")
                ax.set_ylabel(numeric[0])
        ax.set_title(title or os.path.basename(csv_path))
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(out_png)
    finally:
        plt.close(fig)
    return out_png


def render_report_figures(out_dir: str | os.PathLike) -> list[str]:
    """Render PNG figures for every curve referenced by reports in out_dir.

    Looks for ``report.json`` (verification runs) and ``ensemble.json`` /
    ``localtime.json`` manifests (simulation runs); every referenced CSV gets
    a PNG of the same stem alongside it.
    """
    out_dir = os.fspath(out_dir)
    rendered: list[str] = []
    report_path = os.path.join(out_dir, "report.json")
    if os.path.exists(report_path):
        payload = read_json(report_path)
        for res in payload.get("results", []):
            for cname, info in (res.get("curves") or {}).items():
                csv_path = os.path.join(out_dir, info["file"])
                if not os.path.exists(csv_path):
                    continue
                png = os.path.splitext(csv_path)[0] + ".png"
                title = f"{res['name']}: {cname} [{res['verdict']}]"
                rendered.append(render_curve_figure(csv_path, info.get("kind", "table"),
                                                    png, title))
    for manifest, kind in (("ensemble.json", "path"), ("localtime.json", "profile")):
        mpath = os.path.join(out_dir, manifest)
        if not os.path.exists(mpath):
            continue
        payload = read_json(mpath)
        for entry in payload.get("files", []):
            csv_path = os.path.join(out_dir, entry if isinstance(entry, str)
                                    else entry.get("file", ""))
            if not csv_path.endswith(".csv") or not os.path.exists(csv_path):
                continue
            png = os.path.splitext(csv_path)[0] + ".png"
            rendered.append(render_curve_figure(csv_path, kind, png))
    return rendered
