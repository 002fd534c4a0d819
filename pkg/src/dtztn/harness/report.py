"""Write scenario reports as CSV/JSON, SVG charts and plain-text tables."""
import csv
import json
import os

import numpy as np

from ..exceptions import InsufficientData, IoError
from ..twin import read_records_csv, write_records_csv
from .scenarios import TECHNIQUES, summarize

FORMATS = ("csv", "svg_chart", "text_table")


def text_table(report):
    lines = []
    if report.techniques:
        lines.append(f"{'technique':<32}{'mean throughput (Kbps)':>24}")
        for key, label in TECHNIQUES:
            lines.append(f"{label:<32}{report.techniques[key]:>24.3f}")
        return "\n".join(lines)
    s = report.summary
    lines.append(f"scenario {report.name}: {s['steps']} steps")
    lines.append(f"  mean achieved         {s['mean_achieved_kbps']:10.3f} Kbps")
    lines.append(f"  mean |achieved - cap| {s['mean_abs_error_kbps']:10.3f} Kbps")
    lines.append(f"  after {s['warmup_steps']:>3}-step warmup {s['mean_abs_error_after_warmup_kbps']:8.3f} Kbps")
    counts = ", ".join(f"{k}={v}" for k, v in s["provenance_counts"].items())
    lines.append(f"  provenance            {counts}")
    return "\n".join(lines)


def _svg_figure():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    # Fixed salt and no date keep the SVG byte-stable across runs.
    matplotlib.rcParams["svg.hashsalt"] = "dtztn"
    return plt


def _line_chart(report, path):
    plt = _svg_figure()
    steps = [r.step for r in report.records]
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.step(steps, [r.capacity for r in report.records], where="post", label="capacity")
    ax.step(steps, [r.achieved for r in report.records], where="post", label="achieved")
    ax.plot(steps, [r.predicted for r in report.records], ":", label="predicted")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("bandwidth (Kbps)")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _bar_chart(report, path):
    plt = _svg_figure()
    labels = [label.replace(" + ", "\n+ ") for _, label in TECHNIQUES]
    values = [report.techniques[k] for k, _ in TECHNIQUES]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(range(len(values)), values)
    ax.set_xticks(range(len(values)), labels, fontsize=7)
    ax.set_ylabel("mean throughput (Kbps)")
    lo = min(values)
    ax.set_ylim(max(0.0, lo - 0.1 * (max(values) - lo) - 5), max(values) + 2)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _write_compare_csvs(report, out_dir):
    paths = [os.path.join(out_dir, "compare.csv"), os.path.join(out_dir, "compare_steps.csv")]
    with open(paths[0], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["technique", "label", "mean_kbps"])
        for key, label in TECHNIQUES:
            w.writerow([key, label, repr(report.techniques[key])])
    with open(paths[1], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "capacity"] + [k for k, _ in TECHNIQUES])
        for i, cap in enumerate(report.capacities):
            w.writerow([i, repr(cap)] + [repr(report.technique_steps[k][i]) for k, _ in TECHNIQUES])
    return paths


def emit_report(report, out_dir, formats=("csv",), stream=None):
    """Write ``report`` under ``out_dir``; returns the list of files written.

    CSV output is always produced. ``text_table`` is printed to ``stream``
    (stdout by default).
    """
    if not report.records:
        raise InsufficientData("report has no records; nothing written")
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown report formats {sorted(unknown)}")
    written = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        records_path = os.path.join(out_dir, "records.csv")
        write_records_csv(records_path, report.records)
        written.append(records_path)
        summary_path = os.path.join(out_dir, "summary.json")
        with open(summary_path, "w") as fh:
            json.dump({"scenario": report.name, **report.summary}, fh, indent=2, sort_keys=True)
        written.append(summary_path)
        if report.techniques:
            written.extend(_write_compare_csvs(report, out_dir))
        if "svg_chart" in formats:
            chart = os.path.join(out_dir, f"{report.name}.svg")
            (_bar_chart if report.techniques else _line_chart)(report, chart)
            written.append(chart)
    except OSError as exc:
        for path in written:
            if os.path.exists(path):
                os.remove(path)
        raise IoError(f"cannot write report under {out_dir}: {exc}") from exc
    if "text_table" in formats:
        print(text_table(report), file=stream)
    return written


def summary_from_csv(records_path, warmup):
    return summarize(read_records_csv(records_path), warmup)


def techniques_from_csv(path):
    with open(path, newline="") as fh:
        return {row["technique"]: float(row["mean_kbps"]) for row in csv.DictReader(fh)}


def step_means_from_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: float(np.mean([float(r[k]) for r in rows])) for k, _ in TECHNIQUES}
