"""Plain-text tables, CSV emission, and a minimal SVG bar chart."""

from __future__ import annotations

import csv
from pathlib import Path

from .evaluation import AblationRow, EvalResult
from .training import EpochStats

HISTORY_HEADER = ["epoch", "loss", "r1", "r3"]


def history_to_csv(history: list[EpochStats], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_HEADER)
        for row in history:
            writer.writerow([row.epoch, f"{row.loss:.9f}", f"{row.r1:.6f}", f"{row.r3:.6f}"])


def ranks_to_csv(result: EvalResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["question_id", "step_idx", "rank_of_gt", "n_candidates"])
        for s in result.per_step:
            writer.writerow([s.question_id, s.step_idx, s.rank_of_gt, s.n_candidates])


def ablation_to_csv(rows: list[AblationRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["use_hoi", "use_global", "temperature", "r1", "r3"])
        for row in rows:
            writer.writerow(
                [row.use_hoi, row.use_global, row.temperature, f"{row.result.r1:.6f}", f"{row.result.r3:.6f}"]
            )


def text_table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h)) for i, h in enumerate(header)]
    def fmt(cells):
        return "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(header), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines)


def ablation_table(rows: list[AblationRow]) -> str:
    return text_table(
        ["use_hoi", "use_global", "temperature", "R@1", "R@3"],
        [
            [row.use_hoi, row.use_global, row.temperature, f"{row.result.r1:.3f}", f"{row.result.r3:.3f}"]
            for row in rows
        ],
    )


def svg_line_chart(
    x: list[float], series: dict[str, list[float]], path: str | Path, title: str = ""
) -> None:
    """Line chart with per-series y autoscaling to [0, max]; deterministic bytes."""
    width, height, margin = 640, 360, 48
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    colors = ["#4477aa", "#ee6677", "#228833", "#ccbb44"]
    x0, x1 = (min(x), max(x)) if x else (0.0, 1.0)
    span_x = (x1 - x0) or 1.0
    y_max = max((max(v) for v in series.values() if v), default=1.0) or 1.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width/2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{height-margin}" x2="{width-margin}" y2="{height-margin}" stroke="#888"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height-margin}" stroke="#888"/>',
    ]
    for s_idx, (name, values) in enumerate(series.items()):
        color = colors[s_idx % len(colors)]
        pts = " ".join(
            f"{margin + (xi - x0) / span_x * plot_w:.1f},{margin + plot_h - (v / y_max) * plot_h:.1f}"
            for xi, v in zip(x, values)
        )
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = margin + 16 * s_idx
        parts.append(f'<rect x="{width-margin-120}" y="{ly}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{width-margin-106}" y="{ly+9}" font-size="11">{name}</text>')
    parts.append(f'<text x="{margin-6}" y="{margin+4}" text-anchor="end" font-size="10">{y_max:.3g}</text>')
    parts.append(f'<text x="{margin-6}" y="{height-margin+4}" text-anchor="end" font-size="10">0</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def svg_bar_chart(
    labels: list[str], series: dict[str, list[float]], path: str | Path, title: str = ""
) -> None:
    """Grouped bar chart of values in [0, 1]; deterministic output bytes."""
    width, height, margin = 640, 360, 48
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    colors = ["#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377"]
    n_groups, n_series = len(labels), len(series)
    group_w = plot_w / max(n_groups, 1)
    bar_w = group_w * 0.8 / max(n_series, 1)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width/2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = margin + plot_h * (1 - frac)
        parts.append(f'<line x1="{margin}" y1="{y:.1f}" x2="{width-margin}" y2="{y:.1f}" stroke="#ddd"/>')
        parts.append(f'<text x="{margin-6}" y="{y+4:.1f}" text-anchor="end" font-size="10">{frac:.2f}</text>')
    for s_idx, (name, values) in enumerate(series.items()):
        color = colors[s_idx % len(colors)]
        for g_idx, value in enumerate(values):
            x = margin + g_idx * group_w + group_w * 0.1 + s_idx * bar_w
            h = plot_h * max(0.0, min(1.0, value))
            y = margin + plot_h - h
            parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{h:.1f}" fill="{color}"/>')
        lx = margin + plot_w - 120
        ly = margin + 16 * s_idx
        parts.append(f'<rect x="{lx}" y="{ly}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{lx+14}" y="{ly+9}" font-size="11">{name}</text>')
    for g_idx, label in enumerate(labels):
        x = margin + g_idx * group_w + group_w / 2
        parts.append(
            f'<text x="{x:.1f}" y="{height-margin+16}" text-anchor="middle" font-size="10">{label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
