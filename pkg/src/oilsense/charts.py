"""Standalone SVG charts: ROC curves and a grouped metric bar chart.

Written by hand (no plotting backend) so output is byte-stable.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
DASHES = ("", "6,3", "2,2", "8,3,2,3")
MAX_POINTS = 400


def _thin(fpr, tpr):
    """Keep at most MAX_POINTS vertices, endpoints included."""
    if len(fpr) <= MAX_POINTS:
        return fpr, tpr
    keep = np.unique(np.r_[np.linspace(0, len(fpr) - 1, MAX_POINTS).round().astype(int)])
    return fpr[keep], tpr[keep]


def _axes(out, x0, y0, w, h, xlabel, ylabel, ticks=(0, 0.25, 0.5, 0.75, 1.0)):
    out.append(f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#333"/>')
    for t in ticks:
        x = x0 + t * w
        y = y0 + h - t * h
        out.append(f'<line x1="{x:.1f}" y1="{y0 + h}" x2="{x:.1f}" y2="{y0 + h + 5}" stroke="#333"/>')
        out.append(f'<text x="{x:.1f}" y="{y0 + h + 18}" text-anchor="middle">{t:g}</text>')
        out.append(f'<line x1="{x0 - 5}" y1="{y:.1f}" x2="{x0}" y2="{y:.1f}" stroke="#333"/>')
        out.append(f'<text x="{x0 - 8}" y="{y + 4:.1f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{x0 + w / 2}" y="{y0 + h + 36}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="{x0 - 40}" y="{y0 + h / 2}" text-anchor="middle" '
               f'transform="rotate(-90 {x0 - 40} {y0 + h / 2})">{escape(ylabel)}</text>')


def roc_svg(curves: dict[str, list], aucs: dict[str, list], class_names) -> str:
    """``curves[model][c]`` is (fpr, tpr, thr); ``aucs[model][c]`` the AUC."""
    x0, y0, w, h = 70, 40, 460, 460
    legend_rows = sum(len(v) for v in curves.values())
    height = max(y0 + h + 60, 60 + 16 * legend_rows)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="900" height="{height}" '
        f'font-family="sans-serif" font-size="12">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{x0 + w / 2}" y="24" text-anchor="middle" font-size="15">'
        'ROC curves (one-vs-rest)</text>',
    ]
    _axes(out, x0, y0, w, h, "False positive rate", "True positive rate")
    out.append(f'<line x1="{x0}" y1="{y0 + h}" x2="{x0 + w}" y2="{y0}" stroke="#999" stroke-dasharray="4,4"/>')
    row = 0
    for mi, (model, per_class) in enumerate(curves.items()):
        color = PALETTE[mi % len(PALETTE)]
        for c, (fpr, tpr, _) in enumerate(per_class):
            fx, ty = _thin(np.asarray(fpr), np.asarray(tpr))
            pts = " ".join(f"{x0 + a * w:.2f},{y0 + h - b * h:.2f}" for a, b in zip(fx, ty))
            dash = DASHES[c % len(DASHES)]
            dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash_attr}/>')
            ly = y0 + 10 + 16 * row
            out.append(f'<line x1="{x0 + w + 20}" y1="{ly}" x2="{x0 + w + 50}" y2="{ly}" '
                       f'stroke="{color}" stroke-width="2"{dash_attr}/>')
            auc = aucs[model][c]
            auc_txt = "n/a" if auc is None or not np.isfinite(auc) else f"{auc:.2f}"
            label = f"{model} / {class_names[c]} (AUC = {auc_txt})"
            out.append(f'<text x="{x0 + w + 56}" y="{ly + 4}">{escape(label)}</text>')
            row += 1
    out.append("</svg>")
    return "\n".join(out) + "\n"


def metrics_svg(rows: list[dict], metrics=("accuracy", "macro_precision", "macro_recall", "macro_f1")) -> str:
    """Grouped bars: one group per metric, one bar per model."""
    x0, y0, w, h = 70, 40, 640, 360
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="900" height="{y0 + h + 70}" '
        'font-family="sans-serif" font-size="12">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{x0 + w / 2}" y="24" text-anchor="middle" font-size="15">'
        'Classifier comparison</text>',
    ]
    _axes(out, x0, y0, w, h, "", "Score", ticks=())
    for t in (0, 0.25, 0.5, 0.75, 1.0):
        y = y0 + h - t * h
        out.append(f'<line x1="{x0}" y1="{y:.1f}" x2="{x0 + w}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{x0 - 8}" y="{y + 4:.1f}" text-anchor="end">{t:g}</text>')
    group_w = w / len(metrics)
    bar_w = group_w * 0.8 / max(len(rows), 1)
    for gi, metric in enumerate(metrics):
        gx = x0 + gi * group_w + group_w * 0.1
        for mi, r in enumerate(rows):
            v = float(r[metric])
            bx = gx + mi * bar_w
            out.append(f'<rect x="{bx:.2f}" y="{y0 + h - v * h:.2f}" width="{bar_w * 0.9:.2f}" '
                       f'height="{v * h:.2f}" fill="{PALETTE[mi % len(PALETTE)]}"/>')
            out.append(f'<text x="{bx + bar_w * 0.45:.2f}" y="{y0 + h - v * h - 4:.2f}" '
                       f'text-anchor="middle" font-size="9">{v:.3f}</text>')
        out.append(f'<text x="{x0 + (gi + 0.5) * group_w:.1f}" y="{y0 + h + 18}" '
                   f'text-anchor="middle">{escape(metric)}</text>')
    for mi, r in enumerate(rows):
        ly = y0 + 10 + 18 * mi
        out.append(f'<rect x="{x0 + w + 20}" y="{ly - 8}" width="12" height="12" '
                   f'fill="{PALETTE[mi % len(PALETTE)]}"/>')
        out.append(f'<text x="{x0 + w + 38}" y="{ly + 2}">{escape(r["model"])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
