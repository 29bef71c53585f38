"""Crash-probability series: CSV plus a deterministic SVG line chart."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from ..errors import ShapeMismatch

WIDTH, HEIGHT = 960, 320
LEFT, RIGHT, TOP, BOTTOM = 56, 16, 32, 40


@dataclass(frozen=True)
class ProbabilitySeries:
    dates: np.ndarray
    probability: np.ndarray
    labels: np.ndarray
    threshold: float = 0.5
    title: str = ""

    def __post_init__(self):
        d = np.asarray(self.dates, dtype="datetime64[D]")
        p = np.asarray(self.probability, dtype=float)
        y = np.asarray(self.labels, dtype=np.int8)
        if not (d.shape == p.shape == y.shape) or p.ndim != 1:
            raise ShapeMismatch(f"dates {d.shape}, probability {p.shape}, labels {y.shape} differ")
        object.__setattr__(self, "dates", d)
        object.__setattr__(self, "probability", p)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return len(self.dates)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("date", "probability", "label"))
        for d, p, y in zip(self.dates, self.probability, self.labels):
            w.writerow((str(d), repr(float(p)), int(y)))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, threshold: float = 0.5, title: str = "") -> "ProbabilitySeries":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(
            np.array([r["date"] for r in rows], dtype="datetime64[D]"),
            np.array([float(r["probability"]) for r in rows]),
            np.array([int(r["label"]) for r in rows], dtype=np.int8),
            threshold, title,
        )

    def to_svg(self) -> str:
        return render_svg(self)


def emit_probability_series(model, windows, dates=None, threshold: float = 0.5, title: str = "") -> ProbabilitySeries:
    """Score ``windows`` with ``model`` (a bundle, anything with ``predict_proba``, or a callable)."""
    predict = model.predict_proba if hasattr(model, "predict_proba") else model
    p = np.asarray(predict(windows), dtype=float)
    if dates is None:
        dates = windows.sample_dates
    if len(dates) != len(p) or len(p) != len(windows.labels):
        raise ShapeMismatch(f"{len(p)} probabilities for {len(dates)} dates")
    return ProbabilitySeries(dates, p, windows.labels, threshold, title)


def _f(x: float) -> str:
    return f"{x:.2f}"


def render_svg(s: ProbabilitySeries) -> str:
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    n = len(s)

    def xpos(i):
        return LEFT + (pw * i / (n - 1) if n > 1 else pw / 2)

    def ypos(p):
        return TOP + ph * (1.0 - min(max(p, 0.0), 1.0))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{LEFT}" y="18" font-size="13">{escape(s.title or "crash probability")}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#999"/>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = _f(ypos(tick))
        out.append(f'<text x="{LEFT - 6}" y="{y}" text-anchor="end" dominant-baseline="middle">{tick:.2f}</text>')
    ty = _f(ypos(s.threshold))
    out.append(f'<line x1="{LEFT}" y1="{ty}" x2="{LEFT + pw}" y2="{ty}" stroke="#555" stroke-dasharray="4 3"/>')
    for i in np.flatnonzero(s.labels == 1):
        x = _f(xpos(int(i)))
        out.append(f'<line x1="{x}" y1="{TOP}" x2="{x}" y2="{TOP + ph}" stroke="#d62728" stroke-opacity="0.35"/>')
    if n:
        pts = " ".join(f"{_f(xpos(i))},{_f(ypos(float(p)))}" for i, p in enumerate(s.probability))
        out.append(f'<polyline fill="none" stroke="#1f77b4" stroke-width="1" points="{pts}"/>')
        base = HEIGHT - BOTTOM + 16
        out.append(f'<text x="{LEFT}" y="{base}">{s.dates[0]}</text>')
        out.append(f'<text x="{LEFT + pw}" y="{base}" text-anchor="end">{s.dates[-1]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_series(series: ProbabilitySeries, stem) -> tuple[str, str]:
    csv_path, svg_path = f"{stem}.csv", f"{stem}.svg"
    with open(csv_path, "w", newline="") as fh:
        fh.write(series.to_csv())
    with open(svg_path, "w", newline="") as fh:
        fh.write(series.to_svg())
    return csv_path, svg_path
