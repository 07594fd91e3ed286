"""Self-contained SVG line plot for trajectory reports (no plotting deps)."""

from .data_io import TrajectoryReport

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 64, 20, 34, 48


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def plot_trajectory(report: TrajectoryReport, title: str = "") -> str:
    ratios = report.ratios
    accs = report.accuracy
    x_lo, x_hi = 0.0, max(max(ratios), 0.05)
    vals = list(accs) + [report.baseline_accuracy]
    pad = max(0.02, (max(vals) - min(vals)) * 0.15)
    y_lo = max(0.0, min(vals) - pad)
    y_hi = min(1.0, max(vals) + pad)

    def px(r):
        return _ML + (r - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def py(a):
        return _H - _MB - (a - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    if not title:
        method = report.meta.get("method", "")
        mode = report.meta.get("mode", "")
        title = f"{method} / {mode}".strip(" /")
    if title:
        parts.append(
            f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-family="sans-serif" '
            f'font-size="14">{title}</text>'
        )

    n_ticks = 5
    for i in range(n_ticks + 1):
        r = x_lo + (x_hi - x_lo) * i / n_ticks
        x = px(r)
        parts.append(
            f'<line x1="{x:.1f}" y1="{_MT}" x2="{x:.1f}" y2="{_H - _MB}" stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{_H - _MB + 18}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="11">{_fmt(r)}</text>'
        )
        a = y_lo + (y_hi - y_lo) * i / n_ticks
        y = py(a)
        parts.append(
            f'<line x1="{_ML}" y1="{y:.1f}" x2="{_W - _MR}" y2="{y:.1f}" stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{_ML - 8}" y="{y + 4:.1f}" text-anchor="end" font-family="sans-serif" '
            f'font-size="11">{_fmt(a)}</text>'
        )

    parts.append(
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>'
    )
    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>')
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 10}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">pruning ratio</text>'
    )
    parts.append(
        f'<text x="16" y="{(_MT + _H - _MB) / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.1f})">accuracy</text>'
    )

    yb = py(report.baseline_accuracy)
    parts.append(
        f'<line x1="{_ML}" y1="{yb:.1f}" x2="{_W - _MR}" y2="{yb:.1f}" stroke="black" '
        f'stroke-dasharray="6 4"/>'
    )
    parts.append(
        f'<text x="{_W - _MR - 4}" y="{yb - 6:.1f}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">no prune</text>'
    )

    pts = " ".join(f"{px(r):.1f},{py(a):.1f}" for r, a in zip(ratios, accs))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f6fb2" stroke-width="2"/>')
    for r, a in zip(ratios, accs):
        parts.append(f'<circle cx="{px(r):.1f}" cy="{py(a):.1f}" r="3.5" fill="#1f6fb2"/>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
