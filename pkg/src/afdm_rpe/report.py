"""Serialization of sweep results: CSV, per-curve data files, RMSE figures."""

from __future__ import annotations

from pathlib import Path

from .experiment import PERFECT_TOKEN, RmseRecord

CSV_HEADER = "snr_db,frames,range_rmse_m,velocity_rmse_mps,detection_rate,trials"

_METRICS = (
    ("range_rmse_m", "range_rmse", "Range RMSE [m]"),
    ("velocity_rmse_mps", "velocity_rmse", "Velocity RMSE [m/s]"),
)


def format_frames(frames) -> str:
    return frames if isinstance(frames, str) else str(int(frames))


def _fmt(value: float) -> str:
    return f"{value:.10g}"


def write_csv(records, path) -> Path:
    """One line per sweep cell, deterministic formatting."""
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    lines = [CSV_HEADER]
    for rec in records:
        lines.append(",".join([
            _fmt(rec.snr_db),
            format_frames(rec.frames),
            _fmt(rec.range_rmse_m),
            _fmt(rec.velocity_rmse_mps),
            _fmt(rec.detection_rate),
            str(rec.trials),
        ]))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> list[RmseRecord]:
    """Parse a result file written by :func:`write_csv`."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: not a sweep result file (bad header)")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 6:
            raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
        frames = parts[1] if parts[1] == PERFECT_TOKEN else int(parts[1])
        records.append(RmseRecord(float(parts[0]), frames, float(parts[2]),
                                  float(parts[3]), float(parts[4]), int(parts[5])))
    return records


def _curves(records):
    """Group records by frame count, preserving first-seen order."""
    order = []
    by_frames = {}
    for rec in records:
        if rec.frames not in by_frames:
            by_frames[rec.frames] = []
            order.append(rec.frames)
        by_frames[rec.frames].append(rec)
    return [(frames, by_frames[frames]) for frames in order]


def curve_label(frames) -> str:
    return "perfect covariance" if frames == PERFECT_TOKEN else f"T = {frames}"


def _curve_token(frames) -> str:
    return PERFECT_TOKEN if frames == PERFECT_TOKEN else f"T{frames}"


def write_curve_files(records, out_dir) -> list[Path]:
    """One whitespace-delimited file per (metric, frame count) curve."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for attr, stem, _label in _METRICS:
        for frames, rows in _curves(records):
            path = out_dir / f"{stem}_{_curve_token(frames)}.dat"
            lines = [f"# snr_db {attr}"]
            for rec in rows:
                lines.append(f"{_fmt(rec.snr_db)} {_fmt(getattr(rec, attr))}")
            path.write_text("\n".join(lines) + "\n")
            paths.append(path)
    return paths


def render_figures(records, out_dir) -> list[Path]:
    """RMSE-versus-SNR figures, one per metric, log-scaled error axis."""
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    markers = ["o", "s", "^", "d", "v", "*"]
    paths = []
    for attr, stem, ylabel in _METRICS:
        fig, ax = plt.subplots(figsize=(6.0, 4.2))
        for idx, (frames, rows) in enumerate(_curves(records)):
            snrs = [rec.snr_db for rec in rows]
            values = [getattr(rec, attr) for rec in rows]
            ax.semilogy(snrs, values, marker=markers[idx % len(markers)],
                        label=curve_label(frames))
        ax.set_xlabel("SNR [dB]")
        ax.set_ylabel(ylabel)
        ax.grid(True, which="both", alpha=0.4)
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"{stem}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths


def write_report(records, out_dir) -> list[Path]:
    """Curve data files plus rendered figures in one directory."""
    return write_curve_files(records, out_dir) + render_figures(records, out_dir)
