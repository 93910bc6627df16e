"""Error statistics between simulated and measured temperatures."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .simulate import TimeSeries, Trajectory

__all__ = ["ComparisonStats", "error_stats", "compare"]

HISTOGRAM_BIN = 0.1  # °C


@dataclass(frozen=True)
class ComparisonStats:
    """Summary of ``simulated - measured``.

    ``std`` is the population standard deviation.  Histogram bins are
    aligned on multiples of the bin width (:data:`HISTOGRAM_BIN` by default).
    """

    n: int
    mean: float
    std: float
    min: float
    q25: float
    median: float
    q75: float
    max: float
    bin_edges: tuple
    counts: tuple

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bin_edges"] = list(self.bin_edges)
        d["counts"] = list(self.counts)
        return d

    def summary(self) -> str:
        return (
            f"n={self.n} mean={self.mean:.4f} std={self.std:.4f} min={self.min:.4f} "
            f"q25={self.q25:.4f} median={self.median:.4f} q75={self.q75:.4f} max={self.max:.4f}"
        )


def error_stats(errors, bin_width: float = HISTOGRAM_BIN) -> ComparisonStats:
    e = np.asarray(errors, dtype=float).ravel()
    if e.size == 0:
        raise ValueError("no samples to compare")
    if not bin_width > 0:
        raise ValueError(f"bin width must be > 0, got {bin_width}")
    lo = np.floor(e.min() / bin_width)
    hi = np.floor(e.max() / bin_width) + 1
    edges = np.arange(lo, hi) * bin_width
    edges = np.append(edges, max(hi * bin_width, e.max()))
    counts, _ = np.histogram(e, bins=edges)
    q25, q50, q75 = np.quantile(e, [0.25, 0.5, 0.75])
    return ComparisonStats(
        n=int(e.size),
        mean=float(e.mean()),
        std=float(e.std()),
        min=float(e.min()),
        q25=float(q25),
        median=float(q50),
        q75=float(q75),
        max=float(e.max()),
        bin_edges=tuple(float(x) for x in edges),
        counts=tuple(int(c) for c in counts),
    )


def compare(trajectory: Trajectory, measured: TimeSeries, channel_map=None, bin_width: float = HISTOGRAM_BIN) -> dict:
    """Statistics per output over the overlapping time window.

    Parameters
    ----------
    trajectory : Trajectory
    measured : TimeSeries
    channel_map : mapping, optional
        Output label to measured channel.  Defaults to the outputs whose
        labels are also measured channel names.
    bin_width : float
        Histogram bin width in °C.

    Returns
    -------
    dict
        Output label to :class:`ComparisonStats`.
    """
    if channel_map is None:
        channel_map = {o: o for o in trajectory.output_labels if o in measured.channels}
    if not channel_map:
        raise ValueError("no output matches a measured channel")
    t_sim = np.asarray(trajectory.times)
    t_meas = measured.times
    lo, hi = max(t_sim[0], t_meas[0]), min(t_sim[-1], t_meas[-1])
    if hi < lo:
        raise ValueError(
            f"simulated [{t_sim[0]:g}, {t_sim[-1]:g}] s and measured "
            f"[{t_meas[0]:g}, {t_meas[-1]:g}] s do not overlap"
        )
    tol = 1e-6 * max(measured.dt, 1.0)
    mask = (t_meas >= lo - tol) & (t_meas <= hi + tol)
    t = t_meas[mask]
    out = {}
    for label, channel in channel_map.items():
        sim = np.interp(t, t_sim, trajectory.column(label))
        out[label] = error_stats(sim - measured[channel][mask], bin_width)
    return out
