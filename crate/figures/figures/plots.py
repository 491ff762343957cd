"""Readers with column checks and the three figure kinds."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

LEDGER_COLUMNS = ("step", "time", "dt", "mass", "d_mass", "bflux_mass", "cfflux_mass", "sync_mass", "defect_mass")
PROFILE_COLUMNS = ("s", "rho", "u", "v", "p", "exact_rho", "exact_u", "exact_p")
SCHLIEREN_COLUMNS = ("level", "i", "j", "x", "y", "grad_rho")

# round-off floor for log axes
FLOOR = 1e-20


class MissingColumn(ValueError):
    def __init__(self, path: Path, column: str):
        super().__init__(f"{path}: missing column '{column}'")
        self.path = path
        self.column = column


def read(path: str | Path, columns: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{path}: no such file")
    df = pd.read_csv(path)
    for c in columns:
        if c not in df.columns:
            raise MissingColumn(path, c)
    if df.empty:
        raise ValueError(f"{path}: no rows")
    return df


def _label(path: Path, labels: Sequence[str] | None, k: int) -> str:
    if labels and k < len(labels):
        return labels[k]
    return path.parent.name or path.stem


def _save(fig, out: str | Path) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return out


def plot_mass_ledger(paths: Sequence[str | Path], out: str | Path, labels: Sequence[str] | None = None) -> Path:
    """|mass defect| per coarse step against time, one curve per ledger."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for k, p in enumerate(paths):
        df = read(p, LEDGER_COLUMNS)
        ax.semilogy(df["time"], np.maximum(df["defect_mass"].abs(), FLOOR), label=_label(Path(p), labels, k))
    ax.set_xlabel("t")
    ax.set_ylabel("|change in mass per step − boundary flux|")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out)


def plot_sod_profiles(paths: Sequence[str | Path], out: str | Path, labels: Sequence[str] | None = None) -> Path:
    """ρ, p, u and T = p/ρ along the centerline with the exact solution."""
    fig, axes = plt.subplots(2, 2, figsize=(8.0, 6.0), sharex=True)
    frames = [read(p, PROFILE_COLUMNS) for p in paths]
    panels = [
        ("ρ", lambda d: d["rho"], lambda d: d["exact_rho"]),
        ("p", lambda d: d["p"], lambda d: d["exact_p"]),
        ("u", lambda d: d["u"], lambda d: d["exact_u"]),
        ("T", lambda d: d["p"] / d["rho"], lambda d: d["exact_p"] / d["exact_rho"]),
    ]
    finest = max(frames, key=len)
    for ax, (name, num, exact) in zip(axes.flat, panels):
        ax.plot(finest["s"], exact(finest), "k-", lw=1.0, label="exact")
        for k, (p, d) in enumerate(zip(paths, frames)):
            ax.plot(d["s"], num(d), ".", ms=2.5, label=_label(Path(p), labels, k))
        ax.set_ylabel(name)
    for ax in axes[1]:
        ax.set_xlabel("s")
    axes[0, 0].legend(fontsize="small")
    fig.tight_layout()
    return _save(fig, out)


def schlieren_image(df: pd.DataFrame) -> np.ndarray:
    """|∇ρ| on the finest index space, coarse data painted first. Body cells
    are NaN."""
    top = int(df["level"].max())
    base = df[df["level"] == 0]
    nx = int(base["i"].max() - base["i"].min() + 1)
    ny = int(base["j"].max() - base["j"].min() + 1)
    i0, j0 = int(base["i"].min()), int(base["j"].min())
    img = np.full((ny << top, nx << top), np.nan)
    for lev in range(top + 1):
        d = df[df["level"] == lev]
        r = 1 << (top - lev)
        i = (d["i"].to_numpy() - (i0 << lev)) * r
        j = (d["j"].to_numpy() - (j0 << lev)) * r
        g = d["grad_rho"].to_numpy()
        for a in range(r):
            for b in range(r):
                img[j + b, i + a] = g
    return img


def plot_schlieren(path: str | Path, out: str | Path, k: float = 20.0) -> Path:
    """Grayscale exp(−k|∇ρ|/max|∇ρ|) with the body masked."""
    df = read(path, SCHLIEREN_COLUMNS)
    img = schlieren_image(df)
    scale = np.nanmax(img)
    shade = np.exp(-k * img / scale) if scale > 0 else np.ones_like(img)
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    cmap = plt.get_cmap("gray").copy()
    cmap.set_bad("tab:blue")
    extent = (df["x"].min(), df["x"].max(), df["y"].min(), df["y"].max())
    ax.imshow(np.ma.masked_invalid(shade), origin="lower", cmap=cmap, vmin=0.0, vmax=1.0, extent=extent)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.tight_layout()
    return _save(fig, out)
