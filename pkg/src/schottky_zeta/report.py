"""Deterministic emission of tables, manifests, and figures.

Every run directory gets a manifest echoing the resolved parameters and the
artifact version next to its CSV tables; repeated runs with the same
configuration produce byte-identical files (floats are written with repr,
no timestamps anywhere).  Figures are rendered to PNG alongside the
delimited output.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import __version__
from .geodesics import PrimitiveClass
from .homcount import HomologyCountTable
from .resonances import Rect, Resonance, SpectralHistogram

FIG_DPI = 150
_PNG_METADATA = {"Software": f"schottky-zeta {__version__}"}


def write_manifest(out_dir: Path, command: str, params: dict,
                   outputs: Sequence[str]) -> Path:
    """Sidecar manifest: resolved parameters, artifact version, output files."""
    path = Path(out_dir) / "manifest.json"
    doc = {
        "artifact": "schottky-zeta",
        "version": __version__,
        "command": command,
        "deterministic": True,
        "parameters": params,
        "outputs": sorted(outputs),
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return path


def write_resonances_csv(path: Path, resonances: Sequence[Resonance],
                         rank: int, order: int) -> Path:
    header = [f"theta_{i + 1}" for i in range(rank)] + [
        "s_re", "s_im", "multiplicity", "winding",
        "newton_residual", "det_error", "N_order"]
    rows = []
    for z in sorted(resonances,
                    key=lambda z: (z.theta.coordinates, z.s.imag, z.s.real)):
        rows.append(list(z.theta.coordinates)
                    + [z.s.real, z.s.imag, z.multiplicity, z.winding,
                       z.newton_residual, z.det_error, order])
    return write_rows(path, header, rows)


def write_primitives_csv(path: Path, classes: Sequence[PrimitiveClass],
                         rank: int) -> Path:
    header = ["word", "word_length", "geodesic_length"] + \
        [f"hom_{i + 1}" for i in range(rank)]
    rows = [["-".join(str(x) for x in c.representative.letters),
             c.word_length, c.length, *c.hom] for c in classes]
    return write_rows(path, header, rows)


def write_zeta_grid_csv(path: Path, rows: Sequence[tuple], rank: int) -> Path:
    """(theta, s, Z, error) samples: columns theta_1..r, s_re, s_im, z_re, z_im, error."""
    header = [f"theta_{i + 1}" for i in range(rank)] + \
        ["s_re", "s_im", "z_re", "z_im", "error_estimate"]
    out = []
    for theta, s, z, err in rows:
        coords = list(theta.coordinates if hasattr(theta, "coordinates") else theta)
        out.append(coords + [s.real, s.imag, z.real, z.imag, err])
    return write_rows(path, header, out)


def write_histogram_csv(path: Path, hist: SpectralHistogram) -> Path:
    header = ["bin_lo", "bin_hi", "mass"]
    rows = [[float(hist.edges[i]), float(hist.edges[i + 1]), float(hist.masses[i])]
            for i in range(len(hist.masses))]
    return write_rows(path, header, rows)


def write_homcount_csv(path: Path, table: HomologyCountTable) -> Path:
    header = ["T"] + [f"alpha_{i + 1}" for i in range(table.rank)] + \
        ["count", "normalized_count"]
    norm = table.normalized()
    rows = [[t, *table.alpha, n, float(norm[i])]
            for i, (t, n) in enumerate(table.grid)]
    return write_rows(path, header, rows)


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=FIG_DPI, metadata=_PNG_METADATA)
    plt.close(fig)
    return path


def plot_pressure_curve(path: Path, sigmas: Sequence[float],
                        pressures: Sequence[float], delta: float) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(sigmas, pressures, "b.-", lw=1)
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.axvline(delta, color="r", lw=0.8, ls="--", label=f"root {delta:.8f}")
    ax.set_xlabel(r"$\sigma$")
    ax.set_ylabel(r"$P(\sigma)$")
    ax.set_title("topological pressure")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_zero_scan(path: Path, rect: Rect, resonances: Sequence[Resonance],
                   landscape=None) -> Path:
    """Zeros inside the scanned rectangle, optionally over a log|Z| heatmap."""
    fig, ax = plt.subplots(figsize=(6, 5))
    if landscape is not None:
        re_grid, im_grid, logmag = landscape
        pc = ax.pcolormesh(re_grid, im_grid, logmag, shading="auto",
                           cmap="viridis")
        fig.colorbar(pc, ax=ax, label=r"$\log_{10}|Z(s)|$")
    xs = [z.s.real for z in resonances]
    ys = [z.s.imag for z in resonances]
    ax.plot(xs, ys, "rx", ms=8, mew=1.5, label=f"{len(resonances)} zeros")
    ax.plot([rect.re_min, rect.re_max, rect.re_max, rect.re_min, rect.re_min],
            [rect.im_min, rect.im_min, rect.im_max, rect.im_max, rect.im_min],
            "k-", lw=0.8)
    ax.set_xlabel(r"$\mathrm{Re}\,s$")
    ax.set_ylabel(r"$\mathrm{Im}\,s$")
    ax.set_title("determinant zeros")
    ax.legend(loc="upper left")
    fig.tight_layout()
    return _save(fig, path)


def plot_spectral_histogram(path: Path, hist: SpectralHistogram,
                            delta: float) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    widths = np.diff(hist.edges)
    ax.bar(hist.edges[:-1], hist.masses, width=widths, align="edge",
           color="steelblue", edgecolor="k", lw=0.5)
    ax.axvline(delta, color="r", lw=0.8, ls="--", label=r"$\delta$")
    ax.set_xlabel(r"$\mathrm{Re}\,s$")
    ax.set_ylabel("mass / |G|")
    ax.set_title(f"spectral measure ({hist.points_in_window} zeros, "
                 f"|G| = {hist.group_order})")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_normalized_counts(path: Path, tables: Sequence[HomologyCountTable]) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for table in tables:
        label = "alpha=(" + ",".join(str(a) for a in table.alpha) + ")"
        ax.plot(table.lengths, table.normalized(), "o-", ms=4, label=label)
    ax.set_xlabel("T")
    ax.set_ylabel(r"$N(\alpha,T)\,T^{r/2+1}e^{-\delta T}$")
    ax.set_title("normalized homology counts")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)
