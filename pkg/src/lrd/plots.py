"""Figure rendering for the CLI report paths. Uses the Agg backend only."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import EvalReport
from .radon import ProjectionSet

__all__ = ["save_sinogram_figure", "save_report_figure", "save_sweep_figure"]


def save_sinogram_figure(proj: ProjectionSet, image: np.ndarray, path) -> None:
    """Render the source image next to its sinogram."""
    half = (proj.detector_len - 1) / 2.0
    fig, (ax_img, ax_sino) = plt.subplots(1, 2, figsize=(10, 4.5))
    ax_img.imshow(image, cmap="gray", origin="upper")
    ax_img.set_title("input")
    ax_img.set_xlabel("x (px)")
    ax_img.set_ylabel("y (px)")
    im = ax_sino.imshow(
        proj.values,
        aspect="auto",
        cmap="magma",
        origin="lower",
        extent=[0.0, 180.0, -half, half],
    )
    ax_sino.set_title(f"sinogram ({proj.angles.n} projections)")
    ax_sino.set_xlabel("angle (deg)")
    ax_sino.set_ylabel("detector offset (px)")
    fig.colorbar(im, ax=ax_sino, label="line mass")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_report_figure(report: EvalReport, path) -> None:
    """Render the per-query outcome distribution of an evaluation run."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if report.protocol == "irma":
        errors = [r.error for r in report.rows]
        ax.hist(errors, bins=20, range=(0.0, 1.0), color="#33688d", edgecolor="white")
        ax.set_xlabel("per-query error")
        ax.set_ylabel("queries")
        ax.set_title(
            f"total error {report.total_error:.2f}  "
            f"accuracy {100.0 * report.accuracy:.2f}%  ({report.query_count} queries)"
        )
    else:
        hits = sum(1 for r in report.rows if r.hit)
        misses = report.query_count - hits
        ax.bar(["hit", "miss"], [hits, misses], color=["#2a9d8f", "#e76f51"])
        ax.set_ylabel("queries")
        ax.set_title(f"true retrieval {100.0 * report.true_retrieval_rate:.2f}%")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep_figure(rows: list[dict], path) -> None:
    """Heatmap of sweep scores over (grid, bins) combinations."""
    grids = sorted({r["grid"] for r in rows})
    bins = sorted({r["bins"] for r in rows})
    score = np.full((len(grids), len(bins)), np.nan)
    for r in rows:
        score[grids.index(r["grid"]), bins.index(r["bins"])] = r["score"]
    fig, ax = plt.subplots(figsize=(1.2 + 0.9 * len(bins), 1.2 + 0.7 * len(grids)))
    im = ax.imshow(score, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(bins)), [str(b) for b in bins])
    ax.set_yticks(range(len(grids)), grids)
    ax.set_xlabel("bins")
    ax.set_ylabel("grid")
    for i in range(len(grids)):
        for j in range(len(bins)):
            if np.isfinite(score[i, j]):
                ax.text(j, i, f"{score[i, j]:.3f}", ha="center", va="center",
                        color="white", fontsize=8)
    fig.colorbar(im, ax=ax, label="score")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
