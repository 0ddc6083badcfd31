"""Render experiment CSVs into figures.

Recipes are JSON documents:

    {
      "inputs": ["fig3_sweep.csv"],          // one or more CSV paths,
                                             // relative to the recipe file
      "kind": "reward_curve",                // reward_curve | band_curve | heatmap
      "metric": "reward",                    // reward | cluster | stoptime (curves)
      "x_scale": "linear",
      "y_scale": "log",
      "labels": ["run-a"],                   // optional per-input label prefixes
      "title": "...",                        // optional
      "out": "fig3.png"
    }

Curves consume sweep CSVs (one line per policy label, mean metric against p);
band curves additionally shade mean +/- standard deviation; heatmaps consume
action-matrix CSVs (stop-threshold probability over the state grid).
Rendering is read-only over its inputs and writes a PNG at a fixed dpi with
fixed metadata, so identical inputs give identical images.
"""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["FigureRecipe", "SchemaError", "load_recipe", "render", "render_figure"]

DPI = 150
KINDS = ("reward_curve", "band_curve", "heatmap")
METRIC_COLUMNS = {
    "reward": ("mean_reward", "std_reward"),
    "cluster": ("mean_cluster", "std_cluster"),
    "stoptime": ("mean_stoptime", "std_stoptime"),
}


class SchemaError(ValueError):
    """Input CSV does not carry the columns or rows the recipe needs."""


@dataclass(frozen=True)
class FigureRecipe:
    inputs: tuple[Path, ...]
    kind: str
    out: Path
    metric: str = "reward"
    x_scale: str = "linear"
    y_scale: str = "linear"
    labels: tuple[str, ...] = ()
    title: str = ""


def load_recipe(path: "str | Path") -> FigureRecipe:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise SchemaError("recipe must be a JSON object")
    inputs = raw.get("inputs")
    if isinstance(inputs, str):
        inputs = [inputs]
    if not inputs:
        raise SchemaError("recipe needs a non-empty 'inputs' list")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise SchemaError(f"recipe kind must be one of {'|'.join(KINDS)}")
    metric = raw.get("metric", "reward")
    if metric not in METRIC_COLUMNS:
        raise SchemaError(f"recipe metric must be one of {'|'.join(METRIC_COLUMNS)}")
    out = raw.get("out")
    if not out:
        raise SchemaError("recipe needs an 'out' image path")
    base = path.parent
    labels = tuple(raw.get("labels", ()))
    return FigureRecipe(
        inputs=tuple(base / p for p in inputs),
        kind=kind,
        out=base / out,
        metric=metric,
        x_scale=raw.get("x_scale", "linear"),
        y_scale=raw.get("y_scale", "linear"),
        labels=labels,
        title=raw.get("title", ""),
    )


def _read_csv(path: Path, needed: tuple[str, ...]) -> list[dict]:
    if not path.exists():
        raise SchemaError(f"input CSV not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    if not rows:
        raise SchemaError(f"input CSV has no data rows: {path}")
    have = rows[0].keys()
    for column in needed:
        if column not in have:
            raise SchemaError(f"missing column: {column} (in {path})")
    return rows


def _series(rows: list[dict], mean_col: str, std_col: str):
    """Per-policy (p, mean, std) arrays, in file order."""
    by_label: dict[str, list[tuple[float, float, float]]] = {}
    for row in rows:
        by_label.setdefault(row["policy_label"], []).append(
            (float(row["p"]), float(row[mean_col]), float(row[std_col]))
        )
    out = {}
    for label, triples in by_label.items():
        arr = np.array(triples)
        out[label] = (arr[:, 0], arr[:, 1], arr[:, 2])
    return out


def _curve_axes(recipe: FigureRecipe, shaded: bool):
    mean_col, std_col = METRIC_COLUMNS[recipe.metric]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for i, path in enumerate(recipe.inputs):
        rows = _read_csv(path, ("policy_label", "p", mean_col, std_col))
        prefix = recipe.labels[i] if i < len(recipe.labels) else ""
        for label, (p, mean, std) in _series(rows, mean_col, std_col).items():
            name = f"{prefix}:{label}" if prefix else label
            (line,) = ax.plot(p, mean, label=name, linewidth=1.4)
            if shaded:
                ax.fill_between(p, mean - std, mean + std,
                                color=line.get_color(), alpha=0.25, linewidth=0)
    ax.set_xscale(recipe.x_scale)
    ax.set_yscale(recipe.y_scale)
    ax.set_xlabel("ebit delivery probability p")
    ax.set_ylabel(f"mean {recipe.metric}" + (" (shaded: +/- std dev)" if shaded else ""))
    if recipe.title:
        ax.set_title(recipe.title)
    ax.legend(fontsize=7, ncols=2)
    fig.tight_layout()
    return fig


def _heatmap_axes(recipe: FigureRecipe):
    fig, ax = plt.subplots(figsize=(5.4, 4.8))
    rows = _read_csv(recipe.inputs[0], ("s", "n", "p_threshold"))
    sizes = sorted({int(r["s"]) for r in rows})
    slots = sorted({int(r["n"]) for r in rows})
    grid = np.full((len(sizes), len(slots)), np.nan)
    for r in rows:
        grid[int(r["s"]), int(r["n"]) - 1] = float(r["p_threshold"])
    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad("white")
    image = ax.imshow(
        np.ma.masked_invalid(grid),
        origin="lower",
        aspect="auto",
        cmap=cmap,
        vmin=0.0,
        vmax=1.0,
        extent=(slots[0] - 0.5, slots[-1] + 0.5, sizes[0] - 0.5, sizes[-1] + 0.5),
    )
    ax.set_xlabel("time slot n")
    ax.set_ylabel("cluster size s")
    if recipe.title:
        ax.set_title(recipe.title)
    fig.colorbar(image, ax=ax, label="largest p where stopping is optimal")
    fig.tight_layout()
    return fig


def render_figure(recipe: FigureRecipe):
    """Build the matplotlib figure for a recipe without saving it."""
    if recipe.kind == "heatmap":
        return _heatmap_axes(recipe)
    return _curve_axes(recipe, shaded=recipe.kind == "band_curve")


def render(recipe: FigureRecipe) -> Path:
    """Render the recipe and write the PNG; returns the output path."""
    fig = render_figure(recipe)
    recipe.out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(recipe.out, dpi=DPI, metadata={"Software": "plotgen"})
    plt.close(fig)
    return recipe.out


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: plotgen <recipe.json>", file=sys.stderr)
        return 2
    try:
        out = render(load_recipe(argv[0]))
    except (SchemaError, FileNotFoundError, json.JSONDecodeError) as err:
        print(f"plotgen: {err}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
