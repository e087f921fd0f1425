"""File helpers: body JSON, round-trip CSV, run manifests and SVG portraits."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict

import numpy as np

from .body import BodySpecError, ConvexBody
from .config import Tolerances


def load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise BodySpecError(f"{path}: malformed JSON ({exc})") from None
    except OSError as exc:
        raise BodySpecError(f"{path}: {exc.strerror}") from None


def load_body(path: str) -> ConvexBody:
    return ConvexBody.from_spec(load_json(path))


def fmt(v) -> str:
    """Shortest text that round-trips a float (17 significant digits)."""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    x = float(v)
    if math.isnan(x):
        return "nan"
    return format(x + 0.0, ".17g")


def write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path: str):
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def manifest_path(out: str, manifest_dir: str | None) -> str:
    if manifest_dir:
        os.makedirs(manifest_dir, exist_ok=True)
        return os.path.join(manifest_dir, os.path.basename(out) + ".manifest.json")
    return out + ".manifest.json"


def write_manifest(path: str, *, command: str, argv: list, body: dict | None, params: dict,
                   tol: Tolerances, outputs: list, version: str, duration: float) -> None:
    data = {
        "command": command,
        "argv": argv,
        "body": body,
        "parameters": params,
        "tolerances": asdict(tol),
        "outputs": outputs,
        "version": version,
        "duration_seconds": duration,
    }
    write_json(path, data)


def write_json(path: str, data) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(data), fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _clean(v):
    """Recursively turn arrays into lists and ``-0.0`` into ``0.0``."""
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_clean(x) for x in v]
    if isinstance(v, (float, np.floating)):
        return float(v) + 0.0
    if isinstance(v, np.integer):
        return int(v)
    return v


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    return str(v)


def portrait_svg(curves, width: int = 640, height: int = 400) -> str:
    """One polyline per branch of every level curve; separatrix levels drawn thicker in red."""
    xs = np.concatenate([c.theta_polar for c in curves]) if curves else np.zeros(1)
    ws = [np.abs(c.omega_upper[np.isfinite(c.omega_upper)]) for c in curves]
    wmax = max([float(w.max()) for w in ws if w.size] + [1.0])
    x0, x1 = float(xs.min()), float(xs.max())
    pad = 20.0

    def X(v):
        return pad + (v - x0) / max(x1 - x0, 1e-300) * (width - 2 * pad)

    def Y(v):
        return height / 2 - v / wmax * (height / 2 - pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<line x1="{pad}" y1="{height / 2}" x2="{width - pad}" y2="{height / 2}" stroke="#999"/>']
    for c in curves:
        style = ('stroke="#c00" stroke-width="2"' if c.regime == "separatrix"
                 else 'stroke="#246" stroke-width="1"')
        for branch in (c.omega_upper, c.omega_lower):
            run = []
            for tx, w in zip(c.theta_polar, branch):
                if np.isfinite(w):
                    run.append(f"{X(tx):.3f},{Y(w):.3f}")
                elif run:
                    parts.append(f'<polyline fill="none" {style} points="{" ".join(run)}"/>')
                    run = []
            if run:
                parts.append(f'<polyline fill="none" {style} points="{" ".join(run)}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
