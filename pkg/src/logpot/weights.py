"""Positive weight fields on grids: analytic families and raw samples.

Families are chosen so that log w has a known Laplacian class:

* ``constant``   w(x) = c                      log w harmonic
* ``gauss_log``  w(x) = exp(a |x - x0|^2 + b)  Delta log w = 2 a N (constant)
* ``affine_log`` w(x) = exp(v . x + b)         log w harmonic
* ``samples``    values given per node         classified by finite differences
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Domain, Polarizer, QuadratureGrid, diameter, reflect

__all__ = [
    "WeightField",
    "SampledWeight",
    "LogLaplacianClass",
    "NonPositiveWeightError",
    "constant",
    "gauss_log",
    "affine_log",
    "from_samples",
    "evaluate",
    "sample",
    "log_laplacian_class",
    "is_log_superharmonic",
    "check_sqrt_diam_bound",
    "symmetric_under",
    "weight_to_json",
    "weight_from_json",
]

_FAMILIES = ("constant", "gauss_log", "affine_log", "samples")
_ROLES = ("w", "g")


class NonPositiveWeightError(ValueError):
    """A weight sample failed the strict positivity requirement."""


@dataclass(frozen=True, eq=False)
class WeightField:
    """One member of a weight family, tagged with its role ('w' or 'g')."""

    family: str
    role: str
    params: dict

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown weight family {self.family!r}")
        if self.role not in _ROLES:
            raise ValueError(f"weight role must be 'w' or 'g', got {self.role!r}")


@dataclass(frozen=True, eq=False)
class SampledWeight:
    """Node samples of a weight together with its range on the grid."""

    values: np.ndarray
    wmin: float
    wmax: float


def constant(c: float, role: str = "w") -> WeightField:
    if not c > 0:
        raise NonPositiveWeightError(f"constant weight must be positive, got {c}")
    return WeightField("constant", role, {"c": float(c)})


def gauss_log(a: float, b: float, x0, role: str = "w") -> WeightField:
    x0 = np.asarray(x0, dtype=float)
    return WeightField("gauss_log", role, {"a": float(a), "b": float(b), "x0": x0})


def affine_log(v, b: float, role: str = "w") -> WeightField:
    v = np.asarray(v, dtype=float)
    return WeightField("affine_log", role, {"v": v, "b": float(b)})


def from_samples(values, role: str = "w") -> WeightField:
    values = np.asarray(values, dtype=float)
    return WeightField("samples", role, {"values": values})


def evaluate(wf: WeightField, points: np.ndarray) -> np.ndarray:
    """Evaluate an analytic family at arbitrary points (not ``samples``)."""
    points = np.asarray(points, dtype=float)
    p = wf.params
    if wf.family == "constant":
        return np.full(points.shape[:-1], p["c"])
    if wf.family == "gauss_log":
        d2 = ((points - p["x0"]) ** 2).sum(axis=-1)
        return np.exp(p["a"] * d2 + p["b"])
    if wf.family == "affine_log":
        return np.exp(points @ p["v"] + p["b"])
    raise ValueError("sample-family weights are tied to their grid")


def sample(wf: WeightField, grid: QuadratureGrid) -> SampledWeight:
    """Sample the weight on the grid nodes, enforcing strict positivity."""
    if wf.family == "samples":
        values = np.asarray(wf.params["values"], dtype=float)
        if values.shape != (grid.n,):
            raise ValueError(
                f"sample weight carries {values.shape[0]} values but grid has {grid.n} nodes"
            )
    else:
        values = evaluate(wf, grid.nodes)
    bad = np.nonzero(~(values > 0))[0]
    if bad.size:
        i = int(bad[0])
        raise NonPositiveWeightError(
            f"weight not strictly positive at node {i} ({grid.nodes[i]}): {values[i]}"
        )
    return SampledWeight(values=values, wmin=float(values.min()), wmax=float(values.max()))


# === log-Laplacian classification ===


@dataclass(frozen=True)
class LogLaplacianClass:
    """Classification of Delta(log w): harmonic / constant / superharmonic / other."""

    kind: str
    constant: float | None = None


def log_laplacian_class(wf: WeightField, d: Domain | None = None) -> LogLaplacianClass:
    """Classify Delta(log w), exactly for analytic families.

    For ``samples`` a domain is required and the 2N+1 point discrete
    Laplacian on interior cells decides the class (superharmonic means
    <= +1e-8 everywhere).
    """
    if wf.family in ("constant", "affine_log"):
        return LogLaplacianClass("harmonic", 0.0)
    if wf.family == "gauss_log":
        a = wf.params["a"]
        if a == 0.0:
            return LogLaplacianClass("harmonic", 0.0)
        # x0 may have any length; the ambient dimension is len(x0)
        n = len(np.atleast_1d(wf.params["x0"]))
        return LogLaplacianClass("constant", 2.0 * a * n)
    if d is None:
        raise ValueError("sample-family classification needs the domain")
    laps = _discrete_log_laplacian(wf, d)
    if laps.size == 0:
        raise ValueError("domain has no interior cells to classify on")
    atol = 1e-8
    mean = float(laps.mean())
    spread = float(laps.max() - laps.min())
    if spread <= max(atol, 1e-3 * abs(mean)):
        if abs(mean) <= atol:
            return LogLaplacianClass("harmonic", 0.0)
        return LogLaplacianClass("constant", mean)
    if float(laps.max()) <= atol:
        return LogLaplacianClass("superharmonic", None)
    return LogLaplacianClass("other", None)


def _discrete_log_laplacian(wf: WeightField, d: Domain) -> np.ndarray:
    grid_vals = np.asarray(wf.params["values"], dtype=float)
    if grid_vals.shape != (d.cell_count,):
        raise ValueError("sample count does not match the domain")
    if np.any(~(grid_vals > 0)):
        raise NonPositiveWeightError("weight not strictly positive on the domain")
    box = d.box_values(np.log(grid_vals), fill=np.nan)
    lap = np.full(d.shape, 0.0)
    interior = d.mask.copy()
    for k in range(d.dim):
        for s in (1, -1):
            shifted = np.roll(box, s, axis=k)
            edge = [slice(None)] * d.dim
            edge[k] = 0 if s == 1 else -1
            shifted[tuple(edge)] = np.nan
            lap = lap + shifted
            interior &= ~np.isnan(shifted)
    lap = (lap - 2 * d.dim * box) / d.h**2
    return lap[interior]


def is_log_superharmonic(cls: LogLaplacianClass) -> bool:
    """Precondition helper: nonpositive log-Laplacian everywhere."""
    if cls.kind in ("harmonic", "superharmonic"):
        return True
    return cls.kind == "constant" and cls.constant is not None and cls.constant <= 1e-12


# === hypothesis checks ===


def check_sqrt_diam_bound(wf: WeightField, d: Domain) -> bool:
    """sqrt(diam of the cell centers) <= min w, checked on cell centers."""
    sw = sample(wf, _grid_of(d))
    return sw.wmin + 1e-12 >= math.sqrt(diameter(d))


def symmetric_under(wf: WeightField, p: Polarizer, grid: QuadratureGrid) -> bool:
    """True when the weight agrees at reflected node pairs (rel. 1e-10)."""
    nodes = grid.nodes
    mirrored = reflect(p, nodes)
    if wf.family == "samples":
        vals = sample(wf, grid).values
        lookup = _node_lookup(nodes, grid.h)
        ref = np.empty_like(vals)
        for i, x in enumerate(mirrored):
            key = _node_key(x, nodes, grid.h)
            j = lookup.get(key)
            if j is None:
                raise ValueError(f"reflected node {x} is not on the grid")
            ref[i] = vals[j]
    else:
        vals = evaluate(wf, nodes)
        ref = evaluate(wf, mirrored)
    scale = np.maximum(np.abs(vals), np.abs(ref))
    return bool(np.all(np.abs(vals - ref) <= 1e-10 * scale))


def _node_lookup(nodes: np.ndarray, h: float) -> dict:
    base = nodes.min(axis=0)
    keys = np.rint((nodes - base) / (h / 2)).astype(int)
    return {tuple(k): i for i, k in enumerate(keys)}


def _node_key(x: np.ndarray, nodes: np.ndarray, h: float) -> tuple:
    base = nodes.min(axis=0)
    return tuple(np.rint((x - base) / (h / 2)).astype(int))


def _grid_of(d: Domain) -> QuadratureGrid:
    from .geometry import quadrature_grid

    return quadrature_grid(d)


# === JSON schema ===


def weight_to_json(wf: WeightField) -> dict:
    p = wf.params
    if wf.family == "constant":
        params = {"c": p["c"]}
    elif wf.family == "gauss_log":
        params = {"a": p["a"], "b": p["b"], "x0": [float(x) for x in p["x0"]]}
    elif wf.family == "affine_log":
        params = {"v": [float(x) for x in p["v"]], "b": p["b"]}
    else:
        params = {"values": [float(x) for x in p["values"]]}
    return {"role": wf.role, "family": wf.family, "params": params}


def weight_from_json(spec: dict, role: str | None = None) -> WeightField:
    if not isinstance(spec, dict):
        raise ValueError(f"weight spec must be an object, got {type(spec).__name__}")
    family = spec.get("family")
    params = spec.get("params", {})
    role = spec.get("role", role or "w")
    if family == "constant":
        return constant(float(params["c"]), role)
    if family == "gauss_log":
        return gauss_log(float(params["a"]), float(params["b"]), params["x0"], role)
    if family == "affine_log":
        return affine_log(params["v"], float(params["b"]), role)
    if family == "samples":
        return from_samples(params["values"], role)
    raise ValueError(f"unknown weight family {family!r}")
