"""Rasterized domains on uniform grids, with polarization and symmetrization.

A domain is a boolean mask over a uniform cell lattice in R^N (N >= 2).  Cell
``(i_1, ..., i_N)`` has center ``origin + (i + 1/2) h`` and volume ``h^N``.
All set operations (reflection, polarization, Schwarz ball) act on cell
centers, so they are exact on the lattice and measure bookkeeping is integer
arithmetic.
"""

from __future__ import annotations

import base64
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Domain",
    "QuadratureGrid",
    "Polarizer",
    "LatticeError",
    "make_ball",
    "make_rect",
    "make_mask",
    "union_domains",
    "quadrature_grid",
    "reflect",
    "reflect_domain",
    "embed_values",
    "polarize_domain",
    "polarize_function",
    "schwarz_ball",
    "diameter",
    "interior_cells",
    "same_cells",
    "domain_to_json",
    "domain_from_json",
]


class LatticeError(ValueError):
    """Grids or polarizers that do not share a common cell lattice."""


@dataclass(frozen=True, eq=False)
class Domain:
    """Boolean cell mask over a uniform lattice.

    Attributes
    ----------
    dim : int
        Ambient dimension N >= 2.
    origin : ndarray, shape (N,)
        Coordinate of the lower corner of the bounding box.
    h : float
        Cell side length, > 0.
    mask : ndarray of bool
        True cells belong to the domain.  At least one cell is true.
    """

    dim: int
    origin: np.ndarray
    h: float
    mask: np.ndarray

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        origin = np.asarray(self.origin, dtype=float)
        mask = np.asarray(self.mask, dtype=bool)
        if origin.shape != (self.dim,):
            raise ValueError(f"origin shape {origin.shape} != ({self.dim},)")
        if mask.ndim != self.dim:
            raise ValueError(f"mask rank {mask.ndim} != dim {self.dim}")
        if not mask.any():
            raise ValueError("domain has no true cells")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.mask.shape

    @cached_property
    def cell_count(self) -> int:
        return int(self.mask.sum())

    @cached_property
    def measure(self) -> float:
        return self.cell_count * self.h**self.dim

    @cached_property
    def indices(self) -> np.ndarray:
        """Integer indices of true cells, C-order (lexicographic)."""
        return np.argwhere(self.mask)

    @cached_property
    def nodes(self) -> np.ndarray:
        """Centers of true cells, shape (n, N), in C-order."""
        return self.origin + (self.indices + 0.5) * self.h

    def box_values(self, values: np.ndarray, fill: float = 0.0) -> np.ndarray:
        """Scatter per-node values onto the full bounding-box array."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.cell_count,):
            raise ValueError(f"expected {self.cell_count} node values")
        out = np.full(self.shape, fill, dtype=float)
        out[self.mask] = values
        return out


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Midpoint quadrature over the true cells of a domain."""

    dim: int
    h: float
    nodes: np.ndarray  # (n, N) cell centers
    weights: np.ndarray  # (n,) all equal to h^N

    @property
    def n(self) -> int:
        return self.nodes.shape[0]


def quadrature_grid(d: Domain) -> QuadratureGrid:
    n = d.cell_count
    return QuadratureGrid(
        dim=d.dim,
        h=d.h,
        nodes=d.nodes,
        weights=np.full(n, d.h**d.dim),
    )


@dataclass(frozen=True, eq=False)
class Polarizer:
    """Open half space H = {x : normal . x > offset} with unit normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        normal = np.asarray(self.normal, dtype=float)
        nrm = float(np.linalg.norm(normal))
        if not math.isclose(nrm, 1.0, rel_tol=1e-9):
            raise ValueError(f"polarizer normal must be unit length, |n| = {nrm}")
        object.__setattr__(self, "normal", normal / nrm)


def reflect(p: Polarizer, x: np.ndarray) -> np.ndarray:
    """Reflect point(s) x across the boundary hyperplane of ``p``.

    Accepts a single point of shape (N,) or a batch of shape (m, N).
    ``reflect`` is an involution and fixes the hyperplane pointwise.
    """
    x = np.asarray(x, dtype=float)
    proj = x @ p.normal - p.offset
    return x - 2.0 * np.multiply.outer(proj, p.normal)


def contains(p: Polarizer, x: np.ndarray) -> np.ndarray:
    """True where x lies in the open half space H."""
    x = np.asarray(x, dtype=float)
    return (x @ p.normal - p.offset) > 0


# === constructors ===


def make_ball(dim: int, center, radius: float, h: float) -> Domain:
    """Rasterize the open ball B_radius(center).

    The lattice is centered on ``center`` so the raster inherits the
    coordinate reflection symmetries of the ball.  Cells are kept when the
    cell center lies strictly inside the ball.

    Raises
    ------
    ValueError
        If the grid is too coarse (h > radius / 4) or parameters are bad.
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if h > radius / 4:
        raise ValueError(f"grid too coarse for ball: h = {h} > radius/4 = {radius / 4}")
    center = np.asarray(center, dtype=float)
    if center.shape != (dim,):
        raise ValueError(f"center shape {center.shape} != ({dim},)")
    return _raster_ball(dim, center, radius, h)


def _raster_ball(dim: int, center: np.ndarray, radius: float, h: float) -> Domain:
    # lattice symmetric about center: cell centers at center + (i + 1/2 - nhalf) h
    nhalf = int(math.ceil(radius / h)) + 1
    n = 2 * nhalf
    axes = [(np.arange(n) + 0.5 - nhalf) * h for _ in range(dim)]
    r2 = np.zeros((n,) * dim)
    for k, ax in enumerate(axes):
        shape = [1] * dim
        shape[k] = n
        r2 = r2 + (ax.reshape(shape)) ** 2
    mask = r2 < radius**2
    return Domain(dim=dim, origin=center - nhalf * h, h=h, mask=mask)


def make_rect(lo, hi, h: float) -> Domain:
    """Axis-aligned box with corners lo, hi; sides must be multiples of h."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != hi.shape or lo.ndim != 1:
        raise ValueError("lo and hi must be vectors of equal length")
    dim = lo.shape[0]
    sides = hi - lo
    if np.any(sides <= 0):
        raise ValueError(f"rect sides must be positive, got {sides}")
    counts = np.rint(sides / h)
    if np.any(np.abs(counts * h - sides) > 1e-6 * h):
        raise LatticeError(f"rect sides {sides} are not multiples of h = {h}")
    shape = tuple(int(c) for c in counts)
    return Domain(dim=dim, origin=lo, h=h, mask=np.ones(shape, dtype=bool))


def make_mask(origin, h: float, mask: np.ndarray) -> Domain:
    mask = np.asarray(mask, dtype=bool)
    return Domain(dim=mask.ndim, origin=np.asarray(origin, float), h=h, mask=mask)


def _lattice_offset(d: Domain, other_origin: np.ndarray, h: float) -> np.ndarray:
    """Integer cell offset of ``d.origin`` relative to ``other_origin``."""
    if not math.isclose(d.h, h, rel_tol=1e-12):
        raise LatticeError(f"cell sizes differ: {d.h} vs {h}")
    t = (d.origin - other_origin) / h
    off = np.rint(t)
    if np.any(np.abs(t - off) > 1e-6):
        raise LatticeError(f"origins differ by a non-integer number of cells: {t}")
    return off.astype(int)


def union_domains(domains) -> Domain:
    """Union of domains sharing one lattice (same h, congruent origins)."""
    domains = list(domains)
    if not domains:
        raise ValueError("union of no domains")
    dim = domains[0].dim
    h = domains[0].h
    if any(d.dim != dim for d in domains):
        raise ValueError("union of domains with different dimensions")
    los = []
    his = []
    for d in domains:
        off = _lattice_offset(d, domains[0].origin, h)
        los.append(off)
        his.append(off + np.array(d.shape))
    lo = np.min(los, axis=0)
    hi = np.max(his, axis=0)
    shape = tuple(int(x) for x in (hi - lo))
    mask = np.zeros(shape, dtype=bool)
    for d, off in zip(domains, los):
        sl = tuple(slice(int(o - l), int(o - l + s)) for o, l, s in zip(off, lo, d.shape))
        mask[sl] |= d.mask
    return Domain(dim=dim, origin=domains[0].origin + lo * h, h=h, mask=mask)


def trim(d: Domain) -> Domain:
    """Crop the bounding box to the tight extent of the true cells."""
    idx = d.indices
    lo = idx.min(axis=0)
    hi = idx.max(axis=0) + 1
    sl = tuple(slice(int(a), int(b)) for a, b in zip(lo, hi))
    return Domain(dim=d.dim, origin=d.origin + lo * d.h, h=d.h, mask=d.mask[sl])


# === polarization ===


def _axis_of(p: Polarizer, dim: int) -> tuple[int, float]:
    """Split an axis-aligned polarizer into (axis, sign). Raises otherwise."""
    k = int(np.argmax(np.abs(p.normal)))
    rest = np.delete(p.normal, k)
    if np.any(np.abs(rest) > 1e-12) or abs(abs(p.normal[k]) - 1.0) > 1e-12:
        raise LatticeError(f"polarizer normal {p.normal} is not axis-aligned")
    if k >= dim:
        raise LatticeError("polarizer axis outside domain dimension")
    return k, float(np.sign(p.normal[k]))


def _hull_box(d: Domain, p: Polarizer) -> tuple[np.ndarray, tuple[int, ...], int, float]:
    """Smallest lattice box containing d and its reflection.

    Returns (origin, shape, axis, sign).  The box is symmetric under the
    reflection, which therefore acts as a pure flip along ``axis``.  The
    hyperplane must sit on a lattice line or midline, else LatticeError.
    """
    k, s = _axis_of(p, d.dim)
    plane = s * p.offset  # hyperplane is {x_k = plane}
    t = (plane - d.origin[k]) / d.h
    if abs(2 * t - round(2 * t)) > 1e-9:
        raise LatticeError(
            f"hyperplane x_{k} = {plane} is not on a lattice line or midline (t = {t})"
        )
    lo_k = d.origin[k]
    hi_k = d.origin[k] + d.shape[k] * d.h
    new_lo = min(lo_k, 2 * plane - hi_k)
    new_hi = max(hi_k, 2 * plane - lo_k)
    origin = d.origin.copy()
    origin[k] = new_lo
    shape = list(d.shape)
    shape[k] = int(round((new_hi - new_lo) / d.h))
    return origin, tuple(shape), k, s


def _embed(d: Domain, origin: np.ndarray, shape: tuple[int, ...], values=None):
    """Place d.mask (or a node-value field) into a larger lattice box."""
    off = _lattice_offset(d, origin, d.h)
    sl = tuple(slice(int(o), int(o + s)) for o, s in zip(off, d.shape))
    if values is None:
        out = np.zeros(shape, dtype=bool)
        out[sl] = d.mask
    else:
        out = np.zeros(shape, dtype=float)
        out[sl] = d.box_values(values)
    return out


def _half_space_index_mask(shape: tuple[int, ...], axis: int, sign: float) -> np.ndarray:
    """Cells of the symmetric box lying in the open half space H."""
    m = shape[axis]
    i = np.arange(m) + 0.5  # centers at (i + 1/2) in cell units; plane at m/2
    inh = i > m / 2 if sign > 0 else i < m / 2
    shp = [1] * len(shape)
    shp[axis] = m
    return np.broadcast_to(inh.reshape(shp), shape)


def polarize_domain(d: Domain, p: Polarizer) -> Domain:
    """Two-point rearrangement of the cell set about the polarizer.

    The result keeps, for every reflection pair of cells, first the H-side
    cell and then the other one; equivalently
    ``((mask | refl) & H) | (mask & refl)``.  Preserves the cell count.
    """
    origin, shape, k, s = _hull_box(d, p)
    a = _embed(d, origin, shape)
    b = np.flip(a, axis=k)
    inh = _half_space_index_mask(shape, k, s)
    out = ((a | b) & inh) | (a & b)
    return trim(Domain(dim=d.dim, origin=origin, h=d.h, mask=out))


def reflect_domain(d: Domain, p: Polarizer) -> Domain:
    """Mirror image of the domain across the polarizer hyperplane."""
    origin, shape, k, _ = _hull_box(d, p)
    a = _embed(d, origin, shape)
    return trim(Domain(dim=d.dim, origin=origin, h=d.h, mask=np.flip(a, axis=k)))


def embed_values(d: Domain, box: Domain, values: np.ndarray) -> np.ndarray:
    """Zero-extend node values of ``d`` onto the nodes of a covering box."""
    arr = _embed(d, box.origin, box.shape, values=values)
    return arr[box.mask]


def polarize_function(d: Domain, values: np.ndarray, p: Polarizer) -> tuple[Domain, np.ndarray]:
    """Two-point rearrangement of a node field, zero-extended off the domain.

    Returns a full-box domain symmetric under the reflection together with
    the polarized node values on it: on each pair the H-side cell gets the
    max, its mirror the min; cells on the hyperplane are fixed.  The
    multiset of values, hence any sum of pointwise functions of the field,
    is preserved.
    """
    origin, shape, k, s = _hull_box(d, p)
    u = _embed(d, origin, shape, values=values)
    ur = np.flip(u, axis=k)
    inh = _half_space_index_mask(shape, k, s)
    out = np.where(inh, np.maximum(u, ur), np.minimum(u, ur))
    box = Domain(dim=d.dim, origin=origin, h=d.h, mask=np.ones(shape, dtype=bool))
    return box, out.ravel()


# === Schwarz symmetrization ===


def _ball_cell_count(dim: int, radius: float, h: float) -> int:
    if radius <= 0:
        return 0
    nhalf = int(math.ceil(radius / h)) + 1
    ax = (np.arange(2 * nhalf) + 0.5 - nhalf) * h
    r2 = np.zeros((2 * nhalf,) * dim)
    for k in range(dim):
        shape = [1] * dim
        shape[k] = 2 * nhalf
        r2 = r2 + (ax.reshape(shape)) ** 2
    return int((r2 < radius**2).sum())


def schwarz_ball(d: Domain) -> Domain:
    """Ball at the origin with (nearest achievable) matching cell count.

    The cell count of a rasterized ball jumps in lattice symmetry orbits,
    so the exact count may be unattainable; the radius is found by
    bisection on the count and the closer side of the jump is returned
    (ties toward the smaller radius, never an empty domain).
    """
    target = d.cell_count
    h = d.h
    dim = d.dim
    # grow until the count reaches the target
    hi = (target * h**dim / _unit_ball_volume(dim)) ** (1.0 / dim) + h
    while _ball_cell_count(dim, hi, h) < target:
        hi *= 1.5
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _ball_cell_count(dim, mid, h) >= target:
            hi = mid
        else:
            lo = mid
    c_hi = _ball_cell_count(dim, hi, h)
    c_lo = _ball_cell_count(dim, lo, h)
    radius = lo if (target - c_lo) < (c_hi - target) and c_lo > 0 else hi
    return _raster_ball(dim, np.zeros(dim), radius, h)


def _unit_ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)


# === metric helpers ===


def _boundary_cells(d: Domain) -> np.ndarray:
    """Mask of true cells with some lattice neighbor outside the domain."""
    m = d.mask
    interior = m.copy()
    for k in range(d.dim):
        for shift in (1, -1):
            rolled = np.roll(m, shift, axis=k)
            edge_idx = [slice(None)] * d.dim
            edge_idx[k] = 0 if shift == 1 else -1
            rolled[tuple(edge_idx)] = False
            interior &= rolled
    return m & ~interior


def diameter(d: Domain) -> float:
    """Exact max pairwise distance between cell centers.

    The maximum is attained at extreme points of the center set, and every
    extreme center is a boundary cell, so only those are enumerated.
    """
    if d.cell_count <= 2048:
        pts = d.nodes
    else:
        idx = np.argwhere(_boundary_cells(d))
        pts = d.origin + (idx + 0.5) * d.h
    if pts.shape[0] == 1:
        return 0.0
    best = 0.0
    block = 1024
    for i in range(0, pts.shape[0], block):
        diff = pts[i : i + block, None, :] - pts[None, :, :]
        dist2 = np.einsum("ijk,ijk->ij", diff, diff)
        best = max(best, float(dist2.max()))
    return math.sqrt(best)


def interior_cells(d: Domain, margin: float, metric: str = "euclidean") -> np.ndarray:
    """Mask of cells whose ``margin``-neighborhood of cells stays inside.

    ``margin`` is in coordinate units; the neighborhood is the set of cells
    whose center offset has Euclidean (or Chebyshev) length <= margin.
    Cells outside the bounding box count as outside the domain.
    """
    r = margin / d.h
    reach = int(math.floor(r + 1e-9))
    out = d.mask.copy()
    for off in np.ndindex(*[2 * reach + 1] * d.dim):
        delta = np.array(off) - reach
        if not delta.any():
            continue
        if metric == "euclidean" and float(np.dot(delta, delta)) > r * r + 1e-12:
            continue
        shifted = d.mask
        for k, s in enumerate(delta):
            shifted = _shift_false(shifted, int(s), k)
        out &= shifted
    return out


def _shift_false(a: np.ndarray, s: int, axis: int) -> np.ndarray:
    """Shift ``a`` by s cells along axis, filling with False."""
    if s == 0:
        return a
    out = np.zeros_like(a)
    if abs(s) >= a.shape[axis]:
        return out
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if s > 0:
        src[axis] = slice(0, a.shape[axis] - s)
        dst[axis] = slice(s, None)
    else:
        src[axis] = slice(-s, None)
        dst[axis] = slice(0, a.shape[axis] + s)
    out[tuple(dst)] = a[tuple(src)]
    return out


def same_cells(d1: Domain, d2: Domain) -> bool:
    """True when both domains contain exactly the same cell centers."""
    if d1.dim != d2.dim or not math.isclose(d1.h, d2.h, rel_tol=1e-12):
        return False
    try:
        off = _lattice_offset(d1, d2.origin, d2.h)
    except LatticeError:
        return False
    a = d1.indices + off
    b = d2.indices
    if a.shape != b.shape:
        return False
    return bool(np.array_equal(np.asarray(sorted(map(tuple, a))), np.asarray(sorted(map(tuple, b)))))


# === JSON schema ===


def domain_to_json(d: Domain) -> dict:
    """Serialize as the ``mask`` kind (base64 row-major packed bits)."""
    packed = np.packbits(d.mask.ravel(order="C").astype(np.uint8))
    return {
        "dim": d.dim,
        "kind": "mask",
        "origin": [float(x) for x in d.origin],
        "shape": [int(s) for s in d.shape],
        "h": float(d.h),
        "mask_b64": base64.b64encode(packed.tobytes()).decode("ascii"),
    }


def domain_from_json(spec: dict, h: float | None = None, dim: int | None = None) -> Domain:
    """Build a domain from its JSON description.

    Kinds: ``ball`` (center, radius), ``rect`` (lo, hi), ``union`` (parts,
    which inherit h and dim), ``mask`` (origin, shape, mask_b64).
    """
    if not isinstance(spec, dict):
        raise ValueError(f"domain spec must be an object, got {type(spec).__name__}")
    kind = spec.get("kind")
    h = float(spec.get("h", h if h is not None else 0.0))
    if not h > 0:
        raise ValueError("domain spec needs a positive h")
    if kind == "ball":
        center = spec["center"]
        return make_ball(len(center), center, float(spec["radius"]), h)
    if kind == "rect":
        return make_rect(spec["lo"], spec["hi"], h)
    if kind == "union":
        parts = spec.get("parts", [])
        if not parts:
            raise ValueError("union domain needs nonempty parts")
        return union_domains(domain_from_json(p, h=h) for p in parts)
    if kind == "mask":
        shape = tuple(int(s) for s in spec["shape"])
        count = int(np.prod(shape))
        raw = base64.b64decode(spec["mask_b64"])
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), count=count)
        mask = bits.astype(bool).reshape(shape)
        return make_mask(spec["origin"], h, mask)
    raise ValueError(f"unknown domain kind {kind!r}")
