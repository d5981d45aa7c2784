"""Nystrom discretization of the symmetrized weighted log-potential operator.

The kernel is ``K(x, y) = log(w(x) w(y) / |x - y|)``; the assembled system is

    A_ij = (g_i g_j)^(-1/2) K(x_i, x_j) h^N         (i != j)
    A_ii = (ball_average + h^N 2 log w_i) / g_i

where the diagonal replaces the singular self-cell integral by the exact
integral of log(1/|y|) over the ball of the same volume as one cell.  ``A``
is symmetric; its eigenvalues approximate the eigenvalues tau of the
weighted operator and eigenvectors v correspond to eigenfunctions
``u = v / sqrt(g)``.

Two realizations of the same matrix are provided: a dense one (subject to a
node cap, default 20000, env ``LOGPOT_NODE_CAP``) and a matrix-free one that
evaluates the matvec by FFT convolution over the uniform lattice.  They agree
entrywise; the matrix-free path exists purely so larger grids stay usable.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .geometry import Domain, QuadratureGrid, quadrature_grid
from .weights import WeightField, sample

__all__ = [
    "SingularPointError",
    "NodeCapError",
    "KernelSystem",
    "MatrixFreeSystem",
    "node_cap",
    "kernel",
    "ball_average_diagonal",
    "assemble",
    "matrix_free",
    "apply",
    "quadratic_form",
    "dump_matrix",
    "load_matrix",
]

DEFAULT_NODE_CAP = 20000


class SingularPointError(ValueError):
    """Kernel evaluated on the diagonal x == y."""


class NodeCapError(RuntimeError):
    """Dense assembly refused because the grid exceeds the node cap."""


def node_cap() -> int:
    raw = os.environ.get("LOGPOT_NODE_CAP")
    if raw is None:
        return DEFAULT_NODE_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"LOGPOT_NODE_CAP must be an integer, got {raw!r}") from exc
    if cap <= 0:
        raise ValueError(f"LOGPOT_NODE_CAP must be positive, got {cap}")
    return cap


def kernel(x, y, wx: float, wy: float) -> float:
    """Pointwise kernel log(wx wy / |x - y|).  Singular on the diagonal."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dist = float(np.linalg.norm(x - y))
    if dist == 0.0:
        raise SingularPointError(f"kernel is singular at coincident points {x}")
    return math.log(wx) + math.log(wy) - math.log(dist)


def ball_average_diagonal(h: float, dim: int) -> float:
    """Integral of log(1/|y|) over the ball of volume h^dim at the origin.

    With |B_rho| = h^dim this is h^dim (log(1/rho) + 1/dim); for dim = 2 it
    equals h^2 (log(sqrt(pi)/h) + 1/2).
    """
    surf = 2.0 * math.pi ** (dim / 2) / math.gamma(dim / 2)
    rho = (dim * h**dim / surf) ** (1.0 / dim)
    return h**dim * (math.log(1.0 / rho) + 1.0 / dim)


@dataclass(frozen=True, eq=False)
class KernelSystem:
    """Dense symmetric Nystrom matrix with its grid and weight samples."""

    domain: Domain
    grid: QuadratureGrid
    wvals: np.ndarray
    gvals: np.ndarray
    matrix: np.ndarray
    scale: float

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def n(self) -> int:
        return self.grid.n


def assemble(d: Domain, w: WeightField, g: WeightField, cap: int | None = None) -> KernelSystem:
    """Assemble the dense symmetric system for (d, w, g).

    Raises NodeCapError when the node count exceeds the cap (argument,
    else env LOGPOT_NODE_CAP, else 20000).
    """
    grid = quadrature_grid(d)
    n = grid.n
    limit = cap if cap is not None else node_cap()
    if n > limit:
        raise NodeCapError(
            f"grid has {n} nodes, over the dense cap {limit}; "
            "use matrix_free() or raise LOGPOT_NODE_CAP"
        )
    wvals = sample(w, grid).values
    gvals = sample(g, grid).values
    lw = np.log(wvals)
    isg = 1.0 / np.sqrt(gvals)
    hn = grid.h**grid.dim
    nodes = grid.nodes

    a = np.empty((n, n), dtype=float)
    block = max(1, min(n, int(8e6) // max(n, 1) + 1))
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        diff = nodes[i0:i1, None, :] - nodes[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        # silence log(0) on the diagonal; overwritten below
        sub = np.arange(i0, i1)
        d2[sub - i0, sub] = 1.0
        k = (lw[i0:i1, None] + lw[None, :]) - 0.5 * np.log(d2)
        a[i0:i1, :] = k * hn * (isg[i0:i1, None] * isg[None, :])
    diag = (ball_average_diagonal(grid.h, grid.dim) + hn * 2.0 * lw) / gvals
    a[np.arange(n), np.arange(n)] = diag
    scale = float(np.abs(a).max())
    return KernelSystem(domain=d, grid=grid, wvals=wvals, gvals=gvals, matrix=a, scale=scale)


# === matrix-free realization ===


@dataclass(frozen=True, eq=False)
class MatrixFreeSystem:
    """Same matrix as ``assemble`` would build, applied by FFT convolution.

    Valid because the nodes sit on a uniform lattice: the log-distance part
    of the kernel depends only on the index offset, so the matvec is a
    discrete convolution plus two rank-one log-weight terms.
    """

    domain: Domain
    grid: QuadratureGrid
    wvals: np.ndarray
    gvals: np.ndarray
    scale: float
    _kernel_hat: np.ndarray
    _fft_shape: tuple[int, ...]
    _out_slice: tuple[slice, ...]

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def n(self) -> int:
        return self.grid.n


def matrix_free(d: Domain, w: WeightField, g: WeightField) -> MatrixFreeSystem:
    grid = quadrature_grid(d)
    wvals = sample(w, grid).values
    gvals = sample(g, grid).values
    shape = d.shape
    h = grid.h
    dim = grid.dim
    hn = h**dim

    # convolution table over all index offsets; center = diagonal rule
    r2 = np.zeros(tuple(2 * m - 1 for m in shape))
    for k, m in enumerate(shape):
        ax = np.arange(-(m - 1), m, dtype=float)
        s = [1] * dim
        s[k] = 2 * m - 1
        r2 = r2 + (ax.reshape(s)) ** 2
    center = tuple(m - 1 for m in shape)
    r2[center] = 1.0
    table = -(math.log(h) + 0.5 * np.log(r2))
    table[center] = ball_average_diagonal(h, dim) / hn

    fft_shape = tuple(scipy.fft.next_fast_len(3 * m - 2) for m in shape)
    kernel_hat = scipy.fft.rfftn(table, fft_shape)
    out_slice = tuple(slice(m - 1, 2 * m - 1) for m in shape)

    scale = _matrix_free_scale(d, np.log(wvals), gvals, h, dim)
    return MatrixFreeSystem(
        domain=d,
        grid=grid,
        wvals=wvals,
        gvals=gvals,
        scale=scale,
        _kernel_hat=kernel_hat,
        _fft_shape=fft_shape,
        _out_slice=out_slice,
    )


def _matrix_free_scale(d: Domain, lw: np.ndarray, gvals: np.ndarray, h: float, dim: int) -> float:
    """max |A_ij| over the diagonal and touching-cell pairs.

    Off-diagonal kernel magnitude decays with distance for the supported
    weight families, so the max is attained at cell spacing h (or on the
    diagonal); farther pairs are not enumerated.
    """
    hn = h**dim
    diag = (ball_average_diagonal(h, dim) + hn * 2.0 * lw) / gvals
    best = float(np.abs(diag).max())
    lw_box = d.box_values(lw, fill=np.nan)
    isg_box = d.box_values(1.0 / np.sqrt(gvals), fill=np.nan)
    for off in np.ndindex(*[3] * dim):
        delta = np.array(off) - 1
        if not delta.any():
            continue
        dist = h * math.sqrt(float(np.dot(delta, delta)))
        lw_s = lw_box
        isg_s = isg_box
        for k, s in enumerate(delta):
            lw_s = _nan_shift(lw_s, int(s), k)
            isg_s = _nan_shift(isg_s, int(s), k)
        vals = np.abs((lw_box + lw_s - math.log(dist)) * hn * (isg_box * isg_s))
        m = np.nanmax(vals) if np.any(~np.isnan(vals)) else 0.0
        best = max(best, float(m))
    return best


def _nan_shift(a: np.ndarray, s: int, axis: int) -> np.ndarray:
    if s == 0:
        return a
    out = np.full_like(a, np.nan)
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


def apply(sys, v: np.ndarray) -> np.ndarray:
    """Matvec A v of the symmetrized system (dense or matrix-free)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (sys.n,):
        raise ValueError(f"vector length {v.shape} does not match {sys.n} nodes")
    if isinstance(sys, KernelSystem):
        return sys.matrix @ v
    hn = sys.h**sys.dim
    lw = np.log(sys.wvals)
    isg = 1.0 / np.sqrt(sys.gvals)
    t = isg * v
    s0 = float(t.sum()) * hn
    s1 = float((lw * t).sum()) * hn
    box = sys.domain.box_values(t)
    that = scipy.fft.rfftn(box, sys._fft_shape)
    conv = scipy.fft.irfftn(that * sys._kernel_hat, sys._fft_shape)[sys._out_slice]
    conv = conv[sys.domain.mask] * hn
    return isg * (lw * s0 + s1 + conv)


def quadratic_form(sys, u: np.ndarray) -> tuple[float, float]:
    """(<L_w u, u>, integral of g u^2) for a node function u.

    With v = sqrt(g) u both reduce to the symmetrized matrix:
    numerator = v . (A v) h^N, denominator = |v|^2 h^N.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (sys.n,):
        raise ValueError(f"vector length {u.shape} does not match {sys.n} nodes")
    if not np.any(u):
        raise ValueError("zero vector rejected for the Rayleigh quotient")
    hn = sys.h**sys.dim
    v = np.sqrt(sys.gvals) * u
    num = float(v @ apply(sys, v)) * hn
    den = float(v @ v) * hn
    return num, den


# === binary matrix dump ===


def dump_matrix(ks: KernelSystem, path) -> None:
    """Write n as little-endian uint64, then the matrix row-major float64."""
    with open(path, "wb") as f:
        f.write(struct.pack("<Q", ks.n))
        f.write(np.ascontiguousarray(ks.matrix, dtype="<f8").tobytes())


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as f:
        (n,) = struct.unpack("<Q", f.read(8))
        data = np.frombuffer(f.read(8 * n * n), dtype="<f8")
    if data.size != n * n:
        raise ValueError(f"matrix file truncated: expected {n * n} entries, got {data.size}")
    return data.reshape(n, n).copy()
