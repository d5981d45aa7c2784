"""Eigenvalue and eigenfunction extraction for assembled kernel systems.

Eigenvalues are reported sorted by decreasing magnitude (positive first on
magnitude ties).  Eigenvectors are returned in problem coordinates
``u = v / sqrt(g)``, normalized to ``integral g u^2 = 1`` with the sign fixed
by ``integral g u >= 0``; they are then orthonormal in the g-weighted inner
product by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg

from . import kernel as _kernel
from .geometry import Domain, _lattice_offset

__all__ = [
    "SpectralResult",
    "full_spectrum",
    "tau_plus",
    "positivity_check",
    "deflated_rayleigh",
    "extreme_eigenpairs",
    "convergence_study",
    "ConvergenceTable",
    "result_to_json",
]

_GROUP_RTOL = 1e-10  # eigenvalue gap (relative to scale) treated as a multiplicity


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Full spectrum of one assembled system."""

    taus: np.ndarray  # sorted by |tau| descending, + before - on ties
    vectors: np.ndarray  # (n, k) eigenfunctions u, g-orthonormal columns
    residuals: np.ndarray  # ||A v - tau v||_2 per pair, v the unit matrix eigenvector
    tau_plus: float | None
    tau_minus: float
    scale: float
    h: float
    n: int


def full_spectrum(ks) -> SpectralResult:
    """Dense symmetric eigendecomposition of the assembled matrix."""
    a = ks.matrix
    lam, vec = np.linalg.eigh(a)
    order = np.lexsort((-np.sign(lam), -np.abs(lam)))
    lam = lam[order]
    vec = vec[:, order]
    vec = _regroup(lam, vec, ks.scale)
    res = np.linalg.norm(a @ vec - vec * lam[None, :], axis=0)
    u, lam, vec = _problem_coordinates(ks, lam, vec)
    positives = lam[lam > 0]
    return SpectralResult(
        taus=lam,
        vectors=u,
        residuals=res,
        tau_plus=float(positives.max()) if positives.size else None,
        tau_minus=float(min(0.0, lam.min())),
        scale=ks.scale,
        h=ks.h,
        n=ks.n,
    )


def _regroup(lam: np.ndarray, vec: np.ndarray, scale: float) -> np.ndarray:
    """Re-orthonormalize within numerical multiplicity groups (QR)."""
    tol = _GROUP_RTOL * max(scale, 1e-300)
    i = 0
    k = lam.size
    out = vec.copy()
    while i < k:
        j = i + 1
        while j < k and abs(lam[j] - lam[i]) <= tol:
            j += 1
        if j - i > 1:
            q, _ = np.linalg.qr(out[:, i:j])
            out[:, i:j] = q
        i = j
    return out


def _problem_coordinates(ks, lam: np.ndarray, vec: np.ndarray):
    """Map matrix eigenvectors to normalized, sign-fixed eigenfunctions."""
    hn = ks.h**ks.dim
    sg = np.sqrt(ks.gvals)
    u = vec / (sg[:, None] * np.sqrt(hn))
    mass = (ks.gvals[:, None] * u).sum(axis=0) * hn  # integral of g u
    for c in range(u.shape[1]):
        s = mass[c]
        if abs(s) <= 1e-12 * np.abs(u[:, c]).max():
            nz = np.nonzero(u[:, c])[0]
            s = u[nz[0], c] if nz.size else 1.0
        if s < 0:
            u[:, c] = -u[:, c]
            vec[:, c] = -vec[:, c]
    return u, lam, vec


def tau_plus(ks, result: SpectralResult | None = None):
    """Largest positive eigenvalue and its eigenfunction, or None."""
    sr = result if result is not None else full_spectrum(ks)
    if sr.tau_plus is None:
        return None
    idx = int(np.argmax(sr.taus == sr.tau_plus))
    return sr.tau_plus, sr.vectors[:, idx]


def positivity_check(sr: SpectralResult, index: int = 0) -> bool:
    """True when the (sign-fixed) eigenfunction is strictly one-signed."""
    u = sr.vectors[:, index]
    return bool(np.all(u > 0) or np.all(u < 0))


def deflated_rayleigh(ks, k: int, sign: int, result: SpectralResult | None = None) -> float | None:
    """Extremal Rayleigh quotient over the g-orthogonal complement.

    Deflates the first k-1 eigenvectors of the requested sign and maximizes
    (sign=+1) or minimizes (sign=-1) the Rayleigh quotient on the
    complement with ARPACK on the projected operator; independent of the
    LAPACK route used by full_spectrum.  None when fewer than k eigenvalues
    of that sign exist.
    """
    if sign not in (+1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    sr = result if result is not None else full_spectrum(ks)
    mask = sr.taus > 0 if sign > 0 else sr.taus < 0
    if int(mask.sum()) < k:
        return None
    # matrix-coordinate unit eigenvectors of the first k-1 same-sign pairs
    idx = np.nonzero(mask)[0][: k - 1]
    hn = ks.h**ks.dim
    v = sr.vectors[:, idx] * np.sqrt(ks.gvals)[:, None] * np.sqrt(hn)

    def project(x):
        return x - v @ (v.T @ x) if v.size else x

    def matvec(x):
        return project(ks.matrix @ project(x))

    n = ks.n
    op = scipy.sparse.linalg.LinearOperator((n, n), matvec=matvec, dtype=float)
    v0 = project(np.ones(n))
    if np.linalg.norm(v0) < 1e-12:
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            v0 = project(e)
            if np.linalg.norm(v0) > 1e-12:
                break
    which = "LA" if sign > 0 else "SA"
    vals = scipy.sparse.linalg.eigsh(
        op, k=1, which=which, v0=v0, tol=0, return_eigenvectors=False
    )
    return float(vals[0])


def extreme_eigenpairs(sys, k: int = 1, which: str = "top"):
    """k extreme eigenpairs via ARPACK (dense or matrix-free system).

    ``which`` is "top" (largest algebraic) or "bottom" (smallest).  Returns
    (taus, u) with taus sorted extreme-first and u in problem coordinates,
    normalized and sign-fixed as in full_spectrum.
    """
    if which not in ("top", "bottom"):
        raise ValueError(f"which must be 'top' or 'bottom', got {which!r}")
    n = sys.n
    if isinstance(sys, _kernel.KernelSystem):
        op = sys.matrix
    else:
        op = scipy.sparse.linalg.LinearOperator(
            (n, n), matvec=lambda x: _kernel.apply(sys, np.asarray(x, float).ravel()), dtype=float
        )
    v0 = np.full(n, 1.0 / np.sqrt(n))
    lam, vec = scipy.sparse.linalg.eigsh(
        op, k=k, which="LA" if which == "top" else "SA", v0=v0, tol=0
    )
    order = np.argsort(lam)[::-1] if which == "top" else np.argsort(lam)
    lam = lam[order]
    vec = vec[:, order]
    u, lam, _ = _problem_coordinates(sys, lam, vec)
    return lam, u


@dataclass(frozen=True, eq=False)
class ConvergenceTable:
    """tau values along a sequence of domains, with gaps and flags."""

    which: str
    labels: list
    ns: list
    taus: np.ndarray
    gaps: np.ndarray  # tau_{i+1} - tau_i
    nested: bool
    monotone: bool


def convergence_study(domains, w, g, which: str = "top", labels=None) -> ConvergenceTable:
    """tau^+ (or tau^-) along a domain sequence on a shared lattice.

    For nested rasters on one lattice the matrices are principal
    submatrices of one another, so tau^+ must be nondecreasing (tau^-
    nonincreasing) by interlacing; ``monotone`` reports whether the
    computed values respect that strictly.
    """
    domains = list(domains)
    taus = []
    ns = []
    for d in domains:
        sys = _kernel.matrix_free(d, w, g)
        lam, _ = extreme_eigenpairs(sys, k=1, which=which)
        taus.append(float(lam[0]))
        ns.append(d.cell_count)
    taus = np.asarray(taus)
    gaps = np.diff(taus)
    nested = all(_is_subset(a, b) for a, b in zip(domains, domains[1:]))
    monotone = bool(np.all(gaps > 0)) if which == "top" else bool(np.all(gaps < 0))
    return ConvergenceTable(
        which=which,
        labels=list(labels) if labels is not None else list(range(len(domains))),
        ns=ns,
        taus=taus,
        gaps=gaps,
        nested=nested,
        monotone=monotone,
    )


def _is_subset(a: Domain, b: Domain) -> bool:
    """True when every cell of a is a cell of b (shared lattice)."""
    try:
        off = _lattice_offset(a, b.origin, b.h)
    except ValueError:
        return False
    idx = a.indices + off
    shape = np.array(b.shape)
    if np.any(idx < 0) or np.any(idx >= shape):
        return False
    return bool(np.all(b.mask[tuple(idx.T)]))


def result_to_json(sr: SpectralResult) -> dict:
    return {
        "taus": [float(t) for t in sr.taus],
        "tau_plus": None if sr.tau_plus is None else float(sr.tau_plus),
        "tau_minus": float(sr.tau_minus),
        "residuals": [float(r) for r in sr.residuals],
        "grid": {"h": float(sr.h), "n": int(sr.n)},
    }
