"""Weighted transfinite diameters, equilibrium measures, Fekete certificates.

For a domain raster E with weight W the n-point quantity is

    rho_n = max over n distinct nodes of
            (prod_{i<j} |x_i - x_j| W(x_i) W(x_j)) ^ (2 / (n (n-1)))

maximized by a greedy-seeded single-point exchange search.  The limiting
transfinite diameter is estimated as exp(-V) where V is the minimum of the
discrete logarithmic energy over probability vectors on the nodes, found by
a Frank-Wolfe iteration with exact line search; the self-interaction uses
the same equal-volume-ball rule as the operator diagonal, so the potential
and energy discretizations are consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernel as _kernel
from .geometry import Domain, interior_cells, quadrature_grid, _boundary_cells
from .weights import WeightField, constant, sample

__all__ = [
    "FeketeResult",
    "RhoSequence",
    "EquilibriumResult",
    "CertificateAttempt",
    "CertificateResult",
    "rho_n",
    "rho_sequence",
    "equilibrium",
    "energy_of",
    "monotone_limit_check",
    "negative_certificate",
]


@dataclass(frozen=True, eq=False)
class FeketeResult:
    k: int
    indices: np.ndarray  # node indices into the domain grid, sorted
    points: np.ndarray  # (k, N) coordinates
    log_objective: float  # sum_{i<j} log(|x_i-x_j| W_i W_j)
    rho: float


@dataclass(frozen=True, eq=False)
class RhoSequence:
    ks: list
    rhos: np.ndarray
    results: list
    monotone: bool
    escalations: int


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    nu: np.ndarray
    energy: float
    robin: float
    tdiam: float
    gap: float
    iters: int
    converged: bool


# === Fekete search ===


def _log_weights(d: Domain, W: WeightField) -> np.ndarray:
    return np.log(sample(W, quadrature_grid(d)).values)


def _dcol(pts: np.ndarray, logw: np.ndarray, j: int) -> np.ndarray:
    """Column of the pair objective: log|x - x_j| + log W(x) + log W(x_j)."""
    diff = pts - pts[j]
    d2 = np.einsum("ik,ik->i", diff, diff)
    with np.errstate(divide="ignore"):
        return 0.5 * np.log(d2) + logw + logw[j]


def _exchange_search(pts: np.ndarray, logw: np.ndarray, k: int, rng) -> tuple[np.ndarray, float]:
    """Greedy farthest insertion, then best-improvement single swaps."""
    n = pts.shape[0]
    first = int(rng.integers(n))
    chosen = [first]
    score = _dcol(pts, logw, first)
    while len(chosen) < k:
        c = int(np.argmax(score))
        chosen.append(c)
        score = score + _dcol(pts, logw, c)
    chosen = np.asarray(chosen)

    cross = np.column_stack([_dcol(pts, logw, j) for j in chosen])  # (n, k)
    for sweep in range(200 * k + 200):
        pp = cross[chosen, :].copy()
        np.fill_diagonal(pp, 0.0)
        obj = float(pp.sum()) / 2.0
        s = pp.sum(axis=1)  # contribution of each current point
        rowsum = cross.sum(axis=1)
        with np.errstate(invalid="ignore"):  # inf - inf rows are masked below
            gain = rowsum[:, None] - cross - s[None, :]
        gain[~np.isfinite(gain)] = -np.inf
        gain[chosen, :] = -np.inf  # re-entering a current point is never a move
        p = int(np.argmax(gain))
        c, slot = divmod(p, k)
        if gain[c, slot] <= 1e-10 * max(1.0, abs(obj)):
            break
        chosen[slot] = c
        cross[:, slot] = _dcol(pts, logw, c)
    pp = cross[chosen, :].copy()
    np.fill_diagonal(pp, 0.0)
    return np.sort(chosen), float(pp.sum()) / 2.0


def _best_pair(d: Domain, pts: np.ndarray, logw: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact k = 2 maximizer by enumeration.

    For constant weights the maximum distance pair sits on boundary cells,
    which keeps the enumeration small on large grids.
    """
    cand = np.arange(pts.shape[0])
    # boundary reduction only applies when pts is the full node set
    if np.ptp(logw) <= 1e-15 and pts.shape[0] == d.cell_count and pts.shape[0] > 4096:
        cand = np.nonzero(_boundary_cells(d).ravel()[d.mask.ravel()])[0]
    sub = pts[cand]
    subw = logw[cand]
    best_val = -np.inf
    best_pair = (0, 0)
    block = 512
    m = sub.shape[0]
    with np.errstate(divide="ignore"):
        for i0 in range(0, m, block):
            i1 = min(i0 + block, m)
            diff = sub[i0:i1, None, :] - sub[None, :, :]
            d2 = np.einsum("ijk,ijk->ij", diff, diff)
            val = 0.5 * np.log(d2) + subw[i0:i1, None] + subw[None, :]
            j = int(np.argmax(val))
            a, b = divmod(j, m)
            if val[a, b] > best_val:
                best_val = float(val[a, b])
                best_pair = (cand[i0 + a], cand[b])
    idx = np.sort(np.asarray(best_pair))
    return idx, best_val


def rho_n(d: Domain, W: WeightField, k: int, restarts: int = 8, seed: int = 0) -> FeketeResult:
    """Best found k-point configuration and its rho value.

    Deterministic for fixed (domain, W, k, restarts, seed).  k = 2 is an
    exact enumeration, so rho_2 equals the (weighted) grid diameter.
    """
    grid = quadrature_grid(d)
    if not 2 <= k <= grid.n:
        raise ValueError(f"need 2 <= k <= {grid.n} nodes, got k = {k}")
    pts = grid.nodes
    logw = _log_weights(d, W)
    if k == 2:
        idx, obj = _best_pair(d, pts, logw)
    else:
        idx, obj = None, -np.inf
        for r in range(restarts):
            rng = np.random.default_rng([seed, k, r])
            cand_idx, cand_obj = _exchange_search(pts, logw, k, rng)
            if cand_obj > obj:
                idx, obj = cand_idx, cand_obj
    rho = math.exp(2.0 * obj / (k * (k - 1)))
    return FeketeResult(k=k, indices=idx, points=pts[idx], log_objective=obj, rho=rho)


def _drop_one(pts: np.ndarray, logw: np.ndarray, idx: np.ndarray) -> tuple[np.ndarray, float]:
    """Best (k-1)-subset of a k-configuration and its objective.

    Dropping the weakest point of a (k+1)-configuration yields rho at least
    as large as the full configuration's (pair-product averaging), which is
    what makes the reported sequence provably nonincreasing.
    """
    sub = pts[idx]
    subw = logw[idx]
    k = idx.size
    pp = np.zeros((k, k))
    for j in range(k):
        diff = sub - sub[j]
        d2 = np.einsum("ik,ik->i", diff, diff)
        with np.errstate(divide="ignore"):
            pp[:, j] = 0.5 * np.log(d2) + subw + subw[j]
    np.fill_diagonal(pp, 0.0)
    total = float(pp.sum()) / 2.0
    contrib = pp.sum(axis=1)
    m = int(np.argmin(contrib))
    keep = np.delete(idx, m)
    return keep, total - float(contrib[m])


def rho_sequence(
    d: Domain, W: WeightField, kmax: int, restarts: int = 8, seed: int = 0
) -> RhoSequence:
    """rho_k for k = 2..kmax with monotonicity repair.

    A violation rho_{k} < rho_{k+1} marks a local-search failure at k; the
    search is retried with a larger budget, and independently the best
    (k+1)-configuration is demoted by dropping its weakest point, which
    bounds rho_k from below by rho_{k+1}.
    """
    if kmax < 2:
        raise ValueError(f"kmax must be >= 2, got {kmax}")
    results = [rho_n(d, W, k, restarts=restarts, seed=seed) for k in range(2, kmax + 1)]
    pts = quadrature_grid(d).nodes
    logw = _log_weights(d, W)
    escalations = 0
    # repair from the top down so fixes cascade
    for i in range(len(results) - 2, -1, -1):
        k = i + 2
        if results[i].rho >= results[i + 1].rho:
            continue
        escalations += 1
        retry = rho_n(d, W, k, restarts=4 * restarts, seed=seed + 1)
        if retry.rho > results[i].rho:
            results[i] = retry
        if results[i].rho < results[i + 1].rho:
            keep, obj = _drop_one(pts, logw, results[i + 1].indices)
            rho = math.exp(2.0 * obj / (k * (k - 1)))
            if rho > results[i].rho:
                results[i] = FeketeResult(
                    k=k, indices=keep, points=pts[keep], log_objective=obj, rho=rho
                )
    rhos = np.array([r.rho for r in results])
    monotone = bool(np.all(np.diff(rhos) <= 1e-13 * rhos[0]))
    return RhoSequence(
        ks=list(range(2, kmax + 1)),
        rhos=rhos,
        results=results,
        monotone=monotone,
        escalations=escalations,
    )


# === equilibrium measure / Robin constant ===


def _energy_matrix(d: Domain, W: WeightField) -> np.ndarray:
    """Pairwise energy log(1/(|x-y| W W)) with the equal-volume-ball diagonal."""
    grid = quadrature_grid(d)
    n = grid.n
    cap = _kernel.node_cap()
    if n > cap:
        raise _kernel.NodeCapError(f"energy matrix needs {n} nodes > cap {cap}")
    pts = grid.nodes
    logw = _log_weights(d, W)
    hn = grid.h**grid.dim
    e = np.empty((n, n))
    block = max(1, int(8e6) // max(n, 1) + 1)
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        diff = pts[i0:i1, None, :] - pts[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        sub = np.arange(i0, i1)
        d2[sub - i0, sub] = 1.0
        e[i0:i1, :] = -0.5 * np.log(d2) - logw[i0:i1, None] - logw[None, :]
    diag = _kernel.ball_average_diagonal(grid.h, grid.dim) / hn - 2.0 * logw
    e[np.arange(n), np.arange(n)] = diag
    return e


def energy_of(d: Domain, W: WeightField, nu: np.ndarray) -> float:
    """Discrete energy of a probability vector on the domain nodes."""
    nu = np.asarray(nu, dtype=float)
    e = _energy_matrix(d, W)
    if nu.shape != (e.shape[0],):
        raise ValueError(f"nu length {nu.shape} does not match {e.shape[0]} nodes")
    return float(nu @ (e @ nu))


def equilibrium(
    d: Domain,
    W: WeightField | None = None,
    max_iters: int = 200_000,
    tol: float = 1e-4,
) -> EquilibriumResult:
    """Minimize the discrete energy over the probability simplex.

    Frank-Wolfe with the most-negative-gradient vertex and exact line
    search, started from the uniform vector, stopped on the linearization
    (duality) gap.  The returned energy is the Robin constant estimate and
    exp(-energy) estimates the weighted transfinite diameter.
    """
    if W is None:
        W = constant(1.0)
    e = _energy_matrix(d, W)
    n = e.shape[0]
    nu = np.full(n, 1.0 / n)
    q = e @ nu  # E nu, maintained incrementally
    val = float(nu @ q)
    gap = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        s = int(np.argmin(q))
        qs = float(q[s])
        ess = float(e[s, s])
        gap = 2.0 * (val - qs)
        if gap <= tol:
            break
        # exact line search for the quadratic along d = e_s - nu:
        # I(nu + t d) has minimum at t = (val - q_s) / (d^T E d)
        ded = ess - 2.0 * qs + val
        gamma = 1.0 if ded <= 0 else min(1.0, (val - qs) / ded)
        nu *= 1.0 - gamma
        nu[s] += gamma
        q = (1.0 - gamma) * q + gamma * e[:, s]
        val = (1.0 - gamma) ** 2 * val + 2.0 * gamma * (1.0 - gamma) * qs + gamma**2 * ess
    robin = float(nu @ (e @ nu))  # recompute to clear incremental drift
    return EquilibriumResult(
        nu=nu,
        energy=robin,
        robin=robin,
        tdiam=math.exp(-robin),
        gap=float(gap),
        iters=it,
        converged=bool(gap <= tol),
    )


def monotone_limit_check(domains, W: WeightField | None = None, **kwargs) -> list:
    """Equilibrium estimates along a nested family (tdiam must not shrink)."""
    return [equilibrium(d, W, **kwargs) for d in domains]


# === negative eigenvalue certificate ===


@dataclass(frozen=True, eq=False)
class CertificateAttempt:
    n: int
    r_n: float
    fits: bool
    value: float | None
    note: str


@dataclass(frozen=True, eq=False)
class CertificateResult:
    found_n: int | None
    found_value: float | None
    attempts: list
    eps0: float


def _packing_radius(n: int, dim: int) -> float:
    """r_n with |B_{r_n}| = 1/n, i.e. r_n = C_N n^(-1/N)."""
    c = (math.gamma(dim / 2 + 1) / math.pi ** (dim / 2)) ** (1.0 / dim)
    return c * n ** (-1.0 / dim)


def _raster_ball_counts(d: Domain, points: np.ndarray, r: float):
    """Indicator-sum field of the balls B_r(points) on the grid.

    Returns (node values, fits) where fits is False when some ball covers a
    lattice center outside the domain (ball does not fit) or contains no
    center at all (below grid resolution).
    """
    h = d.h
    reach = int(math.ceil(r / h)) + 1
    box = np.zeros(d.shape)
    fits = True
    for x in points:
        base = np.floor((x - d.origin) / h - 0.5).astype(int)
        covered_any = False
        for off in np.ndindex(*[2 * reach + 1] * d.dim):
            idx = base + (np.array(off) - reach)
            center = d.origin + (idx + 0.5) * h
            if float(np.sum((center - x) ** 2)) >= r * r:
                continue
            covered_any = True
            inside = np.all(idx >= 0) and np.all(idx < np.array(d.shape))
            if not inside or not d.mask[tuple(idx)]:
                fits = False
            else:
                box[tuple(idx)] += 1.0
        if not covered_any:
            fits = False
    return box[d.mask], fits


def negative_certificate(
    d: Domain,
    w: WeightField,
    nmax: int = 64,
    eps0: float | None = None,
    restarts: int = 8,
    seed: int = 0,
) -> CertificateResult:
    """Search for a bump-sum test function with negative quadratic form.

    Fekete points (weight 1/w) of the margin-eroded domain seed disjointly
    placed balls of radius r_n; the quadratic form of the indicator sum is
    evaluated for n = 2, 4, 8, ... up to nmax.  A negative value certifies
    a negative eigenvalue of the assembled system.  The margin eps0
    defaults to 2h and halves when no ball configuration fits.
    """
    eps = 2.0 * d.h if eps0 is None else eps0
    sys_mf = _kernel.matrix_free(d, w, constant(1.0, role="g"))
    logw_inv = -np.log(sample(w, sys_mf.grid).values)
    pts = sys_mf.grid.nodes

    for _ in range(3):
        inner = interior_cells(d, 2.0 * eps)[d.mask]
        cand = np.nonzero(inner)[0]
        attempts = []
        found_n = None
        found_value = None
        any_fit = False
        n_pts = 2
        while n_pts <= nmax:
            r = _packing_radius(n_pts, d.dim)
            if cand.size < n_pts:
                attempts.append(
                    CertificateAttempt(n_pts, r, False, None, "not enough margin nodes")
                )
                n_pts *= 2
                continue
            sub_pts = pts[cand]
            sub_logw = logw_inv[cand]
            if n_pts == 2:
                idx, _ = _best_pair(d, sub_pts, sub_logw)
            else:
                idx, obj = None, -np.inf
                for rr in range(restarts):
                    rng = np.random.default_rng([seed, n_pts, rr])
                    c_idx, c_obj = _exchange_search(sub_pts, sub_logw, n_pts, rng)
                    if c_obj > obj:
                        idx, obj = c_idx, c_obj
            centers = sub_pts[idx]
            f, fits = _raster_ball_counts(d, centers, r)
            if not fits:
                attempts.append(
                    CertificateAttempt(n_pts, r, False, None, "ball does not fit inside domain")
                )
                n_pts *= 2
                continue
            any_fit = True
            value, _ = _kernel.quadratic_form(sys_mf, f)
            attempts.append(CertificateAttempt(n_pts, r, True, float(value), ""))
            if value < 0:
                found_n = n_pts
                found_value = float(value)
                break
            n_pts *= 2
        if any_fit or found_n is not None:
            return CertificateResult(found_n, found_value, attempts, eps)
        eps /= 2.0  # margin too fat for every n: shrink and retry
    return CertificateResult(None, None, attempts, eps)
