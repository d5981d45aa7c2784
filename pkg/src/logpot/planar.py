"""Planar (N = 2) closed forms and mechanical theorem checks.

Everything here compares the discretized operator against identities that
hold exactly in the plane: the closed-form potential of a disk, the
distinguished radial weight on a disk whose potential of the constant
function is again constant, the distributional identity
``Laplacian(L u) = -2 pi u``, the sphere-mean representation of eigenpairs,
interior extremum exclusion, and polarization inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernel as _kernel
from . import spectra as _spectra
from .geometry import (
    Domain,
    Polarizer,
    embed_values,
    interior_cells,
    polarize_domain,
    polarize_function,
    quadrature_grid,
    reflect_domain,
    union_domains,
)
from .weights import (
    WeightField,
    check_sqrt_diam_bound,
    constant,
    gauss_log,
    sample,
    symmetric_under,
)

__all__ = [
    "disk_potential_constant",
    "disk_weight",
    "equilibrium_disk_weight",
    "w1_identity_check",
    "smooth_bump",
    "laplacian_identity_check",
    "circle_log_integral",
    "representation_residual",
    "extremum_scan",
    "ScanResult",
    "riesz_inequality_check",
    "polarization_experiment",
    "PolarizationReport",
]


def disk_potential_constant(radius: float, x) -> np.ndarray | float:
    """Potential of u = 1 on the disk B_radius(0):

        L(1)(x) = -pi |x|^2 / 2 - pi R^2 log R + pi R^2 / 2.
    """
    x = np.asarray(x, dtype=float)
    r2 = (x**2).sum(axis=-1)
    val = -math.pi * r2 / 2 - math.pi * radius**2 * math.log(radius) + math.pi * radius**2 / 2
    return float(val) if val.ndim == 0 else val


def disk_weight(radius: float, c: float = 1.0) -> WeightField:
    """The distinguished radial weight on B_radius, scaled by c:

        c w1(x) = c exp(|x|^2 / (2 R^2) + log(R)/2 - 3/8).

    Its log-Laplacian is the constant 2/R^2 = 2 pi / |B_R|, and the
    potential of the constant function is the constant 2 pi R^2 log c, so 0
    is an eigenvalue exactly when c = 1.
    """
    if c <= 0:
        raise ValueError(f"scale c must be positive, got {c}")
    a = 1.0 / (2.0 * radius**2)
    b = 0.5 * math.log(radius) - 3.0 / 8.0 + math.log(c)
    return gauss_log(a, b, np.zeros(2))


def equilibrium_disk_weight(radius: float) -> WeightField:
    """W = 1 / w1 on B_radius; its weighted transfinite diameter is 1."""
    a = -1.0 / (2.0 * radius**2)
    b = -(0.5 * math.log(radius) - 3.0 / 8.0)
    return gauss_log(a, b, np.zeros(2))


@dataclass(frozen=True)
class W1Check:
    target: float  # 2 pi R^2 log c
    max_abs_deviation: float


def w1_identity_check(sys, radius: float, c: float = 1.0) -> W1Check:
    """Max-node deviation of (L_{c w1} 1) from the constant 2 pi R^2 log c.

    ``sys`` must be assembled with w = c*w1 on a raster of B_radius and
    g = 1 (so the symmetrized matvec is the potential itself).
    """
    if not np.allclose(sys.gvals, 1.0, rtol=0, atol=1e-14):
        raise ValueError("w1 identity check requires g = 1")
    target = 2.0 * math.pi * radius**2 * math.log(c)
    vals = _kernel.apply(sys, np.ones(sys.n))
    return W1Check(target=target, max_abs_deviation=float(np.abs(vals - target).max()))


# === Laplacian identity ===


def smooth_bump(d: Domain, center=None, radius: float | None = None) -> np.ndarray:
    """C^infinity bump exp(1 - 1/(1 - t^2)), t = |x - center| / radius."""
    nodes = d.nodes
    center = np.zeros(d.dim) if center is None else np.asarray(center, float)
    if radius is None:
        radius = 0.8
    t2 = ((nodes - center) ** 2).sum(axis=1) / radius**2
    out = np.zeros(d.cell_count)
    inside = t2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t2[inside]))
    return out


@dataclass(frozen=True)
class LaplacianCheck:
    rel_l2_error: float
    n_interior: int


def laplacian_identity_check(d: Domain, u: np.ndarray, sys=None) -> LaplacianCheck:
    """Relative l2 error of Delta_h (L u) against -2 pi u.

    ``u`` must vanish outside a 3-cell interior margin (the discrete
    Laplacian stencil must not see the domain boundary).  ``sys`` defaults
    to the matrix-free w = g = 1 system; a caller-provided system must have
    g = 1 and log w harmonic for the identity to hold.
    """
    if d.dim != 2:
        raise ValueError("planar identity: dimension must be 2")
    u = np.asarray(u, dtype=float)
    allowed = interior_cells(d, 3 * d.h, metric="chebyshev")[d.mask]
    if np.any((u != 0) & ~allowed):
        raise ValueError("u must be supported with a 3-cell interior margin")
    if sys is None:
        sys = _kernel.matrix_free(d, constant(1.0), constant(1.0, role="g"))
    lu = _kernel.apply(sys, u)
    box = d.box_values(lu, fill=np.nan)
    lap = -4.0 * box
    interior = d.mask.copy()
    for k in range(2):
        for s in (1, -1):
            shifted = np.roll(box, s, axis=k)
            edge = [slice(None)] * 2
            edge[k] = 0 if s == 1 else -1
            shifted[tuple(edge)] = np.nan
            lap = lap + shifted
            interior &= ~np.isnan(shifted)
    lap = lap / d.h**2
    ubox = d.box_values(u)
    target = -2.0 * math.pi * ubox[interior]
    err = np.linalg.norm(lap[interior] - target) / np.linalg.norm(target)
    return LaplacianCheck(rel_l2_error=float(err), n_interior=int(interior.sum()))


# === representation formula ===


def circle_log_integral(x0, r: float, npts: int = 64) -> float:
    """Trapezoid value of integral_0^{2 pi} log|x0 + r e^{i t}| dt.

    Equals 2 pi log r for |x0| <= r and 2 pi log|x0| outside (classical
    circle mean of the logarithm); the periodic trapezoid rule converges
    spectrally away from |x0| = r.
    """
    x0 = np.asarray(x0, dtype=float)
    t = 2.0 * math.pi * np.arange(npts) / npts
    pts = x0[None, :] + r * np.column_stack([np.cos(t), np.sin(t)])
    return float(np.log(np.sqrt((pts**2).sum(axis=1))).sum() * (2.0 * math.pi / npts))


def _bilinear(d: Domain, box: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a box field at points; NaN corners error."""
    t = (pts - d.origin) / d.h - 0.5
    i0 = np.floor(t).astype(int)
    frac = t - i0
    if np.any(i0 < 0) or np.any(i0 + 1 >= np.array(d.shape)):
        raise ValueError("interpolation point outside the grid interior")
    vals = np.zeros(pts.shape[0])
    for dx in (0, 1):
        for dy in (0, 1):
            corner = box[i0[:, 0] + dx, i0[:, 1] + dy]
            wx = frac[:, 0] if dx else 1.0 - frac[:, 0]
            wy = frac[:, 1] if dy else 1.0 - frac[:, 1]
            vals += corner * wx * wy
    if np.any(~np.isfinite(vals)):
        raise ValueError("interpolation stencil leaves the domain")
    return vals


def representation_residual(
    sys, tau: float, phi: np.ndarray, x, r: float, npts: int = 64
) -> float:
    """Normalized residual of the sphere-mean representation at x:

        tau phi(x) g(x) = tau/(2 pi) * circle integral of phi g
                          - integral_{B_r(x)} log(|x - y| / r) phi(y) dy

    (valid for eigenpairs when log w is harmonic).  x snaps to the nearest
    node; the ball must lie inside the domain with an interpolation margin.
    Normalization: |tau| * max|phi g|.
    """
    d = sys.domain
    if d.dim != 2:
        raise ValueError("representation formula: dimension must be 2")
    x = np.asarray(x, dtype=float)
    nodes = sys.grid.nodes
    i_node = int(np.argmin(((nodes - x) ** 2).sum(axis=1)))
    x = nodes[i_node]

    field = phi * sys.gvals  # phi g at nodes
    fbox = d.box_values(field, fill=np.nan)
    t = 2.0 * math.pi * np.arange(npts) / npts
    ring = x[None, :] + r * np.column_stack([np.cos(t), np.sin(t)])
    circle = float(_bilinear(d, fbox, ring).sum() * (2.0 * math.pi / npts))

    # grid quadrature of log(|x-y|/r) phi over B_r(x); exact ball average
    # replaces the singular center cell
    reach = int(math.ceil(r / d.h)) + 1
    base = np.rint((x - d.origin) / d.h - 0.5).astype(int)
    offs = np.array(list(np.ndindex(2 * reach + 1, 2 * reach + 1))) - reach
    lattice = base + offs
    centers = d.origin + (lattice + 0.5) * d.h
    covered = ((centers - x) ** 2).sum(axis=1) < r * r
    lat = lattice[covered]
    if (
        np.any(lat < 0)
        or np.any(lat >= np.array(d.shape))
        or not np.all(d.mask[lat[:, 0], lat[:, 1]])
    ):
        raise ValueError("ball leaves the domain")
    diff = nodes - x
    dist2 = np.einsum("ik,ik->i", diff, diff)
    in_ball = dist2 < r * r
    h2 = d.h**2
    sel = in_ball.copy()
    sel[i_node] = False
    with np.errstate(divide="ignore"):
        disk = float((0.5 * np.log(dist2[sel] / (r * r)) * phi[sel]).sum() * h2)
    disk += float(phi[i_node]) * (-_kernel.ball_average_diagonal(d.h, 2) - h2 * math.log(r))

    lhs = tau * field[i_node]
    rhs = tau / (2.0 * math.pi) * circle - disk
    scale = abs(tau) * float(np.abs(field).max())
    return abs(lhs - rhs) / scale


# === extremum exclusion ===


@dataclass(frozen=True, eq=False)
class ScanResult:
    violations: np.ndarray  # (m, N) cell indices of excluded extrema found
    checked: int
    degenerate: bool


def extremum_scan(
    d: Domain, field: np.ndarray, tau: float, delta_rel: float = 1e-6, band: int = 2
) -> ScanResult:
    """Scan phi g for extrema excluded by the sign of tau.

    tau > 0 forbids strict positive local minima and strict negative local
    maxima over the full neighbor ring (strictness beyond
    delta = delta_rel * max|field|); tau < 0 forbids the mirrored pair.
    Cells within ``band`` cells of the boundary are not scanned.  A field
    that is constant to within delta is flagged degenerate.
    """
    if tau == 0:
        raise ValueError("extremum exclusion needs tau != 0")
    field = np.asarray(field, dtype=float)
    box = d.box_values(field, fill=np.nan)
    inner = interior_cells(d, band * d.h, metric="chebyshev")
    delta = delta_rel * float(np.abs(field).max())

    nb_min = np.full(d.shape, np.inf)
    nb_max = np.full(d.shape, -np.inf)
    for off in np.ndindex(*[3] * d.dim):
        delta_idx = np.array(off) - 1
        if not delta_idx.any():
            continue
        shifted = box
        for k, s in enumerate(delta_idx):
            shifted = _nan_edge_shift(shifted, int(s), k)
        nb_min = np.fmin(nb_min, shifted)
        nb_max = np.fmax(nb_max, shifted)

    v = box
    if tau > 0:
        bad = ((v > delta) & (v < nb_min - delta)) | ((v < -delta) & (v > nb_max + delta))
    else:
        bad = ((v < -delta) & (v < nb_min - delta)) | ((v > delta) & (v > nb_max + delta))
    bad &= inner
    scanned = field[inner[d.mask]]
    degenerate = bool(scanned.size and (scanned.max() - scanned.min()) <= delta)
    return ScanResult(
        violations=np.argwhere(bad), checked=int(inner.sum()), degenerate=degenerate
    )


def _nan_edge_shift(a: np.ndarray, s: int, axis: int) -> np.ndarray:
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


# === polarization ===


def riesz_inequality_check(d: Domain, f: np.ndarray, p: Polarizer, w: WeightField):
    """Energies (I(f), I(P_H f)) of a field and its polarization.

    I(f) is the double sum of f f K with the equal-volume-ball diagonal,
    i.e. the quadratic-form numerator with g = 1, evaluated on the
    symmetric hull box so both fields share one kernel system.  Requires w
    symmetric under the polarizer.
    """
    box, pf = polarize_function(d, f, p)
    if not symmetric_under(w, p, quadrature_grid(box)):
        raise ValueError("Riesz comparison needs a polarizer-symmetric weight")
    fbox = embed_values(d, box, np.asarray(f, dtype=float))
    sys = _kernel.assemble(box, w, constant(1.0, role="g"))
    i_f, _ = _kernel.quadratic_form(sys, fbox)
    i_pf, _ = _kernel.quadratic_form(sys, pf)
    return float(i_f), float(i_pf)


@dataclass(frozen=True, eq=False)
class PolarizationReport:
    tau_omega: float
    tau_polarized: float
    gap: float
    hypothesis_ok: bool
    equality_case: str | None  # "omega" | "mirror" | None
    notes: list


def polarization_experiment(
    d: Domain, p: Polarizer, w: WeightField, g: WeightField
) -> PolarizationReport:
    """Compare tau^+ of a domain and of its polarization.

    Checks the hypotheses (w, g symmetric under the polarizer;
    sqrt(diam) <= w on the union of the domain and its mirror) and reports
    whether the polarized domain coincides with the domain or its mirror,
    the only cases where equality of tau^+ is expected.
    """
    from .geometry import same_cells

    notes = []
    dp = polarize_domain(d, p)
    mirror = reflect_domain(d, p)
    hull = union_domains([d, mirror])
    ok = True
    for wf, name in ((w, "w"), (g, "g")):
        if not symmetric_under(wf, p, quadrature_grid(hull)):
            ok = False
            notes.append(f"{name} is not symmetric under the polarizer")
    if not check_sqrt_diam_bound(w, hull):
        ok = False
        notes.append("sqrt(diam) <= w fails on the domain-mirror union")

    tau0 = _tau_plus_of(d, w, g)
    tau1 = _tau_plus_of(dp, w, g)
    equality = None
    if same_cells(dp, d):
        equality = "omega"
    elif same_cells(dp, mirror):
        equality = "mirror"
    return PolarizationReport(
        tau_omega=tau0,
        tau_polarized=tau1,
        gap=tau1 - tau0,
        hypothesis_ok=ok,
        equality_case=equality,
        notes=notes,
    )


def _tau_plus_of(d: Domain, w: WeightField, g: WeightField) -> float:
    if d.cell_count <= 2500:
        sys = _kernel.assemble(d, w, g)
        sr = _spectra.full_spectrum(sys)
        if sr.tau_plus is None:
            raise ValueError("no positive eigenvalue")
        return float(sr.tau_plus)
    sys = _kernel.matrix_free(d, w, g)
    lam, _ = _spectra.extreme_eigenpairs(sys, k=1, which="top")
    return float(lam[0])
