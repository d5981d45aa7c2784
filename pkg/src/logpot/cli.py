"""Command line driver.

Exit codes: 0 success, 1 a verified identity or inequality failed, 2 bad
input (config, flags, node cap).  All heavy imports happen inside the
command handlers so that --threads can pin the BLAS thread pools before
numpy loads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

__all__ = ["main", "ConfigError", "TheoremViolation"]


class ConfigError(ValueError):
    """Malformed or missing configuration input."""


class TheoremViolation(Exception):
    """A quantity the library promises to satisfy came out wrong."""


# === small plumbing ===


def _jsonable(obj):
    """Plain-Python view of summaries (numpy scalars/arrays to builtins)."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            cfg = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path!r} must hold a JSON object")
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(outdir: Path, name: str, obj) -> Path:
    path = outdir / name
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")
    return path


def _write_csv(outdir: Path, name: str, header, rows) -> Path:
    import csv

    path = outdir / name
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(header)
        for row in rows:
            wr.writerow(list(row))
    return path


def _seed_of(cfg: dict, args) -> int:
    if args.seed is not None:
        return args.seed
    return int(cfg.get("seed", 0))


def _domain_of(cfg: dict, args):
    from .geometry import domain_from_json

    spec = cfg.get("domain")
    if spec is None:
        raise ConfigError("config needs a 'domain' object")
    if args.h is not None:
        spec = dict(spec)
        spec.pop("h", None)  # the flag overrides a pinned grid step
    try:
        return domain_from_json(spec, h=args.h)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad domain spec: {exc}") from exc


def _weight_of(cfg: dict, key: str, default_c: float = 1.0):
    from .weights import constant, weight_from_json

    spec = cfg.get(key)
    if spec is None:
        return constant(default_c, role=key)
    try:
        return weight_from_json(spec, role=key)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad {key!r} spec: {exc}") from exc


def _node_columns(dim: int) -> list[str]:
    return [f"x{i + 1}" for i in range(dim)]


# === command handlers ===


def cmd_spectrum(cfg: dict, args) -> int:
    import numpy as np

    from . import kernel, spectra

    d = _domain_of(cfg, args)
    w = _weight_of(cfg, "w")
    g = _weight_of(cfg, "g")
    params = cfg.get("params", {})
    mode = params.get("mode", "dense")
    out = _outdir(args)
    nodes = d.nodes

    if mode == "dense":
        sys_ = kernel.assemble(d, w, g)
        sr = spectra.full_spectrum(sys_)
        report = min(int(params.get("report", 16)), sys_.n)
        nvec = min(int(params.get("vectors", 3)), sys_.n)
        summary = {
            "task": "spectrum",
            "mode": "dense",
            "grid": {"h": sys_.h, "n": sys_.n, "dim": sys_.dim},
            "scale": sys_.scale,
            "tau_plus": sr.tau_plus,
            "tau_minus": sr.tau_minus,
            "taus": sr.taus[:report],
            "max_residual": float(sr.residuals.max()),
        }
        vectors = sr.vectors[:, :nvec]
        if params.get("dump_matrix"):
            kernel.dump_matrix(sys_, out / "matrix.bin")
            summary["matrix_file"] = "matrix.bin"
    elif mode == "extremes":
        sys_ = kernel.matrix_free(d, w, g)
        k = min(int(params.get("k", 3)), max(1, sys_.n - 2))
        top, utop = spectra.extreme_eigenpairs(sys_, k=k, which="top")
        bot, ubot = spectra.extreme_eigenpairs(sys_, k=k, which="bottom")
        summary = {
            "task": "spectrum",
            "mode": "extremes",
            "grid": {"h": sys_.h, "n": sys_.n, "dim": sys_.dim},
            "scale": sys_.scale,
            "top": top,
            "bottom": bot,
            "tau_plus": float(top[0]) if top[0] > 0 else None,
            "tau_minus": float(min(bot[0], 0.0)),
        }
        vectors = np.hstack([utop, ubot])
    else:
        raise ConfigError(f"params.mode must be 'dense' or 'extremes', got {mode!r}")

    header = _node_columns(d.dim) + [f"phi_{j + 1}" for j in range(vectors.shape[1])]
    rows = (list(nodes[i]) + list(vectors[i]) for i in range(nodes.shape[0]))
    _write_csv(out, "eigenvectors.csv", header, rows)
    _write_json(out, "summary.json", summary)
    return 0


def cmd_tdiam(cfg: dict, args) -> int:
    from . import transfinite

    d = _domain_of(cfg, args)
    W = None if cfg.get("w") is None else _weight_of(cfg, "w")
    params = cfg.get("params", {})
    eq = transfinite.equilibrium(
        d,
        W,
        max_iters=int(params.get("iters", 200_000)),
        tol=float(params.get("tol", 1e-4)),
    )
    out = _outdir(args)
    header = _node_columns(d.dim) + ["nu"]
    nodes = d.nodes
    _write_csv(
        out,
        "equilibrium.csv",
        header,
        (list(nodes[i]) + [eq.nu[i]] for i in range(nodes.shape[0])),
    )
    _write_json(
        out,
        "summary.json",
        {
            "task": "tdiam",
            "grid": {"h": d.h, "n": d.cell_count, "dim": d.dim},
            "tdiam": eq.tdiam,
            "robin": eq.robin,
            "energy": eq.energy,
            "duality_gap": eq.gap,
            "iters": eq.iters,
            "converged": eq.converged,
        },
    )
    return 0


def cmd_fekete(cfg: dict, args) -> int:
    from . import transfinite
    from .weights import constant

    d = _domain_of(cfg, args)
    W = _weight_of(cfg, "w") if cfg.get("w") is not None else constant(1.0)
    params = cfg.get("params", {})
    if "k" not in params:
        raise ConfigError("fekete needs params.k (number of points)")
    k = int(params["k"])
    res = transfinite.rho_n(
        d, W, k, restarts=int(params.get("restarts", 8)), seed=_seed_of(cfg, args)
    )
    out = _outdir(args)
    _write_csv(
        out,
        "fekete.csv",
        _node_columns(d.dim),
        (list(p) for p in res.points),
    )
    _write_json(
        out,
        "summary.json",
        {
            "task": "fekete",
            "grid": {"h": d.h, "n": d.cell_count, "dim": d.dim},
            "k": res.k,
            "rho": res.rho,
            "log_objective": res.log_objective,
        },
    )
    return 0


def cmd_certify_negative(cfg: dict, args) -> int:
    from . import transfinite

    d = _domain_of(cfg, args)
    w = _weight_of(cfg, "w")
    params = cfg.get("params", {})
    cert = transfinite.negative_certificate(
        d,
        w,
        nmax=int(params.get("nmax", 64)),
        eps0=params.get("eps0"),
        restarts=int(params.get("restarts", 8)),
        seed=_seed_of(cfg, args),
    )
    out = _outdir(args)
    summary = {
        "task": "certify-negative",
        "grid": {"h": d.h, "n": d.cell_count, "dim": d.dim},
        "found": cert.found_n is not None,
        "n": cert.found_n,
        "value": cert.found_value,
        "eps0": cert.eps0,
        "attempts": [
            {"n": a.n, "r_n": a.r_n, "fits": a.fits, "value": a.value, "note": a.note}
            for a in cert.attempts
        ],
    }
    _write_json(out, "summary.json", summary)
    expect = params.get("expect")
    if expect == "negative" and cert.found_n is None:
        raise TheoremViolation("expected a negative certificate, none found")
    if expect == "none" and cert.found_n is not None:
        raise TheoremViolation(
            f"expected no certificate, found one at n = {cert.found_n}"
        )
    return 0


def cmd_polarize(cfg: dict, args) -> int:
    from .geometry import Polarizer, domain_to_json, polarize_domain

    d = _domain_of(cfg, args)
    params = cfg.get("params", {})
    if "normal" not in params:
        raise ConfigError("polarize needs params.normal (axis-aligned vector)")
    try:
        p = Polarizer(tuple(params["normal"]), float(params.get("offset", 0.0)))
        pd = polarize_domain(d, p)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = _outdir(args)
    _write_json(out, "polarized_domain.json", domain_to_json(pd))
    preserved = abs(pd.measure - d.measure) <= 1e-12 * max(d.measure, 1.0)
    _write_json(
        out,
        "summary.json",
        {
            "task": "polarize",
            "cells_before": d.cell_count,
            "cells_after": pd.cell_count,
            "measure_before": d.measure,
            "measure_after": pd.measure,
            "measure_preserved": preserved,
        },
    )
    if not preserved:
        raise TheoremViolation("polarization changed the cell count")
    return 0


def cmd_verify(cfg: dict, args) -> int:
    from . import verify

    seed = _seed_of(cfg, args)
    try:
        results = verify.run_suite(args.suite, seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for c in results:
        print(verify.format_check(c))
    out = _outdir(args)
    _write_json(
        out,
        "summary.json",
        {
            "task": "verify",
            "suite": args.suite,
            "seed": seed,
            "passed": all(c.passed for c in results),
            "checks": [
                {
                    "number": c.number,
                    "name": c.name,
                    "passed": c.passed,
                    "elapsed": c.elapsed,
                    "details": c.details,
                }
                for c in results
            ],
        },
    )
    failed = [c.name for c in results if not c.passed]
    if failed:
        raise TheoremViolation(f"failed checks: {', '.join(failed)}")
    return 0


def cmd_disk_oracle(cfg: dict, args) -> int:
    import numpy as np

    from . import kernel, planar
    from .geometry import make_ball
    from .weights import constant

    params = cfg.get("params", {})
    radius = float(params.get("radius", 1.0))
    h = args.h if args.h is not None else float(params.get("h", 1.0 / 64))
    c = params.get("c")
    d = make_ball(2, (0.0, 0.0), radius, h)
    g1 = constant(1.0, role="g")
    out = _outdir(args)

    if c is None:
        sys_ = kernel.matrix_free(d, constant(1.0), g1)
        got = kernel.apply(sys_, np.ones(sys_.n))
        exact = planar.disk_potential_constant(radius, sys_.grid.nodes)
        scale = float(np.abs(exact).max())
        tag = "potential of 1"
    else:
        c = float(c)
        sys_ = kernel.matrix_free(d, planar.disk_weight(radius, c), g1)
        got = kernel.apply(sys_, np.ones(sys_.n))
        exact = np.full(sys_.n, 2.0 * np.pi * radius**2 * np.log(c))
        scale = max(float(np.abs(exact).max()), np.pi * radius**2)
        tag = f"weighted potential, c = {c}"
    err = np.abs(got - exact)
    nodes = d.nodes
    _write_csv(
        out,
        "disk_oracle.csv",
        _node_columns(2) + ["computed", "exact", "abs_err"],
        (
            [nodes[i, 0], nodes[i, 1], got[i], float(np.asarray(exact)[i]), err[i]]
            for i in range(sys_.n)
        ),
    )
    max_rel = float(err.max()) / scale
    _write_json(
        out,
        "summary.json",
        {
            "task": "disk-oracle",
            "case": tag,
            "grid": {"h": d.h, "n": d.cell_count, "dim": 2},
            "max_abs_err": float(err.max()),
            "scale": scale,
            "max_rel_err": max_rel,
            "tol": 0.01,
        },
    )
    if max_rel > 0.01:
        raise TheoremViolation(f"disk oracle off by {max_rel:.3e} ({tag})")
    return 0


def cmd_converge(cfg: dict, args) -> int:
    from . import spectra
    from .geometry import domain_from_json, make_ball

    w = _weight_of(cfg, "w")
    g = _weight_of(cfg, "g")
    params = cfg.get("params", {})
    which = params.get("which", "top")
    if which not in ("top", "bottom"):
        raise ConfigError(f"params.which must be 'top' or 'bottom', got {which!r}")

    if "radii" in params:
        center = tuple(params.get("center", (0.0, 0.0)))
        h = args.h if args.h is not None else params.get("h")
        if h is None:
            raise ConfigError("converge with params.radii needs --h or params.h")
        radii = [float(r) for r in params["radii"]]
        try:
            domains = [make_ball(len(center), center, r, float(h)) for r in radii]
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        labels = radii
    elif "domains" in params:
        try:
            domains = [domain_from_json(s, h=args.h) for s in params["domains"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"bad domain spec: {exc}") from exc
        labels = params.get("labels", list(range(len(domains))))
    else:
        raise ConfigError("converge needs params.radii or params.domains")
    if len(domains) < 2:
        raise ConfigError("converge needs at least two domains")

    study = spectra.convergence_study(domains, w, g, which=which, labels=labels)
    out = _outdir(args)
    rows = []
    for i, lab in enumerate(study.labels):
        gap = "" if i == 0 else study.gaps[i - 1]
        rows.append([lab, study.ns[i], study.taus[i], gap])
    _write_csv(out, "converge.csv", ["label", "n", "tau", "gap"], rows)
    _write_json(
        out,
        "summary.json",
        {
            "task": "converge",
            "which": which,
            "labels": study.labels,
            "ns": study.ns,
            "taus": study.taus,
            "gaps": study.gaps,
            "nested": study.nested,
            "monotone": study.monotone,
        },
    )
    if study.nested and not study.monotone:
        raise TheoremViolation("tau is not monotone along nested domains")
    return 0


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "tdiam": cmd_tdiam,
    "fekete": cmd_fekete,
    "certify-negative": cmd_certify_negative,
    "polarize": cmd_polarize,
    "verify": cmd_verify,
    "disk-oracle": cmd_disk_oracle,
    "converge": cmd_converge,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logpot",
        description="Weighted logarithmic potential spectra and transfinite diameters.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (domain, w, g, params)")
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--seed", type=int, default=None, help="RNG seed override")
    common.add_argument("--threads", type=int, default=None, help="BLAS/FFT thread cap")
    common.add_argument("--h", type=float, default=None, help="grid step override")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "verify":
            p.add_argument(
                "suite",
                nargs="?",
                default="all",
                help="check suite (monotonicity, polarization, transfinite, "
                "planar, certificate, convergence, all)",
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return 2
        for var in (
            "OMP_NUM_THREADS",
            "OPENBLAS_NUM_THREADS",
            "MKL_NUM_THREADS",
            "NUMEXPR_NUM_THREADS",
        ):
            os.environ[var] = str(args.threads)
    try:
        cfg = _load_config(args.config)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TheoremViolation as exc:
        print(f"violation: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - uniform input-error exit
        from . import kernel
        from .weights import NonPositiveWeightError

        if isinstance(exc, (kernel.NodeCapError, NonPositiveWeightError)):
            print(f"error: {exc}", file=sys.stderr)
            return 2
        raise


if __name__ == "__main__":
    sys.exit(main())
