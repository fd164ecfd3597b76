"""Command-line front end: ``python -m blochspec <command> --config spec.json``.

Exit codes: 0 success / check satisfied, 3 check failed, 1 usage or
configuration error, 2 internal failure. Errors are reported on stderr as
one JSON object. Artifacts are written atomically once the computation has
finished; every artifact carries a header with the parameters used.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .band_tracker import (Rectangle, ResolventLine, default_t_grid, glue_bands, plot_bundle,
                           simplicity_report, track_bands, verify_line, verify_rectangles)
from .bloch_solver import (RECORD_FIELDS, audit_bounds, count_many, disk, disks_disjoint,
                           shooting_eigenpairs, spectrum)
from .coefficients import OperatorSpec, Regime, certify, load_spec, spec_from_dict
from .errors import BlochError, CertificationCounterexample, ConfigurationError
from .expansion import TestFunction, expansion_admissible, reconstruct
from .operator_core import DEFAULT_TOL

log = logging.getLogger("blochspec")

EXIT_OK, EXIT_USAGE, EXIT_INTERNAL, EXIT_FAILED = 0, 1, 2, 3
WORKERS_ENV = "BLOCHSPEC_WORKERS"
COMMANDS = ("certify", "spectrum", "bands", "verify-disks", "verify-even", "expand",
            "audit-bounds")

# per-command defaults for (t_grid, k_range, eps_grid)
DEFAULTS = {
    "certify": (21, 6, 11),
    "spectrum": (21, 6, 11),
    "bands": (21, 6, 11),
    "verify-disks": (21, 6, 11),
    "verify-even": (21, 6, 11),
    "expand": (128, 64, 11),
    "audit-bounds": (21, 6, 11),
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    config: str
    t_grid: int
    k_range: int
    eps_grid: int
    tol: float
    out: str | None
    format: str
    allow_uncertified: bool
    workers: int

    def header(self, spec: OperatorSpec) -> dict:
        head = asdict(self)
        head.pop("workers")
        head["version"] = __version__
        head["spec"] = spec.to_dict()
        return head


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blochspec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="operator spec JSON")
        p.add_argument("--t-grid", type=int, default=None,
                       help="number of t nodes (Gauss-Legendre nodes for expand)")
        p.add_argument("--k-range", type=int, default=None,
                       help="band indices |k| <= K (truncation K for expand)")
        p.add_argument("--eps-grid", type=int, default=None, help="homotopy nodes in [0, 1]")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="integration tolerance")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--allow-uncertified", action="store_true",
                       help="run bands/expand on specs that fail certification")
    return parser


def parse_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    t_default, k_default, e_default = DEFAULTS[args.command]
    cfg = RunConfig(command=args.command, config=args.config,
                    t_grid=t_default if args.t_grid is None else args.t_grid,
                    k_range=k_default if args.k_range is None else args.k_range,
                    eps_grid=e_default if args.eps_grid is None else args.eps_grid,
                    tol=args.tol, out=args.out, format=args.format,
                    allow_uncertified=args.allow_uncertified, workers=_workers())
    if cfg.t_grid < 1 or cfg.eps_grid < 2 or cfg.k_range < 0 or not cfg.tol > 0:
        raise UsageError("--t-grid >= 1, --eps-grid >= 2, --k-range >= 0 and --tol > 0 required")
    return cfg


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, value)


# -- output ---------------------------------------------------------------------------

def atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serialisable: {type(o)}")


def _to_csv(header: dict, rows, fields) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True, default=_json_default) + "\n")
    writer = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_value(row[k]) for k in fields})
    return buf.getvalue()


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def emit(cfg: RunConfig, spec: OperatorSpec, name: str, data: dict, rows=None, fields=None):
    """Write ``name.json`` (or ``name.csv`` from ``rows``) to ``cfg.out``."""
    if cfg.out is None:
        return
    header = cfg.header(spec)
    if cfg.format == "csv" and rows is not None:
        atomic_write(os.path.join(cfg.out, name + ".csv"), _to_csv(header, rows, fields))
    else:
        atomic_write(os.path.join(cfg.out, name + ".json"),
                     _to_json({"header": header, "data": data}))


def _table(rows, fields) -> str:
    lines = ["  ".join(f"{f:>14}" for f in fields)]
    for r in rows:
        cells = []
        for f in fields:
            v = r[f]
            cells.append(f"{v:>14.6g}" if isinstance(v, (float, np.floating)) else f"{v!s:>14}")
        lines.append("  ".join(cells))
    return "\n".join(lines)


def _map(cfg: RunConfig, fn, items):
    items = list(items)
    if cfg.workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _require_certified(cfg: RunConfig, spec: OperatorSpec, admissible: bool):
    if admissible:
        return
    if not cfg.allow_uncertified:
        raise ConfigurationError(
            f"{cfg.command} requires a certified spec; pass --allow-uncertified to override")
    log.warning("running %s on an uncertified spec (override)", cfg.command)


def _certified(spec: OperatorSpec) -> bool:
    try:
        return certify(spec).satisfied
    except ConfigurationError:
        return False


# -- commands -------------------------------------------------------------------------

def cmd_certify(cfg: RunConfig, spec: OperatorSpec) -> int:
    cert = certify(spec)
    data = cert.to_dict()
    emit(cfg, spec, "certificate", data, [data], list(data))
    print(_to_json(data), end="")
    return EXIT_OK if cert.satisfied else EXIT_FAILED


def _spectrum_job(args):
    spec_doc, t, K, tol = args
    spec = spec_from_dict(spec_doc)
    s = spectrum(spec, t, range(-K, K + 1), int_tol=tol)
    pairs = []
    for lam, k, ok in zip(s.lam, s.ks, s.simple):
        if not ok:
            pairs.append(None)
            continue
        try:
            pairs.append(shooting_eigenpairs(spec, t, 1.0, [lam], [int(k)], tol=tol)[0])
        except BlochError:
            pairs.append(None)
    rows = []
    for i, k in enumerate(s.ks):
        p = pairs[i]
        rows.append({"k": int(k), "t": float(t), "eps": 1.0,
                     "re_lambda": s.lam[i].real, "im_lambda": s.lam[i].imag,
                     "alpha_re": p.alpha.real if p else None,
                     "alpha_im": p.alpha.imag if p else None,
                     "proj_norm": p.projection_norm if p else None,
                     "residual": float(s.residual[i]), "count": int(s.count[i]),
                     "gap": s.min_gap()})
    return rows


def cmd_spectrum(cfg: RunConfig, spec: OperatorSpec) -> int:
    ts = default_t_grid(cfg.t_grid)
    jobs = [(spec.to_dict(), float(t), cfg.k_range, cfg.tol) for t in ts]
    rows = [r for block in _map(cfg, _spectrum_job, jobs) for r in block]
    fields = list(RECORD_FIELDS) + ["count"]
    by_t = {}
    for r in rows:
        by_t.setdefault(r["t"], []).append(r)
    bundle = {
        "records": rows,
        "plots": {
            "re_lambda_vs_t": [[r["t"], r["k"], r["re_lambda"]] for r in rows],
            "im_lambda_vs_t": [[r["t"], r["k"], r["im_lambda"]] for r in rows],
            "locus": [[r["re_lambda"], r["im_lambda"]] for r in rows],
            "projection_norm_vs_t": [[r["t"], r["k"], r["proj_norm"]] for r in rows],
        },
    }
    emit(cfg, spec, "spectrum", bundle, rows, fields)
    summary = [{"t": t, "min_gap": block[0]["gap"],
                "max_proj_norm": max((r["proj_norm"] for r in block if r["proj_norm"] is not None),
                                     default=None),
                "unverified": sum(r["count"] != 1 for r in block)} for t, block in by_t.items()]
    print(_table(summary, ["t", "min_gap", "max_proj_norm", "unverified"]))
    return EXIT_OK if all(r["count"] == 1 for r in rows) else EXIT_FAILED


def cmd_bands(cfg: RunConfig, spec: OperatorSpec) -> int:
    _require_certified(cfg, spec, expansion_admissible(spec))
    ks = range(-cfg.k_range, cfg.k_range + 1)
    bands = track_bands(spec, ks, default_t_grid(cfg.t_grid), int_tol=cfg.tol)
    glob = glue_bands(bands, check=False)
    rows = [r for k in sorted(bands) for r in bands[k].rows()]
    emit(cfg, spec, "bands", plot_bundle(glob), rows, ["t", "re_lambda", "im_lambda", "k"])
    summary = [{"k": k, "max_jump": bands[k].max_jump,
                "junction": next((j[3] for j in glob.junctions if j[0] == k), None)}
               for k in sorted(bands)]
    print(_table(summary, ["k", "max_jump", "junction"]))
    ok = all(j[3] <= 1e-6 * max(1.0, abs(j[1])) for j in glob.junctions)
    return EXIT_OK if ok else EXIT_FAILED


def _disk_job(args):
    spec_doc, t, K, tol = args
    spec = spec_from_dict(spec_doc)
    disks = [disk(spec, k, t) for k in range(-K, K + 1)]
    usable = [d for d in disks if d.radius > 0]
    counts = dict.fromkeys(range(-K, K + 1), None)
    if usable:
        for d, c in zip(usable, count_many(spec, t, 1.0, [d.circle() for d in usable])):
            counts[d.k] = c
    disjoint = disks_disjoint(disks)
    return [{"t": float(t), "k": d.k, "re_center": d.center.real, "im_center": d.center.imag,
             "radius": d.radius, "count": counts[d.k] if counts[d.k] is not None else -1,
             "disjoint": disjoint} for d in disks]


def cmd_verify_disks(cfg: RunConfig, spec: OperatorSpec) -> int:
    if spec.regime is not Regime.ODD:
        raise ConfigurationError("verify-disks applies to odd order")
    jobs = [(spec.to_dict(), float(t), cfg.k_range, cfg.tol) for t in default_t_grid(cfg.t_grid)]
    rows = [r for block in _map(cfg, _disk_job, jobs) for r in block]
    fields = ["t", "k", "re_center", "im_center", "radius", "count", "disjoint"]
    emit(cfg, spec, "disks", {"disks": rows}, rows, fields)
    # degenerate disks (radius 0) are excluded from counting and reported with count -1
    failed = [r for r in rows if (r["radius"] > 0 and r["count"] != 1) or not r["disjoint"]]
    print(f"disks checked: {len(rows)}, degenerate: {sum(r['radius'] == 0 for r in rows)}, "
          f"failed: {len(failed)}")
    return EXIT_OK if not failed else EXIT_FAILED


def cmd_verify_even(cfg: RunConfig, spec: OperatorSpec) -> int:
    if spec.regime is Regime.ODD:
        raise ConfigurationError("verify-even applies to even order")
    ts = default_t_grid(cfg.t_grid)
    eps = np.linspace(0.0, 1.0, cfg.eps_grid)
    K = cfg.k_range
    report = simplicity_report(spec, ts, K)
    rows = []
    for t in ts:
        rects = [Rectangle.build(spec, k, t, K) for k in range(-K, K + 1)]
        table = verify_rectangles(spec, rects, eps)
        lines = verify_line(spec, ResolventLine.horizontal(spec, -K - 1, t), eps, K=K)
        for r, counts in zip(rects, table):
            rows.append({"t": float(t), "k": r.k, "min_count": int(counts.min()),
                         "max_count": int(counts.max()), "line_margin": lines.margin})
    data = {"simplicity_margin": report.min_gap, "worst_t": report.worst_t, "rectangles": rows}
    emit(cfg, spec, "verify_even", data, rows, ["t", "k", "min_count", "max_count",
                                                 "line_margin"])
    ok = report.min_gap > 0 and all(r["min_count"] == r["max_count"] == 1 for r in rows)
    print(f"simplicity margin {report.min_gap:.6g} at t={report.worst_t:.4g}; "
          f"rectangles checked {len(rows)}; all counts 1: {ok}")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_expand(cfg: RunConfig, spec: OperatorSpec) -> int:
    admissible = expansion_admissible(spec)
    _require_certified(cfg, spec, admissible)
    f = TestFunction.raised_cosine(0.0, 3.0)
    result = reconstruct(f, spec, cfg.k_range, cfg.t_grid, allow_uncertified=True)
    rows = [{"x": float(x), "re_f": a.real, "im_f": a.imag, "re_fhat": b.real,
             "im_fhat": b.imag} for x, a, b in zip(result.x, result.f, result.fhat)]
    data = result.to_dict()
    data["max_projection_norm"] = result.max_projection_norm
    if cfg.out is not None:
        header = cfg.header(spec)
        atomic_write(os.path.join(cfg.out, "expansion.json"),
                     _to_json({"header": header, "data": data}))
        atomic_write(os.path.join(cfg.out, "reconstruction.csv"),
                     _to_csv(header, rows, ["x", "re_f", "im_f", "re_fhat", "im_fhat"]))
    print(f"K={result.K} nodes={cfg.t_grid} relative L2 error {result.l2_error:.3e} "
          f"energy {result.energy:.6g} (|f|^2 = {f.l2_norm() ** 2:.6g})")
    return EXIT_OK


def _audit_job(args):
    spec_doc, t, K, tol = args
    spec = spec_from_dict(spec_doc)
    s = spectrum(spec, t, range(-K, K + 1), int_tol=tol)
    rows = []
    good = s.simple
    pairs = shooting_eigenpairs(spec, t, 1.0, s.lam[good], [int(k) for k in s.ks[good]], tol=tol)
    for p in pairs:
        a = audit_bounds(p, spec)
        rows.append({"t": float(t), "k": p.k, "passed": a.all_passed,
                     "worst_ratio": a.worst_ratio(), "parseval_defect": a.parseval_defect})
    for k in s.ks[~good]:
        rows.append({"t": float(t), "k": int(k), "passed": False, "worst_ratio": None,
                     "parseval_defect": None})
    return rows


def cmd_audit_bounds(cfg: RunConfig, spec: OperatorSpec) -> int:
    jobs = [(spec.to_dict(), float(t), cfg.k_range, cfg.tol) for t in default_t_grid(cfg.t_grid)]
    rows = [r for block in _map(cfg, _audit_job, jobs) for r in block]
    fields = ["t", "k", "passed", "worst_ratio", "parseval_defect"]
    emit(cfg, spec, "audit", {"audits": rows}, rows, fields)
    failed = [r for r in rows if not r["passed"] or abs(r["parseval_defect"]) >= 1e-6]
    print(f"eigenpairs audited: {len(rows)}, failed: {len(failed)}")
    return EXIT_OK if not failed else EXIT_FAILED


HANDLERS = {
    "certify": cmd_certify,
    "spectrum": cmd_spectrum,
    "bands": cmd_bands,
    "verify-disks": cmd_verify_disks,
    "verify-even": cmd_verify_even,
    "expand": cmd_expand,
    "audit-bounds": cmd_audit_bounds,
}


def _fail(code: int, exc: BaseException) -> int:
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(argv)
        spec = load_spec(cfg.config)
    except (UsageError, ConfigurationError) as exc:
        return _fail(EXIT_USAGE, exc)
    try:
        return HANDLERS[cfg.command](cfg, spec)
    except ConfigurationError as exc:
        return _fail(EXIT_USAGE, exc)
    except CertificationCounterexample as exc:
        return _fail(EXIT_FAILED, exc)
    except Exception as exc:  # noqa: BLE001 - every other failure is internal
        return _fail(EXIT_INTERNAL, exc)


if __name__ == "__main__":
    sys.exit(main())
