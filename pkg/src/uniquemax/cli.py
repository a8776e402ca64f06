"""Command-line interface: ``uniquemax <command> [options]``.

Exit codes: 0 success (or a unique maximum), 2 usage or invalid input
(including a subspace that fails a precondition such as alternation),
3 non-unique maximum certified, 4 inconclusive falsification, 5 numeric
failure inside a computation.
"""
import argparse
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import alternating, certifier, falsifier, witness
from .core import Subspace
from .errors import NotAlternating, PreconditionError, UniqueMaxError
from .grid import build_grid

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NON_UNIQUE = 3
EXIT_INCONCLUSIVE = 4
EXIT_NUMERIC = 5

COMMANDS = ("witness", "certify", "bounds", "alternate", "falsify", "conjecture", "grid-dump")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    subspace: object = None
    subspace_path: str = None
    dim: int = None
    coefs: tuple = None
    resolution: int = 33
    cluster_radius: float = None
    tol_gap: float = falsifier.DEFAULT_TOL
    budget: int = falsifier.DEFAULT_BUDGET
    seed: int = 0
    output: str = None
    format: str = "json"
    extra: dict = field(default_factory=dict)


def _coef_list(text):
    try:
        vals = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"coefficients must be comma-separated numbers, got {text!r}")
    return vals


def _parser():
    p = argparse.ArgumentParser(prog="uniquemax",
                                description="Unique-maximum subspaces of C0(R^n): certify and stress-test.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, subspace=True, resolution=True):
        if subspace:
            sp.add_argument("--subspace", required=True, help="subspace spec (JSON)")
        if resolution:
            sp.add_argument("--resolution", type=int, default=33, help="grid points per axis (>= 3)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--output", "-o", help="write here instead of stdout")

    sp = sub.add_parser("witness", help="closed-form maximum of a witness-subspace element")
    sp.add_argument("--dim", type=int, help="ambient dimension (defaults to the number of coefficients)")
    sp.add_argument("--coefs", type=_coef_list, required=True)
    common(sp, subspace=False, resolution=False)

    sp = sub.add_parser("certify", help="grid certificate of a unique global maximum")
    sp.add_argument("--coefs", type=_coef_list, required=True)
    sp.add_argument("--cluster-radius", type=float)
    sp.add_argument("--no-refine", action="store_true")
    common(sp)

    sp = sub.add_parser("bounds", help="sign bounds, norm equivalence and tail radius")
    sp.add_argument("--probes", type=int, default=100)
    sp.add_argument("--threshold", type=float, help="tail threshold N (default: half the sign bound)")
    common(sp)

    sp = sub.add_parser("alternate", help="extract an alternating subspace of one dimension less")
    sp.add_argument("--probes", type=int, default=1000)
    common(sp)

    sp = sub.add_parser("falsify", help="search for an element with two equal maxima")
    sp.add_argument("--tol", type=float, default=falsifier.DEFAULT_TOL)
    sp.add_argument("--budget", type=int, default=falsifier.DEFAULT_BUDGET)
    sp.add_argument("--mode", choices=("extract", "conjecture"), default="extract")
    sp.add_argument("--cluster-radius", type=float)
    common(sp)

    sp = sub.add_parser("conjecture", help="probe random (n+1)-dimensional candidates (JSON lines)")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--family", default="gaussians")
    sp.add_argument("--trials", type=int, default=5)
    sp.add_argument("--tol", type=float, default=falsifier.DEFAULT_TOL)
    sp.add_argument("--budget", type=int, default=falsifier.DEFAULT_BUDGET)
    common(sp, subspace=False)

    sp = sub.add_parser("grid-dump", help="two-chart grid points as CSV")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--format", choices=("csv",), default="csv")
    common(sp, subspace=False)
    return p


def parse_args(argv):
    """Parse and validate ``argv`` into a RunConfig; bad input raises SystemExit(2)."""
    parser = _parser()
    ns = parser.parse_args(argv)
    try:
        cfg = _validate(ns)
    except UsageError as exc:
        parser.error(str(exc))
    return cfg


def _validate(ns):
    cfg = RunConfig(ns.command, seed=ns.seed, output=ns.output)
    if ns.seed < 0:
        raise UsageError("--seed must be nonnegative")
    if hasattr(ns, "resolution"):
        if ns.resolution < 3:
            raise UsageError(f"--resolution must be >= 3, got {ns.resolution}")
        cfg.resolution = ns.resolution
    if ns.output:
        parent = os.path.dirname(os.path.abspath(ns.output))
        if not os.path.isdir(parent):
            raise UsageError(f"output directory {parent} does not exist")
    if getattr(ns, "subspace", None):
        cfg.subspace_path = ns.subspace
        try:
            with open(ns.subspace) as fh:
                cfg.subspace = Subspace.from_dict(json.load(fh))
        except OSError as exc:
            raise UsageError(f"cannot read subspace spec: {exc}")
        except (ValueError, UniqueMaxError) as exc:
            raise UsageError(f"invalid subspace spec {ns.subspace}: {exc}")
    for name in ("dim", "coefs", "cluster_radius", "budget"):
        if getattr(ns, name, None) is not None:
            setattr(cfg, name, getattr(ns, name))
    if getattr(ns, "tol", None) is not None:
        if not ns.tol > 0:
            raise UsageError("--tol must be positive")
        cfg.tol_gap = ns.tol
    if cfg.cluster_radius is not None and not cfg.cluster_radius > 0:
        raise UsageError("--cluster-radius must be positive")
    if cfg.dim is not None and cfg.dim < 1:
        raise UsageError("--dim must be positive")
    if cfg.coefs is not None and cfg.subspace is not None and len(cfg.coefs) != cfg.subspace.dim:
        raise UsageError(f"--coefs has {len(cfg.coefs)} entries but the subspace has dimension "
                         f"{cfg.subspace.dim}")
    if ns.command == "witness" and cfg.dim is not None and cfg.dim != len(cfg.coefs):
        raise UsageError(f"--coefs has {len(cfg.coefs)} entries but --dim is {cfg.dim}")
    if getattr(ns, "format", None):
        cfg.format = ns.format
    for name in ("probes", "threshold", "mode", "family", "trials", "no_refine"):
        if hasattr(ns, name):
            cfg.extra[name] = getattr(ns, name)
    if cfg.extra.get("probes") is not None and cfg.extra["probes"] < 1:
        raise UsageError("--probes must be positive")
    if cfg.extra.get("trials") is not None and cfg.extra["trials"] < 0:
        raise UsageError("--trials must be nonnegative")
    return cfg


def dumps(obj):
    """Canonical JSON: sorted keys, shortest round-trip float repr."""
    return json.dumps(obj, sort_keys=True, default=_default)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_atomic(path, text):
    """Write via a temporary file in the target directory and rename over ``path``."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".uniquemax-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(cfg, text):
    if text and not text.endswith("\n"):
        text += "\n"
    if cfg.output:
        write_atomic(cfg.output, text)
    else:
        sys.stdout.write(text)


def _grid(cfg, n):
    return build_grid(n, cfg.resolution)


def _cmd_witness(cfg):
    res = witness.analytic_max(np.array(cfg.coefs))
    return res.to_dict(), EXIT_OK


def _cmd_certify(cfg):
    s = cfg.subspace
    cert = certifier.certify_max(s, np.array(cfg.coefs), _grid(cfg, s.ambient_dim),
                                 cluster_radius=cfg.cluster_radius,
                                 refine=not cfg.extra.get("no_refine"))
    code = EXIT_OK if cert.cluster_count <= 1 else EXIT_NON_UNIQUE
    return cert.to_dict(), code


def _cmd_bounds(cfg):
    s = cfg.subspace
    grid = _grid(cfg, s.ambient_dim)
    probes = cfg.extra.get("probes") or 100
    eq = alternating.estimate_norm_equivalence(s, grid, probes=max(probes, 1000), seed=cfg.seed)
    sb = alternating.sign_bounds(s, grid, probes=probes, seed=cfg.seed)
    tr = alternating.tail_radius(s, sb, eq, N=cfg.extra.get("threshold"), probes=probes,
                                 seed=cfg.seed)
    return {"sign_bounds": sb.to_dict(), "norm_equivalence": eq.to_dict(),
            "tail_radius": tr.to_dict(), "grid_resolution": cfg.resolution}, EXIT_OK


def _cmd_alternate(cfg):
    s = cfg.subspace
    grid = _grid(cfg, s.ambient_dim)
    sep = alternating.separating_functional(s, grid, cfg.seed)
    t = alternating.extract_alternating(s, grid, cfg.seed, separation=sep)
    _, C = alternating.root_coefficients(t)
    report = alternating.alternation_report(t, grid, cfg.extra.get("probes") or 1000, cfg.seed)
    return {"functional": sep.to_dict(), "coefficients": C.tolist(), "subspace": t.to_dict(),
            "probe_report": report, "grid_resolution": cfg.resolution}, EXIT_OK


def _cmd_falsify(cfg):
    s = cfg.subspace
    rep = falsifier.falsify(s, _grid(cfg, s.ambient_dim), cfg.tol_gap, cfg.budget, cfg.seed,
                            mode=cfg.extra.get("mode") or "extract",
                            cluster_radius=cfg.cluster_radius, family=cfg.subspace_path)
    return rep.to_dict(), EXIT_OK if rep.witness is not None else EXIT_INCONCLUSIVE


def _cmd_conjecture(cfg):
    reps = falsifier.conjecture_probe(cfg.dim, cfg.extra["family"], cfg.extra["trials"], cfg.seed,
                                      cfg.resolution, cfg.tol_gap, cfg.budget)
    lines = [rep.to_dict() for rep in reps]
    code = EXIT_OK if all(r.witness is not None for r in reps) else EXIT_INCONCLUSIVE
    return lines, code


def _cmd_grid_dump(cfg):
    buf = io.StringIO()
    _grid(cfg, cfg.dim).to_csv(buf)
    return buf.getvalue(), EXIT_OK


HANDLERS = {"witness": _cmd_witness, "certify": _cmd_certify, "bounds": _cmd_bounds,
            "alternate": _cmd_alternate, "falsify": _cmd_falsify, "conjecture": _cmd_conjecture,
            "grid-dump": _cmd_grid_dump}


def run(cfg):
    """Execute a validated config; returns the process exit code."""
    try:
        out, code = HANDLERS[cfg.command](cfg)
    except (PreconditionError, NotAlternating) as exc:
        print(f"uniquemax {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UniqueMaxError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"uniquemax {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if isinstance(out, str):
        text = out
    elif isinstance(out, list):
        text = "".join(dumps(o) + "\n" for o in out)
    else:
        text = dumps(out)
    _emit(cfg, text)
    return code


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
