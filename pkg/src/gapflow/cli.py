"""Command line front end.

Every command writes ``<out>/<command>-<timestamp>/`` holding ``input.json``,
``report.json`` and, for per-t sweeps, ``gaps.csv``.  Exit codes: 0 pass,
1 certified failure, 2 invalid input.
"""
import argparse
import csv
import io as _stdio
import json
import os
import sys
import time
from importlib import resources

import numpy as np

from . import __version__
from . import io as tio
from .certify import (MIX_CSV_HEADER, PATH_CSV_HEADER, mixed_length_certificate, smoothness_probe,
                      verify_path)
from .edgestates import (LEFT, RIGHT, EdgeStateSpec, LocalObservable, boundary_limit_check,
                         frustration_check, surjectivity_check)
from .errors import GapflowError, InvalidWindow, ParseError, ShapeError, TooLarge
from .groundspace import gamma_matrix, intersection_check
from .hamiltonian import DENSE_CAP, TAU_KER, assemble, build_interaction, certify_gap_inequality, kernel_and_gap
from .pathlab import connect, normalize_path, path_from_dict, z_membership
from .transfer import NORM_CONVENTION, KrausTuple, gap_constants, spectral_data

EXIT_PASS, EXIT_FAIL, EXIT_INVALID = 0, 1, 2
BUILTIN = {"aklt": "aklt.json"}


class InvalidInput(Exception):
    pass


def jsonable(x):
    """Convert numpy scalars/arrays and complex numbers for JSON output."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return tio.encode_array(x)
        return jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return tio.encode_complex(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if np.isnan(x) or np.isinf(x):
            return None if np.isnan(x) else ("inf" if x > 0 else "-inf")
        return x
    return x


def load_input(source: str) -> KrausTuple:
    if source in BUILTIN:
        data = resources.files("gapflow").joinpath("data", BUILTIN[source]).read_bytes()
        return tio.parse_tuple_file(data)
    if not os.path.exists(source):
        raise InvalidInput(f"input file not found: {source}")
    with open(source, "rb") as fh:
        return tio.parse_tuple_file(fh.read())


def _need(args, name):
    v = getattr(args, name)
    if v is None:
        raise InvalidInput(f"--{name.replace('_', '-')} is required for {args.command}")
    return v


def _positive(args):
    for name in ("tol_ker",):
        if getattr(args, name) <= 0:
            raise InvalidInput(f"--{name.replace('_', '-')} must be positive")
    for name in ("m", "m2", "l", "N", "grid"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            raise InvalidInput(f"--{name} must be positive")


def _header(args) -> dict:
    return {"tool": "gapflow", "version": __version__, "command": args.command,
            "norm_convention": NORM_CONVENTION,
            "tolerances": {"tol_ker": args.tol_ker}, "grid": args.grid, "seed": args.seed}


# --------------------------------------------------------------------------- commands

def cmd_analyze(args, B):
    sd = spectral_data(B)
    rep = {"spectral": sd.summary(), "transfer_eigenvalues": sorted(sd.eigenvalues.tolist(),
                                                                    key=lambda z: (-abs(z), z.real, z.imag))}
    rep["e"], rep["rho"] = sd.e, sd.rho
    ok = sd.primitive
    if sd.primitive:
        gc = gap_constants(B, sd)
        rep["gap_constants"] = {"E_table": gc.E[:20].tolist(), "F": gc.F, "L": gc.L, "lbar": gc.lbar,
                                "N_cap": gc.N_cap, "tail": gc.tail, "envelope_rate": gc.envelope_rate,
                                "envelope_const": gc.envelope_const}
        rep["certified_intersection_length"] = sd.s + 1
    return rep, ok, None


def cmd_groundspace(args, B):
    m = args.m or 2
    Nmax = args.N or m + 4
    inj = []
    for N in range(1, Nmax + 1):
        g = gamma_matrix(B, N)
        inj.append({"N": N, "rank": g.dim, "injective": g.injective, "sigma_min": g.sigma_min})
    rep = {"injectivity": inj, "intersection": intersection_check(B, m, Nmax).as_dict()}
    return rep, rep["intersection"]["empirical_pass"], None


def cmd_gap(args, B):
    m, l, N = _need(args, "m"), _need(args, "l"), _need(args, "N")
    H = assemble(build_interaction(B, m), N, args.dense_cap)
    ref = gamma_matrix(B, N).space
    kg = kernel_and_gap(H, B.k**2, args.tol_ker, reference=ref)
    ineq = certify_gap_inequality(B, m, l, N)
    rep = {"kernel_dim": kg.kernel.dim, "gap": kg.gap, "kernel_distance": kg.distance_to_reference,
           "lowest_eigenvalues": kg.eigenvalues, "inequality": vars(ineq)}
    return rep, ineq.passed and kg.gap > 0, None


def _rand_density(rng, k):
    X = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    w = X @ X.conj().T
    return w / np.trace(w).real


def cmd_edge(args, B):
    m = args.m or 2
    seed = 0 if args.seed is None else args.seed
    rng = np.random.default_rng(seed)
    sd = spectral_data(B)
    k = B.k
    rank = surjectivity_check(B, m, sd)
    fr = []
    for _ in range(5):
        for side in (RIGHT, LEFT):
            spec = EdgeStateSpec(side, _rand_density(rng, k))
            fr.append({"side": side, "value": frustration_check(B, m, spec, 3, sd)})
    fr.append({"side": "bulk", "value": frustration_check(B, m, "bulk", 3, sd)})
    C = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    obs = LocalObservable((0, 1), np.diag(rng.normal(size=B.n**2)))
    Nmax = args.N or 9
    rows = boundary_limit_check(B, C, obs, list(range(3, Nmax + 1)), sd)
    rep = {"surjectivity_rank": rank, "frustration": fr, "limits": [vars(r) for r in rows]}
    ok = rank == k * k and max(f["value"] for f in fr) <= 1e-9 and all(r.passed for r in rows)
    return rep, ok, None


def _build_path(args, A, E):
    m = args.m or 2 * A.k * (A.k - 1) + 3
    seed = 0 if args.seed is None else args.seed
    return normalize_path(connect(A, E, m, seed=seed)), m


def cmd_connect(args, A):
    E = load_input(_need(args, "input_b"))
    path, m = _build_path(args, A, E)
    ts = np.linspace(0, 1, 103)[1:-1]
    members = [bool(path.membership(t)[0]) for t in ts]
    numeric = [bool(z_membership(path.evaluate(t))[0]) for t in ts]
    rep = {"m": m, "path": path.to_dict(),
           "endpoint_error": [float(np.abs(path.base.evaluate(0.0) - A.mats).max()),
                              float(np.abs(path.base.evaluate(1.0) - E.mats).max())],
           "junction_jumps": path.junction_jumps(), "breakpoints": path.breakpoints,
           "interior_grid": len(ts), "witness_membership": all(members),
           "numeric_membership_count": int(sum(numeric))}
    return rep, all(members), None


def _path_for(args, A):
    if args.path:
        with open(args.path, "rb") as fh:
            d = json.loads(fh.read())
        return path_from_dict(d.get("path", d))
    E = load_input(_need(args, "input_b"))
    return _build_path(args, A, E)[0]


def cmd_verify_path(args, A):
    path = _path_for(args, A)
    k = path.k
    m = args.m or k**4 + 1
    l = args.l or m
    N = args.N or l + 1
    cert = verify_path(path, m, l, N, args.grid or 21, args.tol_ker, args.dense_cap, seed=args.seed)
    probe = smoothness_probe(path, 5)
    rep = {"certificate": cert.to_dict(),
           "smoothness": {"all_stable": probe["all_stable"],
                          "breakpoint_differences": [b["difference"] for b in probe["breakpoints"]],
                          "ratios": [p["ratio"] for p in probe["probes"]]}}
    return rep, cert.passed, (PATH_CSV_HEADER, cert.csv_rows(PATH_CSV_HEADER))


def cmd_mix_lengths(args, B):
    m, m2 = _need(args, "m"), _need(args, "m2")
    N = args.N or max(m, m2) + 2
    cert = mixed_length_certificate(B, m, m2, N, args.grid or 11, args.tol_ker, args.dense_cap, args.seed)
    return {"certificate": cert.to_dict()}, cert.passed, (MIX_CSV_HEADER, cert.csv_rows(MIX_CSV_HEADER))


def cmd_chain(args, A):
    """mix(A: m -> M), verify_path(M), mix(E: M -> m2)."""
    E = load_input(_need(args, "input_b"))
    k = A.k
    m = args.m or 3
    m2 = args.m2 or 3
    M = args.M or max(m, m2, k**4 + 1)
    path, _ = _build_path(argparse.Namespace(m=M, seed=args.seed), A, E)
    N = args.N or M + 1
    grid = args.grid or 21
    c1 = mixed_length_certificate(A, m, M, N, 11, args.tol_ker, args.dense_cap, args.seed) if m != M else None
    c2 = verify_path(path, M, M, N, grid, args.tol_ker, args.dense_cap, seed=args.seed)
    c3 = mixed_length_certificate(E, M, m2, N, 11, args.tol_ker, args.dense_cap, args.seed) if m2 != M else None
    certs = [c for c in (c1, c2, c3) if c is not None]
    rep = {"M": M, "m": m, "m2": m2, "N": N,
           "certificates": [c.to_dict() for c in certs],
           "passed": [c.passed for c in certs]}
    return rep, all(c.passed for c in certs), (PATH_CSV_HEADER, c2.csv_rows(PATH_CSV_HEADER))


COMMANDS = {
    "analyze": cmd_analyze,
    "groundspace": cmd_groundspace,
    "gap": cmd_gap,
    "edge": cmd_edge,
    "connect": cmd_connect,
    "verify-path": cmd_verify_path,
    "mix-lengths": cmd_mix_lengths,
    "chain": cmd_chain,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gapflow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"gapflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--input", required=True, help="tuple JSON file or a builtin name (aklt)")
        s.add_argument("--input-b", dest="input_b", help="second tuple (connect, verify-path, chain)")
        s.add_argument("--path", help="path JSON written by connect (verify-path)")
        s.add_argument("--m", type=int)
        s.add_argument("--m2", type=int)
        s.add_argument("--M", type=int, help="override of the path interaction length (chain)")
        s.add_argument("--l", type=int)
        s.add_argument("--N", type=int)
        s.add_argument("--grid", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--out", default="runs")
        s.add_argument("--tol-ker", dest="tol_ker", type=float, default=TAU_KER)
        s.add_argument("--dense-cap", dest="dense_cap", type=int, default=DENSE_CAP)
    return p


def _run_dir(out, command):
    stamp = time.strftime("%Y%m%dT%H%M%S")
    base = os.path.join(out, f"{command}-{stamp}")
    d, i = base, 1
    while os.path.exists(d):
        d = f"{base}-{i}"
        i += 1
    os.makedirs(d)
    return d


def write_csv(path, header, rows):
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                    for v in r])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_PASS
    try:
        _positive(args)
        B = load_input(args.input)
        rep, ok, table = COMMANDS[args.command](args, B)
    except (InvalidInput, ParseError, ShapeError, InvalidWindow, TooLarge, ValueError) as exc:
        print(f"gapflow {args.command}: invalid input: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except GapflowError as exc:
        print(f"gapflow {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    d = _run_dir(args.out, args.command)
    inp = {"argv": list(argv) if argv is not None else sys.argv[1:], "input": tio.tuple_to_dict(B)}
    inp.update({k: v for k, v in vars(args).items() if k not in ("input",)})
    with open(os.path.join(d, "input.json"), "w", encoding="utf-8") as fh:
        fh.write(tio.dumps(jsonable(inp)))
    report = _header(args)
    report.update(rep)
    report["pass"] = bool(ok)
    with open(os.path.join(d, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(tio.dumps(jsonable(report)))
    if args.command == "verify-path":
        with open(os.path.join(d, "certificate.json"), "w", encoding="utf-8") as fh:
            fh.write(tio.dumps(jsonable(rep["certificate"])))
    if table is not None:
        write_csv(os.path.join(d, "gaps.csv"), *table)
    print(d)
    if not ok:
        print(f"gapflow {args.command}: certificate did not pass", file=sys.stderr)
    return EXIT_PASS if ok else EXIT_FAIL


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
