"""Command-line entry point.

Exit codes: 0 certified / agree, 1 input error, 2 not found, 3 indeterminate,
4 verification failed.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import certify, copositive, graphs
from .gram import FACE_TOL, MEMBER_THRESHOLD

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_FOUND = 2
EXIT_INDETERMINATE = 3
EXIT_VERIFY = 4

SOLVER_TOL = 1e-9
AGREE_TOL = 1e-3


class InputError(Exception):
    pass


@dataclass
class RunReport:
    command: list[str]
    inputs_digest: str
    tolerances: dict[str, float]
    seed: int | None = None
    verdicts: list[str] = field(default_factory=list)
    margins: dict[str, float] = field(default_factory=dict)
    levels: dict[str, object] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    certificates: list[str] = field(default_factory=list)
    rows: list[dict] = field(default_factory=list)
    exit_code: int = 0

    def to_text(self, timings: bool = True) -> str:
        out = [f"command: {' '.join(self.command)}", f"inputs: sha256:{self.inputs_digest}"]
        out.append("tolerances: " + ", ".join(f"{k}={v:g}" for k, v in sorted(self.tolerances.items())))
        if self.seed is not None:
            out.append(f"seed: {self.seed}")
        out.extend(self.verdicts)
        for k, v in self.levels.items():
            out.append(f"{k}: {_fmt(v)}")
        for row in self.rows:
            out.append("  " + "  ".join(f"{k}={_fmt(v)}" for k, v in row.items()))
        for p in self.certificates:
            out.append(f"certificate: {p}")
        if timings:
            out.append("timings: " + ", ".join(f"{k}={v:.3f}s" for k, v in self.timings.items()))
        out.append(f"exit: {self.exit_code}")
        return "\n".join(out)

    def to_json(self, timings: bool = True) -> str:
        d = asdict(self)
        if not timings:
            d.pop("timings")
        return json.dumps(d, indent=2, sort_keys=True, default=str)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    if isinstance(v, list):
        return "[" + ",".join(_fmt(x) for x in v) + "]"
    return str(v)


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _tolerances(args) -> dict[str, float]:
    return {"threshold": args.threshold, "solver_tol": args.tol, "face_tol": args.face_tol}


# -- certify -----------------------------------------------------------------------


def _search(M, args, report: RunReport, label: str = "") -> tuple[int, object]:
    """Run the level search on ``M``; fill the report; return (exit code, certificate)."""
    t0 = time.perf_counter()
    res = copositive.min_level(
        M, args.r_max, threshold=args.threshold, tol=args.tol, face_tol=args.face_tol
    )
    report.timings[f"{label}search"] = time.perf_counter() - t0
    for r, mem in sorted(res.memberships.items()):
        how = "face-restricted" if mem.reduced else "full"
        report.verdicts.append(
            f"{label}r={r}: {mem.verdict.value} [gram.decide, {how} margin {mem.margin:.3e}, "
            f"raw {mem.raw_margin:.3e}, threshold {args.threshold:g}, solver tol {args.tol:g}]"
        )
        report.margins[f"{label}r={r}"] = mem.margin
    report.levels[f"{label}level"] = str(res)
    if not res.found:
        return (EXIT_INDETERMINATE if res.indeterminate else EXIT_NOT_FOUND), None
    if not args.exact:
        return EXIT_OK, None
    t0 = time.perf_counter()
    enc = res.encodings[res.level]
    mem = res.memberships[res.level]
    try:
        cert = certify.exactify(enc, mem.solution)
    except certify.RoundingFailure as exc:
        report.verdicts.append(f"{label}exact: failed [certify.exactify: {exc}]")
        report.timings[f"{label}exact"] = time.perf_counter() - t0
        return EXIT_INDETERMINATE, None
    report.timings[f"{label}exact"] = time.perf_counter() - t0
    report.verdicts.append(
        f"{label}exact: verified r={cert.r}, {len(cert.squares)} squares [certify.verify, exact arithmetic]"
    )
    return EXIT_OK, cert


def _emit(cert, out: str | None, report: RunReport) -> int:
    if cert is None or out is None:
        return EXIT_OK
    try:
        certify.write_certificate(cert, out)
    except certify.CertificateError as exc:
        report.verdicts.append(f"write: {exc}")
        return EXIT_VERIFY
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc.strerror}") from None
    report.certificates.append(out)
    return EXIT_OK


def cmd_certify(args, report: RunReport) -> int:
    from .symmat import parse_matrix

    data = _read_bytes(args.matrix)
    report.inputs_digest = _digest(data)
    try:
        M = parse_matrix(data.decode())
    except (ValueError, UnicodeDecodeError) as exc:
        raise InputError(f"{args.matrix}: {exc}") from None
    code, cert = _search(M, args, report)
    if code == EXIT_OK:
        code = _emit(cert, args.out, report)
    return code


# -- theta -------------------------------------------------------------------------


def cmd_theta(args, report: RunReport) -> int:
    data = _read_bytes(args.graph)
    report.inputs_digest = _digest(data)
    try:
        G = graphs.parse_graph(data.decode())
    except (ValueError, UnicodeDecodeError) as exc:
        raise InputError(f"{args.graph}: {exc}") from None
    if G.n == 0:
        raise InputError("theta needs a graph with at least one vertex")
    report.tolerances["agree_tol"] = args.agree_tol
    t0 = time.perf_counter()
    a = graphs.alpha(G)
    report.timings["alpha"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    res = graphs.theta_r_full(G, args.r, tol=args.tol)
    report.timings["theta"] = time.perf_counter() - t0
    report.levels["alpha"] = a
    report.margins[f"theta^({args.r})"] = res.value
    if res.status.value != "Optimal":
        report.verdicts.append(f"theta^({args.r}): {res.status.value} [sdp.solve, tol {args.tol:g}]")
        return EXIT_INDETERMINATE
    agree = abs(res.value - a) <= args.agree_tol
    report.verdicts.append(f"alpha = {a} [graphs.alpha, exact]")
    report.verdicts.append(
        f"theta^({args.r}) = {res.value:.6f} [graphs.theta_r, solver tol {args.tol:g}]; "
        f"{'agree' if agree else 'differ'} within {args.agree_tol:g}"
    )
    return EXIT_OK if agree else EXIT_NOT_FOUND


# -- horn --------------------------------------------------------------------------


def _parse_d(text: str) -> tuple[Fraction, ...]:
    try:
        d = tuple(Fraction(t.strip()) for t in text.split(","))
    except (ValueError, ZeroDivisionError):
        raise InputError(f"--d: cannot parse {text!r} as rationals") from None
    if len(d) != 5:
        raise InputError(f"--d: need 5 entries, got {len(d)}")
    if any(v <= 0 for v in d):
        raise InputError("--d: entries must be positive")
    return d


def cmd_horn(args, report: RunReport) -> int:
    d = _parse_d(args.d)
    report.inputs_digest = _digest(",".join(str(v) for v in d).encode())
    slacks = copositive.cyclic_slacks(d)
    report.levels["slacks"] = [str(s) for s in slacks]
    if copositive.lemma_dhd_condition(d):
        t0 = time.perf_counter()
        cert = copositive.horn_scaled_decomposition(d)
        ok = certify.verify(cert)
        report.timings["decomposition"] = time.perf_counter() - t0
        report.verdicts.append(
            f"cyclic condition holds; explicit decomposition with {len(cert.squares)} squares: "
            f"{'verified' if ok else 'FAILED'} [copositive.horn_scaled_decomposition, exact arithmetic]"
        )
        if not ok:
            return EXIT_VERIFY
        report.levels["level"] = "Level 1"
        return _emit(cert, args.out, report)
    bad = [i + 1 for i, s in enumerate(slacks) if s < 0]
    report.verdicts.append(f"cyclic condition fails at i = {bad}; searching levels for the scaled matrix")
    code, cert = _search(copositive.horn_scaled_matrix(d), args, report)
    if code == EXIT_OK:
        code = _emit(cert, args.out, report)
    return code


# -- verify ------------------------------------------------------------------------


def cmd_verify(args, report: RunReport) -> int:
    data = _read_bytes(args.certificate)
    report.inputs_digest = _digest(data)
    try:
        cert = certify.deserialize(data)
    except (certify.CertificateError, UnicodeDecodeError) as exc:
        raise InputError(f"{args.certificate}: {exc}") from None
    t0 = time.perf_counter()
    ok = certify.verify(cert)
    report.timings["verify"] = time.perf_counter() - t0
    report.verdicts.append(
        f"{'verified' if ok else 'verification FAILED'}: {cert.kind} certificate, "
        f"{len(cert.squares)} squares [certify.verify, exact arithmetic]"
    )
    return EXIT_OK if ok else EXIT_VERIFY


# -- sweep -------------------------------------------------------------------------


def _sweep_one(job):
    name, G, r_max, tol, agree_tol = job
    a = graphs.alpha(G)
    row = {"graph": name, "n": G.n, "m": G.m, "alpha": a}
    thetas = []
    status = "Optimal"
    for r in range(r_max + 1):
        res = graphs.theta_r_full(G, r, tol=tol)
        thetas.append(res.value)
        if res.status.value != "Optimal":
            status = res.status.value
    row["theta"] = thetas
    target = a - 1
    if target > r_max:
        row["check"] = "skipped"
    elif status != "Optimal":
        row["check"] = status
    else:
        row["check"] = "candidate" if thetas[target] > a + agree_tol else "ok"
    return row


def cmd_sweep(args, report: RunReport) -> int:
    report.tolerances["agree_tol"] = args.agree_tol
    jobs = []
    if args.graphs is not None:
        root = Path(args.graphs)
        if not root.is_dir():
            raise InputError(f"{args.graphs} is not a directory")
        h = hashlib.sha256()
        for path in sorted(p for p in root.iterdir() if p.is_file()):
            data = path.read_bytes()
            h.update(path.name.encode() + b"\0" + data)
            try:
                G = graphs.parse_graph(data.decode())
            except (ValueError, UnicodeDecodeError) as exc:
                raise InputError(f"{path}: {exc}") from None
            if G.n == 0:
                raise InputError(f"{path}: empty vertex set")
            jobs.append((path.name, G))
        report.inputs_digest = h.hexdigest()[:16]
    else:
        try:
            n, count, seed = (int(t) for t in args.random.split(","))
        except ValueError:
            raise InputError("--random expects n,count,seed") from None
        if n < 1 or count < 0:
            raise InputError("--random needs n >= 1 and count >= 0")
        report.seed = seed
        report.inputs_digest = _digest(args.random.encode())
        width = len(str(max(count - 1, 0)))
        jobs = [(f"random-n{n}-s{seed}-{k:0{width}d}", G) for k, G in enumerate(graphs.random_graphs(n, count, seed))]
    t0 = time.perf_counter()
    work = [(name, G, args.r_max, args.tol, args.agree_tol) for name, G in jobs]
    if args.jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_one, work))
    else:
        rows = [_sweep_one(w) for w in work]
    report.timings["sweep"] = time.perf_counter() - t0
    rows.sort(key=lambda row: row["graph"])
    report.rows = rows
    candidates = [row["graph"] for row in rows if row["check"] == "candidate"]
    unresolved = [row["graph"] for row in rows if row["check"] not in ("ok", "candidate", "skipped")]
    skipped = sum(row["check"] == "skipped" for row in rows)
    report.levels.update(graphs=len(rows), candidates=len(candidates), skipped=skipped)
    report.verdicts.append(
        f"{len(rows)} graphs, {len(candidates)} candidates with theta^(alpha-1) > alpha + {args.agree_tol:g}, "
        f"{skipped} skipped (alpha-1 > r-max) [graphs.theta_r, solver tol {args.tol:g}]"
    )
    for name in candidates:
        report.verdicts.append(f"CANDIDATE: {name}")
    if candidates:
        return EXIT_NOT_FOUND
    if unresolved:
        return EXIT_INDETERMINATE
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


def _add_numeric(p, search: bool = True):
    p.add_argument("--tol", type=float, default=SOLVER_TOL, help="interior-point tolerance")
    p.add_argument("--threshold", type=float, default=MEMBER_THRESHOLD, help="membership margin threshold")
    p.add_argument("--face-tol", type=float, default=FACE_TOL, help="relative eigenvalue cut for face detection")
    if search:
        p.add_argument("--r-max", type=int, default=3)
        p.add_argument("--exact", action="store_true", help="round to an exact certificate and verify it")
        p.add_argument("--out", help="certificate output path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="copocert", description="Certificates for the copositive cone hierarchy.")
    ap.add_argument("--json", action="store_true", help="print the report as JSON")
    ap.add_argument("--no-timings", action="store_true", help="omit timings (byte-stable reports)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="smallest r with M in K^(r)")
    p.add_argument("matrix")
    _add_numeric(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("theta", help="theta^(r) of a graph against alpha")
    p.add_argument("graph")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--agree-tol", type=float, default=AGREE_TOL)
    _add_numeric(p, search=False)
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("horn", help="certificate for a diagonally scaled Horn matrix")
    p.add_argument("--d", required=True, help="five positive rationals, comma separated")
    _add_numeric(p)
    p.set_defaults(func=cmd_horn)

    p = sub.add_parser("verify", help="check a certificate in exact arithmetic")
    p.add_argument("certificate")
    p.set_defaults(func=cmd_verify, tol=SOLVER_TOL, threshold=MEMBER_THRESHOLD, face_tol=FACE_TOL)

    p = sub.add_parser("sweep", help="theta hierarchy over many graphs")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graphs", help="directory of graph files")
    src.add_argument("--random", help="n,count,seed")
    p.add_argument("--r-max", type=int, default=2)
    p.add_argument("--agree-tol", type=float, default=AGREE_TOL)
    p.add_argument("--jobs", type=int, default=1)
    _add_numeric(p, search=False)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if getattr(args, "r_max", 0) < 0 or getattr(args, "r", 0) < 0:
        print("error: r must be >= 0", file=sys.stderr)
        return EXIT_INPUT
    report = RunReport(["copocert"] + argv, "", _tolerances(args))
    try:
        code = args.func(args, report)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report.exit_code = code
    show_t = not args.no_timings
    print(report.to_json(show_t) if args.json else report.to_text(show_t))
    return code


if __name__ == "__main__":
    sys.exit(main())
