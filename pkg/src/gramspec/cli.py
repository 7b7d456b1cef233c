"""Command line interface.

Exit codes: 0 success, 1 unreadable or malformed input, 2 quartic outside
the supported domain (singular or not strictly sos), 3 failed internal
certificate.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import analyze
from .bitangent import check_smooth, compute_bitangents
from .errors import CertificateError, DomainError, InputError
from .gram import GramTensor, gram_pencil
from .inputs import ParseError, read_quartic
from .report import dumps, slice_table
from .spectra import interior_point, pencil_determinant_slice, slice_quadruple
from .steiner import assemble_complexes, steiner_graph

EXIT_OK, EXIT_INPUT, EXIT_DOMAIN, EXIT_CERTIFICATE = 0, 1, 2, 3

_SECTIONS = {
    "bitangents": ("bitangents",),
    "steiner": ("steiner",),
    "graph": ("graph",),
    "faces": ("faces",),
    "sample": ("sample",),
    "analyze": ("faces", "sample"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default: from input, else 0)")
    common.add_argument("--tol-rank", type=float, default=None, help="relative rank cutoff for Gram tensors")
    common.add_argument("--tol-cert", type=float, default=None, help="certificate tolerance")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--timings", action="store_true", help="record wall-clock timings in diagnostics")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="gramspec", description="Facial structure of Gram spectrahedra of ternary quartics.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "analyze": "run the full pipeline",
        "bitangents": "the 28 bitangents",
        "steiner": "Steiner complexes and rank-3 Gram tensors",
        "graph": "the Steiner graph",
        "faces": "one-dimensional faces and a rank-4 extreme point",
        "sample": "extreme points of random linear functionals",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("input", help="quartic input file")
        if name in ("sample", "analyze"):
            sp.add_argument("--n", type=int, default=50, help="number of samples (default 50)")
    sp = sub.add_parser("slice", parents=[common], help="determinant slice table of a pencil of four tensors")
    sp.add_argument("input", nargs="?", help="quartic input file")
    sp.add_argument("--tensors", default=None, help="JSON file with four 6x6 Gram matrices instead of a quartic")
    sp.add_argument("--grid", type=int, default=11, help="grid points per axis (default 11)")
    sp.add_argument("--box", type=float, nargs=2, default=(0.0, 1.0), metavar=("LO", "HI"))
    return p


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _read_tensors(path: str) -> list[GramTensor]:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}, line {exc.lineno}: invalid JSON ({exc.msg})") from None
    mats = doc.get("tensors") if isinstance(doc, dict) else doc
    try:
        arr = np.array(mats, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{path}: tensors must be numeric") from None
    if arr.shape != (4, 6, 6) or not np.all(np.isfinite(arr)):
        raise ParseError(f"{path}: expected four finite 6x6 matrices, got shape {arr.shape}")
    return [GramTensor(m) for m in arr]


def _slice_tensors_of(inp, seed, tol) -> tuple[GramTensor, ...]:
    f = inp.form
    check_smooth(f)
    interior_point(gram_pencil(f), tol.kkt)
    bits = compute_bitangents(f, seed=seed, cert_tol=tol.cert, check=False)
    complexes = assemble_complexes(f, bits, tol.conic_decision, tol.cert)
    return slice_quadruple(complexes, steiner_graph(f, complexes, tol.rank))


def _run_slice(args, tol_overrides) -> None:
    if args.tensors:
        thetas = _read_tensors(args.tensors)
    elif args.input:
        inp = read_quartic(args.input)
        tol = inp.resolved_tolerances().with_overrides(**tol_overrides)
        seed = args.seed if args.seed is not None else (inp.seed or 0)
        thetas = _slice_tensors_of(inp, seed, tol)
    else:
        raise ParseError("slice needs an input quartic or --tensors")
    data = pencil_determinant_slice(thetas, args.grid, tuple(args.box))
    _write(slice_table(data.rows()), args.out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    tol_overrides = {"rank": args.tol_rank, "cert": args.tol_cert}
    try:
        if args.command == "slice":
            _run_slice(args, tol_overrides)
        else:
            inp = read_quartic(args.input)
            tol = inp.resolved_tolerances().with_overrides(**tol_overrides)
            report = analyze(inp, _SECTIONS[args.command], seed=args.seed, tolerances=tol,
                             n_samples=getattr(args, "n", 50), timings=args.timings)
            _write(dumps(report.to_document()), args.out)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except CertificateError as exc:
        print(f"certificate failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
