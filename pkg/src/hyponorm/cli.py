"""Command-line front end.

Subcommands: threshold, matrix, spectrum, moments, verify, form.
Exit status: 0 success (certified), 2 undecided or uncertified, 1 error.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
import warnings

import numpy as np

from .errors import HyponormError
from .hyponormality import (
    UNDECIDED,
    commutator_form,
    form_for,
    oracle_crosscheck,
    rayleigh_kappa,
    threshold,
)
from .jacobi import ConstantChain, JacobiOperator, SymbolParams, build_truncated
from .measures import AreaMeasure, BetaWeight, MomentProvider, load_atoms_csv, load_density_csv
from .spectral import TruncationPolicy, operator_norm, spectrum_scan

EXIT_OK, EXIT_ERROR, EXIT_UNDECIDED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    return format(float(x), ".17g")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats written to 17 significant digits; non-finite floats become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or (isinstance(obj, float) and not math.isfinite(obj)):
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(c if isinstance(c, str) else fmt(c) if isinstance(c, float) else str(c) for c in row)
              for row in rows]
    return "\n".join(lines) + "\n"


def _table(header, rows) -> str:
    cells = [list(header)] + [[c if isinstance(c, str) else fmt(c) if isinstance(c, float) else str(c)
                               for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"


def _tabular(args, header, rows) -> str:
    if args.format == "table":
        return _table(header, rows)
    if args.format == "json":
        return to_json({"schema": 1, "columns": list(header), "rows": [list(r) for r in rows]}) + "\n"
    return _csv(header, rows)


def _document(args, payload: dict) -> str:
    if args.format == "json":
        return to_json(payload) + "\n"
    flat = [(k, v) for k, v in payload.items() if not isinstance(v, (dict, list))]
    if args.format == "table":
        return _table(("key", "value"), [(k, "" if v is None else v) for k, v in flat])
    return _csv(("key", "value"), [(k, "" if v is None else v) for k, v in flat])


# -- configuration -----------------------------------------------------------

def build_provider(args) -> MomentProvider:
    spec = args.measure
    name, _, arg = spec.partition(":")
    if name == "area":
        kind = AreaMeasure()
    elif name == "beta":
        kind = BetaWeight(float(arg))
    elif name == "atoms":
        kind = load_atoms_csv(arg)
    elif name == "density":
        kind = load_density_csv(arg)
    else:
        raise ValueError(f"unknown measure selector {spec!r}")
    return MomentProvider(kind, method=args.method, normalize=args.normalize, force=args.force)


def build_operator(args) -> JacobiOperator:
    name, _, arg = args.measure.partition(":")
    if name == "const":
        return ConstantChain(args.n, float(arg) if arg else 1.0)
    return JacobiOperator(SymbolParams(args.n, args.s), build_provider(args))


def _policy(args) -> TruncationPolicy:
    return TruncationPolicy(
        start=args.n_start,
        max_slots_per_chain=args.max_slots,
        lookahead=args.lookahead,
        margin=args.margin,
    )


def _modulus(args) -> float | None:
    if args.c is not None and (args.c_re is not None or args.c_im is not None):
        raise ValueError("give either --c or --c-re/--c-im, not both")
    if args.c is not None:
        if args.c < 0:
            raise ValueError("--c is a modulus and must be nonnegative")
        return args.c
    if args.c_re is not None or args.c_im is not None:
        return abs(complex(args.c_re or 0.0, args.c_im or 0.0))
    return None


def _parse_t_grid(text: str) -> list[float]:
    if ":" in text:
        start, stop, num = text.split(":")
        return [float(v) for v in np.linspace(float(start), float(stop), int(num))]
    return [float(v) for v in text.split(",") if v.strip()]


def _read_vector(path: str) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty vector file")
    header = [h.strip() for h in lines[0].split(",")]
    if header == ["u"]:
        return np.array([float(ln) for ln in lines[1:]])
    if header == ["k", "u"]:
        pairs = [ln.split(",") for ln in lines[1:]]
        idx = [int(p[0]) for p in pairs]
        if idx != list(range(len(idx))):
            raise ValueError(f"{path}: k column must run 0, 1, 2, ...")
        return np.array([float(p[1]) for p in pairs])
    raise ValueError(f"{path}: expected header 'u' or 'k,u'")


# -- subcommands ---------------------------------------------------------------

def cmd_threshold(args) -> tuple[str, int]:
    op = build_operator(args)
    modulus = _modulus(args)
    report = threshold(op, args.tol, _policy(args), C=modulus, measure=args.measure)
    payload = report.to_dict()
    code = EXIT_OK if report.certified and report.classification != UNDECIDED else EXIT_UNDECIDED
    return _document(args, payload), code


def cmd_matrix(args) -> tuple[str, int]:
    op = build_operator(args)
    tm = build_truncated(op, args.N)
    if args.dense:
        dense = tm.to_dense()
        header = tuple(f"c{j}" for j in range(tm.N))
        return _tabular(args, header, [tuple(float(v) for v in row) for row in dense]), EXIT_OK
    return _tabular(args, ("k", "a_k"), tm.band_rows()), EXIT_OK


def cmd_spectrum(args) -> tuple[str, int]:
    op = build_operator(args)
    scan = spectrum_scan(op, args.N, margin=args.outlier_margin, tol=args.tol)
    mask = scan.outlier_mask
    rows = [(i, float(ev), int(r), int(flag))
            for i, (ev, r, flag) in enumerate(zip(scan.eigenvalues, scan.residues, mask))]
    return _tabular(args, ("index", "eigenvalue", "chain_residue", "outlier_flag"), rows), EXIT_OK


def cmd_moments(args) -> tuple[str, int]:
    provider = build_provider(args)
    rows = []
    for t in _parse_t_grid(args.t):
        g, err = provider.moment(t)
        rows.append((t, g, err))
    return _tabular(args, ("t", "gamma", "error"), rows), EXIT_OK


def cmd_verify(args) -> tuple[str, int]:
    op = build_operator(args)
    est = operator_norm(op, args.tol, _policy(args))
    residual = oracle_crosscheck(op, args.tol, est)
    passed = residual <= 10.0 * args.tol
    payload = {
        "schema": 1,
        "measure": args.measure,
        "n": op.n,
        "s": op.s,
        "tol": args.tol,
        "oracle_residual": residual,
        "passed": passed,
        "truncation_size": est.truncation_size,
        "truncation_lower": est.truncation_lower,
        "norm_lower": est.lower,
        "norm_upper": est.upper,
        "certified": est.certified,
        "assumption_banner": op.banner,
    }
    return _document(args, payload), EXIT_OK if passed else EXIT_UNDECIDED


def cmd_form(args) -> tuple[str, int]:
    op = build_operator(args)
    u = _read_vector(args.u)
    form = form_for(op)
    c = _modulus(args)
    if c is None:
        raise ValueError("form needs --c (or --c-re/--c-im)")
    payload = {
        "schema": 1,
        "measure": args.measure,
        "n": op.n,
        "s": op.s,
        "c_modulus": c,
        "Q": commutator_form(form, op.params, u, c),
        "kappa": rayleigh_kappa(form, op.params, u),
        "weighted_norm_sq": form.parts(u)[0],
    }
    return _document(args, payload), EXIT_OK


# -- parser ----------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, fmt_default: str) -> None:
    g = p.add_argument_group("measure and symbol")
    g.add_argument("--measure", default="area",
                   help="area | beta:<beta> | atoms:<csv x,mass> | density:<csv x,w> | "
                        "const:<a> (constant test chain) (default: %(default)s)")
    g.add_argument("--n", type=int, default=1, help="power of z, n >= 1 (default: %(default)s)")
    g.add_argument("--s", type=float, default=2.0, help="power of |z|, s > 0 (default: %(default)s)")
    g.add_argument("--method", choices=["closed_form", "quadrature"], default=None,
                   help="moment evaluation (default: closed form where available)")
    g.add_argument("--normalize", action="store_true", help="rescale the measure to unit mass")
    g.add_argument("--force", action="store_true",
                   help="compute even if the measure violates 1 in supp(mu) or mu({1}) = 0")
    g.add_argument("--tol", type=float, default=1e-8, help="bracket tolerance (default: %(default)s)")
    o = p.add_argument_group("output")
    o.add_argument("--format", choices=["json", "csv", "table"], default=fmt_default,
                   help="output format (default: %(default)s)")
    o.add_argument("--output", "-o", default=None, help="write to this file instead of stdout")


def _truncation(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("truncation")
    g.add_argument("--n-start", type=int, default=None,
                   help="initial section size (default: max(64, 8n))")
    g.add_argument("--max-slots", type=int, default=2**20,
                   help="largest chain length tried (default: %(default)s)")
    g.add_argument("--lookahead", type=int, default=4,
                   help="tail window length as a multiple of the chain length (default: %(default)s)")
    g.add_argument("--margin", type=float, default=1e-3,
                   help="relative distance to s/(2n) required of the tail window (default: %(default)s)")


def _c_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("constant C (only |C| matters)")
    g.add_argument("--c", type=float, default=None, help="modulus of C")
    g.add_argument("--c-re", type=float, default=None, help="real part of C")
    g.add_argument("--c-im", type=float, default=None, help="imaginary part of C")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hyponorm", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("threshold", help="C_max = 1/||J|| bracket and classification of C")
    _common(p, "json")
    _truncation(p)
    _c_options(p)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("matrix", help="dump an N x N section of J (band list or dense CSV)")
    _common(p, "csv")
    p.add_argument("--N", type=int, required=True, help="section size, N >= n + 1")
    p.add_argument("--dense", action="store_true", help="write the dense matrix instead of (k, a_k)")
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("spectrum", help="eigenvalues of an N x N section, with outlier flags")
    _common(p, "csv")
    p.add_argument("--N", type=int, required=True, help="section size, N >= n + 1")
    p.add_argument("--outlier-margin", type=float, default=None,
                   help="flag |lambda| > s/n + margin (default: 10 * tol)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("moments", help="tabulate gamma_t")
    _common(p, "csv")
    p.add_argument("--t", default="0,1,2,3",
                   help="comma list or start:stop:count grid of orders (default: %(default)s)")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("verify", help="variational cross-check of the norm")
    _common(p, "json")
    _truncation(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("form", help="evaluate Q(u, c) for a coefficient vector file")
    _common(p, "json")
    _c_options(p)
    p.add_argument("--u", required=True, help="CSV with header 'u' (or 'k,u'), nonnegative values")
    p.set_defaults(func=cmd_form)
    return parser


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".hyponorm-")
    try:
        with io.open(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            text, code = args.func(args)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        _emit(text, args.output)
    except (HyponormError, ValueError, OSError) as exc:
        print(f"hyponorm {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
