import argparse
import csv
import json
import logging
import sys

import numpy as np

from polyharmonic_markov import __version__
from polyharmonic_markov.errors import PolyharmonicError
from polyharmonic_markov.harmonic import (
    almansi_decompose,
    harmonic_basis,
    np_formula,
    np_search,
)
from polyharmonic_markov.markov import (
    SMAX_MARGIN,
    identity_check,
    markov_eval_numeric,
    markov_series,
    rest_series,
    second_kind,
    support_verdict,
)
from polyharmonic_markov.measures import (
    distributed_moments,
    orthogonality_order,
    read_measure,
)
from polyharmonic_markov.polycore import (
    format_poly,
    format_rational,
    parse_poly,
    polyharmonic_degree,
)
from polyharmonic_markov.verify import (
    DEFAULT_SEED,
    Separation,
    density_rank_test,
    separation_test,
    sweep_catalog,
)

logger = logging.getLogger(__name__)


def _emit(args, doc, lines):
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        for line in lines:
            print(line)


def _measure(args, option="measure"):
    return read_measure(getattr(args, option))


def _dimension(args, measure=None) -> int:
    if args.dim is not None:
        return args.dim
    if measure is not None:
        return measure.dim
    return 2


def _poly(args, measure=None):
    return parse_poly(args.poly, _dimension(args, measure))


def _smax(args, P=None) -> int:
    if args.smax is not None:
        return args.smax
    return max(P.degree, 0) + SMAX_MARGIN if P is not None else SMAX_MARGIN


def _series_lines(series):
    yield f"# s k m value (s_max={series.s_max})"
    for (s, k, m), value in series.coeffs.items():
        yield f"{s} {k} {m} {format_rational(value)}"


def cmd_degree(args):
    P = _poly(args)
    degree = polyharmonic_degree(P)
    _emit(args, {"degree": degree}, [str(degree)])
    return 0


def cmd_almansi(args):
    P = _poly(args)
    decomp = almansi_decompose(P, method=args.method)
    texts = [format_poly(h) for h in decomp.harmonics]
    _emit(
        args,
        {"harmonics": texts},
        [f"h{j} = {text}" for j, text in enumerate(texts)],
    )
    return 0


def cmd_np(args):
    P = _poly(args)
    formula = np_formula(P)
    search = np_search(P, args.kmax if args.kmax is not None else P.degree)
    agree = formula == search
    summary = (
        f"formula=search={formula}"
        if agree
        else f"formula={formula} search={search} (disagree)"
    )
    _emit(
        args,
        {"formula": formula, "search": search, "agree": agree},
        [str(formula), summary],
    )
    return 0 if agree else 1


def cmd_basis(args):
    layer = harmonic_basis(_dimension(args), args.degree)
    _emit(
        args,
        layer.to_json(),
        [
            f"Y_{args.degree},{m} = {format_poly(e.poly)}  "
            f"norm_sq = {format_rational(e.norm_sq)}"
            for m, e in enumerate(layer, start=1)
        ],
    )
    return 0


def cmd_moments(args):
    mu = _measure(args)
    table = distributed_moments(mu, args.tmax, args.kmax)
    _emit(
        args,
        table.to_json(),
        ["# t k m value"]
        + [
            f"{t} {k} {m} {format_rational(v)}"
            for (t, k, m), v in sorted(table.entries.items())
        ],
    )
    return 0


def cmd_markov_series(args):
    mu = _measure(args)
    series = markov_series(mu, _smax(args))
    _emit(args, series.to_json(), _series_lines(series))
    return 0


def _parse_grid(text):
    try:
        start, stop, count = text.split(":")
        return np.linspace(float(start), float(stop), int(count))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"grid must be START:STOP:COUNT, got {text!r}"
        ) from exc


def cmd_markov_eval(args):
    mu = _measure(args)
    theta = (
        [float(x) for x in args.theta.split(",")]
        if args.theta
        else [1.0] + [0.0] * (mu.dim - 1)
    )
    if args.grid is not None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["zeta_re", "zeta_im", "re", "im"])
        for zeta in args.grid:
            value = markov_eval_numeric(mu, complex(zeta), theta)
            writer.writerow(
                [repr(float(zeta)), "0.0", repr(value.real), repr(value.imag)]
            )
        return 0
    value = markov_eval_numeric(mu, complex(args.zeta), theta)
    _emit(
        args,
        {"re": value.real, "im": value.imag},
        [f"{value.real!r} {value.imag!r}"],
    )
    return 0


def cmd_second_kind(args):
    mu = _measure(args)
    P = _poly(args, mu)
    rep = second_kind(P, mu, args.kmax)
    _emit(
        args,
        rep.to_json(),
        [f"# k m p (k_max={rep.k_max})"]
        + [
            f"{k} {m} " + " ".join(format_rational(c) for c in poly)
            for (k, m), poly in sorted(rep.sectors.items())
        ],
    )
    return 0


def cmd_rest(args):
    mu = _measure(args)
    P = _poly(args, mu)
    series = rest_series(P, mu, _smax(args, P))
    _emit(args, series.to_json(), _series_lines(series))
    return 0


def cmd_support(args):
    mu = _measure(args)
    P = _poly(args, mu)
    report = support_verdict(P, mu, _smax(args, P))
    lines = [report.verdict.value]
    if report.certificate is not None:
        s, k, m, value = report.certificate
        lines.append(
            f"certificate: r_{s} sector ({k}, {m}) = {format_rational(value)}"
        )
    _emit(args, report.to_json(), lines)
    return 0


def cmd_identity_check(args):
    mu = _measure(args)
    P = _poly(args, mu)
    s_max = _smax(args, P)
    holds = identity_check(P, mu, s_max)
    _emit(
        args,
        {"holds": holds, "s_max": s_max},
        ["true" if holds else "false"],
    )
    return 0


def cmd_ortho_check(args):
    mu = _measure(args)
    P = _poly(args, mu)
    orthogonal = orthogonality_order(P, mu, args.order)
    _emit(
        args,
        {"orthogonal": orthogonal, "order": args.order},
        ["true" if orthogonal else "false"],
    )
    return 0


def cmd_density_rank(args):
    mu = _measure(args)
    P = _poly(args, mu)
    report = density_rank_test(
        P, [a.point for a in mu.atoms], args.degree_max
    )
    _emit(
        args,
        report.to_json(),
        [
            f"rank {report.evaluation_matrix_rank} of "
            f"{report.atom_count} atoms, basis size {report.basis_size}: "
            + ("full" if report.full_rank else "deficient")
        ],
    )
    return 0


def cmd_separate(args):
    mu = _measure(args)
    nu = _measure(args, "other")
    P = _poly(args, mu)
    d_max = args.degree_max
    if d_max is None:
        d_max = 2 * (len(mu.atoms) + len(nu.atoms))
    result = separation_test(P, mu, nu, d_max)
    if result.outcome is Separation.SEPARATED:
        line = (
            f"separated at degree {result.degree} by "
            f"{format_poly(result.witness)}: "
            f"{format_rational(result.mu_value)} != "
            f"{format_rational(result.nu_value)}"
        )
    elif result.outcome is Separation.EQUAL:
        line = "equal"
    else:
        line = f"inconclusive up to degree {d_max}"
    _emit(args, result.to_json(), [line])
    return 0


def cmd_sweep(args):
    records = sweep_catalog(
        configs=args.configs,
        seed=args.seed,
        dims=args.dims,
        progress=not args.json,
    )
    _emit(
        args,
        [r.to_json() for r in records],
        ["# dim variety atoms full_rank_degree separation"]
        + [
            f"{r.dim} {r.variety!r} {len(r.mu.atoms)}+{len(r.nu.atoms)} "
            f"{r.full_rank_degree} {r.separation.outcome.value}"
            for r in records
        ],
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--dim", type=int, default=None, help="ambient dimension n >= 2"
    )
    common.add_argument("--json", action="store_true", help="JSON output")
    common.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="log INFO (-v) or DEBUG (-vv) to stderr",
    )

    poly = argparse.ArgumentParser(add_help=False)
    poly.add_argument("--poly", required=True, help="polynomial in x1..xn")

    measure = argparse.ArgumentParser(add_help=False)
    measure.add_argument(
        "--measure", required=True, help="measure JSON file"
    )

    smax = argparse.ArgumentParser(add_help=False)
    smax.add_argument(
        "--smax",
        type=int,
        default=None,
        help=f"series truncation (default deg P + {SMAX_MARGIN})",
    )

    parser = argparse.ArgumentParser(
        prog="polyharmonic-markov",
        description="Exact polyharmonic and Markov transform computations.",
        epilog="exit codes: 0 success, 1 domain error, 2 usage error",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, parents, help_text):
        cmd = sub.add_parser(
            name,
            parents=[common, *parents],
            help=help_text,
            formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        )
        cmd.set_defaults(func=func)
        return cmd

    add("degree", cmd_degree, [poly], "polyharmonic degree d(P)")
    cmd = add("almansi", cmd_almansi, [poly], "Almansi decomposition")
    cmd.add_argument(
        "--method", choices=["laplacian", "solve"], default="laplacian"
    )
    cmd = add("np", cmd_np, [poly], "N_P by formula and by search")
    cmd.add_argument(
        "--kmax", type=int, default=None, help="search bound (default deg P)"
    )
    cmd = add("basis", cmd_basis, [], "harmonic layer of one degree")
    cmd.add_argument("--degree", type=int, required=True)
    cmd = add("moments", cmd_moments, [measure], "distributed moments")
    cmd.add_argument("--tmax", type=int, default=2)
    cmd.add_argument("--kmax", type=int, default=4)
    cmd = add(
        "markov-series",
        cmd_markov_series,
        [measure, smax],
        "Markov transform series",
    )
    cmd = add(
        "markov-eval",
        cmd_markov_eval,
        [measure],
        "numeric Markov transform",
    )
    cmd.add_argument(
        "--zeta",
        type=complex,
        default=complex(2),
        help="complex value in Python syntax, e.g. 3+1j",
    )
    cmd.add_argument(
        "--theta", default=None, help="comma separated unit vector"
    )
    cmd.add_argument(
        "--grid",
        type=_parse_grid,
        default=None,
        help="real zeta values START:STOP:COUNT, printed as CSV",
    )
    cmd = add(
        "second-kind",
        cmd_second_kind,
        [poly, measure],
        "function of the second kind Q_P",
    )
    cmd.add_argument(
        "--kmax",
        type=int,
        default=None,
        help=f"sector truncation (default deg P + {SMAX_MARGIN})",
    )
    add("rest", cmd_rest, [poly, measure, smax], "rest coefficients r_s[P]")
    add(
        "support",
        cmd_support,
        [poly, measure, smax],
        "is the measure supported on P = 0",
    )
    add(
        "identity-check",
        cmd_identity_check,
        [poly, measure, smax],
        "check P * Markov transform = Q_P + R_P",
    )
    cmd = add(
        "ortho-check",
        cmd_ortho_check,
        [poly, measure],
        "is P orthogonal to all polynomials of degree < M",
    )
    cmd.add_argument("--order", type=int, required=True, help="M")
    cmd = add(
        "density-rank",
        cmd_density_rank,
        [poly, measure],
        "rank of U_{N_P} at the atoms of a measure",
    )
    cmd.add_argument("--degree-max", type=int, default=2)
    cmd = add(
        "separate",
        cmd_separate,
        [poly, measure],
        "separate two measures by U_{N_P} moments",
    )
    cmd.add_argument("--other", required=True, help="second measure JSON")
    cmd.add_argument(
        "--degree-max",
        type=int,
        default=None,
        help="search bound (default 2 * total atoms)",
    )
    cmd = add(
        "sweep", cmd_sweep, [], "random configurations on catalog varieties"
    )
    cmd.add_argument("--configs", type=int, default=20)
    cmd.add_argument("--seed", type=int, default=DEFAULT_SEED)
    cmd.add_argument(
        "--dims", type=int, nargs="+", default=[2, 3], help="dimensions"
    )
    return parser


def _configure_logging(verbosity: int):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s"
    )
    logging.getLogger("polyharmonic_markov").setLevel(level)


def run(argv=None) -> int:
    """Parse ``argv`` and dispatch; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    _configure_logging(args.verbose)
    if args.dim is not None and args.dim < 2:
        print("error: --dim must be at least 2", file=sys.stderr)
        return 2
    for name in ("smax", "kmax", "tmax", "degree", "degree_max", "order"):
        value = getattr(args, name, None)
        if value is not None and value < int(name == "order"):
            flag = name.replace("_", "-")
            print(f"error: --{flag} is out of range", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except (PolyharmonicError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())
