"""
hakimkit main entry point.

Command-line front end: load a map file, run one analysis, print a report.
"""

import argparse
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Union

from hakimkit import __version__
from hakimkit.config import (
    DEFAULT_BASIN_MAX_ITER,
    DEFAULT_MAX_ITER,
    DEFAULT_R_CONV,
    DEFAULT_R_ESCAPE,
)
from hakimkit.core.constraint import (
    complete_h,
    no_attracting_fixed_points_check,
    pde_residual,
    relation_check,
    verify_prop2,
)
from hakimkit.core.dynamics import (
    SliceSpec,
    Window,
    iterate_orbit,
    render_basin,
    tangent_statistics,
)
from hakimkit.core.errors import FalsificationError, HakimError, HakimkitError, MapSpecError
from hakimkit.core.hakim import INFINITY, directions, index, index_in_swapped_chart
from hakimkit.core.maps import (
    AxesFixingMap,
    TangentMap,
    classify_fixed_point,
    contract,
    expand,
    jacobian_det,
    locate_fixed_point,
    recenter,
)
from hakimkit.core.mapspec import build_map, mapspec_from_map, parse_mapspec, serialize_mapspec
from hakimkit.core.report import export_csv, export_json, write_ppm
from hakimkit.core.series import (
    GaussianRational,
    add,
    exp_series,
    format_coefficient,
    multiply_monomial,
)
from hakimkit.core.utils import parse_complex, parse_resolution, parse_slice, parse_window

logger = logging.getLogger("hakimkit")

AnyMap = Union[AxesFixingMap, TangentMap]


def _arg(parser: Callable[[str], Any]) -> Callable[[str], Any]:
    def convert(text: str):
        try:
            return parser(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    convert.__name__ = parser.__name__
    return convert


def _fmt(value) -> str:
    if value is None:
        return "-"
    return format_coefficient(value)


def _fmt_number(value: complex, digits: int = 6) -> str:
    value = complex(value)
    if abs(value.imag) <= 1e-12 * max(1.0, abs(value.real)):
        return f"{value.real:.{digits}f}"
    return f"{value.real:.{digits}f}{value.imag:+.{digits}f}i"


def _fmt_point(value: complex) -> str:
    value = complex(value)
    if value.imag == 0:
        return f"{value.real:g}"
    return f"{value.real:g}{value.imag:+g}i"


def load_map(path: str) -> AnyMap:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise MapSpecError(f"cannot read map file {path}: {exc.strerror}") from None
    return build_map(parse_mapspec(text))


def as_tangent_map(m: AnyMap) -> TangentMap:
    return expand(m) if isinstance(m, AxesFixingMap) else m


def as_axes_fixing(m: AnyMap) -> AxesFixingMap:
    return m if isinstance(m, AxesFixingMap) else contract(m)


def _direction_dict(d) -> Dict[str, Any]:
    return {
        "direction": d.label(),
        "chart": d.chart,
        "kind": d.kind,
        "lambda": _fmt(d.lam),
        "index": _fmt(d.index),
        "multiplicity": d.multiplicity,
        "exact": d.exact,
    }


def cmd_directions(args, m: AnyMap) -> Dict[str, Any]:
    found = directions(as_tangent_map(m))
    print(f"{'direction':<24} {'kind':<15} {'lambda':<20} {'index':<20} mult")
    for d in found:
        print(
            f"{d.label():<24} {d.kind:<15} {_fmt(d.lam):<20} {_fmt(d.index):<20} {d.multiplicity}"
            + ("" if d.exact or d.chart == INFINITY else "  (inexact)")
        )
    return {"directions": [_direction_dict(d) for d in found]}


def _select_direction(F: TangentMap, text: str):
    found = directions(F)
    if text.strip().lower() in ("inf", "infinity"):
        for d in found:
            if d.chart == INFINITY:
                return d
        raise HakimError("(0, 1) is not a characteristic direction")
    u = parse_complex(text)
    best = min(
        (d for d in found if d.chart != INFINITY),
        key=lambda d: abs(complex(d.u0) - u),
        default=None,
    )
    if best is None or abs(complex(best.u0) - u) > 1e-6 * max(1.0, abs(u)):
        raise HakimError(f"(1, {text}) is not a characteristic direction")
    return best


def cmd_index(args, m: AnyMap) -> Dict[str, Any]:
    F = as_tangent_map(m)
    d = _select_direction(F, args.direction)
    value = index(F, d)
    print(f"A{d.label()} = {_fmt(value)}")
    result = {"direction": d.label(), "index": _fmt(value)}
    if d.chart != INFINITY and d.u0 != 0:
        swapped = index_in_swapped_chart(F, d)
        print(f"swapped chart: {_fmt_number(swapped, 10)}")
        result["swapped_chart_index"] = swapped
    return result


def cmd_verify_prop2(args, m: AnyMap) -> Dict[str, Any]:
    verdict = verify_prop2(as_axes_fixing(m))
    if not verdict.applicable:
        print(f"not applicable: {verdict.reason}")
        return verdict.to_dict()
    print(f"k = {verdict.k}")
    print(f"exact identity: {'PASS' if verdict.exact_identity else 'FAIL'}")
    for j, lhs, rhs in verdict.exact_mismatches:
        print(f"  u^{j}: {_fmt(lhs)} != {_fmt(rhs)}")
    if not verdict.numeric:
        print("numeric: no non-degenerate direction")
    for check in verdict.numeric:
        theta = "inf" if check.theta is None else _fmt_point(check.theta)
        print(
            f"numeric: A({theta})={_fmt_number(check.index)} target {check.target}: "
            f"{'PASS' if check.passed else 'FAIL'}"
        )
    if not verdict.passed:
        raise FalsificationError("index identity failed on a relation-clean map")
    return verdict.to_dict()


def cmd_pde_residual(args, m: AnyMap) -> Dict[str, Any]:
    residual = pde_residual(as_axes_fixing(m))
    print(f"residual (to degree {residual.trunc}): {residual}")
    if residual.is_zero():
        print("residual: ZERO")
    else:
        print(f"residual: NONZERO (max |c| = {residual.max_abs_coefficient():.6g})")
    return {"residual": str(residual), "trunc": residual.trunc, "zero": residual.is_zero()}


def cmd_relation_check(args, m: AnyMap) -> Dict[str, Any]:
    report = relation_check(as_axes_fixing(m))
    print(f"k = {report.lowest_degree}, checked through coefficient degree {report.checked_degree}")
    for v in report.relation_violations:
        print(f"  (alpha, beta) = ({v.alpha}, {v.beta}): lhs {_fmt(v.lhs)} rhs {_fmt(v.rhs)}")
    print(f"relation: {'CLEAN' if report.clean else 'VIOLATED'}")
    for note in report.notes:
        print(f"note: {note}")
    return report.to_dict()


def _parse_free(items: Optional[List[str]]) -> Dict[int, object]:
    free: Dict[int, object] = {}
    for item in items or []:
        degree, _, value = item.partition(":")
        try:
            re_text, _, im_text = value.partition(",")
            free[int(degree)] = GaussianRational.parse(re_text.strip(), (im_text or "0").strip())
        except (ValueError, ZeroDivisionError):
            raise MapSpecError(f"bad --free value {item!r}; expected 'degree:re[,im]'") from None
    return free


def cmd_complete_h(args, m: AnyMap) -> Dict[str, Any]:
    am = as_axes_fixing(m)
    h = complete_h(am.g, _parse_free(args.free), am.series_trunc)
    completed = AxesFixingMap(am.g, h, am.trunc)
    residual_zero = completed.series_trunc < 1 or pde_residual(completed).is_zero()
    print(f"g = {am.g}")
    print(f"h = {h}")
    print(f"residual: {'ZERO' if residual_zero else 'NONZERO'}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(serialize_mapspec(mapspec_from_map(completed)) + "\n")
        print(f"wrote {args.out}")
    return {"g": str(am.g), "h": str(h), "residual_zero": residual_zero}


def cmd_jacobian(args, m: AnyMap) -> Dict[str, Any]:
    det = jacobian_det(as_tangent_map(m))
    print(f"det DF = {det}")
    result: Dict[str, Any] = {"det": str(det), "trunc": det.trunc}
    if isinstance(m, AxesFixingMap):
        exponent = add(multiply_monomial(m.g, "w"), multiply_monomial(m.h, "z"))
        target = exp_series(exponent)
        matches = target == det
        print(f"det DF = exp(w g + z h): {'YES' if matches else 'NO'}")
        result["matches_exp"] = matches
    return result


def _point(args):
    return args.z, args.w


def cmd_classify_fixed(args, m: AnyMap) -> Dict[str, Any]:
    F = as_tangent_map(m)
    point = _point(args)
    if args.locate:
        point = locate_fixed_point(F, point)
        print(f"located: ({_fmt_number(point[0], 12)}, {_fmt_number(point[1], 12)})")
    c = classify_fixed_point(F, point)
    print(f"eigenvalues: {_fmt_number(c.eigenvalues[0])}, {_fmt_number(c.eigenvalues[1])}")
    print(f"det DF: {_fmt_number(c.jacobian_det)}")
    print(f"class: {c.tag}")
    result = {
        "point": list(c.point),
        "eigenvalues": list(c.eigenvalues),
        "det": c.jacobian_det,
        "tag": c.tag,
    }
    if isinstance(m, AxesFixingMap):
        report = no_attracting_fixed_points_check(m, [c.point])
        print(f"no attracting fixed point: {'PASS' if report.passed else 'FAIL'}")
        for flag in report.flags:
            print(f"flag: {flag}")
        result["no_attractor_check"] = report.to_dict()
    return result


def cmd_recenter(args, m: AnyMap) -> Dict[str, Any]:
    G = recenter(as_tangent_map(m), _point(args))
    print(f"p = {G.p}")
    print(f"q = {G.q}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(serialize_mapspec(mapspec_from_map(G)) + "\n")
        print(f"wrote {args.out}")
    return {"p": str(G.p), "q": str(G.q)}


def cmd_orbit(args, m: AnyMap) -> Dict[str, Any]:
    record = iterate_orbit(
        as_tangent_map(m), _point(args), args.max_iter, (args.r_conv, args.r_escape)
    )
    print(f"outcome: {record.outcome.label} after {record.iterations_used} iterations")
    if record.tangent_estimate is not None:
        a, b = record.tangent_estimate
        print(f"tangent: ({_fmt_number(a)}, {_fmt_number(b)})")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(export_csv(record))
        print(f"wrote {args.out}")
    return {
        "outcome": record.outcome.label,
        "iterations": record.iterations_used,
        "tangent": list(record.tangent_estimate) if record.tangent_estimate else None,
    }


def _slice(args) -> SliceSpec:
    kind = args.slice
    if kind == SliceSpec.DIRECTION:
        return SliceSpec.direction(args.u)
    if kind == SliceSpec.FIXED_W:
        return SliceSpec.fixed_w(args.w0)
    return SliceSpec.fixed_z(args.z0)


def cmd_basin(args, m: AnyMap) -> Dict[str, Any]:
    F = as_tangent_map(m)
    center, hx, hy = args.window
    raster = render_basin(
        F,
        _slice(args),
        Window(center, hx, hy),
        args.res,
        args.max_iter,
        (args.r_conv, args.r_escape),
        threads=args.threads,
    )
    print(
        f"slice {raster.slice.describe()}, {raster.width}x{raster.height}, "
        f"{raster.max_iter} iterations"
    )
    total = raster.width * raster.height
    for label, count in raster.counts().items():
        print(f"{label:<22} {count:>8} ({100.0 * count / total:.1f}%)")
    result = raster.to_dict()
    try:
        histogram = tangent_statistics(raster.orbit_records(), directions(F))
    except HakimkitError as exc:
        logger.info("no tangent statistics: %s", exc)
    else:
        for label, count in sorted(histogram.counts.items()):
            print(f"tangent {label}: {count}")
        if histogram.unmatched:
            print(f"tangent unmatched: {histogram.unmatched}")
        result["tangents"] = {"counts": histogram.counts, "unmatched": histogram.unmatched}
    if args.out:
        write_ppm(raster, args.out)
        print(f"wrote {args.out}")
    return result


def _add_orbit_flags(p: argparse.ArgumentParser, max_iter: int) -> None:
    p.add_argument("--max-iter", type=int, default=max_iter)
    p.add_argument("--r-conv", type=float, default=DEFAULT_R_CONV)
    p.add_argument("--r-escape", type=float, default=DEFAULT_R_ESCAPE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--map", required=True, help="map specification (JSON)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--json", metavar="PATH", help="also write the result as JSON")

    parser = argparse.ArgumentParser(
        prog="hakimkit",
        description="Characteristic directions and dynamics of tangent-to-identity germs",
    )
    parser.add_argument("--version", action="version", version=f"hakimkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(handler=handler)
        return p

    add("directions", cmd_directions, "list characteristic directions")
    p = add("index", cmd_index, "Hakim index of one direction")
    p.add_argument("--direction", required=True, help="u0 as 're,im', or 'inf' for (0, 1)")
    add("verify-prop2", cmd_verify_prop2, "check A = -(k+1) on a relation-clean map")
    add("pde-residual", cmd_pde_residual, "residual of the volume-form PDE")
    add("relation-check", cmd_relation_check, "check the coefficient relation")
    p = add("complete-h", cmd_complete_h, "solve for h given g")
    p.add_argument(
        "--free", action="append", metavar="DEG:RE[,IM]", help="free coefficient d_{DEG,0}"
    )
    p.add_argument("--out", help="write the completed gh map file")
    add("jacobian", cmd_jacobian, "Jacobian determinant of F")

    for name, handler, help_text in (
        ("classify-fixed", cmd_classify_fixed, "classify a fixed point"),
        ("recenter", cmd_recenter, "conjugate a tangent-to-identity fixed point to the origin"),
        ("orbit", cmd_orbit, "iterate one orbit"),
    ):
        p = add(name, handler, help_text)
        p.add_argument("--z", type=_arg(parse_complex), required=True, help="'re,im'")
        p.add_argument("--w", type=_arg(parse_complex), required=True, help="'re,im'")
        if name == "classify-fixed":
            p.add_argument("--locate", action="store_true", help="refine the point by Newton first")
        if name == "recenter":
            p.add_argument("--out", help="write the recentered pq map file")
        if name == "orbit":
            _add_orbit_flags(p, DEFAULT_MAX_ITER)
            p.add_argument("--out", help="write the trajectory as CSV")

    p = add("basin", cmd_basin, "render a basin raster")
    p.add_argument(
        "--slice",
        type=_arg(parse_slice),
        default=SliceSpec.DIRECTION,
        help="'w=u*z', 'w=w0' or 'z=z0'",
    )
    p.add_argument("--u", type=_arg(parse_complex), default=1 + 0j)
    p.add_argument("--w0", type=_arg(parse_complex), default=0j)
    p.add_argument("--z0", type=_arg(parse_complex), default=0j)
    p.add_argument(
        "--window", type=_arg(parse_window), required=True, help="'cx,cy:half' or 'cx,cy:hx,hy'"
    )
    p.add_argument("--res", type=_arg(parse_resolution), default=(64, 64), help="WIDTHxHEIGHT")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", help="write the raster as binary PPM")
    _add_orbit_flags(p, DEFAULT_BASIN_MAX_ITER)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(args.verbose)

    try:
        m = load_map(args.map)
        print(f"# hakimkit {args.command}: truncation {m.trunc}, domain {m.domain}")
        result = args.handler(args, m)
        if args.json:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(export_json(result) + "\n")
    except HakimkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
