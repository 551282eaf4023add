"""
Map specification documents.

A map file is UTF-8 JSON:

    {"form": "gh", "truncation": 6, "domain": "exact",
     "g": [[1, 0, "1", "0"]], "h": [[1, 0, "1", "0"], [0, 1, "-1", "0"]]}

Each term is [alpha, beta, re, im]. In the exact domain re and im are integers
or strings "p/q" with optional sign; in the float domain they are JSON numbers.
The "pq" form lists the series p and q of F = (z + p, w + q) instead of g and h.
"""

import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple, Union

from hakimkit.core.errors import HakimkitError, MapSpecError
from hakimkit.core.maps import AxesFixingMap, TangentMap
from hakimkit.core.series import EXACT, FLOAT, GaussianRational, TruncatedSeries

GH = "gh"
PQ = "pq"
FORMS = {GH: ("g", "h"), PQ: ("p", "q")}

_RATIONAL = re.compile(r"^[+-]?\d+(/\d+)?$")

Number = Union[Fraction, float]
Term = Tuple[int, int, Number, Number]


@dataclass(frozen=True)
class MapSpec:
    form: str
    truncation: int
    domain: str
    series: Dict[str, Tuple[Term, ...]]

    def names(self) -> Tuple[str, str]:
        return FORMS[self.form]


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _parse_value(value, domain: str, path: str) -> Number:
    if domain == EXACT:
        if _is_int(value):
            return Fraction(value)
        if isinstance(value, str) and _RATIONAL.match(value.strip()):
            try:
                return Fraction(value.strip())
            except ZeroDivisionError:
                raise MapSpecError("zero denominator", field=path) from None
        raise MapSpecError(
            f"exact coefficients must be integers or 'p/q' strings, got {value!r}", field=path
        )
    if isinstance(value, str) or isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MapSpecError(f"float coefficients must be JSON numbers, got {value!r}", field=path)
    if not math.isfinite(value):
        raise MapSpecError(f"coefficient {value!r} is not finite", field=path)
    return float(value)


def _parse_terms(raw, name: str, spec_form: str, truncation: int, domain: str) -> Tuple[Term, ...]:
    if not isinstance(raw, list):
        raise MapSpecError("expected a list of [alpha, beta, re, im] terms", field=name)
    max_degree = truncation - 2 if spec_form == GH else truncation
    min_degree = 0 if spec_form == GH else 2
    seen = set()
    terms: List[Term] = []
    for i, term in enumerate(raw):
        path = f"{name}[{i}]"
        if not isinstance(term, list) or len(term) != 4:
            raise MapSpecError("a term is [alpha, beta, re, im]", field=path)
        alpha, beta, re_raw, im_raw = term
        for j, e in enumerate((alpha, beta)):
            if not _is_int(e) or e < 0:
                raise MapSpecError(
                    f"exponent must be a nonnegative integer, got {e!r}", field=f"{path}[{j}]"
                )
        degree = alpha + beta
        if degree > max_degree:
            raise MapSpecError(
                f"degree {degree} exceeds {max_degree} allowed at truncation {truncation}",
                field=path,
            )
        if degree < min_degree:
            raise MapSpecError(f"degree {degree} term; p and q start at degree 2", field=path)
        if (alpha, beta) in seen:
            raise MapSpecError(f"duplicate monomial z^{alpha} w^{beta}", field=path)
        seen.add((alpha, beta))
        terms.append(
            (
                alpha,
                beta,
                _parse_value(re_raw, domain, f"{path}[2]"),
                _parse_value(im_raw, domain, f"{path}[3]"),
            )
        )
    return tuple(sorted(terms, key=lambda t: (t[0], t[1])))


def parse_mapspec(text: str) -> MapSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapSpecError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise MapSpecError("the document must be a JSON object")

    form = doc.get("form")
    if form not in FORMS:
        raise MapSpecError(f"form must be 'gh' or 'pq', got {form!r}", field="form")
    allowed = {"form", "truncation", "domain", *FORMS[form]}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise MapSpecError(f"unknown key(s) {', '.join(unknown)}", field=unknown[0])

    truncation = doc.get("truncation")
    if not _is_int(truncation) or truncation < 1:
        raise MapSpecError(
            f"truncation must be a positive integer, got {truncation!r}", field="truncation"
        )
    if form == GH and truncation < 2:
        raise MapSpecError("the gh form needs truncation >= 2", field="truncation")

    domain = doc.get("domain", EXACT)
    if domain not in (EXACT, FLOAT):
        raise MapSpecError(f"domain must be 'exact' or 'float', got {domain!r}", field="domain")

    series = {
        name: _parse_terms(doc.get(name, []), name, form, truncation, domain)
        for name in FORMS[form]
    }
    return MapSpec(form, truncation, domain, series)


def _dump_value(value: Number, domain: str):
    return str(value) if domain == EXACT else value


def serialize_mapspec(spec: MapSpec) -> str:
    doc = {"form": spec.form, "truncation": spec.truncation, "domain": spec.domain}
    for name in spec.names():
        doc[name] = [
            [a, b, _dump_value(re_, spec.domain), _dump_value(im, spec.domain)]
            for a, b, re_, im in spec.series[name]
        ]
    return json.dumps(doc, indent=2)


def _series(terms: Tuple[Term, ...], trunc: int, domain: str) -> TruncatedSeries:
    if domain == EXACT:
        coeffs = {(a, b): GaussianRational(re_, im) for a, b, re_, im in terms}
    else:
        coeffs = {(a, b): complex(re_, im) for a, b, re_, im in terms}
    return TruncatedSeries(coeffs, trunc, domain)


def build_map(spec: MapSpec) -> Union[AxesFixingMap, TangentMap]:
    first, second = spec.names()
    try:
        if spec.form == GH:
            trunc = spec.truncation - 2
            return AxesFixingMap(
                _series(spec.series[first], trunc, spec.domain),
                _series(spec.series[second], trunc, spec.domain),
                spec.truncation,
            )
        return TangentMap(
            _series(spec.series[first], spec.truncation, spec.domain),
            _series(spec.series[second], spec.truncation, spec.domain),
        )
    except HakimkitError as exc:
        raise MapSpecError(str(exc)) from exc


def _terms(series: TruncatedSeries) -> Tuple[Term, ...]:
    out = []
    for (a, b), c in series.coeffs.items():
        if isinstance(c, GaussianRational):
            out.append((a, b, c.real, c.imag))
        else:
            out.append((a, b, float(c.real), float(c.imag)))
    return tuple(sorted(out, key=lambda t: (t[0], t[1])))


def mapspec_from_map(m: Union[AxesFixingMap, TangentMap]) -> MapSpec:
    if isinstance(m, AxesFixingMap):
        return MapSpec(GH, m.trunc, m.domain, {"g": _terms(m.g), "h": _terms(m.h)})
    return MapSpec(PQ, m.trunc, m.domain, {"p": _terms(m.p), "q": _terms(m.q)})
