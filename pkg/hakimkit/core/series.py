"""
Truncated bivariate power series module.

Exact (Gaussian-rational) and floating-point arithmetic on power series in z, w
truncated at total degree N. Series are immutable; every operation returns a new
series in canonical sparse form (no stored zero coefficients).
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from types import MappingProxyType
from typing import Dict, List, Mapping, Optional, Tuple, Union

from hakimkit.config import DEFAULT_TRUNCATION
from hakimkit.core.errors import SeriesError

logger = logging.getLogger(__name__)

EXACT = "exact"
FLOAT = "float"
DOMAINS = (EXACT, FLOAT)

RationalLike = Union[int, Fraction, str]
Key = Tuple[int, int]


class GaussianRational:
    """Complex number with rational real and imaginary parts, kept in lowest terms."""

    __slots__ = ("_re", "_im")

    def __init__(self, re: Union[RationalLike, "GaussianRational"] = 0, im: RationalLike = 0):
        if isinstance(re, GaussianRational):
            re, im = re.real, re.imag + Fraction(im)
        if isinstance(re, (float, complex)) or isinstance(im, (float, complex)):
            raise SeriesError(f"binary floats are not exact: {re!r}, {im!r}")
        self._re = Fraction(re)
        self._im = Fraction(im)

    @classmethod
    def parse(cls, re_text: str, im_text: str = "0") -> "GaussianRational":
        return cls(Fraction(re_text), Fraction(im_text))

    @classmethod
    def approximate(cls, value: complex, max_denominator: int) -> "GaussianRational":
        """Nearest Gaussian rational with bounded denominators (a candidate, not a proof)."""
        value = complex(value)
        re = Fraction(value.real).limit_denominator(max_denominator)
        im = Fraction(value.imag).limit_denominator(max_denominator)
        return cls(re, im)

    @property
    def real(self) -> Fraction:
        return self._re

    @property
    def imag(self) -> Fraction:
        return self._im

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self._re, -self._im)

    @staticmethod
    def _lift(other) -> Optional["GaussianRational"]:
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (int, Fraction)):
            return GaussianRational(other)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self._re + o._re, self._im + o._im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self._re - o._re, self._im - o._im)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return GaussianRational(
            self._re * o._re - self._im * o._im,
            self._re * o._im + self._im * o._re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        norm = o._re * o._re + o._im * o._im
        if norm == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        num = self * o.conjugate()
        return GaussianRational(num._re / norm, num._im / norm)

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return GaussianRational(-self._re, -self._im)

    def __pos__(self):
        return self

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return GaussianRational(1) / (self ** (-exponent))
        result = GaussianRational(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self._re == o._re and self._im == o._im

    def __hash__(self):
        if self._im == 0:
            return hash(self._re)
        return hash((self._re, self._im))

    def __bool__(self):
        return self._re != 0 or self._im != 0

    def __complex__(self):
        return complex(float(self._re), float(self._im))

    def __abs__(self) -> float:
        return abs(complex(self))

    def __repr__(self):
        return f"GaussianRational('{self._re}', '{self._im}')"

    def __str__(self):
        if self._im == 0:
            return str(self._re)
        if self._im == 1:
            im_text = "i"
        elif self._im == -1:
            im_text = "-i"
        else:
            im_text = f"{self._im}i"
        if self._re == 0:
            return im_text
        sign = "" if im_text.startswith("-") else "+"
        return f"{self._re}{sign}{im_text}"


Coefficient = Union[GaussianRational, complex]


def coerce(value, domain: str) -> Coefficient:
    """Place a scalar in the given coefficient domain."""
    if domain == EXACT:
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Fraction)):
            return GaussianRational(value)
        raise SeriesError(f"cannot place {value!r} in the exact domain")
    if domain == FLOAT:
        if isinstance(value, (GaussianRational, Number)):
            return complex(value)
        raise SeriesError(f"cannot place {value!r} in the float domain")
    raise SeriesError(f"unknown coefficient domain {domain!r}")


def zero(domain: str) -> Coefficient:
    return GaussianRational(0) if domain == EXACT else 0j


def one(domain: str) -> Coefficient:
    return GaussianRational(1) if domain == EXACT else 1 + 0j


def is_exact_value(value) -> bool:
    return isinstance(value, (GaussianRational, int, Fraction)) and not isinstance(value, bool)


def as_complex(value) -> complex:
    return complex(value)


def format_coefficient(value: Coefficient) -> str:
    if isinstance(value, GaussianRational):
        return str(value)
    value = complex(value)
    if value.imag == 0:
        return f"{value.real:.12g}"
    if value.real == 0:
        return f"{value.imag:.12g}i"
    return f"{value.real:.12g}{value.imag:+.12g}i"


def _reciprocal(j: int, domain: str) -> Coefficient:
    return GaussianRational(Fraction(1, j)) if domain == EXACT else complex(1.0 / j)


def _var_index(var: str) -> int:
    if var == "z":
        return 0
    if var == "w":
        return 1
    raise SeriesError(f"unknown variable {var!r}; expected 'z' or 'w'")


@dataclass(frozen=True)
class Monomial:
    alpha: int
    beta: int
    coeff: Coefficient

    @property
    def degree(self) -> int:
        return self.alpha + self.beta


class TruncatedSeries:
    """
    Power series in z, w with all terms of total degree > trunc discarded.

    Coefficients live in one domain: exact Gaussian rationals or complex floats.
    Zero coefficients are never stored, so equality is structural.
    """

    __slots__ = ("_coeffs", "_trunc", "_domain")

    def __init__(
        self,
        coeffs: Optional[Mapping[Key, object]] = None,
        trunc: int = DEFAULT_TRUNCATION,
        domain: str = EXACT,
    ):
        if domain not in DOMAINS:
            raise SeriesError(f"unknown coefficient domain {domain!r}")
        if not isinstance(trunc, int) or isinstance(trunc, bool) or trunc < 0:
            raise SeriesError(f"truncation must be a nonnegative integer, got {trunc!r}")
        clean: Dict[Key, Coefficient] = {}
        for key, value in (coeffs or {}).items():
            alpha, beta = key
            if not all(isinstance(e, int) and not isinstance(e, bool) and e >= 0 for e in key):
                raise SeriesError(f"exponents must be nonnegative integers, got {key!r}")
            if alpha + beta > trunc:
                raise SeriesError(f"term z^{alpha} w^{beta} exceeds truncation {trunc}")
            c = coerce(value, domain)
            if c != 0:
                clean[(alpha, beta)] = c
        self._coeffs = dict(sorted(clean.items()))
        self._trunc = trunc
        self._domain = domain

    @classmethod
    def _make(cls, coeffs: Mapping[Key, Coefficient], trunc: int, domain: str) -> "TruncatedSeries":
        # Trusted constructor: keys already valid, values already in the domain.
        series = cls.__new__(cls)
        series._coeffs = {k: v for k, v in sorted(coeffs.items()) if v != 0}
        series._trunc = trunc
        series._domain = domain
        return series

    # Constructors

    @classmethod
    def zero(cls, trunc: int = DEFAULT_TRUNCATION, domain: str = EXACT) -> "TruncatedSeries":
        return cls({}, trunc, domain)

    @classmethod
    def constant(
        cls, value, trunc: int = DEFAULT_TRUNCATION, domain: str = EXACT
    ) -> "TruncatedSeries":
        return cls({(0, 0): value}, trunc, domain)

    @classmethod
    def variable(
        cls, var: str, trunc: int = DEFAULT_TRUNCATION, domain: str = EXACT
    ) -> "TruncatedSeries":
        key = (1, 0) if _var_index(var) == 0 else (0, 1)
        if trunc < 1:
            return cls.zero(trunc, domain)
        return cls({key: 1}, trunc, domain)

    @classmethod
    def monomial(
        cls, alpha: int, beta: int, coeff=1, trunc: int = DEFAULT_TRUNCATION, domain: str = EXACT
    ) -> "TruncatedSeries":
        return cls({(alpha, beta): coeff}, trunc, domain)

    # Accessors

    @property
    def coeffs(self) -> Mapping[Key, Coefficient]:
        return MappingProxyType(self._coeffs)

    @property
    def trunc(self) -> int:
        return self._trunc

    @property
    def domain(self) -> str:
        return self._domain

    @property
    def is_exact(self) -> bool:
        return self._domain == EXACT

    def coefficient(self, alpha: int, beta: int) -> Coefficient:
        return self._coeffs.get((alpha, beta), zero(self._domain))

    def terms(self) -> List[Monomial]:
        return [Monomial(a, b, c) for (a, b), c in self._coeffs.items()]

    def is_zero(self) -> bool:
        return not self._coeffs

    def lowest_degree(self) -> Optional[int]:
        if not self._coeffs:
            return None
        return min(a + b for a, b in self._coeffs)

    def max_degree(self) -> Optional[int]:
        if not self._coeffs:
            return None
        return max(a + b for a, b in self._coeffs)

    def homogeneous_part(self, degree: int) -> "TruncatedSeries":
        kept = {k: v for k, v in self._coeffs.items() if k[0] + k[1] == degree}
        return TruncatedSeries._make(kept, self._trunc, self._domain)

    def truncate(self, trunc: int) -> "TruncatedSeries":
        """Lower the truncation order, discarding terms above it."""
        if trunc > self._trunc:
            raise SeriesError(f"cannot raise truncation from {self._trunc} to {trunc}")
        trunc = max(trunc, 0)
        kept = {k: v for k, v in self._coeffs.items() if k[0] + k[1] <= trunc}
        return TruncatedSeries._make(kept, trunc, self._domain)

    def to_float(self) -> "TruncatedSeries":
        if self._domain == FLOAT:
            return self
        return TruncatedSeries._make(
            {k: complex(v) for k, v in self._coeffs.items()}, self._trunc, FLOAT
        )

    def max_abs_coefficient(self) -> float:
        return max((abs(complex(v)) for v in self._coeffs.values()), default=0.0)

    # Operators

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (
            self._trunc == other._trunc
            and self._domain == other._domain
            and self._coeffs == other._coeffs
        )

    def __hash__(self):
        return hash((self._trunc, self._domain, frozenset(self._coeffs.items())))

    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return add(self, other)

    def __sub__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return add(self, neg(other))

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return mul(self, other)
        if isinstance(other, (GaussianRational, Number)):
            return scale(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (GaussianRational, Number)):
            return scale(self, other)
        return NotImplemented

    def __repr__(self):
        return f"TruncatedSeries('{self}', trunc={self._trunc}, domain='{self._domain}')"

    def __str__(self):
        if not self._coeffs:
            return "0"
        # Graded: lower total degree first, higher z power first within a degree.
        keys = sorted(self._coeffs, key=lambda k: (k[0] + k[1], -k[0]))
        parts = []
        for alpha, beta in keys:
            text = format_coefficient(self._coeffs[(alpha, beta)])
            powers = []
            if alpha:
                powers.append("z" if alpha == 1 else f"z^{alpha}")
            if beta:
                powers.append("w" if beta == 1 else f"w^{beta}")
            if powers:
                mono = "*".join(powers)
                if text == "1":
                    term = mono
                elif text == "-1":
                    term = f"-{mono}"
                elif "+" in text[1:] or "-" in text[1:] or (text.endswith("i") and text[1:]):
                    term = f"({text})*{mono}"
                else:
                    term = f"{text}*{mono}"
            else:
                term = text
            parts.append(term)
        out = parts[0]
        for part in parts[1:]:
            out += f" - {part[1:]}" if part.startswith("-") else f" + {part}"
        return out


def _check_compatible(a: TruncatedSeries, b: TruncatedSeries) -> None:
    if a.domain != b.domain:
        raise SeriesError(f"coefficient domain mismatch: {a.domain} vs {b.domain}")
    if a.trunc != b.trunc:
        raise SeriesError(f"truncation mismatch: {a.trunc} vs {b.trunc}")


def add(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    _check_compatible(a, b)
    out = dict(a.coeffs)
    for key, value in b.coeffs.items():
        out[key] = out[key] + value if key in out else value
    return TruncatedSeries._make(out, a.trunc, a.domain)


def neg(a: TruncatedSeries) -> TruncatedSeries:
    return TruncatedSeries._make({k: -v for k, v in a.coeffs.items()}, a.trunc, a.domain)


def scale(a: TruncatedSeries, factor) -> TruncatedSeries:
    factor = coerce(factor, a.domain)
    return TruncatedSeries._make({k: v * factor for k, v in a.coeffs.items()}, a.trunc, a.domain)


def mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Cauchy product, dropping every term of total degree above the truncation."""
    _check_compatible(a, b)
    trunc = a.trunc
    by_degree: Dict[int, List[Tuple[Key, Coefficient]]] = {}
    for key, value in b.coeffs.items():
        by_degree.setdefault(key[0] + key[1], []).append((key, value))
    degrees = sorted(by_degree)

    out: Dict[Key, Coefficient] = {}
    for (a1, b1), ca in a.coeffs.items():
        da = a1 + b1
        for db in degrees:
            if da + db > trunc:
                break
            for (a2, b2), cb in by_degree[db]:
                key = (a1 + a2, b1 + b2)
                product = ca * cb
                out[key] = out[key] + product if key in out else product
    return TruncatedSeries._make(out, trunc, a.domain)


def diff(a: TruncatedSeries, var: str) -> TruncatedSeries:
    """Formal partial derivative; the result is known one degree less."""
    idx = _var_index(var)
    out: Dict[Key, Coefficient] = {}
    for key, value in a.coeffs.items():
        e = key[idx]
        if e == 0:
            continue
        new_key = (key[0] - 1, key[1]) if idx == 0 else (key[0], key[1] - 1)
        out[new_key] = value * e
    return TruncatedSeries._make(out, max(a.trunc - 1, 0), a.domain)


def multiply_monomial(a: TruncatedSeries, var: str) -> TruncatedSeries:
    """Multiply by z or w; the product is known one degree further."""
    idx = _var_index(var)
    out = {
        ((k[0] + 1, k[1]) if idx == 0 else (k[0], k[1] + 1)): v for k, v in a.coeffs.items()
    }
    return TruncatedSeries._make(out, a.trunc + 1, a.domain)


def divide_monomial(a: TruncatedSeries, var: str) -> TruncatedSeries:
    """Exact division by z or w; every term must carry the variable."""
    idx = _var_index(var)
    out: Dict[Key, Coefficient] = {}
    for key, value in a.coeffs.items():
        if key[idx] == 0:
            raise SeriesError(f"term z^{key[0]} w^{key[1]} is not divisible by {var}")
        out[(key[0] - 1, key[1]) if idx == 0 else (key[0], key[1] - 1)] = value
    return TruncatedSeries._make(out, max(a.trunc - 1, 0), a.domain)


def _require_zero_constant(a: TruncatedSeries, op: str) -> None:
    if (0, 0) in a.coeffs:
        raise SeriesError(f"{op} needs a series with zero constant term")


def exp_series(a: TruncatedSeries) -> TruncatedSeries:
    """exp(a) for a with a(0) = 0."""
    _require_zero_constant(a, "exp_series")
    result = TruncatedSeries.constant(one(a.domain), a.trunc, a.domain)
    term = result
    for j in range(1, a.trunc + 1):
        term = scale(mul(term, a), _reciprocal(j, a.domain))
        if term.is_zero():
            break
        result = add(result, term)
    return result


def log1p_series(a: TruncatedSeries) -> TruncatedSeries:
    """log(1 + a) for a with a(0) = 0."""
    _require_zero_constant(a, "log1p_series")
    result = a
    power = a
    for j in range(2, a.trunc + 1):
        power = mul(power, a)
        if power.is_zero():
            break
        factor = _reciprocal(j, a.domain)
        result = add(result, scale(power, factor if j % 2 else -factor))
    return result


def _horner_rows(a: TruncatedSeries) -> Dict[int, List[Coefficient]]:
    rows: Dict[int, List[Coefficient]] = {}
    for (alpha, beta), value in a.coeffs.items():
        row = rows.setdefault(alpha, [])
        while len(row) <= beta:
            row.append(zero(a.domain))
        row[beta] = value
    return rows


def horner(rows: Mapping[int, List], z, w, zero_value):
    """Nested Horner scheme: outer in z, inner in w, lexicographic in (alpha, beta)."""
    if not rows:
        return zero_value
    acc = zero_value
    for alpha in range(max(rows), -1, -1):
        inner = zero_value
        for c in reversed(rows.get(alpha, ())):
            inner = inner * w + c
        acc = acc * z + inner
    return acc


def evaluate(a: TruncatedSeries, z, w) -> Coefficient:
    """
    Evaluate the stored polynomial at (z, w).

    Stays exact when the series and both arguments are exact; otherwise the
    coefficients are converted and the result is a complex float.
    """
    rows = _horner_rows(a)
    if a.is_exact and is_exact_value(z) and is_exact_value(w):
        return horner(rows, GaussianRational(z), GaussianRational(w), GaussianRational(0))
    float_rows = {alpha: [complex(c) for c in row] for alpha, row in rows.items()}
    return horner(float_rows, complex(z), complex(w), 0j)
