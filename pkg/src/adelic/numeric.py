"""Floating point engines and special functions.

Two evaluation contexts are provided: IEEE double (the default, 64 format
bits, with ``math.fsum`` as the exactly-rounded accumulator) and an mpmath
context for higher precision.  Series code talks to a context object so the
same evaluation logic drives both.

The incomplete gamma machinery computes

    G(a, x) = x^(-a) * Gamma(a, x)        (upper incomplete, complex a, x > 0)

directly in a cancellation-free arrangement: the continued fraction branch
yields e^(-x) * CF(a, x) with no x^a factor at all, and the series branch
subtracts the lower series from x^(-a) * Gamma(a).
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction

from .errors import ValidationError

# Lanczos approximation, g = 7, 9 coefficients.  Relative error ~ 1e-14
# over the right half plane.
_EULER_GAMMA = 0.5772156649015328606

_LANCZOS_G = 7.0
_LANCZOS_C = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_complex(z: complex) -> complex:
    """Gamma function for complex argument via Lanczos, with reflection."""
    z = complex(z)
    if z.real < 0.5:
        # Gamma(z) Gamma(1-z) = pi / sin(pi z)
        s = cmath.sin(cmath.pi * z)
        if s == 0:
            raise ValidationError(f"gamma pole at z = {z}")
        return cmath.pi / (s * gamma_complex(1.0 - z))
    z -= 1.0
    acc = _LANCZOS_C[0]
    for i in range(1, 9):
        acc += _LANCZOS_C[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * (t ** (z + 0.5)) * cmath.exp(-t) * acc


def _upper_G_cf(a: complex, x: float) -> complex:
    """G(a,x) = e^(-x) * CF for x > Re(a) + 1, by modified Lentz.

    The classical continued fraction gives
        Gamma(a, x) = e^(-x) x^a / (x + 1 - a - 1(1-a)/(x + 3 - a - ...))
    so G(a, x) = x^(-a) Gamma(a, x) = e^(-x) / (b0 + a1/(b1 + ...)).
    """
    tiny = 1e-300
    b = x + 1.0 - a
    if abs(b) < tiny:
        b = tiny
    c = 1e300
    d = 1.0 / b
    f = d
    for j in range(1, 400):
        aj = -j * (j - a)
        b += 2.0
        d = aj * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + aj / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        f *= delta
        if abs(delta - 1.0) < 1e-17:
            return cmath.exp(-x) * f
    raise ValidationError(f"incomplete gamma continued fraction stalled at a={a}, x={x}")


def _upper_G_series(a: complex, x: float) -> complex:
    """G(a,x) via Gamma(a) minus the lower incomplete series, for small x.

    gamma(a, x) = x^a e^(-x) sum_{n>=0} x^n / (a (a+1) ... (a+n)),
    so G(a, x) = x^(-a) Gamma(a) - e^(-x) sum_{n>=0} x^n / (a ... (a+n)).

    Near the poles of Gamma(a) (a at or close to a nonpositive integer)
    both pieces blow up while their difference stays finite, so that
    region is routed through the recurrence
        G(a, x) = (x G(a+1, x) - e^(-x)) / a
    which climbs to a safe argument.  The climb bottoms out at a = 0
    exactly, where G(0, x) = E1(x); this branch only sees x <= 1, small
    enough for the alternating exponential-integral series.
    """
    if a == 0:
        total = -_EULER_GAMMA - math.log(x)
        term = 1.0
        for k in range(1, 80):
            term *= -x / k
            total -= term / k
            if abs(term) < 1e-18 * (1.0 + abs(total)):
                break
        return complex(total)
    if a.real < 0.5:
        nearest = round(a.real)
        if nearest <= 0 and abs(a - nearest) < 0.1:
            return (x * upper_G(a + 1.0, x) - math.exp(-x)) / a
    term = 1.0 / a
    total = term
    for n in range(1, 800):
        term *= x / (a + n)
        total += term
        if abs(term) < 1e-18 * (1.0 + abs(total)):
            break
    else:
        raise ValidationError(f"incomplete gamma series stalled at a={a}, x={x}")
    xa = cmath.exp(-a * math.log(x))
    return xa * gamma_complex(a) - math.exp(-x) * total


def upper_G(a: complex, x: float) -> complex:
    """G(a, x) = x^(-a) * Gamma(a, x) for complex a and real x > 0.

    The continued fraction is only well behaved when x dominates |a|;
    below that the absolutely convergent lower series takes over.
    """
    if not (x > 0.0) or math.isinf(x) or math.isnan(x):
        raise ValidationError(f"upper_G needs real x > 0, got {x}")
    a = complex(a)
    if x > abs(a) + 1.0:
        return _upper_G_cf(a, x)
    return _upper_G_series(a, x)


def fsum_c(terms) -> complex:
    """Exactly-rounded complex sum: independent fsum over real and
    imaginary parts, so the result is independent of term order."""
    re = []
    im = []
    for t in terms:
        t = complex(t)
        re.append(t.real)
        im.append(t.imag)
    return complex(math.fsum(re), math.fsum(im))


class Ctx:
    """Evaluation context.

    ``bits`` is the total floating point format width; 64 selects IEEE
    double (the default engine), anything larger selects mpmath with the
    working precision set to ``bits`` bits of mantissa.
    """

    def __init__(self, bits: int = 64):
        if not isinstance(bits, int) or isinstance(bits, bool) or bits < 64:
            raise ValidationError(f"precision_bits must be an int >= 64, got {bits!r}")
        self.bits = bits
        self.is_float = bits == 64
        if not self.is_float:
            import mpmath

            self._mp = mpmath.mp.clone()
            self._mp.prec = bits

    # -- conversions ---------------------------------------------------

    def real(self, x):
        """Exact rational or float input to the context's real type."""
        if self.is_float:
            return float(x)
        if isinstance(x, Fraction):
            return self._mp.mpf(x.numerator) / self._mp.mpf(x.denominator)
        return self._mp.mpf(x)

    def to_complex(self, z):
        if self.is_float:
            return complex(z)
        return self._mp.mpc(z)

    # -- elementary ----------------------------------------------------

    @property
    def pi(self):
        return math.pi if self.is_float else self._mp.pi

    def exp(self, u):
        return math.exp(u) if self.is_float else self._mp.exp(u)

    def sqrt(self, u):
        return math.sqrt(u) if self.is_float else self._mp.sqrt(u)

    def power(self, base, expo):
        if self.is_float:
            return base**expo
        return self._mp.power(base, expo)

    def fsum(self, terms):
        if self.is_float:
            return math.fsum(terms)
        return self._mp.fsum(terms)

    def fsum_complex(self, terms):
        if self.is_float:
            return fsum_c(terms)
        return self._mp.fsum(terms, absolute=False)

    # -- special -------------------------------------------------------

    def gamma(self, z):
        if self.is_float:
            return gamma_complex(z)
        return self._mp.gamma(z)

    def upper_G(self, a, x):
        """x^(-a) Gamma(a, x); mpmath engine defers to its gammainc."""
        if self.is_float:
            return upper_G(a, x)
        a = self._mp.mpc(a)
        x = self.real(x)
        return self._mp.power(x, -a) * self._mp.gammainc(a, x, self._mp.inf)

    def abs(self, z):
        return abs(z)


DEFAULT_CTX = Ctx(64)
