"""Independent reference computations used by the tests.

These avoid the package's numpy code paths: exact rational arithmetic for
the information quadratic form, and brute-force grids for deviations.
"""

from __future__ import annotations

import math
from fractions import Fraction

import sympy


def exact_info(gamma, sigma_sq, members) -> Fraction:
    """m' M^{-1} m in exact arithmetic; infinite variances drop out."""
    keep = [i for i in members if not math.isinf(sigma_sq[i])]
    if not keep:
        return Fraction(0)
    g = [sympy.Rational(str(gamma[i])) for i in keep]
    s = [sympy.Rational(str(sigma_sq[i])) for i in keep]
    n = len(keep)
    M = sympy.Matrix(n, n, lambda r, c: (2 + s[r]) if r == c else g[r] * g[c])
    m = sympy.Matrix(g)
    val = (m.T * M.LUsolve(m))[0, 0]
    return Fraction(int(sympy.numer(val)), int(sympy.denom(val)))


def user_utility(alpha, n_shared, info):
    return 0.5 * n_shared - alpha * info
