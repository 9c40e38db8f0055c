"""Independent reference implementations used only by the tests.

Nothing here reuses the package's closed-form mu integrals or C grids:
``t_mp`` integrates the untransformed integrand in extended precision with
mpmath, ``t_quad``/``j_quad`` use nested scipy quad with the hypergeometric
form of the mu integral.
"""

from __future__ import annotations

import numpy as np
from mpmath import mp, mpf
from scipy import integrate, special


def g_np(c):
    return np.exp(-c) / np.expm1(-c) ** 2


def _f0_mp(z):
    r = mp.sqrt(z)
    return mp.atan(r) / r if z > 0 else mpf(1)


def _f2_mp(z):
    if z < mpf("1e-3"):
        s, t, j = mpf(0), mpf(1), 0
        while abs(t) > mpf(10) ** (-mp.dps - 2):
            s += t / (2 * j + 3)
            t *= -z
            j += 1
        return s
    return (1 - _f0_mp(z)) / z


def t_mp(m, l, gamma, k, dps=30):
    """``T_{m,l}(k)`` for ``l in (0, 2)`` in extended precision."""
    with mp.workdps(dps):
        k = mpf(k)
        gam = mpf(gamma)
        F = _f0_mp if l == 0 else _f2_mp

        def f(c):
            return c ** (mpf(m) - 2 * gam) * mp.exp(-c) / mp.expm1(-c) ** 2 * F(k * k / c ** (2 * gam))

        ck = k ** (1 / gam)
        pts = sorted({mpf(0), ck / 3, ck, 3 * ck, mpf(1), mpf(4), mpf(10), mpf(25), mpf(60), mpf(150)})
        return mp.quad(f, pts, method="gauss-legendre")


def moment_mp(n, dps=30):
    with mp.workdps(dps):
        return mp.factorial(n) * mp.zeta(n)


def _fh(l, z):
    # Pfaff transform keeps the hypergeometric argument in [0, 1)
    if z > 1e250:
        return 0.0
    if z > 1e6:
        # w rounds towards 1 in double precision
        with mp.workdps(30):
            return float(mp.hyp2f1(1, mpf(l + 1) / 2, mpf(l + 3) / 2, -mpf(z))) / (l + 1)
    w = z / (1.0 + z)
    return special.hyp2f1(1, 1, (l + 3) / 2, w) / ((1.0 + z) * (l + 1))


def t_quad(m, l, gamma, k):
    def f(c):
        return c ** (m - 2 * gamma) * g_np(c) * _fh(l, k * k / c ** (2 * gamma))

    ck = k ** (1 / gamma)
    pts = sorted({1e-12, ck / 4, ck, 4 * ck, 1, 5, 15, 40, 120})
    return sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=400)[0]
               for a, b in zip(pts[:-1], pts[1:]))


def j_quad(m, l, gamma, k, k1):
    def f(c):
        a = c ** (2 * gamma)

        def h(mu):
            return mu**l / ((a + k * k * mu * mu) * (a + k1 * k1 * mu * mu))

        s = min(1.0, c**gamma / max(k, k1))
        out = integrate.quad(h, 0, s, epsabs=0, epsrel=1e-13)[0]
        if s < 1:
            out += integrate.quad(h, s, 1, epsabs=0, epsrel=1e-13)[0]
        return c**m * g_np(c) * out

    pts = sorted({1e-12, k ** (1 / gamma), k1 ** (1 / gamma), 1, 5, 15, 40, 120})
    return sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
               for a, b in zip(pts[:-1], pts[1:]))
