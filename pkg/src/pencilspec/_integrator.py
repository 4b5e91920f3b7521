"""Compiled RK4 kernel for the regularized first-order system.

State ``(y, y1)`` with ``y1 = y' - sigma*y``:

    y'  = sigma*y + y1
    y1' = -sigma*y1 + (2*lam*p - lam**2 - sigma**2)*y

On every mesh step ``p`` and ``sigma`` are linear, so the RK4 stage values
at the midpoint are plain averages of the endpoint values.  Optionally the
lambda-derivative of the state is carried along (variational equations).
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def propagate(lams, h, pa, pb, sa, sb, y0, y10, dy0, dy10, with_deriv):
    n = lams.size
    out = np.empty((n, 4), np.complex128)
    steps = h.size
    for k in range(n):
        lam = lams[k]
        l2 = lam * lam
        y = y0[k]
        y1 = y10[k]
        dy = dy0[k]
        dy1 = dy10[k]
        for i in range(steps):
            hi = h[i]
            p0 = pa[i]
            p2 = pb[i]
            p1 = 0.5 * (p0 + p2)
            s0 = sa[i]
            s2 = sb[i]
            s1 = 0.5 * (s0 + s2)
            c0 = 2.0 * lam * p0 - l2 - s0 * s0
            c1 = 2.0 * lam * p1 - l2 - s1 * s1
            c2 = 2.0 * lam * p2 - l2 - s2 * s2
            # stage 1
            k1a = s0 * y + y1
            k1b = -s0 * y1 + c0 * y
            ya = y + 0.5 * hi * k1a
            yb = y1 + 0.5 * hi * k1b
            # stage 2
            k2a = s1 * ya + yb
            k2b = -s1 * yb + c1 * ya
            yc = y + 0.5 * hi * k2a
            yd = y1 + 0.5 * hi * k2b
            # stage 3
            k3a = s1 * yc + yd
            k3b = -s1 * yd + c1 * yc
            ye = y + hi * k3a
            yf = y1 + hi * k3b
            # stage 4
            k4a = s2 * ye + yf
            k4b = -s2 * yf + c2 * ye
            if with_deriv:
                e0 = 2.0 * p0 - 2.0 * lam
                e1 = 2.0 * p1 - 2.0 * lam
                e2 = 2.0 * p2 - 2.0 * lam
                m1a = s0 * dy + dy1
                m1b = -s0 * dy1 + c0 * dy + e0 * y
                da = dy + 0.5 * hi * m1a
                db = dy1 + 0.5 * hi * m1b
                m2a = s1 * da + db
                m2b = -s1 * db + c1 * da + e1 * ya
                dc = dy + 0.5 * hi * m2a
                dd = dy1 + 0.5 * hi * m2b
                m3a = s1 * dc + dd
                m3b = -s1 * dd + c1 * dc + e1 * yc
                de = dy + hi * m3a
                df = dy1 + hi * m3b
                m4a = s2 * de + df
                m4b = -s2 * df + c2 * de + e2 * ye
                dy = dy + hi / 6.0 * (m1a + 2.0 * m2a + 2.0 * m3a + m4a)
                dy1 = dy1 + hi / 6.0 * (m1b + 2.0 * m2b + 2.0 * m3b + m4b)
            y = y + hi / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
            y1 = y1 + hi / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        out[k, 0] = y
        out[k, 1] = y1
        out[k, 2] = dy
        out[k, 3] = dy1
    return out
