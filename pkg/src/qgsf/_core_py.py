"""Pure-Python fallback for :mod:`qgsf._core`.

Operation order matches the compiled kernels exactly so that both backends
produce the same bits.  See ``_core.pyx`` for the state-array layout.
"""

from __future__ import annotations

import math

import numpy as np


def simulate_events(fstate, istate, q1, q2, ua, us, ur, n, svc1, svc2,
                    lam1, lam2, p_leave, costs, times, kinds, nsys):
    cap1, cap2 = q1.shape[0], q2.shape[0]
    clock, arr1, arr2, dep1, dep2 = (float(v) for v in fstate[:5])
    h1, c1, h2, c2, pa, ps, pr = (int(v) for v in istate[:7])
    # list indexing is much cheaper than numpy scalar access
    r1, r2 = q1.tolist(), q2.tolist()
    ua_l = ua[pa:pa + n].tolist()
    us_l = us[ps:ps + 2 * n].tolist()
    ur_l = ur[pr:pr + n].tolist()
    ia = is_ = ir = 0
    inf = math.inf
    log1p = math.log1p
    for m in range(n):
        t, kind = arr1, 0
        if arr2 < t:
            t, kind = arr2, 1
        if dep1 < t:
            t, kind = dep1, 2
        if dep2 < t:
            t, kind = dep2, 3
        clock = t
        if kind == 0:
            r1[(h1 + c1) % cap1] = clock
            c1 += 1
            if c1 == 1:
                dep1 = clock + (1.0 - us_l[is_]) * svc1
                is_ += 1
            arr1 = clock + (-log1p(-ua_l[ia])) / lam1
            ia += 1
        elif kind == 1:
            r2[(h2 + c2) % cap2] = clock
            c2 += 1
            if c2 == 1:
                dep2 = clock + (1.0 - us_l[is_]) * svc2
                is_ += 1
            arr2 = clock + (-log1p(-ua_l[ia])) / lam2
            ia += 1
        elif kind == 2:
            e = r1[h1]
            h1 = (h1 + 1) % cap1
            c1 -= 1
            if c1 > 0:
                dep1 = clock + (1.0 - us_l[is_]) * svc1
                is_ += 1
            else:
                dep1 = inf
            r2[(h2 + c2) % cap2] = e
            c2 += 1
            if c2 == 1:
                dep2 = clock + (1.0 - us_l[is_]) * svc2
                is_ += 1
        else:
            e = r2[h2]
            h2 = (h2 + 1) % cap2
            c2 -= 1
            if c2 > 0:
                dep2 = clock + (1.0 - us_l[is_]) * svc2
                is_ += 1
            else:
                dep2 = inf
            if ur_l[ir] >= p_leave:
                r1[(h1 + c1) % cap1] = e
                c1 += 1
                if c1 == 1:
                    dep1 = clock + (1.0 - us_l[is_]) * svc1
                    is_ += 1
            ir += 1
        total1 = 0.0
        for k in range(c1):
            total1 += clock - r1[(h1 + k) % cap1]
        total2 = 0.0
        for k in range(c2):
            total2 += clock - r2[(h2 + k) % cap2]
        costs[m] = total1 + total2
        times[m] = clock
        kinds[m] = kind
        nsys[m] = c1 + c2
    fstate[:5] = (clock, arr1, arr2, dep1, dep2)
    istate[:7] = (h1, c1, h2, c2, pa + ia, ps + is_, pr + ir)
    q1[:] = r1
    q2[:] = r2


def fast_recursion(z, w, b, c, gw, hw, cost_plus, cost_minus, with_hessian):
    one_b = 1.0 - b
    one_c = 1.0 - c
    for hp, hm in zip(cost_plus.tolist(), cost_minus.tolist()):
        z[:] = one_b * z + b * (gw * (hp - hm))
        if with_hessian:
            w[:] = one_c * w + c * (hw * (hp + hm))
