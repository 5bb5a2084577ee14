# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: queue-network event processing and the fast-timescale
Z/W recursions.  ``_core_py`` mirrors every function operation for operation,
so both backends produce bit-identical results."""

from libc.math cimport log1p, INFINITY

# fstate: clock, next_arr1, next_arr2, dep1, dep2
# istate: head1, count1, head2, count2, pos_arrivals, pos_services, pos_routing


cdef inline void _push(double[::1] ring, long long[::1] istate, int node, double entry) noexcept nogil:
    cdef Py_ssize_t cap = ring.shape[0]
    cdef Py_ssize_t h = istate[2 * node]
    cdef Py_ssize_t c = istate[2 * node + 1]
    ring[(h + c) % cap] = entry
    istate[2 * node + 1] = c + 1


cdef inline double _pop(double[::1] ring, long long[::1] istate, int node) noexcept nogil:
    cdef Py_ssize_t cap = ring.shape[0]
    cdef Py_ssize_t h = istate[2 * node]
    cdef double e = ring[h]
    istate[2 * node] = (h + 1) % cap
    istate[2 * node + 1] -= 1
    return e


cdef inline double _ring_cost(double[::1] ring, long long[::1] istate, int node, double clock) noexcept nogil:
    cdef Py_ssize_t cap = ring.shape[0]
    cdef Py_ssize_t h = istate[2 * node]
    cdef Py_ssize_t c = istate[2 * node + 1]
    cdef Py_ssize_t k
    cdef double total = 0.0
    for k in range(c):
        total += clock - ring[(h + k) % cap]
    return total


def simulate_events(double[::1] fstate, long long[::1] istate,
                    double[::1] q1, double[::1] q2,
                    const double[::1] ua, const double[::1] us, const double[::1] ur,
                    Py_ssize_t n, double svc1, double svc2,
                    double lam1, double lam2, double p_leave,
                    double[::1] costs, double[::1] times,
                    signed char[::1] kinds, long long[::1] nsys):
    """Process ``n`` events, recording cost, clock, event kind and head count."""
    cdef Py_ssize_t m
    cdef double clock, t, e
    cdef int kind
    cdef Py_ssize_t pa = istate[4], ps = istate[5], pr = istate[6]
    with nogil:
        for m in range(n):
            t = fstate[1]
            kind = 0
            if fstate[2] < t:
                t = fstate[2]
                kind = 1
            if fstate[3] < t:
                t = fstate[3]
                kind = 2
            if fstate[4] < t:
                t = fstate[4]
                kind = 3
            clock = t
            fstate[0] = clock
            if kind == 0:
                _push(q1, istate, 0, clock)
                if istate[1] == 1:
                    fstate[3] = clock + (1.0 - us[ps]) * svc1
                    ps += 1
                fstate[1] = clock + (-log1p(-ua[pa])) / lam1
                pa += 1
            elif kind == 1:
                _push(q2, istate, 1, clock)
                if istate[3] == 1:
                    fstate[4] = clock + (1.0 - us[ps]) * svc2
                    ps += 1
                fstate[2] = clock + (-log1p(-ua[pa])) / lam2
                pa += 1
            elif kind == 2:
                e = _pop(q1, istate, 0)
                if istate[1] > 0:
                    fstate[3] = clock + (1.0 - us[ps]) * svc1
                    ps += 1
                else:
                    fstate[3] = INFINITY
                _push(q2, istate, 1, e)
                if istate[3] == 1:
                    fstate[4] = clock + (1.0 - us[ps]) * svc2
                    ps += 1
            else:
                e = _pop(q2, istate, 1)
                if istate[3] > 0:
                    fstate[4] = clock + (1.0 - us[ps]) * svc2
                    ps += 1
                else:
                    fstate[4] = INFINITY
                if ur[pr] >= p_leave:
                    _push(q1, istate, 0, e)
                    if istate[1] == 1:
                        fstate[3] = clock + (1.0 - us[ps]) * svc1
                        ps += 1
                pr += 1
            costs[m] = _ring_cost(q1, istate, 0, clock) + _ring_cost(q2, istate, 1, clock)
            times[m] = clock
            kinds[m] = kind
            nsys[m] = istate[1] + istate[3]
    istate[4] = pa
    istate[5] = ps
    istate[6] = pr


def fast_recursion(double[::1] z, double[:, ::1] w, double b, double c,
                   const double[::1] gw, const double[:, ::1] hw,
                   const double[::1] cost_plus, const double[::1] cost_minus,
                   bint with_hessian):
    """Apply ``len(cost_plus)`` averaging steps to ``z`` (and ``w``) in place."""
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t steps = cost_plus.shape[0]
    cdef Py_ssize_t m, i, j
    cdef double d, s
    cdef double one_b = 1.0 - b
    cdef double one_c = 1.0 - c
    with nogil:
        for m in range(steps):
            d = cost_plus[m] - cost_minus[m]
            for i in range(n):
                z[i] = one_b * z[i] + b * (gw[i] * d)
            if with_hessian:
                s = cost_plus[m] + cost_minus[m]
                for i in range(n):
                    for j in range(n):
                        w[i, j] = one_c * w[i, j] + c * (hw[i, j] * s)
