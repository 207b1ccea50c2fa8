# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled path kernel.  Keep in lockstep with ``_kernel_py.py``."""

from libc.math cimport log, sqrt, sin, cos, exp, INFINITY, NAN
from libc.stdint cimport uint64_t, int64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t STREAM_SALT = 0x632BE59BD9B4E019ULL
cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef struct Stream:
    uint64_t s
    int has_spare
    double spare


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline void stream_init(Stream* st, uint64_t seed, uint64_t index) nogil:
    st.s = mix64(seed ^ mix64(index + STREAM_SALT))
    st.has_spare = 0
    st.spare = 0.0


cdef inline double uniform(Stream* st) nogil:
    st.s = st.s + GOLDEN
    return (<double>(mix64(st.s) >> 11) + 0.5) * INV_2_53


cdef inline double normal(Stream* st) nogil:
    cdef double u1, u2, r, a
    if st.has_spare:
        st.has_spare = 0
        return st.spare
    u1 = uniform(st)
    u2 = uniform(st)
    r = sqrt(-2.0 * log(u1))
    a = TWO_PI * u2
    st.spare = r * sin(a)
    st.has_spare = 1
    return r * cos(a)


cdef inline double mixture(Stream* st, double atom, const double[::1] cum,
                           const double[::1] rate) nogil:
    cdef double u = uniform(st)
    cdef Py_ssize_t k = 0
    cdef Py_ssize_t n = cum.shape[0]
    if u < atom:
        return 0.0
    while k < n - 1 and u >= cum[k]:
        k += 1
    return -log(uniform(st)) / rate[k]


cdef inline double inverse_gaussian(Stream* st, double mu, double lam) nogil:
    cdef double y = normal(st)
    cdef double r, x
    y = y * y
    r = mu * y / (2.0 * lam)
    x = mu / (1.0 + r + sqrt(r * (r + 2.0)))
    if uniform(st) * (mu + x) <= mu:
        return x
    return mu * mu / x


cdef inline double split_time(Stream* st, double c1, double c2, double T) nogil:
    cdef double v
    if c1 <= 0.0:
        return 0.0
    if c2 <= 0.0:
        return T
    if uniform(st) * (c1 + c2) < c1:
        v = inverse_gaussian(st, c2 / c1, c2 * c2 / T)
    else:
        v = 1.0 / inverse_gaussian(st, c1 / c2, c1 * c1 / T)
    return T / (1.0 + v)


cdef inline double bridge_min(double a, double b, double var_dt, double u) nogil:
    cdef double d = b - a
    return 0.5 * (a + b - sqrt(d * d - 2.0 * var_dt * log(u)))


cdef inline double bridge_max(double a, double b, double var_dt, double u) nogil:
    cdef double d = b - a
    return 0.5 * (a + b + sqrt(d * d - 2.0 * var_dt * log(u)))


def simulate_queue(
    double mu, double sigma, double lam_up, const double[::1] up_cum, const double[::1] up_rate,
    double lam_dn, const double[::1] dn_cum, const double[::1] dn_rate,
    double q, double init_atom, const double[::1] init_cum, const double[::1] init_rate,
    const double[::1] q0_in, bint use_q0_in, bint grid, double h, uint64_t seed, int64_t start,
    double[::1] horizon, double[::1] q0, double[::1] x_end, double[::1] x_min,
    double[::1] g_min, double[::1] tau, double[::1] overshoot,
    double[::1] tau_c, double[::1] g_min_c,
):
    cdef Py_ssize_t n = horizon.shape[0]
    cdef Py_ssize_t i
    cdef double lam = lam_up + lam_dn
    cdef double var = sigma * sigma
    cdef Stream st
    cdef double H, Q0, ell, t, x, xmin, gmin, gminc, ttau, ttauc, D
    cdef double seg_end, dt, a, b, m, th, c0, c1, gp, coarse, tm, tmc
    cdef bint hit, last, end_seg
    cdef int64_t k

    with nogil:
        for i in range(n):
            stream_init(&st, seed, <uint64_t>(start + i))
            H = -log(uniform(&st)) / q
            if use_q0_in:
                Q0 = q0_in[i]
            else:
                Q0 = mixture(&st, init_atom, init_cum, init_rate)
            ell = -Q0
            t = 0.0
            x = 0.0
            xmin = 0.0
            gmin = 0.0
            gminc = 0.0
            if Q0 <= 0.0:
                hit = True
                ttau = 0.0
                ttauc = 0.0
                D = 0.0
            else:
                hit = False
                ttau = INFINITY
                ttauc = INFINITY
                D = NAN
            k = 1
            while True:
                if lam > 0.0:
                    seg_end = t - log(uniform(&st)) / lam
                else:
                    seg_end = INFINITY
                last = False
                if seg_end >= H:
                    seg_end = H
                    last = True
                if not grid:
                    dt = seg_end - t
                    a = x
                    b = a + mu * dt + sigma * sqrt(dt) * normal(&st)
                    if sigma > 0.0:
                        m = bridge_min(a, b, var * dt, uniform(&st))
                        if m <= xmin:
                            th = split_time(&st, (a - m) / sigma, (b - m) / sigma, dt)
                            if not hit and m <= ell:
                                hit = True
                                ttau = t + split_time(&st, (a - ell) / sigma, (ell - m) / sigma, th)
                                ttauc = ttau
                                D = 0.0
                            xmin = m
                            gmin = t + th
                            gminc = gmin
                    else:
                        if b <= a:
                            m = b
                            tm = seg_end
                        else:
                            m = a
                            tm = t
                        if m <= xmin:
                            if not hit and m <= ell:
                                hit = True
                                ttau = t + dt * (a - ell) / (a - b)
                                if ttau > seg_end:
                                    ttau = seg_end
                                ttauc = ttau
                                D = 0.0
                            xmin = m
                            gmin = tm
                            gminc = gmin
                    x = b
                else:
                    c0 = t
                    a = x
                    while True:
                        gp = <double>k * h
                        if gp < seg_end:
                            c1 = gp
                            end_seg = False
                        else:
                            c1 = seg_end
                            end_seg = True
                        dt = c1 - c0
                        if dt > 0.0:
                            b = a + mu * dt + sigma * sqrt(dt) * normal(&st)
                            coarse = 2.0 * <double>((k + 1) // 2) * h
                            if coarse > seg_end:
                                coarse = seg_end
                            if sigma > 0.0:
                                m = bridge_min(a, b, var * dt, uniform(&st))
                                tm = c1
                                tmc = coarse
                            elif b <= a:
                                m = b
                                tm = c1
                                tmc = c1
                            else:
                                m = a
                                tm = c0
                                tmc = c0
                            if m <= xmin:
                                if not hit and m <= ell:
                                    hit = True
                                    ttau = c1
                                    ttauc = coarse
                                    D = 0.0
                                xmin = m
                                gmin = tm
                                gminc = tmc
                            a = b
                        if end_seg:
                            break
                        k += 1
                        c0 = c1
                    x = a
                t = seg_end
                if last:
                    break
                if uniform(&st) * lam < lam_up:
                    x += mixture(&st, 0.0, up_cum, up_rate)
                else:
                    x -= mixture(&st, 0.0, dn_cum, dn_rate)
                    if x <= xmin:
                        xmin = x
                        gmin = t
                        gminc = t
                    if not hit and x <= ell:
                        hit = True
                        ttau = t
                        ttauc = t
                        D = ell - x
            horizon[i] = H
            q0[i] = Q0
            x_end[i] = x
            x_min[i] = xmin
            g_min[i] = gmin
            g_min_c[i] = gminc
            tau[i] = ttau
            tau_c[i] = ttauc
            overshoot[i] = D


def simulate_supremum(
    double mu, double sigma, double lam_up, const double[::1] up_cum, const double[::1] up_rate,
    double lam_dn, const double[::1] dn_cum, const double[::1] dn_rate,
    const double[::1] tail_w, const double[::1] tail_rate, double eps, double block,
    double max_horizon, uint64_t seed, int64_t start,
    double[::1] sup_out, double[::1] argmax_out, double[::1] horizon_out,
):
    cdef Py_ssize_t n = sup_out.shape[0]
    cdef Py_ssize_t ntail = tail_w.shape[0]
    cdef Py_ssize_t i, j
    cdef double lam = lam_up + lam_dn
    cdef double var = sigma * sigma
    cdef Stream st
    cdef double t, x, M, G, next_check, jump_at, seg_end, dt, a, b, mx, p
    cdef bint jumped

    with nogil:
        for i in range(n):
            stream_init(&st, seed, <uint64_t>(start + i))
            t = 0.0
            x = 0.0
            M = 0.0
            G = 0.0
            next_check = block
            if lam > 0.0:
                jump_at = t - log(uniform(&st)) / lam
            else:
                jump_at = INFINITY
            while True:
                jumped = jump_at <= next_check
                if jumped:
                    seg_end = jump_at
                else:
                    seg_end = next_check
                dt = seg_end - t
                a = x
                b = a + mu * dt + sigma * sqrt(dt) * normal(&st)
                if sigma > 0.0:
                    mx = bridge_max(a, b, var * dt, uniform(&st))
                    if mx > M:
                        G = t + split_time(&st, (mx - a) / sigma, (mx - b) / sigma, dt)
                        M = mx
                elif b > M:
                    M = b
                    G = seg_end
                x = b
                t = seg_end
                if jumped:
                    if uniform(&st) * lam < lam_up:
                        x += mixture(&st, 0.0, up_cum, up_rate)
                        if x > M:
                            M = x
                            G = t
                    else:
                        x -= mixture(&st, 0.0, dn_cum, dn_rate)
                    jump_at = t - log(uniform(&st)) / lam
                else:
                    if ntail > 0:
                        p = 0.0
                        for j in range(ntail):
                            p += tail_w[j] * exp(-tail_rate[j] * (M - x))
                        if p < eps:
                            break
                    if t >= max_horizon:
                        break
                    next_check += block
            sup_out[i] = M
            argmax_out[i] = G
            horizon_out[i] = t
