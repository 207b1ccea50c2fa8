"""Pure-Python path kernel; mirrors ``_kernel.pyx`` draw for draw.

Used when the compiled extension is unavailable or ``LEVYQUEUE_PURE=1``.
Both implementations consume the same random stream in the same order, so
for a given seed they produce identical observables.
"""

import math

MASK = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
STREAM_SALT = 0x632BE59BD9B4E019
TWO_PI = 6.283185307179586
INV_2_53 = 1.0 / 9007199254740992.0
INF = math.inf
NAN = math.nan


def _mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


class Stream:
    """SplitMix64 stream keyed by (seed, path index)."""

    __slots__ = ("s", "has_spare", "spare")

    def __init__(self, seed, index):
        self.s = _mix64((seed & MASK) ^ _mix64((index + STREAM_SALT) & MASK))
        self.has_spare = False
        self.spare = 0.0

    def uniform(self):
        self.s = (self.s + GOLDEN) & MASK
        return ((_mix64(self.s) >> 11) + 0.5) * INV_2_53

    def normal(self):
        if self.has_spare:
            self.has_spare = False
            return self.spare
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        a = TWO_PI * u2
        self.spare = r * math.sin(a)
        self.has_spare = True
        return r * math.cos(a)

    def mixture(self, atom, cum, rate):
        u = self.uniform()
        if u < atom:
            return 0.0
        k = 0
        n = len(cum)
        while k < n - 1 and u >= cum[k]:
            k += 1
        return -math.log(self.uniform()) / rate[k]

    def inverse_gaussian(self, mu, lam):
        y = self.normal()
        y = y * y
        r = mu * y / (2.0 * lam)
        x = mu / (1.0 + r + math.sqrt(r * (r + 2.0)))
        if self.uniform() * (mu + x) <= mu:
            return x
        return mu * mu / x

    def split_time(self, c1, c2, T):
        """Location of the junction of two first-passage legs with total time T.

        Legs of (unit-variance) lengths c1 then c2; this is the law of the
        argmin of a Brownian bridge and of an intermediate first-passage time.
        """
        if c1 <= 0.0:
            return 0.0
        if c2 <= 0.0:
            return T
        if self.uniform() * (c1 + c2) < c1:
            v = self.inverse_gaussian(c2 / c1, c2 * c2 / T)
        else:
            v = 1.0 / self.inverse_gaussian(c1 / c2, c1 * c1 / T)
        return T / (1.0 + v)


def _bridge_min(a, b, var_dt, u):
    d = b - a
    return 0.5 * (a + b - math.sqrt(d * d - 2.0 * var_dt * math.log(u)))


def _bridge_max(a, b, var_dt, u):
    d = b - a
    return 0.5 * (a + b + math.sqrt(d * d - 2.0 * var_dt * math.log(u)))


def simulate_queue(
    mu, sigma, lam_up, up_cum, up_rate, lam_dn, dn_cum, dn_rate,
    q, init_atom, init_cum, init_rate, q0_in, use_q0_in, grid, h, seed, start,
    horizon, q0, x_end, x_min, g_min, tau, overshoot, tau_c, g_min_c,
):
    n = len(horizon)
    lam = lam_up + lam_dn
    var = sigma * sigma
    for i in range(n):
        rng = Stream(seed, start + i)
        H = -math.log(rng.uniform()) / q
        Q0 = q0_in[i] if use_q0_in else rng.mixture(init_atom, init_cum, init_rate)
        ell = -Q0
        t = 0.0
        x = 0.0
        xmin = 0.0
        gmin = gminc = 0.0
        if Q0 <= 0.0:
            hit = True
            ttau = ttauc = 0.0
            D = 0.0
        else:
            hit = False
            ttau = ttauc = INF
            D = NAN
        k = 1
        while True:
            if lam > 0.0:
                seg_end = t - math.log(rng.uniform()) / lam
            else:
                seg_end = INF
            last = False
            if seg_end >= H:
                seg_end = H
                last = True
            if not grid:
                dt = seg_end - t
                a = x
                b = a + mu * dt + sigma * math.sqrt(dt) * rng.normal()
                if sigma > 0.0:
                    m = _bridge_min(a, b, var * dt, rng.uniform())
                    if m <= xmin:
                        th = rng.split_time((a - m) / sigma, (b - m) / sigma, dt)
                        if not hit and m <= ell:
                            hit = True
                            ttau = t + rng.split_time((a - ell) / sigma, (ell - m) / sigma, th)
                            ttauc = ttau
                            D = 0.0
                        xmin = m
                        gmin = gminc = t + th
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
                            ttau = ttauc = min(t + dt * (a - ell) / (a - b), seg_end)
                            D = 0.0
                        xmin = m
                        gmin = gminc = tm
                x = b
            else:
                c0 = t
                a = x
                while True:
                    gp = k * h
                    if gp < seg_end:
                        c1 = gp
                        end_seg = False
                    else:
                        c1 = seg_end
                        end_seg = True
                    dt = c1 - c0
                    if dt > 0.0:
                        b = a + mu * dt + sigma * math.sqrt(dt) * rng.normal()
                        coarse = 2.0 * ((k + 1) // 2) * h
                        if coarse > seg_end:
                            coarse = seg_end
                        if sigma > 0.0:
                            m = _bridge_min(a, b, var * dt, rng.uniform())
                            tm = c1
                            tmc = coarse
                        elif b <= a:
                            m = b
                            tm = tmc = c1
                        else:
                            m = a
                            tm = tmc = c0
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
            if rng.uniform() * lam < lam_up:
                x += rng.mixture(0.0, up_cum, up_rate)
            else:
                x -= rng.mixture(0.0, dn_cum, dn_rate)
                if x <= xmin:
                    xmin = x
                    gmin = gminc = t
                if not hit and x <= ell:
                    hit = True
                    ttau = ttauc = t
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
    mu, sigma, lam_up, up_cum, up_rate, lam_dn, dn_cum, dn_rate,
    tail_w, tail_rate, eps, block, max_horizon, seed, start,
    sup_out, argmax_out, horizon_out,
):
    n = len(sup_out)
    lam = lam_up + lam_dn
    var = sigma * sigma
    ntail = len(tail_w)
    for i in range(n):
        rng = Stream(seed, start + i)
        t = 0.0
        x = 0.0
        M = 0.0
        G = 0.0
        next_check = block
        jump_at = t - math.log(rng.uniform()) / lam if lam > 0.0 else INF
        while True:
            jumped = jump_at <= next_check
            seg_end = jump_at if jumped else next_check
            dt = seg_end - t
            a = x
            b = a + mu * dt + sigma * math.sqrt(dt) * rng.normal()
            if sigma > 0.0:
                mx = _bridge_max(a, b, var * dt, rng.uniform())
                if mx > M:
                    G = t + rng.split_time((mx - a) / sigma, (mx - b) / sigma, dt)
                    M = mx
            elif b > M:
                M = b
                G = seg_end
            x = b
            t = seg_end
            if jumped:
                if rng.uniform() * lam < lam_up:
                    x += rng.mixture(0.0, up_cum, up_rate)
                    if x > M:
                        M = x
                        G = t
                else:
                    x -= rng.mixture(0.0, dn_cum, dn_rate)
                jump_at = t - math.log(rng.uniform()) / lam
            else:
                if ntail > 0:
                    p = 0.0
                    for j in range(ntail):
                        p += tail_w[j] * math.exp(-tail_rate[j] * (M - x))
                    if p < eps:
                        break
                if t >= max_horizon:
                    break
                next_check += block
        sup_out[i] = M
        argmax_out[i] = G
        horizon_out[i] = t
