# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled path-simulation kernel.

Scalar per-path mirror of ``reference.py``: the same counter-based streams,
the same expressions with the same operation order (the extension is built
with -ffp-contract=off so the compiler cannot fuse multiply-adds), the same
cell-splitting rules.  Only the reduction over a chunk's payoffs differs in
rounding (sequential here, pairwise in NumPy).
"""

from libc.math cimport exp, log, sqrt, fmin, fmax

from scipy.special.cython_special cimport ndtri

from libc.stdint cimport int64_t, uint64_t

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t stoprate_mulhi64(uint64_t a, uint64_t b) {
    #ifdef __SIZEOF_INT128__
        return (uint64_t)(((__uint128_t)a * (__uint128_t)b) >> 64);
    #else
        uint64_t ah = a >> 32, al = a & 0xFFFFFFFFULL;
        uint64_t bh = b >> 32, bl = b & 0xFFFFFFFFULL;
        uint64_t t = ah * bl + ((al * bl) >> 32);
        return ah * bh + (t >> 32) + (((t & 0xFFFFFFFFULL) + al * bh) >> 32);
    #endif
    }
    """
    uint64_t stoprate_mulhi64(uint64_t a, uint64_t b) nogil

cdef uint64_t M0 = 0xD2E7470EE14C6C93ULL
cdef uint64_t M1 = 0xCA5A826395121157ULL
cdef uint64_t W0 = 0x9E3779B97F4A7C15ULL
cdef uint64_t W1 = 0xBB67AE8584CAA73BULL

cdef double TWO_NEG53 = 1.1102230246251565e-16  # 2**-53

cdef int MODE_DIRECT = 0
cdef int MODE_RB = 1


cdef inline void philox_block(uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3,
                              uint64_t k0, uint64_t k1, uint64_t* out) nogil:
    cdef int rnd
    cdef uint64_t hi0, lo0, hi1, lo1, n0, n1, n2, n3
    for rnd in range(10):
        hi0 = stoprate_mulhi64(M0, c0)
        lo0 = M0 * c0
        hi1 = stoprate_mulhi64(M1, c2)
        lo1 = M1 * c2
        n0 = hi1 ^ c1 ^ k0
        n1 = lo1
        n2 = hi0 ^ c3 ^ k1
        n3 = lo0
        c0 = n0; c1 = n1; c2 = n2; c3 = n3
        k0 = k0 + W0
        k1 = k1 + W1
    out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3


cdef inline double to_uniform(uint64_t o) nogil:
    return (<double>(o >> 11) + 0.5) * TWO_NEG53


cdef inline double poly_row(const double* c, int ncoef, double x) nogil:
    cdef double p = c[ncoef - 1]
    cdef int j
    for j in range(ncoef - 2, -1, -1):
        p = p * x + c[j]
    return p


cdef inline int cell_of(const double* bp, int n_cells, double x) nogil:
    cdef int i
    for i in range(n_cells):
        if x < bp[i + 1]:
            return i
    return n_cells - 1


def run_chunk(int mode, unsigned long long seed, long long p_lo, long long p_hi,
              double x0, double h, long long step_cap, double r,
              double a, double b,
              double[::1] bp, double[:, ::1] psi_cm, double[:, ::1] g_cm,
              double[::1] mu_c, double[::1] sigma_c):
    """Simulate paths [p_lo, p_hi); return (sum, sum_sq, n_a, n_b, n_clock, n_cens)."""
    cdef int n_cells = bp.shape[0] - 1
    if n_cells > 64:
        raise ValueError("too many rate/payoff pieces for the compiled kernel")
    cdef int np_psi = psi_cm.shape[1]
    cdef int np_g = g_cm.shape[1]
    cdef int np_mu = mu_c.shape[0]
    cdef int np_sg = sigma_c.shape[0]
    cdef const double* bpp = &bp[0]

    cdef double g_bnd_a = poly_row(&g_cm[0, 0], np_g, a)
    cdef double g_bnd_b = poly_row(&g_cm[n_cells - 1, 0], np_g, b)
    cdef double sqrt_h = sqrt(h)

    cdef double sum_v = 0.0, sum_sq = 0.0
    cdef int64_t n_a = 0, n_b = 0, n_clock = 0, n_cens = 0

    cdef uint64_t out[4]
    cdef uint64_t pid, seed_u = <uint64_t>seed
    cdef int64_t p
    cdef long long k
    cdef double x, acc, rb_acc, thr
    cdef double u_g, u_b, z, mu_v, sg, x1, ea, eb, pa, pb
    cdef bint dn, up, inside, hit_a, hit_b, exit_a, exit_b, exited, fired, flat, up_dir
    cdef double dx, th, y_end, dt_eff, lo, hi, span
    cdef double cl, ch, w, psi_lo, psi_hi, wfrac, dphi, dphi_tot
    cdef double t_k, rdt, cum, denom, th_lo, th_hi, prel_lo, prel_hi
    cdef double arg_lo, arg_hi, term, g_lo, g_hi, psi_x, g_x
    cdef double frac, x_tau, tau_f, tau_e, payoff, g_bnd
    cdef int i, i_lo, i_hi, cidx, done_kind
    cdef uint64_t bits_g, bits_b, cached2, cached3
    cdef double cell_dphi[64]
    cdef double cell_wfrac[64]
    cdef double cell_cl[64]
    cdef double cell_ch[64]
    cdef double cell_plo[64]
    cdef double cell_phi[64]

    with nogil:
        for p in range(p_lo, p_hi):
            pid = <uint64_t>p
            x = x0
            acc = 0.0
            rb_acc = 0.0
            thr = 0.0
            if mode == MODE_DIRECT:
                philox_block(0, 1, 0, 0, seed_u, pid, out)
                thr = -log(to_uniform(out[0]))
            cached2 = 0
            cached3 = 0
            done_kind = 3  # censored unless retired
            payoff = 0.0
            k = 0
            while k < step_cap:
                if k % 2 == 0:
                    philox_block(<uint64_t>(k >> 1), 0, 0, 0, seed_u, pid, out)
                    bits_g = out[0]
                    bits_b = out[1]
                    cached2 = out[2]
                    cached3 = out[3]
                else:
                    bits_g = cached2
                    bits_b = cached3
                u_g = to_uniform(bits_g)
                u_b = to_uniform(bits_b)
                z = ndtri(u_g)

                mu_v = poly_row(&mu_c[0], np_mu, x)
                sg = poly_row(&sigma_c[0], np_sg, x)
                x1 = x + mu_v * h + sg * sqrt_h * z

                dn = x1 <= a
                up = x1 >= b
                inside = not (dn or up)
                hit_a = False
                hit_b = False
                if inside:
                    ea = ((-2.0 * (x - a)) * (x1 - a)) / ((sg * sg) * h)
                    eb = ((-2.0 * (b - x)) * (b - x1)) / ((sg * sg) * h)
                    pa = exp(ea)
                    pb = exp(eb)
                    if u_b < pa:
                        hit_a = True
                    elif u_b < (pa + pb):
                        hit_b = True
                exit_a = dn or hit_a
                exit_b = up or hit_b
                exited = exit_a or exit_b

                dx = x1 - x
                th = 1.0
                if dn:
                    th = (a - x) / dx
                elif up:
                    th = (b - x) / dx
                elif hit_a:
                    th = (x - a) / ((x - a) + (x1 - a))
                elif hit_b:
                    th = (b - x) / ((b - x) + (b - x1))
                th = fmin(fmax(th, 0.0), 1.0)
                if exit_a:
                    y_end = a
                elif exit_b:
                    y_end = b
                else:
                    y_end = x1
                dt_eff = h * th

                lo = fmin(x, y_end)
                hi = fmax(x, y_end)
                span = hi - lo
                flat = span <= 0.0

                i_lo = cell_of(bpp, n_cells, lo)
                i_hi = cell_of(bpp, n_cells, hi)
                dphi_tot = 0.0
                for i in range(i_lo, i_hi + 1):
                    cl = fmax(bpp[i], lo)
                    ch = fmin(bpp[i + 1], hi)
                    w = ch - cl
                    if w > 0.0:
                        psi_lo = poly_row(&psi_cm[i, 0], np_psi, cl)
                        psi_hi = poly_row(&psi_cm[i, 0], np_psi, ch)
                        wfrac = (dt_eff * w) / span
                        dphi = wfrac * (0.5 * (psi_lo + psi_hi))
                    else:
                        psi_lo = 0.0
                        psi_hi = 0.0
                        wfrac = 0.0
                        dphi = 0.0
                    cell_cl[i - i_lo] = cl
                    cell_ch[i - i_lo] = ch
                    cell_plo[i - i_lo] = psi_lo
                    cell_phi[i - i_lo] = psi_hi
                    cell_wfrac[i - i_lo] = wfrac
                    cell_dphi[i - i_lo] = dphi
                    dphi_tot = dphi_tot + dphi
                if flat:
                    cidx = cell_of(bpp, n_cells, x)
                    psi_x = poly_row(&psi_cm[cidx, 0], np_psi, x)
                    dphi_tot = dt_eff * psi_x

                t_k = (<double>k) * h
                rdt = r * dt_eff

                if mode != MODE_DIRECT:
                    if not flat:
                        up_dir = y_end >= x
                        denom = y_end - x
                        cum = 0.0
                        for i in range(i_lo, i_hi + 1):
                            dphi = cell_dphi[i - i_lo]
                            if cell_wfrac[i - i_lo] > 0.0:
                                cl = cell_cl[i - i_lo]
                                ch = cell_ch[i - i_lo]
                                psi_lo = cell_plo[i - i_lo]
                                psi_hi = cell_phi[i - i_lo]
                                g_lo = poly_row(&g_cm[i, 0], np_g, cl)
                                g_hi = poly_row(&g_cm[i, 0], np_g, ch)
                                th_lo = (cl - x) / denom
                                th_hi = (ch - x) / denom
                                if up_dir:
                                    prel_lo = cum
                                    prel_hi = cum + dphi
                                else:
                                    prel_lo = dphi_tot - cum
                                    prel_hi = (dphi_tot - cum) - dphi
                                arg_lo = (acc + rdt * th_lo) + prel_lo
                                arg_hi = (acc + rdt * th_hi) + prel_hi
                                term = cell_wfrac[i - i_lo] * (0.5 * (
                                    exp(-arg_lo) * (psi_lo * g_lo)
                                    + exp(-arg_hi) * (psi_hi * g_hi)))
                                rb_acc = rb_acc + term
                            cum = cum + dphi
                    else:
                        cidx = cell_of(bpp, n_cells, x)
                        psi_x = poly_row(&psi_cm[cidx, 0], np_psi, x)
                        g_x = poly_row(&g_cm[cidx, 0], np_g, x)
                        term = (dt_eff * (0.5 * (exp(-acc)
                                + exp(-((acc + rdt) + dphi_tot))))) * (psi_x * g_x)
                        rb_acc = rb_acc + term

                    if exited:
                        g_bnd = g_bnd_a if exit_a else g_bnd_b
                        payoff = rb_acc + exp(-((acc + rdt) + dphi_tot)) * g_bnd
                        done_kind = 0 if exit_a else 1
                        break
                else:
                    fired = (acc + dphi_tot) >= thr
                    if fired:
                        frac = (thr - acc) / dphi_tot
                        x_tau = x + frac * (y_end - x)
                        tau_f = t_k + frac * dt_eff
                        cidx = cell_of(bpp, n_cells, x_tau)
                        payoff = exp(-(r * tau_f)) * poly_row(&g_cm[cidx, 0], np_g, x_tau)
                        done_kind = 2
                        break
                    elif exited:
                        tau_e = t_k + dt_eff
                        g_bnd = g_bnd_a if exit_a else g_bnd_b
                        payoff = exp(-(r * tau_e)) * g_bnd
                        done_kind = 0 if exit_a else 1
                        break

                if mode == MODE_DIRECT:
                    acc = acc + dphi_tot
                else:
                    acc = (acc + rdt) + dphi_tot
                x = x1
                k += 1

            if done_kind == 0:
                n_a += 1
            elif done_kind == 1:
                n_b += 1
            elif done_kind == 2:
                n_clock += 1
            else:
                n_cens += 1
            if done_kind != 3:
                sum_v += payoff
                sum_sq += payoff * payoff

    return sum_v, sum_sq, int(n_a), int(n_b), int(n_clock), int(n_cens)
