"""Pure-NumPy lockstep simulation kernel.

All active paths of a chunk advance together one Euler-Maruyama step at a
time; finished paths are compacted out.  Per step and path:

1. propose ``x1 = x + mu(x) h + sigma(x) sqrt(h) z`` with ``z`` from the
   path's counter-based stream;
2. detect an interval exit, either directly (``x1`` beyond a boundary,
   crossing located by linear interpolation) or via the Brownian-bridge test
   ``u < exp(-2 (x-a)(x1-a) / (sigma(x)^2 h))`` (crossing located by the
   distance-proportional rule ``theta = d0 / (d0 + d1)``);
3. integrate the stopping rate over the traversed segment with the
   trapezoidal rule, splitting the segment at every rate/payoff breakpoint it
   straddles (cells are processed in ascending spatial order regardless of
   travel direction, so both backends sum identically);
4. mode ``direct``: fire the clock when the cumulative rate integral reaches
   the path's exponential threshold, locating the firing time by linear
   inversion of the step's clock increment;
   mode ``rao-blackwell``: accumulate the closed-form conditional expectation
   ``int e^{-rt - Phi} psi g dt`` cell by cell instead of drawing a
   threshold.

The compiled kernel reproduces this arithmetic operation for operation
(``-ffp-contract=off``); only the final reduction over a chunk's payoffs may
differ in rounding (pairwise vs sequential summation).
"""

import numpy as np
from scipy.special import ndtri

from .philox import exp_variates, trajectory_block, uniform_from_bits

MODE_DIRECT = 0
MODE_RB = 1
MODE_SURVIVAL = 2

KIND_EXIT_A = 0
KIND_EXIT_B = 1
KIND_CLOCK = 2
KIND_CENSORED = 3


def _poly_eval(coeffs, x):
    p = np.full_like(x, coeffs[-1])
    for j in range(len(coeffs) - 2, -1, -1):
        p = p * x + coeffs[j]
    return p


def _poly_eval_rows(cm, idx, x):
    """Horner with a per-element row of the padded coefficient matrix."""
    p = cm[idx, -1]
    for j in range(cm.shape[1] - 2, -1, -1):
        p = p * x + cm[idx, j]
    return p


def _cell_of(bp, x):
    idx = np.searchsorted(bp, x, side="right") - 1
    return np.clip(idx, 0, len(bp) - 2)


def make_poly_evaluators(bp, psi_cm, g_cm, mu_c, sigma_c):
    """Evaluator bundle for polynomial coefficients (compiled-kernel parity)."""
    bp = np.asarray(bp, dtype=np.float64)
    psi_cm = np.asarray(psi_cm, dtype=np.float64)
    g_cm = np.asarray(g_cm, dtype=np.float64)
    mu_c = np.asarray(mu_c, dtype=np.float64)
    sigma_c = np.asarray(sigma_c, dtype=np.float64)

    def mu_f(x):
        return _poly_eval(mu_c, x)

    def sg_f(x):
        return _poly_eval(sigma_c, x)

    def psi_f(i, x):
        return _poly_eval(psi_cm[i], x)

    def g_f(i, x):
        return _poly_eval(g_cm[i], x)

    def psi_at(x):
        return _poly_eval_rows(psi_cm, _cell_of(bp, x), x)

    def g_at(x):
        return _poly_eval_rows(g_cm, _cell_of(bp, x), x)

    return mu_f, sg_f, psi_f, g_f, psi_at, g_at


def make_callable_evaluators(bp, psi_pieces, g_pieces, mu, sigma):
    """Evaluator bundle for arbitrary vectorized callables (generic path)."""
    bp = np.asarray(bp, dtype=np.float64)

    def piece_eval(piece, x):
        if callable(piece):
            return np.asarray(piece(x), dtype=np.float64)
        return _poly_eval(np.asarray(piece, dtype=np.float64), x)

    def mu_f(x):
        return np.asarray(mu(x), dtype=np.float64)

    def sg_f(x):
        return np.asarray(sigma(x), dtype=np.float64)

    def psi_f(i, x):
        return piece_eval(psi_pieces[i], x)

    def g_f(i, x):
        return piece_eval(g_pieces[i], x)

    def _at(pieces, x):
        idx = _cell_of(bp, x)
        out = np.empty_like(x)
        for i in range(len(bp) - 1):
            m = idx == i
            if np.any(m):
                out[m] = piece_eval(pieces[i], x[m])
        return out

    def psi_at(x):
        return _at(psi_pieces, x)

    def g_at(x):
        return _at(g_pieces, x)

    return mu_f, sg_f, psi_f, g_f, psi_at, g_at


def run_chunk(mode, seed, p_lo, p_hi, x0, h, step_cap, r, a, b,
              bp, psi_cm, g_cm, mu_c, sigma_c):
    """Simulate paths [p_lo, p_hi) and return accumulated estimator sums.

    Returns ``(sum, sum_sq, n_exit_a, n_exit_b, n_clock, n_censored)``;
    censored paths contribute zero to the sums.
    """
    bp = np.asarray(bp, dtype=np.float64)
    evals = make_poly_evaluators(bp, psi_cm, g_cm, mu_c, sigma_c)
    payoffs, kind, _ = _run_paths(
        mode, seed, p_lo, p_hi, x0, h, step_cap, r, a, b, bp, evals
    )
    return _reduce(payoffs, kind)


def run_chunk_generic(mode, seed, p_lo, p_hi, x0, h, step_cap, r, a, b,
                      bp, psi_pieces, g_pieces, mu, sigma):
    """As :func:`run_chunk` but with callable coefficients/pieces."""
    bp = np.asarray(bp, dtype=np.float64)
    evals = make_callable_evaluators(bp, psi_pieces, g_pieces, mu, sigma)
    payoffs, kind, _ = _run_paths(
        mode, seed, p_lo, p_hi, x0, h, step_cap, r, a, b, bp, evals
    )
    return _reduce(payoffs, kind)


def _reduce(payoffs, kind):
    return (
        float(np.sum(payoffs)),
        float(np.sum(payoffs * payoffs)),
        int(np.sum(kind == KIND_EXIT_A)),
        int(np.sum(kind == KIND_EXIT_B)),
        int(np.sum(kind == KIND_CLOCK)),
        int(np.sum(kind == KIND_CENSORED)),
    )


def run_paths_detailed(mode, seed, p_lo, p_hi, x0, h, step_cap, r, a, b,
                       bp, evals, crossing=None, record=False):
    """Test/inspection entry point returning per-path results."""
    return _run_paths(mode, seed, p_lo, p_hi, x0, h, step_cap, r, a, b,
                      np.asarray(bp, dtype=np.float64), evals,
                      crossing=crossing, record=record)


def _run_paths(mode, seed, p_lo, p_hi, x0, h, step_cap, r, a, b, bp, evals,
               crossing=None, record=False):
    mu_f, sg_f, psi_f, g_f, psi_at, g_at = evals
    n = p_hi - p_lo
    if record and n != 1:
        raise ValueError("recording supports a single path at a time")

    seed_u = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    ids = np.arange(p_lo, p_hi, dtype=np.uint64)
    pos = np.arange(n)  # position in the result arrays

    payoffs = np.zeros(n)
    kind = np.full(n, KIND_CENSORED, dtype=np.int64)
    exit_times = np.zeros(n)
    exit_states = np.full(n, np.nan)
    crossings = np.zeros(n, dtype=np.int64)

    x = np.full(n, float(x0))
    acc = np.zeros(n)  # direct: clock integral; rb/survival: r*t + clock
    rb_acc = np.zeros(n)
    if mode == MODE_DIRECT:
        thresholds = exp_variates(seed_u, ids)
    else:
        thresholds = None

    if crossing is not None:
        y_lvl, eps_dc = crossing
        armed = x >= (y_lvl + eps_dc)
    g_bnd_a = float(g_f(0, np.array([a]))[0])
    g_bnd_b = float(g_f(len(bp) - 2, np.array([b]))[0])

    sqrt_h = np.sqrt(h)
    n_cells = len(bp) - 1
    cache = None
    ts_rec = [0.0]
    xs_rec = [float(x0)]

    k = 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        while x.size > 0 and k < step_cap:
            if k % 2 == 0:
                o0, o1, o2, o3 = trajectory_block(seed_u, ids, k >> 1)
                bits_g, bits_b = o0, o1
                cache = (o2, o3)
            else:
                bits_g, bits_b = cache
            u_g = uniform_from_bits(bits_g)
            u_b = uniform_from_bits(bits_b)
            z = ndtri(u_g)

            mu_v = mu_f(x)
            sg = sg_f(x)
            x1 = x + mu_v * h + sg * sqrt_h * z

            dn = x1 <= a
            up = x1 >= b
            inside = ~(dn | up)
            ea = ((-2.0 * (x - a)) * (x1 - a)) / ((sg * sg) * h)
            eb = ((-2.0 * (b - x)) * (b - x1)) / ((sg * sg) * h)
            pa = np.exp(ea)
            pb = np.exp(eb)
            hit_a = inside & (u_b < pa)
            hit_b = inside & ~hit_a & (u_b < (pa + pb))
            exit_a = dn | hit_a
            exit_b = up | hit_b
            exited = exit_a | exit_b

            dx = x1 - x
            th = np.ones_like(x)
            th = np.where(dn, (a - x) / dx, th)
            th = np.where(up, (b - x) / dx, th)
            th = np.where(hit_a, (x - a) / ((x - a) + (x1 - a)), th)
            th = np.where(hit_b, (b - x) / ((b - x) + (b - x1)), th)
            th = np.minimum(np.maximum(th, 0.0), 1.0)
            y_end = np.where(exit_a, a, np.where(exit_b, b, x1))
            dt_eff = h * th

            lo = np.minimum(x, y_end)
            hi = np.maximum(x, y_end)
            span = hi - lo
            flat = span <= 0.0

            i_lo = int(_cell_of(bp, np.min(lo)))
            i_hi = int(_cell_of(bp, np.max(hi)))
            cells = []
            dphi_tot = np.zeros_like(x)
            for i in range(i_lo, i_hi + 1):
                cl = np.maximum(bp[i], lo)
                ch = np.minimum(bp[i + 1], hi)
                w = ch - cl
                mk = w > 0.0
                psi_lo = psi_f(i, cl)
                psi_hi = psi_f(i, ch)
                wfrac = (dt_eff * w) / span
                dphi = wfrac * (0.5 * (psi_lo + psi_hi))
                dphi = np.where(mk, dphi, 0.0)
                cells.append((i, cl, ch, w, mk, psi_lo, psi_hi, dphi, wfrac))
                dphi_tot = dphi_tot + dphi
            if np.any(flat):
                psi_x = psi_at(x)
                dphi_tot = np.where(flat, dt_eff * psi_x, dphi_tot)

            t_k = k * h
            rdt = r * dt_eff

            if mode != MODE_DIRECT:
                up_dir = y_end >= x
                denom = y_end - x
                cum = np.zeros_like(x)
                step_rb = np.zeros_like(x)
                if mode == MODE_RB:
                    for (i, cl, ch, w, mk, psi_lo, psi_hi, dphi, wfrac) in cells:
                        g_lo = g_f(i, cl)
                        g_hi = g_f(i, ch)
                        th_lo = (cl - x) / denom
                        th_hi = (ch - x) / denom
                        prel_lo = np.where(up_dir, cum, dphi_tot - cum)
                        prel_hi = np.where(up_dir, cum + dphi, (dphi_tot - cum) - dphi)
                        arg_lo = (acc + rdt * th_lo) + prel_lo
                        arg_hi = (acc + rdt * th_hi) + prel_hi
                        term = wfrac * (0.5 * (np.exp(-arg_lo) * (psi_lo * g_lo)
                                               + np.exp(-arg_hi) * (psi_hi * g_hi)))
                        step_rb = step_rb + np.where(mk, term, 0.0)
                        cum = cum + dphi
                    if np.any(flat):
                        psi_x = psi_at(x)
                        g_x = g_at(x)
                        term_flat = (dt_eff * (0.5 * (np.exp(-acc)
                                     + np.exp(-((acc + rdt) + dphi_tot))))) * (psi_x * g_x)
                        step_rb = np.where(flat, term_flat, step_rb)
                    rb_acc = rb_acc + step_rb

                done = exited
                if np.any(done):
                    g_bnd = np.where(exit_a, g_bnd_a, g_bnd_b)
                    final = rb_acc + np.exp(-((acc + rdt) + dphi_tot)) * g_bnd
                    idx_done = pos[done]
                    payoffs[idx_done] = final[done]
                    kind[idx_done] = np.where(exit_a[done], KIND_EXIT_A, KIND_EXIT_B)
                    exit_times[idx_done] = t_k + dt_eff[done]
                    exit_states[idx_done] = y_end[done]
            else:
                fired = (acc + dphi_tot) >= thresholds
                safe_dphi = np.where(dphi_tot > 0.0, dphi_tot, 1.0)
                frac = (thresholds - acc) / safe_dphi
                x_tau = x + frac * (y_end - x)
                tau_f = t_k + frac * dt_eff
                done = fired | exited
                if np.any(done):
                    g_fire = g_at(x_tau)
                    disc_f = np.exp(-(r * tau_f))
                    pf_fired = disc_f * g_fire
                    tau_e = t_k + dt_eff
                    disc_e = np.exp(-(r * tau_e))
                    g_bnd = np.where(exit_a, g_bnd_a, g_bnd_b)
                    pf_exit = disc_e * g_bnd
                    idx_done = pos[done]
                    f_done = fired[done]
                    payoffs[idx_done] = np.where(f_done, pf_fired[done], pf_exit[done])
                    kind[idx_done] = np.where(
                        f_done, KIND_CLOCK,
                        np.where(exit_a[done], KIND_EXIT_A, KIND_EXIT_B),
                    )
                    exit_times[idx_done] = np.where(f_done, tau_f[done], tau_e[done])
                    exit_states[idx_done] = np.where(f_done, x_tau[done], y_end[done])

            if crossing is not None:
                post = y_end
                crossed = armed & (post <= y_lvl)
                crossings[pos[crossed]] += 1
                armed = (armed | (post >= (y_lvl + eps_dc))) & ~crossed

            if record:
                if bool(done[0]):
                    ts_rec.append(float(exit_times[pos[0]]))
                    xs_rec.append(float(exit_states[pos[0]]))
                else:
                    ts_rec.append((k + 1) * h)
                    xs_rec.append(float(x1[0]))

            keep = ~done
            if mode == MODE_DIRECT:
                acc = acc + dphi_tot
            else:
                acc = (acc + rdt) + dphi_tot
            x = x1[keep]
            acc = acc[keep]
            ids = ids[keep]
            pos = pos[keep]
            if mode == MODE_DIRECT:
                thresholds = thresholds[keep]
            else:
                rb_acc = rb_acc[keep]
            if crossing is not None:
                armed = armed[keep]
            cache = (cache[0][keep], cache[1][keep])
            k += 1

    extras = {}
    if record:
        extras["timestamps"] = np.asarray(ts_rec)
        extras["states"] = np.asarray(xs_rec)
        extras["exit_time"] = float(exit_times[0])
        extras["exit_state"] = float(exit_states[0])
    extras["exit_times"] = exit_times
    extras["exit_states"] = exit_states
    if crossing is not None:
        extras["crossings"] = crossings
    return payoffs, kind, extras
