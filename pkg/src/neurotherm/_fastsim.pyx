# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled simulation kernel for the thermoregulator hybrid models.

Implements the same semantics as the pure-Python path (adaptive
Dormand-Prince 5(4) flow integration, guard-crossing detection on every
accepted step, Illinois-method event localization, jump-first cascades)
with the whole solve loop in C.  Selected automatically by
``neurotherm.backend`` when the extension is built.
"""

import numpy as np

from libc.math cimport exp, fabs, fmax, fmin, log, pow, sqrt
from libc.stdlib cimport free, malloc, realloc
from libc.string cimport memcpy

from .errors import IntegratorFailure, NoProgress

DEF MAXDIM = 16
DEF MAXG = 8

MODEL_B = 0
MODEL_A = 1


cdef struct Pars:
    double r1, r2, r3, r4, r5, r7, r8, r9, r10
    double c[4]
    double c_fb, c_ff, c_lp
    double v_cc, v_a, v_on, v_off, v_th_sw
    double k_p, v_th_fet, v_s
    double alpha, act_gain
    double ntc_r25, ntc_b
    double r_lp_in, r_lp_gnd, r_amp_fb, r_amp_gnd
    double k_ff


cdef struct Sim:
    Pars P
    int model
    int dim
    int ng
    int amb_mode           # 0 constant, 1 ramp
    double amb_t0, amb_t1, amb_dur
    int freeze_plant
    double a_ratio[4]
    double discharge_cap


cdef void load_pars(double[::1] p, Pars* P):
    # index order mirrors circuit.PARAM_FIELDS
    P.r1 = p[0]; P.r2 = p[1]; P.r3 = p[2]; P.r4 = p[3]; P.r5 = p[4]
    P.r7 = p[5]; P.r8 = p[6]; P.r9 = p[7]; P.r10 = p[8]
    P.c[0] = p[9]; P.c[1] = p[10]; P.c[2] = p[11]; P.c[3] = p[12]
    P.c_fb = p[13]; P.c_ff = p[14]; P.c_lp = p[15]
    P.v_cc = p[16]; P.v_a = p[17]; P.v_on = p[18]; P.v_off = p[19]
    P.v_th_sw = p[20]; P.k_p = p[21]; P.v_th_fet = p[22]; P.v_s = p[23]
    P.alpha = p[24]; P.act_gain = p[25]
    P.ntc_r25 = p[26]; P.ntc_b = p[27]
    P.r_lp_in = p[28]; P.r_lp_gnd = p[29]
    P.r_amp_fb = p[30]; P.r_amp_gnd = p[31]
    P.k_ff = p[32]


cdef inline double ambient(Sim* s, double t):
    if s.amb_mode == 0:
        return s.amb_t0
    cdef double f = t / s.amb_dur
    if f < 0.0:
        f = 0.0
    elif f > 1.0:
        f = 1.0
    return s.amb_t0 + (s.amb_t1 - s.amb_t0) * f


cdef inline double ntc_res(Pars* P, double T):
    return P.ntc_r25 * exp(P.ntc_b * (1.0 / (T + 273.15) - 1.0 / 298.15))


cdef inline double vg_warm(Pars* P, double T):
    cdef double r = ntc_res(P, T)
    return P.v_cc / (1.0 + 0.5 * P.r1 * (1.0 / P.r3 + 1.0 / (r + P.r2)))


cdef inline double vg_cold(Pars* P, double T):
    cdef double r = ntc_res(P, T)
    cdef double par = 1.0 / (1.0 / (P.r2 + P.r7) + 1.0 / (P.r8 + r))
    return P.v_cc * P.r9 / (P.r9 + par)


cdef inline double ifet(Pars* P, double vg):
    cdef double ov = vg - P.v_s - P.v_th_fet
    return P.k_p * ov * ov


cdef void rhs(Sim* s, double t, double* x, double* dx):
    cdef Pars* P = &s.P
    cdef double t_amb = ambient(s, t)
    cdef double u = (x[5] - 0.5 * P.v_a) + P.k_ff * (x[6] - 0.5 * P.v_a)
    cdef double v_lp = x[7]
    cdef double v_out = (1.0 + P.r_amp_fb / P.r_amp_gnd) * v_lp
    cdef double cur[4]
    cdef int i
    cur[0] = ifet(P, vg_warm(P, x[0]))
    cur[1] = ifet(P, vg_cold(P, x[0]))
    cur[2] = ifet(P, vg_warm(P, t_amb))
    cur[3] = ifet(P, vg_cold(P, t_amb))
    if s.freeze_plant:
        dx[0] = 0.0
    else:
        dx[0] = P.alpha * (t_amb - x[0]) - P.act_gain * v_out
    if s.model == MODEL_B:
        for i in range(4):
            dx[1 + i] = cur[i] / P.c[i]
        dx[5] = -(2.0 * x[5] - P.v_a) / (P.c_fb * P.r10)
        dx[6] = -(2.0 * x[6] - P.v_a) / (P.c_ff * P.r10)
    else:
        for i in range(4):
            dx[1 + i] = (cur[i] - x[1 + i] * x[8 + i] / P.r5) / P.c[i]
        dx[5] = -(2.0 * x[5] - P.v_a) / (P.c_fb * P.r10)
        if x[12] > 0.5:
            dx[5] += (P.v_a - x[5]) / (P.c_fb * P.r4)
        if x[13] > 0.5:
            dx[5] -= x[5] / (P.c_fb * P.r4)
        dx[6] = -(2.0 * x[6] - P.v_a) / (P.c_ff * P.r10)
        if x[14] > 0.5:
            dx[6] += (P.v_a - x[6]) / (P.c_ff * P.r4)
        if x[15] > 0.5:
            dx[6] -= x[6] / (P.c_ff * P.r4)
        for i in range(8, 16):
            dx[i] = 0.0
    dx[7] = (u - v_lp) / (P.c_lp * P.r_lp_in) - v_lp / (P.c_lp * P.r_lp_gnd)


cdef inline double guard_k(Sim* s, double* x, int k):
    cdef Pars* P = &s.P
    cdef double v_out
    if s.model == MODEL_B:
        return x[1 + k] - P.v_on
    if k < 4:
        if x[8 + k] < 0.5:
            return x[1 + k] - P.v_on
        return P.v_off - x[1 + k]
    v_out = x[1 + k - 4] * x[8 + k - 4]
    if x[8 + k] < 0.5:  # 8+k indexes the buffer switch for k in 4..7
        return v_out - P.v_th_sw
    return P.v_th_sw - v_out


cdef void guards(Sim* s, double* x, double* g):
    cdef int k
    for k in range(s.ng):
        g[k] = guard_k(s, x, k)


cdef void do_jump(Sim* s, int k, double* x):
    cdef double a
    if s.model == MODEL_A:
        x[8 + k] = 0.0 if x[8 + k] > 0.5 else 1.0
        return
    x[1 + k] = s.P.v_off
    a = s.a_ratio[k]
    if k == 0:
        x[5] = a * x[5] + (1.0 - a) * s.P.v_a
    elif k == 1:
        x[5] = a * x[5]
    elif k == 2:
        x[6] = a * x[6] + (1.0 - a) * s.P.v_a
    else:
        x[6] = a * x[6]


# Dormand-Prince 5(4) coefficients
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0
cdef double A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0
cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0


cdef void dp_stages(Sim* s, double t, double* x, double* k1, double h,
                    double* k2, double* k3, double* k4, double* k5,
                    double* k6, double* xout):
    cdef double ytmp[MAXDIM]
    cdef int i, n = s.dim
    for i in range(n):
        ytmp[i] = x[i] + h * A21 * k1[i]
    rhs(s, t + C2 * h, ytmp, k2)
    for i in range(n):
        ytmp[i] = x[i] + h * (A31 * k1[i] + A32 * k2[i])
    rhs(s, t + C3 * h, ytmp, k3)
    for i in range(n):
        ytmp[i] = x[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
    rhs(s, t + C4 * h, ytmp, k4)
    for i in range(n):
        ytmp[i] = x[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i]
                              + A54 * k4[i])
    rhs(s, t + C5 * h, ytmp, k5)
    for i in range(n):
        ytmp[i] = x[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                              + A64 * k4[i] + A65 * k5[i])
    rhs(s, t + h, ytmp, k6)
    for i in range(n):
        xout[i] = x[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                              + B5 * k5[i] + B6 * k6[i])


cdef double dp_step(Sim* s, double t, double* x, double* k1, double h,
                    double* xout, double* k7, double rtol, double atol):
    """One trial step; returns the scaled error norm, fills xout and
    k7 = f(t+h, xout) for first-same-as-last reuse."""
    cdef double k2[MAXDIM]
    cdef double k3[MAXDIM]
    cdef double k4[MAXDIM]
    cdef double k5[MAXDIM]
    cdef double k6[MAXDIM]
    cdef int i, n = s.dim
    cdef double err = 0.0, e, sc
    dp_stages(s, t, x, k1, h, k2, k3, k4, k5, k6, xout)
    rhs(s, t + h, xout, k7)
    for i in range(n):
        e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                 + E6 * k6[i] + E7 * k7[i])
        sc = atol + rtol * fmax(fabs(x[i]), fabs(xout[i]))
        err += (e / sc) * (e / sc)
    return sqrt(err / n)


cdef void dp_state_at(Sim* s, double t, double* x, double* k1, double h,
                      double* xout):
    """5th-order state at t+h from a single unguarded step (h within the
    last accepted step, so accuracy matches the accepted solution)."""
    cdef double k2[MAXDIM]
    cdef double k3[MAXDIM]
    cdef double k4[MAXDIM]
    cdef double k5[MAXDIM]
    cdef double k6[MAXDIM]
    dp_stages(s, t, x, k1, h, k2, k3, k4, k5, k6, xout)


cdef double locate(Sim* s, int k, double t0, double* x0, double* k1,
                   double h1, double g0, double g1, double event_tol,
                   double* xout):
    """Illinois false-position for the guard crossing inside (0, h1].

    g0 = guard at offset 0 (<= 0), g1 = guard at h1 (> 0).  Returns the
    offset h* and fills xout with the state there, |guard| <= tol."""
    cdef double lo = 0.0, hi = h1, glo = g0, ghi = g1
    cdef double hm, gm
    cdef int side = 0, it, i
    if -g0 <= event_tol:
        for i in range(s.dim):
            xout[i] = x0[i]
        return 0.0
    for it in range(200):
        hm = (lo * ghi - hi * glo) / (ghi - glo)
        if not (lo < hm < hi):
            hm = 0.5 * (lo + hi)
        dp_state_at(s, t0, x0, k1, hm, xout)
        gm = guard_k(s, xout, k)
        if fabs(gm) <= event_tol or (hi - lo) <= 1e-15 * fmax(1.0, fabs(t0)):
            return hm
        if gm > 0.0:
            hi = hm
            ghi = gm
            if side == 1:
                glo *= 0.5
            side = 1
        else:
            lo = hm
            glo = gm
            if side == -1:
                ghi *= 0.5
            side = -1
    return hm


# growable buffers ----------------------------------------------------------

cdef struct DBuf:
    double* data
    size_t n
    size_t cap


cdef int db_init(DBuf* b) except -1:
    b.cap = 1024
    b.n = 0
    b.data = <double*> malloc(b.cap * sizeof(double))
    if b.data == NULL:
        raise MemoryError()
    return 0


cdef int db_push(DBuf* b, double v) except -1:
    cdef double* nd
    if b.n == b.cap:
        b.cap *= 2
        nd = <double*> realloc(b.data, b.cap * sizeof(double))
        if nd == NULL:
            raise MemoryError()
        b.data = nd
    b.data[b.n] = v
    b.n += 1
    return 0


cdef object db_to_numpy(DBuf* b):
    arr = np.empty(b.n, dtype=np.float64)
    cdef double[::1] view
    if b.n > 0:
        view = arr
        memcpy(&view[0], b.data, b.n * sizeof(double))
    return arr


cdef void db_free(DBuf* b):
    if b.data != NULL:
        free(b.data)
        b.data = NULL


def simulate(int model, double[::1] params, double[::1] x0,
             double t_end, long j_max,
             int amb_mode, double amb_t0, double amb_t1, double amb_dur,
             int freeze_plant,
             double rel_tol, double abs_tol, double max_step,
             double event_tol, double record_interval,
             long zeno_limit, double zeno_min_progress):
    """Run one hybrid simulation; returns raw sample and jump arrays.

    Returns (ts, js, xs, jump_t, jump_j, jump_cond, jump_pre, jump_post)
    with xs of shape (n_samples, dim) and jump_pre/post (n_jumps, dim).
    """
    cdef Sim sim
    cdef int i, k, n
    load_pars(params, &sim.P)
    sim.model = model
    sim.amb_mode = amb_mode
    sim.amb_t0 = amb_t0
    sim.amb_t1 = amb_t1
    sim.amb_dur = amb_dur if amb_dur > 0 else 1.0
    sim.freeze_plant = freeze_plant
    if model == MODEL_B:
        sim.dim = 8
        sim.ng = 4
    else:
        sim.dim = 16
        sim.ng = 8
    n = sim.dim
    if x0.shape[0] != n:
        raise ValueError(f"initial state must have length {n}")
    cdef double tau
    cdef double cap_min = 1e300
    cdef Pars* P = &sim.P
    for i in range(4):
        tau = P.c[i] * P.r5 * log(P.v_on / P.v_off)
        if i < 2:
            sim.a_ratio[i] = exp(-tau / (P.c_fb * P.r4))
        else:
            sim.a_ratio[i] = exp(-tau / (P.c_ff * P.r4))
        if tau / 20.0 < cap_min:
            cap_min = tau / 20.0
    sim.discharge_cap = cap_min

    cdef double x[MAXDIM]
    cdef double xnew[MAXDIM]
    cdef double xev[MAXDIM]
    cdef double xcand[MAXDIM]
    cdef double k1[MAXDIM]
    cdef double k7[MAXDIM]
    cdef double g0v[MAXG]
    cdef double g1v[MAXG]
    for i in range(n):
        x[i] = x0[i]

    cdef DBuf ts, xs, jt, jpre, jpost
    cdef DBuf js_d, jj_d, jc_d
    db_init(&ts); db_init(&xs); db_init(&jt)
    db_init(&jpre); db_init(&jpost)
    db_init(&js_d); db_init(&jj_d); db_init(&jc_d)

    cdef double t = 0.0
    cdef long j = 0
    cdef long zeno = 0
    cdef double last_rec = -1e300
    cdef double h, ms, err, fac, hstar, gbest, hbest
    cdef int kbest, any_event, fired
    cdef int discharging

    try:
        _record(&ts, &js_d, &xs, t, j, x, n)
        last_rec = t
        # initial jump-first cascade
        guards(&sim, x, g0v)
        while j < j_max:
            fired = 0
            for k in range(sim.ng):
                if g0v[k] >= 0.0:
                    _push_jump(&jt, &jj_d, &jc_d, &jpre, &jpost,
                               t, j, k, x, n, &sim)
                    j += 1
                    zeno += 1
                    if zeno > zeno_limit:
                        raise NoProgress("Zeno-like jump accumulation at t=0")
                    _record(&ts, &js_d, &xs, t, j, x, n)
                    guards(&sim, x, g0v)
                    fired = 1
                    break
            if not fired:
                break

        rhs(&sim, t, x, k1)
        h = fmin(max_step, 1e-3)

        while t < t_end and j < j_max:
            ms = max_step
            if sim.model == MODEL_A:
                discharging = 0
                for i in range(4):
                    if x[8 + i] > 0.5:
                        discharging = 1
                        break
                if discharging and sim.discharge_cap < ms:
                    ms = sim.discharge_cap
            if h > ms:
                h = ms
            if h > t_end - t:
                h = t_end - t
            if h < 1e-14 * fmax(1.0, t):
                raise IntegratorFailure(f"step-size underflow at t={t}")
            err = dp_step(&sim, t, x, k1, h, xnew, k7, rel_tol, abs_tol)
            if err > 1.0:
                fac = 0.9 * pow(err, -0.2)
                h *= fmax(0.2, fac)
                continue
            guards(&sim, xnew, g1v)
            any_event = 0
            hbest = h
            kbest = -1
            for k in range(sim.ng):
                if g0v[k] <= 0.0 and g1v[k] > 0.0:
                    hstar = locate(&sim, k, t, x, k1, h, g0v[k], g1v[k],
                                   event_tol, xcand)
                    if kbest < 0 or hstar < hbest:
                        hbest = hstar
                        kbest = k
                        for i in range(n):
                            xev[i] = xcand[i]
                    any_event = 1
            if any_event:
                if hbest > zeno_min_progress:
                    zeno = 0
                t += hbest
                for i in range(n):
                    x[i] = xev[i]
                _record(&ts, &js_d, &xs, t, j, x, n)
                _push_jump(&jt, &jj_d, &jc_d, &jpre, &jpost,
                           t, j, kbest, x, n, &sim)
                j += 1
                zeno += 1
                if zeno > zeno_limit:
                    raise NoProgress(
                        f"Zeno-like jump accumulation at t={t}")
                _record(&ts, &js_d, &xs, t, j, x, n)
                last_rec = t
                # cascade at the post-jump state
                guards(&sim, x, g0v)
                while j < j_max:
                    fired = 0
                    for k in range(sim.ng):
                        if g0v[k] >= 0.0:
                            _push_jump(&jt, &jj_d, &jc_d, &jpre, &jpost,
                                       t, j, k, x, n, &sim)
                            j += 1
                            zeno += 1
                            if zeno > zeno_limit:
                                raise NoProgress(
                                    f"Zeno-like jump accumulation at t={t}")
                            _record(&ts, &js_d, &xs, t, j, x, n)
                            guards(&sim, x, g0v)
                            fired = 1
                            break
                    if not fired:
                        break
                rhs(&sim, t, x, k1)
                continue
            # plain accepted step
            t += h
            for i in range(n):
                x[i] = xnew[i]
                k1[i] = k7[i]
            for k in range(sim.ng):
                g0v[k] = g1v[k]
            zeno = 0
            if record_interval <= 0.0 or t - last_rec >= record_interval:
                _record(&ts, &js_d, &xs, t, j, x, n)
                last_rec = t
            if err == 0.0:
                fac = 5.0
            else:
                fac = fmin(5.0, fmax(0.2, 0.9 * pow(err, -0.2)))
            h *= fac

        _record(&ts, &js_d, &xs, t, j, x, n)

        ts_a = db_to_numpy(&ts)
        js_a = db_to_numpy(&js_d).astype(np.int64)
        xs_a = db_to_numpy(&xs).reshape(-1, n)
        jt_a = db_to_numpy(&jt)
        jj_a = db_to_numpy(&jj_d).astype(np.int64)
        jc_a = db_to_numpy(&jc_d).astype(np.int64)
        jpre_a = db_to_numpy(&jpre).reshape(-1, n)
        jpost_a = db_to_numpy(&jpost).reshape(-1, n)
        return ts_a, js_a, xs_a, jt_a, jj_a, jc_a, jpre_a, jpost_a
    finally:
        db_free(&ts); db_free(&xs); db_free(&jt)
        db_free(&jpre); db_free(&jpost)
        db_free(&js_d); db_free(&jj_d); db_free(&jc_d)


cdef int _record(DBuf* ts, DBuf* js, DBuf* xs, double t, long j,
                 double* x, int n) except -1:
    cdef int i
    db_push(ts, t)
    db_push(js, <double> j)
    for i in range(n):
        db_push(xs, x[i])
    return 0


cdef int _push_jump(DBuf* jt, DBuf* jj, DBuf* jc, DBuf* jpre, DBuf* jpost,
                    double t, long j, int k, double* x, int n,
                    Sim* sim) except -1:
    """Record the pre state, apply jump k in place, record the post state."""
    cdef int i
    db_push(jt, t)
    db_push(jj, <double> j)
    db_push(jc, <double> k)
    for i in range(n):
        db_push(jpre, x[i])
    do_jump(sim, k, x)
    for i in range(n):
        db_push(jpost, x[i])
    return 0
