"""Scalar njit kernels shared by the model layer and the trajectory drivers.

Everything here works on plain floats and preallocated arrays so the hot
per-step loops stay inside compiled code. The public, documented API lives in
models.py / fssh.py / qcle.py; those wrappers call into this module so that
the contract-level operations and the batch drivers share one implementation
of the arithmetic.

Model ids: 0 single-avoided-crossing, 1 dual-avoided-crossing,
2 extended-coupling, 3 constant-gap. Parameter array layouts match the
canonical parameter order defined in models.py.

Driver status codes: 0 ok, 1 degenerate surfaces, 2 gauge ambiguity,
3 degenerate active population (surface-hopping only).
"""

import math

import numpy as np
from numba import njit

SAC, DAC, ECR, GAP = 0, 1, 2, 3

DEGENERACY_FLOOR = 1e-10
GAUGE_OVERLAP_FLOOR = 0.5
POPULATION_FLOOR = 1e-12

OK, ERR_DEGENERATE, ERR_GAUGE, ERR_POPULATION = 0, 1, 2, 3


@njit(cache=True)
def model_v(kind, p, R):
    """Diabatic matrix entries (v00, v01, v11) at R."""
    if kind == SAC:
        A, B, C, D = p[0], p[1], p[2], p[3]
        if R >= 0.0:
            v00 = A * (1.0 - math.exp(-B * R))
        else:
            v00 = -A * (1.0 - math.exp(B * R))
        return v00, C * math.exp(-D * R * R), -v00
    elif kind == DAC:
        A, B, C, D, E0 = p[0], p[1], p[2], p[3], p[4]
        return 0.0, C * math.exp(-D * R * R), -A * math.exp(-B * R * R) + E0
    elif kind == ECR:
        A, B, C = p[0], p[1], p[2]
        if R >= 0.0:
            v01 = B * (2.0 - math.exp(-C * R))
        else:
            v01 = B * math.exp(C * R)
        return A, v01, -A
    else:
        half = 0.5 * p[0]
        return half, 0.0, -half


@njit(cache=True)
def model_dv(kind, p, R):
    """Entrywise derivative (g00, g01, g11) of the diabatic matrix at R."""
    if kind == SAC:
        A, B, C, D = p[0], p[1], p[2], p[3]
        if R >= 0.0:
            g00 = A * B * math.exp(-B * R)
        else:
            g00 = A * B * math.exp(B * R)
        return g00, -2.0 * C * D * R * math.exp(-D * R * R), -g00
    elif kind == DAC:
        A, B, C, D, E0 = p[0], p[1], p[2], p[3], p[4]
        return 0.0, -2.0 * C * D * R * math.exp(-D * R * R), \
            2.0 * A * B * R * math.exp(-B * R * R)
    elif kind == ECR:
        A, B, C = p[0], p[1], p[2]
        if R >= 0.0:
            g01 = B * C * math.exp(-C * R)
        else:
            g01 = B * C * math.exp(C * R)
        return 0.0, g01, 0.0
    else:
        return 0.0, 0.0, 0.0


@njit(cache=True)
def adiab_entries(v00, v01, v11, g00, g01, g11):
    """Closed-form adiabatics of a real symmetric 2x2 with gradient.

    Returns (status, e0, e1, f0, f1, d01, theta) where theta parametrizes the
    eigenvectors: u1 = (cos t, sin t), u0 = (-sin t, cos t), 2t = atan2(c, dd)
    with dd = (v00-v11)/2, c = v01. The derived quantities are smooth rational
    functions of the matrix entries, so no per-point gauge choice enters.
    """
    m = 0.5 * (v00 + v11)
    dd = 0.5 * (v00 - v11)
    c = v01
    r = math.hypot(dd, c)
    if 2.0 * r < DEGENERACY_FLOOR:
        return ERR_DEGENERATE, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    e0 = m - r
    e1 = m + r
    c2 = dd / r          # cos 2t
    s2 = c / r           # sin 2t
    hs = 0.5 * (g00 + g11)
    hd = 0.5 * (g00 - g11)
    proj = hd * c2 + g01 * s2
    f0 = -(hs - proj)
    f1 = -(hs + proj)
    d01 = (g01 * c2 - hd * s2) / (2.0 * r)
    theta = 0.5 * math.atan2(c, dd)
    return OK, e0, e1, f0, f1, d01, theta


@njit(cache=True)
def adiab_point(kind, p, R):
    """Adiabatic quantities of a model at R: same tuple as adiab_entries."""
    v00, v01, v11 = model_v(kind, p, R)
    g00, g01, g11 = model_dv(kind, p, R)
    return adiab_entries(v00, v01, v11, g00, g01, g11)


@njit(cache=True)
def rk4_electronic(r00, r01, r11, w0, c0, w1, c1, dt, n_sub):
    """RK4 integration of the two-state density matrix over one nuclear step.

    d rho00/dt = -2 c Re rho01
    d rho11/dt = +2 c Re rho01
    d rho01/dt = +i w rho01 - c (rho11 - rho00)

    with w = E1 - E0 and c = (P/M) d01 interpolated linearly from their
    step-start values (w0, c0) to step-end values (w1, c1). rho10 is implied
    by Hermiticity; the trace is conserved identically.
    """
    h = dt / n_sub
    dw = w1 - w0
    dc = c1 - c0
    for j in range(n_sub):
        x0 = j / n_sub
        xm = (j + 0.5) / n_sub
        x1 = (j + 1.0) / n_sub
        wa = w0 + dw * x0
        ca = c0 + dc * x0
        wm = w0 + dw * xm
        cm = c0 + dc * xm
        wb = w0 + dw * x1
        cb = c0 + dc * x1

        k1_00 = -2.0 * ca * r01.real
        k1_01 = 1j * wa * r01 - ca * (r11 - r00)

        a00 = r00 + 0.5 * h * k1_00
        a11 = r11 - 0.5 * h * k1_00
        a01 = r01 + 0.5 * h * k1_01
        k2_00 = -2.0 * cm * a01.real
        k2_01 = 1j * wm * a01 - cm * (a11 - a00)

        b00 = r00 + 0.5 * h * k2_00
        b11 = r11 - 0.5 * h * k2_00
        b01 = r01 + 0.5 * h * k2_01
        k3_00 = -2.0 * cm * b01.real
        k3_01 = 1j * wm * b01 - cm * (b11 - b00)

        c00 = r00 + h * k3_00
        c11 = r11 - h * k3_00
        c01 = r01 + h * k3_01
        k4_00 = -2.0 * cb * c01.real
        k4_01 = 1j * wb * c01 - cb * (c11 - c00)

        d00 = h * (k1_00 + 2.0 * k2_00 + 2.0 * k3_00 + k4_00) / 6.0
        r00 = r00 + d00
        r11 = r11 - d00
        r01 = r01 + h * (k1_01 + 2.0 * k2_01 + 2.0 * k3_01 + k4_01) / 6.0
    return r00, r01, r11


@njit(cache=True)
def fssh_nuclear(kind, p, mass, R, P, f_active, nu, dt):
    """One velocity-Verlet step on the active surface.

    f_active is the adiabatic force on surface nu at the current R (cached by
    the caller from the previous step's frame). Returns
    (status, Rn, Pn, e0, e1, f0, f1, d01, theta) with the end-of-step frame.
    """
    Ph = P + 0.5 * f_active * dt
    Rn = R + (Ph / mass) * dt
    st, e0, e1, f0, f1, d01, th = adiab_point(kind, p, Rn)
    if st != OK:
        return st, Rn, Ph, e0, e1, f0, f1, d01, th
    fn = f0 if nu == 0 else f1
    Pn = Ph + 0.5 * fn * dt
    return OK, Rn, Pn, e0, e1, f0, f1, d01, th


@njit(cache=True)
def qcle_segment(kind, p, mass, R, P, s, sp, f_mean, dt):
    """One pair-state segment: mean-surface Verlet drift plus phase factor.

    f_mean is (F_s + F_sp)/2 at the current R. The phase e^{-i w_ssp dt} is
    evaluated at the position midpoint of the segment. Returns
    (status, Rn, Pn, phase, e0, e1, f0, f1, d01, theta).
    """
    Ph = P + 0.5 * f_mean * dt
    Rn = R + (Ph / mass) * dt
    st, e0, e1, f0, f1, d01, th = adiab_point(kind, p, Rn)
    if st != OK:
        return st, Rn, Ph, 1.0 + 0.0j, e0, e1, f0, f1, d01, th
    fs = f0 if s == 0 else f1
    fsp = f0 if sp == 0 else f1
    Pn = Ph + 0.25 * (fs + fsp) * dt
    phase = 1.0 + 0.0j
    if s != sp:
        Rm = 0.5 * (R + Rn)
        stm, e0m, e1m, _f0, _f1, _d, _t = adiab_point(kind, p, Rm)
        if stm != OK:
            return stm, Rn, Pn, phase, e0, e1, f0, f1, d01, th
        w = (e0m - e1m) if s == 0 else (e1m - e0m)
        phase = complex(math.cos(w * dt), -math.sin(w * dt))
    return OK, Rn, Pn, phase, e0, e1, f0, f1, d01, th


@njit(cache=True)
def fssh_driver(kind, p, mass, R0, P0, nu0, r00_0, r01_0, r11_0,
                dt, n_steps, n_sub, uniforms, save_every,
                out_t, out_R, out_P, out_nu, out_r00, out_r01, out_r11,
                out_e,
                hop_step, hop_from, hop_to, hop_ok):
    """Full surface-hopping trajectory loop.

    One uniform variate is consumed per step whether or not a hop is
    attempted, so the stream layout is branch-independent. Save slot 0 holds
    the initial state; slot k holds the state after step k*save_every. The
    hop log is truncated at its capacity but the returned counters include
    every event.

    Returns (status, steps_done, n_applied, n_frustrated, n_logged,
    R, P, nu, r00, r01, r11).
    """
    R = R0
    P = P0
    nu = nu0
    r00 = r00_0
    r01 = r01_0
    r11 = r11_0
    st, e0, e1, f0, f1, d01, th = adiab_point(kind, p, R)
    if st != OK:
        return st, 0, 0, 0, 0, R, P, nu, r00, r01, r11

    cap = hop_step.shape[0]
    n_applied = 0
    n_frustrated = 0
    n_logged = 0

    out_t[0] = 0.0
    out_R[0] = R
    out_P[0] = P
    out_nu[0] = nu
    out_r00[0] = r00
    out_r01[0] = r01
    out_r11[0] = r11
    out_e[0] = (e0 if nu == 0 else e1) + P * P / (2.0 * mass)

    for i in range(n_steps):
        f_act = f0 if nu == 0 else f1
        stn, Rn, Pn, e0n, e1n, f0n, f1n, d01n, thn = fssh_nuclear(
            kind, p, mass, R, P, f_act, nu, dt)
        if stn != OK:
            return stn, i, n_applied, n_frustrated, n_logged, R, P, nu, r00, r01, r11
        if abs(math.cos(thn - th)) < GAUGE_OVERLAP_FLOOR:
            return ERR_GAUGE, i, n_applied, n_frustrated, n_logged, R, P, nu, r00, r01, r11

        w0 = e1 - e0
        w1 = e1n - e0n
        c0 = (P / mass) * d01
        c1 = (Pn / mass) * d01n
        r00, r01, r11 = rk4_electronic(r00, r01, r11, w0, c0, w1, c1, dt, n_sub)

        # hop attempt with end-of-step quantities
        rnn = r00 if nu == 0 else r11
        if rnn < POPULATION_FLOOR:
            return ERR_POPULATION, i, n_applied, n_frustrated, n_logged, \
                R, P, nu, r00, r01, r11
        # flux nu->beta = 2 Re[(P/M) d_{nu,beta} conj(rho_{nu,beta})]
        vd = (Pn / mass) * d01n
        if nu == 0:
            flux = 2.0 * vd * r01.real
        else:
            flux = -2.0 * vd * r01.real
        prob = flux * dt / rnn
        if prob < 0.0:
            prob = 0.0
        elif prob > 1.0:
            prob = 1.0
        u = uniforms[i]
        if u < prob:
            beta = 1 - nu
            dE = (e0n - e1n) if nu == 0 else (e1n - e0n)  # E_from - E_to
            arg = Pn * Pn + 2.0 * dE * mass
            if arg >= 0.0:
                sgn = 1.0 if Pn >= 0.0 else -1.0
                Pn = sgn * math.sqrt(arg)
                if n_logged < cap:
                    hop_step[n_logged] = i + 1
                    hop_from[n_logged] = nu
                    hop_to[n_logged] = beta
                    hop_ok[n_logged] = 1
                    n_logged += 1
                nu = beta
                n_applied += 1
            else:
                if n_logged < cap:
                    hop_step[n_logged] = i + 1
                    hop_from[n_logged] = nu
                    hop_to[n_logged] = beta
                    hop_ok[n_logged] = 0
                    n_logged += 1
                n_frustrated += 1

        R = Rn
        P = Pn
        e0 = e0n
        e1 = e1n
        f0 = f0n
        f1 = f1n
        d01 = d01n
        th = thn

        if (i + 1) % save_every == 0:
            k = (i + 1) // save_every
            out_t[k] = (i + 1) * dt
            out_R[k] = R
            out_P[k] = P
            out_nu[k] = nu
            out_r00[k] = r00
            out_r01[k] = r01
            out_r11[k] = r11
            out_e[k] = (e0 if nu == 0 else e1) + P * P / (2.0 * mass)

    return OK, n_steps, n_applied, n_frustrated, n_logged, R, P, nu, r00, r01, r11


@njit(cache=True)
def qcle_driver(kind, p, mass, R0, P0, s0, sp0, w0,
                dt, n_steps, uniforms, filter_bound, save_every,
                out_t, out_R, out_P, out_pair, out_w, out_ener, out_alive,
                tr_step, tr_from, tr_to, tr_R, tr_Pb, tr_Pa, tr_ok):
    """Full pair-state walker loop.

    Two uniforms per step are allocated (transition? / which channel?); the
    second is ignored on no-transition steps so the stream layout is
    branch-independent. out_pair stores 2*s + s'. out_ener holds the
    mean-surface total energy when the pair is diagonal, else 0 (it feeds the
    diagonal energy estimator). A walker whose |weight| exceeds filter_bound
    is marked dead; remaining save slots get weight 0 and alive 0.

    Returns (status, steps_done, n_applied, n_frustrated, n_logged,
    filtered_step, R, P, s, sp, w) with filtered_step = -1 if never filtered.
    """
    R = R0
    P = P0
    s = s0
    sp = sp0
    w = w0
    st, e0, e1, f0, f1, d01, th = adiab_point(kind, p, R)
    if st != OK:
        return st, 0, 0, 0, 0, -1, R, P, s, sp, w

    cap = tr_step.shape[0]
    n_applied = 0
    n_frustrated = 0
    n_logged = 0
    filtered_step = -1

    out_t[0] = 0.0
    out_R[0] = R
    out_P[0] = P
    out_pair[0] = 2 * s + sp
    out_w[0] = w
    out_alive[0] = 1
    if s == sp:
        es = e0 if s == 0 else e1
        out_ener[0] = es + P * P / (2.0 * mass)
    else:
        out_ener[0] = 0.0

    n_save = out_t.shape[0]
    last_done = 0
    for i in range(n_steps):
        fs = f0 if s == 0 else f1
        fsp = f0 if sp == 0 else f1
        stn, Rn, Pn, phase, e0n, e1n, f0n, f1n, d01n, thn = qcle_segment(
            kind, p, mass, R, P, s, sp, 0.5 * (fs + fsp), dt)
        if stn != OK:
            return stn, i, n_applied, n_frustrated, n_logged, filtered_step, \
                R, P, s, sp, w
        if abs(math.cos(thn - th)) < GAUGE_OVERLAP_FLOOR:
            return ERR_GAUGE, i, n_applied, n_frustrated, n_logged, \
                filtered_step, R, P, s, sp, w
        w = w * phase

        a = abs((Pn / mass) * d01n) * dt
        pi = a / (1.0 + a)
        u1 = uniforms[i, 0]
        if u1 < pi:
            u2 = uniforms[i, 1]
            if u2 < 0.5:
                frm = s
            else:
                frm = sp
            to = 1 - frm
            dE = (e0n - e1n) if frm == 0 else (e1n - e0n)  # E_from - E_to
            arg = Pn * Pn + dE * mass
            if arg >= 0.0:
                dft = d01n if frm == 0 else -d01n
                amp = -(Pn / mass) * dft
                w = w * (amp * dt / (0.5 * pi))
                Pb = Pn
                sgn = 1.0 if Pn >= 0.0 else -1.0
                Pn = sgn * math.sqrt(arg)
                if n_logged < cap:
                    tr_step[n_logged] = i + 1
                    tr_from[n_logged] = 2 * s + sp
                    if u2 < 0.5:
                        tr_to[n_logged] = 2 * to + sp
                    else:
                        tr_to[n_logged] = 2 * s + to
                    tr_R[n_logged] = Rn
                    tr_Pb[n_logged] = Pb
                    tr_Pa[n_logged] = Pn
                    tr_ok[n_logged] = 1
                    n_logged += 1
                if u2 < 0.5:
                    s = to
                else:
                    sp = to
                n_applied += 1
            else:
                w = w / (1.0 - pi)
                if n_logged < cap:
                    tr_step[n_logged] = i + 1
                    tr_from[n_logged] = 2 * s + sp
                    if u2 < 0.5:
                        tr_to[n_logged] = 2 * to + sp
                    else:
                        tr_to[n_logged] = 2 * s + to
                    tr_R[n_logged] = Rn
                    tr_Pb[n_logged] = Pn
                    tr_Pa[n_logged] = Pn
                    tr_ok[n_logged] = 0
                    n_logged += 1
                n_frustrated += 1
        else:
            w = w / (1.0 - pi)

        R = Rn
        P = Pn
        e0 = e0n
        e1 = e1n
        f0 = f0n
        f1 = f1n
        d01 = d01n
        th = thn
        last_done = i + 1

        if abs(w) > filter_bound:
            filtered_step = i + 1

        if (i + 1) % save_every == 0:
            k = (i + 1) // save_every
            out_t[k] = (i + 1) * dt
            out_R[k] = R
            out_P[k] = P
            out_pair[k] = 2 * s + sp
            if filtered_step >= 0:
                out_w[k] = 0.0
                out_alive[k] = 0
                out_ener[k] = 0.0
            else:
                out_w[k] = w
                out_alive[k] = 1
                if s == sp:
                    es = e0 if s == 0 else e1
                    out_ener[k] = es + P * P / (2.0 * mass)
                else:
                    out_ener[k] = 0.0

        if filtered_step >= 0:
            # fill the remaining save slots as dead and stop stepping
            for k in range((i + 1) // save_every + 1, n_save):
                out_t[k] = k * save_every * dt
                out_R[k] = R
                out_P[k] = P
                out_pair[k] = 2 * s + sp
                out_w[k] = 0.0
                out_ener[k] = 0.0
                out_alive[k] = 0
            break

    return OK, last_done, n_applied, n_frustrated, n_logged, filtered_step, \
        R, P, s, sp, w


@njit(cache=True)
def model_entries_grid(kind, p, R, v00, v01, v11):
    """Fill diabatic entry arrays over a position grid."""
    for i in range(R.shape[0]):
        a, b, c = model_v(kind, p, R[i])
        v00[i] = a
        v01[i] = b
        v11[i] = c


@njit(cache=True)
def adiab_grid(v00, v01, v11, e0, e1, theta):
    """Fill adiabatic energy and eigenvector-angle arrays from diabatic ones.

    Unlike adiab_entries this tolerates exact degeneracy (r = 0 maps to
    theta = 0), because grid propagation happens in the diabatic basis and
    only the analysis rotation passes through here.
    """
    for i in range(v00.shape[0]):
        m = 0.5 * (v00[i] + v11[i])
        dd = 0.5 * (v00[i] - v11[i])
        c = v01[i]
        r = math.hypot(dd, c)
        e0[i] = m - r
        e1[i] = m + r
        theta[i] = 0.5 * math.atan2(c, dd)
