"""Compiled inner loops shared by the jump chain, swap and particle engines.

Everything here operates on plain arrays so it can run under ``numba.njit``.
Problem fields are passed around as a *field tuple* built by
:meth:`insfv.core.ProblemSpec.fields`::

    (pot_kind, pot_terms, pot_offsets, centers, sigma, c_terms, c_offsets,
     lower, upper)

``pot_terms`` / ``c_terms`` are trig-series tables with columns
``(series, amplitude, phase, f_1..f_d)``; a row contributes
``amplitude * cos(2*pi*<f, x> + phase)`` to output ``series``. For a trig
potential, series 0 is V, 1..d the gradient components and d+1 the Laplacian.
"""

import numpy as np
from numba import njit

TWO_PI = 2.0 * np.pi

POT_TRIG = 0
POT_GAUSS = 1

SCHEME_AUTO = 0
SCHEME_CENTRAL = 1
SCHEME_UPWIND = 2

REBIRTH_LITERAL = 0
REBIRTH_WEIGHTED = 1
REBIRTH_RESOLVED = 2
REBIRTH_POOLED = 3

# event counter slots
EV_DYNAMICS = 0
EV_KILL = 1
EV_CLONE = 2
EV_STAY = 3
EV_SWAP = 4
N_EVENT_KINDS = 5

GRID_FIXED = 0
GRID_UNIFORM = 1


# ---------------------------------------------------------------------------
# geometry and fields


@njit(cache=True)
def wrap_inplace(x, lower, upper):
    for i in range(x.shape[0]):
        period = upper[i] - lower[i]
        v = (x[i] - lower[i]) % period + lower[i]
        if v >= upper[i] or v < lower[i]:
            v = lower[i]
        x[i] = v


@njit(cache=True)
def _trig_accumulate(terms, x, out):
    d = x.shape[0]
    for k in range(terms.shape[0]):
        arg = terms[k, 2]
        for i in range(d):
            arg += TWO_PI * terms[k, 3 + i] * x[i]
        out[int(terms[k, 0])] += terms[k, 1] * np.cos(arg)


@njit(cache=True)
def _gauss_potential(centers, sigma, lower, upper, x, grad):
    """V = -log sum_k exp(-|x - c_k|^2 / 2 sigma^2), minimum-image distances."""
    n, d = centers.shape
    s2 = sigma * sigma
    amax = -np.inf
    logw = np.empty(n)
    for k in range(n):
        r2 = 0.0
        for i in range(d):
            period = upper[i] - lower[i]
            dx = x[i] - centers[k, i]
            dx -= period * np.floor(dx / period + 0.5)
            r2 += dx * dx
        logw[k] = -0.5 * r2 / s2
        if logw[k] > amax:
            amax = logw[k]
    total = 0.0
    for k in range(n):
        logw[k] = np.exp(logw[k] - amax)
        total += logw[k]
    for i in range(d):
        grad[i] = 0.0
    second = 0.0
    for k in range(n):
        w = logw[k] / total
        r2 = 0.0
        for i in range(d):
            period = upper[i] - lower[i]
            dx = x[i] - centers[k, i]
            dx -= period * np.floor(dx / period + 0.5)
            grad[i] += w * dx
            r2 += dx * dx
        second += w * r2
    mean2 = 0.0
    for i in range(d):
        mean2 += grad[i] * grad[i]
        grad[i] /= s2
    lap = d / s2 - second / (s2 * s2) + mean2 / (s2 * s2)
    V = -(amax + np.log(total))
    return V, lap


@njit(cache=True)
def eval_point(fields, x, grad):
    """Return ``(V, laplacian V, c)`` at ``x``; writes DV into ``grad``."""
    pot_kind, pot_terms, pot_offsets, centers, sigma, c_terms, c_offsets, lower, upper = fields
    d = x.shape[0]
    if pot_kind == POT_TRIG:
        out = pot_offsets.copy()
        _trig_accumulate(pot_terms, x, out)
        V = out[0]
        for i in range(d):
            grad[i] = out[1 + i]
        lap = out[d + 1]
    else:
        V, lap = _gauss_potential(centers, sigma, lower, upper, x, grad)
    cout = c_offsets.copy()
    _trig_accumulate(c_terms, x, cout)
    return V, lap, cout[0]


@njit(cache=True)
def eval_batch(fields, X):
    m, d = X.shape
    V = np.empty(m)
    G = np.empty((m, d))
    L = np.empty(m)
    C = np.empty(m)
    for j in range(m):
        V[j], L[j], C[j] = eval_point(fields, X[j], G[j])
    return V, G, L, C


# ---------------------------------------------------------------------------
# swap weights


@njit(cache=True)
def inf_swap_weight(Vx, Vy, temperature):
    """(exp(2(Vx - Vy)/T) + 1)^-1 without overflowing the exponential."""
    z = 2.0 * (Vx - Vy) / temperature
    if z > 0.0:
        e = np.exp(-z)
        return e / (1.0 + e)
    return 1.0 / (1.0 + np.exp(z))


@njit(cache=True)
def metropolis_swap_rate(Vx, Vy, temperature, K):
    z = 2.0 * (Vy - Vx) / temperature
    if z <= 0.0:
        return K
    return K * np.exp(-z)


# ---------------------------------------------------------------------------
# jump chain


@njit(cache=True)
def transition_rates(b, a, h, scheme, out):
    """Fill ``out`` (length 2d, ordered +e_1..+e_d, -e_1..-e_d).

    Returns the scheme actually used (central or upwind)."""
    d = b.shape[0]
    inv2 = 1.0 / (2.0 * h * h)
    if scheme != SCHEME_UPWIND:
        negative = False
        for i in range(d):
            out[i] = inv2 * (h * b[i] + a[i])
            out[d + i] = inv2 * (-h * b[i] + a[i])
            if out[i] < 0.0 or out[d + i] < 0.0:
                negative = True
        if not negative or scheme == SCHEME_CENTRAL:
            return SCHEME_CENTRAL
    inv = 1.0 / (h * h)
    for i in range(d):
        out[i] = inv * (h * max(b[i], 0.0) + 0.5 * a[i])
        out[d + i] = inv * (h * max(-b[i], 0.0) + 0.5 * a[i])
    return SCHEME_UPWIND


@njit(cache=True)
def sample_direction(r, u):
    total = 0.0
    for j in range(r.shape[0]):
        total += r[j]
    target = u * total
    acc = 0.0
    last = -1
    for j in range(r.shape[0]):
        if r[j] > 0.0:
            last = j
            acc += r[j]
            if target < acc:
                return j
    return last


@njit(cache=True)
def one_step_inplace(x, r, h, rng, lower, upper):
    d = x.shape[0]
    j = sample_direction(r, rng.random())
    if j < d:
        x[j] += h
    else:
        x[j - d] -= h
    wrap_inplace(x, lower, upper)
    return j


# ---------------------------------------------------------------------------
# kill / clone


@njit(cache=True)
def _weight(rho, flip, j):
    # probability that member p1 of pair j plays the forward role
    if flip:
        return 1.0 - rho[j]
    return rho[j]


@njit(cache=True)
def kill_clone(p1, p2, rho, flip, i, c_symm, mode, role, rng):
    """Rebirth step after a kill/clone event of member p1[i].

    ``role`` is 1 (forward) or 0 (backward) when already resolved by the
    caller, or -1 to draw it from the pair weight. Returns ``(i', outcome)``.
    In the pooled mode pair ``i`` itself is a candidate, so the fired
    particle may land on (or overwrite) its own partner.
    """
    N = p1.shape[0]
    ip = rng.integers(0, N)
    if ip == i and mode != REBIRTH_POOLED:
        return ip, EV_STAY
    if role < 0:
        fwd = rng.random() < _weight(rho, flip, i)
    else:
        fwd = role == 1
    w = _weight(rho, flip, ip)
    u = rng.random()
    if fwd:
        pick_p1 = u < w
    elif mode == REBIRTH_LITERAL:
        # backward branch tests the other member first: u < 1 - w picks p2
        pick_p1 = not (u < 1.0 - w)
    else:
        pick_p1 = u < 1.0 - w
    if ip == i and pick_p1:
        return ip, EV_STAY
    if c_symm > 0.0:
        if pick_p1:
            p1[i, :] = p1[ip, :]
        else:
            p1[i, :] = p2[ip, :]
        return ip, EV_KILL
    if pick_p1:
        p1[ip, :] = p1[i, :]
    else:
        p2[ip, :] = p1[i, :]
    return ip, EV_CLONE


# ---------------------------------------------------------------------------
# recording helpers


@njit(cache=True)
def _grow3(a, cap):
    out = np.empty((cap, a.shape[1], a.shape[2]))
    out[: a.shape[0]] = a
    return out


@njit(cache=True)
def _grow2(a, cap):
    out = np.empty((cap, a.shape[1]))
    out[: a.shape[0]] = a
    return out


@njit(cache=True)
def _grow1f(a, cap):
    out = np.empty(cap)
    out[: a.shape[0]] = a
    return out


@njit(cache=True)
def _grow1i(a, cap):
    out = np.empty(cap, dtype=np.int64)
    out[: a.shape[0]] = a
    return out


@njit(cache=True)
def _draw_h(grid_kind, h0, hmin, hmax, rng):
    if grid_kind == GRID_UNIFORM:
        return hmin + (hmax - hmin) * rng.random()
    return h0


# ---------------------------------------------------------------------------
# infinite swapping Fleming-Viot


@njit(cache=True)
def ins_slot_rates(V, lap, c, grad, rho_self, a, h, scheme, rdyn, b):
    """Event rates for one particle whose forward-role weight is ``rho_self``.

    Returns ``(kc_forward, kc_backward, sum_dyn)``; the combined signed
    kill/clone rate is their sum ``c - (1 - rho) * lap``.
    """
    d = grad.shape[0]
    for k in range(d):
        b[k] = (1.0 - 2.0 * rho_self) * grad[k]
    transition_rates(b, a, h, scheme, rdyn)
    kcf = rho_self * c
    kcb = (1.0 - rho_self) * (c - lap)
    sd = 0.0
    for k in range(2 * d):
        sd += rdyn[k]
    return kcf, kcb, sd


@njit(cache=True)
def _ins_refresh(i, fields, x, y, rho, rdyn, kcf, kcb, sdyn, net, hs, clocks,
                 a, temperature, grid_kind, h0, hmin, hmax, scheme, mode, rng, gx, gy, b):
    N = x.shape[0]
    Vx, lx, cx = eval_point(fields, x[i], gx)
    Vy, ly, cy = eval_point(fields, y[i], gy)
    r = inf_swap_weight(Vx, Vy, temperature)
    rho[i] = r
    for side in range(2):
        s = i + side * N
        if side == 0:
            V, lap, c, g, w = Vx, lx, cx, gx, r
        else:
            V, lap, c, g, w = Vy, ly, cy, gy, 1.0 - r
        hs[s] = _draw_h(grid_kind, h0, hmin, hmax, rng)
        f, bk, sd = ins_slot_rates(V, lap, c, g, w, a, hs[s], scheme, rdyn[s], b)
        kcf[s] = f
        kcb[s] = bk
        sdyn[s] = sd
        if mode >= REBIRTH_RESOLVED:
            net[s] = sd + abs(f) + abs(bk)
        else:
            net[s] = sd + abs(f + bk)
        if net[s] > 0.0:
            clocks[s] = rng.standard_exponential() / net[s]
        else:
            clocks[s] = np.inf


@njit(cache=True)
def run_ins(fields, x, y, T, a, temperature, grid_kind, h0, hmin, hmax, scheme,
            mode, rng, stride, cap):
    N, d = x.shape
    lower = fields[7]
    upper = fields[8]
    rho = np.empty(N)
    rdyn = np.zeros((2 * N, 2 * d))
    kcf = np.zeros(2 * N)
    kcb = np.zeros(2 * N)
    sdyn = np.zeros(2 * N)
    net = np.zeros(2 * N)
    hs = np.zeros(2 * N)
    clocks = np.zeros(2 * N)
    gx = np.empty(d)
    gy = np.empty(d)
    b = np.empty(d)
    counts = np.zeros(N_EVENT_KINDS, dtype=np.int64)

    for i in range(N):
        _ins_refresh(i, fields, x, y, rho, rdyn, kcf, kcb, sdyn, net, hs, clocks,
                     a, temperature, grid_kind, h0, hmin, hmax, scheme, mode, rng, gx, gy, b)

    cap = max(cap, 2)
    rec_t = np.empty(cap)
    rec_dt = np.empty(cap)
    rec_k = np.empty(cap, dtype=np.int64)
    rec_x = np.empty((cap, N, d))
    rec_y = np.empty((cap, N, d))
    rec_rho = np.empty((cap, N))
    rec_t[0] = 0.0
    rec_k[0] = 0
    rec_x[0] = x
    rec_y[0] = y
    rec_rho[0] = rho
    n_rec = 1

    t = 0.0
    k = 0
    rate_integral = 0.0
    while True:
        s = 0
        tau = clocks[0]
        for j in range(1, 2 * N):
            if clocks[j] < tau:
                tau = clocks[j]
                s = j
        if not (t + tau < T):
            break
        rate_integral += net.sum() * tau
        t += tau
        for j in range(2 * N):
            clocks[j] -= tau

        flip = s >= N
        i = s - N if flip else s
        if flip:
            p1 = y
            p2 = x
        else:
            p1 = x
            p2 = y
        u = rng.random()
        second = -1
        if u * net[s] < sdyn[s]:
            one_step_inplace(p1[i], rdyn[s], hs[s], rng, lower, upper)
            counts[EV_DYNAMICS] += 1
        else:
            if mode >= REBIRTH_RESOLVED:
                af = abs(kcf[s])
                ab = abs(kcb[s])
                if rng.random() * (af + ab) < af:
                    role = 1
                    csg = kcf[s]
                else:
                    role = 0
                    csg = kcb[s]
            else:
                role = -1
                csg = kcf[s] + kcb[s]
            ip, outcome = kill_clone(p1, p2, rho, flip, i, csg, mode, role, rng)
            counts[outcome] += 1
            if outcome == EV_CLONE and ip != i:
                second = ip
        k += 1
        _ins_refresh(i, fields, x, y, rho, rdyn, kcf, kcb, sdyn, net, hs, clocks,
                     a, temperature, grid_kind, h0, hmin, hmax, scheme, mode, rng, gx, gy, b)
        if second >= 0:
            _ins_refresh(second, fields, x, y, rho, rdyn, kcf, kcb, sdyn, net, hs, clocks,
                         a, temperature, grid_kind, h0, hmin, hmax, scheme, mode, rng, gx, gy, b)

        if k % stride == 0:
            if n_rec == rec_t.shape[0]:
                ncap = 2 * n_rec
                rec_t = _grow1f(rec_t, ncap)
                rec_dt = _grow1f(rec_dt, ncap)
                rec_k = _grow1i(rec_k, ncap)
                rec_x = _grow3(rec_x, ncap)
                rec_y = _grow3(rec_y, ncap)
                rec_rho = _grow2(rec_rho, ncap)
            rec_dt[n_rec - 1] = t - rec_t[n_rec - 1]
            rec_t[n_rec] = t
            rec_k[n_rec] = k
            rec_x[n_rec] = x
            rec_y[n_rec] = y
            rec_rho[n_rec] = rho
            n_rec += 1
    rate_integral += net.sum() * (T - t)
    rec_dt[n_rec - 1] = T - rec_t[n_rec - 1]
    return (rec_t[:n_rec], rec_dt[:n_rec], rec_k[:n_rec], rec_x[:n_rec],
            rec_y[:n_rec], rec_rho[:n_rec], counts, k, rate_integral)


# ---------------------------------------------------------------------------
# standard (uncoupled) Fleming-Viot


@njit(cache=True)
def _fv_refresh(j, fields, p, direction, rdyn, kc, sdyn, net, hs, clocks, a,
                grid_kind, h0, hmin, hmax, scheme, rng, g, b):
    V, lap, c = eval_point(fields, p[j], g)
    d = g.shape[0]
    for k in range(d):
        b[k] = -direction * g[k]
    hs[j] = _draw_h(grid_kind, h0, hmin, hmax, rng)
    transition_rates(b, a, hs[j], scheme, rdyn[j])
    sd = 0.0
    for k in range(2 * d):
        sd += rdyn[j, k]
    sdyn[j] = sd
    if direction > 0:
        kc[j] = c
    else:
        kc[j] = c - lap
    net[j] = sd + abs(kc[j])
    if net[j] > 0.0:
        clocks[j] = rng.standard_exponential() / net[j]
    else:
        clocks[j] = np.inf


@njit(cache=True)
def run_standard_fv(fields, p, direction, T, a, grid_kind, h0, hmin, hmax, scheme,
                    rng, stride, cap):
    """``direction`` +1: drift -DV, rate c. -1: drift +DV, rate c - lap V."""
    N, d = p.shape
    lower = fields[7]
    upper = fields[8]
    rdyn = np.zeros((N, 2 * d))
    kc = np.zeros(N)
    sdyn = np.zeros(N)
    net = np.zeros(N)
    hs = np.zeros(N)
    clocks = np.zeros(N)
    g = np.empty(d)
    b = np.empty(d)
    counts = np.zeros(N_EVENT_KINDS, dtype=np.int64)
    for j in range(N):
        _fv_refresh(j, fields, p, direction, rdyn, kc, sdyn, net, hs, clocks, a,
                    grid_kind, h0, hmin, hmax, scheme, rng, g, b)

    cap = max(cap, 2)
    rec_t = np.empty(cap)
    rec_dt = np.empty(cap)
    rec_k = np.empty(cap, dtype=np.int64)
    rec_p = np.empty((cap, N, d))
    rec_t[0] = 0.0
    rec_k[0] = 0
    rec_p[0] = p
    n_rec = 1
    t = 0.0
    k = 0
    rate_integral = 0.0
    while True:
        s = 0
        tau = clocks[0]
        for j in range(1, N):
            if clocks[j] < tau:
                tau = clocks[j]
                s = j
        if not (t + tau < T):
            break
        rate_integral += net.sum() * tau
        t += tau
        for j in range(N):
            clocks[j] -= tau
        second = -1
        u = rng.random()
        if u * net[s] < sdyn[s]:
            one_step_inplace(p[s], rdyn[s], hs[s], rng, lower, upper)
            counts[EV_DYNAMICS] += 1
        else:
            m = rng.integers(0, N)
            if m == s:
                counts[EV_STAY] += 1
            elif kc[s] > 0.0:
                p[s, :] = p[m, :]
                counts[EV_KILL] += 1
            else:
                p[m, :] = p[s, :]
                counts[EV_CLONE] += 1
                second = m
        k += 1
        _fv_refresh(s, fields, p, direction, rdyn, kc, sdyn, net, hs, clocks, a,
                    grid_kind, h0, hmin, hmax, scheme, rng, g, b)
        if second >= 0:
            _fv_refresh(second, fields, p, direction, rdyn, kc, sdyn, net, hs, clocks, a,
                        grid_kind, h0, hmin, hmax, scheme, rng, g, b)
        if k % stride == 0:
            if n_rec == rec_t.shape[0]:
                ncap = 2 * n_rec
                rec_t = _grow1f(rec_t, ncap)
                rec_dt = _grow1f(rec_dt, ncap)
                rec_k = _grow1i(rec_k, ncap)
                rec_p = _grow3(rec_p, ncap)
            rec_dt[n_rec - 1] = t - rec_t[n_rec - 1]
            rec_t[n_rec] = t
            rec_k[n_rec] = k
            rec_p[n_rec] = p
            n_rec += 1
    rate_integral += net.sum() * (T - t)
    rec_dt[n_rec - 1] = T - rec_t[n_rec - 1]
    return rec_t[:n_rec], rec_dt[:n_rec], rec_k[:n_rec], rec_p[:n_rec], counts, k, rate_integral


# ---------------------------------------------------------------------------
# finite-K location swapping


@njit(cache=True)
def _fs_refresh(j, fields, x, y, rdyn, kc, sdyn, net, hs, clocks, a, temperature, K,
                grid_kind, h0, hmin, hmax, scheme, rng, gx, gy, b):
    N = x.shape[0]
    d = gx.shape[0]
    Vx, lx, cx = eval_point(fields, x[j], gx)
    Vy, ly, cy = eval_point(fields, y[j], gy)
    for side in range(2):
        s = j + side * N
        hs[s] = _draw_h(grid_kind, h0, hmin, hmax, rng)
        if side == 0:
            for k in range(d):
                b[k] = -gx[k]
            kc[s] = cx
        else:
            for k in range(d):
                b[k] = gy[k]
            kc[s] = cy - ly
        transition_rates(b, a, hs[s], scheme, rdyn[s])
        sd = 0.0
        for k in range(2 * d):
            sd += rdyn[s, k]
        sdyn[s] = sd
        net[s] = sd + abs(kc[s])
        if net[s] > 0.0:
            clocks[s] = rng.standard_exponential() / net[s]
        else:
            clocks[s] = np.inf
    s = j + 2 * N
    net[s] = metropolis_swap_rate(Vx, Vy, temperature, K)
    sdyn[s] = 0.0
    if net[s] > 0.0:
        clocks[s] = rng.standard_exponential() / net[s]
    else:
        clocks[s] = np.inf


@njit(cache=True)
def run_finite_swap(fields, x, y, K, T, a, temperature, grid_kind, h0, hmin, hmax,
                    scheme, rng, stride, cap):
    N, d = x.shape
    lower = fields[7]
    upper = fields[8]
    M = 3 * N
    rdyn = np.zeros((M, 2 * d))
    kc = np.zeros(M)
    sdyn = np.zeros(M)
    net = np.zeros(M)
    hs = np.zeros(M)
    clocks = np.zeros(M)
    gx = np.empty(d)
    gy = np.empty(d)
    b = np.empty(d)
    tmp = np.empty(d)
    counts = np.zeros(N_EVENT_KINDS, dtype=np.int64)
    for j in range(N):
        _fs_refresh(j, fields, x, y, rdyn, kc, sdyn, net, hs, clocks, a, temperature, K,
                    grid_kind, h0, hmin, hmax, scheme, rng, gx, gy, b)
    cap = max(cap, 2)
    rec_t = np.empty(cap)
    rec_dt = np.empty(cap)
    rec_k = np.empty(cap, dtype=np.int64)
    rec_x = np.empty((cap, N, d))
    rec_y = np.empty((cap, N, d))
    rec_t[0] = 0.0
    rec_k[0] = 0
    rec_x[0] = x
    rec_y[0] = y
    n_rec = 1
    t = 0.0
    k = 0
    rate_integral = 0.0
    while True:
        s = 0
        tau = clocks[0]
        for j in range(1, M):
            if clocks[j] < tau:
                tau = clocks[j]
                s = j
        if not (t + tau < T):
            break
        rate_integral += net.sum() * tau
        t += tau
        for j in range(M):
            clocks[j] -= tau
        second = -1
        if s >= 2 * N:
            i = s - 2 * N
            tmp[:] = x[i]
            x[i, :] = y[i]
            y[i, :] = tmp
            counts[EV_SWAP] += 1
        else:
            flip = s >= N
            i = s - N if flip else s
            p = y if flip else x
            u = rng.random()
            if u * net[s] < sdyn[s]:
                one_step_inplace(p[i], rdyn[s], hs[s], rng, lower, upper)
                counts[EV_DYNAMICS] += 1
            else:
                m = rng.integers(0, N)
                if m == i:
                    counts[EV_STAY] += 1
                elif kc[s] > 0.0:
                    p[i, :] = p[m, :]
                    counts[EV_KILL] += 1
                else:
                    p[m, :] = p[i, :]
                    counts[EV_CLONE] += 1
                    second = m
        k += 1
        _fs_refresh(i, fields, x, y, rdyn, kc, sdyn, net, hs, clocks, a, temperature, K,
                    grid_kind, h0, hmin, hmax, scheme, rng, gx, gy, b)
        if second >= 0:
            _fs_refresh(second, fields, x, y, rdyn, kc, sdyn, net, hs, clocks, a, temperature, K,
                        grid_kind, h0, hmin, hmax, scheme, rng, gx, gy, b)
        if k % stride == 0:
            if n_rec == rec_t.shape[0]:
                ncap = 2 * n_rec
                rec_t = _grow1f(rec_t, ncap)
                rec_dt = _grow1f(rec_dt, ncap)
                rec_k = _grow1i(rec_k, ncap)
                rec_x = _grow3(rec_x, ncap)
                rec_y = _grow3(rec_y, ncap)
            rec_dt[n_rec - 1] = t - rec_t[n_rec - 1]
            rec_t[n_rec] = t
            rec_k[n_rec] = k
            rec_x[n_rec] = x
            rec_y[n_rec] = y
            n_rec += 1
    rate_integral += net.sum() * (T - t)
    rec_dt[n_rec - 1] = T - rec_t[n_rec - 1]
    return (rec_t[:n_rec], rec_dt[:n_rec], rec_k[:n_rec], rec_x[:n_rec], rec_y[:n_rec],
            counts, k, rate_integral)
