"""Dormand-Prince 5(4) kernel with dense output and blow-up detection.

The kernel is generic in the right-hand side: ``rhs(t, y, params, out)``
writes dy/dt into ``out``.  ``t`` is real; ``y`` may be float64 or complex128.
"""
import numpy as np

from ._jit import jit

# status codes returned by dopri5
REACHED = 0
POLE = 1
TOLERANCE_FAILURE = 2
SIGN_CHANGE = 3
MAX_STEPS = 4

C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
A71, A73, A74, A75, A76 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
D1 = -12715105075.0 / 11282082432.0
D3 = 87487479700.0 / 32700410799.0
D4 = -10690763975.0 / 1880347072.0
D5 = 701980252875.0 / 199316789632.0
D6 = -1453857185.0 / 822651844.0
D7 = 69997945.0 / 29380423.0


@jit
def p2mu_path_rhs(s, y, params, out):
    """P2^mu on the segment x = x0 + s*L; params = (x0, L, mu)."""
    x0 = params[0]
    L = params[1]
    mu = int(params[2].real)
    x = x0 + s * L
    u = y[0]
    out[0] = L * y[1]
    out[1] = L * (2.0 * u * u * u + x ** mu * u)


@jit
def ed_rhs_kernel(x, y, params, out):
    """Two-ion electro-diffusion system; params = (lambda, A0, eps)."""
    lam = params[0]
    a = params[1] + params[2] * x
    out[0] = y[2] * y[0] + a
    out[1] = -y[2] * y[1] + a
    out[2] = (y[0] - y[1]) / (lam * lam)


@jit
def dopri5(rhs, params, t0, t1, y0, rtol, atol, h0, hmax, max_steps,
           blowup, sign_stop):
    """Integrate from t0 to t1 (either direction).

    Returns ``(n, ts, ys, cont, status, n_rejected)`` where ``ts[:n]`` and
    ``ys[:n]`` are the accepted nodes (including the start) and
    ``cont[:n-1]`` holds the five dense-output vectors per step.
    """
    dim = y0.shape[0]
    span = t1 - t0
    direction = 1.0 if span >= 0.0 else -1.0
    length = abs(span)
    cap = 256
    ts = np.empty(cap)
    ys = np.empty((cap, dim), dtype=y0.dtype)
    cont = np.empty((cap, 5, dim), dtype=y0.dtype)
    ts[0] = t0
    ys[0, :] = y0
    n = 1

    k1 = np.empty(dim, dtype=y0.dtype)
    k2 = np.empty(dim, dtype=y0.dtype)
    k3 = np.empty(dim, dtype=y0.dtype)
    k4 = np.empty(dim, dtype=y0.dtype)
    k5 = np.empty(dim, dtype=y0.dtype)
    k6 = np.empty(dim, dtype=y0.dtype)
    k7 = np.empty(dim, dtype=y0.dtype)
    yt = np.empty(dim, dtype=y0.dtype)
    ynew = np.empty(dim, dtype=y0.dtype)
    y = y0.copy()
    t = t0
    if length == 0.0:
        return n, ts, ys, cont, REACHED, 0

    if hmax <= 0.0:
        hmax = length
    h = abs(h0) if h0 > 0.0 else min(1e-3 * length, hmax)
    h_floor = 1e-13 * length
    hmax_seen = 0.0
    fac_old = 1e-4
    n_rejected = 0
    steps = 0
    status = REACHED
    rhs(t, y, params, k1)
    last = False
    while True:
        if steps >= max_steps:
            status = MAX_STEPS
            break
        if h < h_floor:
            if abs(y[0]) > blowup and hmax_seen > 1024.0 * h:
                status = POLE
            else:
                status = TOLERANCE_FAILURE
            break
        remaining = abs(t1 - t)
        if h >= remaining:
            h = remaining
            last = True
        else:
            last = False
        hs = direction * h
        steps += 1
        for i in range(dim):
            yt[i] = y[i] + hs * A21 * k1[i]
        rhs(t + C2 * hs, yt, params, k2)
        for i in range(dim):
            yt[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i])
        rhs(t + C3 * hs, yt, params, k3)
        for i in range(dim):
            yt[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        rhs(t + C4 * hs, yt, params, k4)
        for i in range(dim):
            yt[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        rhs(t + C5 * hs, yt, params, k5)
        for i in range(dim):
            yt[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                 + A64 * k4[i] + A65 * k5[i])
        rhs(t + hs, yt, params, k6)
        for i in range(dim):
            ynew[i] = y[i] + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i]
                                   + A75 * k5[i] + A76 * k6[i])
        rhs(t + hs, ynew, params, k7)
        err = 0.0
        finite = True
        for i in range(dim):
            e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                      + E6 * k6[i] + E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            r = abs(e) / sc
            if not np.isfinite(r):
                finite = False
            err += r * r
        err = np.sqrt(err / dim) if finite else 1e300
        if err <= 1.0:
            # Lund stabilisation as in Hairer's DOPRI5
            fac11 = err ** 0.17 if err > 0.0 else 0.0
            fac = fac11 / fac_old ** 0.04 if fac11 > 0.0 else 0.0
            fac = min(5.0, max(0.1, fac / 0.9)) if fac > 0.0 else 0.1
            hnew = h / fac
            fac_old = max(err, 1e-4)
            if n >= cap - 1:
                cap *= 2
                ts2 = np.empty(cap)
                ys2 = np.empty((cap, dim), dtype=y0.dtype)
                cont2 = np.empty((cap, 5, dim), dtype=y0.dtype)
                ts2[:n] = ts[:n]
                ys2[:n] = ys[:n]
                cont2[:n - 1] = cont[:n - 1]
                ts, ys, cont = ts2, ys2, cont2
            for i in range(dim):
                dy = ynew[i] - y[i]
                bspl = hs * k1[i] - dy
                cont[n - 1, 0, i] = y[i]
                cont[n - 1, 1, i] = dy
                cont[n - 1, 2, i] = bspl
                cont[n - 1, 3, i] = dy - hs * k7[i] - bspl
                cont[n - 1, 4, i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i]
                                          + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            old_sign = y[0].real
            t = t1 if last else t + hs
            for i in range(dim):
                y[i] = ynew[i]
                k1[i] = k7[i]
            ts[n] = t
            ys[n, :] = y
            n += 1
            if h > hmax_seen:
                hmax_seen = h
            if sign_stop and old_sign * y[0].real < 0.0:
                status = SIGN_CHANGE
                break
            if abs(y[0]) > blowup and hmax_seen > 1024.0 * h:
                status = POLE
                break
            if last:
                break
            h = min(hnew, hmax)
        else:
            n_rejected += 1
            if finite:
                fac = min(5.0, max(0.1, err ** 0.2 / 0.9))
            else:
                fac = 10.0
            h = h / fac
            last = False
    return n, ts, ys, cont, status, n_rejected
