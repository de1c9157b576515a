"""Numba-compiled sequential kernels for adaptive filters and the
angle-branch tracker.  These loops are per-sample data-dependent and far too
slow in pure Python at the frame sizes this simulator runs."""

import numpy as np
from numba import njit


@njit(cache=True)
def track_angles(cos2a, w_re, w_im, sin_floor):
    """Continuity-tracked (2*alpha, Sigma) from per-sample measurements.

    ``cos2a`` estimates cos(2 alpha); ``w = sin(2 alpha) exp(j Sigma)``.
    Both sequences are resolved to continuous branches.  Position alone
    cannot tell a pass through a cosine extremum from a reflection off it,
    so the branch nearest a constant-velocity prediction is taken, with the
    velocity itself tracked as an exponential average of the chosen
    increments.  Sigma is unwrapped and held where sin(2 alpha) is too
    small to observe it.
    """
    n = cos2a.shape[0]
    theta = np.empty(n)
    sigma = np.empty(n)
    two_pi = 2.0 * np.pi
    lam = 0.05  # velocity-average update rate
    # initial branch: principal theta in [0, pi], Sigma from w if observable
    c0 = min(max(cos2a[0], -1.0), 1.0)
    th = np.arccos(c0)
    mag0 = np.hypot(w_re[0], w_im[0])
    if mag0 > sin_floor:
        sg = np.arctan2(w_im[0], w_re[0])
    else:
        sg = 0.0
    theta[0] = th
    sigma[0] = sg
    vel = 0.0
    for i in range(1, n):
        c = min(max(cos2a[i], -1.0), 1.0)
        a = np.arccos(c)
        # candidate branches +-a + 2*pi*k nearest the predicted position
        pred = th + vel
        d1 = (a - pred + np.pi) % two_pi - np.pi
        d2 = (-a - pred + np.pi) % two_pi - np.pi
        if abs(d1) <= abs(d2):
            step = pred + d1 - th
        else:
            step = pred + d2 - th
        th = th + step
        vel = (1.0 - lam) * vel + lam * step
        s = np.sin(th)
        if abs(s) > sin_floor:
            raw = np.arctan2(w_im[i], w_re[i])
            if s < 0.0:
                raw = raw + np.pi
            ds = (raw - sg + np.pi) % two_pi - np.pi
            sg = sg + ds
        theta[i] = th
        sigma[i] = sg
    return theta, sigma


@njit(cache=True)
def lms_fir_2x2(x_i, x_q, d_i, d_q, train, taps, mu, guard, avg_start):
    """Real-valued 2x2 MIMO FIR with LMS on training samples only.

    Returns the filtered (I, Q) streams and a divergence flag.  Weights are
    center-tap identity initialised and adapt while ``train`` is set.  The
    payload is filtered with the time-average of the weights seen on
    training samples from index ``avg_start`` on, which suppresses the
    gradient-noise excess a single frozen snapshot would carry.  ``guard``
    bounds the weight norm.  The weights used on the payload are returned
    so callers can renormalize the filter's white-noise gain.
    """
    n = x_i.shape[0]
    half = taps // 2
    w = np.zeros((4, taps))
    w[0, half] = 1.0  # I <- I
    w[3, half] = 1.0  # Q <- Q
    w_sum = np.zeros((4, taps))
    n_sum = 0
    y_i = np.zeros(n)
    y_q = np.zeros(n)
    diverged = False
    for k in range(n):
        lo = k - half
        acc_i = 0.0
        acc_q = 0.0
        for t in range(taps):
            idx = lo + t
            if 0 <= idx < n:
                acc_i += w[0, t] * x_i[idx] + w[1, t] * x_q[idx]
                acc_q += w[2, t] * x_i[idx] + w[3, t] * x_q[idx]
        y_i[k] = acc_i
        y_q[k] = acc_q
        if train[k] and not diverged:
            e_i = d_i[k] - acc_i
            e_q = d_q[k] - acc_q
            for t in range(taps):
                idx = lo + t
                if 0 <= idx < n:
                    w[0, t] += mu * e_i * x_i[idx]
                    w[1, t] += mu * e_i * x_q[idx]
                    w[2, t] += mu * e_q * x_i[idx]
                    w[3, t] += mu * e_q * x_q[idx]
            norm = 0.0
            for r in range(4):
                for t in range(taps):
                    norm += w[r, t] ** 2
            if norm > guard * guard:
                diverged = True
            if k >= avg_start:
                w_sum += w
                n_sum += 1
    if n_sum > 0 and not diverged:
        w = w_sum / n_sum
    for k in range(n):
        if not train[k]:
            lo = k - half
            acc_i = 0.0
            acc_q = 0.0
            for t in range(taps):
                idx = lo + t
                if 0 <= idx < n:
                    acc_i += w[0, t] * x_i[idx] + w[1, t] * x_q[idx]
                    acc_q += w[2, t] * x_i[idx] + w[3, t] * x_q[idx]
            y_i[k] = acc_i
            y_q[k] = acc_q
    return y_i, y_q, w, diverged


@njit(cache=True)
def lms_fir_4x2(xv_i, xv_q, xh_i, xh_q, d_i, d_q, train, taps, mu, guard, avg_start):
    """Real-valued 4-input/2-output MIMO FIR with LMS, V-path center-tap init.

    Same training, weight-averaging and freezing scheme as
    :func:`lms_fir_2x2`, with both polarization (I, Q) rails as inputs.
    """
    n = xv_i.shape[0]
    half = taps // 2
    w = np.zeros((2, 4, taps))
    w[0, 0, half] = 1.0  # I out <- I_V
    w[1, 1, half] = 1.0  # Q out <- Q_V
    w_sum = np.zeros((2, 4, taps))
    n_sum = 0
    y_i = np.zeros(n)
    y_q = np.zeros(n)
    diverged = False
    for k in range(n):
        lo = k - half
        acc_i = 0.0
        acc_q = 0.0
        for t in range(taps):
            idx = lo + t
            if 0 <= idx < n:
                acc_i += (
                    w[0, 0, t] * xv_i[idx]
                    + w[0, 1, t] * xv_q[idx]
                    + w[0, 2, t] * xh_i[idx]
                    + w[0, 3, t] * xh_q[idx]
                )
                acc_q += (
                    w[1, 0, t] * xv_i[idx]
                    + w[1, 1, t] * xv_q[idx]
                    + w[1, 2, t] * xh_i[idx]
                    + w[1, 3, t] * xh_q[idx]
                )
        y_i[k] = acc_i
        y_q[k] = acc_q
        if train[k] and not diverged:
            e_i = d_i[k] - acc_i
            e_q = d_q[k] - acc_q
            for t in range(taps):
                idx = lo + t
                if 0 <= idx < n:
                    w[0, 0, t] += mu * e_i * xv_i[idx]
                    w[0, 1, t] += mu * e_i * xv_q[idx]
                    w[0, 2, t] += mu * e_i * xh_i[idx]
                    w[0, 3, t] += mu * e_i * xh_q[idx]
                    w[1, 0, t] += mu * e_q * xv_i[idx]
                    w[1, 1, t] += mu * e_q * xv_q[idx]
                    w[1, 2, t] += mu * e_q * xh_i[idx]
                    w[1, 3, t] += mu * e_q * xh_q[idx]
            norm = 0.0
            for o in range(2):
                for c in range(4):
                    for t in range(taps):
                        norm += w[o, c, t] ** 2
            if norm > guard * guard:
                diverged = True
            if k >= avg_start:
                w_sum += w
                n_sum += 1
    if n_sum > 0 and not diverged:
        w = w_sum / n_sum
    for k in range(n):
        if not train[k]:
            lo = k - half
            acc_i = 0.0
            acc_q = 0.0
            for t in range(taps):
                idx = lo + t
                if 0 <= idx < n:
                    acc_i += (
                        w[0, 0, t] * xv_i[idx]
                        + w[0, 1, t] * xv_q[idx]
                        + w[0, 2, t] * xh_i[idx]
                        + w[0, 3, t] * xh_q[idx]
                    )
                    acc_q += (
                        w[1, 0, t] * xv_i[idx]
                        + w[1, 1, t] * xv_q[idx]
                        + w[1, 2, t] * xh_i[idx]
                        + w[1, 3, t] * xh_q[idx]
                    )
            y_i[k] = acc_i
            y_q[k] = acc_q
    return y_i, y_q, w, diverged


@njit(cache=True)
def cma_butterfly(x_v, x_h, r2, mu, guard):
    """1-tap CMA butterfly driven by the constant-modulus error of the H
    output, with the V row kept as the unitary complement.

    ``r2`` is the fixed reference modulus squared; a self-referenced modulus
    would make the cost flat in the rotation angle for a single-tone drive.
    Returns the per-sample weight trajectory (n, 4) ordered
    (w_hv, w_hh, w_vv, w_vh) and a divergence flag.
    """
    n = x_v.shape[0]
    w_hv = 0.0 + 0.0j
    w_hh = 1.0 + 0.0j
    weights = np.empty((n, 4), dtype=np.complex128)
    diverged = False
    for k in range(n):
        y_h = w_hv * x_v[k] + w_hh * x_h[k]
        m2 = y_h.real * y_h.real + y_h.imag * y_h.imag
        if not diverged:
            e = (r2 - m2) * mu
            w_hv = w_hv + e * y_h * np.conj(x_v[k])
            w_hh = w_hh + e * y_h * np.conj(x_h[k])
            norm = (
                w_hv.real**2 + w_hv.imag**2 + w_hh.real**2 + w_hh.imag**2
            )
            if norm > guard * guard:
                diverged = True
        # unitary complement for the V row
        weights[k, 0] = w_hv
        weights[k, 1] = w_hh
        weights[k, 2] = np.conj(w_hh)
        weights[k, 3] = -np.conj(w_hv)
    return weights, diverged
