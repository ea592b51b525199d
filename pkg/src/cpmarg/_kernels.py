"""Compiled inner loops.

Every kernel here works on plain float64 arrays in log space with 0-based
storage.  The mathematical quantities are 1-based, so the conventions are:

* ``lp[i - 1, j - 1]`` is log P(x_j | x_{1:j-1}, z_i)
* ``lw[t - 1]`` is log w_t
* ``cum[i - 1, t]`` is the sum of the first ``t`` entries of row ``i``
* DP tables are indexed by their mathematical ``k`` and ``t`` directly.

The undecorated Python functions stay reachable as ``kernel.py_func``.
"""

import math

import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True)
def logaddexp2(a, b):
    """log(exp(a) + exp(b)) with logaddexp2(-inf, a) == a."""
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@njit(cache=True)
def log_normalizer_rolling(lw, m):
    # S_{0,t} = 1 for all t, S_{k,k-1} = 0; two rows of length n.
    n = lw.shape[0]
    prev = np.zeros(n)
    cur = np.empty(n)
    for k in range(1, m):
        for t in range(n):
            cur[t] = NEG_INF
        for t in range(k, n):
            cur[t] = logaddexp2(cur[t - 1], prev[t - 1] + lw[t - 1])
        prev, cur = cur, prev
    return prev[n - 1]


@njit(cache=True)
def normalizer_table(lw, m):
    """Full log S table, shape (m, n); row k, column t."""
    n = lw.shape[0]
    S = np.full((m, n), NEG_INF)
    for t in range(n):
        S[0, t] = 0.0
    for k in range(1, m):
        for t in range(k, n):
            S[k, t] = logaddexp2(S[k, t - 1], S[k - 1, t - 1] + lw[t - 1])
    return S


@njit(cache=True)
def normalizer_backward(S, lw, m):
    """Gradient of log S_{m-1,n-1} with respect to lw."""
    n = lw.shape[0]
    g_lw = np.zeros(n)
    if m == 1:
        return g_lw
    gS = np.zeros((m, n))
    gS[m - 1, n - 1] = 1.0
    for k in range(m - 1, 0, -1):
        for t in range(n - 1, k - 1, -1):
            g = gS[k, t]
            if g == 0.0 or S[k, t] == NEG_INF:
                continue
            stay = S[k, t - 1]
            if stay != NEG_INF:
                gS[k, t - 1] += g * math.exp(stay - S[k, t])
            jump = S[k - 1, t - 1] + lw[t - 1]
            if jump != NEG_INF:
                gj = g * math.exp(jump - S[k, t])
                gS[k - 1, t - 1] += gj
                g_lw[t - 1] += gj
    return g_lw


@njit(cache=True)
def dp_forward(lp, lw, log_W):
    """Log-space marginalisation over changepoints in O(mn).

    Returns (log marginal, log_L, log_R, bad_i, bad_j).  ``log_L`` has shape
    (m, n) and ``log_R`` shape (m + 1, n); cells outside t in [m-1, n-1] are
    NaN.  A zero density in a ratio denominator aborts the sweep and is
    reported as the 1-based cell (bad_i, bad_j); otherwise both are 0.
    Requires m >= 2.
    """
    m, n = lp.shape
    log_L = np.full((m, n), np.nan)
    log_R = np.full((m + 1, n), np.nan)

    # a segment that can explain no point leaves every configuration at zero mass
    for i in range(m):
        dead = True
        for j in range(n):
            if lp[i, j] != NEG_INF:
                dead = False
                break
        if dead:
            for t in range(m - 1, n):
                log_R[m, t] = 0.0
                for k in range(m):
                    log_L[k, t] = NEG_INF
            return NEG_INF, log_L, log_R, 0, 0

    # joint log-probability of tau = (0, 1, ..., m-1, n)
    base = -log_W
    for i in range(1, m):
        base += lp[i - 1, i - 1] + lw[i - 1]
    for j in range(m, n + 1):
        base += lp[m - 1, j - 1]

    for t in range(m - 1, n):
        log_L[0, t] = NEG_INF
        log_R[m, t] = 0.0
    for k in range(1, m):
        log_L[k, m - 1] = base

    for t in range(m - 1, n):
        for k in range(m - 1, 0, -1):
            b = t - (m - 1 - k)
            if lp[k, b] == NEG_INF and t < n - 1:
                return np.nan, log_L, log_R, k + 1, b + 1
            # P(x_{b+1}|z_k) w_{b+1} / (P(x_{b+1}|z_{k+1}) w_b)
            log_R[k, t] = log_R[k + 1, t] + lp[k - 1, b] + lw[b] - lp[k, b] - lw[b - 1]

    for t in range(m, n):
        for k in range(1, m):
            log_L[k, t] = logaddexp2(log_L[k - 1, t], log_L[k, t - 1] + log_R[k, t - 1])

    # streaming log-sum-exp over the final row
    mx = NEG_INF
    for t in range(m - 1, n):
        if log_L[m - 1, t] > mx:
            mx = log_L[m - 1, t]
    if mx == NEG_INF:
        return NEG_INF, log_L, log_R, 0, 0
    acc = 0.0
    for t in range(m - 1, n):
        acc += math.exp(log_L[m - 1, t] - mx)
    return mx + math.log(acc), log_L, log_R, 0, 0


@njit(cache=True)
def dp_backward(lp, lw, log_L, log_R, value):
    """Adjoint sweep of :func:`dp_forward`.

    Returns (d value / d lp, d value / d lw holding log_W fixed,
    d value / d base).  The value depends on log_W only through the base
    cell, so d value / d log_W is minus the last entry.
    """
    m, n = lp.shape
    g_lp = np.zeros((m, n))
    g_lw = np.zeros(n)
    gL = np.zeros((m, n))
    gR = np.zeros((m + 1, n))
    if value == NEG_INF:
        return g_lp, g_lw, 0.0

    for t in range(m - 1, n):
        if log_L[m - 1, t] != NEG_INF:
            gL[m - 1, t] += math.exp(log_L[m - 1, t] - value)

    for t in range(n - 1, m - 1, -1):
        for k in range(m - 1, 0, -1):
            g = gL[k, t]
            cell = log_L[k, t]
            if g == 0.0 or cell == NEG_INF:
                continue
            left = log_L[k - 1, t]
            if k > 1 and left != NEG_INF:
                gL[k - 1, t] += g * math.exp(left - cell)
            shifted = log_L[k, t - 1] + log_R[k, t - 1]
            if shifted != NEG_INF:
                gs = g * math.exp(shifted - cell)
                gL[k, t - 1] += gs
                gR[k, t - 1] += gs

    g_base = 0.0
    for k in range(1, m):
        g_base += gL[k, m - 1]

    # log_R[k, t] = sum_{j >= k} d_{j,t}, so d_{j,t} collects gR[1..j, t]
    for t in range(m - 1, n):
        acc = 0.0
        for j in range(1, m):
            acc += gR[j, t]
            if acc != 0.0:
                b = t - (m - 1 - j)
                g_lp[j - 1, b] += acc
                g_lp[j, b] -= acc
                g_lw[b] += acc
                g_lw[b - 1] -= acc

    for i in range(1, m):
        g_lp[i - 1, i - 1] += g_base
        g_lw[i - 1] += g_base
    for j in range(m, n + 1):
        g_lp[m - 1, j - 1] += g_base
    return g_lp, g_lw, g_base


@njit(cache=True)
def forward_table(cum, lw, m):
    """O(m n^2) prefix marginals A[k, t] = log sum over tau_{0:k} with tau_k = t.

    Interior ends carry the weight w_t; the final end t = n carries 1.  The
    normaliser W is not applied.  Shape (m + 1, n + 1).
    """
    n = lw.shape[0]
    A = np.full((m + 1, n + 1), NEG_INF)
    A[0, 0] = 0.0
    for k in range(1, m + 1):
        if k < m:
            lo = k
            hi = n - (m - k)
        else:
            lo = n
            hi = n
        for t in range(lo, hi + 1):
            acc = NEG_INF
            for s in range(k - 1, t):
                prev = A[k - 1, s]
                if prev != NEG_INF:
                    acc = logaddexp2(acc, prev + cum[k - 1, t] - cum[k - 1, s])
            if k < m:
                acc += lw[t - 1]
            A[k, t] = acc
    return A


@njit(cache=True)
def backward_sample(A, cum, uniforms):
    """Draw interior changepoints from a forward table by inverse CDF.

    ``uniforms`` holds m - 1 draws in [0, 1), consumed from tau_{m-1} down.
    Returns tau_{0:m}.
    """
    m = A.shape[0] - 1
    n = A.shape[1] - 1
    tau = np.empty(m + 1, dtype=np.int64)
    tau[0] = 0
    tau[m] = n
    logits = np.empty(n + 1)
    nxt = n
    for k in range(m - 1, 0, -1):
        mx = NEG_INF
        for s in range(k, nxt):
            v = A[k, s] + cum[k, nxt] - cum[k, s]
            logits[s] = v
            if v > mx:
                mx = v
        total = 0.0
        for s in range(k, nxt):
            total += math.exp(logits[s] - mx)
        target = uniforms[m - 1 - k] * total
        acc = 0.0
        choice = nxt - 1
        for s in range(k, nxt):
            acc += math.exp(logits[s] - mx)
            if acc > target:
                choice = s
                break
        tau[k] = choice
        nxt = choice
    return tau


@njit(cache=True)
def enumerate_configurations(cum, lw, m):
    """Log-sum over every changepoint configuration, without the -log W term.

    Configurations are visited in lexicographic order of the interior
    changepoints and each is scored by m differences of prefix sums.
    """
    n = lw.shape[0]
    tau = np.empty(m + 1, dtype=np.int64)
    tau[0] = 0
    tau[m] = n
    for i in range(1, m):
        tau[i] = i
    mx = NEG_INF
    acc = 0.0
    while True:
        score = 0.0
        for i in range(1, m):
            score += lw[tau[i] - 1]
        for i in range(1, m + 1):
            score += cum[i - 1, tau[i]] - cum[i - 1, tau[i - 1]]
        # streaming log-sum-exp with rescaling
        if score > mx:
            if mx == NEG_INF:
                acc = 1.0
            else:
                acc = acc * math.exp(mx - score) + 1.0
            mx = score
        elif score != NEG_INF:
            acc += math.exp(score - mx)
        # next combination
        i = m - 1
        while i >= 1 and tau[i] == n - m + i:
            i -= 1
        if i < 1:
            break
        tau[i] += 1
        for j in range(i + 1, m):
            tau[j] = tau[j - 1] + 1
    if mx == NEG_INF:
        return NEG_INF
    return mx + math.log(acc)


# Repeated evaluation issued from compiled code, so timings exclude the
# interpreter's per-call cost.  Results are accumulated to keep every call live.


@njit(cache=True)
def repeat_dp(lp, lw, reps):
    m, n = lp.shape
    acc = 0.0
    for _ in range(reps):
        if m == 1:
            v = 0.0
            for j in range(n):
                v += lp[0, j]
            acc += v
        else:
            log_W = log_normalizer_rolling(lw, m)
            acc += dp_forward(lp, lw, log_W)[0]
    return acc


@njit(cache=True)
def repeat_forward(cum, lw, m, reps):
    n = cum.shape[1] - 1
    acc = 0.0
    for _ in range(reps):
        A = forward_table(cum, lw, m)
        acc += A[m, n] - log_normalizer_rolling(lw, m)
    return acc


@njit(cache=True)
def repeat_enumerate(cum, lw, m, reps):
    acc = 0.0
    for _ in range(reps):
        acc += enumerate_configurations(cum, lw, m) - log_normalizer_rolling(lw, m)
    return acc
