"""Pure-Python kernels, the fallback when the extension is not built.

simulate_replica and expected_counts replay the compiled loops operation
for operation (plain-float arithmetic, same summation order, same stream
consumption), so their outputs are bit-identical to the compiled backend.
mean_field_loglik is vectorized with numpy instead; it differs from the
compiled sum only by float reassociation of the final reduction.
"""

import numpy as np

NAME = "pure-python"

_BLOCK_STEPS = 4096


def simulate_replica(gamma_t, theta, c, cum_pi, shock_t, shock_proc,
                     shock_theta, shock_c, schedule, t_max, bit_generator,
                     s_out, p_out, split_out):
    gen = np.random.Generator(bit_generator)
    n = len(theta)
    has_pi = len(cum_pi) > 0
    draws_per_step = n + 1 if has_pi else n

    grows = [list(map(float, row)) for row in np.asarray(gamma_t)]
    theta = [float(v) for v in theta]
    c = [float(v) for v in c]
    cpi = [float(v) for v in cum_pi]
    shock_t = [int(v) for v in shock_t]
    shock_proc = [int(v) for v in shock_proc]
    shock_theta = [float(v) for v in shock_theta]
    shock_c = [float(v) for v in shock_c]
    schedule = [int(v) for v in schedule]

    s = [0] * n
    p = [theta[h] / c[h] for h in range(n)]
    split = [[0] * n for _ in range(n)] if has_pi else None
    ck = 0
    ish = 0
    n_ck = len(schedule)
    n_shocks = len(shock_t)

    step = 0
    buf = ()
    pos = 0
    while step < t_max:
        # refill the uniform buffer; block draws consume the Philox stream
        # in the same order as the compiled kernel's scalar draws
        if pos >= len(buf):
            want = min(_BLOCK_STEPS, t_max - step) * draws_per_step
            buf = gen.random(want).tolist()
            pos = 0
        step += 1
        x = [0] * n
        for h in range(n):
            if buf[pos] < p[h]:
                x[h] = 1
            pos += 1
        if has_pi:
            u = buf[pos]
            pos += 1
            k = 0
            while u >= cpi[k]:
                k += 1
        for h in range(n):
            if x[h]:
                s[h] += 1
                if has_pi:
                    split[k][h] += 1
        while ish < n_shocks and shock_t[ish] == step:
            theta[shock_proc[ish]] = shock_theta[ish]
            c[shock_proc[ish]] = shock_c[ish]
            ish += 1
        for h in range(n):
            acc = theta[h]
            row = grows[h]
            for j in range(n):
                acc += row[j] * s[j]
            p[h] = acc / (c[h] + step)
        if ck < n_ck and schedule[ck] == step:
            for h in range(n):
                s_out[ck, h] = s[h]
                p_out[ck, h] = p[h]
            if has_pi and split_out.shape[0] > 0:
                for j in range(n):
                    for h in range(n):
                        split_out[ck, j, h] = split[j][h]
            ck += 1


def expected_counts(gamma_t, theta, c, shock_t, shock_proc, shock_theta,
                    shock_c, checkpoints, t_max, out):
    n = len(theta)
    grows = [list(map(float, row)) for row in np.asarray(gamma_t)]
    theta = [float(v) for v in theta]
    c = [float(v) for v in c]
    shock_t = [int(v) for v in shock_t]
    shock_proc = [int(v) for v in shock_proc]
    shock_theta = [float(v) for v in shock_theta]
    shock_c = [float(v) for v in shock_c]
    checkpoints = [int(v) for v in checkpoints]

    es = [0.0] * n
    ck = 0
    ish = 0
    n_ck = len(checkpoints)
    n_shocks = len(shock_t)
    for t in range(t_max + 1):
        if ck < n_ck and checkpoints[ck] == t:
            for h in range(n):
                out[ck, h] = es[h]
            ck += 1
        if t == t_max:
            break
        while ish < n_shocks and shock_t[ish] == t:
            theta[shock_proc[ish]] = shock_theta[ish]
            c[shock_proc[ish]] = shock_c[ish]
            ish += 1
        # increments read the old vector only (Jacobi, not Gauss-Seidel)
        inc = [0.0] * n
        for h in range(n):
            acc = theta[h]
            row = grows[h]
            for j in range(n):
                acc += row[j] * es[j]
            inc[h] = acc / (c[h] + t)
        for h in range(n):
            es[h] += inc[h]


def mean_field_loglik(x, theta, c, gamma_star, iota):
    x = np.asarray(x, dtype=np.uint8)
    rows, n = x.shape
    s = np.zeros((rows, n), dtype=np.int64)
    s[1:] = np.cumsum(x[:-1].astype(np.int64), axis=0)
    sbar = s.sum(axis=1) / float(n)
    steps = np.arange(rows, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    p = (theta + gamma_star * (iota * sbar[:, None] + (1.0 - iota) * s)) \
        / (c + steps[:, None])
    xm = x.astype(bool)
    if np.any(p[~xm] >= 1.0):
        return float("nan")
    logp = np.zeros_like(p)
    np.log(p, where=xm, out=logp)
    log1mp = np.zeros_like(p)
    np.log1p(-p, where=~xm, out=log1mp)
    return float(logp.sum() + log1mp.sum())
