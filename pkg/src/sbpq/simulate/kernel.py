"""Numba event loop for preemptive-resume static-buffer-priority networks.

One replication is strictly single-threaded and deterministic given its
random streams.  With single-server stations there is exactly one live
completion event per station and one pending arrival per arrival class, so
the event calendar is a fixed array of next-event times scanned for the
minimum; simultaneous events are processed arrivals-first in class order,
then completions in station order.

Statistics are lazy time integrals: every per-class / per-station quantity
carries the timestamp of its last change and is settled exactly when it
changes (and at the warm-up boundary and the horizon), so the per-event cost
is independent of the cap sizes.

Service requirements are drawn when a job first enters service; a preempted
job stores its remaining time and resumes without a redraw.  Busy time and
drawn requirements are accounted over the whole run so that

    busy[k] + remaining_of_started_head[k] == drawn[k]

holds to float accumulation error (the work-conservation invariant).
"""

import numpy as np
from numba import njit

FAMILY_CODES = {"gamma": 0, "exponential": 1, "deterministic": 2, "hyperexp2": 3}


@njit(cache=True, nogil=True, inline="always")
def _draw_unit(fam, p1, p2, p3, rng):
    """One unit-mean draw: gamma(1/c2, c2), exp(1), 1, or balanced 2-phase."""
    if fam == 0:
        return rng.gamma(p1, p2)
    elif fam == 1:
        return rng.exponential(1.0)
    elif fam == 2:
        return 1.0
    else:
        if rng.random() < p1:
            return rng.exponential(p2)
        return rng.exponential(p3)


@njit(cache=True, nogil=True)
def _grow(qbuf, qhead, qlen):
    """Double every class ring buffer, compacting each queue to offset 0."""
    K, cap = qbuf.shape
    out = np.empty((K, cap * 2))
    for k in range(K):
        for i in range(qlen[k]):
            out[k, i] = qbuf[k, (qhead[k] + i) % cap]
        qhead[k] = 0
    return out


@njit(cache=True, nogil=True)
def run_kernel(station_of, st_start, st_classes, arr_classes,
               route_cum, alpha, mean_svc,
               arr_fam, arr_p1, arr_p2, arr_p3,
               svc_fam, svc_p1, svc_p2, svc_p3,
               n_arrivals, warmup_arrivals,
               hist_cap, pair_i, pair_j, cap_i, cap_j,
               rngs):
    """Simulate until the n-th external arrival; return raw statistics.

    rngs is a flat tuple of 3K generators: arrival stream of class k at
    index k, service stream at K + k, routing stream at 2K + k.
    """
    K = station_of.shape[0]
    J = st_start.shape[0] - 1
    NP = pair_i.shape[0]
    INF = np.inf

    qcap = 1024
    qbuf = np.empty((K, qcap))
    qhead = np.zeros(K, np.int64)
    qlen = np.zeros(K, np.int64)
    z = np.zeros(K, np.int64)

    head_rem = np.full(K, -1.0)          # -1: head job has not begun service
    serving = np.full(J, -1, np.int64)
    comp_time = np.full(J, INF)
    next_arr = np.full(K, INF)
    for i in range(arr_classes.shape[0]):
        k = arr_classes[i]
        next_arr[k] = _draw_unit(arr_fam[k], arr_p1[k], arr_p2[k], arr_p3[k],
                                 rngs[k]) / alpha[k]

    z_int = np.zeros(K)
    z_mark = np.zeros(K)
    hist_off = np.zeros(K + 1, np.int64)
    for k in range(K):
        hist_off[k + 1] = hist_off[k] + hist_cap[k] + 1
    hist = np.zeros(hist_off[K])
    joint_off = np.zeros(NP + 1, np.int64)
    for p in range(NP):
        joint_off[p + 1] = joint_off[p] + (cap_i[p] + 1) * (cap_j[p] + 1)
    joint = np.zeros(joint_off[NP])
    pair_mark = np.zeros(NP)

    # per station, per priority rank: time during which every class of that
    # rank or higher was empty (rank 0 = highest priority)
    rank_off = np.zeros(J + 1, np.int64)
    for j in range(J):
        rank_off[j + 1] = rank_off[j] + (st_start[j + 1] - st_start[j])
    empty_time = np.zeros(rank_off[J])
    st_mark = np.zeros(J)

    busy_time = np.zeros(K)
    busy_mark = np.zeros(J)
    drawn_sum = np.zeros(K)
    n_dep = np.zeros(K, np.int64)
    n_arr = np.zeros(K, np.int64)
    sum_soj = 0.0
    n_soj = 0

    t = 0.0
    warm = warmup_arrivals == 0
    warm_t = 0.0
    arrivals_seen = 0

    while True:
        # ---- next event
        t_next = INF
        ev_k = -1
        ev_j = -1
        for i in range(arr_classes.shape[0]):
            k = arr_classes[i]
            if next_arr[k] < t_next:
                t_next = next_arr[k]
                ev_k = k
        for j in range(J):
            if comp_time[j] < t_next:
                t_next = comp_time[j]
                ev_k = -1
                ev_j = j
        t = t_next

        if ev_k >= 0:
            # ---- external arrival at class k
            k = ev_k
            j = station_of[k]
            if warm:
                dt = t - z_mark[k]
                z_int[k] += z[k] * dt
                idx = z[k] if z[k] < hist_cap[k] else hist_cap[k]
                hist[hist_off[k] + idx] += dt
                for p in range(NP):
                    if pair_i[p] == k or pair_j[p] == k:
                        zi = min(z[pair_i[p]], cap_i[p])
                        zj = min(z[pair_j[p]], cap_j[p])
                        joint[joint_off[p] + zi * (cap_j[p] + 1) + zj] += t - pair_mark[p]
                        pair_mark[p] = t
                dtj = t - st_mark[j]
                top = st_start[j + 1] - st_start[j]
                for c in range(st_start[j], st_start[j + 1]):
                    if z[st_classes[c]] > 0:
                        top = c - st_start[j]
                        break
                for m in range(st_start[j + 1] - st_start[j]):
                    if top > m:
                        empty_time[rank_off[j] + m] += dtj
            z_mark[k] = t
            st_mark[j] = t
            if qlen[k] == qcap:
                qbuf = _grow(qbuf, qhead, qlen)
                qcap *= 2
            qbuf[k, (qhead[k] + qlen[k]) % qcap] = t
            qlen[k] += 1
            z[k] += 1
            n_arr[k] += 1
            arrivals_seen += 1
            next_arr[k] = t + _draw_unit(arr_fam[k], arr_p1[k], arr_p2[k],
                                         arr_p3[k], rngs[k]) / alpha[k]
            # highest-priority nonempty class at j
            c_new = -1
            for c in range(st_start[j], st_start[j + 1]):
                if z[st_classes[c]] > 0:
                    c_new = st_classes[c]
                    break
            c_old = serving[j]
            if c_new != c_old:
                if c_old >= 0:           # preempt: freeze remaining time
                    head_rem[c_old] = comp_time[j] - t
                    busy_time[c_old] += t - busy_mark[j]
                busy_mark[j] = t
                serving[j] = c_new
                if head_rem[c_new] < 0.0:
                    req = mean_svc[c_new] * _draw_unit(
                        svc_fam[c_new], svc_p1[c_new], svc_p2[c_new],
                        svc_p3[c_new], rngs[K + c_new])
                    drawn_sum[c_new] += req
                    head_rem[c_new] = req
                comp_time[j] = t + head_rem[c_new]
            if not warm and arrivals_seen == warmup_arrivals:
                warm = True
                warm_t = t
                for kk in range(K):
                    z_mark[kk] = t
                for p in range(NP):
                    pair_mark[p] = t
                for jj in range(J):
                    st_mark[jj] = t
            if arrivals_seen == n_arrivals:
                break
        else:
            # ---- service completion at station j
            j = ev_j
            c = serving[j]
            busy_time[c] += t - busy_mark[j]
            busy_mark[j] = t
            if warm:
                dt = t - z_mark[c]
                z_int[c] += z[c] * dt
                idx = z[c] if z[c] < hist_cap[c] else hist_cap[c]
                hist[hist_off[c] + idx] += dt
                for p in range(NP):
                    if pair_i[p] == c or pair_j[p] == c:
                        zi = min(z[pair_i[p]], cap_i[p])
                        zj = min(z[pair_j[p]], cap_j[p])
                        joint[joint_off[p] + zi * (cap_j[p] + 1) + zj] += t - pair_mark[p]
                        pair_mark[p] = t
                dtj = t - st_mark[j]
                top = st_start[j + 1] - st_start[j]
                for cc in range(st_start[j], st_start[j + 1]):
                    if z[st_classes[cc]] > 0:
                        top = cc - st_start[j]
                        break
                for m in range(st_start[j + 1] - st_start[j]):
                    if top > m:
                        empty_time[rank_off[j] + m] += dtj
            z_mark[c] = t
            st_mark[j] = t
            entry = qbuf[c, qhead[c] % qcap]
            qhead[c] = (qhead[c] + 1) % qcap
            qlen[c] -= 1
            z[c] -= 1
            head_rem[c] = -1.0
            serving[j] = -1
            comp_time[j] = INF
            n_dep[c] += 1
            # route the completed job
            u = rngs[2 * K + c].random()
            dest = -1
            for l in range(K):
                if u < route_cum[c, l]:
                    dest = l
                    break
            if dest >= 0:
                jd = station_of[dest]
                if warm:
                    dt = t - z_mark[dest]
                    z_int[dest] += z[dest] * dt
                    idx = z[dest] if z[dest] < hist_cap[dest] else hist_cap[dest]
                    hist[hist_off[dest] + idx] += dt
                    for p in range(NP):
                        if pair_i[p] == dest or pair_j[p] == dest:
                            zi = min(z[pair_i[p]], cap_i[p])
                            zj = min(z[pair_j[p]], cap_j[p])
                            joint[joint_off[p] + zi * (cap_j[p] + 1) + zj] += t - pair_mark[p]
                            pair_mark[p] = t
                    if jd != j:
                        dtj = t - st_mark[jd]
                        top = st_start[jd + 1] - st_start[jd]
                        for cc in range(st_start[jd], st_start[jd + 1]):
                            if z[st_classes[cc]] > 0:
                                top = cc - st_start[jd]
                                break
                        for m in range(st_start[jd + 1] - st_start[jd]):
                            if top > m:
                                empty_time[rank_off[jd] + m] += dtj
                z_mark[dest] = t
                if jd != j:
                    st_mark[jd] = t
                if qlen[dest] == qcap:
                    qbuf = _grow(qbuf, qhead, qlen)
                    qcap *= 2
                qbuf[dest, (qhead[dest] + qlen[dest]) % qcap] = entry
                qlen[dest] += 1
                z[dest] += 1
                if jd != j:
                    c_new = -1
                    for cc in range(st_start[jd], st_start[jd + 1]):
                        if z[st_classes[cc]] > 0:
                            c_new = st_classes[cc]
                            break
                    c_old = serving[jd]
                    if c_new != c_old:
                        if c_old >= 0:
                            head_rem[c_old] = comp_time[jd] - t
                            busy_time[c_old] += t - busy_mark[jd]
                        busy_mark[jd] = t
                        serving[jd] = c_new
                        if head_rem[c_new] < 0.0:
                            req = mean_svc[c_new] * _draw_unit(
                                svc_fam[c_new], svc_p1[c_new], svc_p2[c_new],
                                svc_p3[c_new], rngs[K + c_new])
                            drawn_sum[c_new] += req
                            head_rem[c_new] = req
                        comp_time[jd] = t + head_rem[c_new]
            else:
                if warm:
                    sum_soj += t - entry
                    n_soj += 1
            # resume or start the next job at station j
            c_new = -1
            for cc in range(st_start[j], st_start[j + 1]):
                if z[st_classes[cc]] > 0:
                    c_new = st_classes[cc]
                    break
            if c_new >= 0:
                busy_mark[j] = t
                serving[j] = c_new
                if head_rem[c_new] < 0.0:
                    req = mean_svc[c_new] * _draw_unit(
                        svc_fam[c_new], svc_p1[c_new], svc_p2[c_new],
                        svc_p3[c_new], rngs[K + c_new])
                    drawn_sum[c_new] += req
                    head_rem[c_new] = req
                comp_time[j] = t + head_rem[c_new]

    # ---- settle everything at the horizon
    for k in range(K):
        dt = t - z_mark[k]
        z_int[k] += z[k] * dt
        idx = z[k] if z[k] < hist_cap[k] else hist_cap[k]
        hist[hist_off[k] + idx] += dt
    for p in range(NP):
        zi = min(z[pair_i[p]], cap_i[p])
        zj = min(z[pair_j[p]], cap_j[p])
        joint[joint_off[p] + zi * (cap_j[p] + 1) + zj] += t - pair_mark[p]
    for j in range(J):
        dtj = t - st_mark[j]
        top = st_start[j + 1] - st_start[j]
        for cc in range(st_start[j], st_start[j + 1]):
            if z[st_classes[cc]] > 0:
                top = cc - st_start[j]
                break
        for m in range(st_start[j + 1] - st_start[j]):
            if top > m:
                empty_time[rank_off[j] + m] += dtj
        if serving[j] >= 0:
            busy_time[serving[j]] += t - busy_mark[j]
            head_rem[serving[j]] = comp_time[j] - t

    span = t - warm_t
    return (z_int, hist, joint, empty_time, span, busy_time, drawn_sum,
            head_rem, n_dep, n_arr, sum_soj, n_soj, t)
