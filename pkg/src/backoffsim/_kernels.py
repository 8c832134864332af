"""Compiled inner loops for the radio and per-reception bookkeeping.

Every broadcast touches each static neighbour of the sender twice (frame
start and frame end), and most receptions only need counter updates: traffic
and density estimators, duplicate filtering, reservation recording and the
hop gradient.  At full scale that is ~10^8 operations per run, so the whole
reception fan-out lives here; the kernel emits only the rare receptions that
need protocol decisions (new data, announcement conflicts, sink deliveries,
beacon improvements, adaptation-period rollovers) back to Python.

All state is shared numpy arrays owned by the engine.  Per-node scalars are
packed into three row-major state matrices so a kernel call unboxes a
handful of arrays instead of dozens; the engine keeps named row views, so
Python code reads the same memory.  The traced slow path operates on the
same arrays, keeping both paths bit-identical.
"""

import numpy as np
from numba import njit

#: reservation ring capacity per node; draws ignore stale entries, so the
#: ring only has to cover announcements still inside one phase-II window
RES_CAP = 128

# istate rows (int32 per-node counters)
I_RX_COUNT = 0
I_TR_CNT = 1
I_DENS_CNT = 2
I_RES_POS = 3
I_RES_CNT = 4
I_HOP_CNT = 5
I_ROWS = 6

# fstate rows (float64 per-node times)
F_BUSY_UNTIL = 0
F_TR_PS = 1
F_T2A = 2
F_ROWS = 3

# bstate rows (int8 per-node flags)
B_RX_OK = 0
B_ALIVE = 1
B_ACT = 2
B_PEND = 3
B_ROWS = 4

# params vector indices (run-constant scalars)
P_PROTO = 0
P_T_MIN = 1
P_TTL = 2
P_TR_PERIOD = 3
P_HOP_TIMER = 4
P_HOP_CAP = 5
P_LEN = 6

# follow-up codes emitted to Python
FU_FULL = 1  # adaptation period elapsed: handle the whole reception in Python
FU_SINK = 2  # first copy of a message reached the sink
FU_NEW_DATA = 3  # new in-TTL message accepted for forwarding
FU_CONFLICT = 4  # announcement landed on this node's own pending data time
FU_FLUSH = 5  # hop became known, deferred packets can be queued
FU_BEACON_IMP = 6  # beacon improved the hop gradient (rebroadcast candidate)


@njit(cache=True)
def register_tx(sender, tid, now, end, nbr_flat, nbr_off, istate, fstate, bstate, rx_sole):
    """Frame start: mark the channel busy at the sender and every neighbour.

    A receiver keeps a frame as deliverable only while it is the sole frame
    in the air there and the receiver itself was not transmitting when the
    frame began (half-duplex).
    """
    fstate[F_BUSY_UNTIL, sender] = end
    bstate[B_RX_OK, sender] = 0
    for idx in range(nbr_off[sender], nbr_off[sender + 1]):
        r = nbr_flat[idx]
        c = istate[I_RX_COUNT, r]
        istate[I_RX_COUNT, r] = c + 1
        if c == 0:
            rx_sole[r] = tid
            bstate[B_RX_OK, r] = 1 if fstate[F_BUSY_UNTIL, r] <= now else 0
        else:
            bstate[B_RX_OK, r] = 0


@njit(cache=True)
def hop_current(hop_val, hop_exp, istate, r, now):
    """Minimum live hop entry of node r (compacting stale ones); -1 if none."""
    cnt = istate[I_HOP_CNT, r]
    best = -1
    w = 0
    for i in range(cnt):
        if hop_exp[r, i] >= now:
            v = hop_val[r, i]
            hop_val[r, w] = v
            hop_exp[r, w] = hop_exp[r, i]
            w += 1
            if best < 0 or v < best:
                best = v
    istate[I_HOP_CNT, r] = w
    return best


@njit(cache=True)
def hop_enlist(hop_val, hop_exp, istate, r, h, now, timer, cap):
    """Insert/refresh hop h; beyond capacity the largest entry gives way."""
    exp = now + timer
    cnt = istate[I_HOP_CNT, r]
    for i in range(cnt):
        if hop_val[r, i] == h:
            if exp > hop_exp[r, i]:
                hop_exp[r, i] = exp
            return
    if cnt < cap:
        hop_val[r, cnt] = h
        hop_exp[r, cnt] = exp
        istate[I_HOP_CNT, r] = cnt + 1
        return
    mi = 0
    for i in range(1, cnt):
        if hop_val[r, i] > hop_val[r, mi]:
            mi = i
    if h <= hop_val[r, mi]:
        hop_val[r, mi] = h
        hop_exp[r, mi] = exp
    # h above the current maximum: the table stays as it is


@njit(cache=True)
def draw_eligible(lo, hi, t_min, res_row, res_cnt, u, eps):
    """Uniform draw from (lo, hi) minus the bands around live reservations.

    ``u`` is a U[0,1) variate supplied by the caller (so random streams stay
    in Python).  Returns -1.0 when the eligible measure is at most ``eps``.
    """
    cnt = res_cnt if res_cnt < RES_CAP else RES_CAP
    # collect bands overlapping the window
    starts = np.empty(cnt, np.float64)
    ends = np.empty(cnt, np.float64)
    k = 0
    for i in range(cnt):
        t = res_row[i]
        a = t - t_min
        b = t + t_min
        if b < lo or a > hi:
            continue
        starts[k] = a if a > lo else lo
        ends[k] = b if b < hi else hi
        k += 1
    order = np.argsort(starts[:k])
    # walk the eligible complement twice: once for its measure, once to place u
    total = 0.0
    cur = lo
    for oi in range(k):
        i = order[oi]
        a = starts[i]
        b = ends[i]
        if a > cur:
            total += a - cur
        if b > cur:
            cur = b
    if cur < hi:
        total += hi - cur
    if total <= eps:
        return -1.0
    x = u * total
    cur = lo
    last_end = lo
    for oi in range(k):
        i = order[oi]
        a = starts[i]
        b = ends[i]
        if a > cur:
            span = a - cur
            if x < span:
                return cur + x
            x -= span
            last_end = a
        if b > cur:
            cur = b
    if cur < hi:
        span = hi - cur
        if x < span:
            return cur + x
        last_end = hi
    return last_end  # guard against float round-off on the last segment


@njit(cache=True)
def fast_end_tx(
    sender, tid, kind, msg, pkt_hop, t_ann, created, now,
    params, nbr_flat, nbr_off, istate, fstate, bstate, rx_sole,
    last_heard, seen, res_t, hop_val, hop_exp,
    out_r, out_code,
):
    """Frame end: resolve receptions and absorb the common bookkeeping.

    Returns (emitted follow-up count, receptions destroyed by overlap,
    gate/TTL drops).  Packet kinds: 0 beacon, 1 control, 2 data.
    """
    proto = int(params[P_PROTO])
    t_min = params[P_T_MIN]
    ttl = params[P_TTL]
    tr_period = params[P_TR_PERIOD]
    hop_timer = params[P_HOP_TIMER]
    hop_cap = int(params[P_HOP_CAP])
    n_out = 0
    destroyed = 0
    gate_drops = 0
    for idx in range(nbr_off[sender], nbr_off[sender + 1]):
        r = nbr_flat[idx]
        c = istate[I_RX_COUNT, r] - 1
        istate[I_RX_COUNT, r] = c
        if not (c == 0 and rx_sole[r] == tid and bstate[B_RX_OK, r] == 1):
            if bstate[B_ALIVE, r] == 1:
                destroyed += 1
            continue
        if bstate[B_ALIVE, r] == 0:
            continue
        if now - fstate[F_TR_PS, r] >= tr_period:
            # adaptation boundary: hand the whole reception to Python
            out_r[n_out] = r
            out_code[n_out] = FU_FULL
            n_out += 1
            continue
        istate[I_TR_CNT, r] += 1
        if last_heard[r, sender] < -1e200:
            istate[I_DENS_CNT, r] += 1
        last_heard[r, sender] = now

        if kind == 2:  # data
            if r == 0:
                if not seen[0, msg]:
                    out_r[n_out] = r
                    out_code[n_out] = FU_SINK
                    n_out += 1
                continue
            if proto == 2:
                mine = hop_current(hop_val, hop_exp, istate, r, now)
                if pkt_hop >= mine:
                    hop_enlist(hop_val, hop_exp, istate, r, pkt_hop + 1, now, hop_timer, hop_cap)
                if bstate[B_PEND, r] == 1 and hop_current(hop_val, hop_exp, istate, r, now) >= 0:
                    out_r[n_out] = r
                    out_code[n_out] = FU_FLUSH
                    n_out += 1
                if seen[r, msg]:
                    continue
                seen[r, msg] = True
                if now - created > ttl:
                    gate_drops += 1
                    continue
                if mine < 0 or pkt_hop < mine:
                    gate_drops += 1  # hop gate: moving away from the sink
                    continue
            else:
                if seen[r, msg]:
                    continue
                seen[r, msg] = True
                if now - created > ttl:
                    gate_drops += 1
                    continue
            out_r[n_out] = r
            out_code[n_out] = FU_NEW_DATA
            n_out += 1
        elif kind == 1:  # control
            if proto >= 1 and r != 0:
                i = istate[I_RES_POS, r]
                res_t[r, i] = t_ann
                istate[I_RES_POS, r] = (i + 1) % RES_CAP
                if istate[I_RES_CNT, r] < RES_CAP:
                    istate[I_RES_CNT, r] += 1
                if bstate[B_ACT, r] == 1 and abs(fstate[F_T2A, r] - t_ann) < t_min:
                    out_r[n_out] = r
                    out_code[n_out] = FU_CONFLICT
                    n_out += 1
        else:  # beacon
            if proto == 2 and r != 0:
                mine = hop_current(hop_val, hop_exp, istate, r, now)
                new = pkt_hop + 1
                if mine < 0 or new < mine:
                    hop_enlist(hop_val, hop_exp, istate, r, new, now, hop_timer, hop_cap)
                    out_r[n_out] = r
                    out_code[n_out] = FU_BEACON_IMP
                    n_out += 1
    return n_out, destroyed, gate_drops


def flatten_neighbors(nbr_lists):
    """Pack per-node neighbour lists into (flat, offsets) int32 arrays."""
    off = np.zeros(len(nbr_lists) + 1, dtype=np.int32)
    for i, lst in enumerate(nbr_lists):
        off[i + 1] = off[i] + len(lst)
    flat = np.empty(off[-1], dtype=np.int32)
    for i, lst in enumerate(nbr_lists):
        flat[off[i]:off[i + 1]] = lst
    return flat, off
