"""Compiled inner loop of the chip emulator.

One call advances the chip by ``n_steps`` global steps. Arrays are
mutated in place; the function returns the output spikes and the number
of synaptic operations performed.
"""

from __future__ import annotations

from numba import njit

TINY = 1e-30


@njit(cache=True, fastmath=True, error_model="numpy")
def _drift(x, t_last, t, alpha):
    span = t - t_last
    if span <= 0.0 or alpha == 0.0:
        return x
    if x >= 0.5:
        x += alpha * span
        return 1.0 if x > 1.0 else x
    x -= alpha * span
    return 0.0 if x < 0.0 else x


@njit(cache=True, fastmath=True, error_model="numpy")
def _deliver(i, c, t, n_plastic, levels, x, enabled, x_last, wfac,
             i_exc, i_inh, i_pl, i_mem, ca, j_exc, j_inh, j_pl, pl):
    if c < n_plastic:
        if enabled[i, c]:
            xv = _drift(x[i, c], x_last[i, c], t, pl[2])
            w = pl[10] if xv >= 0.5 else pl[9]
            if w != 0.0:
                i_pl[i] += w * wfac[i, c] * j_pl[i]
            cai = ca[i]
            if i_mem[i] >= pl[8] and pl[3] <= cai <= pl[4]:
                xv += pl[0]
            elif pl[5] <= cai <= pl[6]:
                xv -= pl[1]
            if xv > 1.0:
                xv = 1.0
            elif xv < 0.0:
                xv = 0.0
            x[i, c] = xv
            x_last[i, c] = t
        else:
            w = pl[10] if x[i, c] >= 0.5 else pl[9]
            if w != 0.0:
                i_pl[i] += w * wfac[i, c] * j_pl[i]
    else:
        lv = levels[i, c - n_plastic]
        if lv > 0:
            i_exc[i] += lv * wfac[i, c] * j_exc[i]
        elif lv < 0:
            i_inh[i] -= lv * wfac[i, c] * j_inh[i]


@njit(cache=True, fastmath=True, error_model="numpy")
def run_steps(
    t0_us, dt_us, n_steps,
    ev_step, ev_addr, ev_start,
    in_ptr, in_nrn, in_col, out_ptr, out_nrn, out_col,
    levels, n_plastic, x, enabled, x_last, wfac,
    i_exc, i_inh, i_pl, i_mem, ref_left, ca, bias, pending,
    d_exc, d_inh, d_pl, d_mem, g_mem, thr, j_exc, j_inh, j_pl,
    reset, ref_steps, d_ca, ca_jump, pl,
    sp_t, sp_n,
):
    """Run at most ``n_steps`` steps; stop early when the spike buffer may overflow.

    Returns ``(steps_done, n_spikes, sops, next_event_index)``.
    """
    n = i_mem.shape[0]
    cap = sp_t.shape[0]
    n_sp = 0
    sops = 0
    ev = ev_start
    n_ev = ev_step.shape[0]
    k = 0
    while k < n_steps and n_sp + n <= cap:
        t_us = t0_us + k * dt_us
        t = t_us * 1e-6
        # recurrent spikes of the previous step
        for j in range(n):
            if pending[j]:
                pending[j] = False
                for p in range(out_ptr[j], out_ptr[j + 1]):
                    _deliver(out_nrn[p], out_col[p], t, n_plastic, levels, x, enabled, x_last, wfac,
                             i_exc, i_inh, i_pl, i_mem, ca, j_exc, j_inh, j_pl, pl)
                sops += out_ptr[j + 1] - out_ptr[j]
        while ev < n_ev and ev_step[ev] == k:
            a = ev_addr[ev]
            for p in range(in_ptr[a], in_ptr[a + 1]):
                _deliver(in_nrn[p], in_col[p], t, n_plastic, levels, x, enabled, x_last, wfac,
                         i_exc, i_inh, i_pl, i_mem, ca, j_exc, j_inh, j_pl, pl)
            sops += in_ptr[a + 1] - in_ptr[a]
            ev += 1
        for i in range(n):
            ca[i] *= d_ca
            drive = i_exc[i] + i_pl[i] + bias[i] - i_inh[i]
            if drive < 0.0:
                drive = 0.0
            if ref_left[i] > 0:
                ref_left[i] -= 1
                i_mem[i] = reset
            else:
                iss = g_mem[i] * drive
                v = iss + (i_mem[i] - iss) * d_mem[i]
                if v >= thr[i]:
                    pending[i] = True
                    v = reset
                    ref_left[i] = ref_steps
                    ca[i] += ca_jump
                i_mem[i] = v
            # flush tiny currents so decaying state never goes subnormal
            i_exc[i] = i_exc[i] * d_exc[i] if i_exc[i] > TINY else 0.0
            i_inh[i] = i_inh[i] * d_inh[i] if i_inh[i] > TINY else 0.0
            i_pl[i] = i_pl[i] * d_pl[i] if i_pl[i] > TINY else 0.0
            if i_mem[i] < TINY:
                i_mem[i] = 0.0
            if ca[i] < TINY:
                ca[i] = 0.0
        for i in range(n):
            if pending[i]:
                sp_t[n_sp] = t_us
                sp_n[n_sp] = i
                n_sp += 1
        k += 1
    return k, n_sp, sops, ev


@njit(cache=True, fastmath=True, error_model="numpy")
def deliver_input(a, t, in_ptr, in_nrn, in_col, levels, n_plastic, x, enabled, x_last, wfac,
                  i_exc, i_inh, i_pl, i_mem, ca, j_exc, j_inh, j_pl, pl):
    for p in range(in_ptr[a], in_ptr[a + 1]):
        _deliver(in_nrn[p], in_col[p], t, n_plastic, levels, x, enabled, x_last, wfac,
                 i_exc, i_inh, i_pl, i_mem, ca, j_exc, j_inh, j_pl, pl)
    return in_ptr[a + 1] - in_ptr[a]
