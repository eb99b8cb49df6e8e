"""Compiled inner loops for the two simulation protocols.

Both kernels consume a block of precomputed increments ``dW`` (one row per
step) and use the same arithmetic as :func:`spikecopula.engine.euler_step`.
Epochs are ``step * dt`` with an integer step counter, so no time drift
accumulates over long runs.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def fpt_block(x, alive, times, dW, mu, tau, sigma, theta, h, dt, step0, stagger):
    """Advance one first-passage trial through a block of steps.

    Fired neurons are frozen: no further dynamics, no outgoing jumps.
    Returns the number of neurons still alive at the end of the block (the
    block is abandoned as soon as this reaches zero).
    """
    n_steps, n = dW.shape
    fired = np.zeros(n, dtype=np.bool_)
    n_alive = 0
    for i in range(n):
        if alive[i]:
            n_alive += 1
    for k in range(n_steps):
        for i in range(n):
            if alive[i]:
                x[i] = x[i] + (-x[i] / tau[i] + mu[i]) * dt + sigma[i] * dW[k, i]
        t = (step0 + k + 1) * dt
        gen = 0
        while True:
            any_fired = False
            for i in range(n):
                fired[i] = alive[i] and x[i] >= theta[i]
                if fired[i]:
                    any_fired = True
            if not any_fired:
                break
            for i in range(n):
                if fired[i]:
                    times[i] = t + gen * dt * stagger
                    alive[i] = False
                    n_alive -= 1
            for i in range(n):
                if fired[i]:
                    for j in range(n):
                        if alive[j]:
                            x[j] += h[i, j]
            gen += 1
        if n_alive == 0:
            return 0
    return n_alive


@njit(cache=True)
def spike_block(x, dW, mu, tau, sigma, theta, reset, h, dt, step0, stagger, out_idx, out_t):
    """Free-running network over a block of steps.

    On crossing, a neuron's epoch is written to ``out_idx``/``out_t``, it
    resets, and every other neuron receives ``h[firing, j]``. Jumps may
    trigger further crossings within the same step; each neuron fires at
    most once per step. Returns the number of spikes written.
    """
    n_steps, n = dW.shape
    fired = np.zeros(n, dtype=np.bool_)
    done = np.zeros(n, dtype=np.bool_)
    count = 0
    for k in range(n_steps):
        for i in range(n):
            x[i] = x[i] + (-x[i] / tau[i] + mu[i]) * dt + sigma[i] * dW[k, i]
            done[i] = False
        t = (step0 + k + 1) * dt
        gen = 0
        while True:
            any_fired = False
            for i in range(n):
                fired[i] = (not done[i]) and x[i] >= theta[i]
                if fired[i]:
                    any_fired = True
            if not any_fired:
                break
            for i in range(n):
                if fired[i]:
                    out_idx[count] = i
                    out_t[count] = t + gen * dt * stagger
                    count += 1
                    x[i] = reset[i]
                    done[i] = True
            for i in range(n):
                if fired[i]:
                    for j in range(n):
                        if j != i:
                            x[j] += h[i, j]
            gen += 1
    return count
