"""
Correlated Wiener increments and Euler-Maruyama stepping of the OU membrane model.

Each neuron obeys

    dX_i = (-X_i / tau_i + mu_i) dt + sigma_i dW_i

where the standard Wiener processes W_i are correlated with
E[dW_i dW_j] = c_ij dt. The correlation matrix ``c`` is realized through
its Cholesky factor ``L`` so that ``dW = sqrt(dt) * L @ z`` with ``z``
i.i.d. standard normal.

Random streams are counter-based (Philox) and keyed by
``(master_seed, stream_index)``, so a trial's noise never depends on
which worker ran it or in what order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PSD_TOL = 1e-10


class NotPositiveSemiDefinite(ValueError):
    """Raised when a correlation matrix has a Cholesky pivot below -PSD_TOL."""


def check_correlation_matrix(c) -> list[str]:
    """Return a list of violated correlation-matrix invariants (empty if valid)."""
    c = np.asarray(c, dtype=float)
    problems = []
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        return [f"correlation matrix must be square, got shape {c.shape}"]
    if not np.all(np.isfinite(c)):
        return ["correlation matrix has non-finite entries"]
    if not np.array_equal(c, c.T):
        problems.append("correlation matrix is not symmetric")
    if not np.all(np.diag(c) == 1.0):
        problems.append("correlation matrix diagonal must be 1")
    if np.any(np.abs(c) > 1.0):
        problems.append("correlation entries must lie in [-1, 1]")
    if not problems:
        try:
            cholesky(c)
        except NotPositiveSemiDefinite as exc:
            problems.append(str(exc))
    return problems


def cholesky(c) -> np.ndarray:
    """
    Lower-triangular factor ``L`` with ``L @ L.T == c``.

    Zero pivots are tolerated (perfectly correlated pairs, ``c_ij = +-1``),
    which ``numpy.linalg.cholesky`` rejects, hence the explicit
    Cholesky-Banachiewicz loop.

    Parameters
    ----------
    c : array_like, shape (N, N)
        Symmetric correlation matrix.

    Returns
    -------
    L : ndarray, shape (N, N)

    Raises
    ------
    NotPositiveSemiDefinite
        If a pivot falls below ``-PSD_TOL``.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    L = np.zeros_like(c)
    for i in range(n):
        for j in range(i + 1):
            s = c[i, j] - L[i, :j] @ L[j, :j]
            if i == j:
                if s < -PSD_TOL:
                    raise NotPositiveSemiDefinite(
                        f"correlation matrix is not positive semi-definite "
                        f"(pivot {i} = {s:.3g})"
                    )
                L[i, i] = np.sqrt(max(s, 0.0))
            elif L[j, j] > 0.0:
                L[i, j] = s / L[j, j]
            elif abs(s) > PSD_TOL:
                # zero pivot with a nonzero remainder cannot be completed
                raise NotPositiveSemiDefinite(
                    f"correlation matrix is not positive semi-definite "
                    f"(zero pivot {j} with residual {s:.3g} in row {i})"
                )
    return L


@dataclass
class RngStream:
    """
    Independent Philox stream identified by ``(master_seed, stream_index)``.

    The generator is created lazily and then advanced by successive draws,
    so repeated calls continue the same sequence.
    """

    master_seed: int
    stream_index: int = 0
    _gen: np.random.Generator | None = field(default=None, init=False, repr=False)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen

    def standard_normal(self, size) -> np.ndarray:
        return self.generator.standard_normal(size)


def correlated_increments(L, dt: float, rng: RngStream, size: int | None = None) -> np.ndarray:
    """
    Draw correlated Wiener increments ``sqrt(dt) * L @ z``.

    With ``size=None`` a single vector of shape ``(N,)`` is returned,
    otherwise a block of shape ``(size, N)``, one row per time step. A
    block of ``k`` rows consumes the stream exactly like ``k`` single draws.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    rows = 1 if size is None else int(size)
    z = rng.standard_normal((rows, n))
    dw = np.sqrt(dt) * (z @ L.T)
    return dw[0] if size is None else dw


def euler_step(x, mu, tau, sigma, dW, dt: float) -> np.ndarray:
    """One Euler-Maruyama step of the OU dynamics for every neuron."""
    x = np.asarray(x, dtype=float)
    return x + (-x / np.asarray(tau) + np.asarray(mu)) * dt + np.asarray(sigma) * np.asarray(dW)


def ou_mean(t, mu: float, tau: float, x0: float = 0.0):
    """Noise-free OU trajectory ``mu*tau + (x0 - mu*tau) * exp(-t/tau)``."""
    return mu * tau + (x0 - mu * tau) * np.exp(-np.asarray(t, dtype=float) / tau)
