"""Maps from a decision vector to an ``Np x nu`` control profile."""

from __future__ import annotations

import numpy as np

from .problem import OdeParams, UParamParams


def compute_R(Ifree, N: int, nu: int = 1) -> np.ndarray:
    """Interpolation matrix reconstructing a profile from free samples.

    Parameters
    ----------
    Ifree : sequence of int
        Strictly increasing 1-based sampling indices carrying free values,
        within ``[1, N]``.
    N : int
        Horizon length in sampling periods.
    nu : int
        Number of inputs.

    Returns
    -------
    numpy.ndarray, shape (N * nu, len(Ifree) * nu)
        ``R`` such that ``(R @ p).reshape(nu, N).T`` is the ``N x nu``
        profile. Samples between free indices are linearly interpolated;
        samples before the first (after the last) free index repeat the first
        (last) free value. ``p`` stacks the free values input by input.
    """
    idx = np.asarray(Ifree).ravel()
    if idx.size == 0:
        raise ValueError("Ifree must not be empty")
    if not np.all(idx == np.round(idx)):
        raise ValueError("Ifree must hold integer indices")
    idx = idx.astype(int)
    if np.any(np.diff(idx) <= 0):
        raise ValueError("Ifree must be strictly increasing")
    if idx[0] < 1 or idx[-1] > N:
        raise ValueError(f"Ifree must lie within [1, {N}]")
    if nu < 1:
        raise ValueError("nu must be >= 1")

    nf = idx.size
    R1 = np.zeros((N, nf))
    for k in range(1, N + 1):
        if k <= idx[0]:
            R1[k - 1, 0] = 1.0
        elif k >= idx[-1]:
            R1[k - 1, -1] = 1.0
        else:
            j = np.searchsorted(idx, k, side="right") - 1
            lam = (k - idx[j]) / (idx[j + 1] - idx[j])
            R1[k - 1, j] = 1.0 - lam
            R1[k - 1, j + 1] = lam
    return np.kron(np.eye(nu), R1)


def profile_from_R(p, ode: OdeParams, up: UParamParams) -> np.ndarray:
    """``reshape(R @ p, Np, nu)`` in column-major order, using ``up.R``."""
    R = np.asarray(up.R, dtype=float)
    p = np.asarray(p, dtype=float).ravel()
    Np, nu = int(up.Np), int(up.nu)
    if R.shape != (Np * nu, p.size):
        raise ValueError(
            f"R has shape {R.shape}; expected ({Np * nu}, {p.size}) for Np={Np}, nu={nu}"
        )
    return (R @ p).reshape(nu, Np).T


def treatment_rest_profile(p, ode: OdeParams, up: UParamParams) -> np.ndarray:
    """Cyclic treatment/rest placement of ``N1`` free control columns.

    The horizon ``Np = N1 + N2`` covers one treatment window of ``N1`` samples
    and one rest window of ``N2`` samples. ``up.index`` (1-based, in
    ``[1, Np]``) is the current position in the cycle; the treatment window
    is placed relative to it, wrapping around the horizon end, and every
    sample outside it is exactly zero. ``p`` holds ``nu * N1`` values stacked
    sample by sample.
    """
    N1, N = int(up.N1), int(up.Np)
    nu = int(up.nu)
    i = int(up.index)
    if not 1 <= i <= N:
        raise ValueError(f"index must lie within [1, {N}], got {i}")
    P = np.asarray(p, dtype=float).reshape(N1, nu).T
    U = np.zeros((nu, N))
    if i == 1:
        U[:, :N1] = P
    elif i <= N1:
        U[:, : N1 - i + 1] = P[:, : N1 - i + 1]
        U[:, N - i + 1 :] = P[:, N1 - i + 1 :]
    else:
        U[:, N - i + 1 : N - i + 1 + N1] = P
    return U.T
