"""Pure numpy versions of the Crank-Nicolson recurrences.

Each step uses ``Pinv = (I + i dt/2 H)^-1``; the step propagator is then
``A = Pinv (I - i dt/2 H) = 2 Pinv - I``. Step ``k`` uses ``pinv[k % M]``.
"""

import numpy as np


def cn_forward(pinv, pinv_src, coef, n_steps):
    """psi_{k+1} = 2 Pinv_j psi_k - psi_k + coef_k Pinv_j l,  psi_0 = 0."""
    m, d, _ = pinv.shape
    psi = np.zeros((n_steps + 1, d), dtype=complex)
    cur = psi[0]
    for k in range(n_steps):
        j = k % m
        nxt = 2.0 * (pinv[j] @ cur) - cur + coef[k] * pinv_src[j]
        psi[k + 1] = nxt
        cur = nxt
    return psi


def cn_adjoint(pinv, psi, g, dt):
    """Backward sweep of the discrete adjoint.

    Returns the derivative of the objective with respect to the drive value at
    each lattice phase, summed over all steps sharing that phase.
    """
    m, d, _ = pinv.shape
    n = d // 2
    n_steps = psi.shape[0] - 1
    grad = np.zeros(m)
    mu = g[n_steps].copy()
    for k in range(n_steps - 1, -1, -1):
        j = k % m
        lam = pinv[j] @ mu
        s = psi[k] + psi[k + 1]
        # V swaps the microwave and optical blocks
        grad[j] += dt * (lam[:n] @ s[n:] + lam[n:] @ s[:n]).imag
        mu = g[k] + 2.0 * lam - mu
    return grad


def cn_chain(pinv, prod):
    """Left-multiply ``prod`` by ``A_{n-1} ... A_0`` with ``A_k = 2 pinv[k] - I``."""
    eye = np.eye(pinv.shape[1], dtype=complex)
    mats = 2.0 * pinv - eye
    # pairwise tree reduction keeps the time ordering
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            tail = mats[-1:]
            mats = mats[:-1]
        else:
            tail = None
        mats = mats[1::2] @ mats[0::2]
        if tail is not None:
            mats = np.concatenate((mats, tail))
    return mats[0] @ prod
