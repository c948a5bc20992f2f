"""Pure-numpy implementations of the hot kernels.

These mirror ``_core.pyx`` one-for-one and are used when the compiled
extension is unavailable or ``QDC_PURE=1`` is set.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def anneal_probabilities(distances, t_anneal, steps):
    """Final basis probabilities after a linear-schedule adiabatic sweep.

    ``distances`` has shape (B, K); every row is annealed independently from
    the uniform superposition under
    ``H(s) = (1 - s)(I - |phi><phi|) + s diag(d)``.
    Each step applies the midpoint Strang splitting
    ``exp(-i s dt D/2) exp(-i (1-s) dt H0) exp(-i s dt D/2)``, both factors
    exponentiated in closed form.
    """
    d = np.ascontiguousarray(distances, dtype=np.float64)
    if d.ndim != 2:
        raise ValueError("distances must be 2-D (batch, K)")
    n_batch, k = d.shape
    psi = np.full((n_batch, k), 1.0 / np.sqrt(k), dtype=np.complex128)
    dt = float(t_anneal) / steps
    for step in range(steps):
        s = (step + 0.5) / steps
        half = np.exp(-0.5j * s * dt * d)
        psi *= half
        phase = np.exp(-1j * (1.0 - s) * dt)
        mean = psi.mean(axis=1, keepdims=True)
        psi = phase * psi + (1.0 - phase) * mean
        psi *= half
    return psi.real ** 2 + psi.imag ** 2


def _pad(x, kh, kw):
    ph, pw = kh // 2, kw // 2
    return np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))


def conv2d_forward(x, w):
    """'Same'-padded, stride-1 cross-correlation.

    x: (B, C, H, W), w: (O, C, kh, kw) with odd kh, kw -> (B, O, H, W).
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    kh, kw = w.shape[2], w.shape[3]
    windows = sliding_window_view(_pad(x, kh, kw), (kh, kw), axis=(2, 3))
    return np.einsum("bchwij,ocij->bohw", windows, w, optimize=True)


def conv2d_backward(x, w, grad_out):
    """Gradients of ``conv2d_forward`` w.r.t. its input and its weights."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    gy = np.asarray(grad_out, dtype=np.float64)
    kh, kw = w.shape[2], w.shape[3]
    h, wd = x.shape[2], x.shape[3]
    windows = sliding_window_view(_pad(x, kh, kw), (kh, kw), axis=(2, 3))
    grad_w = np.einsum("bchwij,bohw->ocij", windows, gy, optimize=True)
    grad_xp = np.zeros((x.shape[0], x.shape[1], h + kh - 1, wd + kw - 1))
    for i in range(kh):
        for j in range(kw):
            grad_xp[:, :, i:i + h, j:j + wd] += np.einsum(
                "bohw,oc->bchw", gy, w[:, :, i, j], optimize=True
            )
    ph, pw = kh // 2, kw // 2
    grad_x = grad_xp[:, :, ph:ph + h, pw:pw + wd]
    return np.ascontiguousarray(grad_x), grad_w
