"""Pure-numpy row-column convolution kernels.

Fallback used when the compiled extension is unavailable. Semantics match
``qpath._kernels`` exactly; see that module's docstring for the operator
definitions.
"""

import numpy as np

BACKEND = "python"


def e2e_forward(m_sum, w, b):
    """Edge-to-edge pre-activation: out[o,i,j] = row[o,i] + col[o,j] + b[o]."""
    p = w * m_sum[None, :, :]
    row = p.sum(axis=2)
    col = p.sum(axis=1)
    return row[:, :, None] + col[:, None, :] + b[:, None, None]


def e2e_backward(m_sum, w, dpre):
    """Gradients of the e2e pre-activation; returns (dw, db, dm_sum)."""
    drow = dpre.sum(axis=2)
    dcol = dpre.sum(axis=1)
    db = drow.sum(axis=1)
    g = drow[:, :, None] + dcol[:, None, :]
    dw = g * m_sum[None, :, :]
    dm = (g * w).sum(axis=0)
    return dw, db, dm


def e2n_forward(m_sum, w, b):
    """Edge-to-node pre-activation: out[o,i] = row[o,i] + col[o,i] + b[o]."""
    p = w * m_sum[None, :, :]
    return p.sum(axis=2) + p.sum(axis=1) + b[:, None]


def e2n_backward(m_sum, w, dpre):
    """Gradients of the e2n pre-activation; returns (dw, db, dm_sum)."""
    db = dpre.sum(axis=1)
    g = dpre[:, :, None] + dpre[:, None, :]
    dw = g * m_sum[None, :, :]
    dm = (g * w).sum(axis=0)
    return dw, db, dm
