"""Pure numpy implementations of the hot kernels.

Every function here has a twin with the same name and signature in the
compiled ``_ckernels`` extension.  Both accumulate bin mass in ascending
value order, so binned signals agree bit-for-bit between backends.
"""

import numpy as np


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(logits):
    logits = np.asarray(logits, dtype=np.float64)
    e = np.exp(logits - logits.max())
    return e / e.sum()


def match_matrix(Q, A, qids, aids):
    """Cosine matrix of unit vectors with exact token matches forced to 1.0."""
    # Product-then-reduce along the contiguous last axis gives every entry the
    # same summation order, independent of its row/column position.
    P = (Q[:, None, :] * A[None, :, :]).sum(axis=-1)
    np.clip(P, -1.0, 1.0, out=P)
    P[qids[:, None] == aids[None, :]] = 1.0
    return P


def bin_rows(P, bin_count, lo):
    P = np.asarray(P, dtype=np.float64)
    m = P.shape[0]
    B = int(bin_count)
    vals = np.sort(P, axis=1)
    regular = B - 1
    idx = np.floor((vals - lo) * regular / (1.0 - lo)).astype(np.int64)
    np.clip(idx, 0, regular - 1, out=idx)
    idx[vals == 1.0] = regular
    keep = vals >= lo
    rows = np.broadcast_to(np.arange(m)[:, None], vals.shape)
    flat = (rows * B + idx)[keep]
    X = np.bincount(flat, weights=vals[keep], minlength=m * B)
    return X.reshape(m, B)


def anmm1_forward(X, g, w):
    return float(np.dot(g, sigmoid(X @ w)))


def anmm2_forward(X, g, W, r):
    S = sigmoid(X @ W)
    return float(np.dot(g, sigmoid(S @ r)))


def anmm1_triple(Xp, Xn, Q, w, v, dw, dv):
    """Hinge loss of one triple; adds its gradient into ``dw``/``dv`` when active."""
    g = softmax(Q @ v)
    up = Xp @ w
    un = Xn @ w
    hp = sigmoid(up)
    hn = sigmoid(un)
    loss = 1.0 - float(np.dot(g, hp)) + float(np.dot(g, hn))
    if loss <= 0.0:
        return 0.0
    diff = hn - hp
    # d g_j / d v = g_j (q_j - sum_l g_l q_l)
    qbar = g @ Q
    dv += ((g * diff)[:, None] * (Q - qbar)).sum(axis=0)
    dw += (g * hn * (1.0 - hn)) @ Xn - (g * hp * (1.0 - hp)) @ Xp
    return loss


def anmm2_triple(Xp, Xn, Q, W, r, v, dW, dr, dv):
    g = softmax(Q @ v)
    Sp = sigmoid(Xp @ W)
    Sn = sigmoid(Xn @ W)
    hp = sigmoid(Sp @ r)
    hn = sigmoid(Sn @ r)
    loss = 1.0 - float(np.dot(g, hp)) + float(np.dot(g, hn))
    if loss <= 0.0:
        return 0.0
    diff = hn - hp
    qbar = g @ Q
    dv += ((g * diff)[:, None] * (Q - qbar)).sum(axis=0)
    cp = g * hp * (1.0 - hp)
    cn = g * hn * (1.0 - hn)
    dr += cn @ Sn - cp @ Sp
    Gp = cp[:, None] * r[None, :] * Sp * (1.0 - Sp)
    Gn = cn[:, None] * r[None, :] * Sn * (1.0 - Sn)
    dW += Xn.T @ Gn - Xp.T @ Gp
    return loss
