"""1-D convolution primitives in channels-last layout.

Activations are (batch, length, channels); weights are (out_ch, in_ch, k) for
convolutions and (in_ch, out_ch, k) for transposed convolutions. Forward,
input-gradient, and weight-gradient products are all expressed as one matrix
product over im2col patches, so the heavy lifting stays in BLAS. Transposed
convolution is the exact adjoint of convolution, reusing the same three
primitives with roles swapped.

Patch gather indices depend only on (length, kernel, stride, pad) and are
cached per plan.
"""

import numpy as np

_PLANS = {}


def _plan(length, kernel, stride, pad):
    key = (length, kernel, stride, pad)
    plan = _PLANS.get(key)
    if plan is None:
        out_len = (length + 2 * pad - kernel) // stride + 1
        if out_len < 1:
            raise ValueError(
                f"conv plan degenerate: length {length}, kernel {kernel}, "
                f"stride {stride}, pad {pad}"
            )
        idx = (np.arange(out_len) * stride)[:, None] + np.arange(kernel)[None, :]
        plan = (out_len, idx)
        _PLANS[key] = plan
    return plan


def conv_out_len(length, kernel, stride, pad):
    return _plan(length, kernel, stride, pad)[0]


def _pad(x, pad):
    if pad == 0:
        return x
    b, length, ch = x.shape
    xp = np.zeros((b, length + 2 * pad, ch), dtype=x.dtype)
    xp[:, pad : pad + length, :] = x
    return xp


def im2col(x, kernel, stride, pad):
    """Patches of x as a (batch*out_len, kernel*in_ch) matrix."""
    b, length, ch = x.shape
    out_len, idx = _plan(length, kernel, stride, pad)
    patches = _pad(x, pad)[:, idx, :]
    return patches.reshape(b * out_len, kernel * ch), out_len


def conv1d_fwd(x, w, stride, pad):
    """x (B, L, Ci) * w (Co, Ci, K) -> (B, Lo, Co); also returns the patches."""
    b = x.shape[0]
    co, ci, k = w.shape
    cols, out_len = im2col(x, k, stride, pad)
    w2 = w.transpose(2, 1, 0).reshape(k * ci, co)
    out = cols @ w2
    return out.reshape(b, out_len, co), cols


def conv1d_bwd_weight(cols, gy):
    """Weight gradient from cached patches and gy (B, Lo, Co) -> (Co, Ci*K ordered as w2)."""
    co = gy.shape[2]
    g2 = gy.reshape(-1, co)
    return cols.T @ g2  # (K*Ci, Co)


def unpack_weight_grad(dw2, co, ci, k):
    """Reorder a (K*Ci, Co) gradient into the logical (Co, Ci, K) layout."""
    return np.ascontiguousarray(dw2.reshape(k, ci, co).transpose(2, 1, 0))


def conv1d_bwd_input(gy, w, stride, pad, length):
    """Input gradient: gy (B, Lo, Co) * w (Co, Ci, K) -> (B, length, Ci)."""
    b, out_len, co = gy.shape
    _, ci, k = w.shape
    w2 = w.transpose(2, 1, 0).reshape(k * ci, co)
    dcols = gy.reshape(b * out_len, co) @ w2.T
    dpatch = dcols.reshape(b, out_len, k, ci)
    dxp = np.zeros((b, length + 2 * pad, ci), dtype=gy.dtype)
    span = stride * out_len
    for tap in range(k):
        dxp[:, tap : tap + span : stride, :] += dpatch[:, :, tap, :]
    if pad == 0:
        return dxp
    return dxp[:, pad : pad + length, :]


def convt1d_fwd(x, w, stride, pad, out_len):
    """Transposed conv: x (B, Li, Cin) * w (Cin, Cout, K) -> (B, out_len, Cout).

    Valid whenever a forward conv over out_len reproduces Li, i.e.
    out_len in {stride*(Li-1) - 2*pad + K + op : op in [0, stride)}.
    """
    expect = conv_out_len(out_len, w.shape[2], stride, pad)
    if expect != x.shape[1]:
        raise ValueError(
            f"transposed conv inconsistent: input length {x.shape[1]}, "
            f"out_len {out_len} maps back to {expect}"
        )
    return conv1d_bwd_input(x, w, stride, pad, out_len)


def convt1d_bwd_input(gy, w, stride, pad):
    """gy (B, out_len, Cout) -> gradient w.r.t. the (B, Li, Cin) input."""
    out, cols = conv1d_fwd(gy, w, stride, pad)
    return out, cols


def convt1d_bwd_weight(gy_cols, x):
    """Weight gradient of a transposed conv.

    gy_cols are the im2col patches of the output cotangent (as produced by
    convt1d_bwd_input); x is the layer input (B, Li, Cin). Returns the
    gradient in the w2 ordering (K*Cout, Cin).
    """
    cin = x.shape[2]
    return gy_cols.T @ x.reshape(-1, cin)
