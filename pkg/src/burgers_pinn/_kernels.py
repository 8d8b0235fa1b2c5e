"""Fused activation kernels for the channel stacks used in net.py.

Arrays are laid out as (channel, point, unit): channel 0 is the value, channels
1..n_in the input Jacobian, the remaining n_sp channels the pure second
derivatives with respect to the spatial inputs. The numpy versions are the
reference; the numba versions do the same arithmetic in one pass.
"""

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional accelerator
    numba = None

TANH, SIGMOID = 0, 1


def act_forward_np(kind, z, n_in, n_sp, s, s1, s2):
    jac = z[1:1 + n_in]
    a = np.empty_like(z)
    a[0] = s
    np.multiply(s1, jac, out=a[1:1 + n_in])
    h = a[1 + n_in:]
    np.multiply(jac[:n_sp], jac[:n_sp], out=h)
    h *= s2
    h += s1 * z[1 + n_in:]
    return a


def act_backward_np(kind, z, da, n_in, n_sp, s, s1, s2):
    if kind == TANH:
        s3 = -2.0 * s1 * s1 - 2.0 * s * s2
    else:
        s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1
    jac, hess = z[1:1 + n_in], z[1 + n_in:]
    da_j, da_h = da[1:1 + n_in], da[1 + n_in:]
    dz = np.empty_like(da)
    dz[0] = da[0] * s1 + s2 * (da_j * jac).sum(axis=0) \
        + (da_h * (s3 * jac[:n_sp] ** 2 + s2 * hess)).sum(axis=0)
    np.multiply(da_j, s1, out=dz[1:1 + n_in])
    dz[1:1 + n_sp] += 2.0 * s2 * da_h * jac[:n_sp]
    np.multiply(da_h, s1, out=dz[1 + n_in:])
    return dz


if numba is not None:

    @numba.njit(cache=True)
    def _fwd(z, n_in, n_sp, s, s1, s2, a):
        m = s.size
        for k in range(m):
            a[0, k] = s[k]
        for i in range(n_in):
            for k in range(m):
                a[1 + i, k] = s1[k] * z[1 + i, k]
        for i in range(n_sp):
            for k in range(m):
                zj = z[1 + i, k]
                a[1 + n_in + i, k] = s2[k] * zj * zj + s1[k] * z[1 + n_in + i, k]

    @numba.njit(cache=True)
    def _bwd(tanh, z, da, n_in, n_sp, s, s1, s2, dz):
        m = s.size
        s3 = np.empty(m)
        for k in range(m):
            if tanh:
                s3[k] = -2.0 * s1[k] * s1[k] - 2.0 * s[k] * s2[k]
            else:
                s3[k] = s2[k] * (1.0 - 2.0 * s[k]) - 2.0 * s1[k] * s1[k]
            dz[0, k] = da[0, k] * s1[k]
        for i in range(n_in):
            for k in range(m):
                g = da[1 + i, k]
                dz[0, k] += s2[k] * g * z[1 + i, k]
                dz[1 + i, k] = g * s1[k]
        for i in range(n_sp):
            for k in range(m):
                zj = z[1 + i, k]
                dh = da[1 + n_in + i, k]
                dz[0, k] += dh * (s3[k] * zj * zj + s2[k] * z[1 + n_in + i, k])
                dz[1 + i, k] += 2.0 * s2[k] * dh * zj
                dz[1 + n_in + i, k] = dh * s1[k]

    def _flat(a):
        return a.reshape(a.shape[0], -1)

    def act_forward(kind, z, n_in, n_sp, s, s1, s2):
        a = np.empty_like(z)
        _fwd(_flat(z), n_in, n_sp, s.ravel(), s1.ravel(), s2.ravel(), _flat(a))
        return a

    def act_backward(kind, z, da, n_in, n_sp, s, s1, s2):
        dz = np.empty_like(da)
        _bwd(kind == TANH, _flat(z), _flat(np.ascontiguousarray(da)), n_in, n_sp,
             s.ravel(), s1.ravel(), s2.ravel(), _flat(dz))
        return dz

else:  # pragma: no cover
    act_forward = act_forward_np
    act_backward = act_backward_np
