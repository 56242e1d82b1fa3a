"""Compiled batch kernels for the nodal closed-form sums.

Each velocity/Hilbert evaluation of a piecewise-linear field reduces to a
sum over "active nodes" (markers with a nonzero slope jump) of a twice- or
once-integrated kernel.  These loops dominate the runtime, so they are JIT
compiled.  The outer loop over evaluation points is parallel; each output
entry is produced by a single sequential, fixed-order inner sum, so results
are bit-identical for any thread count.

``mirror_sign`` folds in the reflected nodes of an odd field:
  0.0  -> plain sum over the given nodes,
 -1.0  -> odd field, even integrated kernel (log, power, layer moments),
 +1.0  -> odd field, odd integrated kernel (Hilbert).
"""

import numpy as np
from numba import njit, prange

__all__ = [
    "log_moment_sum",
    "power_moment_sum",
    "hilbert_sum",
    "layer_moment_sum",
]


@njit(parallel=True, cache=True, fastmath=False)
def log_moment_sum(xs, nodes, jumps, mirror_sign, out):
    """out[i] = sum_k J_k * (G(n_k - x_i) + mirror_sign * G(n_k + x_i))

    with G(t) = t^2 (log|t|/2 - 3/4), the second antiderivative of log|t|.
    The caller gets the log-kernel velocity directly.
    """
    for i in prange(xs.shape[0]):
        x = xs[i]
        acc = 0.0
        for k in range(nodes.shape[0]):
            t = nodes[k] - x
            g = 0.0
            if t != 0.0:
                g = t * t * (0.5 * np.log(np.abs(t)) - 0.75)
            if mirror_sign != 0.0:
                t = nodes[k] + x
                if t != 0.0:
                    g += mirror_sign * (t * t * (0.5 * np.log(np.abs(t)) - 0.75))
            acc += jumps[k] * g
        out[i] = acc


@njit(parallel=True, cache=True, fastmath=False)
def power_moment_sum(xs, nodes, jumps, expo, mirror_sign, out):
    """out[i] = sum_k J_k * (|n_k - x_i|^expo + mirror_sign * |n_k + x_i|^expo)

    |t|^expo is the second antiderivative of |t|^(-gamma) up to the constant
    1/((1-gamma)(2-gamma)), which the caller applies; expo = 2 - gamma.
    The half-integer exponent of the default patch scenario gets a sqrt
    fast path.
    """
    half = expo == 1.5
    for i in prange(xs.shape[0]):
        x = xs[i]
        acc = 0.0
        for k in range(nodes.shape[0]):
            t = np.abs(nodes[k] - x)
            if half:
                g = t * np.sqrt(t)
            else:
                g = t**expo
            if mirror_sign != 0.0:
                t = np.abs(nodes[k] + x)
                if half:
                    g += mirror_sign * (t * np.sqrt(t))
                else:
                    g += mirror_sign * t**expo
            acc += jumps[k] * g
        out[i] = acc


@njit(parallel=True, cache=True, fastmath=False)
def hilbert_sum(xs, nodes, jumps, mirror_sign, out):
    """out[i] = -sum_k J_k * (G(n_k - x_i) + mirror_sign * G(n_k + x_i))

    with G(t) = t (log|t| - 1), the antiderivative of log|t|.  This is the
    principal-value convolution with 1/(x-y); for odd fields pass
    mirror_sign = +1 (G is odd, the reflected jump flips sign twice).
    """
    for i in prange(xs.shape[0]):
        x = xs[i]
        acc = 0.0
        for k in range(nodes.shape[0]):
            t = nodes[k] - x
            g = 0.0
            if t != 0.0:
                g = t * (np.log(np.abs(t)) - 1.0)
            if mirror_sign != 0.0:
                t = nodes[k] + x
                if t != 0.0:
                    g += mirror_sign * (t * (np.log(np.abs(t)) - 1.0))
            acc += jumps[k] * g
        out[i] = -acc


@njit(parallel=True, cache=True, fastmath=False)
def layer_moment_sum(xs, nodes, jumps, a, mirror_sign, out):
    """Boundary-layer velocity: kernel -2 log(((y-x)^2 + a^2)/(y-x)^2).

    Uses F(t) = -2 B(t) + 4 G(t) where B is the second antiderivative of
    log(t^2 + a^2) and G the second antiderivative of log|t|:
        B(t) = ((t^2 - a^2)/2) log(t^2 + a^2) - (3/2) t^2 + 2 a t atan(t/a).
    """
    a2 = a * a
    for i in prange(xs.shape[0]):
        x = xs[i]
        acc = 0.0
        for k in range(nodes.shape[0]):
            t = nodes[k] - x
            b = 0.5 * (t * t - a2) * np.log(t * t + a2) - 1.5 * t * t \
                + 2.0 * a * t * np.arctan(t / a)
            g = -2.0 * b
            if t != 0.0:
                g += 4.0 * (t * t * (0.5 * np.log(np.abs(t)) - 0.75))
            if mirror_sign != 0.0:
                t = nodes[k] + x
                b = 0.5 * (t * t - a2) * np.log(t * t + a2) - 1.5 * t * t \
                    + 2.0 * a * t * np.arctan(t / a)
                gm = -2.0 * b
                if t != 0.0:
                    gm += 4.0 * (t * t * (0.5 * np.log(np.abs(t)) - 0.75))
                g += mirror_sign * gm
            acc += jumps[k] * g
        out[i] = acc
