"""Pure-numpy fallback for the memory-kernel time stepper.

Same algorithm as the compiled kernel: velocity-Verlet stepping with a
trapezoidal memory sum over the full velocity history (O(T^2) work).
The endpoint term of the trapezoid makes the velocity update implicit;
the implicit equation is linear and solved exactly each step.  External
forces are treated as constant over each step (left node), so a
single-bin rectangle delivers its impulse exactly.
"""

import numpy as np

BACKEND_NAME = "python"


def volterra_path(omega0_sq, gamma, h, f_over_m=None, x0=0.0, v0=0.0):
    """Integrate xdd + omega0_sq x + int_0^t gamma(t-s) xd(s) ds = F/m.

    gamma : (T,) damping kernel sampled on the step grid, gamma[j] = gamma(j h)
    f_over_m : optional (T,) force/mass samples, constant over each step

    Returns (x, v), both (T,).
    """
    gamma = np.ascontiguousarray(gamma, dtype=float)
    n = gamma.shape[0]
    x = np.empty(n)
    v = np.empty(n)
    x[0] = x0
    v[0] = v0
    if n == 1:
        return x, v

    g0 = gamma[0]
    denom = 1.0 + 0.25 * h * h * g0
    forced = f_over_m is not None
    if forced:
        f_over_m = np.ascontiguousarray(f_over_m, dtype=float)
    # a kernel that is identically zero contributes nothing to the sum
    memory = bool(np.any(gamma != 0.0))

    anf = -omega0_sq * x0  # acceleration without force; no memory at t=0
    for i in range(n - 1):
        fi = f_over_m[i] if forced else 0.0
        xi1 = x[i] + h * v[i] + 0.5 * h * h * (anf + fi)
        if memory:
            # trapezoidal memory at t_{i+1}, endpoint j=i+1 excluded
            mem = 0.5 * gamma[i + 1] * v[0]
            if i >= 1:
                mem += np.dot(gamma[i:0:-1], v[1:i + 1])
            mem *= h
        else:
            mem = 0.0
        atil = -omega0_sq * xi1 - mem
        vi1 = (v[i] + 0.5 * h * (anf + atil) + h * fi) / denom
        anf = atil - 0.5 * h * g0 * vi1
        x[i + 1] = xi1
        v[i + 1] = vi1
    return x, v
