"""Central finite differences used as independent derivative oracles.

Function values are computed in ``np.longdouble``: with the Hessian step of
``1e-4`` the double-precision roundoff floor ``eps * |f| / h**2`` is about
``1e-7`` for order-one potentials, which is the size of the effects checked.
Callables must therefore accept (and keep) long-double input.
"""
import numpy as np

GRAD_STEP = 1e-5
HESS_STEP = 1e-4

_LD = np.longdouble


def _step(x, rel):
    return _LD(rel) * _LD(max(1.0, float(np.linalg.norm(np.asarray(x, dtype=float)))))


def fd_gradient(f, x, rel_step=GRAD_STEP):
    """Central-difference gradient of a scalar function at one point."""
    x = np.asarray(x, dtype=_LD)
    h = _step(x, rel_step)
    eye = np.eye(x.size, dtype=_LD) * h
    plus = np.asarray(f(x + eye), dtype=_LD)
    minus = np.asarray(f(x - eye), dtype=_LD)
    return ((plus - minus) / (2 * h)).astype(float)


def fd_hessian(f, x, rel_step=HESS_STEP):
    """Central-difference Hessian of a scalar function at one point.

    ``f`` must accept a stack of points of shape ``(m, n)``.
    """
    x = np.asarray(x, dtype=_LD)
    n = x.size
    h = _step(x, rel_step)
    e = np.eye(n, dtype=_LD) * h
    pts = [x]
    for i in range(n):
        pts += [x + e[i], x - e[i]]
    for i in range(n):
        for j in range(i + 1, n):
            pts += [x + e[i] + e[j], x + e[i] - e[j], x - e[i] + e[j], x - e[i] - e[j]]
    vals = np.asarray(f(np.array(pts, dtype=_LD)), dtype=_LD)
    f0 = vals[0]
    H = np.empty((n, n), dtype=_LD)
    for i in range(n):
        H[i, i] = (vals[1 + 2 * i] - 2 * f0 + vals[2 + 2 * i]) / (h * h)
    k = 1 + 2 * n
    for i in range(n):
        for j in range(i + 1, n):
            pp, pm, mp, mm = vals[k : k + 4]
            H[i, j] = H[j, i] = (pp - pm - mp + mm) / (4 * h * h)
            k += 4
    return H.astype(float)
