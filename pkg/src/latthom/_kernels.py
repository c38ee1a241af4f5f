"""Compiled stencil and Krylov kernels on flattened torus fields.

Conductivities are passed as a ``(d, N)`` array (row ``i`` holds the edges
``[x, x+e_i]`` over row-major sites). Reductions use a fixed block size so the
summation order depends only on the vector length.
"""
import numba
import numpy as np

BLOCK = 4096


@numba.njit(cache=True)
def _neighbors(k, coord, strides, n, i):
    s = strides[i]
    if coord[i] == n - 1:
        kp = k - (n - 1) * s
    else:
        kp = k + s
    if coord[i] == 0:
        km = k + (n - 1) * s
    else:
        km = k - s
    return kp, km


@numba.njit(cache=True)
def _advance(coord, n):
    j = coord.shape[0] - 1
    while j >= 0:
        coord[j] += 1
        if coord[j] < n:
            return
        coord[j] = 0
        j -= 1


@numba.njit(cache=True)
def diagonal(a, mass, n, strides):
    d, N = a.shape
    D = np.empty(N)
    coord = np.zeros(d, dtype=np.int64)
    for k in range(N):
        acc = mass
        for i in range(d):
            kp, km = _neighbors(k, coord, strides, n, i)
            acc += a[i, k] + a[i, km]
        D[k] = acc
        _advance(coord, n)
    return D


@numba.njit(cache=True)
def _apply2(a, D, u, out, n):
    a0 = a[0].reshape((n, n))
    a1 = a[1].reshape((n, n))
    D2 = D.reshape((n, n))
    u2 = u.reshape((n, n))
    o2 = out.reshape((n, n))
    for x in range(n):
        xp = x + 1 if x + 1 < n else 0
        xm = x - 1 if x > 0 else n - 1
        for y in range(n):
            yp = y + 1 if y + 1 < n else 0
            ym = y - 1 if y > 0 else n - 1
            o2[x, y] = (D2[x, y] * u2[x, y]
                        - a0[x, y] * u2[xp, y] - a0[xm, y] * u2[xm, y]
                        - a1[x, y] * u2[x, yp] - a1[x, ym] * u2[x, ym])


@numba.njit(cache=True)
def _apply3(a, D, u, out, n):
    a0 = a[0].reshape((n, n, n))
    a1 = a[1].reshape((n, n, n))
    a2 = a[2].reshape((n, n, n))
    D3 = D.reshape((n, n, n))
    u3 = u.reshape((n, n, n))
    o3 = out.reshape((n, n, n))
    for x in range(n):
        xp = x + 1 if x + 1 < n else 0
        xm = x - 1 if x > 0 else n - 1
        for y in range(n):
            yp = y + 1 if y + 1 < n else 0
            ym = y - 1 if y > 0 else n - 1
            for z in range(n):
                zp = z + 1 if z + 1 < n else 0
                zm = z - 1 if z > 0 else n - 1
                o3[x, y, z] = (D3[x, y, z] * u3[x, y, z]
                               - a0[x, y, z] * u3[xp, y, z] - a0[xm, y, z] * u3[xm, y, z]
                               - a1[x, y, z] * u3[x, yp, z] - a1[x, ym, z] * u3[x, ym, z]
                               - a2[x, y, z] * u3[x, y, zp] - a2[x, y, zm] * u3[x, y, zm])


@numba.njit(cache=True)
def apply(a, D, u, out, n, strides):
    d, N = a.shape
    if d == 2:
        _apply2(a, D, u, out, n)
        return
    if d == 3:
        _apply3(a, D, u, out, n)
        return
    coord = np.zeros(d, dtype=np.int64)
    for k in range(N):
        acc = D[k] * u[k]
        for i in range(d):
            kp, km = _neighbors(k, coord, strides, n, i)
            acc -= a[i, k] * u[kp] + a[i, km] * u[km]
        out[k] = acc
        _advance(coord, n)


@numba.njit(cache=True)
def bdot(x, y):
    N = x.shape[0]
    total = 0.0
    start = 0
    while start < N:
        stop = min(start + BLOCK, N)
        part = 0.0
        for k in range(start, stop):
            part += x[k] * y[k]
        total += part
        start = stop
    return total


@numba.njit(cache=True)
def _update(alpha, p, q, x, r, z, D):
    """x += alpha p; r -= alpha q; z = r / D; return (r.r, r.z), blocked as bdot."""
    N = x.shape[0]
    rr = 0.0
    rz = 0.0
    start = 0
    while start < N:
        stop = min(start + BLOCK, N)
        prr = 0.0
        prz = 0.0
        for k in range(start, stop):
            x[k] += alpha * p[k]
            rk = r[k] - alpha * q[k]
            r[k] = rk
            zk = rk / D[k]
            z[k] = zk
            prr += rk * rk
            prz += rk * zk
        rr += prr
        rz += prz
        start = stop
    return rr, rz


@numba.njit(cache=True)
def pcg(a, mass, b, x, n, strides, tol, maxiter):
    """Jacobi-preconditioned CG; ``x`` holds the initial guess and is updated.

    Returns (iterations, relative true residual, converged flag).
    """
    N = b.shape[0]
    D = diagonal(a, mass, n, strides)
    r = np.empty(N)
    z = np.empty(N)
    p = np.empty(N)
    q = np.empty(N)
    bnorm = np.sqrt(bdot(b, b))
    if bnorm == 0.0:
        for k in range(N):
            x[k] = 0.0
        return 0, 0.0, True
    it = 0
    relres = np.inf
    while it < maxiter:
        # (re)start from the true residual
        apply(a, D, x, q, n, strides)
        for k in range(N):
            r[k] = b[k] - q[k]
        relres = np.sqrt(bdot(r, r)) / bnorm
        if relres <= tol:
            return it, relres, True
        for k in range(N):
            z[k] = r[k] / D[k]
            p[k] = z[k]
        rz = bdot(r, z)
        while it < maxiter:
            apply(a, D, p, q, n, strides)
            pq = bdot(p, q)
            if pq <= 0.0:
                # breakdown: stop rather than restart forever
                it = maxiter
                break
            alpha = rz / pq
            rr, rz_new = _update(alpha, p, q, x, r, z, D)
            it += 1
            if np.sqrt(rr) / bnorm <= tol:
                break
            beta = rz_new / rz
            rz = rz_new
            for k in range(N):
                p[k] = z[k] + beta * p[k]
        apply(a, D, x, q, n, strides)
        for k in range(N):
            r[k] = b[k] - q[k]
        relres = np.sqrt(bdot(r, r)) / bnorm
        if relres <= tol:
            return it, relres, True
    return it, relres, False
