"""Fixed-step integration drivers over generated right-hand sides.

The right-hand side of a system is generated as python source and, when
numba is importable, jit-compiled together with these drivers.  Additive
bump perturbations are passed as packed index/coefficient arrays so that a
perturbed system reuses the base compilation.  The pure-python fallback
runs the identical code paths, only slower.
"""

from __future__ import annotations

import math

import numpy as np

try:
    import numba

    HAVE_NUMBA = True

    def _jit(fn):
        return numba.njit(fn, cache=False, fastmath=False)
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def _jit(fn):
        return fn

OK = 0
BLOWUP = 1
NONFINITE = 2

_BLOWUP_NORM = 1e8


def _psi(s: float) -> float:
    """Smooth plateau profile in squared-radius units: 1 for s <= 1,
    0 for s >= 4, strictly between on the bridge."""
    if s <= 1.0:
        return 1.0
    if s >= 4.0:
        return 0.0
    a = math.exp(-1.0 / (4.0 - s))
    b = math.exp(-1.0 / (s - 1.0))
    return a / (a + b)


def _apply_bumps(x, out, row_start, gather, arg_len, out_off, out_dim,
                 perm_start, perms, z, inv_d2, w):
    """Add packed bump fields to out.

    Each bump b holds a centre z[b], squared inverse radius inv_d2[b] and a
    value vector w[b] (scaling already folded in).  Rows are the nodes the
    bump's input class contains; the bump value is the smooth union of the
    group translates of the base plateau, so it is vertex-group invariant,
    equals 1 within delta of the centre's orbit and 0 beyond 2*delta.
    """
    n_bumps = row_start.shape[0] - 1
    for b in range(n_bumps):
        L = arg_len[b]
        k = out_dim[b]
        for r in range(row_start[b], row_start[b + 1]):
            rest = 1.0
            for p in range(perm_start[b], perm_start[b + 1]):
                s = 0.0
                for j in range(L):
                    d = x[gather[r, perms[p, j]]] - z[b, j]
                    s += d * d
                rest *= 1.0 - _psi(s * inv_d2[b])
                if rest == 0.0:
                    break
            val = 1.0 - rest
            if val != 0.0:
                o = out_off[r]
                for i in range(k):
                    out[o + i] += val * w[b, i]


def _rk4_flow(rhs, row_start, gather, arg_len, out_off, out_dim, perm_start,
              perms, z, inv_d2, w, x0, h, nsteps):
    """Classical fixed-step RK4 over rhs + bumps; returns (x_final, status)."""
    n = x0.shape[0]
    x = x0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    for step in range(nsteps):
        rhs(x, k1)
        _apply_bumps(x, k1, row_start, gather, arg_len, out_off, out_dim,
                     perm_start, perms, z, inv_d2, w)
        for i in range(n):
            tmp[i] = x[i] + 0.5 * h * k1[i]
        rhs(tmp, k2)
        _apply_bumps(tmp, k2, row_start, gather, arg_len, out_off, out_dim,
                     perm_start, perms, z, inv_d2, w)
        for i in range(n):
            tmp[i] = x[i] + 0.5 * h * k2[i]
        rhs(tmp, k3)
        _apply_bumps(tmp, k3, row_start, gather, arg_len, out_off, out_dim,
                     perm_start, perms, z, inv_d2, w)
        for i in range(n):
            tmp[i] = x[i] + h * k3[i]
        rhs(tmp, k4)
        _apply_bumps(tmp, k4, row_start, gather, arg_len, out_off, out_dim,
                     perm_start, perms, z, inv_d2, w)
        for i in range(n):
            x[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if step % 64 == 0:
            m = 0.0
            for i in range(n):
                a = abs(x[i])
                if a > m:
                    m = a
            if m > _BLOWUP_NORM:
                return x, BLOWUP
            if not math.isfinite(m):
                return x, NONFINITE
    for i in range(n):
        if not math.isfinite(x[i]):
            return x, NONFINITE
    m = 0.0
    for i in range(n):
        a = abs(x[i])
        if a > m:
            m = a
    if m > _BLOWUP_NORM:
        return x, BLOWUP
    return x, OK


def _rk4_record(rhs, row_start, gather, arg_len, out_off, out_dim, perm_start,
                perms, z, inv_d2, w, x0, h, nsteps, every, traj):
    """As _rk4_flow but filling traj[(nsteps // every) + 1, n] with samples
    at steps 0, every, 2*every, ..."""
    n = x0.shape[0]
    x = x0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    row = 0
    for i in range(n):
        traj[row, i] = x[i]
    for step in range(nsteps):
        rhs(x, k1)
        _apply_bumps(x, k1, row_start, gather, arg_len, out_off, out_dim,
                     perm_start, perms, z, inv_d2, w)
        for i in range(n):
            tmp[i] = x[i] + 0.5 * h * k1[i]
        rhs(tmp, k2)
        _apply_bumps(tmp, k2, row_start, gather, arg_len, out_off, out_dim,
                     perm_start, perms, z, inv_d2, w)
        for i in range(n):
            tmp[i] = x[i] + 0.5 * h * k2[i]
        rhs(tmp, k3)
        _apply_bumps(tmp, k3, row_start, gather, arg_len, out_off, out_dim,
                     perm_start, perms, z, inv_d2, w)
        for i in range(n):
            tmp[i] = x[i] + h * k3[i]
        rhs(tmp, k4)
        _apply_bumps(tmp, k4, row_start, gather, arg_len, out_off, out_dim,
                     perm_start, perms, z, inv_d2, w)
        for i in range(n):
            x[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if (step + 1) % every == 0:
            row += 1
            for i in range(n):
                traj[row, i] = x[i]
            m = 0.0
            for i in range(n):
                a = abs(x[i])
                if a > m:
                    m = a
            if m > _BLOWUP_NORM:
                return BLOWUP
            if not math.isfinite(m):
                return NONFINITE
    return OK


def _rk4_variational(rhs, row_start, gather, arg_len, out_off, out_dim,
                     perm_start, perms, z, inv_d2, w, x0, h, nsteps, fd):
    """Integrate state and fundamental matrix together.

    The Jacobian of the field is taken by central differences of the
    right-hand side with step fd per coordinate; the systematic O(fd^2)
    bias integrates smoothly, so monodromy matrices come out far more
    accurately than differencing the time-T flow map.
    """
    n = x0.shape[0]
    x = x0.copy()
    phi = np.eye(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    p1 = np.empty((n, n))
    p2 = np.empty((n, n))
    p3 = np.empty((n, n))
    p4 = np.empty((n, n))
    tmp = np.empty(n)
    ptmp = np.empty((n, n))
    jac = np.empty((n, n))
    fplus = np.empty(n)
    fminus = np.empty(n)
    probe = np.empty(n)

    def eval_rhs(y, out):
        rhs(y, out)
        _apply_bumps(y, out, row_start, gather, arg_len, out_off, out_dim,
                     perm_start, perms, z, inv_d2, w)

    def jacobian(y):
        for j in range(n):
            for i in range(n):
                probe[i] = y[i]
            probe[j] = y[j] + fd
            eval_rhs(probe, fplus)
            probe[j] = y[j] - fd
            eval_rhs(probe, fminus)
            for i in range(n):
                jac[i, j] = (fplus[i] - fminus[i]) / (2.0 * fd)

    for _ in range(nsteps):
        eval_rhs(x, k1)
        jacobian(x)
        for i in range(n):
            for jj in range(n):
                acc = 0.0
                for m in range(n):
                    acc += jac[i, m] * phi[m, jj]
                p1[i, jj] = acc
        for i in range(n):
            tmp[i] = x[i] + 0.5 * h * k1[i]
        for i in range(n):
            for jj in range(n):
                ptmp[i, jj] = phi[i, jj] + 0.5 * h * p1[i, jj]
        eval_rhs(tmp, k2)
        jacobian(tmp)
        for i in range(n):
            for jj in range(n):
                acc = 0.0
                for m in range(n):
                    acc += jac[i, m] * ptmp[m, jj]
                p2[i, jj] = acc
        for i in range(n):
            tmp[i] = x[i] + 0.5 * h * k2[i]
        for i in range(n):
            for jj in range(n):
                ptmp[i, jj] = phi[i, jj] + 0.5 * h * p2[i, jj]
        eval_rhs(tmp, k3)
        jacobian(tmp)
        for i in range(n):
            for jj in range(n):
                acc = 0.0
                for m in range(n):
                    acc += jac[i, m] * ptmp[m, jj]
                p3[i, jj] = acc
        for i in range(n):
            tmp[i] = x[i] + h * k3[i]
        for i in range(n):
            for jj in range(n):
                ptmp[i, jj] = phi[i, jj] + h * p3[i, jj]
        eval_rhs(tmp, k4)
        jacobian(tmp)
        for i in range(n):
            for jj in range(n):
                acc = 0.0
                for m in range(n):
                    acc += jac[i, m] * ptmp[m, jj]
                p4[i, jj] = acc
        for i in range(n):
            x[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        for i in range(n):
            for jj in range(n):
                phi[i, jj] = phi[i, jj] + (h / 6.0) * (
                    p1[i, jj] + 2.0 * p2[i, jj] + 2.0 * p3[i, jj] + p4[i, jj])
    status = OK
    for i in range(n):
        if not math.isfinite(x[i]):
            status = NONFINITE
    return x, phi, status


if HAVE_NUMBA:
    _psi = _jit(_psi)
    _apply_bumps = _jit(_apply_bumps)
    rk4_flow = _jit(_rk4_flow)
    rk4_record = _jit(_rk4_record)
    rk4_variational = _jit(_rk4_variational)
else:  # pragma: no cover
    rk4_flow = _rk4_flow
    rk4_record = _rk4_record
    rk4_variational = _rk4_variational


def empty_pack() -> tuple:
    """A perturbation pack with no bumps."""
    return (np.zeros(1, dtype=np.int64),          # row_start
            np.zeros((1, 1), dtype=np.int64),     # gather
            np.zeros(1, dtype=np.int64),          # arg_len
            np.zeros(1, dtype=np.int64),          # out_off
            np.zeros(1, dtype=np.int64),          # out_dim
            np.zeros(1, dtype=np.int64),          # perm_start
            np.zeros((1, 1), dtype=np.int64),     # perms
            np.zeros((1, 1)),                     # z
            np.zeros(1),                          # inv_d2
            np.zeros((1, 1)))                     # w


def compile_rhs(source: str, namespace: dict):
    """Exec generated source and jit the resulting rhs(s, out) function."""
    ns = {"math": math, "np": np}
    ns.update(namespace)
    exec(compile(source, "<ccnet-rhs>", "exec"), ns)
    fn = ns["rhs"]
    return _jit(fn) if HAVE_NUMBA else fn
