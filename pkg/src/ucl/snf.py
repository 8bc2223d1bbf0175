"""Integer matrix normal forms: Smith form, kernels, cokernels.

The transforms are tracked so membership in integer column spans and
coordinates in quotient groups can be read off.  Matrices are small at
desk scale; arithmetic runs in int64 with an overflow guard that retries
in exact object arithmetic if entries ever grow past the guard bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["smith_normal_form", "invariant_factors", "rank_z", "solve_in_column_span", "Cokernel"]

_GUARD = np.int64(1) << 52


def _as_int_matrix(a, dtype):
    m = np.array(a, dtype=dtype)
    if m.ndim != 2:
        m = m.reshape((m.shape[0] if m.size else 0, -1))
    return m


def _snf_inplace(a, u, v):
    """Diagonalize a in place by unimodular row/col ops mirrored into u, v."""
    rows, cols = a.shape
    t = 0
    while t < min(rows, cols):
        sub = a[t:, t:]
        nz = np.nonzero(sub)
        if len(nz[0]) == 0:
            break
        # smallest nonzero magnitude as pivot
        mags = np.abs(sub[nz])
        k = int(np.argmin(mags))
        pi, pj = int(nz[0][k]) + t, int(nz[1][k]) + t
        if pi != t:
            a[[t, pi], :] = a[[pi, t], :]
            u[[t, pi], :] = u[[pi, t], :]
        if pj != t:
            a[:, [t, pj]] = a[:, [pj, t]]
            v[:, [t, pj]] = v[:, [pj, t]]
        pivot = a[t, t]
        # reduce column and row by the pivot
        col = a[t + 1 :, t]
        if col.any():
            q = col // pivot
            nzr = np.nonzero(q)[0]
            if len(nzr):
                a[t + 1 :, :][nzr] -= q[nzr, None] * a[t, :]
                u[t + 1 :, :][nzr] -= q[nzr, None] * u[t, :]
            if a[t + 1 :, t].any():
                continue  # remainders became new, smaller pivot candidates
        row = a[t, t + 1 :]
        if row.any():
            q = row // pivot
            nzc = np.nonzero(q)[0]
            if len(nzc):
                a[:, t + 1 :][:, nzc] -= a[:, t, None] * q[None, nzc]
                v[:, t + 1 :][:, nzc] -= v[:, t, None] * q[None, nzc]
            if a[t, t + 1 :].any():
                continue
        # pivot must divide the rest of the block
        rest = a[t + 1 :, t + 1 :]
        if rest.size and (rest % pivot).any():
            i = int(np.nonzero((rest % pivot).any(axis=1))[0][0]) + t + 1
            a[t, :] += a[i, :]
            u[t, :] += u[i, :]
            continue
        t += 1
    # sign and divisibility cleanup
    for i in range(min(rows, cols)):
        if a[i, i] < 0:
            a[i, :] = -a[i, :]
            u[i, :] = -u[i, :]


@dataclass(frozen=True)
class SmithForm:
    d: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @property
    def diagonal(self):
        k = min(self.d.shape) if self.d.size else 0
        return [int(self.d[i, i]) for i in range(k)]

    @property
    def rank(self) -> int:
        return sum(1 for x in self.diagonal if x != 0)


def smith_normal_form(a) -> SmithForm:
    """Return (d, u, v) with u @ a @ v = d, u and v unimodular, d diagonal
    with successive divisibility."""
    for dtype in (np.int64, object):
        m = _as_int_matrix(a, dtype)
        rows, cols = m.shape
        u = np.eye(rows, dtype=dtype)
        v = np.eye(cols, dtype=dtype)
        if m.size == 0:
            return SmithForm(m, u, v)
        try:
            _snf_inplace(m, u, v)
            if dtype is np.int64 and (
                np.abs(m).max(initial=0) > _GUARD
                or np.abs(u).max(initial=0) > _GUARD
                or np.abs(v).max(initial=0) > _GUARD
            ):
                continue
        except (OverflowError, FloatingPointError):
            continue
        return SmithForm(m, u, v)
    raise RuntimeError("smith_normal_form failed in exact arithmetic")


def invariant_factors(a):
    """Nonzero diagonal of the Smith form, in divisibility order."""
    return [d for d in smith_normal_form(a).diagonal if d != 0]


def rank_z(a) -> int:
    return smith_normal_form(a).rank


def solve_in_column_span(a, b):
    """Integer x with a @ x = b, or None.  a is (n,m), b length n."""
    a = _as_int_matrix(a, object)
    b = np.array(b, dtype=object).reshape(-1)
    if a.shape[0] != b.shape[0]:
        raise ValueError("shape mismatch")
    sf = smith_normal_form(a)
    ub = sf.u @ b
    diag = sf.diagonal
    y = np.zeros(a.shape[1], dtype=object)
    for i in range(a.shape[0]):
        d = diag[i] if i < len(diag) else 0
        if d == 0:
            if ub[i] != 0:
                return None
        else:
            if ub[i] % d != 0:
                return None
            y[i] = ub[i] // d
    return sf.v @ y


class Cokernel:
    """The quotient Z^n / colspan(a), with coordinates for vectors.

    Coordinates are (torsion residues, free coordinates): one residue per
    invariant factor > 1 and one free integer per rank deficit.
    """

    def __init__(self, a, n_ambient=None):
        a = _as_int_matrix(a, object)
        if n_ambient is not None and a.shape[0] != n_ambient:
            a = a.reshape((n_ambient, -1))
        self.sf = smith_normal_form(a)
        self.n = a.shape[0]
        diag = self.sf.diagonal
        self.torsion = []  # (row index, modulus)
        self.free_rows = []
        for i in range(self.n):
            d = diag[i] if i < len(diag) else 0
            if d == 0:
                self.free_rows.append(i)
            elif d > 1:
                self.torsion.append((i, d))

    @property
    def free_rank(self) -> int:
        return len(self.free_rows)

    @property
    def torsion_coefficients(self):
        return [d for (_, d) in self.torsion]

    def coords(self, vec):
        v = np.array(vec, dtype=object).reshape(-1)
        w = self.sf.u @ v
        tor = tuple(int(w[i]) % d for (i, d) in self.torsion)
        free = tuple(int(w[i]) for i in self.free_rows)
        return tor, free

    def is_zero(self, vec) -> bool:
        tor, free = self.coords(vec)
        return not any(tor) and not any(free)

    def coords_matrix(self, columns):
        """Coordinate tuples for each column of a matrix."""
        cols = _as_int_matrix(columns, object)
        return [self.coords(cols[:, j]) for j in range(cols.shape[1])]
