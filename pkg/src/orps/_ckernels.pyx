# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: batched Pade-13 expm, batched 2-norms, affine sweep."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, ceil, log2, ldexp
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memset

cnp.import_array()

cdef double[14] B13 = [
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0]
cdef double THETA13 = 5.371920351148152


cdef inline void matmul(const double* a, const double* b, double* out, int n) noexcept nogil:
    cdef int i, j, k
    cdef double acc
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc += a[i * n + k] * b[k * n + j]
            out[i * n + j] = acc


cdef int lu_solve_inplace(double* M, double* rhs, int* piv, int n) noexcept nogil:
    """Solve M X = rhs (both n x n, row-major); result overwrites rhs."""
    cdef int i, j, k, p
    cdef double big, tmp, factor
    for k in range(n):
        p = k
        big = fabs(M[k * n + k])
        for i in range(k + 1, n):
            if fabs(M[i * n + k]) > big:
                big = fabs(M[i * n + k])
                p = i
        if big == 0.0:
            return -1
        piv[k] = p
        if p != k:
            for j in range(n):
                tmp = M[k * n + j]; M[k * n + j] = M[p * n + j]; M[p * n + j] = tmp
                tmp = rhs[k * n + j]; rhs[k * n + j] = rhs[p * n + j]; rhs[p * n + j] = tmp
        for i in range(k + 1, n):
            factor = M[i * n + k] / M[k * n + k]
            M[i * n + k] = factor
            for j in range(k + 1, n):
                M[i * n + j] -= factor * M[k * n + j]
            for j in range(n):
                rhs[i * n + j] -= factor * rhs[k * n + j]
    for k in range(n - 1, -1, -1):
        for j in range(n):
            tmp = rhs[k * n + j]
            for i in range(k + 1, n):
                tmp -= M[k * n + i] * rhs[i * n + j]
            rhs[k * n + j] = tmp / M[k * n + k]
    return 0


cdef int expm_one(const double* A, double t, double* out, double* work, int* piv, int n) noexcept nogil:
    cdef int nn = n * n
    cdef double* X = work
    cdef double* X2 = work + nn
    cdef double* X4 = work + 2 * nn
    cdef double* X6 = work + 3 * nn
    cdef double* T1 = work + 4 * nn
    cdef double* T2 = work + 5 * nn
    cdef double* U = work + 6 * nn
    cdef double* V = work + 7 * nn
    cdef int i, j, s = 0, q
    cdef double colsum, norm1 = 0.0, scale
    for j in range(n):
        colsum = 0.0
        for i in range(n):
            colsum += fabs(A[i * n + j] * t)
        if colsum > norm1:
            norm1 = colsum
    if norm1 > THETA13:
        s = <int>ceil(log2(norm1 / THETA13))
    scale = ldexp(t, -s)
    for i in range(nn):
        X[i] = A[i] * scale
    matmul(X, X, X2, n)
    matmul(X2, X2, X4, n)
    matmul(X2, X4, X6, n)
    # U = X (X6 (b13 X6 + b11 X4 + b9 X2) + b7 X6 + b5 X4 + b3 X2 + b1 I)
    for i in range(nn):
        T1[i] = B13[13] * X6[i] + B13[11] * X4[i] + B13[9] * X2[i]
    matmul(X6, T1, T2, n)
    for i in range(nn):
        T2[i] += B13[7] * X6[i] + B13[5] * X4[i] + B13[3] * X2[i]
    for i in range(n):
        T2[i * n + i] += B13[1]
    matmul(X, T2, U, n)
    # V = X6 (b12 X6 + b10 X4 + b8 X2) + b6 X6 + b4 X4 + b2 X2 + b0 I
    for i in range(nn):
        T1[i] = B13[12] * X6[i] + B13[10] * X4[i] + B13[8] * X2[i]
    matmul(X6, T1, V, n)
    for i in range(nn):
        V[i] += B13[6] * X6[i] + B13[4] * X4[i] + B13[2] * X2[i]
    for i in range(n):
        V[i * n + i] += B13[0]
    for i in range(nn):
        T1[i] = V[i] - U[i]
        out[i] = V[i] + U[i]
    if lu_solve_inplace(T1, out, piv, n) != 0:
        return -1
    for q in range(s):
        matmul(out, out, T1, n)
        memcpy(out, T1, nn * sizeof(double))
    return 0


def expm_batch(A, ts):
    """Return ``exp(A * t)`` for every ``t`` in ``ts`` as an (N, n, n) array."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] Ac = np.ascontiguousarray(A, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] tc = np.ascontiguousarray(np.asarray(ts, dtype=np.float64).reshape(-1))
    cdef int n = Ac.shape[0]
    cdef Py_ssize_t N = tc.shape[0], k
    cdef cnp.ndarray[cnp.float64_t, ndim=3, mode="c"] out = np.empty((N, n, n), dtype=np.float64)
    cdef double* work = <double*> malloc(8 * n * n * sizeof(double))
    cdef int* piv = <int*> malloc(n * sizeof(int))
    cdef int status = 0
    cdef double* a_ptr = &Ac[0, 0] if n > 0 else NULL
    cdef double* t_ptr = &tc[0] if N > 0 else NULL
    cdef double* o_ptr = &out[0, 0, 0] if N > 0 and n > 0 else NULL
    try:
        with nogil:
            for k in range(N):
                if expm_one(a_ptr, t_ptr[k], o_ptr + k * n * n, work, piv, n) != 0:
                    status = -1
                    break
    finally:
        free(work)
        free(piv)
    if status != 0:
        raise np.linalg.LinAlgError("singular Pade denominator")
    return out


cdef double max_eig_sym(double* S, int n) noexcept nogil:
    """Largest eigenvalue of a symmetric matrix by cyclic Jacobi (destroys S)."""
    cdef int sweep, p, q, k
    cdef double off, total, app, aqq, apq, theta, tt, c, s, akp, akq
    for sweep in range(100):
        off = 0.0
        total = 0.0
        for p in range(n):
            total += S[p * n + p] * S[p * n + p]
            for q in range(p + 1, n):
                off += 2.0 * S[p * n + q] * S[p * n + q]
        total += off
        if off <= 1e-30 * total or off == 0.0:
            break
        for p in range(n):
            for q in range(p + 1, n):
                apq = S[p * n + q]
                if apq == 0.0:
                    continue
                app = S[p * n + p]
                aqq = S[q * n + q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0:
                    tt = 1.0 / (theta + sqrt(1.0 + theta * theta))
                else:
                    tt = -1.0 / (-theta + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + tt * tt)
                s = tt * c
                for k in range(n):
                    akp = S[k * n + p]
                    akq = S[k * n + q]
                    S[k * n + p] = c * akp - s * akq
                    S[k * n + q] = s * akp + c * akq
                for k in range(n):
                    akp = S[p * n + k]
                    akq = S[q * n + k]
                    S[p * n + k] = c * akp - s * akq
                    S[q * n + k] = s * akp + c * akq
    total = S[0]
    for p in range(1, n):
        if S[p * n + p] > total:
            total = S[p * n + p]
    return total


def spectral_norm_batch(M):
    """Operator 2-norms of a stack of matrices, shape (N, p, q) -> (N,)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=3, mode="c"] Mc = np.ascontiguousarray(M, dtype=np.float64)
    cdef Py_ssize_t N = Mc.shape[0], k
    cdef int rows = Mc.shape[1], cols = Mc.shape[2], i, j, r
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(N, dtype=np.float64)
    if N == 0 or rows == 0 or cols == 0:
        out[:] = 0.0
        return out
    cdef double* S = <double*> malloc(cols * cols * sizeof(double))
    cdef double* base = &Mc[0, 0, 0]
    cdef double* m
    cdef double acc, lam
    try:
        with nogil:
            for k in range(N):
                m = base + k * rows * cols
                for i in range(cols):
                    for j in range(i, cols):
                        acc = 0.0
                        for r in range(rows):
                            acc += m[r * cols + i] * m[r * cols + j]
                        S[i * cols + j] = acc
                        S[j * cols + i] = acc
                lam = max_eig_sym(S, cols)
                out[k] = sqrt(lam) if lam > 0.0 else 0.0
    finally:
        free(S)
    return out


def affine_sweep(Phi, c, u0):
    """Run ``u[k+1] = Phi[k] @ u[k] + c[k]`` from ``u[0] = u0``; returns (K+1, n)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=3, mode="c"] P = np.ascontiguousarray(Phi, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] C = np.ascontiguousarray(c, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] u = np.ascontiguousarray(u0, dtype=np.float64)
    cdef Py_ssize_t K = P.shape[0], k
    cdef int n = u.shape[0], i, j
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] out = np.empty((K + 1, n), dtype=np.float64)
    cdef double acc
    for i in range(n):
        out[0, i] = u[i]
    for k in range(K):
        for i in range(n):
            acc = C[k, i]
            for j in range(n):
                acc += P[k, i, j] * out[k, j]
            out[k + 1, i] = acc
    return out
