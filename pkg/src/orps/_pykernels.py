"""Pure-numpy implementations of the hot kernels.

Same contracts as the compiled ``_ckernels`` module; used when the extension
is not built or ``ORPS_PURE_PYTHON`` is set.
"""
import numpy as np

# Higham (2005) degree-13 Pade coefficients and scaling threshold.
PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
THETA13 = 5.371920351148152


def expm_batch(A, ts):
    """Return ``exp(A * t)`` for every ``t`` in ``ts`` as an (N, n, n) array."""
    A = np.asarray(A, dtype=float)
    ts = np.asarray(ts, dtype=float).reshape(-1)
    n = A.shape[0]
    N = ts.shape[0]
    if N == 0:
        return np.empty((0, n, n))
    X = ts[:, None, None] * A[None, :, :]
    norms = np.abs(X).sum(axis=1).max(axis=1)
    s = np.zeros(N, dtype=np.int64)
    big = norms > THETA13
    s[big] = np.ceil(np.log2(norms[big] / THETA13)).astype(np.int64)
    X = X / np.ldexp(1.0, s)[:, None, None]

    b = PADE13
    eye = np.broadcast_to(np.eye(n), X.shape)
    X2 = X @ X
    X4 = X2 @ X2
    X6 = X2 @ X4
    U = X @ (X6 @ (b[13] * X6 + b[11] * X4 + b[9] * X2)
             + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * eye)
    V = (X6 @ (b[12] * X6 + b[10] * X4 + b[8] * X2)
         + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * eye)
    R = np.linalg.solve(V - U, V + U)
    for i in range(int(s.max(initial=0))):
        mask = s > i
        R[mask] = R[mask] @ R[mask]
    return R


def spectral_norm_batch(M):
    """Operator 2-norms of a stack of matrices, shape (N, p, q) -> (N,)."""
    M = np.asarray(M, dtype=float)
    if M.shape[0] == 0:
        return np.empty(0)
    return np.linalg.norm(M, 2, axis=(1, 2))


def affine_sweep(Phi, c, u0):
    """Run ``u[k+1] = Phi[k] @ u[k] + c[k]`` from ``u[0] = u0``; returns (K+1, n)."""
    Phi = np.asarray(Phi, dtype=float)
    c = np.asarray(c, dtype=float)
    K = Phi.shape[0]
    out = np.empty((K + 1, c.shape[1] if K else len(u0)))
    out[0] = u0
    for k in range(K):
        out[k + 1] = Phi[k] @ out[k] + c[k]
    return out
