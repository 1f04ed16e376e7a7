"""Dense real linear algebra: products, Hessenberg reduction, eigenvalues.

Matrices are 2-D row-major float64 ndarrays; a spectrum is a 1-D
complex128 array holding all eigenvalues with multiplicity, sorted by
(real, imaginary). Eigenvalues of real matrices are computed without any
complex arithmetic: a Householder reduction to upper Hessenberg form is
followed by the implicit Francis double-shift QR iteration, and complex
conjugate pairs are extracted exactly from deflated 2x2 trailing blocks.

Everything here is a pure function of its inputs and safe to call from
concurrent workers.
"""

from __future__ import annotations

import math

import numpy as np

# A subdiagonal entry h[i+1,i] is treated as zero when it is below
# DEFLATION_RTOL times the magnitude of its two diagonal neighbours.
DEFLATION_RTOL = 1e-14

# Sweeps allowed per eigenvalue before giving up; ad-hoc exceptional
# shifts are injected at sweeps 10 and 20 to break shift cycling.
MAX_SWEEPS = 40
EXCEPTIONAL_AT = (10, 20)


class ShapeError(ValueError):
    """Operands have incompatible or invalid shapes."""


class NonConvergenceError(RuntimeError):
    """QR iteration hit the sweep cap before full deflation.

    `remaining` is the order of the still-undeflated leading block.
    """

    def __init__(self, remaining: int):
        super().__init__(
            f"QR iteration did not converge within {MAX_SWEEPS} sweeps per "
            f"eigenvalue; {remaining} eigenvalues remain undeflated"
        )
        self.remaining = remaining


def as_matrix(a) -> np.ndarray:
    """Validate and return `a` as a 2-D float64 array with finite entries."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix entries must be finite")
    return m


def _require_square(m: np.ndarray) -> int:
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    return m.shape[0]


def matmul(a, b) -> np.ndarray:
    """Matrix product a @ b with an explicit shape check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def scale(a, alpha: float) -> np.ndarray:
    """Entrywise alpha * a; scales every eigenvalue by alpha."""
    return as_matrix(a) * float(alpha)


def _reflector(x: np.ndarray):
    """Householder (v, beta) with (I - beta v v^T) x = alpha e1, or (None, 0)."""
    s = float(np.abs(x).max())
    if s == 0.0:
        return None, 0.0
    xs = x / s
    norm = math.sqrt(float(xs @ xs))
    v = xs.copy()
    v[0] += norm if v[0] >= 0.0 else -norm
    return v, 2.0 / float(v @ v)


def hessenberg(a) -> np.ndarray:
    """Orthogonal reduction to upper Hessenberg form.

    Returns H with H = Q^T a Q for some orthogonal Q; entries below the
    first subdiagonal are exact zeros. Input that is already Hessenberg
    is returned unchanged (up to a copy).
    """
    H = as_matrix(a).copy()
    n = _require_square(H)
    for k in range(n - 2):
        col = H[k + 1:, k]
        if not np.any(col[1:]):
            continue
        v, beta = _reflector(col)
        bv = beta * v
        H[k + 1:, k:] -= np.outer(bv, v @ H[k + 1:, k:])
        H[:, k + 1:] -= np.outer(H[:, k + 1:] @ v, bv)
        H[k + 2:, k] = 0.0
    return H


def _eig2(a: float, b: float, c: float, d: float):
    """Both eigenvalues of [[a, b], [c, d]]."""
    m = 0.5 * (a + d)
    det = a * d - b * c
    h = m * m - det
    if h >= 0.0:
        r = math.sqrt(h)
        lam1 = m + r if m >= 0.0 else m - r
        lam2 = det / lam1 if lam1 != 0.0 else m - r
        return complex(lam1, 0.0), complex(lam2, 0.0)
    r = math.sqrt(-h)
    return complex(m, r), complex(m, -r)


def _reflector3(x: float, y: float, z: float):
    s = abs(x) + abs(y) + abs(z)
    if s == 0.0 or (y == 0.0 and z == 0.0):
        return None, 0.0
    xs, ys, zs = x / s, y / s, z / s
    norm = math.sqrt(xs * xs + ys * ys + zs * zs)
    v0 = xs + norm if xs >= 0.0 else xs - norm
    v = np.array([v0, ys, zs])
    return v, 2.0 / (v0 * v0 + ys * ys + zs * zs)


def _francis_sweep(H: np.ndarray, l: int, u: int, shift_sum: float, shift_prod: float):
    """One implicit double-shift sweep on the active window H[l:u+1, l:u+1].

    Updates are confined to the window; blocks outside it are already
    deflated, so the overall spectrum is unaffected.
    """
    h00 = float(H[l, l])
    h10 = float(H[l + 1, l])
    x = h00 * h00 + float(H[l, l + 1]) * h10 - shift_sum * h00 + shift_prod
    y = h10 * (h00 + float(H[l + 1, l + 1]) - shift_sum)
    z = h10 * float(H[l + 2, l + 1])
    for k in range(l, u - 1):
        v, beta = _reflector3(x, y, z)
        if v is not None:
            bv = beta * v
            q = max(k - 1, l)
            left = H[k:k + 3, q:u + 1]
            left -= np.outer(bv, v @ left)
            right = H[l:min(k + 4, u + 1), k:k + 3]
            right -= np.outer(right @ v, bv)
        if k > l:
            H[k + 1, k - 1] = 0.0
            H[k + 2, k - 1] = 0.0
        x = float(H[k + 1, k])
        y = float(H[k + 2, k])
        z = float(H[k + 3, k]) if k < u - 2 else 0.0
    # trailing 2-element reflector finishes the chase
    s = abs(x) + abs(y)
    if s != 0.0 and y != 0.0:
        xs, ys = x / s, y / s
        norm = math.sqrt(xs * xs + ys * ys)
        v0 = xs + norm if xs >= 0.0 else xs - norm
        v = np.array([v0, ys])
        bv = (2.0 / (v0 * v0 + ys * ys)) * v
        left = H[u - 1:u + 1, u - 2:u + 1]
        left -= np.outer(bv, v @ left)
        right = H[l:u + 1, u - 1:u + 1]
        right -= np.outer(right @ v, bv)
    H[u, u - 2] = 0.0


def _qr_eigenvalues(H: np.ndarray) -> np.ndarray:
    """Eigenvalues of an upper Hessenberg matrix by double-shift QR."""
    n = H.shape[0]
    eig = np.empty(n, dtype=np.complex128)
    u = n - 1
    sweeps = 0
    while u >= 0:
        # walk up from the bottom to the first negligible subdiagonal
        l = u
        while l > 0:
            h = abs(H[l, l - 1])
            if h <= DEFLATION_RTOL * (abs(H[l - 1, l - 1]) + abs(H[l, l])):
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == u:
            eig[u] = complex(H[u, u], 0.0)
            u -= 1
            sweeps = 0
            continue
        if l == u - 1:
            eig[u - 1], eig[u] = _eig2(
                float(H[u - 1, u - 1]), float(H[u - 1, u]),
                float(H[u, u - 1]), float(H[u, u]),
            )
            u -= 2
            sweeps = 0
            continue
        sweeps += 1
        if sweeps > MAX_SWEEPS:
            raise NonConvergenceError(u + 1)
        if sweeps in EXCEPTIONAL_AT:
            s = abs(float(H[u, u - 1])) + abs(float(H[u - 1, u - 2]))
            shift_sum = 1.5 * s
            shift_prod = s * s
        else:
            shift_sum = float(H[u - 1, u - 1]) + float(H[u, u])
            shift_prod = (float(H[u - 1, u - 1]) * float(H[u, u])
                          - float(H[u - 1, u]) * float(H[u, u - 1]))
        _francis_sweep(H, l, u, shift_sum, shift_prod)
    return eig


def eigenvalues(a) -> np.ndarray:
    """All eigenvalues of a square matrix, with multiplicity.

    Returns a complex128 array sorted by (real, imaginary); conjugate
    pairs carry exactly opposite imaginary parts. Raises
    NonConvergenceError if the QR iteration stalls.
    """
    A = as_matrix(a)
    n = _require_square(A)
    if n == 1:
        return np.array([complex(A[0, 0], 0.0)])
    if n == 2:
        return np.sort_complex(np.array(_eig2(
            float(A[0, 0]), float(A[0, 1]), float(A[1, 0]), float(A[1, 1]))))
    H = hessenberg(A)
    return np.sort_complex(_qr_eigenvalues(H))
