"""Dense complex-matrix kernel shared by all modules.

Conventions used throughout the package:

* operators are square ``numpy`` arrays of ``complex128``;
* superoperators act on column-stacked matrices, ``vec(X) = X.flatten('F')``,
  so that ``vec(A X B) = (B.T kron A) vec(X)``;
* the Choi matrix of a map ``T`` is ``sum_ij T(e_ij) kron e_ij`` and is
  positive semidefinite exactly when ``T`` is completely positive.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = [
    "as_operator",
    "dagger",
    "vec",
    "unvec",
    "left_mult_superop",
    "right_mult_superop",
    "sandwich_superop",
    "superop_apply",
    "choi_matrix",
    "choi_min_eig",
    "frobenius",
    "hermitian_part",
    "matrix_to_json",
    "matrix_from_json",
    "span_orthonormal_basis",
    "span_contains",
    "span_intersection",
    "span_equal",
]


def as_operator(x, dim=None) -> np.ndarray:
    """Validate and return a finite square complex matrix."""
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {a.shape[0]}")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(x).flatten(order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if dim is None:
        dim = round(np.sqrt(v.size))
    return v.reshape((dim, dim), order="F")


def left_mult_superop(a: np.ndarray) -> np.ndarray:
    """Matrix of X -> a X on column-stacked vectors."""
    d = a.shape[0]
    return np.kron(np.eye(d), a)


def right_mult_superop(b: np.ndarray) -> np.ndarray:
    """Matrix of X -> X b on column-stacked vectors."""
    d = b.shape[0]
    return np.kron(b.T, np.eye(d))


def sandwich_superop(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix of X -> a X b on column-stacked vectors."""
    return np.kron(b.T, a)


def superop_apply(mat: np.ndarray, x: np.ndarray) -> np.ndarray:
    d = x.shape[0]
    return unvec(mat @ vec(x), d)


def choi_matrix(mat: np.ndarray) -> np.ndarray:
    """Choi matrix of a superoperator given in column-stacking form.

    With ``C = sum_ij T(e_ij) kron e_ij`` laid out in numpy's row-major
    ``kron``, ``C`` is Hermitian for *-preserving ``T`` and PSD iff ``T``
    is completely positive.
    """
    d = round(np.sqrt(mat.shape[0]))
    # mat[(c_out * d + r_out), (c_in * d + r_in)] = coefficient of X[r_in, c_in]
    # in T(X)[r_out, c_out]; the Choi reshuffle regroups these indices.
    m = mat.reshape(d, d, d, d)  # (c_out, r_out, c_in, r_in)
    # C[(r_out, r_in), (c_out, c_in)] = T(e_{r_in c_in})[r_out, c_out]
    c = m.transpose(1, 3, 0, 2).reshape(d * d, d * d)
    return c


def choi_min_eig(mat: np.ndarray) -> float:
    """Smallest eigenvalue of the (Hermitianized) Choi matrix."""
    c = choi_matrix(mat)
    c = 0.5 * (c + dagger(c))
    return float(np.linalg.eigvalsh(c)[0])


def frobenius(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def matrix_to_json(a: np.ndarray) -> dict:
    """Shared wire format {dim, re, im} used by all modules and the CLI."""
    a = as_operator(a)
    return {
        "dim": a.shape[0],
        "re": a.real.tolist(),
        "im": a.imag.tolist(),
    }


def matrix_from_json(obj) -> np.ndarray:
    if isinstance(obj, str):
        obj = json.loads(obj)
    dim = int(obj["dim"])
    a = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    return as_operator(a, dim)


# ---------------------------------------------------------------------------
# Linear spans of matrices (Hilbert-Schmidt geometry)
# ---------------------------------------------------------------------------

def _stack(mats) -> np.ndarray:
    mats = [as_operator(m) for m in mats]
    if not mats:
        raise ValueError("empty matrix list")
    return np.stack([vec(m) for m in mats])


def span_orthonormal_basis(mats, tol: float = 1e-10) -> list[np.ndarray]:
    """HS-orthonormal basis of the linear span, via SVD rank revelation."""
    rows = _stack(mats)
    scale = max(np.abs(rows).max(), 1.0)
    _, s, vh = np.linalg.svd(rows / scale, full_matrices=False)
    rank = int(np.sum(s > tol * max(len(mats), rows.shape[1])))
    d = mats[0].shape[0] if hasattr(mats[0], "shape") else round(np.sqrt(rows.shape[1]))
    return [unvec(vh[k], d) for k in range(rank)]


def span_contains(basis, x, tol: float = 1e-10) -> bool:
    """Whether x lies in the linear span of basis (HS projection residual)."""
    onb = basis if _is_orthonormal(basis, tol) else span_orthonormal_basis(basis, tol)
    v = vec(as_operator(x))
    proj = sum(np.vdot(vec(b), v) * vec(b) for b in onb)
    scale = max(float(np.linalg.norm(v)), 1.0)
    return float(np.linalg.norm(v - proj)) <= tol * scale


def _is_orthonormal(mats, tol) -> bool:
    rows = _stack(mats)
    g = rows @ rows.conj().T
    return bool(np.allclose(g, np.eye(len(mats)), atol=100 * tol))


def span_intersection(basis_a, basis_b, tol: float = 1e-9) -> list[np.ndarray]:
    """Basis of span(A) & span(B) by a rank-revealing decomposition.

    The intersection is the nullspace-derived overlap of the two projectors:
    singular vectors of ``P_A P_B`` with singular value within tol of 1.
    """
    on_a = span_orthonormal_basis(basis_a, tol=1e-10)
    on_b = span_orthonormal_basis(basis_b, tol=1e-10)
    a = np.stack([vec(m) for m in on_a])  # rows: ONB of A
    b = np.stack([vec(m) for m in on_b])
    # overlap operator on coefficient space of A
    m = (a @ b.conj().T) @ (b @ a.conj().T)
    w, u = np.linalg.eigh(m)
    d = on_a[0].shape[0]
    out = []
    for k in range(len(w)):
        if w[k] >= 1.0 - tol:
            coeff = u[:, k]
            out.append(unvec(coeff @ a, d))
    return out


def span_equal(basis_a, basis_b, tol: float = 1e-9) -> bool:
    on_a = span_orthonormal_basis(basis_a, tol=1e-10)
    on_b = span_orthonormal_basis(basis_b, tol=1e-10)
    if len(on_a) != len(on_b):
        return False
    return all(span_contains(on_b, m, tol) for m in on_a)
