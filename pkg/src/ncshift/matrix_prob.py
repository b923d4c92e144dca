"""Matrix *-algebras with a faithful state.

The carrier of everything downstream: density-matrix states, GNS inner
products, the modular flow, state-adjoints of superoperators, and
state-preserving conditional expectations onto subalgebras.  A conditional
expectation onto a subalgebra exists exactly when the subalgebra is
invariant under the modular flow of the state; here existence is decided
constructively, by computing the GNS-orthogonal projection and validating
the conditional-expectation contract on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    as_operator,
    choi_min_eig,
    dagger,
    frobenius,
    hermitian_part,
    left_mult_superop,
    matrix_from_json,
    matrix_to_json,
    right_mult_superop,
    span_orthonormal_basis,
    superop_apply,
    unvec,
    vec,
)

__all__ = [
    "HERMITIAN_TOL",
    "STRUCTURAL_TOL",
    "VALIDATION_TOL",
    "PSD_EIG_FLOOR",
    "DegenerateBasis",
    "ExistenceFailure",
    "FaithfulState",
    "MatrixProbSpace",
    "Superoperator",
    "state_eval",
    "gns_inner",
    "modular_automorphism",
    "psi_adjoint",
    "conditional_expectation",
    "centralizer_check",
    "complete_star_algebra",
    "matrix_units",
    "random_density",
    "space_from_vector_state",
]

# Tolerance regime for double-precision eigendecompositions at dim <= 64:
# structural identities, validation gates, and the eigenvalue floor
# accepted when testing positive semidefiniteness.
HERMITIAN_TOL = 1e-12
STRUCTURAL_TOL = 1e-10
VALIDATION_TOL = 1e-9
PSD_EIG_FLOOR = -1e-10


class DegenerateBasis(ValueError):
    """A claimed subalgebra basis does not generate a usable *-algebra."""


class ExistenceFailure(RuntimeError):
    """No state-preserving conditional expectation exists onto the subalgebra.

    Signals that the subalgebra is not invariant under the modular flow of
    the state; the computed GNS projection failed the conditional-expectation
    contract.
    """


@dataclass(frozen=True)
class FaithfulState:
    """Faithful state given by a density matrix."""

    rho: np.ndarray

    def __post_init__(self):
        rho = as_operator(self.rho)
        if frobenius(rho - dagger(rho)) > HERMITIAN_TOL * max(1.0, frobenius(rho)):
            raise ValueError("density matrix must be Hermitian")
        if abs(np.trace(rho) - 1.0) > 1e-12 * rho.shape[0]:
            raise ValueError("density matrix must have unit trace")
        w = np.linalg.eigvalsh(hermitian_part(rho))
        if w[0] <= 0.0:
            raise ValueError(
                f"state is not faithful: smallest eigenvalue {w[0]:.3e} <= 0"
            )
        object.__setattr__(self, "rho", hermitian_part(rho))

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def to_json(self) -> dict:
        return matrix_to_json(self.rho)

    @staticmethod
    def from_json(obj) -> "FaithfulState":
        return FaithfulState(matrix_from_json(obj))


@dataclass(frozen=True)
class MatrixProbSpace:
    """A matrix algebra with a faithful state: the pair (algebra, psi).

    ``subalgebra_basis = None`` means the full matrix algebra.  A given
    basis is completed to a unital *-algebra span on construction.
    """

    dim: int
    state: FaithfulState
    subalgebra_basis: list | None = None

    def __post_init__(self):
        if self.state.dim != self.dim:
            raise ValueError("state dimension does not match space dimension")
        if self.subalgebra_basis is not None:
            basis = complete_star_algebra(self.subalgebra_basis, self.dim)
            object.__setattr__(self, "subalgebra_basis", basis)

    @property
    def rho(self) -> np.ndarray:
        return self.state.rho

    def algebra_basis(self) -> list[np.ndarray]:
        if self.subalgebra_basis is not None:
            return list(self.subalgebra_basis)
        return matrix_units(self.dim)

    def to_json(self) -> dict:
        out = {"dim": self.dim, "rho": self.state.to_json()}
        if self.subalgebra_basis is not None:
            out["subalgebra_basis"] = [matrix_to_json(b) for b in self.subalgebra_basis]
        return out

    @staticmethod
    def from_json(obj) -> "MatrixProbSpace":
        basis = None
        if "subalgebra_basis" in obj and obj["subalgebra_basis"] is not None:
            basis = [matrix_from_json(b) for b in obj["subalgebra_basis"]]
        return MatrixProbSpace(
            dim=int(obj["dim"]),
            state=FaithfulState.from_json(obj["rho"]),
            subalgebra_basis=basis,
        )


@dataclass
class Superoperator:
    """Linear map on matrices, stored on column-stacked vectors."""

    dim: int
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        d2 = self.dim * self.dim
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (d2, d2):
            raise ValueError(
                f"superoperator matrix must be {d2}x{d2}, got {self.matrix.shape}"
            )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return superop_apply(self.matrix, as_operator(x, self.dim))

    def compose(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.dim, self.matrix @ other.matrix,
                             label=f"{self.label}*{other.label}")

    def is_idempotent(self, tol: float = STRUCTURAL_TOL) -> bool:
        return frobenius(self.matrix @ self.matrix - self.matrix) <= tol * max(
            1.0, frobenius(self.matrix))

    def choi_min_eig(self) -> float:
        return choi_min_eig(self.matrix)

    def is_completely_positive(self, floor: float = PSD_EIG_FLOOR) -> bool:
        return self.choi_min_eig() >= floor

    @staticmethod
    def identity(dim: int) -> "Superoperator":
        return Superoperator(dim, np.eye(dim * dim, dtype=complex), label="id")

    @staticmethod
    def from_action(dim: int, fn, label: str = "") -> "Superoperator":
        cols = np.zeros((dim * dim, dim * dim), dtype=complex)
        for j in range(dim * dim):
            e = unvec(np.eye(dim * dim, dtype=complex)[:, j], dim)
            cols[:, j] = vec(fn(e))
        return Superoperator(dim, cols, label=label)

    @staticmethod
    def from_kraus(kraus: list[np.ndarray], label: str = "") -> "Superoperator":
        dim = kraus[0].shape[0]
        mat = sum(np.kron(k.conj(), k) for k in kraus)
        return Superoperator(dim, mat, label=label)


# ---------------------------------------------------------------------------
# Basic operations
# ---------------------------------------------------------------------------

def state_eval(space: MatrixProbSpace, x) -> complex:
    """psi(x) = trace(rho x)."""
    x = as_operator(x, space.dim)
    return complex(np.trace(space.rho @ x))


def gns_inner(space: MatrixProbSpace, x, y) -> complex:
    """GNS inner product psi(x* y); linear in the second argument."""
    x = as_operator(x, space.dim)
    y = as_operator(y, space.dim)
    return complex(np.trace(space.rho @ dagger(x) @ y))


def modular_automorphism(space: MatrixProbSpace, t: float, x) -> np.ndarray:
    """Modular flow x -> rho^{it} x rho^{-it}, via eigendecomposition."""
    x = as_operator(x, space.dim)
    w, u = np.linalg.eigh(space.rho)
    if w[0] <= 0:
        raise ValueError("modular flow requires a faithful state")
    phase = np.exp(1j * t * np.log(w))
    rho_it = (u * phase) @ dagger(u)
    rho_mit = (u * phase.conj()) @ dagger(u)
    return rho_it @ x @ rho_mit


def centralizer_check(space: MatrixProbSpace, x, tol: float = STRUCTURAL_TOL) -> bool:
    """Whether x lies in the centralizer of the state.

    psi(x e) = psi(e x) for all matrix units e is the same as [x, rho] = 0,
    since the deviations are the entries of the commutator.
    """
    x = as_operator(x, space.dim)
    comm = x @ space.rho - space.rho @ x
    return bool(np.abs(comm).max() <= tol)


def psi_adjoint(space: MatrixProbSpace, T: Superoperator) -> Superoperator:
    """The state-adjoint T* with psi(T*(x) y) = psi(x T(y)) for all x, y.

    Computed as T*(x) = rho^{-1} Td(rho x), where Td is the adjoint of T
    for the trace pairing (A, B) -> trace(A B).  Always exists as a linear
    map and is involutive; it is completely positive precisely when T
    commutes with the modular flow.
    """
    if T.dim != space.dim:
        raise ValueError("superoperator dimension mismatch")
    d = space.dim
    w = np.linalg.eigvalsh(space.rho)
    if w[0] <= 0:
        raise ValueError("state-adjoint requires a faithful state")
    rho = space.rho
    rho_inv = np.linalg.inv(rho)
    # trace-pairing adjoint: vec(Td(A)) = P M^T P vec(A), with P the
    # transpose permutation vec(X) -> vec(X^T)
    perm = _transpose_permutation(d)
    td = perm @ T.matrix.T @ perm
    mat = left_mult_superop(rho_inv) @ td @ left_mult_superop(rho)
    return Superoperator(d, mat, label=f"{T.label}^psi" if T.label else "psi-adjoint")


def _transpose_permutation(d: int) -> np.ndarray:
    p = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            p[i * d + j, j * d + i] = 1.0
    return p


# ---------------------------------------------------------------------------
# Subalgebra machinery
# ---------------------------------------------------------------------------

def matrix_units(dim: int) -> list[np.ndarray]:
    out = []
    for j in range(dim):
        for i in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            out.append(e)
    return out


def _extend_onb(onb_rows, cand_rows, tol=1e-8):
    """Orthonormal rows extending onb_rows by the new directions in cand_rows.

    Candidates are never rescaled: with generators held at unit operator
    norm, genuine new directions keep O(1) residuals while words that vanish
    identically only leave float noise, which the absolute threshold drops.
    """
    cand = cand_rows
    for _ in range(2):  # projection with one re-orthogonalization pass
        if onb_rows is not None and len(onb_rows):
            cand = cand - (cand @ onb_rows.conj().T) @ onb_rows
    norms = np.linalg.norm(cand, axis=1)
    cand = cand[norms > tol]
    if cand.size == 0:
        return None
    _, s, vh = np.linalg.svd(cand, full_matrices=False)
    rank = int(np.sum(s > tol))
    return vh[:rank] if rank else None


def complete_star_algebra(basis, dim: int, tol: float = 1e-10) -> list[np.ndarray]:
    """Close a list of matrices to a unital *-algebra span.

    The span of all words in the generators and their adjoints, seeded with
    the identity, accumulated with an incremental orthonormalization; capped
    at dim^2 rounds (the span dimension grows strictly until the fixpoint,
    so the cap cannot bind for valid input).
    """
    mats = [as_operator(b, dim) for b in basis]
    if not mats:
        raise DegenerateBasis("empty subalgebra basis")
    if all(frobenius(m) <= tol for m in mats):
        raise DegenerateBasis("subalgebra basis contains only zero matrices")

    gens = []
    for m in mats:
        norm = np.linalg.norm(m, 2)
        if norm <= tol:
            continue
        gens.append(m / norm)
        gens.append(dagger(m) / norm)
    gen_stack = np.stack(gens)

    onb = _extend_onb(None, np.stack([vec(np.eye(dim, dtype=complex))]))
    frontier = onb.copy()
    new = _extend_onb(onb, np.stack([vec(g) for g in gens]))
    if new is not None:
        onb = np.vstack([onb, new])
        frontier = np.vstack([frontier, new])

    for _ in range(dim * dim + 1):
        front_mats = frontier.reshape(-1, dim, dim).transpose(0, 2, 1)
        prods = np.einsum("gij,fjk->gfik", gen_stack, front_mats)
        cand = prods.transpose(0, 1, 3, 2).reshape(-1, dim * dim)
        new = _extend_onb(onb, cand)
        if new is None:
            return [unvec(row, dim) for row in onb]
        onb = np.vstack([onb, new])
        frontier = new
    raise DegenerateBasis("subalgebra completion failed to stabilize")


def _gns_orthonormalize(space: MatrixProbSpace, basis) -> list[np.ndarray]:
    """Orthonormalize a matrix family in the GNS inner product of the state."""
    stack = np.stack([as_operator(b, space.dim) for b in basis])
    weighted = np.einsum("kij,jl->kil", stack, space.rho)  # rows a_k rho
    wv = weighted.reshape(len(basis), -1)
    sv = stack.reshape(len(basis), -1)
    g = wv.conj() @ sv.T  # G[k,l] = tr(rho a_k^dag a_l)
    g = hermitian_part(g)
    w, u = np.linalg.eigh(g)
    if w[0] <= 1e-13 * max(1.0, w[-1]):
        raise DegenerateBasis(
            "GNS Gram matrix is singular; basis not independent or state degenerate"
        )
    coeff = u * (w ** -0.5)  # columns: coefficients of orthonormal elements
    out = np.einsum("kj,kil->jil", coeff, stack)
    return list(out)


def conditional_expectation(
    space: MatrixProbSpace,
    B_basis,
    label: str = "E",
    rng: np.random.Generator | None = None,
) -> Superoperator:
    """State-preserving conditional expectation onto the subalgebra span.

    Builds the GNS-orthogonal projection onto the completed *-algebra span
    and validates the conditional-expectation contract: idempotent, unital,
    state-preserving, complete positivity of the Choi matrix, and the
    bimodule property E(b1 x b2) = b1 E(x) b2.  Validation failure raises
    ExistenceFailure: the subalgebra is not modular-invariant, so no
    state-preserving conditional expectation exists.
    """
    d = space.dim
    basis = complete_star_algebra(B_basis, d)
    onb = _gns_orthonormalize(space, basis)

    # E(x) = sum_k b_k <b_k, x>_psi; as a superoperator a rank-|B| matrix.
    # The GNS functional <b, .>_psi = tr(rho b^dag .) is represented by the
    # vector vec(b rho), since tr(M x) = vec(M^dag)^H vec(x).
    rho = space.rho
    cols = np.stack([vec(b) for b in onb], axis=1)           # d^2 x r
    duals = np.stack([vec(b @ rho) for b in onb], axis=1)
    mat = cols @ dagger(duals)
    E = Superoperator(d, mat, label=label)

    _validate_conditional_expectation(space, E, onb, rng)
    return E


def _validate_conditional_expectation(space, E, onb, rng=None):
    d = space.dim
    tol = VALIDATION_TOL
    problems = []

    if not E.is_idempotent(tol):
        problems.append("not idempotent")

    one = np.eye(d, dtype=complex)
    if frobenius(E(one) - one) > tol:
        problems.append("not unital")

    # state preservation psi(E(x)) = psi(x), checked on matrix units
    rho = space.rho
    # psi(E(x)) = vec(rho^T... use trace pairing: functional of E
    left = vec(dagger(rho)).conj() @ E.matrix
    right = vec(dagger(rho)).conj()
    if np.abs(left - right).max() > tol:
        problems.append("state not preserved")

    # bimodule property on random probes: E(b x) = b E(x), E(x b) = E(x) b
    # for every basis b.  Linearity makes random probes complete
    # certificates up to numerical tolerance.
    if rng is None:
        rng = np.random.default_rng(7)
    probes = [
        rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        for _ in range(3)
    ]
    worst = 0.0
    for b in onb:
        nb = max(frobenius(b), 1.0)
        for x in probes:
            nx = frobenius(x)
            r1 = frobenius(E(b @ x) - b @ E(x)) / (nb * nx)
            r2 = frobenius(E(x @ b) - E(x) @ b) / (nb * nx)
            worst = max(worst, r1, r2)
    if worst > tol:
        problems.append(f"bimodule property fails (residual {worst:.3e})")

    if not E.is_completely_positive():
        problems.append(f"Choi matrix not PSD (min eig {E.choi_min_eig():.3e})")

    if problems:
        raise ExistenceFailure(
            "no state-preserving conditional expectation onto this subalgebra: "
            + "; ".join(problems)
        )


# ---------------------------------------------------------------------------
# Constructors used by tests and other modules
# ---------------------------------------------------------------------------

def random_density(dim: int, rng: np.random.Generator) -> FaithfulState:
    """Random full-rank density matrix (Wishart + floor)."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ dagger(g) + 0.1 * np.eye(dim)
    rho = rho / np.trace(rho).real
    return FaithfulState(rho)


# ---------------------------------------------------------------------------
# Factor structure: centers, commutants, matrix units
# ---------------------------------------------------------------------------

def center_basis(basis, tol: float = 1e-9) -> list[np.ndarray]:
    """Basis of the center of the span (commutes with every basis element)."""
    d = basis[0].shape[0]
    cols = np.stack([vec(b) for b in basis], axis=1)
    rows = []
    for a in basis:
        rows.append((np.kron(np.eye(d), a) - np.kron(a.T, np.eye(d))) @ cols)
    sys = np.vstack(rows)
    _, s, vh = np.linalg.svd(sys)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    null = list(vh[rank:].conj())
    return [
        sum(c[k] * basis[k] for k in range(len(basis))) for c in null
    ]


def commutant_basis(basis, dim: int, tol: float = 1e-9) -> list[np.ndarray]:
    """Basis of the commutant of the span inside the full matrix algebra."""
    rows = []
    for a in basis:
        rows.append(np.kron(np.eye(dim), a) - np.kron(a.T, np.eye(dim)))
    sys = np.vstack(rows)
    _, s, vh = np.linalg.svd(sys)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    return [unvec(vh[k].conj(), dim) for k in range(rank, vh.shape[0])]


def factor_matrix_units(basis, n: int, m: int, tol: float = 1e-9) -> dict:
    """System of matrix units {e_ij} for a factor isomorphic to M_n.

    Minimal projections are spectral projections of a generic self-adjoint
    element of the algebra; partial isometries between them come from
    polar-decomposing compressed basis elements.  Requires the factor to
    act with uniform multiplicity m.
    """
    rng = np.random.default_rng(20240517)
    for _ in range(20):
        coeff = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
        h = sum(c * b for c, b in zip(coeff, basis))
        h = h + dagger(h)
        w, u = np.linalg.eigh(h)
        order = np.argsort(w)
        groups = [order[k * m:(k + 1) * m] for k in range(n)]
        spread_ok = all(
            (k == n - 1) or (w[order[(k + 1) * m]] - w[order[(k + 1) * m - 1]] > 1e-6)
            for k in range(n)
        )
        if not spread_ok:
            continue
        projections = [u[:, g] @ dagger(u[:, g]) for g in groups]
        if all(span_contains(basis, p, 1e-7) for p in projections):
            break
    else:
        raise ValueError("could not locate minimal projections in the factor")

    units = {}
    p1 = projections[0]
    isoms = [p1]
    for i in range(1, n):
        found = None
        for b in basis:
            wld = projections[i] @ b @ p1
            c = np.trace(dagger(wld) @ wld).real / m
            if c > tol:
                found = wld / np.sqrt(c)
                break
        if found is None:
            raise ValueError("factor is not transitive between projections")
        isoms.append(found)
    for i in range(n):
        for j in range(n):
            units[(i, j)] = isoms[i] @ dagger(isoms[j])
    return units


def factor_compress(algebra_basis, omega, completed: bool = False):
    """Represent a factor algebra with a vector state on its own matrix size.

    For an algebra A isomorphic to full M_n acting on a big space with a
    state vector omega whose restriction to A is faithful, returns
    ``(space, embed)`` where space is M_n with the density matrix realizing
    the state and embed maps big-space elements of A to their n x n form.
    """
    omega = np.asarray(omega, dtype=complex).reshape(-1)
    omega = omega / np.linalg.norm(omega)
    big = omega.size
    basis = algebra_basis if completed else complete_star_algebra(algebra_basis, big)

    if len(center_basis(basis)) != 1:
        raise ValueError("algebra is not a factor")
    n = round(np.sqrt(len(basis)))
    if n * n != len(basis) or big % n != 0:
        raise ValueError("algebra dimension incompatible with a factor splitting")
    m = big // n
    units = factor_matrix_units(basis, n, m)

    rho = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            rho[j, i] = np.vdot(omega, units[(i, j)] @ omega)
    rho = hermitian_part(rho)
    w = np.linalg.eigvalsh(rho)
    if w[0] <= 1e-12:
        raise ValueError(
            f"state is not faithful on the factor (density floor {w[0]:.3e})"
        )
    rho = rho / np.trace(rho).real

    frame = np.stack([vec(units[(i, j)]) for i in range(n) for j in range(n)])

    def embed(x):
        x = as_operator(x, big)
        coeff = frame.conj() @ vec(x) / m
        out = coeff.reshape(n, n)
        resid = frobenius(
            x - sum(out[i, j] * units[(i, j)] for i in range(n) for j in range(n))
        )
        if resid > 1e-8 * max(1.0, frobenius(x)):
            raise ValueError("operator does not belong to the factor")
        return out

    space = MatrixProbSpace(dim=n, state=FaithfulState(rho))
    return space, embed


def space_from_vector_state(algebra_basis, omega, tol: float = 1e-10,
                            completed: bool = False):
    """Matrix probability space carrying a vector state restricted to an algebra.

    Given matrices generating a *-algebra A on a big space and a unit vector
    whose state is faithful on A, compress to the cyclic subspace V = A.omega
    and represent the state there by the full-rank density

        rho_V = sum_k conj(psi(a_k)) a_k,   {a_k} HS-orthonormal basis of A,

    the trace-orthogonal projection of |omega><omega| onto A.  It agrees
    with the vector state on all of A and is positive definite exactly when
    omega is separating for A.

    Returns ``(space, embed)`` where ``embed`` maps big-space operators in A
    to operators on V.
    """
    omega = np.asarray(omega, dtype=complex).reshape(-1)
    omega = omega / np.linalg.norm(omega)
    big = omega.size
    basis = algebra_basis if completed else complete_star_algebra(algebra_basis, big, tol)

    # cyclic subspace V = span(A omega)
    vecs = np.stack([a @ omega for a in basis])
    u, s, _ = np.linalg.svd(vecs.T, full_matrices=False)
    r = int(np.sum(s > tol * max(1.0, s[0]) * len(basis)))
    V = u[:, :r]  # isometry V: C^r -> big space

    def embed(x):
        x = as_operator(x, big)
        compressed = dagger(V) @ x @ V
        # require that A actually leaves the subspace invariant
        leak = frobenius(x @ V - V @ compressed)
        if leak > 1e-8 * max(1.0, frobenius(x)):
            raise ValueError("operator does not preserve the cyclic subspace")
        return compressed

    small_basis = [embed(a) for a in basis]
    omega_small = dagger(V) @ omega

    hs_onb = span_orthonormal_basis(small_basis, tol)
    rho = sum(
        np.vdot(omega_small, a @ omega_small).conjugate() * a for a in hs_onb
    )
    rho = hermitian_part(rho)
    w = np.linalg.eigvalsh(rho)
    if w[0] <= 1e-12:
        raise ValueError(
            f"state is not faithful on the generated algebra "
            f"(density floor {w[0]:.3e}); cannot build a probability space"
        )
    rho = rho / np.trace(rho).real
    space = MatrixProbSpace(
        dim=r, state=FaithfulState(rho), subalgebra_basis=small_basis
    )
    return space, embed
