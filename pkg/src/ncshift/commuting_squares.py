"""Independence of subalgebras over a common corner: commuting squares.

Two subalgebras B, C containing A0 are A0-independent when E0(xy) =
E0(x)E0(y) for x in B, y in C.  This is equivalent to four further
conditions (pyramid identity, E_B(C) inside A0, E_B E_C = E0, and
commutation of E_B with E_C together with B & C = A0); the checker
evaluates all five and insists that they agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    as_operator,
    dagger,
    frobenius,
    matrix_from_json,
    matrix_to_json,
    span_contains,
    span_equal,
    span_intersection,
    span_orthonormal_basis,
    vec,
    unvec,
)
from .matrix_prob import (
    VALIDATION_TOL,
    DegenerateBasis,
    ExistenceFailure,
    FaithfulState,
    MatrixProbSpace,
    Superoperator,
    center_basis,
    commutant_basis,
    complete_star_algebra,
    conditional_expectation,
    factor_matrix_units,
    matrix_units,
    state_eval,
)

__all__ = [
    "DIM_CAP",
    "InconsistentReport",
    "NotAFactor",
    "SplitFailure",
    "SquareConfig",
    "SquareReport",
    "check_factorization",
    "check_all_equivalences",
    "tensor_lift",
    "tensor_split",
    "compose_shift_squares",
]

# Keeps superoperator matrices at 4096^2 and every check fast.
DIM_CAP = 64


class InconsistentReport(RuntimeError):
    """The five equivalent criteria disagree beyond tolerance.

    Mathematically impossible; signals numerical breakdown of the inputs.
    """


class NotAFactor(ValueError):
    """The corner algebra has a nontrivial center."""


class SplitFailure(RuntimeError):
    """Span dimensions refused the tensor splitting."""


@dataclass
class SquareConfig:
    """The quadruple (A, A0, B, C) with A0 contained in both B and C."""

    space: MatrixProbSpace
    a0_basis: list
    b_basis: list
    c_basis: list

    def __post_init__(self):
        d = self.space.dim
        if d > DIM_CAP:
            raise ValueError(f"dimension {d} exceeds cap {DIM_CAP}")
        self.a0_basis = complete_star_algebra(self.a0_basis, d)
        self.b_basis = complete_star_algebra(self.b_basis, d)
        self.c_basis = complete_star_algebra(self.c_basis, d)
        for x in self.a0_basis:
            if not (span_contains(self.b_basis, x) and span_contains(self.c_basis, x)):
                raise ValueError("A0 must be contained in both B and C")

    def expectations(self):
        """(E0, E_B, E_C); raises ExistenceFailure if any does not exist."""
        E0 = conditional_expectation(self.space, self.a0_basis, label="E0")
        EB = conditional_expectation(self.space, self.b_basis, label="EB")
        EC = conditional_expectation(self.space, self.c_basis, label="EC")
        return E0, EB, EC

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "a0_basis": [matrix_to_json(m) for m in self.a0_basis],
            "b_basis": [matrix_to_json(m) for m in self.b_basis],
            "c_basis": [matrix_to_json(m) for m in self.c_basis],
        }

    @staticmethod
    def from_json(obj) -> "SquareConfig":
        return SquareConfig(
            space=MatrixProbSpace.from_json(obj["space"]),
            a0_basis=[matrix_from_json(m) for m in obj["a0_basis"]],
            b_basis=[matrix_from_json(m) for m in obj["b_basis"]],
            c_basis=[matrix_from_json(m) for m in obj["c_basis"]],
        )


@dataclass
class SquareReport:
    """Residuals and verdicts for the five equivalent criteria."""

    factorization: bool
    pyramid: bool
    compression: bool
    product: bool
    commutation: bool
    residuals: dict = field(default_factory=dict)
    tol: float = VALIDATION_TOL
    # "algebra": full conditional-expectation route; "gns-l2": criteria
    # evaluated on GNS subspaces (scalar corner at truncation)
    mode: str = "algebra"

    @property
    def verdict(self) -> bool:
        return all(self.flags())

    def flags(self) -> tuple[bool, ...]:
        return (self.factorization, self.pyramid, self.compression,
                self.product, self.commutation)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "mode": self.mode,
            "criteria": {
                "factorization": self.factorization,
                "pyramid": self.pyramid,
                "compression": self.compression,
                "product": self.product,
                "commutation": self.commutation,
            },
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "tol": self.tol,
        }

    def table(self) -> str:
        rows = [
            ("E0(xy) = E0(x)E0(y)", self.factorization, "factorization"),
            ("E0(x1 y x2) = E0(x1 E0(y) x2)", self.pyramid, "pyramid"),
            ("E_B(C) in A0", self.compression, "compression"),
            ("E_B E_C = E0", self.product, "product"),
            ("[E_B, E_C] = 0 and B & C = A0", self.commutation, "commutation"),
        ]
        lines = [f"{'criterion':38s} {'ok':>5s} {'residual':>12s}"]
        for text, ok, key in rows:
            res = self.residuals.get(key, float("nan"))
            lines.append(f"{text:38s} {str(ok):>5s} {res:12.3e}")
        lines.append(f"verdict: {self.verdict}")
        return "\n".join(lines)


def check_factorization(cfg: SquareConfig, tol: float = VALIDATION_TOL):
    """Max residual of E0(xy) - E0(x)E0(y) over basis pairs."""
    E0, _, _ = cfg.expectations()
    res = _factorization_residual(cfg, E0)
    return res < tol, res


def _apply_stack(E: Superoperator, stack: np.ndarray) -> np.ndarray:
    """Apply a superoperator to a stack (..., d, d) of matrices."""
    d = E.dim
    shape = stack.shape
    flat = stack.reshape(-1, d, d)
    v = flat.transpose(0, 2, 1).reshape(-1, d * d)  # rows are column-stacked vecs
    w = v @ E.matrix.T
    return w.reshape(-1, d, d).transpose(0, 2, 1).reshape(shape)


def _max_frob(stack: np.ndarray) -> float:
    """Largest Frobenius norm over a stack (..., d, d) of matrices."""
    flat = stack.reshape(-1, stack.shape[-2] * stack.shape[-1])
    return float(np.sqrt((np.abs(flat) ** 2).sum(axis=1).max()))


def _factorization_residual(cfg, E0) -> float:
    B = np.stack(cfg.b_basis)
    C = np.stack(cfg.c_basis)
    xy = np.einsum("bij,cjk->bcik", B, C)
    lhs = _apply_stack(E0, xy)
    e0b = _apply_stack(E0, B)
    e0c = _apply_stack(E0, C)
    rhs = np.einsum("bij,cjk->bcik", e0b, e0c)
    return _max_frob(lhs - rhs)


def _pyramid_residual(cfg, E0) -> float:
    B = np.stack(cfg.b_basis)
    C = np.stack(cfg.c_basis)
    e0c = _apply_stack(E0, C)
    x1y = np.einsum("bij,cjk->bcik", B, C)
    x1ey = np.einsum("bij,cjk->bcik", B, e0c)
    lhs = _apply_stack(E0, np.einsum("bcij,Bjk->bcBik", x1y, B))
    rhs = _apply_stack(E0, np.einsum("bcij,Bjk->bcBik", x1ey, B))
    return _max_frob(lhs - rhs)


def _compression_residual(cfg, EB) -> float:
    """Distance of E_B(C-basis) from the span of A0."""
    onb = np.stack([vec(a) for a in span_orthonormal_basis(cfg.a0_basis)])
    C = np.stack(cfg.c_basis)
    d = C.shape[1]
    ebc = _apply_stack(EB, C).transpose(0, 2, 1).reshape(len(cfg.c_basis), d * d)
    proj = (ebc @ onb.conj().T) @ onb
    return float(np.linalg.norm(ebc - proj, axis=1).max())


def check_all_equivalences(cfg: SquareConfig, tol: float = VALIDATION_TOL) -> SquareReport:
    """Evaluate the five equivalent criteria and assert their agreement."""
    E0, EB, EC = cfg.expectations()

    res = {}
    res["factorization"] = _factorization_residual(cfg, E0)
    res["pyramid"] = _pyramid_residual(cfg, E0)
    res["compression"] = _compression_residual(cfg, EB)
    res["product"] = frobenius(EB.matrix @ EC.matrix - E0.matrix)
    res["commutation_maps"] = frobenius(EB.matrix @ EC.matrix - EC.matrix @ EB.matrix)

    inter = span_intersection(cfg.b_basis, cfg.c_basis, tol=1e-9)
    intersection_is_a0 = span_equal(inter, cfg.a0_basis, tol=1e-8) if inter else False
    res["intersection_dim_gap"] = abs(len(inter) - len(cfg.a0_basis))

    report = SquareReport(
        factorization=res["factorization"] < tol,
        pyramid=res["pyramid"] < tol,
        compression=res["compression"] < tol,
        product=res["product"] < tol,
        commutation=(res["commutation_maps"] < tol) and intersection_is_a0,
        residuals=res,
        tol=tol,
    )

    flags = report.flags()
    if any(flags) and not all(flags):
        # The criteria are equivalent, so a split decision is only acceptable
        # when some residual sits inside the tolerance band (an edge case);
        # a decisive split signals numerical breakdown, not mathematics.
        margins = [
            res["factorization"], res["pyramid"], res["compression"],
            res["product"], res["commutation_maps"],
        ]
        borderline = any(tol / 10 <= r <= tol * 10 for r in margins)
        if not borderline:
            raise InconsistentReport(
                f"criteria disagree with residuals {res}; numerical breakdown"
            )
    return report


def tensor_lift(inner: SquareConfig, amplifier: MatrixProbSpace) -> SquareConfig:
    """Lift a scalar-expected square along a tensor amplification.

    Inner square over C1 in (B, phi) becomes the square
    (B0 x B, phi0 x phi, B0 x B1, B0 x B2) over B0 x 1; the lifted square
    verifies true exactly when the inner one does.
    """
    if len(inner.a0_basis) != 1:
        raise ValueError("inner square must be scalar-expected (A0 = C1)")
    a, b = amplifier.dim, inner.space.dim
    if a * b > DIM_CAP:
        raise ValueError(f"lifted dimension {a * b} exceeds cap {DIM_CAP}")

    rho = np.kron(amplifier.rho, inner.space.rho)
    amp_units = matrix_units(a)
    eye_b = np.eye(b, dtype=complex)
    space = MatrixProbSpace(a * b, FaithfulState(rho))
    return SquareConfig(
        space=space,
        a0_basis=[np.kron(u, eye_b) for u in amp_units],
        b_basis=[np.kron(u, m) for u in amp_units for m in inner.b_basis],
        c_basis=[np.kron(u, m) for u in amp_units for m in inner.c_basis],
    )


def compose_shift_squares(cfg1: SquareConfig, cfg2: SquareConfig) -> SquareConfig:
    """Tensor composition of two squares; verdicts compose by conjunction."""
    d = cfg1.space.dim * cfg2.space.dim
    if d > DIM_CAP:
        raise ValueError(f"composite dimension {d} exceeds cap {DIM_CAP}")
    rho = np.kron(cfg1.space.rho, cfg2.space.rho)
    space = MatrixProbSpace(d, FaithfulState(rho))

    def tensor_bases(xs, ys):
        return [np.kron(x, y) for x in xs for y in ys]

    return SquareConfig(
        space=space,
        a0_basis=tensor_bases(cfg1.a0_basis, cfg2.a0_basis),
        b_basis=tensor_bases(cfg1.b_basis, cfg2.b_basis),
        c_basis=tensor_bases(cfg1.c_basis, cfg2.c_basis),
    )


# ---------------------------------------------------------------------------
# Tensor splitting over a full matrix corner
# ---------------------------------------------------------------------------

def tensor_split(space: MatrixProbSpace, a0_basis, tol: float = 1e-9):
    """Split A = M_n x B over a corner isomorphic to the full M_n.

    Checks that the corner algebra is a factor of dimension n^2, computes
    the relative commutant B, verifies that the two algebras span all of A,
    and returns (n, complement_space) with the state of the complement
    chosen so that the original state is the product of its restrictions.
    The splitting frame is canonical only up to unitaries on each factor,
    so the complement state is returned up to unitary equivalence.
    """
    d = space.dim
    basis = complete_star_algebra(a0_basis, d)

    center = center_basis(basis, tol)
    if len(center) != 1:
        raise NotAFactor(f"corner algebra has center of dimension {len(center)}")
    n2 = len(basis)
    n = round(np.sqrt(n2))
    if n * n != n2:
        raise SplitFailure(f"corner dimension {n2} is not a perfect square")
    if d % n != 0:
        raise SplitFailure(f"carrier dimension {d} not divisible by factor size {n}")
    m = d // n

    try:
        units = factor_matrix_units(basis, n, m, tol)
    except ValueError as exc:
        raise SplitFailure(str(exc)) from exc

    comm = commutant_basis(basis, d, tol)
    if len(comm) != m * m:
        raise SplitFailure(
            f"relative commutant has dimension {len(comm)}, expected {m * m}"
        )
    products = [x @ y for x in basis for y in comm]
    if len(span_orthonormal_basis(products, 1e-10)) != d * d:
        raise SplitFailure("corner and commutant do not span the full algebra")

    # unitary W: C^n x C^m -> C^d built from the matrix units
    w_p, u_p = np.linalg.eigh(units[(0, 0)])
    idx = np.argsort(w_p)[::-1][:m]
    if w_p[idx[-1]] < 0.5:
        raise SplitFailure("minimal projection rank deficient")
    zeta = u_p[:, idx]
    W = np.zeros((d, n * m), dtype=complex)
    for i in range(n):
        e_i1 = units[(i, 0)]
        for a in range(m):
            W[:, i * m + a] = e_i1 @ zeta[:, a]
    if frobenius(dagger(W) @ W - np.eye(n * m)) > 1e-8:
        raise SplitFailure("matrix-unit frame is not orthonormal")

    rho_w = dagger(W) @ space.rho @ W
    rho_big = rho_w.reshape(n, m, n, m)
    rho_corner = np.einsum("iaja->ij", rho_big)
    rho_comp = np.einsum("iaib->ab", rho_big)

    # product-state reconstruction check: psi = psi|A0 x phi
    recon = np.kron(rho_corner, rho_comp)
    gap = frobenius(recon - rho_w)
    if gap > tol:
        raise SplitFailure(
            f"state does not factor over the splitting (residual {gap:.3e})"
        )

    complement = MatrixProbSpace(m, FaithfulState(rho_comp))
    return n, complement
