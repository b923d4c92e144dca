"""Truncated deformed Fock representations.

Three concrete families generate every example shift used downstream:

* q-deformed full Fock spaces with q-Gaussian fields (free case at q = 0),
* CAR algebras via Jordan-Wigner, plainly or doubled with a quasi-free
  state vector of Araki-Woods type,
* doubled bosonic Fock spaces carrying quasi-free CCR annihilators.

Truncation is by total particle number N, with exactness bookkeeping:
vacuum moments of words no longer than 2N are exact, because every factor
changes the particle number by at most one and a contribution exceeding
level N could never return to the vacuum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations, product

import numpy as np

from .linalg import as_operator, dagger, frobenius, vec
from .matrix_prob import (
    complete_star_algebra,
    factor_compress,
    space_from_vector_state,
)

__all__ = [
    "GramDegenerate",
    "WordTooLong",
    "QFockRep",
    "CARRep",
    "CCRQuasiFreeRep",
    "build_qfock",
    "gaussian_field",
    "vacuum_moment",
    "pair_partition_oracle",
    "second_quantization_gamma",
    "gamma_state_map",
    "build_car",
    "build_ccr_quasifree",
    "check_enriched_independence_fock",
]

DIM_LIMIT = 4096


class GramDegenerate(RuntimeError):
    """A level Gram matrix lost positive definiteness."""


class WordTooLong(ValueError):
    """Moment exactness cannot be guaranteed beyond word length 2N."""


# ---------------------------------------------------------------------------
# q-Fock
# ---------------------------------------------------------------------------

def _q_factorial(q: float, n: int) -> float:
    out = 1.0
    for k in range(1, n + 1):
        out *= sum(q ** j for j in range(k))
    return out


def _inversions(perm) -> int:
    n = len(perm)
    return sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])


def _level_gram(q: float, d: int, n: int) -> np.ndarray:
    """P_q^{(n)} = sum over permutations of q^inversions * U_pi."""
    size = d ** n
    if n <= 1 or q == 0.0:
        return np.eye(size) * (1.0 if n == 0 or d > 0 else 1.0)
    if d == 1:
        return np.array([[_q_factorial(q, n)]])
    if n > 9:
        raise ValueError(f"level {n} permutation sum not tractable for d > 1")
    gram = np.zeros((size, size))
    words = list(product(range(d), repeat=n))
    index = {w: i for i, w in enumerate(words)}
    for perm in permutations(range(n)):
        w_q = q ** _inversions(perm)
        for w in words:
            permuted = tuple(w[perm[i]] for i in range(n))
            gram[index[permuted], index[w]] += w_q
    return gram


@dataclass
class QFockRep:
    """Truncated q-Fock space over C^d with particle cutoff N.

    Operators act on the plain (unorthogonalized) word basis; the q-inner
    product is carried by the blockwise Gram matrix, and adjoints are taken
    as gram^{-1} X^dag gram, which keeps creation operators sparse prepend
    maps.  The q-relation holds exactly on levels below the cutoff; the
    norm of its defect on the boundary level is recorded, never hidden.
    """

    q: float
    d: int
    cutoff: int
    dim: int
    levels: np.ndarray           # level of each basis word
    creators: list               # d creation matrices
    gram: np.ndarray             # block diagonal q-Gram
    gram_inv: np.ndarray
    level_grams: list
    boundary_defect: float = 0.0

    @property
    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v

    def create(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=complex).reshape(self.d)
        return sum(f[k] * self.creators[k] for k in range(self.d))

    def qadjoint(self, x) -> np.ndarray:
        return self.gram_inv @ dagger(x) @ self.gram

    def annihilate(self, f) -> np.ndarray:
        """q-adjoint of create(f); antilinear in f."""
        return self.qadjoint(self.create(f))

    def q_inner(self, u, v) -> complex:
        return complex(np.asarray(u).conj() @ self.gram @ np.asarray(v))

    def field(self, f) -> np.ndarray:
        return gaussian_field(self, f)

    def level_projector(self, max_level: int) -> np.ndarray:
        return np.diag((self.levels <= max_level).astype(float))


def build_qfock(q: float, d: int, N: int) -> QFockRep:
    """Construct the truncated q-Fock representation.

    Verifies Gram positivity on every level (a guard against q near +-1)
    and the q-relation a(e_i) a*(e_j) - q a*(e_j) a(e_i) = delta_ij below
    the cutoff boundary.
    """
    if not (-1.0 < q < 1.0):
        raise ValueError("q must lie in (-1, 1)")
    if d < 1 or N < 1:
        raise ValueError("need d >= 1 and N >= 1")
    dim = sum(d ** n for n in range(N + 1))
    if dim > DIM_LIMIT:
        raise ValueError(f"truncated dimension {dim} exceeds {DIM_LIMIT}")

    # word enumeration, level by level
    words = [()]
    for n in range(1, N + 1):
        words.extend(product(range(d), repeat=n))
    index = {w: i for i, w in enumerate(words)}
    levels = np.array([len(w) for w in words])

    creators = []
    for k in range(d):
        a = np.zeros((dim, dim))
        for w, i in index.items():
            if len(w) < N:
                a[index[(k,) + w], i] = 1.0
        creators.append(a.astype(complex))

    level_grams = []
    blocks = []
    for n in range(N + 1):
        g = _level_gram(q, d, n)
        w = np.linalg.eigvalsh(0.5 * (g + g.T))
        if w[0] < 1e-12:
            raise GramDegenerate(
                f"level-{n} Gram has eigenvalue {w[0]:.3e}; q too close to +-1"
            )
        level_grams.append(g)
        blocks.append(g)
    gram = _block_diag(blocks)
    gram_inv = _block_diag([np.linalg.inv(b) for b in blocks])

    rep = QFockRep(
        q=q, d=d, cutoff=N, dim=dim, levels=levels,
        creators=creators, gram=gram, gram_inv=gram_inv,
        level_grams=level_grams,
    )
    _verify_q_relations(rep)
    return rep


def _block_diag(blocks) -> np.ndarray:
    dim = sum(b.shape[0] for b in blocks)
    out = np.zeros((dim, dim))
    at = 0
    for b in blocks:
        k = b.shape[0]
        out[at:at + k, at:at + k] = b
        at += k
    return out


def _verify_q_relations(rep: QFockRep, tol: float = 1e-10):
    below = rep.level_projector(rep.cutoff - 1)
    eye = np.eye(rep.dim)
    worst_below = 0.0
    worst_boundary = 0.0
    for i in range(rep.d):
        ai = rep.qadjoint(rep.creators[i])
        for j in range(rep.d):
            rel = ai @ rep.creators[j] - rep.q * rep.creators[j] @ ai
            rel -= (1.0 if i == j else 0.0) * eye
            worst_below = max(worst_below, frobenius(rel @ below))
            worst_boundary = max(worst_boundary, frobenius(rel @ (eye - below)))
    if worst_below > tol:
        raise GramDegenerate(
            f"q-relation residual {worst_below:.3e} below the cutoff boundary"
        )
    rep.boundary_defect = worst_boundary


def gaussian_field(rep: QFockRep, f) -> np.ndarray:
    """q-Gaussian field a(f) + a*(f); requires a real direction vector."""
    f = np.asarray(f, dtype=complex).reshape(rep.d)
    if np.abs(f.imag).max() > 0:
        raise ValueError("q-Gaussian fields are generated by real vectors")
    c = rep.create(f)
    return c + rep.qadjoint(c)


def vacuum_moment(rep: QFockRep, word) -> complex:
    """Vacuum expectation of a product of field/creation/annihilation factors.

    Word entries are pairs (kind, f) with kind one of 'field', 'create',
    'annihilate'.  Exact whenever the word has at most 2N factors.
    """
    if len(word) > 2 * rep.cutoff:
        raise WordTooLong(
            f"word of length {len(word)} exceeds exactness budget {2 * rep.cutoff}"
        )
    v = rep.vacuum
    for kind, f in reversed(list(word)):
        if kind == "field":
            op = gaussian_field(rep, f)
        elif kind == "create":
            op = rep.create(f)
        elif kind == "annihilate":
            op = rep.annihilate(f)
        else:
            raise ValueError(f"unknown word factor kind {kind!r}")
        v = op @ v
    return complex(v[0])


def _pair_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k in range(len(rest)):
        pair = (first, rest[k])
        remaining = rest[:k] + rest[k + 1:]
        for tail in _pair_partitions(remaining):
            yield [pair] + tail


def pair_partition_oracle(q: float, n: int, covariances) -> complex:
    """Independent oracle for q-Gaussian moments.

    Sum over pair partitions of {0..n-1} of q^crossings times the product
    of pair covariances; zero for odd n.  ``covariances`` is an n x n
    matrix (or callable) giving cov(i, j).
    """
    if n % 2 == 1:
        return 0.0 + 0.0j
    if callable(covariances):
        cov = covariances
    else:
        mat = np.asarray(covariances)
        cov = lambda i, j: mat[i, j]
    total = 0.0 + 0.0j
    for pairing in _pair_partitions(list(range(n))):
        crossings = 0
        for (a, b) in pairing:
            for (c, d) in pairing:
                if a < c < b < d:
                    crossings += 1
        weight = q ** crossings if crossings else 1.0
        prod = 1.0 + 0.0j
        for (a, b) in pairing:
            prod *= cov(a, b)
        total += weight * prod
    return total


def second_quantization_gamma(rep: QFockRep, T) -> np.ndarray:
    """Second quantization acting as T tensored n times on level n."""
    T = as_operator(T, rep.d)
    if np.linalg.norm(T, 2) > 1.0 + 1e-12:
        raise ValueError("second quantization requires a contraction")
    blocks = [np.eye(1, dtype=complex)]
    t_n = np.eye(1, dtype=complex)
    for _ in range(rep.cutoff):
        t_n = np.kron(t_n, T)
        blocks.append(t_n)
    out = np.zeros((rep.dim, rep.dim), dtype=complex)
    at = 0
    for b in blocks:
        k = b.shape[0]
        out[at:at + k, at:at + k] = b
        at += k
    return out


def _field_words(rep: QFockRep):
    """One field word per Fock basis vector; their vacuum vectors form a
    triangular (hence invertible) frame."""
    fields = [gaussian_field(rep, np.eye(rep.d)[k]) for k in range(rep.d)]
    words = [np.eye(rep.dim, dtype=complex)]
    frontier = [np.eye(rep.dim, dtype=complex)]
    for _ in range(rep.cutoff):
        frontier = [f @ w for f in fields for w in frontier]
        words.extend(frontier)
    return words


def gamma_state_map(rep: QFockRep, x, word_basis=None) -> np.ndarray:
    """Operator-level second quantization of multiplication by q.

    Maps an element x of the truncated algebra to the field polynomial y
    with y.vacuum = Gamma_q(q 1)(x.vacuum); this realizes the compression
    identity E0(Phi(g) x Phi(g)) for a fresh unit direction g.  The
    reconstruction frame of field words is triangular against the word
    basis, so y is canonical.  In the free case the map collapses to
    x -> tau(x) 1.
    """
    x = as_operator(x, rep.dim)
    if word_basis is None:
        word_basis = _field_words(rep)
    target = second_quantization_gamma(rep, rep.q * np.eye(rep.d)) @ (x @ rep.vacuum)
    frame = np.stack([b @ rep.vacuum for b in word_basis], axis=1)
    coeff, *_ = np.linalg.lstsq(frame, target, rcond=None)
    resid = np.linalg.norm(frame @ coeff - target)
    if resid > 1e-8 * max(1.0, np.linalg.norm(target)):
        raise ValueError(
            f"Gamma image not representable in the algebra (residual {resid:.3e})"
        )
    return sum(c * b for c, b in zip(coeff, word_basis))


# ---------------------------------------------------------------------------
# CAR via Jordan-Wigner
# ---------------------------------------------------------------------------

def _jordan_wigner(m: int) -> list[np.ndarray]:
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2, dtype=complex)
    ops = []
    for i in range(m):
        factors = [sz] * i + [lower] + [eye] * (m - i - 1)
        a = factors[0]
        for fmat in factors[1:]:
            a = np.kron(a, fmat)
        ops.append(a)
    return ops


@dataclass
class CARRep:
    """CAR algebra of m modes; optionally quasi-free via Araki-Woods doubling.

    With lam in (0, 1) the modes live on 2m Jordan-Wigner modes as
    sqrt(1-lam) c_i + sqrt(lam) c*_{m+i} and the state vector is the doubled
    vacuum, which makes psi(a*(f) a(g)) = lam <g, f> exact and the state
    faithful on the generated algebra.
    """

    modes: int
    lam: float | None
    dim: int
    annihilators: list
    state_vector: np.ndarray

    def annihilate(self, f) -> np.ndarray:
        """a(f) = sum conj(f_i) a_i; antilinear in f."""
        f = np.asarray(f, dtype=complex).reshape(self.modes)
        return sum(f[k].conjugate() * self.annihilators[k] for k in range(self.modes))

    def create(self, f) -> np.ndarray:
        return dagger(self.annihilate(f))

    def state(self, x) -> complex:
        v = self.state_vector
        return complex(v.conj() @ as_operator(x, self.dim) @ v)

    def anticommutator_residuals(self) -> tuple[float, float]:
        """(max ||{a_i,a_j}||, max ||{a_i,a_j*} - delta_ij||)."""
        worst_aa = 0.0
        worst_astar = 0.0
        eye = np.eye(self.dim)
        for i, ai in enumerate(self.annihilators):
            for j, aj in enumerate(self.annihilators):
                worst_aa = max(worst_aa, frobenius(ai @ aj + aj @ ai))
                rel = ai @ dagger(aj) + dagger(aj) @ ai - (i == j) * eye
                worst_astar = max(worst_astar, frobenius(rel))
        return worst_aa, worst_astar


def build_car(m: int, lam: float | None = None) -> CARRep:
    """Jordan-Wigner CAR representation, doubled when lam is given."""
    if lam is None:
        if m > 6:
            raise ValueError("plain CAR limited to m <= 6 (dim 64)")
        ops = _jordan_wigner(m)
        dim = 2 ** m
        vac = np.zeros(dim, dtype=complex)
        vac[0] = 1.0
        rep = CARRep(modes=m, lam=None, dim=dim, annihilators=ops,
                     state_vector=vac)
    else:
        if not (0.0 < lam < 1.0):
            raise ValueError("quasi-free parameter must satisfy 0 < lam < 1")
        if m > 3:
            raise ValueError("doubled CAR limited to m <= 3 (dim 64)")
        big = _jordan_wigner(2 * m)
        ops = [
            np.sqrt(1.0 - lam) * big[i] + np.sqrt(lam) * dagger(big[m + i])
            for i in range(m)
        ]
        dim = 4 ** m
        vac = np.zeros(dim, dtype=complex)
        vac[0] = 1.0
        rep = CARRep(modes=m, lam=lam, dim=dim, annihilators=ops,
                     state_vector=vac)

    worst_aa, worst_astar = rep.anticommutator_residuals()
    if max(worst_aa, worst_astar) > 1e-12:
        raise RuntimeError(
            f"CAR residuals {worst_aa:.3e}, {worst_astar:.3e} out of tolerance"
        )
    if lam is not None:
        worst = 0.0
        for i in range(m):
            for j in range(m):
                got = rep.state(dagger(rep.annihilators[i]) @ rep.annihilators[j])
                worst = max(worst, abs(got - (lam if i == j else 0.0)))
        if worst > 1e-10:
            raise RuntimeError(f"quasi-free two-point residual {worst:.3e}")
    return rep


# ---------------------------------------------------------------------------
# Quasi-free CCR on doubled truncated symmetric Fock space
# ---------------------------------------------------------------------------

def _bosonic_ops(d: int, N: int):
    """Occupation basis and creation operators of truncated symmetric Fock."""
    states = []

    def fill(prefix, remaining, slots):
        if slots == 0:
            states.append(tuple(prefix))
            return
        for k in range(remaining + 1):
            fill(prefix + [k], remaining - k, slots - 1)

    fill([], N, d)
    states.sort(key=lambda s: (sum(s), s))
    index = {s: i for i, s in enumerate(states)}
    dim = len(states)
    creators = []
    for k in range(d):
        a = np.zeros((dim, dim))
        for s, i in index.items():
            if sum(s) < N:
                up = list(s)
                up[k] += 1
                a[index[tuple(up)], i] = np.sqrt(up[k])
        creators.append(a.astype(complex))
    return states, creators


@dataclass
class CCRQuasiFreeRep:
    """Quasi-free CCR annihilators on a doubled truncated symmetric Fock space.

    a_lam(f) = sqrt(lam+1) a(f) x 1 + sqrt(lam) 1 x a*(Jf), built on
    F_+ x F_+ with both factors truncated at total particle number N.
    The optional squeeze parameter adds an anomalous two-point component
    c <f, g> for real directions while preserving the CCR.
    """

    lam: float
    d: int
    cutoff: int
    dim: int
    squeeze: float
    _first_ann: list = field(repr=False, default_factory=list)
    _second_ann: list = field(repr=False, default_factory=list)

    @property
    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v

    def _coeffs(self):
        lam, c = self.lam, self.squeeze
        p = np.sqrt(lam + 1.0)
        u = np.sqrt(lam)
        r = c / (p + u) if c else 0.0
        return p, r, r, u  # a(f) x 1, a*(f) x 1, 1 x a(f), 1 x a*(Jf)

    def annihilate(self, f) -> np.ndarray:
        """Quasi-free annihilator; antilinear in f (squeeze needs real f)."""
        f = np.asarray(f, dtype=complex).reshape(self.d)
        p, r, s, u = self._coeffs()
        if (r or s) and np.abs(f.imag).max() > 0:
            raise ValueError("squeezed annihilators are defined for real vectors")
        a1 = sum(f[k].conjugate() * self._first_ann[k] for k in range(self.d))
        a2 = sum(f[k].conjugate() * self._second_ann[k] for k in range(self.d))
        out = p * a1 + u * dagger(a2)
        if r:
            out = out + r * dagger(a1) + s * a2
        return out

    def create(self, f) -> np.ndarray:
        return dagger(self.annihilate(f))

    def state(self, x) -> complex:
        v = self.vacuum
        return complex(v.conj() @ as_operator(x, self.dim) @ v)

    def truncation_bound(self, f) -> float:
        """Operator norm of the cutoff-boundary block lost by truncation."""
        f = np.asarray(f, dtype=complex).reshape(self.d)
        norm_f = float(np.linalg.norm(f))
        p, r, s, u = self._coeffs()
        lost_creation = np.sqrt(self.cutoff + 1.0) * norm_f
        return (abs(u) + abs(r)) * lost_creation


def build_ccr_quasifree(lam: float, d: int, N: int,
                        squeeze: float = 0.0) -> CCRQuasiFreeRep:
    """Doubled truncated symmetric Fock carrying quasi-free annihilators."""
    if lam <= 0:
        raise ValueError("quasi-free parameter must be positive")
    if squeeze and lam <= np.sqrt(squeeze ** 2 + 0.25) - 0.5:
        raise ValueError("squeeze parameter violates the faithfulness bound")
    _, creators = _bosonic_ops(d, N)
    small = creators[0].shape[0]
    dim = small * small
    if dim > DIM_LIMIT:
        raise ValueError(f"doubled dimension {dim} exceeds {DIM_LIMIT}")
    eye = np.eye(small)
    first_ann = [np.kron(dagger(c), eye) for c in creators]
    second_ann = [np.kron(eye, dagger(c)) for c in creators]
    return CCRQuasiFreeRep(
        lam=lam, d=d, cutoff=N, dim=dim, squeeze=squeeze,
        _first_ann=first_ann, _second_ann=second_ann,
    )


# ---------------------------------------------------------------------------
# Enriched independence, delegated to the commuting-square checker
# ---------------------------------------------------------------------------

def _generators_for_subspace(rep, vecs):
    gens = []
    for f in vecs:
        if isinstance(rep, QFockRep):
            gens.append(gaussian_field(rep, f))
        elif isinstance(rep, CARRep):
            gens.append(rep.annihilate(f))
        else:
            raise TypeError("enriched independence needs a QFockRep or CARRep")
    return gens


def check_enriched_independence_fock(rep, K0, K1, K2, tol: float = 1e-9):
    """Verify that alg(K0, K1) and alg(K0, K2) are alg(K0)-independent.

    Materializes the three generated algebras inside the representation,
    compresses the vacuum (or quasi-free) state to a faithful matrix
    probability space, and delegates to the commuting-square checker.
    If the state fails faithfulness on the generated algebra (possible at
    truncation) and the corner is scalar, the five criteria are evaluated
    instead on the GNS subspaces spanned by in-budget words, where moments
    are exact; otherwise the configuration is rejected.
    """
    from .commuting_squares import SquareConfig, check_all_equivalences

    K0 = [np.asarray(f, dtype=complex) for f in (K0 or [])]
    K1 = [np.asarray(f, dtype=complex) for f in K1]
    K2 = [np.asarray(f, dtype=complex) for f in K2]
    for i, a in enumerate((K0, K1, K2)):
        for j, b in enumerate((K0, K1, K2)):
            if i < j:
                for fa in a:
                    for fb in b:
                        if abs(np.vdot(fa, fb)) > 1e-12:
                            raise ValueError("subspaces must be mutually orthogonal")

    gens0 = _generators_for_subspace(rep, K0)
    gens1 = _generators_for_subspace(rep, K1)
    gens2 = _generators_for_subspace(rep, K2)
    if isinstance(rep, CARRep):
        omega = rep.state_vector
    else:
        omega = rep.vacuum
    big = gens1[0].shape[0]
    eye = np.eye(big, dtype=complex)

    basis = complete_star_algebra(gens0 + gens1 + gens2, big)
    try:
        # a factor algebra compresses onto its own matrix size, which keeps
        # the conditional-expectation machinery small (CAR algebras always
        # land here); general algebras go through the cyclic subspace
        space, embed = factor_compress(basis, omega, completed=True)
    except ValueError:
        try:
            space, embed = space_from_vector_state(basis, omega, completed=True)
        except ValueError:
            if gens0:
                raise ValueError(
                    "state not faithful on the generated algebra at this "
                    "truncation; operator-expected configuration rejected"
                )
            return _scalar_gns_square(rep, gens1, gens2, omega, tol)

    cfg = SquareConfig(
        space=space,
        a0_basis=[embed(g) for g in gens0] + [embed(eye)],
        b_basis=[embed(g) for g in gens0 + gens1],
        c_basis=[embed(g) for g in gens0 + gens2],
    )
    return check_all_equivalences(cfg, tol)


def _scalar_gns_square(rep, gens1, gens2, omega, tol):
    """Five criteria on GNS subspaces for a scalar corner, exact in budget.

    Words are kept short enough that their vacuum vectors and the moments
    of their products stay in the truncation-exact regime.
    """
    from .commuting_squares import SquareReport

    budget = rep.cutoff if isinstance(rep, QFockRep) else rep.modes

    def words(gens, max_len):
        out = [np.eye(gens[0].shape[0], dtype=complex)]
        frontier = [np.eye(gens[0].shape[0], dtype=complex)]
        for _ in range(max_len):
            frontier = [g @ w for g in gens for w in frontier]
            out.extend(frontier)
        return out

    def moment(x):
        return complex(omega.conj() @ x @ omega)

    wb = words(gens1, budget)
    wc = words(gens2, budget)
    short_b = words(gens1, max(1, (2 * budget) // 3))
    short_c = words(gens2, max(1, (2 * budget) // 3))

    res = {}
    res["factorization"] = max(
        abs(moment(x @ y) - moment(x) * moment(y)) for x in wb for y in wc
    )
    res["pyramid"] = max(
        abs(moment(x1 @ y @ x2) - moment(y) * moment(x1 @ x2))
        for x1 in short_b for y in short_c for x2 in short_b
    )

    pb = _subspace_projector([w @ omega for w in wb])
    pc = _subspace_projector([w @ omega for w in wc])
    p0 = np.outer(omega, omega.conj())
    res["compression"] = max(
        float(np.linalg.norm(pb @ (y @ omega) - moment(y) * omega)) for y in wc
    )
    res["product"] = frobenius(pb @ pc - p0)
    res["commutation_maps"] = frobenius(pb @ pc - pc @ pb)
    overlap = frobenius(pb @ pc @ pb - p0)
    intersection_trivial = overlap < tol
    res["intersection_dim_gap"] = 0.0 if intersection_trivial else 1.0

    return SquareReport(
        factorization=res["factorization"] < tol,
        pyramid=res["pyramid"] < tol,
        compression=res["compression"] < tol,
        product=res["product"] < tol,
        commutation=(res["commutation_maps"] < tol) and intersection_trivial,
        residuals=res,
        tol=tol,
        mode="gns-l2",
    )


def _subspace_projector(vectors) -> np.ndarray:
    frame = np.stack(vectors, axis=1)
    u, s, _ = np.linalg.svd(frame, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * max(1.0, s[0]) * frame.shape[1]))
    basis = u[:, :rank]
    return basis @ dagger(basis)
