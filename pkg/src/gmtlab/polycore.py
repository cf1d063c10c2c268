"""Sparse multivariate polynomials and constant-coefficient elliptic matrices.

Polynomials are stored as a sparse map from exponent multi-indices to float
coefficients over variables (x, y, z, w).  On top of that this module provides
the second-order symbol sum_ij a_ij d_i d_j, bases of homogeneous polynomials
annihilated by it, homogeneous decompositions, and the symmetric square root
S = sqrt((A + A^T)/2) used to straighten a constant-coefficient operator into
the Laplacian.

Scope is deliberately desk-scale: ambient dimension <= 4 and degree <= 8.
"""

from __future__ import annotations

import ast
import json
import math
import re
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

MAX_DIM = 4
MAX_DEGREE = 8

VAR_NAMES = "xyzw"

# Coefficients smaller than this fraction of the largest are dropped when a
# composition or product is renormalized.
PRUNE_REL = 1e-14


def _check_alpha(alpha, dim):
    t = tuple(int(a) for a in alpha)
    if len(t) != dim:
        raise ValueError(f"multi-index {t} has length {len(t)}, expected {dim}")
    if any(a < 0 for a in t):
        raise ValueError(f"multi-index {t} has negative exponents")
    return t


class Polynomial:
    """Sparse polynomial: dict of exponent tuples -> nonzero float coefficients."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: dict | None = None):
        if not (1 <= dim <= MAX_DIM):
            raise ValueError(f"dim must be in [1, {MAX_DIM}], got {dim}")
        self.dim = int(dim)
        clean: dict[tuple, float] = {}
        for alpha, c in (terms or {}).items():
            a = _check_alpha(alpha, self.dim)
            c = float(c)
            if c != 0.0:
                clean[a] = clean.get(a, 0.0) + c
                if clean[a] == 0.0:
                    del clean[a]
        self.terms = clean
        if self.degree() > MAX_DEGREE:
            raise ValueError(f"degree {self.degree()} exceeds cap {MAX_DEGREE}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "Polynomial":
        return cls(dim, {})

    @classmethod
    def constant(cls, dim: int, c: float) -> "Polynomial":
        return cls(dim, {(0,) * dim: c})

    @classmethod
    def monomial(cls, dim: int, alpha, c: float = 1.0) -> "Polynomial":
        return cls(dim, {tuple(alpha): c})

    @classmethod
    def variable(cls, dim: int, i: int) -> "Polynomial":
        alpha = [0] * dim
        alpha[i] = 1
        return cls(dim, {tuple(alpha): 1.0})

    # -- basic queries ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Max total degree of a stored term; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(a) for a in self.terms)

    def lowest_degree(self) -> int:
        if not self.terms:
            return -1
        return min(sum(a) for a in self.terms)

    def is_homogeneous(self) -> bool:
        degs = {sum(a) for a in self.terms}
        return len(degs) <= 1

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def sorted_terms(self) -> list[tuple[tuple, float]]:
        """Terms in a canonical order: by degree, then lexicographic index."""
        return sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]))

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check_same_dim(other)
        t = dict(self.terms)
        for a, c in other.terms.items():
            t[a] = t.get(a, 0.0) + c
        return Polynomial(self.dim, t)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.dim, {a: -c for a, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Polynomial(self.dim, {a: c * other for a, c in self.terms.items()})
        self._check_same_dim(other)
        t: dict[tuple, float] = {}
        for a1, c1 in self.terms.items():
            for a2, c2 in other.terms.items():
                a = tuple(i + j for i, j in zip(a1, a2))
                t[a] = t.get(a, 0.0) + c1 * c2
        return Polynomial(self.dim, t)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "Polynomial":
        if e < 0 or e != int(e):
            raise ValueError("polynomial powers must be nonnegative integers")
        out = Polynomial.constant(self.dim, 1.0)
        base = self
        e = int(e)
        while e:
            if e & 1:
                out = out * base
            e >>= 1
            if e:
                base = base * base
        return out

    def _check_same_dim(self, other: "Polynomial") -> None:
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def prune(self, rel: float = PRUNE_REL) -> "Polynomial":
        """Drop coefficients below `rel` times the largest magnitude."""
        m = self.max_abs_coeff()
        if m == 0.0:
            return Polynomial.zero(self.dim)
        return Polynomial(
            self.dim, {a: c for a, c in self.terms.items() if abs(c) >= rel * m}
        )

    # -- calculus ------------------------------------------------------------

    def partial(self, i: int) -> "Polynomial":
        """Partial derivative with respect to variable i."""
        t: dict[tuple, float] = {}
        for a, c in self.terms.items():
            if a[i] > 0:
                b = list(a)
                b[i] -= 1
                t[tuple(b)] = t.get(tuple(b), 0.0) + c * a[i]
        return Polynomial(self.dim, t)

    def gradient(self) -> list["Polynomial"]:
        return [self.partial(i) for i in range(self.dim)]

    # -- evaluation ----------------------------------------------------------

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        """Evaluate at an (m, dim) array of points (or a single point)."""
        pts = np.asarray(pts, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        if pts.shape[1] != self.dim:
            raise ValueError(f"points have dim {pts.shape[1]}, expected {self.dim}")
        out = np.zeros(pts.shape[0])
        # cache per-variable integer powers so repeated exponents are cheap
        pows: list[dict[int, np.ndarray]] = [dict() for _ in range(self.dim)]
        for a, c in self.terms.items():
            term = np.full(pts.shape[0], c)
            for i, e in enumerate(a):
                if e == 0:
                    continue
                p = pows[i].get(e)
                if p is None:
                    p = pts[:, i] ** e
                    pows[i][e] = p
                term = term * p
            out += term
        return out[0] if single else out

    def grad_at(self, pts: np.ndarray) -> np.ndarray:
        """Gradient at an (m, dim) array; returns (m, dim)."""
        pts = np.asarray(pts, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        g = np.stack([self.partial(i)(pts) for i in range(self.dim)], axis=1)
        return g[0] if single else g

    # -- structure maps --------------------------------------------------------

    def compose_linear(self, m: np.ndarray) -> "Polynomial":
        """Return p(M y): substitute x_i = sum_j M[i, j] y_j and expand.

        Expansion is exact floating-point multinomial arithmetic; the result
        is pruned at PRUNE_REL of the largest coefficient to keep the sparse
        map stable.
        """
        m = np.asarray(m, dtype=float)
        if m.shape != (self.dim, self.dim):
            raise ValueError(f"matrix shape {m.shape} does not match dim {self.dim}")
        lin = [
            Polynomial(self.dim, {tuple(int(k == j) for k in range(self.dim)): m[i, j]
                                  for j in range(self.dim) if m[i, j] != 0.0})
            for i in range(self.dim)
        ]
        power_cache: dict[tuple[int, int], Polynomial] = {}

        def lp(i: int, e: int) -> Polynomial:
            key = (i, e)
            if key not in power_cache:
                power_cache[key] = lin[i] ** e
            return power_cache[key]

        out = Polynomial.zero(self.dim)
        for a, c in self.terms.items():
            term = Polynomial.constant(self.dim, c)
            for i, e in enumerate(a):
                if e:
                    term = term * lp(i, e)
            out = out + term
        return out.prune()

    def dilate(self, r: float) -> "Polynomial":
        """Return p(r x): each coefficient scales by r**degree(term)."""
        return Polynomial(
            self.dim, {a: c * float(r) ** sum(a) for a, c in self.terms.items()}
        )

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [
                {"alpha": list(a), "c": c} for a, c in self.sorted_terms()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d: dict) -> "Polynomial":
        return cls(int(d["dim"]), {tuple(t["alpha"]): float(t["c"]) for t in d["terms"]})

    @classmethod
    def from_json(cls, s: str) -> "Polynomial":
        return cls.from_json_dict(json.loads(s))

    # -- display ---------------------------------------------------------------

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for a, c in self.sorted_terms():
            mono = "*".join(
                (VAR_NAMES[i] if e == 1 else f"{VAR_NAMES[i]}^{e}")
                for i, e in enumerate(a) if e
            )
            if not mono:
                bits.append(f"{c:g}")
            elif c == 1.0:
                bits.append(mono)
            elif c == -1.0:
                bits.append(f"-{mono}")
            else:
                bits.append(f"{c:g}*{mono}")
        return " + ".join(bits).replace("+ -", "- ")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.dim == other.dim
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.dim, tuple(self.sorted_terms())))


def poly_allclose(p: Polynomial, q: Polynomial, tol: float = 1e-10) -> bool:
    """Coefficientwise comparison with absolute tolerance scaled by max coeff."""
    if p.dim != q.dim:
        return False
    scale = max(p.max_abs_coeff(), q.max_abs_coeff(), 1.0)
    keys = set(p.terms) | set(q.terms)
    return all(abs(p.terms.get(a, 0.0) - q.terms.get(a, 0.0)) <= tol * scale for a in keys)


# ---------------------------------------------------------------------------
# command-line polynomial grammar
# ---------------------------------------------------------------------------

def parse_polynomial(text: str, dim: int | None = None) -> Polynomial:
    """Parse an infix expression over x, y, z, w into a Polynomial.

    Supports +, -, *, parentheses, integer powers via ^ or **, numeric
    literals, and juxtaposition for products ("xy", "2x", "3(x+y)").
    If `dim` is omitted it is inferred as (highest variable index used) + 1,
    with a floor of 2.
    """
    src = text.replace("^", "**")
    # implicit multiplication: digit/)-before-variable/(, variable-before-
    # digit/(, and whitespace-separated variables; scientific notation is
    # unaffected because 'e' is not a variable name
    src = re.sub(r"(?<=[0-9.)])\s*(?=[xyzw(])", "*", src)
    src = re.sub(r"(?<=[xyzw])\s*(?=[0-9(])", "*", src)
    src = re.sub(r"(?<=[xyzw])\s+(?=[xyzw])", "*", src)
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as e:
        raise ValueError(f"cannot parse polynomial {text!r}: {e}") from None

    used: set[int] = set()

    def scan(node) -> None:
        if isinstance(node, ast.Name):
            for ch in node.id:
                if ch not in VAR_NAMES:
                    raise ValueError(
                        f"unknown symbol {node.id!r}; variables are x, y, z, w"
                    )
                used.add(VAR_NAMES.index(ch))
        for child in ast.iter_child_nodes(node):
            scan(child)

    scan(tree)
    if dim is None:
        dim = max(max(used, default=0) + 1, 2)
    if used and max(used) >= dim:
        raise ValueError(f"variable {VAR_NAMES[max(used)]!r} exceeds dim {dim}")

    def build(node) -> Polynomial:
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Add):
                return build(node.left) + build(node.right)
            if isinstance(node.op, ast.Sub):
                return build(node.left) - build(node.right)
            if isinstance(node.op, ast.Mult):
                return build(node.left) * build(node.right)
            if isinstance(node.op, ast.Pow):
                base = build(node.left)
                exp = node.right
                if isinstance(exp, ast.UnaryOp) or not isinstance(exp, ast.Constant):
                    raise ValueError("exponents must be literal nonnegative integers")
                e = exp.value
                if not isinstance(e, int) or e < 0:
                    raise ValueError(f"bad exponent {e!r}")
                return base ** e
            if isinstance(node.op, ast.Div):
                den = build(node.right)
                if den.degree() == 0:
                    return build(node.left) * (1.0 / den.terms[(0,) * dim])
                raise ValueError("division only by numeric constants")
            raise ValueError(f"unsupported operator {type(node.op).__name__}")
        if isinstance(node, ast.UnaryOp):
            if isinstance(node.op, ast.USub):
                return -build(node.operand)
            if isinstance(node.op, ast.UAdd):
                return build(node.operand)
            raise ValueError("unsupported unary operator")
        if isinstance(node, ast.Constant):
            if isinstance(node.value, (int, float)):
                return Polynomial.constant(dim, float(node.value))
            raise ValueError(f"bad literal {node.value!r}")
        if isinstance(node, ast.Name):
            out = Polynomial.constant(dim, 1.0)
            for ch in node.id:
                out = out * Polynomial.variable(dim, VAR_NAMES.index(ch))
            return out
        raise ValueError(f"unsupported syntax node {type(node).__name__}")

    return build(tree)


# ---------------------------------------------------------------------------
# constant elliptic matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantEllipticMatrix:
    """A real square matrix A with ellipticity certificate lambda_.

    Guarantees <A_s xi, xi> >= |xi|^2 / lambda_ and operator norm <= lambda_,
    where A_s = (A + A^T)/2.  Construct via :func:`check_ellipticity`.
    """

    entries: np.ndarray
    lambda_: float

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def sym(self) -> np.ndarray:
        return 0.5 * (self.entries + self.entries.T)

    def __post_init__(self):
        object.__setattr__(self, "entries", np.asarray(self.entries, dtype=float))
        self.entries.setflags(write=False)

    def to_json_dict(self) -> dict:
        return {"dim": self.dim, "entries": [float(v) for v in self.entries.ravel()],
                "lambda": self.lambda_}

    @classmethod
    def from_json_dict(cls, d: dict) -> "ConstantEllipticMatrix":
        n = int(d["dim"])
        m = np.array(d["entries"], dtype=float).reshape(n, n)
        return check_ellipticity(m)


def identity_matrix(dim: int) -> ConstantEllipticMatrix:
    return ConstantEllipticMatrix(np.eye(dim), 1.0)


def check_ellipticity(m) -> ConstantEllipticMatrix:
    """Certify a raw matrix: minimal Lambda = max(1/min-eig(A_s), op-norm(A)).

    Raises ValueError when the symmetric part is not positive definite.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if not (1 <= m.shape[0] <= MAX_DIM):
        raise ValueError(f"dimension must be in [1, {MAX_DIM}]")
    sym = 0.5 * (m + m.T)
    eigs = np.linalg.eigvalsh(sym)
    if eigs[0] <= 0.0:
        raise ValueError(
            f"not elliptic: symmetric part has min eigenvalue {eigs[0]:.3e} <= 0"
        )
    op_norm = float(np.linalg.norm(m, 2))
    lam = max(1.0 / float(eigs[0]), op_norm)
    return ConstantEllipticMatrix(m, lam)


@dataclass(frozen=True)
class SqrtDecomposition:
    """Symmetric part A_s, its SPD square root S, S^{-1}, and det S."""

    a_sym: np.ndarray
    s: np.ndarray
    s_inv: np.ndarray
    det_s: float


def symmetrize_sqrt(a: ConstantEllipticMatrix) -> SqrtDecomposition:
    """Eigendecomposition square root of the symmetric part of A.

    S is the unique symmetric positive-definite matrix with S @ S = A_s.
    """
    a_sym = a.sym
    w, v = np.linalg.eigh(a_sym)
    if w[0] <= 0.0:
        raise ValueError("ellipticity violation: symmetric part not positive definite")
    s = (v * np.sqrt(w)) @ v.T
    s_inv = (v / np.sqrt(w)) @ v.T
    det_s = float(np.prod(np.sqrt(w)))
    resid = np.linalg.norm(s @ s - a_sym) / max(np.linalg.norm(a_sym), 1e-300)
    if resid > 1e-12:
        raise ValueError(f"square-root residual {resid:.3e} exceeds 1e-12")
    return SqrtDecomposition(a_sym=a_sym, s=s, s_inv=s_inv, det_s=det_s)


# ---------------------------------------------------------------------------
# operator and harmonic bases
# ---------------------------------------------------------------------------

def apply_operator(a: ConstantEllipticMatrix, p: Polynomial) -> Polynomial:
    """Second-order symbol sum_ij a_ij d_i d_j p, exact in coefficients.

    Sign convention: no leading minus, so the Laplacian of x^2 is +2.
    """
    if p.dim != a.dim:
        raise ValueError(f"dimension mismatch: polynomial {p.dim} vs matrix {a.dim}")
    t: dict[tuple, float] = {}
    A = a.entries
    for alpha, c in p.terms.items():
        for i in range(p.dim):
            if alpha[i] == 0:
                continue
            for j in range(p.dim):
                if A[i, j] == 0.0:
                    continue
                if i == j:
                    if alpha[i] < 2:
                        continue
                    factor = alpha[i] * (alpha[i] - 1)
                else:
                    if alpha[j] == 0:
                        continue
                    factor = alpha[i] * alpha[j]
                b = list(alpha)
                b[i] -= 1
                b[j] -= 1
                b = tuple(b)
                t[b] = t.get(b, 0.0) + c * A[i, j] * factor
    return Polynomial(p.dim, t)


def monomials_of_degree(dim: int, k: int) -> list[tuple]:
    """All exponent tuples of total degree k, in lexicographic order."""
    if k < 0:
        return []
    out = []
    for combo in combinations_with_replacement(range(dim), k):
        alpha = [0] * dim
        for i in combo:
            alpha[i] += 1
        out.append(tuple(alpha))
    return sorted(set(out))


def harmonic_basis(dim: int, k: int, a: ConstantEllipticMatrix) -> list[Polynomial]:
    """Orthonormal basis (coefficient inner product) of homogeneous degree-k
    polynomials annihilated by the second-order symbol of A.

    Computed as the SVD null space of the symbol map from degree k to k-2
    monomial coordinates; singular values below 1e-10 of the largest count
    as zero.
    """
    if k < 1:
        raise ValueError("degree k must be >= 1")
    if k > MAX_DEGREE:
        raise ValueError(f"degree {k} exceeds cap {MAX_DEGREE}")
    if dim != a.dim:
        raise ValueError(f"dimension mismatch: {dim} vs matrix {a.dim}")
    dom = monomials_of_degree(dim, k)
    ran = monomials_of_degree(dim, k - 2)
    ran_index = {m: i for i, m in enumerate(ran)}
    mat = np.zeros((max(len(ran), 1), len(dom)))
    for col, alpha in enumerate(dom):
        img = apply_operator(a, Polynomial.monomial(dim, alpha))
        for beta, c in img.terms.items():
            mat[ran_index[beta], col] = c
    u, sv, vt = np.linalg.svd(mat)
    tol = 1e-10 * (sv[0] if sv.size and sv[0] > 0 else 1.0)
    rank = int(np.sum(sv > tol))
    null = vt[rank:]  # rows orthonormal
    basis = []
    for row in null:
        # deterministic sign: first coefficient (in monomial order) above
        # tolerance is made positive
        lead = row[np.argmax(np.abs(row) > 1e-12)]
        if lead < 0:
            row = -row
        basis.append(Polynomial(dim, {m: c for m, c in zip(dom, row) if abs(c) > 1e-14}))
    return basis


def homogeneous_parts(h: Polynomial) -> list[tuple[int, Polynomial]]:
    """Split into nonzero homogeneous parts, increasing degree; sum is exact."""
    if h.is_zero():
        raise ValueError("zero polynomial has no homogeneous decomposition")
    by_deg: dict[int, dict] = {}
    for a, c in h.terms.items():
        by_deg.setdefault(sum(a), {})[a] = c
    return [(d, Polynomial(h.dim, t)) for d, t in sorted(by_deg.items())]
