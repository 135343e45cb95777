"""Four-dimensional nilpotent Lie brackets.

A bracket is a skew-symmetric bilinear map mu: R^4 x R^4 -> R^4, stored by its
structure constants ``mu[i, j, k] = <mu(e_i, e_j), e_k>`` (0-based internally).
Only the 24 entries with i < j are independent; the full 4x4x4 array is built
on demand.

Linear maps act on column vectors, ``A e_j = sum_i A[i, j] e_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

DIM = 4
PAIRS: tuple[tuple[int, int], ...] = tuple(combinations(range(DIM), 2))
DEFECT_TOL = 1e-12

# (i, j, k) slots carrying a, b, c in mu_{a,b,c}
STRUCTURE_SLOTS = ((0, 1, 2), (0, 1, 3), (0, 2, 3))


class NonInvertibleGauge(ValueError):
    pass


def _full_from_entries(entries: np.ndarray) -> np.ndarray:
    full = np.zeros((DIM, DIM, DIM))
    for p, (i, j) in enumerate(PAIRS):
        full[i, j] = entries[p]
        full[j, i] = -entries[p]
    return full


def _entries_from_full(full: np.ndarray) -> np.ndarray:
    return np.array([full[i, j] for i, j in PAIRS])


@dataclass(frozen=True)
class Bracket:
    """Structure constants of a bracket on R^4, antisymmetric by construction."""

    entries: np.ndarray = field(default_factory=lambda: np.zeros((len(PAIRS), DIM)))

    def __post_init__(self):
        e = np.array(self.entries, dtype=float).reshape(len(PAIRS), DIM)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @classmethod
    def from_full(cls, full) -> "Bracket":
        """Build from a 4x4x4 array; only the i < j half is read."""
        return cls(_entries_from_full(np.asarray(full, dtype=float)))

    @classmethod
    def from_components(cls, comps: dict[tuple[int, int, int], float]) -> "Bracket":
        """Build from ``{(i, j, k): value}`` with 1-based indices.

        Pairs given with i > j are stored with the sign flipped.
        """
        full = np.zeros((DIM, DIM, DIM))
        for (i, j, k), v in comps.items():
            if i == j:
                raise ValueError(f"mu_{i}{i}^{k} must vanish")
            full[i - 1, j - 1, k - 1] = v
            full[j - 1, i - 1, k - 1] = -v
        return cls.from_full(full)

    @property
    def full(self) -> np.ndarray:
        return _full_from_entries(self.entries)

    def __call__(self, x, y) -> np.ndarray:
        return np.einsum("i,j,ijk->k", np.asarray(x, float), np.asarray(y, float), self.full)

    def __add__(self, other: "Bracket") -> "Bracket":
        return Bracket(self.entries + other.entries)

    def __sub__(self, other: "Bracket") -> "Bracket":
        return Bracket(self.entries - other.entries)

    def __mul__(self, s: float) -> "Bracket":
        return Bracket(self.entries * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Bracket":
        return Bracket(-self.entries)

    def allclose(self, other: "Bracket", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.entries, other.entries, rtol=0.0, atol=atol))

    def max_abs(self) -> float:
        return float(np.abs(self.entries).max())

    def off_structure_max(self) -> float:
        """Largest |mu_ij^k| outside the three slots used by mu_{a,b,c}."""
        full = self.full
        mask = np.ones_like(full, dtype=bool)
        for i, j, k in STRUCTURE_SLOTS:
            mask[i, j, k] = mask[j, i, k] = False
        return float(np.abs(full[mask]).max())

    def to_tri(self, tol: float = 1e-9) -> "TriBracket":
        if self.off_structure_max() > tol:
            raise ValueError("bracket is not of the form mu_{a,b,c}")
        f = self.full
        return TriBracket(f[0, 1, 2], f[0, 1, 3], f[0, 2, 3])

    def is_validated(self, tol: float = DEFECT_TOL) -> bool:
        return jacobi_defect(self) <= tol and nilpotency_defect(self) <= tol

    def to_json(self) -> dict:
        out = []
        for p, (i, j) in enumerate(PAIRS):
            for k in range(DIM):
                if self.entries[p, k] != 0.0:
                    out.append([i + 1, j + 1, k + 1, float(self.entries[p, k])])
        return {"entries": out}

    @classmethod
    def from_json(cls, data: dict) -> "Bracket":
        comps = {}
        for i, j, k, v in data["entries"]:
            if not i < j:
                raise ValueError("bracket JSON entries must have i < j")
            comps[(int(i), int(j), int(k))] = float(v)
        return cls.from_components(comps)


@dataclass(frozen=True)
class TriBracket:
    """The bracket mu_{a,b,c}: mu(e1,e2) = a e3 + b e4, mu(e1,e3) = c e4."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def in_orbit(self) -> bool:
        return self.a > 0 and self.c > 0

    def require_orbit(self) -> "TriBracket":
        if not self.in_orbit:
            raise ValueError(f"({self.a}, {self.b}, {self.c}) is outside O: need a, c > 0")
        return self

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    def norm_sq(self) -> float:
        return self.a**2 + self.b**2 + self.c**2

    def scaled(self, k: float) -> "TriBracket":
        return TriBracket(k * self.a, k * self.b, k * self.c)

    def embed(self) -> Bracket:
        return Bracket.from_components({(1, 2, 3): self.a, (1, 2, 4): self.b, (1, 3, 4): self.c})

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c}

    @classmethod
    def from_json(cls, data: dict) -> "TriBracket":
        return cls(data["a"], data["b"], data["c"])


# named members of the three isomorphism classes
def abelian() -> Bracket:
    return Bracket()


def heisenberg_plus_line(a: float = 1.0) -> Bracket:
    """R + h_3 with mu(e1, e2) = a e3."""
    return TriBracket(a, 0.0, 0.0).embed()


def n4() -> Bracket:
    """The indecomposable algebra: mu(e1,e2) = e3, mu(e1,e3) = e4."""
    return TriBracket(1.0, 0.0, 1.0).embed()


# --- array-level kernels (shared with the flow right-hand sides) ---

def bracket_apply(full: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("i,j,ijk->k", x, y, full)


def gl_action_full(h: np.ndarray, full: np.ndarray) -> np.ndarray:
    hinv = np.linalg.inv(h)
    # (h.mu)(e_i, e_j) = h mu(h^-1 e_i, h^-1 e_j)
    return np.einsum("pi,qj,pqr,kr->ijk", hinv, hinv, full, h)


def pi_full(A: np.ndarray, full: np.ndarray) -> np.ndarray:
    # A mu(e_i,e_j) - mu(A e_i, e_j) - mu(e_i, A e_j)
    return (
        np.einsum("ijl,kl->ijk", full, A)
        - np.einsum("li,ljk->ijk", A, full)
        - np.einsum("lj,ilk->ijk", A, full)
    )


def jacobi_defect(mu: Bracket) -> float:
    """Largest norm of the Jacobi cyclic sum over basis triples."""
    f = mu.full
    # mm[i,j,l,m] = mu(mu(e_i,e_j), e_l)^m
    mm = np.einsum("ijk,klm->ijlm", f, f)
    cyc = mm + np.einsum("jlim->ijlm", mm) + np.einsum("lijm->ijlm", mm)
    return float(np.linalg.norm(cyc, axis=-1).max())


def ad_matrices(full: np.ndarray) -> np.ndarray:
    """ad[x][:, y] = mu(e_x, e_y)."""
    return np.transpose(full, (0, 2, 1))


def nilpotency_defect(mu: Bracket) -> float:
    """max_x ||(ad e_x)^4||; zero iff every ad e_x is nilpotent (dimension 4)."""
    ads = ad_matrices(mu.full)
    return float(max(np.linalg.norm(np.linalg.matrix_power(ad, DIM)) for ad in ads))


def gl_action(h, mu: Bracket) -> Bracket:
    h = np.asarray(h, dtype=float)
    if h.shape != (DIM, DIM):
        raise ValueError("gauge must be a 4x4 matrix")
    if not np.isfinite(np.linalg.cond(h)) or np.linalg.cond(h) > 1e14:
        raise NonInvertibleGauge("non-invertible gauge")
    return Bracket.from_full(gl_action_full(h, mu.full))


def pi_rep(A, mu: Bracket) -> Bracket:
    """Derivative of the GL_4 action at the identity: pi(A) mu."""
    return Bracket.from_full(pi_full(np.asarray(A, dtype=float), mu.full))


def bracket_inner(mu: Bracket, nu: Bracket) -> float:
    """Sum over unordered pairs i < j of <mu(e_i,e_j), nu(e_i,e_j)>."""
    return float(np.sum(mu.entries * nu.entries))


def bracket_norm_sq(mu: Bracket) -> float:
    """||mu||^2 over unordered pairs, so ||mu_{a,b,c}||^2 = a^2 + b^2 + c^2.

    The ordered-pair sum is exactly twice this; see :func:`bracket_norm_sq_ordered`.
    """
    return bracket_inner(mu, mu)


def bracket_norm_sq_ordered(mu: Bracket) -> float:
    """||mu||^2 summed over all ordered pairs (i, j)."""
    return 2.0 * bracket_inner(mu, mu)


def group_multiply(x, y, mu: Bracket) -> np.ndarray:
    """Group product in exponential coordinates (BCH, exact for 3-step nilpotent)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f = mu.full
    xy = bracket_apply(f, x, y)
    return x + y + 0.5 * xy + (bracket_apply(f, xy, y) - bracket_apply(f, xy, x)) / 12.0


def derivation_defect(D, mu: Bracket) -> float:
    """max over basis pairs of ||D mu(e_i,e_j) - mu(De_i,e_j) - mu(e_i,De_j)||."""
    d = pi_full(np.asarray(D, dtype=float), mu.full)
    return float(np.linalg.norm(d, axis=-1).max())


@dataclass(frozen=True)
class DerivationMatrix:
    """A derivation of mu_{a,b,c}; ``lower`` fills the free slots (2,1), (3,1), (4,1), (4,2).

    The (3,2) entry is a*gamma + b*alpha/c. The often-quoted a*gamma + b*beta
    is a derivation only when b = 0 (or beta = alpha/c); ``printed=True``
    builds that variant.
    """

    alpha: float
    beta: float
    gamma: float
    lower: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def matrix(self, p: TriBracket, printed: bool = False) -> np.ndarray:
        al, be, ga = self.alpha, self.beta, self.gamma
        D = np.diag([al, be, al + be, 2 * al + be])
        D[1, 0], D[2, 0], D[3, 0], D[3, 1] = self.lower
        D[2, 1] = p.a * ga + (p.b * be if printed else p.b * al / p.c)
        D[3, 2] = p.c * ga
        return D


def derivation_space(mu: Bracket, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (rows, flattened 4x4) of Der(mu) from the null space of D -> pi(D)mu."""
    f = mu.full
    cols = []
    for n in range(DIM * DIM):
        E = np.zeros(DIM * DIM)
        E[n] = 1.0
        cols.append(pi_full(E.reshape(DIM, DIM), f).ravel())
    M = np.array(cols).T
    _, sv, vt = np.linalg.svd(M)
    rank = int(np.sum(sv > tol * max(1.0, sv[0])))
    return vt[rank:]
