"""Curvature of left-invariant metrics, computed algebraically at the identity.

Everything is expressed in the left-invariant frame e_1..e_4 with Gram matrix
G = (<e_i, e_j>). All tensors have constant frame components, so covariant
derivatives reduce to contractions with the connection coefficients.

Conventions
-----------
* ``gamma[i, j, k]``: nabla_{e_i} e_j = sum_k gamma[i, j, k] e_k.
* R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_{[X,Y]} Z.
* ``riemann[i, j, k, l] = <R(e_i, e_j) e_k, e_l>`` (so R_ijji > 0 on spheres).
* ``ricci[j, k] = G^{il} riemann[i, j, k, l]``.
* Weyl = Rm - P (KN) G, where P is the Schouten tensor
  P = (Ric - s G / 6) / 2 and the Kulkarni-Nomizu product is
  (h KN k)_ijkl = h_jk k_il + h_il k_jk - h_ik k_jl - h_jl k_ik.
* Bach: B_ij = nabla^k nabla^l W_kijl + 1/2 R^kl W_kijl, where the outer
  derivative index is contracted with the first Weyl slot. With these
  conventions the result coincides with -1/4 of the G-gradient of
  |W|^2 dv (checked in the test-suite by finite differences).
* ``|W|^2 = W_ijkl W^ijkl`` (full sum over all index tuples).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nilalg import DIM, Bracket

SYM_TOL = 1e-14


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class MetricSpec:
    """Inner product <h., h.> at the identity, stored as its Gram matrix G = h^T h."""

    gram: np.ndarray

    def __post_init__(self):
        g = np.array(self.gram, dtype=float)
        if g.shape != (DIM, DIM):
            raise MetricError("Gram matrix must be 4x4")
        if np.abs(g - g.T).max() > SYM_TOL * max(1.0, np.abs(g).max()):
            raise MetricError("Gram matrix is not symmetric")
        g = 0.5 * (g + g.T)
        if np.linalg.eigvalsh(g).min() <= 0:
            raise MetricError("Gram matrix is not positive definite")
        g.setflags(write=False)
        object.__setattr__(self, "gram", g)

    @classmethod
    def identity(cls) -> "MetricSpec":
        return cls(np.eye(DIM))

    @classmethod
    def from_h(cls, h) -> "MetricSpec":
        h = np.asarray(h, dtype=float)
        return cls(h.T @ h)

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.gram)


def _gram(g) -> np.ndarray:
    return g.gram if isinstance(g, MetricSpec) else np.asarray(g, dtype=float)


def _full(mu) -> np.ndarray:
    return mu.full if isinstance(mu, Bracket) else np.asarray(mu, dtype=float)


def levi_civita(mu, g) -> np.ndarray:
    """Connection coefficients from the Koszul formula for left-invariant fields."""
    G = _gram(g)
    if isinstance(g, MetricSpec):
        Gi = g.inverse
    else:
        if np.linalg.eigvalsh(0.5 * (G + G.T)).min() <= 0:
            raise MetricError("Gram matrix is not positive definite")
        Gi = np.linalg.inv(G)
    # low[i, j, k] = <mu(e_i, e_j), e_k>
    low = np.einsum("ijl,lk->ijk", _full(mu), G)
    # 2<nabla_i e_j, e_k> = <[e_i,e_j],e_k> - <[e_j,e_k],e_i> + <[e_k,e_i],e_j>
    koszul = 0.5 * (low - np.einsum("jki->ijk", low) + np.einsum("kij->ijk", low))
    return np.einsum("ijl,lk->ijk", koszul, Gi)


def riemann(gamma: np.ndarray, mu, g) -> np.ndarray:
    """Fully covariant curvature <R(e_i, e_j) e_k, e_l>."""
    f = _full(mu)
    # nabla_i (nabla_j e_k) = gamma[j,k,p] gamma[i,p,m] e_m
    rv = (
        np.einsum("jkp,ipm->ijkm", gamma, gamma)
        - np.einsum("ikp,jpm->ijkm", gamma, gamma)
        - np.einsum("ijp,pkm->ijkm", f, gamma)
    )
    return np.einsum("ijkm,ml->ijkl", rv, _gram(g))


def ricci(rm: np.ndarray, g) -> np.ndarray:
    Gi = np.linalg.inv(_gram(g))
    return np.einsum("il,ijkl->jk", Gi, rm)


def scalar(ric: np.ndarray, g) -> float:
    return float(np.einsum("jk,jk->", np.linalg.inv(_gram(g)), ric))


def kulkarni_nomizu(h: np.ndarray, k: np.ndarray) -> np.ndarray:
    return (
        np.einsum("jk,il->ijkl", h, k)
        + np.einsum("il,jk->ijkl", h, k)
        - np.einsum("ik,jl->ijkl", h, k)
        - np.einsum("jl,ik->ijkl", h, k)
    )


def weyl(rm: np.ndarray, ric: np.ndarray, s: float, g) -> np.ndarray:
    G = _gram(g)
    schouten = 0.5 * (ric - s / 6.0 * G)
    return rm - kulkarni_nomizu(schouten, G)


def covariant_derivative(T: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """nabla T for a covariant tensor with constant frame components.

    ``out[m, i1, ..., ip] = -sum_r gamma[m, i_r, q] T[i1, .., q, .., ip]``.
    """
    T = np.asarray(T, dtype=float)
    out = np.zeros((DIM,) + T.shape)
    for r in range(T.ndim):
        moved = np.moveaxis(T, r, 0)
        term = -np.tensordot(gamma, moved, axes=([2], [0]))  # (m, i_r, rest...)
        out += np.moveaxis(term, 1, r + 1)
    return out


def raise_all(T: np.ndarray, g) -> np.ndarray:
    Gi = np.linalg.inv(_gram(g))
    for ax in range(T.ndim):
        T = np.moveaxis(np.tensordot(Gi, T, axes=([1], [ax])), 0, ax)
    return T


def tensor_norm_sq(T: np.ndarray, g) -> float:
    return float(np.sum(T * raise_all(T, g)))


@dataclass(frozen=True)
class CurvatureBundle:
    gamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    weyl: np.ndarray
    weyl_div2: np.ndarray
    bach: np.ndarray
    gram: np.ndarray

    @property
    def bach_endomorphism(self) -> np.ndarray:
        return np.linalg.solve(self.gram, self.bach)

    def weyl_norm_sq(self) -> float:
        return tensor_norm_sq(self.weyl, self.gram)

    def to_json(self) -> dict:
        """Dense arrays as nested lists in C (row-major) index order."""
        return {
            "layout": "row-major; gamma[i,j,k]: nabla_{e_i} e_j = gamma[i,j,k] e_k; "
            "riemann[i,j,k,l] = <R(e_i,e_j)e_k, e_l>",
            "gram": self.gram.tolist(),
            "gamma": self.gamma.tolist(),
            "riemann": self.riemann.tolist(),
            "ricci": self.ricci.tolist(),
            "scalar": self.scalar,
            "weyl": self.weyl.tolist(),
            "weyl_div2": self.weyl_div2.tolist(),
            "bach": self.bach.tolist(),
            "bach_endomorphism": self.bach_endomorphism.tolist(),
        }


def curvature_bundle(mu, g=None) -> CurvatureBundle:
    g = MetricSpec.identity() if g is None else g
    if not isinstance(g, MetricSpec):
        g = MetricSpec(g)
    G, Gi = g.gram, g.inverse
    gam = levi_civita(mu, g)
    rm = riemann(gam, mu, g)
    ric = ricci(rm, G)
    s = scalar(ric, G)
    W = weyl(rm, ric, s, G)
    ddW = covariant_derivative(covariant_derivative(W, gam), gam)
    # ddW[a, b, k, i, j, l] = (nabla_a nabla_b W)_kijl
    div2 = np.einsum("ka,lb,abkijl->ij", Gi, Gi, ddW)
    ric_up = Gi @ ric @ Gi
    B = div2 + 0.5 * np.einsum("kl,kijl->ij", ric_up, W)
    B = 0.5 * (B + B.T)
    return CurvatureBundle(gam, rm, ric, s, W, div2, B, np.array(G))


def bach_oracle(mu, g=None) -> tuple[np.ndarray, np.ndarray]:
    """Bach tensor at the identity: (bilinear form B_ij, endomorphism G^-1 B)."""
    cb = curvature_bundle(mu, g)
    return cb.bach, cb.bach_endomorphism


def bach_contraction_variants(mu, g=None) -> dict[str, np.ndarray]:
    """Bilinear forms for the plausible readings of the Bach formula's index placement.

    Keys name the Weyl slots hit by (outer, inner) derivative and the sign of the
    Ricci-Weyl term relative to W_kijl. ``"kijl,+"`` is the adopted one.
    """
    g = MetricSpec.identity() if g is None else g
    if not isinstance(g, MetricSpec):
        g = MetricSpec(g)
    G, Gi = g.gram, g.inverse
    gam = levi_civita(mu, g)
    rm = riemann(gam, mu, g)
    ric = ricci(rm, G)
    s = scalar(ric, G)
    W = weyl(rm, ric, s, G)
    ddW = covariant_derivative(covariant_derivative(W, gam), gam)
    ric_up = Gi @ ric @ Gi
    rw = np.einsum("kl,kijl->ij", ric_up, W)
    out = {}
    for name, pat in {
        "kijl": "ka,lb,abkijl->ij",  # nabla^k nabla^l W_kijl
        "lijk": "ka,lb,ablijk->ij",  # derivatives hit slots 4 and 1
        "ikjl": "ka,lb,abikjl->ij",  # slots 2 and 4
    }.items():
        div = np.einsum(pat, Gi, Gi, ddW)
        for sign, label in ((1.0, "+"), (-1.0, "-")):
            B = div + sign * 0.5 * rw
            out[f"{name},{label}"] = 0.5 * (B + B.T)
    return out


def weyl_functional_gradient(mu, g=None, h: float = 1e-5) -> np.ndarray:
    """-1/4 times the G-gradient of |W|^2 sqrt(det G), by central differences.

    An independent route to the Bach bilinear form for left-invariant metrics on
    unimodular groups; accurate to roughly 1e-9.
    """
    g = MetricSpec.identity() if g is None else g
    G = _gram(g)

    def density(Gm):
        return curvature_bundle(mu, MetricSpec(Gm)).weyl_norm_sq() * np.sqrt(np.linalg.det(Gm))

    grad = np.zeros((DIM, DIM))
    for i in range(DIM):
        for j in range(i, DIM):
            H = np.zeros((DIM, DIM))
            H[i, j] = H[j, i] = 1.0
            d = (density(G + h * H) - density(G - h * H)) / (2 * h)
            if i != j:
                d /= 2.0
            grad[i, j] = grad[j, i] = d
    # grad holds dF/dG_ij = F^{ij}; lower both indices to get a bilinear form
    grad_low = G @ grad @ G
    return -0.25 * grad_low / np.sqrt(np.linalg.det(G))
