"""Closed-form Bach operator and gauged bracket-flow algebra on mu_{a,b,c}.

All quantities are explicit polynomials in (a, b, c). The Bach endomorphism
entries b1..b6 are the published ones except b4, which is taken as
-(b1 + b2 + b3): the printed b4 carries -8 a^2 b^2 where trace-freeness (and
the curvature oracle) require -24 a^2 b^2. The printed variants are kept in
``printed_*`` helpers so reports can show the difference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nilalg import STRUCTURE_SLOTS, TriBracket, bracket_inner, pi_full, pi_rep


@dataclass(frozen=True)
class BachOperator:
    b1: float
    b2: float
    b3: float
    b4: float
    b5: float
    b6: float

    def matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.b1, 0.0, 0.0, 0.0],
                [0.0, self.b2, self.b5, 0.0],
                [0.0, self.b5, self.b3, self.b6],
                [0.0, 0.0, self.b6, self.b4],
            ]
        )

    @property
    def trace(self) -> float:
        return self.b1 + self.b2 + self.b3 + self.b4


def bach_entries(a, b, c, printed: bool = False):
    """(b1, ..., b6) as polynomials; works on floats, arrays or sympy symbols."""
    a2, bs, c2 = a * a, b * b, c * c
    n = a2 + bs + c2
    b1 = (4 * a2**2 + 8 * a2 * bs - a2 * c2 + 4 * bs**2 + 8 * bs * c2 + 4 * c2**2) / 8
    b2 = (12 * a2**2 + 24 * a2 * bs - a2 * c2 + 12 * bs**2 + 8 * bs * c2 - 4 * c2**2) / 24
    b3 = -(20 * a2**2 - a2 * c2 + 24 * a2 * bs + 4 * bs**2 - 8 * bs * c2 - 12 * c2**2) / 24
    ab = 8 if printed else 24
    b4 = (-4 * a2**2 + 3 * a2 * c2 - ab * a2 * bs - 20 * (bs + c2) ** 2) / 24
    b5 = 2 * b * c * n / 3
    b6 = -2 * a * b * n / 3
    return b1, b2, b3, b4, b5, b6


def closed_form_bach(p: TriBracket) -> BachOperator:
    return BachOperator(*bach_entries(p.a, p.b, p.c))


def printed_bach(p: TriBracket) -> BachOperator:
    """b1..b6 exactly as published (b4 not trace-free when b != 0)."""
    return BachOperator(*bach_entries(p.a, p.b, p.c, printed=True))


def gauge(p: TriBracket) -> np.ndarray:
    """Skew matrix R with B - R lower triangular."""
    op = closed_form_bach(p)
    R = np.zeros((4, 4))
    R[1, 2], R[2, 1] = op.b5, -op.b5
    R[2, 3], R[3, 2] = op.b6, -op.b6
    return R


def lower_generator(p: TriBracket) -> np.ndarray:
    return closed_form_bach(p).matrix() - gauge(p)


def gauged_velocity(p: TriBracket) -> np.ndarray:
    """All 4x4x4 components of 1/2 pi(B - R) mu for mu = mu_{a,b,c}."""
    return 0.5 * pi_full(lower_generator(p), p.embed().full)


def ode_rhs(p: TriBracket) -> np.ndarray:
    """(a', b', c') of the gauged bracket flow, read off 1/2 pi(B - R) mu."""
    v = gauged_velocity(p)
    return np.array([v[s] for s in STRUCTURE_SLOTS])


def ode_rhs_polynomial(a, b, c, printed: bool = False):
    """The reduced right-hand side as explicit polynomials.

    ``printed=True`` reproduces the published a', whose 24 b^2 c^4 term should
    read 24 b^2 c^2; b' and c' agree with the published ones.
    """
    a2, b2, c2 = a * a, b * b, c * c
    bc = b2 * c2 * c2 if printed else b2 * c2
    da = -a * (44 * a2**2 + 72 * a2 * b2 - 5 * a2 * c2 + 28 * b2**2 + 24 * bc - 4 * c2**2) / 48
    db = -b * (60 * a2**2 + 104 * a2 * b2 + 57 * a2 * c2 + 44 * b2**2 + 104 * b2 * c2 + 60 * c2**2) / 48
    dc = -c * (-4 * a2**2 + 24 * a2 * b2 - 5 * a2 * c2 + 28 * b2**2 + 72 * b2 * c2 + 44 * c2**2) / 48
    return da, db, dc


def printed_ode_rhs(p: TriBracket) -> np.ndarray:
    return np.array(ode_rhs_polynomial(p.a, p.b, p.c, printed=True))


@dataclass(frozen=True)
class EvolutionRates:
    dlog_a_over_c: float
    d_b2_over_a2: float
    d_norm_sq: float

    # right-hand sides of the three evolution statements
    identity_rhs: float
    b2_over_a2_bound: float
    norm_sq_bound: float

    @property
    def identity_residual(self) -> float:
        return self.dlog_a_over_c - self.identity_rhs

    @property
    def b2_slack(self) -> float:
        """bound - rate; nonnegative when the inequality holds."""
        return self.b2_over_a2_bound - self.d_b2_over_a2

    @property
    def norm_slack(self) -> float:
        return self.norm_sq_bound - self.d_norm_sq


def evolution_identities(p: TriBracket) -> EvolutionRates:
    p.require_orbit()
    a, b, c = p.a, p.b, p.c
    da, db, dc = ode_rhs_polynomial(a, b, c)
    n = p.norm_sq()
    return EvolutionRates(
        dlog_a_over_c=da / a - dc / c,
        d_b2_over_a2=2 * b * (a * db - b * da) / a**3,
        d_norm_sq=2 * (a * da + b * db + c * dc),
        identity_rhs=(c * c - a * a) * n,
        b2_over_a2_bound=-2.0 / 3.0 * (b * b) / (a * a) * n * n,
        norm_sq_bound=-(n**3) / 12.0,
    )


def pi_bach_pairing(p: TriBracket) -> float:
    """<pi(B_mu) mu, mu> in the unordered-pair inner product."""
    mu = p.embed()
    return bracket_inner(pi_rep(closed_form_bach(p).matrix(), mu), mu)


def normalization_r(p: TriBracket) -> float:
    """r = -1/4 <pi(B_mu) mu, mu>; norm-fixing exactly when ||mu||^2 = 4."""
    return -0.25 * pi_bach_pairing(p)


def norm_fixing_r(p: TriBracket) -> float:
    """r = -<pi(B_mu) mu, mu> / ||mu||^2, which fixes ||mu|| at any radius.

    Agrees with :func:`normalization_r` on the sphere ||mu||^2 = 4, where that
    sphere is neutrally stable instead of repelling.
    """
    n = p.norm_sq()
    return 0.0 if n == 0.0 else -pi_bach_pairing(p) / n


def scalar_curvature(p: TriBracket) -> float:
    """Scalar curvature of (mu_{a,b,c}, standard inner product).

    Equals -||mu||^2 / 4 with the ordered-pair norm 2(a^2+b^2+c^2).
    """
    return -(p.a**2 + p.b**2 + p.c**2) / 2.0


def soliton_lambda(alpha: float, beta: float) -> float:
    """lambda forced by trace(B) = 0 when B = lambda I + diag(a, b, a+b, 2a+b)."""
    return -(4 * alpha + 3 * beta) / 4.0


@dataclass(frozen=True)
class SolitonSolution:
    a: float
    c: float
    alpha: float
    beta: float

    @property
    def lam(self) -> float:
        return soliton_lambda(self.alpha, self.beta)

    @property
    def residual(self) -> float:
        return soliton_residual(self)

    def derivation(self) -> np.ndarray:
        al, be = self.alpha, self.beta
        return np.diag([al, be, al + be, 2 * al + be])

    def scaled(self, k: float) -> "SolitonSolution":
        k4 = k**4
        return SolitonSolution(k * self.a, k * self.c, k4 * self.alpha, k4 * self.beta)

    def to_json(self) -> dict:
        return {
            "a": self.a,
            "b": 0.0,
            "c": self.c,
            "alpha": self.alpha,
            "beta": self.beta,
            "lambda": self.lam,
            "residual": self.residual,
        }


def soliton_residual(s: SolitonSolution) -> float:
    if not (s.a > 0 and s.c > 0):
        raise ValueError("soliton search requires a, c > 0")
    B = closed_form_bach(TriBracket(s.a, 0.0, s.c)).matrix()
    return float(np.abs(B - s.lam * np.eye(4) - s.derivation()).max())
