import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bachflow.nilalg import (
    Bracket,
    DerivationMatrix,
    NonInvertibleGauge,
    TriBracket,
    abelian,
    bracket_norm_sq,
    bracket_norm_sq_ordered,
    derivation_defect,
    derivation_space,
    gl_action,
    group_multiply,
    heisenberg_plus_line,
    jacobi_defect,
    n4,
    nilpotency_defect,
    pi_rep,
)

from oracles import expm_series, jacobi_brute, random_orthogonal, tri_constants

coef = st.floats(-2.0, 2.0, allow_nan=False)
pos = st.floats(0.05, 2.0)
tris = st.builds(TriBracket, pos, coef, pos)
vec4 = st.lists(st.floats(-1.5, 1.5), min_size=4, max_size=4).map(np.array)


def well_conditioned(rng):
    return np.eye(4) + 0.4 * rng.normal(size=(4, 4))


def test_embedding_has_three_slots():
    mu = TriBracket(1.5, -0.5, 2.0).embed()
    f = mu.full
    assert f[0, 1, 2] == 1.5 and f[1, 0, 2] == -1.5
    assert f[0, 1, 3] == -0.5 and f[0, 2, 3] == 2.0
    assert np.count_nonzero(f) == 6
    assert mu.off_structure_max() == 0.0


def test_orbit_membership():
    assert TriBracket(1, 0, 1).in_orbit
    assert not TriBracket(1, 0, 0).in_orbit
    with pytest.raises(ValueError):
        TriBracket(0, 1, 1).require_orbit()


def test_from_components_rejects_diagonal_pair():
    with pytest.raises(ValueError):
        Bracket.from_components({(2, 2, 1): 1.0})


def test_json_round_trip():
    mu = TriBracket(1, 2, 3).embed()
    data = json.loads(json.dumps(mu.to_json()))
    assert all(e[0] < e[1] for e in data["entries"])
    assert Bracket.from_json(data).allclose(mu, 0.0)
    t = TriBracket(0.5, -1, 2)
    assert TriBracket.from_json(t.to_json()) == t


def test_json_rejects_unordered_pair():
    with pytest.raises(ValueError):
        Bracket.from_json({"entries": [[2, 1, 3, 1.0]]})


@given(st.lists(st.floats(-3, 3), min_size=24, max_size=24))
def test_json_round_trip_arbitrary(vals):
    mu = Bracket(np.array(vals))
    assert Bracket.from_json(json.loads(json.dumps(mu.to_json()))).allclose(mu, 0.0)


class TestJacobi:
    def test_abelian(self):
        assert jacobi_defect(abelian()) == 0.0

    def test_n4(self):
        assert jacobi_defect(n4()) == 0.0
        assert jacobi_brute(tri_constants(1, 0, 1)) == 0.0

    @staticmethod
    def _constants(mu):
        f = mu.full
        return {tuple(int(i) for i in idx): f[idx] for idx in zip(*np.nonzero(f))}

    def test_euclidean_plane_bracket_is_lie(self):
        # mu_12^3 = 1, mu_31^2 = 1 is e(2) + R: ad e1 rotates (e2, e3), Jacobi holds
        mu = Bracket.from_components({(1, 2, 3): 1.0, (3, 1, 2): 1.0})
        assert jacobi_defect(mu) == 0.0
        assert jacobi_brute(self._constants(mu)) == 0.0

    def test_non_lie_bracket(self):
        # [[e1,e2],e3] = [e2,e3] = e1 and the other two terms vanish
        mu = Bracket.from_components({(1, 2, 2): 1.0, (2, 3, 1): 1.0})
        d = jacobi_defect(mu)
        assert d > 0
        assert d == pytest.approx(jacobi_brute(self._constants(mu)))

    @given(tris)
    def test_vanishes_on_orbit(self, p):
        mu = p.embed()
        assert jacobi_defect(mu) < 1e-14
        assert nilpotency_defect(mu) == 0.0


class TestNilpotency:
    def test_abelian(self):
        assert nilpotency_defect(abelian()) == 0.0

    def test_ad_cubed_vanishes(self):
        f = TriBracket(1.3, 0.7, 0.9).embed().full
        ad1 = f[0].T  # ad1[:, y] = mu(e1, e_y)
        assert np.abs(np.linalg.matrix_power(ad1, 3)).max() == 0.0

    def test_non_nilpotent(self):
        assert nilpotency_defect(Bracket.from_components({(1, 2, 2): 1.0})) > 0


class TestGLAction:
    def test_identity(self):
        mu = TriBracket(1, 2, 3).embed()
        assert gl_action(np.eye(4), mu).allclose(mu)

    def test_scalar(self):
        out = gl_action(2 * np.eye(4), TriBracket(1, 2, 3).embed())
        assert out.allclose(TriBracket(0.5, 1, 1.5).embed())

    def test_diag(self):
        out = gl_action(np.diag([1, 1, 1, 2.0]), n4())
        assert out.allclose(Bracket.from_components({(1, 2, 3): 1.0, (1, 3, 4): 2.0}))

    def test_singular(self):
        with pytest.raises(NonInvertibleGauge, match="non-invertible gauge"):
            gl_action(np.diag([1, 1, 0, 1.0]), n4())

    def test_action_law(self, rng):
        mu = TriBracket(0.8, -1.1, 1.7).embed()
        for _ in range(20):
            h1, h2 = well_conditioned(rng), well_conditioned(rng)
            lhs = gl_action(h1, gl_action(h2, mu))
            assert lhs.allclose(gl_action(h1 @ h2, mu), 1e-12 * max(1, lhs.max_abs()))

    def test_preserves_lie_structure(self, rng):
        mu = gl_action(well_conditioned(rng), TriBracket(1, 1, 1).embed())
        assert mu.is_validated(1e-12)

    def test_derivative_is_pi(self, rng):
        mu = TriBracket(1.2, 0.4, 0.9).embed()
        for _ in range(5):
            A = rng.normal(size=(4, 4))

            def fd(eps):
                plus = gl_action(expm_series(eps * A), mu)
                minus = gl_action(expm_series(-eps * A), mu)
                return (plus - minus).entries / (2 * eps)

            rich = (100 * fd(1e-5) - fd(1e-4)) / 99
            assert np.abs(rich - pi_rep(A, mu).entries).max() < 1e-8

    @given(tris, st.integers(0, 2**32 - 1))
    def test_norm_orthogonal_invariance(self, p, seed):
        k = random_orthogonal(np.random.default_rng(seed))
        mu = p.embed()
        assert bracket_norm_sq(gl_action(k, mu)) == pytest.approx(bracket_norm_sq(mu), rel=1e-12, abs=1e-12)


class TestPi:
    def test_identity(self):
        mu = TriBracket(1, 2, 3).embed()
        assert pi_rep(np.eye(4), mu).allclose(-mu)

    def test_zero(self):
        assert pi_rep(np.zeros((4, 4)), n4()).max_abs() == 0.0

    def test_diag(self):
        l1, l2, l3, l4 = 0.3, -1.2, 2.5, 0.7
        a, b, c = 1.1, -0.6, 1.9
        out = pi_rep(np.diag([l1, l2, l3, l4]), TriBracket(a, b, c).embed())
        expect = TriBracket((l3 - l1 - l2) * a, (l4 - l1 - l2) * b, (l4 - l1 - l3) * c).embed()
        assert out.allclose(expect, 1e-14)

    def test_bilinear(self, rng):
        A, B = rng.normal(size=(2, 4, 4))
        mu, nu = TriBracket(1, 2, 3).embed(), TriBracket(-1, 0.5, 2).embed()
        lhs = pi_rep(2 * A - B, mu + nu)
        rhs = pi_rep(A, mu) * 2 + pi_rep(A, nu) * 2 - pi_rep(B, mu) - pi_rep(B, nu)
        assert lhs.allclose(rhs, 1e-12)


class TestNorm:
    def test_values(self):
        assert bracket_norm_sq(abelian()) == 0.0
        assert bracket_norm_sq(TriBracket(1, 2, 3).embed()) == 14.0
        assert bracket_norm_sq(n4()) == 2.0

    def test_ordered_is_double(self):
        mu = TriBracket(1, 2, 3).embed()
        assert bracket_norm_sq_ordered(mu) == 28.0
        assert np.sum(mu.full**2) == 28.0


class TestGroup:
    def test_identity_and_inverse(self):
        mu = TriBracket(1, 2, 3).embed()
        y = np.array([0.3, -1.0, 2.0, 0.5])
        assert np.allclose(group_multiply(np.zeros(4), y, mu), y, atol=0)
        assert np.abs(group_multiply(y, -y, mu)).max() == 0.0

    def test_basis_product(self):
        # mu(mu(e1,e2),e1) = mu(e3,e1) = -e4 enters with -1/12
        out = group_multiply(np.eye(4)[0], np.eye(4)[1], n4())
        assert np.allclose(out, [1, 1, 0.5, 1 / 12], atol=1e-15)

    @given(tris, vec4, vec4, vec4)
    def test_associative(self, p, x, y, z):
        mu = p.embed()
        lhs = group_multiply(group_multiply(x, y, mu), z, mu)
        rhs = group_multiply(x, group_multiply(y, z, mu), mu)
        assert np.abs(lhs - rhs).max() < 1e-10


class TestDerivations:
    def test_zero(self):
        assert derivation_defect(np.zeros((4, 4)), n4()) == 0.0

    def test_diag(self):
        D = DerivationMatrix(1, 1, 0).matrix(TriBracket(1, 0, 1))
        assert np.array_equal(np.diag(D), [1, 1, 2, 3])
        assert derivation_defect(D, n4()) == 0.0

    def test_identity_not_derivation(self):
        assert derivation_defect(np.eye(4), n4()) > 0

    @given(tris, coef, coef, coef, st.tuples(coef, coef, coef, coef))
    def test_shape_is_derivation(self, p, al, be, ga, lower):
        D = DerivationMatrix(al, be, ga, lower).matrix(p)
        assert np.allclose(np.diag(D), [al, be, al + be, 2 * al + be])
        assert D[2, 1] == pytest.approx(p.a * ga + p.b * al / p.c)
        assert D[3, 2] == pytest.approx(p.c * ga)
        assert derivation_defect(D, p.embed()) < 1e-12
        assert pi_rep(D, p.embed()).max_abs() < 1e-12

    def test_printed_entry_fails_off_diagonal_slice(self):
        p = TriBracket(1, 1, 1)
        assert derivation_defect(DerivationMatrix(0, 1, 0).matrix(p, printed=True), p.embed()) == 1.0
        q = TriBracket(1.3, 0, 0.4)
        assert derivation_defect(DerivationMatrix(0.2, 1, 0.7).matrix(q, printed=True), q.embed()) < 1e-15

    @given(tris)
    def test_space_dimension(self, p):
        basis = derivation_space(p.embed())
        assert basis.shape[0] == 7
        for row in basis:
            assert derivation_defect(row.reshape(4, 4), p.embed()) < 1e-10


def test_named_constructors():
    assert heisenberg_plus_line(2.0).allclose(TriBracket(2, 0, 0).embed())
    assert n4().allclose(TriBracket(1, 0, 1).embed())
    assert abelian().max_abs() == 0.0
