from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gramspec.errors import InputError
from gramspec.forms import TernaryForm, multiply
from gramspec.gram import (
    KERNEL_DIRECTIONS,
    GramTensor,
    NoSolutionError,
    RankMismatchError,
    Subspace,
    describe_face,
    face_dimension,
    gram_from_image,
    gram_map,
    gram_pencil,
    image,
    polish_low_rank,
    square_space,
    triangular_sos,
)
from gramspec.instances import fermat, random_sos_quartic

from oracles import quad_values, random_points, square_space_dim_by_evaluation

THETA0 = np.diag([1.0, 1, 1, 0, 0, 0])


def theta_k(k: int) -> np.ndarray:
    """Fermat Gram matrices with one off-diagonal -1 traded against a 2 on the diagonal."""
    (i, j), d = {1: ((0, 1), 3), 2: ((0, 2), 4), 3: ((1, 2), 5)}[k]
    t = THETA0.copy()
    t[i, j] = t[j, i] = -1
    t[d, d] = 2
    return t


def values_by_evaluation(g: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """X G X^T at points, computed directly from quadratic monomial values."""
    x = quad_values(pts)
    return np.einsum("pi,ij,pj->p", x, g, x)


def form_values(f: TernaryForm, pts: np.ndarray) -> np.ndarray:
    return np.array([f(p) for p in pts])


def random_rank3(rng) -> tuple[np.ndarray, TernaryForm]:
    q = rng.standard_normal((6, 3))
    g = q @ q.T
    return g, gram_map(g)


class TestGramMap:
    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_fermat_tensors(self, k):
        g = THETA0 if k == 0 else theta_k(k)
        assert np.allclose(gram_map(g).coeffs, fermat().coeffs, atol=0)

    def test_matches_evaluation(self, rng):
        g = rng.standard_normal((6, 6))
        g = g + g.T
        pts = random_points(rng, 20)
        assert np.allclose(form_values(gram_map(g), pts), values_by_evaluation(g, pts), rtol=1e-12, atol=1e-12)

    def test_antisymmetric_part_ignored(self, rng):
        a = rng.standard_normal((6, 6))
        assert np.allclose(gram_map(a - a.T).coeffs, 0, atol=1e-14)


class TestPencil:
    def test_fermat_base(self):
        p = gram_pencil(fermat())
        assert np.array_equal(p.base.entries.real, THETA0)

    def test_directions_in_kernel(self):
        for b in KERNEL_DIRECTIONS:
            assert np.allclose(gram_map(b).coeffs, 0, atol=0)
        assert np.linalg.matrix_rank(KERNEL_DIRECTIONS.reshape(6, 36)) == 6

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_coordinates_of_fermat_tensors(self, k):
        p = gram_pencil(fermat())
        lam = p.coordinates(GramTensor(theta_k(k)))
        assert np.allclose(p.at(lam).entries.real, theta_k(k), atol=1e-14)
        assert np.count_nonzero(np.abs(lam) > 1e-14) == 1

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_every_point_is_a_gram_matrix(self, seed):
        rng = np.random.default_rng(seed)
        f = random_sos_quartic(seed % 10)
        p = gram_pencil(f)
        lam = rng.uniform(-5, 5, 6)
        assert np.linalg.norm(gram_map(p.at(lam)).coeffs - f.coeffs) <= 1e-13 * (1 + np.abs(lam).max())

    def test_pencil_is_complete(self, rng):
        # any Gram matrix of f differs from G0 by a kernel element
        g, f = random_rank3(rng)
        p = gram_pencil(f)
        lam = p.coordinates(GramTensor(g))
        assert np.allclose(p.at(lam).entries.real, g, atol=1e-12)

    def test_complex_form_rejected(self):
        with pytest.raises(InputError):
            gram_pencil(TernaryForm.from_terms(4, {"400": 1j, "040": 1, "004": 1}))

    def test_wrong_degree(self):
        with pytest.raises(InputError):
            gram_pencil(TernaryForm.from_terms(2, {"200": 1}))


class TestTensor:
    def test_theta0_properties(self):
        t = GramTensor(THETA0)
        assert t.is_psd() and t.rank() == 3 and t.is_real()

    def test_theta1_is_psd_rank3(self):
        t = GramTensor(theta_k(1))
        assert t.is_psd() and t.rank() == 3

    def test_indefinite(self):
        t = GramTensor(np.diag([1.0, -1, 0, 0, 0, 0]))
        assert not t.is_psd() and t.rank() == 2

    def test_arithmetic(self):
        a, b = GramTensor(THETA0), GramTensor(theta_k(1))
        assert np.allclose(((a + b) * 0.5).entries, (THETA0 + theta_k(1)) / 2)
        assert np.allclose((b - a).entries, theta_k(1) - THETA0)

    def test_entries_read_only(self):
        t = GramTensor(THETA0)
        with pytest.raises(ValueError):
            t.entries[0, 0] = 5


class TestImageAndFaces:
    def test_theta0_image(self):
        U = image(GramTensor(THETA0))
        target = Subspace(np.eye(6)[:, :3])
        assert U.dim == 3 and U.contains(target) and target.contains(U)

    def test_theta0_is_vertex(self):
        d = describe_face(GramTensor(THETA0))
        assert (d.rank, d.face_dim) == (3, 0)

    def test_square_space_of_coordinate_squares(self):
        U = Subspace(np.eye(6)[:, :3])
        # x^4, y^4, z^4, x^2y^2, x^2z^2, y^2z^2
        assert square_space(U).dim == 6

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
    def test_face_dimension_matches_evaluation(self, rng, k):
        basis = rng.standard_normal((6, k)) + 1j * rng.standard_normal((6, k))
        U = Subspace.span(basis.T)
        assert square_space(U).dim == square_space_dim_by_evaluation(U.basis, rng)
        assert face_dimension(U) == k * (k + 1) // 2 - square_space_dim_by_evaluation(U.basis, rng)

    def test_generic_rank5_is_vertex(self, rng):
        U = Subspace.span(rng.standard_normal((5, 6)))
        assert face_dimension(U) == 0

    def test_point_vanishing_five_space(self, rng):
        # quadratics through a point: their products vanish to order 2 there
        p = rng.standard_normal(3)
        row = quad_values(p[None, :])[0]
        _, _, vh = np.linalg.svd(row[None, :])
        U = Subspace(vh[1:].T)
        assert U.dim == 5
        assert face_dimension(U) == 3
        assert square_space(U).dim == square_space_dim_by_evaluation(U.basis, rng) == 12

    def test_full_space(self):
        assert face_dimension(Subspace(np.eye(6))) == 21 - 15

    def test_empty_space(self):
        assert face_dimension(Subspace(np.zeros((6, 0)))) == 0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6))
    def test_face_dim_bounds(self, seed, k):
        rng = np.random.default_rng(seed)
        U = Subspace.span(rng.standard_normal((k, 6)))
        fd = face_dimension(U)
        assert 0 <= fd <= k * (k + 1) // 2
        assert fd == max(0, k * (k + 1) // 2 - 15)


class TestSubspace:
    def test_span_drops_dependent(self):
        U = Subspace.span([[1, 0, 0, 0, 0, 0], [2, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0]])
        assert U.dim == 2

    def test_distance(self):
        U = Subspace(np.eye(6)[:, :2])
        assert U.distance([0, 0, 1, 0, 0, 0]) == pytest.approx(1)
        assert U.distance([3, 4, 0, 0, 0, 0]) == pytest.approx(0, abs=1e-15)

    def test_real_basis_of_conjugation_closed(self):
        v = np.array([1, 1j, 0, 0, 0, 0])
        U = Subspace.span([v, v.conj()])
        rb = Subspace(U.real_basis())
        assert U.contains(rb) and rb.contains(U)


class TestGramFromImage:
    def test_recovers_theta0(self):
        t = gram_from_image(fermat(), Subspace(np.eye(6)[:, :3]))
        assert np.allclose(t.entries, THETA0, atol=1e-14)
        assert t.diagnostics["residual"] <= 1e-14

    def test_recovers_random_rank3(self, rng):
        g, f = random_rank3(rng)
        t = gram_from_image(f, image(GramTensor(g)))
        assert np.linalg.norm(t.entries - g) <= 1e-10 * np.linalg.norm(g)

    def test_not_in_square_space(self):
        with pytest.raises(NoSolutionError):
            gram_from_image(fermat(), Subspace(np.eye(6)[:, 3:]))

    def test_round_trip_through_forms(self, rng):
        # products of the image basis reproduce f
        g, f = random_rank3(rng)
        U = image(GramTensor(g))
        t = gram_from_image(f, U)
        assert np.linalg.norm(gram_map(t).coeffs - f.coeffs) <= 1e-12 * f.norm


class TestPolish:
    def test_converges_from_perturbation(self, rng):
        g, f = random_rank3(rng)
        e = rng.standard_normal((6, 6)) * 1e-6
        t = polish_low_rank(f, GramTensor(g + e + e.T), 3)
        assert t.diagnostics["residual"] <= 1e-14
        assert t.rank(1e-10) == 3
        assert np.linalg.norm(t.entries - g) <= 1e-8 * np.linalg.norm(g)

    def test_exact_input_unchanged(self, rng):
        g, f = random_rank3(rng)
        t = polish_low_rank(f, GramTensor(g), 3)
        assert np.allclose(t.entries, g, atol=1e-12)


class TestTriangularSos:
    def test_reconstruction_and_shape(self):
        x2, y2, z2 = (TernaryForm.from_terms(2, {k: 1}) for k in ("200", "020", "002"))
        basis = [x2 + y2, y2, z2]
        a = triangular_sos(GramTensor(THETA0), basis)
        assert np.allclose(np.triu(a, 1), 0)
        total = TernaryForm.zero(4)
        for i in range(3):
            s = TernaryForm.zero(2)
            for j in range(i + 1):
                s = s + basis[j] * a[i, j]
            total = total + multiply(s, s)
        assert np.allclose(total.coeffs, fermat().coeffs, atol=1e-12)

    def test_random_psd(self, rng):
        g, f = random_rank3(rng)
        basis = [TernaryForm(2, v) for v in rng.standard_normal((3, 3)) @ image(GramTensor(g)).basis.real.T]
        a = triangular_sos(GramTensor(g), basis)
        total = TernaryForm.zero(4)
        for i in range(3):
            s = sum((basis[j] * a[i, j] for j in range(1, i + 1)), basis[0] * a[i, 0])
            total = total + multiply(s, s)
        assert np.linalg.norm(total.coeffs - f.coeffs) <= 1e-10 * f.norm

    def test_rank_mismatch(self):
        x2 = TernaryForm.from_terms(2, {"200": 1})
        with pytest.raises(RankMismatchError):
            triangular_sos(GramTensor(THETA0), [x2])
