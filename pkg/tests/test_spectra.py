from __future__ import annotations

from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gramspec.errors import InfeasibleError, InputError, SolverError
from gramspec.forms import TernaryForm, multiply
from gramspec.gram import GramTensor, gram_map, gram_pencil
from gramspec.instances import fermat
from gramspec.sdp import solve_lmi
from gramspec.spectra import (
    SdpProblem,
    face_extreme,
    find_rank4_point,
    goe_matrix,
    interior_point,
    one_dim_face_report,
    pencil_determinant_slice,
    sample_extreme_points,
    sdp_minimize,
    slice_quadruple,
    supporting_face,
    vertex_objective,
)

from conftest import pipeline

THETA0 = np.diag([1.0, 1, 1, 0, 0, 0])


def theta_k(k: int) -> np.ndarray:
    (i, j), d = {1: ((0, 1), 3), 2: ((0, 2), 4), 3: ((1, 2), 5)}[k]
    t = THETA0.copy()
    t[i, j] = t[j, i] = -1
    t[d, d] = 2
    return t


FERMAT_THETAS = [THETA0] + [theta_k(k) for k in (1, 2, 3)]


def sphere_square() -> TernaryForm:
    q = TernaryForm.from_terms(2, {"200": 1, "020": 1, "002": 1})
    return multiply(q, q)


def edge_tensors(p, rank):
    by = p.by_index
    e = next(e for e in p.graph.edges if e.rank == rank)
    return by[e.u].tensor, by[e.v].tensor


class TestSolveLmi:
    def test_two_by_two(self):
        # min x  s.t. [[1, x], [x, 1]] psd  ->  x = -1
        res = solve_lmi([1.0], np.eye(2), np.array([[[0.0, 1], [1, 0]]]))
        assert res.x[0] == pytest.approx(-1, abs=1e-8)

    def test_diagonal_lp(self):
        # min x1 + x2 with x1 >= 1, x2 >= 2 written as a diagonal LMI
        f0 = np.diag([-1.0, -2.0])
        fs = np.array([np.diag([1.0, 0]), np.diag([0, 1.0])])
        res = solve_lmi([1.0, 1.0], f0, fs)
        assert np.allclose(res.x, [1, 2], atol=1e-8)

    def test_duality_certificate(self, rng):
        p = gram_pencil(pipeline("random0").f)
        c = goe_matrix(rng)
        cost = np.einsum("ij,kij->k", c, p.directions)
        res = solve_lmi(cost, p.base.real, p.directions)
        z = res.dual
        # dual feasibility <F_i, Z> = c_i with Z psd, and a vanishing gap
        assert np.allclose(np.einsum("kij,ij->k", p.directions, z), cost, atol=1e-8)
        assert np.linalg.eigvalsh(z)[0] >= -1e-9 * np.linalg.norm(z)
        assert np.linalg.eigvalsh(res.slack)[0] >= -1e-9 * np.linalg.norm(res.slack)
        gap = cost @ res.x + np.sum(p.base.real * z)
        assert abs(gap) <= 1e-8 * (1 + abs(cost @ res.x))
        assert max(res.kkt.values()) <= 1e-9

    def test_unbounded_raises(self):
        # max x subject to x I psd is unbounded
        with pytest.raises(SolverError):
            solve_lmi([-1.0], np.zeros((2, 2)), np.array([np.eye(2)]), max_iter=60)


class TestInteriorPoint:
    @pytest.mark.parametrize("form", [fermat, sphere_square, lambda: pipeline("random0").f])
    def test_positive_definite(self, form):
        f = form()
        lam = interior_point(f)
        g = gram_pencil(f).at(lam)
        assert g.eigenvalues()[0] > 1e-6 * g.eigenvalues()[-1]
        assert np.allclose(gram_map(g).coeffs, f.coeffs, atol=1e-12)

    def test_negative_form(self):
        with pytest.raises(InfeasibleError):
            interior_point(fermat() * -1.0)

    def test_boundary_form(self):
        # x^4 + y^4 vanishes at (0:0:1), so no Gram matrix is definite
        with pytest.raises(InfeasibleError):
            interior_point(TernaryForm.from_terms(4, {"400": 1, "040": 1}))


class TestSdpMinimize:
    def test_recovers_theta0(self):
        s = sdp_minimize(SdpProblem(gram_pencil(fermat()), np.diag([0.0, 0, 0, 1, 1, 1])))
        assert np.allclose(s.tensor.real, THETA0, atol=1e-7)
        assert (s.rank, s.face.face_dim) == (3, 0)
        assert s.objective == pytest.approx(0, abs=1e-8)

    def test_objective_must_be_square(self):
        with pytest.raises(InputError):
            SdpProblem(gram_pencil(fermat()), np.eye(5))

    def test_infeasible_form(self):
        with pytest.raises(InfeasibleError):
            sdp_minimize(SdpProblem(gram_pencil(fermat() * -1.0), np.eye(6)))

    def test_beats_known_feasible_points(self, rng):
        # oracle: every psd Steiner tensor and the interior point are feasible
        p = pipeline("random1")
        pencil = gram_pencil(p.f)
        feasible = [c.tensor.real for c in p.complexes if c.psd] + [pencil.at(interior_point(pencil)).real]
        for _ in range(3):
            c = goe_matrix(rng)
            s = sdp_minimize(SdpProblem(pencil, c))
            assert all(s.objective <= np.sum(c * g) + 1e-8 for g in feasible)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 10))
    def test_value_homogeneous_and_concave(self, seed, scale):
        rng = np.random.default_rng(seed)
        pencil = gram_pencil(fermat())
        c1, c2 = goe_matrix(rng), goe_matrix(rng)
        v1 = sdp_minimize(SdpProblem(pencil, c1), check_interior=False).objective
        v2 = sdp_minimize(SdpProblem(pencil, c2), check_interior=False).objective
        v12 = sdp_minimize(SdpProblem(pencil, c1 + c2), check_interior=False).objective
        vs = sdp_minimize(SdpProblem(pencil, scale * c1), check_interior=False).objective
        assert v12 >= v1 + v2 - 1e-7 * (1 + abs(v1) + abs(v2))
        assert vs == pytest.approx(scale * v1, rel=1e-6, abs=1e-7)


@pytest.fixture(scope="module")
def fermat_samples():
    return sample_extreme_points(fermat(), 50, seed=0)


class TestSampling:
    def test_fermat_histogram(self, fermat_samples):
        h = fermat_samples.histogram
        assert not fermat_samples.failures
        assert sum(h.values()) == 50
        assert {r for r, _ in h} <= {3, 4, 5}
        assert all(fd == 0 for _, fd in h)

    def test_samples_are_certified(self, fermat_samples):
        f = fermat()
        for s in fermat_samples.samples:
            assert max(s.kkt.values()) <= 1e-9
            assert s.tensor.min_eigenvalue() >= -1e-8
            assert np.linalg.norm(gram_map(s.tensor).coeffs - f.coeffs) <= 1e-8

    def test_pataki_range(self, random_pipe):
        out = sample_extreme_points(random_pipe.f, 8, seed=3)
        for s in out.samples:
            assert 3 <= s.rank <= 5
            assert comb(s.rank + 1, 2) - s.face.face_dim <= 15
            if s.rank == 5:
                assert s.face.face_dim in (0, 2)

    def test_deterministic(self):
        a = sample_extreme_points(fermat(), 3, seed=9)
        b = sample_extreme_points(fermat(), 3, seed=9)
        assert all(np.array_equal(x.tensor.entries, y.tensor.entries) for x, y in zip(a.samples, b.samples))


class TestSupportingFace:
    def test_vertex(self):
        d = supporting_face(fermat(), GramTensor(THETA0))
        assert (d.rank, d.face_dim) == (3, 0)

    def test_rank4_segment(self):
        d = supporting_face(fermat(), GramTensor((THETA0 + theta_k(1)) / 2))
        assert (d.rank, d.face_dim) == (4, 1)

    def test_rank5_edge_interior(self, random_pipe):
        a, b = edge_tensors(random_pipe, 5)
        d = supporting_face(random_pipe.f, (a + b) * 0.5)
        assert (d.rank, d.face_dim) == (5, 2)

    def test_interior(self):
        pencil = gram_pencil(fermat())
        d = supporting_face(fermat(), pencil.at(interior_point(pencil)))
        assert (d.rank, d.face_dim) == (6, 6)

    def test_not_psd(self):
        with pytest.raises(InfeasibleError):
            supporting_face(fermat(), GramTensor(2 * THETA0 - theta_k(1)))

    def test_wrong_form(self):
        with pytest.raises(InfeasibleError):
            supporting_face(fermat(), GramTensor(2 * THETA0))


class TestFaceExtreme:
    def test_vertex_recovery(self, random_pipe):
        a, b = edge_tensors(random_pipe, 5)
        for t in (a, b):
            s = face_extreme(random_pipe.f, a, b, vertex_objective(t))
            assert np.linalg.norm(s.tensor.entries - t.entries) <= 1e-6 * t.norm
            assert s.rank == 3

    def test_stays_in_face(self, random_pipe, rng):
        a, b = edge_tensors(random_pipe, 5)
        s = face_extreme(random_pipe.f, a, b, goe_matrix(rng))
        U = (a + b).image()
        assert U.contains(s.tensor.image(1e-6), tol=1e-6)
        assert s.tensor.min_eigenvalue() >= -1e-8
        assert s.rank in (3, 4)

    def test_rank4_edge_endpoint(self, fermat_pipe):
        a, b = edge_tensors(fermat_pipe, 4)
        c = vertex_objective(b)
        s = face_extreme(fermat_pipe.f, a, b, c)
        assert np.allclose(s.tensor.entries, b.entries)

    def test_non_edge(self, random_pipe):
        by = random_pipe.by_index
        u, v = next(k for k, r in random_pipe.graph.pair_ranks.items() if r == 6)
        with pytest.raises(InputError):
            face_extreme(random_pipe.f, by[u].tensor, by[v].tensor, np.eye(6))

    @pytest.mark.parametrize("name", ["fermat", "random0", "random1"])
    def test_rank4_point(self, name):
        p = pipeline(name)
        s = find_rank4_point(p.f, p.complexes, p.graph)
        assert s is not None and s.rank == 4
        assert s.face.face_dim == 0
        assert np.linalg.norm(gram_map(s.tensor).coeffs - p.f.coeffs) <= 1e-8 * p.f.norm


class TestOneDimFaces:
    def test_fermat(self, fermat_pipe):
        faces = one_dim_face_report(fermat_pipe.f, fermat_pipe.bits, fermat_pipe.complexes, fermat_pipe.graph)
        assert len(faces) == 3
        points = sorted(tuple(np.round(np.abs(x.point.coords), 8)) for x in faces)
        assert points == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
        assert all(x.face_dim == 1 for x in faces)

    def test_generic(self, random_pipe):
        p = random_pipe
        assert one_dim_face_report(p.f, p.bits, p.complexes, p.graph) == []

    @pytest.mark.parametrize("name,tol", [("fab2.3,3.1", 1e-7), ("fab7.3,9.1", 1e-10)])
    def test_concurrent_but_not_psd(self, name, tol):
        p = pipeline(name, tol)
        assert one_dim_face_report(p.f, p.bits, p.complexes, p.graph) == []


class TestSlice:
    def test_pipeline_quadruple_is_fermat_quadruple(self, fermat_pipe):
        got = [t.real for t in slice_quadruple(fermat_pipe.complexes, fermat_pipe.graph)]
        assert np.allclose(got[0], THETA0, atol=1e-9)
        for want in FERMAT_THETAS[1:]:
            assert sum(np.allclose(g, want, atol=1e-9) for g in got[1:]) == 1

    def test_centre_and_quarter_point(self):
        data = pencil_determinant_slice([GramTensor(t) for t in FERMAT_THETAS], grid=0, box=(0.0, 0.5))
        assert data.points.tolist() == [[0.25, 0.25, 0.25]]
        direct = np.linalg.det(sum(FERMAT_THETAS) / 4)
        assert data.det[0] == pytest.approx(direct, rel=1e-12)
        assert data.lam_min[0] == pytest.approx(np.linalg.eigvalsh(sum(FERMAT_THETAS) / 4)[0], abs=1e-14)
        assert data.lam_min[0] > 0

    def test_interpolant(self, rng):
        data = pencil_determinant_slice([GramTensor(t) for t in FERMAT_THETAS], grid=3)
        assert data.residual <= 1e-10
        assert len(data.coefficients) == 84
        for lam in rng.uniform(0, 1, (10, 3)):
            g = FERMAT_THETAS[0] + sum(l * (t - FERMAT_THETAS[0]) for l, t in zip(lam, FERMAT_THETAS[1:]))
            assert data.polynomial(lam)[0] == pytest.approx(np.linalg.det(g), abs=1e-10)

    def test_vertex_rank_drop(self):
        data = pencil_determinant_slice([GramTensor(t) for t in FERMAT_THETAS], grid=2)
        assert data.points.shape == (8, 3)
        assert abs(data.det[0]) <= 1e-14
        assert data.points[1].tolist() == [0, 0, 1]

    def test_wrong_count(self):
        with pytest.raises(InputError):
            pencil_determinant_slice([GramTensor(t) for t in FERMAT_THETAS[:3]], grid=2)

    def test_different_forms(self):
        ts = [GramTensor(t) for t in FERMAT_THETAS]
        ts[2] = GramTensor(2 * FERMAT_THETAS[2])
        with pytest.raises(InputError):
            pencil_determinant_slice(ts, grid=2)

    def test_affinely_dependent(self):
        ts = [GramTensor(t) for t in (THETA0, theta_k(1), (THETA0 + theta_k(1)) / 2, theta_k(2))]
        with pytest.raises(InputError):
            pencil_determinant_slice(ts, grid=2)

    def test_empty_box(self):
        with pytest.raises(InputError):
            pencil_determinant_slice([GramTensor(t) for t in FERMAT_THETAS], grid=2, box=(1.0, 1.0))
