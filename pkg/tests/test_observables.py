import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import pair_domain, random_observables, random_pair_predicate
from saqr.circuit import SizeCapError
from saqr.linalg import NonHermitianError, Tolerance, ket, kron, loewner_leq, outer
from saqr.observables import (
    NotEffectError,
    ObservablePredicate,
    as_observables,
    matrix_rep,
    pred_leq,
    projective_leq,
    sandwich,
)
from saqr.oracle import expectation, random_ket, sample_kets_in
from saqr.predicate import DomainMismatchError
from saqr.qai import ProjectivePredicate

P0 = outer(ket("0"))
PLUS = np.array([1, 1]) / np.sqrt(2)


class TestConstruction:
    def test_bounds_enforced(self):
        with pytest.raises(NotEffectError):
            ObservablePredicate.of([((1,), np.diag([1.5, 0]))])
        with pytest.raises(NotEffectError):
            ObservablePredicate.of([((1,), np.diag([-0.1, 0]))])
        with pytest.raises(NonHermitianError):
            ObservablePredicate.of([((1,), np.array([[0, 0.5], [0, 0]]))])

    def test_zero_and_scaled(self):
        z = ObservablePredicate.zero([(1, 2)])
        assert np.array_equal(z.operators[0], np.zeros((4, 4)))
        a = ObservablePredicate.of([((1,), P0)]).scaled(0.5)
        assert np.allclose(a.operators[0], P0 / 2)

    def test_json_key(self):
        a = ObservablePredicate.of([((1,), P0)])
        assert "observables" in a.to_dict()
        assert ObservablePredicate.from_json(a.to_json()).close_to(a)


class TestMatrixRep:
    def test_two_projectors(self):
        a = ObservablePredicate.of([((1,), P0), ((2,), P0)])
        assert np.allclose(matrix_rep(a, 2), kron(P0, np.eye(2)) + kron(np.eye(2), P0))

    def test_empty(self):
        assert np.array_equal(matrix_rep(ObservablePredicate(()), 2), np.zeros((4, 4)))

    def test_full_domain(self):
        a = random_observables([(1, 2, 3)], np.random.default_rng(0))
        assert np.allclose(matrix_rep(a, 3), a.operators[0])

    def test_cap(self):
        with pytest.raises(SizeCapError):
            matrix_rep(ObservablePredicate(()), 13)

    def test_bounds(self):
        a = random_observables(pair_domain(4), np.random.default_rng(1))
        m = matrix_rep(a, 4)
        assert loewner_leq(np.zeros_like(m), m) and loewner_leq(m, len(a) * np.eye(16))


class TestOrder:
    def test_examples(self):
        a = random_observables(pair_domain(3), np.random.default_rng(2))
        assert pred_leq(a, a)
        assert pred_leq(ObservablePredicate.zero(a.domain), a)
        assert not pred_leq(ObservablePredicate.of([((1,), outer(PLUS))]),
                            ObservablePredicate.of([((1,), P0)]))

    def test_domain_mismatch(self):
        with pytest.raises(DomainMismatchError):
            pred_leq(ObservablePredicate.zero([(1,)]), ObservablePredicate.zero([(2,)]))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 2**32 - 1))
    def test_monotone_matrix_rep(self, n, seed):
        rng = np.random.default_rng(seed)
        b = random_observables(pair_domain(n), rng)
        a = ObservablePredicate.of((s, x * rng.uniform(0, 1)) for s, x in b)
        assert pred_leq(a, b)
        assert loewner_leq(matrix_rep(a, n), matrix_rep(b, n), Tolerance(atol=1e-8))

    def test_projective_leq(self):
        p = ProjectivePredicate.of([((1,), P0)])
        assert projective_leq(p, ProjectivePredicate.identity([(1,)]))
        assert not projective_leq(ProjectivePredicate.identity([(1,)]), p)


class TestSandwich:
    def test_identity_projection(self):
        a = random_observables(pair_domain(3), np.random.default_rng(3))
        assert sandwich(a, ProjectivePredicate.identity(a.domain)).close_to(a)

    def test_orthogonal(self):
        a = ObservablePredicate.of([((1,), outer(ket("1")))])
        out = sandwich(a, ProjectivePredicate.of([((1,), P0)]))
        assert np.allclose(out.operators[0], 0)

    def test_ghz(self):
        pp = outer(kron(PLUS, PLUS))
        a = ObservablePredicate.of([((1, 2), pp), ((2, 3), pp)])
        p00 = outer(ket("00"))
        out = sandwich(a, ProjectivePredicate.of([((1, 2), p00), ((2, 3), p00)]))
        for x in out.operators:
            assert np.allclose(x, p00 / 4)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 2**32 - 1))
    def test_expectation_unchanged_under_p(self, n, seed):
        rng = np.random.default_rng(seed)
        p = random_pair_predicate(n, rng)
        a = random_observables(p.domain, rng)
        b = sandwich(a, p)
        for psi in sample_kets_in(p, n, 4, seed):
            assert abs(expectation(a, psi) - expectation(b, psi)) <= 1e-9

    def test_as_observables(self):
        p = random_pair_predicate(3, np.random.default_rng(4))
        assert as_observables(p).close_to(p)


def test_expectation_is_local():
    rng = np.random.default_rng(5)
    a = random_observables([(1, 2)], rng)
    base = random_ket(2, rng)
    vals = [expectation(a, kron(base, random_ket(3, rng))) for _ in range(5)]
    assert max(vals) - min(vals) <= 1e-9
