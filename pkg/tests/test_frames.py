import json
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from frameforge.errors import NoCertificateError, PreconditionError
from frameforge.frames import (CanonicalBasis, Example23, ExplicitFrame, analysis, frame_constant,
                               frame_to_spec, interval_operator, load_frame, partial_reconstruction,
                               reconstruction_residual, shrinking_tail_bound, synthesis)
from frameforge.reals import CertifiedReal
from frameforge.spaces import AmbientSpace, CoefVector, ambient_norm, dual_norm, linear_combination, pair
from oracles import coef_vectors, op_matrix

E = CoefVector.unit
V = CoefVector.from_dense
BUILTINS = [CanonicalBasis(), Example23(), CanonicalBasis("L1"), Example23("LINF")]


def test_partial_reconstruction_examples():
    x = V([1, 1, 1])
    assert partial_reconstruction(CanonicalBasis(), 2, 3, x) == E(2) + E(3)
    assert partial_reconstruction(Example23(), 2, 4, x) == E(2) + E(3)
    assert partial_reconstruction(Example23(), 1, 1, E(1)) == E(1)
    with pytest.raises(PreconditionError):
        partial_reconstruction(Example23(), 3, 2, x)


def test_synthesis_examples():
    ex = Example23()
    assert synthesis(ex, 1, 3, E(1) + E(3)) == E(1) * 2
    assert synthesis(CanonicalBasis(), 1, 4, E(5)).is_zero()
    assert synthesis(ex, 2, 2, E(2)) == E(2)
    with pytest.raises(PreconditionError):
        synthesis(ex, 2, 1, E(2))


def test_analysis_examples():
    res = analysis(CanonicalBasis(), E(3))
    assert res.coefficients == E(3) and res.n_star == 3
    assert analysis(Example23(), E(2)).coefficients == E(2)
    assert analysis(Example23(), E(1)).coefficients == E(1)
    assert analysis(Example23(), E(3)).coefficients == E(4)


def test_frame_constant_examples():
    fc = frame_constant(CanonicalBasis(), 10)
    assert fc.lower == 1 and fc.upper == 1
    fc = frame_constant(Example23(), 8)
    assert fc.lower >= 1 and fc.upper == 1


def test_frame_constant_example23_against_svd():
    ex, h = Example23(), 8
    best = 0.0
    for m in range(1, h + 1):
        for n in range(m, h + 1):
            mat = op_matrix(interval_operator(ex, m, n, box=h), h)
            best = max(best, float(np.linalg.norm(mat, 2)))
    fc = frame_constant(ex, h)
    assert abs(float(fc.lower) - best) < 1e-9
    assert fc.lower == 1  # every interval operator is a coordinate projection


def test_frame_constant_finite_frame_is_exact():
    pairs = [(V([1, 1]), V([Fraction(1, 2), Fraction(1, 2)])), (V([1, -1]), V([Fraction(1, 2), Fraction(-1, 2)]))]
    frame = ExplicitFrame(pairs)
    fc = frame_constant(frame, 2)
    assert fc.upper is not None and fc.upper == fc.lower
    assert abs(float(fc.lower) - 1) < 1e-12


def test_shrinking_tail_bound_examples():
    ex = Example23()
    assert shrinking_tail_bound(ex, E(1), 2).is_zero()
    assert shrinking_tail_bound(ex, E(3), 5).is_zero()
    assert shrinking_tail_bound(ex, E(3), 4) == 1
    for j in range(1, 6):
        assert shrinking_tail_bound(CanonicalBasis(), E(j), j + 1).is_zero()
    bare = ExplicitFrame([(E(1), E(1))])
    with pytest.raises(NoCertificateError, match="no shrinking certificate"):
        shrinking_tail_bound(bare, E(1), 1)


@pytest.mark.parametrize("frame", BUILTINS, ids=lambda f: f.name)
@given(coef_vectors(max_index=15), st.integers(2, 20))
def test_telescoping(frame, x, m):
    n = m + 7
    whole = partial_reconstruction(frame, 1, n, x)
    assert whole == partial_reconstruction(frame, 1, m - 1, x) + partial_reconstruction(frame, m, n, x)


@pytest.mark.parametrize("frame", BUILTINS, ids=lambda f: f.name)
@given(coef_vectors(max_index=30))
def test_reconstruction_at_n_star(frame, x):
    n_star = analysis(frame, x).n_star
    assert reconstruction_residual(frame, x, n_star).is_zero()
    assert reconstruction_residual(frame, x).is_zero()


def test_example23_generator_table():
    ex = Example23()
    assert ex.vector_at(1) == E(1) and ex.functional_at(1) == E(1)
    for i in range(1, 5001):
        assert ex.vector_at(2 * i) == E(i + 1)
        assert ex.functional_at(2 * i) == E(i + 1)
        assert ex.vector_at(2 * i + 1) == E(1)
        assert ex.functional_at(2 * i + 1).is_zero()


def _dual_tail_brute(frame, j, lo, hi):
    """max over lo <= m <= n <= hi of || sum_{i=m}^n f_j(x_i) f_i ||_dual."""
    fj = frame.functional_at(j)
    coeffs = [pair(fj, frame.vector_at(i)) for i in range(1, hi + 1)]
    best = CertifiedReal.ZERO
    for m in range(lo, hi + 1):
        for n in range(m, hi + 1):
            g = linear_combination((coeffs[i - 1], frame.functional_at(i)) for i in range(m, n + 1))
            val = dual_norm(g, frame.space)
            if val.sq_lo > best.sq_lo:
                best = val
    return best


def _coef_tail_brute(frame, x, lo, hi):
    best = CertifiedReal.ZERO
    for m in range(lo, hi + 1):
        for n in range(m, hi + 1):
            val = ambient_norm(partial_reconstruction(frame, m, n, x), frame.space)
            if val.sq_lo > best.sq_lo:
                best = val
    return best


@pytest.mark.parametrize("frame", [CanonicalBasis(), Example23()], ids=lambda f: f.name)
def test_certificate_soundness(frame):
    rng = random.Random(11)
    width = 8
    for _ in range(500):
        x = CoefVector({rng.randint(1, 12): Fraction(rng.randint(-5, 5) or 1, rng.randint(1, 4))
                        for _ in range(rng.randint(1, 4))})
        n = rng.randint(1, 20)
        assert _coef_tail_brute(frame, x, n, n + width).sq_hi <= frame.coef_tail(x, n).sq_hi
        j = rng.randint(1, 20)
        assert _dual_tail_brute(frame, j, n, n + width).sq_lo <= frame.dual_tail(j, n).sq_hi


@pytest.mark.parametrize("frame", [CanonicalBasis(), Example23()], ids=lambda f: f.name)
def test_certificates_monotone(frame):
    for j in range(1, 15):
        tails = [frame.dual_tail(j, n) for n in range(1, 40)]
        assert all(b.sq_hi <= a.sq_hi for a, b in zip(tails, tails[1:]))
        assert tails[-1].is_zero()


def test_load_frame_roundtrip():
    for frame in BUILTINS:
        spec = frame_to_spec(frame)
        again = load_frame(json.loads(json.dumps(spec)))
        assert type(again) is type(frame) and again.space is frame.space
    spec = {"space": "L1", "generators": {"type": "explicit", "pairs": [
        {"x": E(1).to_json(), "f": E(1).to_json()}, {"x": E(2).to_json(), "f": E(2).to_json()}]},
        "dual_tail": {"type": "enumerate"}}
    frame = load_frame(spec)
    assert frame.length == 2 and frame.space is AmbientSpace.L1 and frame.has_dual_tail
    assert frame_to_spec(load_frame(frame_to_spec(frame))) == frame_to_spec(frame)


def test_override_changes_generators():
    spec = {"generators": {"type": "example23"}, "overrides": {"3": {"x": E(9).to_json()}}}
    frame = load_frame(spec)
    assert frame.vector_at(3) == E(9) and frame.vector_at(5) == E(1)
    assert frame_to_spec(load_frame(frame_to_spec(frame))) == frame_to_spec(frame)


def test_zero_frame_vector_rejected():
    with pytest.raises(PreconditionError):
        ExplicitFrame([(CoefVector({}), E(1))])


def test_unknown_generator_rejected():
    with pytest.raises(ValueError):
        load_frame({"generators": {"type": "nope"}})
