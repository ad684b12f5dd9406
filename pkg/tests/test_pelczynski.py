import random
from fractions import Fraction

import numpy as np
import pytest

from frameforge.errors import PreconditionError, WeakCertificateError
from frameforge.frames import partial_reconstruction
from frameforge.pelczynski import (AuerbachSystem, SplitSystem, assemble_bap_frame, auerbach_basis,
                                   coordinate_projection, load_operator_prefix, operator_from_json,
                                   operator_to_json, split_operator, splits_from_rule, verify_pel)
from frameforge.linalg import det
from frameforge.schedule import find_schedule, validate_schedule
from frameforge.spaces import AmbientSpace, CoefVector, FiniteRankOperator, ambient_norm, dual_norm, operator_norm
from oracles import op_matrix

L1, L2, LINF = AmbientSpace.L1, AmbientSpace.L2, AmbientSpace.LINF
V = CoefVector.from_dense
E = CoefVector.unit


def random_operator(rng, sp, n=4, rank=None):
    rank = rank or rng.randint(1, 3)
    terms = []
    for _ in range(rank):
        f = CoefVector({i: Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for i in range(1, n + 1)})
        x = CoefVector({i: Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for i in range(1, n + 1)})
        if not f.is_zero() and not x.is_zero():
            terms.append((f, x))
    if not terms:
        terms = [(E(1), E(1))]
    return FiniteRankOperator(tuple(terms), sp)


# -- Auerbach bases ---------------------------------------------------------------------

def test_auerbach_l2_orthogonal_pair():
    sys_ = auerbach_basis([V([1, 1]), V([1, -1])], L2)
    assert sys_.tau == 0 and sys_.check()
    for r in (1, 2):
        assert sys_.rank_one_norm(r) == 1


def test_auerbach_l1_coordinates():
    sys_ = auerbach_basis([E(1), E(2)], L1)
    assert sys_.vectors == (E(1), E(2)) and sys_.functionals == (E(1), E(2))
    assert sys_.tau == 0 and sys_.method == "coordinates"


def test_auerbach_dependent_span_rejected():
    with pytest.raises(PreconditionError):
        auerbach_basis([V([1, 1]), V([2, 2])], L1)


def _grid_max_det(step=1e-3):
    """Max |det(u, v)| with u, v on the boundary of the l_inf unit square."""
    t = np.arange(-1, 1, step)
    ones = np.ones_like(t)
    pts = np.concatenate([np.stack([ones, t], 1), np.stack([-ones, t], 1),
                          np.stack([t, ones], 1), np.stack([t, -ones], 1)])
    best = 0.0
    for chunk in np.array_split(pts, 16):
        d = np.abs(np.outer(chunk[:, 0], pts[:, 1]) - np.outer(chunk[:, 1], pts[:, 0]))
        best = max(best, float(d.max()))
    return best


def test_auerbach_linf_max_det_against_grid():
    sys_ = auerbach_basis([V([1, 0]), V([1, 1])], LINF)
    vecs = [[sys_.vectors[c][r] for c in range(2)] for r in (1, 2)]
    ours = abs(float(det(vecs)))
    assert ours >= _grid_max_det() - 1e-3
    pm = sys_.pairing_matrix()
    assert all(abs(float(pm[i][j]) - (i == j)) <= 1e-6 for i in range(2) for j in range(2))
    for v, f in zip(sys_.vectors, sys_.functionals):
        assert abs(float(ambient_norm(v, LINF)) - 1) <= 1e-6
        assert abs(float(dual_norm(f, LINF)) - 1) <= 1e-6


@pytest.mark.parametrize("sp", [L1, LINF])
def test_auerbach_numeric_three_dim(sp):
    span = [V([1, 2, 0, 1]), V([0, 1, -1, 0]), V([1, 0, 1, 3])]
    sys_ = auerbach_basis(span, sp)
    assert sys_.check() and sys_.tau <= 1e-6
    assert AuerbachSystem.from_json(sys_.to_json()) == sys_


# -- splitting -------------------------------------------------------------------------

def test_split_identity_on_line():
    a = coordinate_projection(1)
    s = split_operator(a, 2)
    assert s.pairs == ((E(1), E(1) / 2), (E(1), E(1) / 2))
    half = s.partial_operator(1, 1)
    assert (half - a.scale(Fraction(1, 2))).is_zero()
    assert s.partial_operator(1, 0).is_zero()
    assert (s.partial_operator(1, 2) - a).is_zero()


def test_split_rank_two_l2_against_svd():
    rng = random.Random(4)
    a = random_operator(rng, L2, n=3, rank=2)
    s = split_operator(a, 3)
    rep = verify_pel(s)
    assert rep.passed and rep.max_defect.is_zero()
    norm_a = float(np.linalg.norm(op_matrix(a, 3), 2))
    for q in range(3):
        for r in range(1, s.d + 1):
            block = np.linalg.norm(op_matrix(s.partial_operator(q * s.d + 1, q * s.d + r), 3), 2)
            assert block <= r / 3 * norm_a + 1e-9


def test_split_json_roundtrip():
    a = random_operator(random.Random(1), LINF, n=3, rank=2)
    s = split_operator(a, 2)
    again = SplitSystem.from_json(s.to_json())
    assert again.pairs == s.pairs and verify_pel(again).passed
    assert operator_to_json(operator_from_json(operator_to_json(a))) == operator_to_json(a)


def test_corrupted_split_fails_at_covering_q():
    rng = random.Random(9)
    a = random_operator(rng, L2, n=3, rank=2)
    s = split_operator(a, 3)
    assert s.d == 2
    j = 3  # q = 1, r = 1
    pairs = list(s.pairs)
    x, f = pairs[j - 1]
    pairs[j - 1] = (x, f * 2)
    bad = SplitSystem(tuple(pairs), s.source, s.d, s.m, s.auerbach)
    rep = verify_pel(bad)
    assert not rep.passed and rep.first_failing_q == 2
    expected = operator_norm(FiniteRankOperator.rank_one(f, x, L2))
    assert rep.equality_defects[2] == expected
    assert all(d.is_zero() for d in rep.equality_defects[:2])


def test_exact_telescoping_random():
    rng = random.Random(21)
    for _ in range(10):
        a = random_operator(rng, rng.choice([L1, L2, LINF]))
        m = rng.randint(1, 4)
        s = split_operator(a, m)
        for q in range(1, m + 1):
            step = s.partial_operator(1, q * s.d) - s.partial_operator(1, (q - 1) * s.d)
            assert (step - a.scale(Fraction(1, m))).is_zero()


def test_block_bound_random_operators():
    rng = random.Random(0)
    for _ in range(100):
        a = random_operator(rng, L2)
        for m in (1, 2, 5):
            rep = verify_pel(split_operator(a, m))
            assert rep.passed, rep.to_json()


# -- assembly -----------------------------------------------------------------------------

def test_assemble_single_line():
    built = assemble_bap_frame([coordinate_projection(1)], [1])
    assert built.frame.pairs == [(E(1), E(1))]


def test_assemble_coordinate_projections():
    ops = [coordinate_projection(k) for k in range(1, 6)]
    built = assemble_bap_frame(ops, "m_k=k")
    assert built.block_ends == [1, 3, 6, 10, 15]
    frame = built.frame
    x = V([1, -2, 3, Fraction(1, 2), 5])
    # residual after completing block k is x minus its first k coordinates
    for k, end in enumerate(built.block_ends, start=1):
        resid = x - partial_reconstruction(frame, 1, end, x)
        assert resid == x - x.restrict(1, k)
    sched = find_schedule(frame, 6)
    assert validate_schedule(frame, sched, 6, frame.length).passed


def test_assembled_residual_matches_operator_sum():
    rng = random.Random(2)
    e1, e2 = V([1, 1]), V([1, -1])
    ops = [FiniteRankOperator.rank_one(e1 / 2, e1, L2), FiniteRankOperator.rank_one(e2 / 2, e2, L2)]
    built = assemble_bap_frame(ops, [1, 2])
    for _ in range(10):
        x = V([rng.randint(-5, 5), rng.randint(-5, 5)])
        acc = CoefVector({})
        for a, end in zip(ops, built.block_ends):
            acc = acc + a.apply(x)
            assert x - partial_reconstruction(built.frame, 1, end, x) == x - acc


def test_assemble_errors():
    ops = [coordinate_projection(1), coordinate_projection(2)]
    with pytest.raises(PreconditionError, match="does not decay"):
        assemble_bap_frame(ops, [1, 1])
    with pytest.raises(PreconditionError, match="must not increase"):
        assemble_bap_frame([coordinate_projection(k) for k in range(1, 4)], [1, 3, 2])
    with pytest.raises(PreconditionError, match="sum of A_k x"):
        assemble_bap_frame([coordinate_projection(1), coordinate_projection(1)], [1, 2])
    with pytest.raises(PreconditionError):
        splits_from_rule("n=k", [1])
    assert splits_from_rule("m_k=k*d_k", [2, 1, 3]) == [2, 2, 9]


def test_estimate_certificate_too_weak():
    ops = [coordinate_projection(k) for k in range(1, 9)]
    built = assemble_bap_frame(ops, "m_k=k", tail_certificate="estimate")
    with pytest.raises(WeakCertificateError, match="tail certificate too weak"):
        find_schedule(built.frame, 8)


def test_certificate_modes_are_sound():
    ops = [coordinate_projection(k) for k in range(1, 5)]
    exact = assemble_bap_frame(ops, "m_k=k", tail_certificate="exact").frame
    for mode in ("min", "estimate"):
        frame = assemble_bap_frame(ops, "m_k=k", tail_certificate=mode).frame
        for j in range(1, frame.length + 1):
            for n in range(1, frame.length + 1):
                assert exact.dual_tail(j, n).hi <= frame.dual_tail(j, n).hi


def test_load_operator_prefix_forms():
    ops, opts = load_operator_prefix({"template": "coordinate_projections", "count": 3, "m": "m_k=k"})
    assert len(ops) == 3 and opts == {"m": "m_k=k"}
    ops, _ = load_operator_prefix({"ops": [{"matrix": {"1": {"1": "1"}}}]})
    assert ops[0].apply(E(1)) == E(1)
    with pytest.raises(PreconditionError):
        load_operator_prefix({})
