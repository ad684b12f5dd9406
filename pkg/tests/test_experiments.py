import json
import random
from fractions import Fraction

import pytest

from frameforge.errors import PreconditionError
from frameforge.experiments import (exp_dichotomy, exp_example23, exp_incomparable, exp_pipeline,
                                    random_vector)
from frameforge.frames import CanonicalBasis, Example23, load_frame
from frameforge.norms import min_norm, nk_norm, subsequence_norm
from frameforge.schedule import NkSchedule
from frameforge.spaces import CoefVector

E = CoefVector.unit
PROJ8 = {"template": "coordinate_projections", "count": 8, "m": "m_k=k"}


def _dump(rep):
    return json.dumps(rep, sort_keys=True, default=str)


# -- odd/even frame --------------------------------------------------------------------

def test_example23_default_passes():
    rep = exp_example23()
    assert rep["passed"]
    assert set(rep["checks"]) == {"a_closed_form", "b_l1plus_profile", "c_nk_growth", "d_reconstruction"}
    assert rep["checks"]["b_l1plus_profile"]["profile"] == [str(n) for n in range(1, 13)]


@pytest.mark.parametrize("seed", [1, 2, 99])
def test_example23_seed_variation(seed):
    assert exp_example23(seed=seed, samples=100)["passed"]


def test_example23_corrupted_vector_fails_closed_form():
    frame = load_frame({"generators": {"type": "example23"}, "overrides": {"3": {"x": E(9).to_json()}}})
    rep = exp_example23(frame, samples=200)
    a = rep["checks"]["a_closed_form"]
    assert not rep["passed"] and not a["passed"]
    witness = CoefVector.from_json(a["counterexample"]["vector"])
    # the witness replays through min_norm
    assert min_norm(frame, witness).value.squared != min_norm(Example23(), witness).value.squared


def test_example23_corrupted_functional_fails_reconstruction():
    frame = load_frame({"generators": {"type": "example23"}, "overrides": {"3": {"f": E(9).to_json()}}})
    rep = exp_example23(frame, samples=200)
    assert not rep["passed"]
    assert rep["checks"]["a_closed_form"]["passed"]
    assert not rep["checks"]["d_reconstruction"]["passed"]


def test_random_vector_support():
    rng = random.Random(0)
    for _ in range(50):
        v = random_vector(rng, 5, 9, 3)
        assert 5 <= v.min_index and v.max_index <= 9 and 1 <= len(v.support) <= 3


# -- incomparable subsequence norms -------------------------------------------------------

def test_incomparable_default():
    rep = exp_incomparable([1, 2, 3, 4], [2, 4])
    assert rep["passed"] and rep["reading"] == "support condition taken for y_{j+1}"
    d3 = next(f for f in rep["forward"] if f["d"] == 3)
    assert d3["passed"] and d3["chain_growth_ok"] and d3["chain_upper_ok"]
    assert rep["converse"]["m_prime"] == 4 and rep["converse"]["passed"]
    assert rep["csv"].startswith("vector_id,norm_a,norm_b,ratio")


def test_incomparable_forward_ratio_replays():
    rep = exp_incomparable([1, 2, 3, 4], [2, 4])
    ks = rep["k"]
    sched = NkSchedule.from_json(rep["schedule"])
    y = CoefVector.from_json(next(f for f in rep["forward"] if f["d"] == 3)["witness"])
    nl = subsequence_norm(Example23(), y, [ks[i - 1] for i in (1, 2, 3, 4)], sched).value
    nm = subsequence_norm(Example23(), y, [ks[i - 1] for i in (2, 4)], sched).value
    assert nl >= nm.scale(2 ** ks[1])  # C = 1 for this frame


def test_incomparable_subset_and_equal():
    rep = exp_incomparable([2, 4], [1, 2, 3, 4])
    assert rep["passed"] and rep["forward"] == [] and rep["converse"]["passed"]
    rep = exp_incomparable([1, 3], [1, 3])
    assert rep["passed"]
    assert all(r == rep["probe_L_over_M"]["ratios"][0] for r in rep["probe_L_over_M"]["ratios"])
    assert rep["probe_L_over_M"]["max_ratio"] == rep["probe_M_over_L"]["max_ratio"]


def test_incomparable_rejects_large_indices():
    with pytest.raises(PreconditionError):
        exp_incomparable([1, 6], [2])


def test_incomparable_growth_precondition_error():
    with pytest.raises(PreconditionError, match="growth precondition"):
        exp_incomparable([1, 2], [2], CanonicalBasis())


# -- dichotomy ------------------------------------------------------------------------------

def test_dichotomy_case_a_on_normalized_odd_blocks():
    blocks = [E(2 * p + 1, Fraction(1, 4 ** p)) for p in range(1, 6)]
    rep = exp_dichotomy(blocks)
    assert rep["verdict"] == "a" and rep["passed"]
    assert rep["cases"][0]["worst_min_ratio"] <= 3


def test_dichotomy_case_b_on_canonical():
    blocks = [E(2 * p + 4) for p in range(1, 5)]
    rep = exp_dichotomy(blocks, CanonicalBasis())
    assert rep["verdict"] == "b" and rep["passed"]
    assert all(c["passed"] for c in rep["cases"][0]["iv"] + rep["cases"][0]["v"])


def test_dichotomy_mixed():
    blocks = [E(3, Fraction(1, 4)), E(8), E(13, Fraction(1, 4 ** 6)), E(20)]
    rep = exp_dichotomy(blocks, sched=NkSchedule.parse("k+1"))
    assert rep["verdict"] == "mixed"
    assert sorted(c["case"] for c in rep["cases"]) == ["a", "b"]


def test_dichotomy_preconditions():
    with pytest.raises(PreconditionError, match="normalized"):
        exp_dichotomy([E(3)])
    with pytest.raises(PreconditionError, match="disjoint"):
        exp_dichotomy([E(4), E(2)])
    with pytest.raises(PreconditionError, match=r"\(i\)"):
        exp_dichotomy([E(2), E(4)], CanonicalBasis(), sched=NkSchedule.parse("k+1"), ks=[5, 5, 6])


def test_dichotomy_normalization_replays():
    blocks = [E(2 * p + 1, Fraction(1, 4 ** p)) for p in range(1, 4)]
    for y in blocks:
        assert nk_norm(Example23(), y, NkSchedule.parse("k+1")).value == 1


# -- pipeline ---------------------------------------------------------------------------------

def test_pipeline_coordinate_projections():
    rep = exp_pipeline(PROJ8, k_max=8)
    assert rep["passed"], rep.get("failed_stage")
    recon = rep["stages"]["reconstruction"]["vectors"]
    assert all(r["boundaries_match"] and r["final_residual_zero"] for r in recon)


def test_pipeline_bad_ops_fail_at_assembly():
    data = {"ops": [{"matrix": {"1": {"1": "1"}}}, {"matrix": {"1": {"1": "1"}}}], "m": [1, 2]}
    rep = exp_pipeline(data)
    assert not rep["passed"] and rep["failed_stage"] == "assemble"


def test_pipeline_weak_certificate_fails_at_find():
    rep = exp_pipeline({**PROJ8, "tail_certificate": "estimate"}, k_max=8)
    assert rep["failed_stage"] == "nk_find"
    assert "tail certificate too weak" in rep["stages"]["nk_find"]["error"]


# -- determinism -------------------------------------------------------------------------------

def test_reports_are_deterministic():
    assert _dump(exp_example23(seed=5, samples=50)) == _dump(exp_example23(seed=5, samples=50))
    assert _dump(exp_incomparable([1, 2, 3, 4], [2, 4], seed=3)) == \
        _dump(exp_incomparable([1, 2, 3, 4], [2, 4], seed=3))
    assert _dump(exp_pipeline(PROJ8, k_max=4)) == _dump(exp_pipeline(PROJ8, k_max=4))
