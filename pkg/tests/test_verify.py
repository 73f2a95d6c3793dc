import itertools
import random

import pytest

from conftest import random_codebook
from rach import sim
from rach.constructions import bundled_design, design_to_codebook, steiner_triple
from rach.patterns import Codebook, parse_pattern
from rach.verify import (
    BudgetExceeded,
    is_covering_free,
    is_m_ic,
    is_superimposed,
    peels_completely,
    prop1_order,
    rc_condition,
)


def cb_from_texts(n, texts):
    return Codebook(n, tuple(parse_pattern(t, n) for t in texts))


def sic_fully_decodes(patterns):
    """Independent oracle: run the reference SIC decoder to completion."""
    return len(sim.sic_decode(patterns)) == len(patterns)


class TestIsMIc:
    def test_optimal_n3_code(self):
        cb = cb_from_texts(3, ["100", "010", "001", "111"])
        assert is_m_ic(cb, 3).is_m_ic is True

    def test_forbidden_triplet_witness(self):
        cb = cb_from_texts(3, ["010", "100", "110"])
        rep = is_m_ic(cb, 3)
        assert rep.is_m_ic is False and rep.witness == (0, 1, 2)

    def test_distinct_patterns_always_2ic(self):
        rng = random.Random(21)
        for _ in range(50):
            assert is_m_ic(random_codebook(rng), 2).is_m_ic is True

    def test_monotone_in_m(self):
        rng = random.Random(22)
        for _ in range(50):
            cb = random_codebook(rng, n_max=6, size_max=8)
            for m in range(min(4, cb.size), 1, -1):
                if is_m_ic(cb, m).is_m_ic:
                    assert is_m_ic(cb, m - 1).is_m_ic

    def test_budget_indeterminate(self):
        cb = design_to_codebook(steiner_triple(9))
        rep = is_m_ic(cb, 3, budget=10)
        assert rep.is_m_ic is None

    def test_m_out_of_range(self):
        cb = cb_from_texts(3, ["100", "010"])
        with pytest.raises(ValueError):
            is_m_ic(cb, 3)


class TestPeelingOracle:
    def test_equivalence_with_sic_decoder(self):
        # "every sub-subset has a singleton row" == "peeling decodes everything"
        rng = random.Random(23)
        for _ in range(100):
            cb = random_codebook(rng, n_max=7, size_max=7)
            for size in range(1, min(4, cb.size) + 1):
                for idx in itertools.combinations(range(cb.size), size):
                    sub = [cb.patterns[i] for i in idx]
                    assert peels_completely([p.mask for p in sub]) == sic_fully_decodes(sub)


class TestIsSuperimposed:
    def test_unit_vectors(self):
        cb = cb_from_texts(3, ["100", "010", "001"])
        assert is_superimposed(cb, 3)

    def test_separates_from_m_ic(self):
        # 111 owns no private slot within {100, 010, 111}, yet the code is 3-IC
        cb = cb_from_texts(3, ["100", "010", "001", "111"])
        assert not is_superimposed(cb, 3)
        assert is_m_ic(cb, 3).is_m_ic is True

    def test_budget(self):
        cb = design_to_codebook(steiner_triple(9))
        with pytest.raises(BudgetExceeded):
            is_superimposed(cb, 3, budget=10)


class TestIsCoveringFree:
    def test_pairwise_overlaps(self):
        cb = cb_from_texts(3, ["110", "011", "101"])
        assert is_covering_free(cb, 2)

    def test_forbidden_triplet_restated(self):
        # 110 is contained in 010 | 100
        cb = cb_from_texts(3, ["010", "100", "110"])
        assert not is_covering_free(cb, 3)

    def test_m_too_small(self):
        cb = cb_from_texts(3, ["100", "010"])
        with pytest.raises(ValueError):
            is_covering_free(cb, 1)

    def test_s3526_exhaustive(self):
        cb = design_to_codebook(bundled_design("s_3_5_26"))
        assert is_covering_free(cb, 3)


class TestDefinitionEquivalences:
    def test_superimposed_iff_covering_free_and_implies_ic(self):
        rng = random.Random(24)
        for _ in range(100):
            cb = random_codebook(rng, n_max=7, size_max=7)
            m = rng.randint(2, min(4, cb.size))
            sup = is_superimposed(cb, m)
            assert sup == is_covering_free(cb, m)
            if sup:
                assert is_m_ic(cb, m).is_m_ic is True

    def test_prop1_order_implies_superimposed(self):
        cb = design_to_codebook(steiner_triple(9))
        order = prop1_order(cb)
        assert order == 3
        for m in range(1, order + 1):
            assert is_superimposed(cb, m)


class TestProp1Order:
    def test_s3526(self):
        cb = design_to_codebook(bundled_design("s_3_5_26"))
        assert prop1_order(cb) == 3

    def test_rc_code_weight5(self):
        # rows and columns of a 5x5 grid: weight 5, pairwise intersection 1
        rows = [0b11111 << (5 * i) for i in range(5)]
        cols = [sum(1 << (5 * i + j) for i in range(5)) for j in range(5)]
        cb = Codebook.from_masks(25, rows + cols)
        assert prop1_order(cb) == 5
        assert rc_condition(cb).rc

    def test_disjoint_supports_inapplicable(self):
        cb = cb_from_texts(3, ["100", "010", "001"])
        assert prop1_order(cb) is None


class TestRcCondition:
    def test_n24_capacity(self):
        cb = Codebook.from_masks(24, [0b11, 0b110])
        assert rc_condition(cb).pair_capacity == 276

    def test_sts27_satisfies_rc(self):
        cb = design_to_codebook(steiner_triple(27))
        rep = rc_condition(cb)
        assert rep.rc and rep.max_pairwise_intersection == 1

    def test_s3526_violates_rc_but_is_3ic(self):
        cb = design_to_codebook(bundled_design("s_3_5_26"))
        rep = rc_condition(cb)
        assert not rep.rc and rep.max_pairwise_intersection == 2
        assert rep.violating_pair is not None
