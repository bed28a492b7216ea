from fractions import Fraction

import pytest

from cfspectra.cf_builder import (
    CFSchedule,
    CFStage,
    DeltaBlock,
    build_schedule,
    concat_delta_blocks,
    delayed_staircase_cut,
    rigid_count,
    rigid_staircase_cut,
    staircase_cut,
    validate,
)
from cfspectra.errors import ParameterError, ScheduleError


def oracle_two_regime(h, i, r):
    """Direct recursion: +h below i, +h+(j-i) from i on."""
    c = [0]
    for j in range(1, r):
        c.append(c[-1] + h + (j - i if j >= i else 0))
    return c


def oracle_three_regime(h, i, r):
    c = [0]
    for j in range(1, r):
        if j < i:
            c.append(c[-1] + h)
        elif j < 2 * i:
            c.append(c[-1] + h + 1)
        else:
            c.append(c[-1] + h + (j - 2 * i))
    return c


class TestCutShapes:
    def test_two_regime_frozen_example(self):
        st = rigid_staircase_cut(5, 2, 4)
        assert st.cuts == (0, 5, 10, 16)
        assert st.new_height == 21

    def test_two_regime_pure_arithmetic(self):
        st = rigid_staircase_cut(7, 5, 5)
        assert st.cuts == tuple(7 * j for j in range(5))
        assert st.spacer_count() == 0

    def test_two_regime_small(self):
        # recursion oracle: h=1, i=1, r=3 gives 0, 0+1+0, 1+1+1
        assert oracle_two_regime(1, 1, 3) == [0, 1, 3]
        st = rigid_staircase_cut(1, 1, 3)
        assert st.cuts == (0, 1, 3)

    @pytest.mark.parametrize("h,i,r", [(1, 1, 2), (3, 2, 7), (10, 4, 4), (2, 1, 9)])
    def test_two_regime_matches_oracle(self, h, i, r):
        assert list(rigid_staircase_cut(h, i, r).cuts) == oracle_two_regime(h, i, r)

    def test_two_regime_rejects_bad_parameters(self):
        with pytest.raises(ParameterError):
            rigid_staircase_cut(5, 0, 4)
        with pytest.raises(ParameterError):
            rigid_staircase_cut(5, 5, 4)
        with pytest.raises(ParameterError):
            rigid_staircase_cut(5, 1, 1)

    def test_three_regime_frozen_example(self):
        st = delayed_staircase_cut(5, 2, 6)
        assert st.cuts == (0, 5, 11, 17, 22, 28)

    def test_three_regime_no_staircase_at_boundary(self):
        st = delayed_staircase_cut(4, 3, 6)
        assert st.regimes == ("rigid",) * 3 + ("offset",) * 3
        assert st.cuts == (0, 4, 8, 13, 18, 23)

    def test_three_regime_small(self):
        assert oracle_three_regime(1, 1, 4) == [0, 2, 3, 5]
        assert delayed_staircase_cut(1, 1, 4).cuts == (0, 2, 3, 5)

    @pytest.mark.parametrize("h,i,r", [(1, 1, 2), (5, 2, 8), (3, 3, 9)])
    def test_three_regime_matches_oracle(self, h, i, r):
        assert list(delayed_staircase_cut(h, i, r).cuts) == oracle_three_regime(h, i, r)

    def test_three_regime_rejects_overflow(self):
        with pytest.raises(ParameterError):
            delayed_staircase_cut(5, 4, 6)

    def test_staircase_frozen_examples(self):
        assert staircase_cut(3, 4).cuts == (0, 3, 7, 12)
        assert staircase_cut(9, 2).cuts == (0, 9)
        assert staircase_cut(1, 3).cuts == (0, 1, 3)

    def test_staircase_second_difference_is_one(self):
        st = staircase_cut(4, 8)
        diffs = [b - a for a, b in zip(st.cuts, st.cuts[1:])]
        assert all(d2 - d1 == 1 for d1, d2 in zip(diffs, diffs[1:]))

    def test_disjointness_and_containment(self):
        for st in [
            rigid_staircase_cut(5, 2, 6),
            delayed_staircase_cut(5, 2, 6),
            staircase_cut(5, 6),
        ]:
            assert st.min_gap() >= st.base_height
            assert st.new_height == st.cuts[-1] + st.base_height


class TestSchedule:
    def test_heights_chain(self):
        sched = build_schedule(
            1,
            [
                {"kind": "rigid_staircase", "i": 2, "r": 3},
                {"kind": "rigid_staircase", "i": 2, "r": 4},
            ],
        )
        assert sched.heights() == [1, 3, 13]
        assert sched.height(2) == 13

    def test_broken_chain_rejected(self):
        st1 = rigid_staircase_cut(1, 2, 3, index=1)
        st2 = rigid_staircase_cut(99, 2, 3, index=2)
        with pytest.raises(ScheduleError):
            CFSchedule(1, (st1, st2))

    def test_json_roundtrip(self):
        sched = concat_delta_blocks(
            [DeltaBlock(Fraction(1, 2), 2), DeltaBlock(Fraction(1, 4), 2)]
        )
        again = CFSchedule.from_json(sched.to_json())
        assert again == sched

    def test_truncate(self):
        sched = concat_delta_blocks([DeltaBlock(Fraction(1, 2), 4)])
        assert sched.truncate(2).depth == 2
        assert sched.truncate(2).heights() == sched.heights()[:3]


class TestDeltaBlocks:
    def test_single_block_is_identity(self):
        blk = DeltaBlock(Fraction(1, 2), 3)
        sched = concat_delta_blocks([blk])
        assert sched.depth == 3
        assert [st.r_count for st in sched.stages] == [2, 3, 4]

    def test_two_blocks_seam(self):
        sched = concat_delta_blocks(
            [DeltaBlock(Fraction(1, 2), 3), DeltaBlock(Fraction(1, 4), 3)]
        )
        # heights chain continuously across the seam
        assert sched.stages[3].base_height == sched.stages[2].new_height
        # column counts reset to 2, 3, 4 inside block 2
        assert [st.r_count for st in sched.stages[3:]] == [2, 3, 4]
        assert [st.block for st in sched.stages] == [1, 1, 1, 2, 2, 2]

    def test_non_monotone_deltas_rejected(self):
        with pytest.raises(ScheduleError):
            concat_delta_blocks(
                [DeltaBlock(Fraction(1, 4), 2), DeltaBlock(Fraction(1, 2), 2)]
            )

    def test_delta_tracking_within_one_over_r(self):
        blocks = [DeltaBlock(Fraction(1, 2**j), 2) for j in range(1, 5)]
        sched = concat_delta_blocks(blocks)
        for st in sched.stages:
            assert abs(Fraction(st.i_count, st.r_count) - st.delta) <= Fraction(1, st.r_count)

    def test_rigid_count_rounds_to_nearest(self):
        assert rigid_count(Fraction(1, 2), 8) == 4
        assert rigid_count(Fraction(1, 16), 4) == 1  # clamped up to 1
        assert rigid_count(Fraction(1, 2), 7, "delayed_staircase") == 3  # 2i <= r


class TestValidate:
    def test_generated_stage_passes(self):
        sched = build_schedule(5, [{"kind": "rigid_staircase", "i": 2, "r": 4}])
        rep = validate(sched)
        assert rep.ok
        assert rep.stage_checks[0]["columns_disjoint"]

    def test_gap_violation_flagged(self):
        bad = CFStage(
            index=1, base_height=5, cuts=(0, 3, 8), i_count=2, r_count=3,
            kind="rigid_staircase", regimes=("rigid", "rigid", "staircase"),
        )
        rep = validate(CFSchedule(5, (bad,)))
        assert not rep.ok
        assert any("columns_disjoint" in f for f in rep.failures)

    def test_pure_staircase_depth_12(self):
        specs = [{"kind": "staircase", "r": n} for n in range(2, 14)]
        sched = build_schedule(1, specs)
        rep = validate(sched)
        assert rep.ok
        assert rep.ratio_bounded
        assert all(q == 0 for q in rep.mixing_ratios)  # i = 0 convention
        assert rep.mixing_trend_ok
        assert any("diagnostic-only" in w for w in rep.warnings)

    def test_ratio_monotone_and_bounded(self):
        sched = concat_delta_blocks(
            [DeltaBlock(Fraction(1, 2), 3), DeltaBlock(Fraction(1, 4), 3)]
        )
        rep = validate(sched)
        assert rep.ok
        assert all(b >= a for a, b in zip(rep.ratios, rep.ratios[1:]))
        assert 0 <= rep.spacer_fraction < 1

    def test_spacer_fraction_zero_for_pure_arithmetic(self):
        sched = build_schedule(2, [{"kind": "rigid_staircase", "i": 3, "r": 3}])
        assert validate(sched).spacer_fraction == 0

    def test_mixing_trend_flagged_when_increasing(self):
        # growing i with slowly growing h makes i^2/h increase
        specs = [{"kind": "rigid_staircase", "i": j, "r": j, "delta": None} for j in (2, 2, 2, 3)]
        specs = [{"kind": "rigid_staircase", "i": s["i"], "r": s["r"]} for s in specs]
        sched = build_schedule(1, specs)
        rep = validate(sched)
        assert not rep.mixing_trend_ok
