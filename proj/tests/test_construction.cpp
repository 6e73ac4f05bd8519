#include "staircase/construction.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace staircase;
using staircase::testing::frac;

namespace {

StaircaseParams sqrt_law() { return StaircaseParams::power_law(0.5); }

}  // namespace

TEST(RankSequence, SquareRootLawExamples) {
    auto p = sqrt_law();
    EXPECT_EQ(rank_sequence(p, 6), 2);
    EXPECT_EQ(rank_sequence(p, 7), 3);
    EXPECT_EQ(rank_sequence(p, 0), 2);
    EXPECT_EQ(rank_sequence(p, 12), 3);
    EXPECT_EQ(rank_sequence(p, 13), 4);
}

TEST(RankSequence, FloorRounding) {
    auto p = StaircaseParams::power_law(0.5, Rounding::floor);
    EXPECT_EQ(rank_sequence(p, 8), 2);
    EXPECT_EQ(rank_sequence(p, 9), 3);
    // exact squares must not fall to the previous integer
    EXPECT_EQ(rank_sequence(p, 10000), 100);
}

TEST(RankSequence, MonotoneUnderLaw) {
    for (double d : {0.1, 0.15, 0.5, 1.0}) {
        auto p = StaircaseParams::power_law(d);
        int prev = 0;
        for (int j = 0; j < 5000; ++j) {
            int r = rank_sequence(p, j);
            EXPECT_GE(r, 2);
            EXPECT_GE(r, prev);
            prev = r;
        }
    }
}

TEST(RankSequence, OverrideExhausted) {
    StaircaseParams p;
    p.override_ranks = std::vector<int>{2, 3};
    EXPECT_EQ(rank_sequence(p, 1), 3);
    EXPECT_THROW(rank_sequence(p, 2), std::out_of_range);
    p.repeat_last = true;
    EXPECT_EQ(rank_sequence(p, 50), 3);
}

TEST(Params, Validation) {
    StaircaseParams p = sqrt_law();
    EXPECT_NO_THROW(p.validate());
    EXPECT_FALSE(p.warnings().empty());
    EXPECT_TRUE(StaircaseParams::power_law(0.1).warnings().empty());
    p.d = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.d = 1.5;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    StaircaseParams q;
    q.override_ranks = std::vector<int>{2, 1};
    EXPECT_THROW(q.validate(), std::invalid_argument);
    q.override_ranks = std::vector<int>{3, 2};
    EXPECT_THROW(q.validate(), std::invalid_argument);
}

TEST(Geometry, ConstantTwoHeightsAndOffsets) {
    Construction c(StaircaseParams::constant(2));
    std::vector<long> expected{1, 3, 7, 15};
    for (int j = 0; j < 4; ++j) {
        EXPECT_EQ(c.height(j), expected[static_cast<size_t>(j)]);
        const auto& g = c.stage(j);
        ASSERT_EQ(g.offsets.size(), 2u);
        EXPECT_EQ(g.offsets[0], 0);
        EXPECT_EQ(g.offsets[1], g.height + 1);
        EXPECT_EQ(g.spacers, (std::vector<int>{1, 0}));
    }
}

TEST(Geometry, ConstantThree) {
    Construction c(StaircaseParams::constant(3));
    EXPECT_EQ(c.height(1), 6);
    const auto& g = c.stage(1);
    EXPECT_EQ(g.offsets, (std::vector<BigInt>{0, 7, 15}));
    EXPECT_EQ(g.spacers, (std::vector<int>{1, 2, 0}));
    EXPECT_EQ(c.width(1), frac(1, 3));
}

TEST(Geometry, StageInvariants) {
    Construction c(sqrt_law());
    for (int j = 0; j < 60; ++j) {
        const auto& g = c.stage(j);
        const int r = g.rank;
        EXPECT_EQ(c.height(j + 1), r * g.height + r * (r - 1) / 2);
        EXPECT_EQ(g.offsets.back() + g.height, c.height(j + 1));
        for (int i = 1; i <= r; ++i)
            EXPECT_EQ(g.offsets[static_cast<size_t>(i - 1)], (i - 1) * g.height + i * (i - 1) / 2);
        EXPECT_EQ(c.width(j + 1) * r, c.width(j));
        EXPECT_LT(g.tower_measure, c.stage(j + 1).tower_measure);
    }
}

TEST(Geometry, FirstStageAbove) {
    Construction c(StaircaseParams::constant(2));
    EXPECT_EQ(c.first_stage_above(0), 0);
    EXPECT_EQ(c.first_stage_above(1), 1);
    EXPECT_EQ(c.first_stage_above(7), 3);
    EXPECT_EQ(c.first_stage_above(14), 3);
}

TEST(Geometry, BaseLevelMustFit) {
    StaircaseParams p = StaircaseParams::constant(2);
    p.base_stage = 2;
    p.base_level = 7;
    EXPECT_THROW(Construction{p}, std::invalid_argument);
    p.base_level = 6;
    EXPECT_NO_THROW(Construction{p});
}

TEST(LevelSets, LiftExamples) {
    Construction c(StaircaseParams::constant(2));
    LevelSet l0 = base_level_set(c);
    EXPECT_EQ(l0.explicit_positions(), (std::vector<BigInt>{0}));
    LevelSet l1 = lift_level_set(l0, c.stage(0));
    EXPECT_EQ(l1.explicit_positions(), (std::vector<BigInt>{0, 2}));
    LevelSet l2 = lift_level_set(l1, c.stage(1));
    EXPECT_EQ(l2.explicit_positions(), (std::vector<BigInt>{0, 2, 4, 6}));
    EXPECT_THROW(lift_level_set(l2, c.stage(1)), std::invalid_argument);
}

TEST(LevelSets, RankOneRejected) {
    LevelSet ls{0, 0, 0, 1, std::vector<BigInt>{0}};
    StageGeometry g = make_stage(0, 1, 1, 1);
    EXPECT_THROW(lift_level_set(ls, g), std::invalid_argument);
}

TEST(LevelSets, MeasureConstantAndDisjoint) {
    StaircaseParams p = sqrt_law();
    p.base_stage = 2;
    p.base_level = 5;
    Construction c(p);
    LevelSet ls = base_level_set(c);
    const Rational mu = c.width(2) * ls.size;
    for (int j = 2; j < 12; ++j) {
        EXPECT_EQ(c.width(j) * ls.size, mu);
        const auto& pos = ls.explicit_positions();
        std::set<BigInt> distinct(pos.begin(), pos.end());
        EXPECT_EQ(distinct.size(), pos.size());
        EXPECT_TRUE(std::is_sorted(pos.begin(), pos.end()));
        EXPECT_LT(pos.back(), c.height(j));
        EXPECT_EQ(BigInt(static_cast<unsigned long>(pos.size())), c.level_count(j));
        ls = lift_level_set(ls, c.stage(j));
    }
}

TEST(LevelSets, CapKeepsImplicitForm) {
    Construction c(StaircaseParams::constant(2));
    LevelSet ls = level_set_at(c, 5, 16);
    EXPECT_FALSE(ls.is_explicit());
    EXPECT_EQ(ls.size, 32);
    try {
        ls.explicit_positions();
        FAIL() << "expected CapExceeded";
    } catch (const CapExceeded& e) {
        EXPECT_EQ(e.requested(), 32);
    }
}

TEST(TotalMeasure, ConstantTwoClosedForm) {
    Construction c(StaircaseParams::constant(2));
    Enclosure e0 = total_measure(c, 0);
    EXPECT_EQ(e0.lo, 1);
    EXPECT_TRUE(e0.contains(2));
    for (int j = 1; j < 20; ++j) {
        Enclosure e = total_measure(c, j);
        EXPECT_EQ(e.lo, ratio((BigInt(1) << (j + 1)) - 1, BigInt(1) << j));
        EXPECT_TRUE(e.contains(2));
        EXPECT_LE(e.lo, e.hi);
    }
    EXPECT_LT(total_measure(c, 20).width(), frac(1, 1000));
}

TEST(TotalMeasure, BoundsTowerMeasures) {
    Construction c(sqrt_law());
    Enclosure mu = total_measure(c, 10);
    for (int j = 0; j < 80; ++j) EXPECT_LE(c.stage(j).tower_measure, mu.hi);
    Enclosure tighter = total_measure(c, 30);
    EXPECT_GE(tighter.lo, mu.lo);
    EXPECT_LE(tighter.hi, mu.hi);
}

TEST(Census, SquareRootLawRankOne) {
    Census cs = j_r_census(sqrt_law(), 1, 20);
    EXPECT_EQ(cs.j_r, 6);
    EXPECT_EQ(cs.plateau_first, 0);
    EXPECT_EQ(cs.members, (std::vector<int>{0, 1, 2, 3, 4}));
    Census scanned = j_r_census(sqrt_law(), 1);
    EXPECT_EQ(scanned.members, cs.members);
}

TEST(Census, IncompletePlateau) {
    EXPECT_THROW(j_r_census(sqrt_law(), 2, 10), CensusIncomplete);
    StaircaseParams p = StaircaseParams::constant(3);
    EXPECT_THROW(j_r_census(p, 2), CensusIncomplete);
    EXPECT_THROW(j_r_census(p, 2, 40), CensusIncomplete);
}

TEST(Census, SquareRootSlope) {
    std::vector<double> x, y;
    for (int r = 2; r <= 20; ++r) {
        Census cs = j_r_census(sqrt_law(), r);
        EXPECT_EQ(cs.size(), static_cast<size_t>(r + 1)) << "r=" << r;
        x.push_back(std::log(r));
        y.push_back(std::log(static_cast<double>(cs.size())));
    }
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    EXPECT_NEAR(sxy / sxx, 0.86345628, 1e-7);
}

TEST(Construction, FingerprintSeparatesParams) {
    EXPECT_NE(sqrt_law().fingerprint(), StaircaseParams::power_law(0.4).fingerprint());
    EXPECT_NE(StaircaseParams::constant(2).fingerprint(), StaircaseParams::constant(3).fingerprint());
}
