#include "staircase/correlation.hpp"
#include "staircase/formal.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace staircase;
using staircase::testing::frac;
using staircase::testing::Gen;

namespace {

FormalVector random_vector(Gen& g, int terms) {
    FormalVector v;
    for (int i = 0; i < terms; ++i) v.add(g.range(-20, 20), g.rational(9, 7));
    return v;
}

FormalBitensor random_bitensor(Gen& g, int terms) {
    FormalBitensor b;
    for (int i = 0; i < terms; ++i) b.add(g.range(-15, 15), g.range(-15, 15), g.rational(5, 4));
    return b;
}

}  // namespace

TEST(Cesaro, Examples) {
    EXPECT_EQ(cesaro_vector(1), (FormalVector{{0, 1}}));
    EXPECT_EQ(cesaro_vector(2), (FormalVector{{0, frac(1, 2)}, {-1, frac(1, 2)}}));
    EXPECT_EQ(cesaro_vector(2, 1), (FormalVector{{1, frac(1, 2)}, {0, frac(1, 2)}}));
    EXPECT_THROW(cesaro_vector(0), std::invalid_argument);
    EXPECT_THROW(cesaro_vector(-3), std::invalid_argument);
}

TEST(Formal, NoZeroCoefficientsStored) {
    FormalVector v{{3, frac(1, 2)}};
    v.add(3, frac(-1, 2));
    EXPECT_TRUE(v.empty());
    FormalBitensor b{{{1, 2}, 3}};
    b -= b;
    EXPECT_EQ(b.size(), 0u);
}

TEST(Tensor, ExamplesAndLaws) {
    EXPECT_EQ(tensor(FormalVector{{0, 1}}, FormalVector{{0, 1}}), (FormalBitensor{{{0, 0}, 1}}));
    Gen g(7);
    for (int trial = 0; trial < 100; ++trial) {
        FormalVector x = random_vector(g, 5), x2 = random_vector(g, 4), y = random_vector(g, 6);
        EXPECT_EQ(tensor(x + x2, y), tensor(x, y) + tensor(x2, y));
        EXPECT_EQ(tensor(x, y).size(), x.size() * y.size());
        EXPECT_EQ(tensor(x.shifted(3), y.shifted(3)), tensor(x, y).diagonal_shift(3));
    }
}

TEST(Identity, CorrectedResidualVanishes) {
    for (long r = 2; r <= 64; ++r) {
        EXPECT_TRUE(corrected_identity_residual(r).empty()) << "r=" << r;
        EXPECT_EQ(expand_terms(corrected_identity_terms(r)), symmetric_shift_pair(r));
    }
    EXPECT_THROW(corrected_identity_residual(1), std::invalid_argument);
}

TEST(Identity, LeftSideCorners) {
    FormalBitensor lhs = symmetric_shift_pair(5);
    EXPECT_EQ(lhs, (FormalBitensor{{{5, 0}, 1}, {{0, 5}, 1}}));
}

TEST(Identity, PrintedResidualAtTwo) {
    PrintedIdentityReport rep = printed_identity_residual(2);
    FormalBitensor expected{{{2, 0}, 1},   {{0, 2}, 1},   {{0, -1}, -1},
                            {{-1, 0}, -1}, {{-1, -1}, -1}, {{1, 1}, 1}};
    EXPECT_EQ(rep.residual, expected);
    EXPECT_EQ(rep.l1_norm, 6);
    EXPECT_GT(rep.best_shift_l1_norm, 0);
    for (long k = -4; k <= 4; ++k) {
        FormalBitensor rhs = expand_terms(printed_identity_terms(2)).diagonal_shift(k);
        EXPECT_GT((symmetric_shift_pair(2) - rhs).l1_norm(), 0) << "shift " << k;
    }
}

TEST(Identity, PrintedResidualNonzeroForLargerR) {
    for (long r = 3; r <= 12; ++r) EXPECT_GT(printed_identity_residual(r).l1_norm, 0) << "r=" << r;
}

TEST(Identity, BitensorDumpFormat) {
    std::ostringstream os;
    FormalBitensor{{{-1, 2}, frac(3, 4)}, {{0, 0}, 2}}.dump(os);
    EXPECT_EQ(os.str(), "-1 2 3/4\n0 0 2/1\n");
}

class InnerProduct : public ::testing::Test {
protected:
    Construction c{StaircaseParams::power_law(0.5)};
    CorrelationEngine eng{c};
    Rational eps = c.level_measure() / 1'000'000'000;
    std::function<Enclosure(const BigInt&)> corr = [this](const BigInt& n) { return eng.correlation(n, eps); };
};

TEST_F(InnerProduct, BasicValues) {
    FormalBitensor ff{{{0, 0}, 1}};
    Enclosure e = bitensor_inner(ff, ff, corr);
    EXPECT_EQ(e.lo, eng.c0() * eng.c0());
    EXPECT_EQ(e.width(), 0);
    for (int k = 0; k < 6; ++k)
        for (int l = 0; l < 6; ++l) {
            Enclosure g = bitensor_inner(ff.diagonal_shift(k), ff.diagonal_shift(l), corr);
            Enclosure direct = square(eng.correlation(k - l, eps));
            EXPECT_EQ(g.lo, direct.lo);
            EXPECT_EQ(g.hi, direct.hi);
        }
}

TEST_F(InnerProduct, DiagonalShiftInvariance) {
    Gen g(21);
    for (int trial = 0; trial < 20; ++trial) {
        FormalBitensor x = random_bitensor(g, 4), y = random_bitensor(g, 4);
        long k = g.range(-50, 50);
        Enclosure a = bitensor_inner(x, y, corr);
        Enclosure b = bitensor_inner(x.diagonal_shift(k), y.diagonal_shift(k), corr);
        EXPECT_EQ(a.lo, b.lo);
        EXPECT_EQ(a.hi, b.hi);
        Enclosure swapped = bitensor_inner(y, x, corr);
        EXPECT_EQ(a.lo, swapped.lo);
        EXPECT_EQ(a.hi, swapped.hi);
    }
}

TEST_F(InnerProduct, CesaroAgainstTowerFormula) {
    for (long r : {2L, 3L, 4L}) {
        FormalVector q = cesaro_vector(r);
        FormalBitensor Q = tensor(q, q);
        for (int j : {5, 9, 14}) {
            BigInt h = c.height(j);
            FormalBitensor tower{{{h, h}, 1}};
            Enclosure inner = bitensor_inner(Q, tower, corr);
            Enclosure direct = Enclosure::exact(0);
            for (long i = 0; i < r; ++i) direct += eng.correlation(h + i, eps);
            direct = square(Rational(1, r) * direct);
            EXPECT_TRUE(inner.contains(direct.midpoint()) || direct.contains(inner.midpoint()));
            EXPECT_LE(abs(inner - direct).hi, 4 * (inner.width() + direct.width()));
        }
    }
}

TEST_F(InnerProduct, GramMidpointsPositive) {
    // Gram matrix of a small family: negative part bounded by enclosure widths
    Gen g(2);
    std::vector<FormalBitensor> fam;
    for (int i = 0; i < 4; ++i) fam.push_back(random_bitensor(g, 3));
    for (const auto& x : fam) {
        Enclosure self = bitensor_inner(x, x, corr);
        EXPECT_GE(self.hi, 0);
    }
    for (size_t a = 0; a < fam.size(); ++a)
        for (size_t b = a + 1; b < fam.size(); ++b) {
            // |<x,y>|^2 <= <x,x><y,y> up to widths
            Enclosure xy = bitensor_inner(fam[a], fam[b], corr);
            Enclosure xx = bitensor_inner(fam[a], fam[a], corr);
            Enclosure yy = bitensor_inner(fam[b], fam[b], corr);
            EXPECT_LE(square(xy).lo, (xx * yy).hi);
        }
}
