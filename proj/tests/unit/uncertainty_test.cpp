#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "evidential/uncertainty.hpp"
#include "test_support.hpp"

namespace evidential {
namespace {

using testing::mask;

FamilyPtr pair_family() { return share(make_family(ClassFrame::numbered(2), {mask({0, 1})})); }

PignisticDistribution dist(std::vector<double> p) {
  return PignisticDistribution{ClassFrame::numbered(static_cast<int>(p.size())), std::move(p), 1.0};
}

TEST(PignisticEntropy, OneHotIsZero) { EXPECT_EQ(pignistic_entropy(dist({0, 1, 0})), 0.0); }

TEST(PignisticEntropy, UniformOverTen) {
  EXPECT_NEAR(pignistic_entropy(dist(std::vector<double>(10, 0.1))), std::log2(10.0), 1e-12);
}

TEST(PignisticEntropy, UncertainTenClassSample) {
  std::vector<double> p{0.3332, 0.2231, 0.1153, 0.1086, 0.1040};
  for (int i = 0; i < 5; ++i) p.push_back(0.1158 / 5);
  EXPECT_NEAR(pignistic_entropy(dist(p)), 2.6955, 0.05);
}

TEST(PignisticEntropy, UniformMaximises) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(9);
    const auto p = testing::random_simplex(rng, n, 0.0);
    EXPECT_LE(shannon_entropy_bits(p), std::log2(static_cast<double>(n)) + 1e-12);
  }
}

TEST(NguyenEntropy, SingleFocalElementIsZero) {
  EXPECT_EQ(nguyen_entropy(MassFunction(pair_family(), {0, 0, 1})), 0.0);
}

TEST(NguyenEntropy, BayesianEqualsShannon) {
  Rng rng(32);
  const auto f = share(make_family(ClassFrame::numbered(5), {mask({0, 1})}));
  for (int trial = 0; trial < 50; ++trial) {
    auto m = testing::random_simplex(rng, 5);
    m.push_back(0.0);
    const MassFunction mass(f, m);
    double shannon = 0.0;
    for (int c = 0; c < 5; ++c) {
      if (m[static_cast<std::size_t>(c)] > 0) shannon -= m[static_cast<std::size_t>(c)] * std::log2(m[static_cast<std::size_t>(c)]);
    }
    EXPECT_NEAR(nguyen_entropy(mass), shannon, 1e-12);
    EXPECT_NEAR(nguyen_entropy(mass), pignistic_entropy(pignistic(mass)), 1e-12);
  }
}

TEST(NguyenEntropy, TwoEqualMasses) {
  EXPECT_NEAR(nguyen_entropy(MassFunction(pair_family(), {0.5, 0, 0.5})), 1.0, 1e-15);
}

TEST(NguyenEntropy, RejectsInvalidMass) {
  EXPECT_THROW(nguyen_entropy(MassFunction(pair_family(), {0.9, 0.9, -0.8})), std::invalid_argument);
}

TEST(PalSpecificity, Examples) {
  EXPECT_DOUBLE_EQ(pal_specificity(MassFunction(pair_family(), {0.3, 0.7, 0})), 1.0);
  EXPECT_DOUBLE_EQ(pal_specificity(MassFunction(pair_family(), {0.5, 0, 0.5})), 0.75);
  const auto ten = share(make_family(ClassFrame::numbered(10), {SubsetMask(0x3ff)}));
  std::vector<double> vacuous(11, 0.0);
  vacuous.back() = 1.0;
  EXPECT_NEAR(pal_specificity(MassFunction(ten, vacuous)), 0.1, 1e-15);
}

TEST(PalSpecificity, BayesianIsExactlyOne) {
  Rng rng(33);
  const auto f = share(make_family(ClassFrame::numbered(7), {}));
  for (int trial = 0; trial < 100; ++trial) {
    EXPECT_EQ(pal_specificity(MassFunction(f, testing::random_simplex(rng, 7))), 1.0);
  }
}

TEST(PalSpecificity, RejectsInvalidMass) {
  EXPECT_THROW(pal_specificity(MassFunction(pair_family(), {0.9, 0.9, -0.8})), std::invalid_argument);
}

TEST(MassKl, IdenticalMassesGiveZero) {
  Rng rng(34);
  const auto f = share(full_powerset_family(ClassFrame::numbered(3)));
  const MassFunction m(f, testing::random_simplex(rng, f->size()));
  EXPECT_NEAR(mass_kl(m, m), 0.0, 1e-15);
}

TEST(MassKl, OneHotAgainstUniform) {
  EXPECT_NEAR(mass_kl(MassFunction(pair_family(), {1, 0, 0}), MassFunction(pair_family(), {1.0 / 3, 1.0 / 3, 1.0 / 3})),
              std::log(3.0), 1e-15);
}

TEST(MassKl, GibbsInequality) {
  Rng rng(35);
  const auto f = share(testing::random_family(rng, 6, 10));
  for (int trial = 0; trial < 1000; ++trial) {
    const MassFunction a(f, testing::random_simplex(rng, f->size()));
    const MassFunction b(f, testing::random_simplex(rng, f->size(), 0.0));
    EXPECT_GE(mass_kl(a, b), -1e-15);
  }
}

TEST(MassKl, RejectsDifferentFamilies) {
  const auto other = share(make_family(ClassFrame::numbered(2), {}));
  EXPECT_THROW(mass_kl(MassFunction(pair_family(), {1, 0, 0}), MassFunction(other, {0.5, 0.5})), std::invalid_argument);
}

TEST(UncertaintyReport, CombinesMeasures) {
  const MassFunction m(pair_family(), {0.5, 0, 0.5});
  const auto p = pignistic(m);
  const auto b = credal_bounds(m);
  const auto r = uncertainty_report(m, p, b, 0);
  EXPECT_NEAR(r.pignistic_entropy, -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25)), 1e-15);
  EXPECT_NEAR(r.nguyen_entropy, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(r.pal_specificity, 0.75);
  EXPECT_DOUBLE_EQ(r.credal_width_pred, 0.5);
}

}  // namespace
}  // namespace evidential
