#include <cmath>

#include <gtest/gtest.h>

#include "evidential/evidence.hpp"
#include "test_support.hpp"

namespace evidential {
namespace {

using testing::mask;

FamilyPtr pair_family() { return share(make_family(ClassFrame::numbered(2), {mask({0, 1})})); }

// Direct sum over B subset of A, independent of the family's precomputed containment lists.
std::vector<double> brute_zeta(const FocalFamily& f, const std::vector<double>& m) {
  std::vector<double> bel(f.size(), 0.0);
  for (std::size_t a = 0; a < f.size(); ++a) {
    for (std::size_t b = 0; b < f.size(); ++b) {
      if ((f.mask_at(b).bits() & ~f.mask_at(a).bits()) == 0) bel[a] += m[b];
    }
  }
  return bel;
}

void expect_near(std::span<const double> got, const std::vector<double>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

TEST(BeliefFromMass, VacuousOnPair) {
  const BeliefVector bel = belief_from_mass(MassFunction(pair_family(), {0, 0, 1}));
  expect_near(bel.values(), {0, 0, 1}, 0.0);
}

TEST(BeliefFromMass, BayesianMassIsItsOwnBelief) {
  const auto f = share(make_family(ClassFrame::numbered(2), {}));
  expect_near(belief_from_mass(MassFunction(f, {0.3, 0.7})).values(), {0.3, 0.7}, 0.0);
}

TEST(BeliefFromMass, MatchesBruteForceOnFullPowerset) {
  Rng rng(11);
  const auto f = share(full_powerset_family(ClassFrame::numbered(4)));
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = testing::random_simplex(rng, f->size());
    expect_near(belief_from_mass(MassFunction(f, m)).values(), brute_zeta(*f, m), 1e-15);
  }
}

TEST(BeliefFromMass, MatchesBruteForceOnSparseFamilies) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = share(testing::random_family(rng, 7, 15));
    const auto m = testing::random_simplex(rng, f->size());
    expect_near(belief_from_mass(MassFunction(f, m)).values(), brute_zeta(*f, m), 1e-15);
  }
}

TEST(MassFromBelief, InvertsVacuousExample) {
  expect_near(mass_from_belief(BeliefVector(pair_family(), {0, 0, 1})).values(), {0, 0, 1}, 0.0);
}

TEST(MassFromBelief, InclusionExclusionForcesNegativeResidual) {
  const MassFunction m = mass_from_belief(BeliefVector(pair_family(), {0.9, 0.9, 1.0}));
  expect_near(m.values(), {0.9, 0.9, -0.8}, 1e-15);
  EXPECT_FALSE(m.is_valid());
  EXPECT_EQ(m.negative_count(), 1u);
}

TEST(MassFromBelief, SignedSumOnFullPowerset) {
  // m(A) = sum over B in A of (-1)^|A\B| Bel(B), evaluated by a double loop.
  Rng rng(13);
  const auto f = share(full_powerset_family(ClassFrame::numbered(4)));
  std::vector<double> bel(f->size());
  for (auto& b : bel) b = rng.uniform();
  std::vector<double> want(f->size(), 0.0);
  for (std::size_t a = 0; a < f->size(); ++a) {
    for (std::size_t b = 0; b < f->size(); ++b) {
      const auto A = f->mask_at(a), B = f->mask_at(b);
      if (!B.is_subset_of(A)) continue;
      want[a] += ((A.cardinality() - B.cardinality()) % 2 ? -1.0 : 1.0) * bel[b];
    }
  }
  expect_near(mass_from_belief(BeliefVector(f, bel)).values(), want, 1e-12);
}

TEST(MassFromBelief, RoundTripOnFullPowersets) {
  Rng rng(14);
  for (int n = 2; n <= 8; ++n) {
    const auto f = share(full_powerset_family(ClassFrame::numbered(n)));
    const auto m = testing::random_simplex(rng, f->size());
    expect_near(mass_from_belief(belief_from_mass(MassFunction(f, m))).values(), m, 1e-12);
  }
}

TEST(MassFromBelief, RoundTripOnSparseFamilies) {
  Rng rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(8));
    const std::uint64_t available = (std::uint64_t{1} << n) - static_cast<std::uint64_t>(n) - 1;
    const auto f = share(testing::random_family(rng, n, 1 + rng.below(std::min<std::uint64_t>(20, available))));
    std::vector<double> m(f->size());
    for (auto& x : m) x = rng.uniform(-1.0, 1.0);  // the inverse is linear, validity does not matter
    expect_near(mass_from_belief(belief_from_mass(MassFunction(f, m))).values(), m, 1e-12);
  }
}

TEST(MassFromBelief, SparseFamilyWithMissingIntermediateSets) {
  // {0},{1},{2},{0,1,2}: the pairs are absent, so Bel({0,1,2}) - sum of singleton beliefs is the top mass.
  const auto f = share(make_family(ClassFrame::numbered(3), {mask({0, 1, 2})}));
  const MassFunction m = mass_from_belief(BeliefVector(f, {0.2, 0.3, 0.1, 1.0}));
  expect_near(m.values(), {0.2, 0.3, 0.1, 0.4}, 1e-15);
}

TEST(MoebiusAdjoint, IsTheTranspose) {
  Rng rng(16);
  const auto f = share(testing::random_family(rng, 6, 12));
  std::vector<double> x(f->size()), y(f->size());
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  for (auto& v : y) v = rng.uniform(-1.0, 1.0);
  const auto mx = moebius_transform(*f, x);
  const auto aty = moebius_adjoint(*f, y);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < f->size(); ++i) {
    lhs += y[i] * mx[i];
    rhs += aty[i] * x[i];
  }
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(Plausibility, VacuousPair) {
  const MassFunction m(pair_family(), {0, 0, 1});
  EXPECT_DOUBLE_EQ(plausibility(m, 0), 1.0);
  EXPECT_DOUBLE_EQ(plausibility(m, 1), 1.0);
}

TEST(Plausibility, BayesianEqualsSingletonMass) {
  const auto f = share(make_family(ClassFrame::numbered(3), {}));
  const MassFunction m(f, {0.2, 0.5, 0.3});
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(plausibility(m, c), m[static_cast<std::size_t>(c)]);
}

TEST(Plausibility, ComplementIdentity) {
  Rng rng(17);
  const auto f = share(full_powerset_family(ClassFrame::numbered(4)));
  const std::uint32_t full = 0b1111;
  for (int trial = 0; trial < 50; ++trial) {
    const MassFunction m(f, testing::random_simplex(rng, f->size()));
    const auto bel = belief_from_mass(m);
    for (int c = 0; c < 4; ++c) {
      const auto complement = *f->index_of(SubsetMask(full & ~(1U << c)));
      EXPECT_NEAR(plausibility(m, c), 1.0 - bel[complement], 1e-12);
    }
  }
}

TEST(Pignistic, EqualSplitOfVacuousPair) {
  const auto p = pignistic(MassFunction(pair_family(), {0, 0, 1}));
  expect_near(p.probs, {0.5, 0.5}, 0.0);
}

TEST(Pignistic, SingletonPlusPair) {
  const auto p = pignistic(MassFunction(pair_family(), {0.5, 0, 0.5}));
  expect_near(p.probs, {0.75, 0.25}, 1e-15);
  EXPECT_EQ(p.argmax(), 0);
}

TEST(Pignistic, NearCertainTenClassSample) {
  // The five listed masses of a near-certain prediction; the remaining focal sets carry nothing.
  ClassFrame frame({"airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"});
  auto idx = [&](const char* l) { return *frame.index_of(l); };
  const auto cat_truck = mask({idx("cat"), idx("truck")});
  const auto ship_bird = mask({idx("ship"), idx("bird")});
  const auto horse_bird = mask({idx("horse"), idx("bird")});
  const auto f = share(make_family(frame, {cat_truck, ship_bird, horse_bird}));
  std::vector<double> m(f->size(), 0.0);
  m[f->singleton_index(idx("horse"))] = 0.9999175;
  m[*f->index_of(cat_truck)] = 6.859753e-05;
  m[*f->index_of(ship_bird)] = 4.094290e-05;
  m[*f->index_of(horse_bird)] = 2.250525e-05;
  m[f->singleton_index(idx("dog"))] = 1.717869e-05;
  const auto p = pignistic(MassFunction(f, m));
  EXPECT_EQ(frame.label(p.argmax()), "horse");
  EXPECT_NEAR(p.probs[static_cast<std::size_t>(idx("horse"))], 0.9998833, 5e-5);
}

TEST(Pignistic, RecordsPreRepairTotalAndSumsToOne) {
  const auto p = pignistic(MassFunction(pair_family(), {0.9, 0.9, -0.8}));
  EXPECT_DOUBLE_EQ(p.total_mass, 0.9 + 0.9 - 0.8);
  expect_near(p.probs, {0.5, 0.5}, 1e-15);
}

TEST(Pignistic, DegenerateMassIsAnError) {
  EXPECT_THROW(pignistic(MassFunction(pair_family(), {0, 0, 0})), DegenerateMassError);
  EXPECT_THROW(pignistic(MassFunction(pair_family(), {-0.1, 0, -0.2})), DegenerateMassError);
  bool degenerate = false;
  const auto p = pignistic_or_uniform(MassFunction(pair_family(), {0, 0, 0}), degenerate);
  EXPECT_TRUE(degenerate);
  expect_near(p.probs, {0.5, 0.5}, 0.0);
}

TEST(RepairMass, ValidMassIsUnchanged) {
  Rng rng(18);
  const auto f = share(full_powerset_family(ClassFrame::numbered(3)));
  const MassFunction m(f, testing::random_simplex(rng, f->size()));
  const auto r = repair_mass(m);
  expect_near(r.mass.values(), std::vector<double>(m.values().begin(), m.values().end()), 1e-12);
  EXPECT_EQ(r.clamped_count, 0u);
}

TEST(RepairMass, ClampThenRescale) {
  const MassFunction m(pair_family(), {0.9, 0.9, -0.8});
  const auto r = repair_mass(m);
  expect_near(r.mass.values(), {0.5, 0.5, 0.0}, 1e-15);
  EXPECT_EQ(r.clamped_count, 1u);
  EXPECT_NEAR(r.pre_sum, 1.0, 1e-15);
  EXPECT_EQ(m[2], -0.8);  // input untouched
}

TEST(RepairMass, AllZeroIsFlagged) {
  const auto r = repair_mass(MassFunction(pair_family(), {0, 0, 0}));
  expect_near(r.mass.values(), {0, 0, 0}, 0.0);
  EXPECT_TRUE(r.zero_sum);
}

TEST(BeliefVector, MonotonicityOfValidMasses) {
  Rng rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = share(testing::random_family(rng, 6, 12));
    const auto bel = belief_from_mass(MassFunction(f, testing::random_simplex(rng, f->size())));
    EXPECT_TRUE(bel.is_monotone(1e-15));
    EXPECT_TRUE(bel.in_unit_range());
  }
  const BeliefVector bad(pair_family(), {0.9, 0.2, 0.5});
  EXPECT_EQ(bad.monotonicity_violations(), 1u);
}

TEST(MassFunction, RejectsMisalignedVectors) {
  EXPECT_THROW(MassFunction(pair_family(), {0.5, 0.5}), std::invalid_argument);
  EXPECT_THROW(BeliefVector(pair_family(), {0.5}), std::invalid_argument);
}

}  // namespace
}  // namespace evidential
