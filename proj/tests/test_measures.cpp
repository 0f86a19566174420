#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "independent.hpp"
#include "mechopt/measures.hpp"
#include "mechopt/mechanism.hpp"

using namespace mechopt;

namespace {
std::vector<TransformField> builtin_fields() {
  return {TransformField(Instance(exponential(1), exponential(1))),
          TransformField(Instance(powerlaw(6), powerlaw(7))), TransformField(Instance(beta(3, 3), beta(3, 4)))};
}
}  // namespace

TEST(TransformField, MassIdentityHolds) {
  for (const auto& f : builtin_fields()) EXPECT_NEAR(check_mass_identity(f), 1.0, 1e-6);
}

TEST(TransformField, ConstantUtilityHasRevenueMinusOne) {
  for (const auto& f : builtin_fields())
    EXPECT_NEAR(revenue_quadrature([](double, double) { return 1.0; }, f, Tolerance{}), -1.0, 1e-6);
}

TEST(TransformField, BetaRegionRule) {
  const TransformField f(Instance(beta(3, 3), beta(3, 4)));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  for (int i = 0; i < 2000; ++i) {
    const double z1 = u(rng), z2 = u(rng);
    const double lhs = 2 / (1 - z1) + 3 / (1 - z2);
    if (std::fabs(lhs - 12) < 1e-9) continue;
    EXPECT_EQ(f.classify(z1, z2) == RegionLabel::X, lhs > 12);
  }
}

TEST(TransformField, ExponentialRegionRule) {
  const TransformField f(Instance(exponential(2), exponential(1)));
  EXPECT_EQ(f.classify(1.0, 1.5), RegionLabel::X);
  EXPECT_EQ(f.classify(0.5, 1.5), RegionLabel::Y);
  EXPECT_EQ(f.classify(0.0, 0.0), RegionLabel::DMINUS);
  EXPECT_NEAR(f.eta(0.25, 1.0), 2 * 0.25 + 1.0 - 3, 1e-15);
}

TEST(TransformField, PhiMatchesDivergenceForm) {
  // phi = -div(z f) - f in the two-item case; compare with finite differences.
  const TransformField f(Instance(beta(3, 3), beta(3, 4)));
  const auto& inst = f.instance();
  const double h = 1e-6;
  for (double z1 : {0.2, 0.5, 0.8})
    for (double z2 : {0.1, 0.4, 0.7}) {
      auto g = [&](double a, double b) { return inst.density(a, b); };
      const double d1 = ((z1 + h) * g(z1 + h, z2) - (z1 - h) * g(z1 - h, z2)) / (2 * h);
      const double d2 = ((z2 + h) * g(z1, z2 + h) - (z2 - h) * g(z1, z2 - h)) / (2 * h);
      EXPECT_NEAR(f.phi(z1, z2), -d1 - d2 - g(z1, z2), 1e-6);
    }
}

TEST(TransformField, OutsideSupportThrows) {
  const TransformField f(Instance(beta(3, 3), beta(3, 4)));
  EXPECT_THROW(f.phi(1.0, 0.5), OutOfSupport);
  EXPECT_THROW(f.phi(-0.1, 0.5), OutOfSupport);
}

TEST(TransformField, MassOfBoxMatchesSimpson) {
  const TransformField f(Instance(beta(3, 3), beta(3, 4)));
  const Box b{0.2, 0.7, 0.1, 0.6};
  auto pos = [&](double x, double y) { return std::max(f.phi(x, y), 0.0); };
  const double reference = ref::simpson2(pos, b.x0, b.x1, [&](double) { return b.y0; }, [&](double) { return b.y1; });
  EXPECT_NEAR(f.mass(Which::MU, box_region(b), Tolerance{}), reference, 1e-5);
}

TEST(Regions, BelowAndAboveLinePartitionTheBox) {
  const TransformField f(Instance(powerlaw(6), powerlaw(7)));
  const Tolerance tol;
  const Box b = support_box(f, tol);
  const double total = f.mass(Which::NU, box_region(b), tol);
  const double lo = f.mass(Which::NU, below_line(0.5, b), tol);
  const double hi = f.mass(Which::NU, above_line(0.5, b), tol);
  EXPECT_NEAR(lo + hi, total, 1e-8);
}

TEST(TransformField, ExponentialPhiValues) {
  const TransformField f(Instance(exponential(1), exponential(1)));
  EXPECT_NEAR(f.phi(1, 1), -std::exp(-2.0), 1e-15);
  EXPECT_NEAR(f.phi(2, 2), std::exp(-4.0), 1e-15);
  EXPECT_EQ(f.classify(1, 1), RegionLabel::Y);
  EXPECT_EQ(f.classify(2, 2), RegionLabel::X);
}

TEST(TransformField, PowerLawPhiVanishesOnRegionBoundary) {
  // 6(0.2)/1.2 + 7(0.4)/1.4 = 3.
  const TransformField f(Instance(powerlaw(6), powerlaw(7)));
  EXPECT_NEAR(f.phi(0.2, 0.4), 0.0, 1e-13);
  EXPECT_EQ(f.classify(0.2, 0.4), RegionLabel::Y);
}

TEST(TransformField, BetaPointJustInsideX) {
  // 2/(1-z1) + 3/(1-z2) = 12.5 with z1 = 0.5.
  const TransformField f(Instance(beta(3, 3), beta(3, 4)));
  const double z2 = 1 - 3 / 8.5;
  EXPECT_EQ(f.classify(0.5, z2), RegionLabel::X);
}

TEST(TransformField, NuMassesOfReferenceRegions) {
  const Tolerance tol;
  const TransformField e(Instance(exponential(1), exponential(1)));
  EXPECT_NEAR(e.mass(Which::NU, below_line(2.0, support_box(e, tol)), tol), 1 + std::exp(-2.0), 1e-8);
  EXPECT_EQ(e.mass(Which::NU, Region{}, tol), 0.0);
  const TransformField p(Instance(powerlaw(6), powerlaw(7)));
  EXPECT_NEAR(p.mass(Which::NU, below_line(0.35725, support_box(p, tol)), tol), 1.0, 1e-3);
}

TEST(TransformField, XIsAnIncreasingSet) {
  std::mt19937_64 rng(11);
  for (const auto& f : builtin_fields()) {
    const double t1 = f.item(0).quantile(0.99), t2 = f.item(1).quantile(0.99);
    std::uniform_real_distribution<double> u1(0.0, t1), u2(0.0, t2), w(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
      const double a = u1(rng), b = u2(rng);
      const double c = a + w(rng) * (t1 - a), d = b + w(rng) * (t2 - b);
      if (f.classify(a, b) == RegionLabel::X) EXPECT_EQ(f.classify(c, d), RegionLabel::X);
    }
  }
}

TEST(Regions, MassIsAdditiveForExponentialSplit) {
  const TransformField f(Instance(exponential(2), exponential(1)));
  const Tolerance tol;
  const Box b = support_box(f, tol);
  for (Which w : {Which::MU, Which::NU}) {
    const double total = f.mass(w, box_region(b), tol);
    EXPECT_NEAR(f.mass(w, below_line(1.3, b), tol) + f.mass(w, above_line(1.3, b), tol), total, 2e-8);
  }
}
