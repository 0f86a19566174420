#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mechopt/boundary_curve.hpp"
#include "mechopt/numerics.hpp"
#include "independent.hpp"

using namespace mechopt;

TEST(Integrate1d, PolynomialIsExact) {
  const double v = integrate_1d([](double x) { return 3 * x * x + 2 * x + 1; }, 0.0, 2.0, {});
  EXPECT_NEAR(v, 14.0, 1e-12);
}

TEST(Integrate1d, SemiInfiniteExponential) {
  EXPECT_NEAR(integrate_1d([](double x) { return std::exp(-x); }, 0.0, kInf, {}), 1.0, 1e-9);
}

TEST(Integrate1d, KinkAtBreakpoint) {
  auto f = [](double x) { return std::fabs(x - 0.3); };
  EXPECT_NEAR(integrate_1d(f, {0.0, 0.3, 1.0}, {}), 0.045 + 0.245, 1e-12);
}

TEST(Integrate1d, RejectsEmptyOrReversedInterval) {
  auto f = [](double x) { return std::sin(x); };
  EXPECT_THROW(integrate_1d(f, 1.0, 0.0, {}), InvalidInterval);
  EXPECT_THROW(integrate_1d(f, 1.0, 1.0, {}), InvalidInterval);
}

TEST(Integrate1d, BundleMassUpToGoldenRatio) {
  // Antiderivative 1 + e^{-p}(p^2 - p - 1) equals 1 where p^2 = p + 1.
  const double p = (1 + std::sqrt(5.0)) / 2;
  const double v = integrate_1d([](double s) { return s * (3 - s) * std::exp(-s); }, 0.0, p, {});
  EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(Integrate2d, ExponentialBelowLine) {
  const Region r{{0.0, 2.0, [](double) { return 0.0; }, [](double x) { return 2.0 - x; }, {}}};
  const double v = integrate_2d([](double x, double y) { return (3 - x - y) * std::exp(-x - y); }, r, {});
  EXPECT_NEAR(v, 1 + std::exp(-2.0), 1e-9);
}

TEST(Integrate2d, AdditiveOverPartition) {
  auto f = [](double x, double y) { return std::exp(-x) * std::cos(y) + x * y; };
  const Tolerance tol;
  const double whole = integrate_2d(f, {box_slab(0, 2, 0, 1)}, tol);
  const double below = integrate_2d(f, {{0.0, 2.0, [](double) { return 0.0; }, [](double x) { return 1 - x / 2; }, {}}}, tol);
  const double above = integrate_2d(f, {{0.0, 2.0, [](double x) { return 1 - x / 2; }, [](double) { return 1.0; }, {}}}, tol);
  EXPECT_NEAR(below + above, whole, 2 * tol.abs_tol);
  EXPECT_NEAR(whole, ref::simpson2(f, 0, 2, [](double) { return 0.0; }, [](double) { return 1.0; }), 1e-8);
}

TEST(Integrate2d, FindsMassNearTheEdgeOfALongBox) {
  // A narrow bump at the left end of a very wide box.
  auto f = [](double x, double y) { return x < 0.5 ? x * (0.5 - x) * y : 0.0; };
  const double v = integrate_2d(f, {box_slab(0, 200, 0, 1)}, {}, [](double, double, double, std::vector<double>&) {});
  EXPECT_NEAR(v, 0.125 / 6 * 0.5, 1e-9);
}

TEST(Integrate2d, BoxAndTriangle) {
  const Region box{box_slab(0, 1, 0, 1)};
  EXPECT_NEAR(integrate_2d([](double x, double y) { return x * y; }, box, {}), 0.25, 1e-12);
  const Region tri{{0.0, 1.0, [](double) { return 0.0; }, [](double x) { return 1.0 - x; }, {}}};
  EXPECT_NEAR(integrate_2d([](double, double) { return 1.0; }, tri, {}), 0.5, 1e-12);
}

TEST(FindRoot, DottieNumber) {
  const double r = find_root([](double x) { return std::cos(x) - x; }, 0.0, 1.0, {1e-14, 1e-14, 60});
  EXPECT_NEAR(r, 0.7390851332151607, 1e-13);
}

TEST(FindRoot, RejectsBadBrackets) {
  auto f = [](double x) { return x * x + 1; };
  EXPECT_THROW(find_root(f, 0.0, 1.0, {}), NoSignChange);
  EXPECT_THROW(find_root(f, 1.0, 0.0, {}), InvalidInterval);
}

TEST(FindRoot, GoldenRatioAndLinear) {
  EXPECT_NEAR(find_root([](double p) { return p * p - p - 1; }, 1.0, 2.0, {}), (1 + std::sqrt(5.0)) / 2, 1e-9);
  EXPECT_NEAR(find_root([](double x) { return x - 0.5; }, 0.0, 1.0, {}), 0.5, 1e-9);
}

TEST(FindRoot, CubicAgreesWithBisection) {
  auto g = [](double z) { return 25 * z * z * z - 6 * z * z - 3 * z - 1; };
  const double r = find_root(g, 0.0, 1.0, {});
  EXPECT_NEAR(r, ref::bisect(g, 0.0, 1.0), 1e-9);
  EXPECT_NEAR(r, 0.5720, 5e-5);
}

TEST(FindRoot, InvariantUnderPositiveScaling) {
  auto g = [](double x) { return std::exp(x) - 3; };
  const Tolerance tol;
  const double r = find_root(g, 0.0, 2.0, tol);
  for (double lam : {1e-3, 0.5, 7.0, 1e4})
    EXPECT_NEAR(find_root([&](double x) { return lam * g(x); }, 0.0, 2.0, tol), r, tol.abs_tol);
}

TEST(Maximize1d, FindsGlobalPeak) {
  // Two bumps; the taller sits at 0.8.
  auto f = [](double x) { return std::exp(-200 * (x - 0.2) * (x - 0.2)) + 1.5 * std::exp(-200 * (x - 0.8) * (x - 0.8)); };
  const Extremum e = maximize_1d(f, 0.0, 1.0, 64);
  EXPECT_NEAR(e.x, 0.8, 1e-6);
  EXPECT_NEAR(e.value, 1.5, 1e-9);
}

TEST(BoundaryCurve, LineEvaluationAndInverse) {
  const auto c = BoundaryCurve::line({0, 1}, {2, 0});
  EXPECT_DOUBLE_EQ(c(1.0), 0.5);
  EXPECT_DOUBLE_EQ(c.slope_left(1.0), -0.5);
  EXPECT_NEAR(c.inverse(0.25), 1.5, 1e-12);
  EXPECT_THROW(c.inverse(2.0), CurveDomainMismatch);
  EXPECT_THROW(BoundaryCurve::line({0, 0}, {1, 1}), InvalidParameter);
}

TEST(BoundaryCurve, HermiteReproducesCubic) {
  auto f = [](double x) { return 1 - x * x * x; };
  auto df = [](double x) { return -3 * x * x; };
  std::vector<Point> pts;
  std::vector<double> sl;
  for (int i = 0; i <= 4; ++i) {
    const double x = i / 4.0;
    pts.push_back({x, f(x)});
    sl.push_back(df(x));
  }
  const auto c = BoundaryCurve::hermite(pts, sl, true);
  for (double x : {0.1, 0.37, 0.66, 0.93}) {
    EXPECT_NEAR(c(x), f(x), 1e-14);
    EXPECT_NEAR(c.slope_right(x), df(x), 1e-13);
  }
  EXPECT_LE(c.concavity_defect(), 1e-14);
}

TEST(BoundaryCurve, MonotoneInterpolationKeepsConcaveShape) {
  std::vector<Point> pts;
  for (int i = 0; i <= 40; ++i) {
    const double x = i / 40.0;
    pts.push_back({x, std::sqrt(1.0 - 0.9 * x * x)});
  }
  const auto c = BoundaryCurve::interpolate(pts, true);
  EXPECT_NEAR(c(0.5), std::sqrt(1 - 0.225), 1e-4);
  for (int i = 0; i < 200; ++i) EXPECT_LE(c.slope_right(i / 200.0), 1e-12);
}

TEST(BoundaryCurve, ConcatAndRestrict) {
  const auto a = BoundaryCurve::line({0, 2}, {1, 1.5});
  const auto b = BoundaryCurve::line({1, 1.5}, {2, 0});
  const auto c = BoundaryCurve::concat({a, b}, true);
  EXPECT_DOUBLE_EQ(c.slope_left(1.0), -0.5);
  EXPECT_DOUBLE_EQ(c.slope_right(1.0), -1.5);
  ASSERT_EQ(c.junctions().size(), 1u);
  EXPECT_LE(c.concavity_defect(), 1e-14);
  const auto r = c.restricted(0.5, 1.5);
  EXPECT_DOUBLE_EQ(r.lo(), 0.5);
  EXPECT_DOUBLE_EQ(r(1.5), 0.75);
  EXPECT_THROW(c.restricted(-1, 1), CurveDomainMismatch);
  EXPECT_THROW(BoundaryCurve::concat({a, BoundaryCurve::line({1.1, 1}, {2, 0})}, true), MalformedRegion);
}

TEST(BoundaryCurve, InverseRoundTripAndSlopeOrdering) {
  std::vector<Point> pts;
  for (int i = 0; i <= 30; ++i) {
    const double x = i / 30.0;
    pts.push_back({x, 1 - x * x});
  }
  const auto c = BoundaryCurve::interpolate(pts, true);
  for (int i = 1; i < 100; ++i) {
    const double z2 = i / 100.0;
    EXPECT_NEAR(c(c.inverse(z2)), z2, 1e-9);
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    double x = u(rng), y = u(rng);
    if (x > y) std::swap(x, y);
    if (x == y) continue;
    EXPECT_GE(c.slope_right(x), c.slope_left(y) - 1e-12);
    EXPECT_LE(c.slope_left(x), 1e-12);
  }
}
