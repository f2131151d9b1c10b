// Stepper and numeric helpers: Dormand-Prince, roots, quadratics, eigenvalues,
// number formatting and the parallel loop.

#include <gtest/gtest.h>

#include <array>
#include <atomic>
#include <cstdlib>
#include <sstream>
#include <vector>

#include "patchdyn/csv.hpp"
#include "patchdyn/dopri5.hpp"
#include "patchdyn/linalg.hpp"
#include "patchdyn/parallel.hpp"
#include "patchdyn/quadratic.hpp"
#include "patchdyn/roots.hpp"

using namespace patchdyn;
using Vec2 = std::array<double, 2>;

TEST(DormandPrince, ExponentialDecay) {
  StepperOptions o;
  o.rtol = o.atol = 1e-10;
  DormandPrince<std::array<double, 1>> dp(o);
  std::array<double, 1> y{1.0};
  double t = 0;
  const auto st = dp.advance([](double, const auto& x, auto& dx) { dx[0] = -0.7 * x[0]; }, t, y, 5.0);
  EXPECT_EQ(st, StepStatus::Reached);
  EXPECT_EQ(t, 5.0);
  EXPECT_NEAR(y[0], std::exp(-3.5), 1e-9);
}

TEST(DormandPrince, HarmonicOscillatorWithoutPositivity) {
  StepperOptions o;
  o.rtol = o.atol = 1e-10;
  o.reject_negative = false;
  DormandPrince<Vec2> dp(o);
  Vec2 y{1.0, 0.0};
  double t = 0;
  dp.advance([](double, const Vec2& x, Vec2& dx) { dx = {x[1], -x[0]}; }, t, y, 10.0);
  EXPECT_NEAR(y[0], std::cos(10.0), 1e-8);
  EXPECT_NEAR(y[1], -std::sin(10.0), 1e-8);
}

TEST(DormandPrince, FifthOrderOnFixedSteps) {
  // forcing the step through the ceiling gives a clean convergence study
  auto run = [](double h) {
    StepperOptions o;
    o.rtol = o.atol = 1.0;  // never reject
    o.initial_step = h;
    o.reject_negative = false;
    DormandPrince<std::array<double, 1>> dp(o);
    std::array<double, 1> y{1.0};
    double t = 0;
    dp.advance([](double tt, const auto& x, auto& dx) { dx[0] = x[0] * std::cos(tt); }, t, y, 2.0,
               [h](const auto&) { return h; }, [](double, const auto&) { return true; });
    return std::abs(y[0] - std::exp(std::sin(2.0)));
  };
  const double e1 = run(0.1), e2 = run(0.05);
  EXPECT_GT(std::log2(e1 / e2), 4.5);
}

TEST(DormandPrince, FirstSameAsLast) {
  StepperOptions o;
  o.rtol = o.atol = 1e-6;
  DormandPrince<std::array<double, 1>> dp(o);
  std::array<double, 1> y{1.0};
  double t = 0;
  dp.advance([](double, const auto& x, auto& dx) { dx[0] = -x[0]; }, t, y, 3.0);
  const auto& s = dp.stats();
  // six new stages per attempt plus the initial evaluation(s) for the starting step
  EXPECT_LE(s.rhs_evaluations, 6 * (s.accepted + s.rejected) + 3);
}

TEST(DormandPrince, NegativeStepsAreRejected) {
  // x' = -10 (constant drain) must hit zero; the stepper refuses to cross it
  StepperOptions o;
  o.rtol = o.atol = 1e-8;
  DormandPrince<std::array<double, 1>> dp(o);
  std::array<double, 1> y{1.0};
  double t = 0;
  auto f = [](double, const auto&, auto& dx) { dx[0] = -10.0; };
  auto obs = [&](double, const auto& x) {
    EXPECT_GE(x[0], 0.0);
    return true;
  };
  const auto st = dp.advance(f, t, y, 1.0, [](const auto&) { return 1e9; }, obs);
  EXPECT_EQ(st, StepStatus::StepFailure);
  EXPECT_GE(y[0], 0.0);
  EXPECT_NEAR(t, 0.1, 1e-6);
  EXPECT_GT(dp.stats().rejected, 0);
}

TEST(DormandPrince, CeilingIsRespected) {
  DormandPrince<std::array<double, 1>> dp;
  std::array<double, 1> y{1.0};
  double t = 0, last = 0, biggest = 0;
  dp.advance([](double, const auto&, auto& dx) { dx[0] = 0.0; }, t, y, 1.0,
             [](const auto&) { return 0.01; },
             [&](double tt, const auto&) {
               biggest = std::max(biggest, tt - last);
               last = tt;
               return true;
             });
  EXPECT_LE(biggest, 0.01 + 1e-15);
}

TEST(DormandPrince, BlowUpFailsCleanly) {
  DormandPrince<std::array<double, 1>> dp;
  std::array<double, 1> y{1.0};
  double t = 0;
  const auto st = dp.advance([](double, const auto& x, auto& dx) { dx[0] = x[0] * x[0]; }, t, y, 2.0);
  EXPECT_EQ(st, StepStatus::StepFailure);
  // the singularity sits at t = 1
  EXPECT_LE(t, 1.0 + 1e-6);
  EXPECT_GT(t, 0.99);
}

TEST(DormandPrince, ObserverStopsEarly) {
  DormandPrince<std::array<double, 1>> dp;
  std::array<double, 1> y{1.0};
  double t = 0;
  int calls = 0;
  const auto st = dp.advance([](double, const auto& x, auto& dx) { dx[0] = -x[0]; }, t, y, 100.0,
                             [](const auto&) { return 0.5; },
                             [&](double, const auto&) { return ++calls < 3; });
  EXPECT_EQ(st, StepStatus::Stopped);
  EXPECT_EQ(calls, 3);
}

TEST(Newton, SolvesSimpleSystem) {
  const auto r = newton2([](State x) { return State{x.u * x.u - 2, x.v - x.u}; },
                         [](State x) { return Matrix2{2 * x.u, 0, -1, 1}; }, State{1, 1});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x.u, std::sqrt(2.0), 1e-14);
}

TEST(Bisect, FindsRoot) {
  EXPECT_NEAR(bisect([](double x) { return std::cos(x) - x; }, 0.0, 1.0), 0.7390851332151607,
              1e-15);
}

TEST(Quadratic, CancellationFreeSmallRoot) {
  // x^2 - 1e8 x + 1 = 0: small root ~ 1e-8
  const auto r = solve_quadratic(1, -1e8, 1);
  ASSERT_EQ(r.count, 2);
  EXPECT_NEAR(r.lo, 1e-8, 1e-22);
  EXPECT_NEAR(r.hi, 1e8, 1e-6);
}

TEST(Quadratic, NoRealRootsAndDoubleRoot) {
  EXPECT_EQ(solve_quadratic(1, 0, 1).count, 0);
  const auto d = solve_quadratic(1, -2, 1);
  EXPECT_EQ(d.count, 1);
  EXPECT_EQ(d.lo, 1.0);
  EXPECT_EQ(solve_quadratic(1, -2, 1 + 1e-14, 1e-12).count, 1);
}

TEST(Eigen, RealAndComplexPairs) {
  const auto r = eigenvalues({2, 0, 0, -3});
  EXPECT_FALSE(is_complex_pair(r));
  EXPECT_DOUBLE_EQ(r[0].real(), -3);
  EXPECT_DOUBLE_EQ(r[1].real(), 2);
  const auto c = eigenvalues({-1, 2, -2, -1});
  EXPECT_TRUE(is_complex_pair(c));
  EXPECT_DOUBLE_EQ(c[0].real(), -1);
  EXPECT_DOUBLE_EQ(std::abs(c[0].imag()), 2);
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(1.0 / 3), "0.333333333333");
  EXPECT_EQ(format_number(1e-20), "1e-20");
  std::ostringstream os;
  CsvWriter w(os);
  w.header({"a", "b"});
  w.field(1.5).field("x");
  w.end_row();
  EXPECT_EQ(os.str(), "a,b\n1.5,x\n");
}

TEST(Parallel, VisitsEveryIndexOnce) {
  ::setenv("PATCHDYN_THREADS", "3", 1);
  EXPECT_EQ(thread_budget(), 3u);
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  ::unsetenv("PATCHDYN_THREADS");
}

TEST(Parallel, RethrowsWorkerException) {
  ::setenv("PATCHDYN_THREADS", "2", 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
  ::unsetenv("PATCHDYN_THREADS");
}
