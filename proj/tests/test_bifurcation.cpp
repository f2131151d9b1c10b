#include <gtest/gtest.h>

#include "oracles.hpp"
#include "patchdyn/bifurcation.hpp"

using namespace patchdyn;

namespace {

const OdeParams kFig2{0.5, 0.1, 0.9, 0.1, 0.9};

}  // namespace

TEST(Sotomayor, Fig2InteriorFold) {
  const SotomayorReport r = sotomayor_at_fold(kFig2);
  EXPECT_NEAR(r.point.u, 1.0 / 11, 1e-9);
  EXPECT_NEAR(r.alpha[1], 0.1 / 1.0, 1e-9);                      // delta/(s+delta)
  EXPECT_NEAR(r.beta[1], 0.1 * r.point.u / (0.9 + 0.1 * r.point.u), 1e-9);
  EXPECT_NEAR(r.eta_fm, -0.01, 1e-8);
  EXPECT_NEAR(r.closed_form_eta_fm, -0.01, 1e-12);
  EXPECT_NEAR(r.closed_form_eta_d2, -0.099, 1e-12);
  EXPECT_TRUE(r.certified);
}

TEST(Sotomayor, SecondDerivativeIsTwiceThePublishedForm) {
  // the assembled beta . D2F(alpha, alpha) equals -2 sqrt(e-B)(h+B)
  oracle::ParamSampler rng(31);
  for (int i = 0; i < 200; ++i) {
    const auto q = rng.above_B();
    const OdeParams p{q.m, q.e, q.h, q.delta, q.s};
    SotomayorReport r;
    try {
      r = sotomayor_at_fold(p);
    } catch (const PreconditionError&) {
      continue;  // fold outside the quadrant for this draw
    }
    EXPECT_NEAR(r.eta_d2 / r.closed_form_eta_d2, 2.0, 1e-5);
    EXPECT_NEAR(r.eta_fm, r.closed_form_eta_fm, 1e-6 * std::abs(r.closed_form_eta_fm));
  }
}

TEST(Sotomayor, SecondDerivativeMatchesOracle) {
  const SotomayorReport r = sotomayor_at_fold(kFig2);
  OdeParams p = kFig2;
  p.m = r.m;
  const oracle::Params q{p.m, p.e, p.h, p.delta, p.s};
  const double h = 1e-4;
  auto f = [&](double t) {
    return oracle::f_nonlinear(q, {r.point.u + t * r.alpha[0], r.point.v + t * r.alpha[1]});
  };
  const auto fp = f(h), f0 = f(0), fn = f(-h);
  const double d2 = r.beta[0] * (fp.u - 2 * f0.u + fn.u) / (h * h) +
                    r.beta[1] * (fp.v - 2 * f0.v + fn.v) / (h * h);
  EXPECT_NEAR(r.eta_d2, d2, 1e-6);
  EXPECT_NEAR(r.eta_d2, -0.198, 1e-6);
}

TEST(Sotomayor, BoundaryFold) {
  const SotomayorReport r = sotomayor_at_fold(kFig2, FoldSite::Boundary);
  EXPECT_EQ(r.point.v, 0.0);
  EXPECT_TRUE(r.certified);
  EXPECT_LT(r.q0, 0);
  EXPECT_NEAR(r.q0, -(1.0) * std::sqrt(0.1) / (1 - std::sqrt(0.1)), 1e-12);
}

TEST(Sotomayor, NoMstarBelowB) {
  EXPECT_THROW(sotomayor_at_fold({0.5, 0.05, 0.9, 0.1, 0.9}), PreconditionError);
  EXPECT_THROW(sotomayor_check({0.5, 0.05, 0.9, 0.1, 0.9}), PreconditionError);
}

TEST(Sotomayor, OffFoldIsRejected) { EXPECT_THROW(sotomayor_check(kFig2), PreconditionError); }

TEST(Sweep, Fig2Topology) {
  const auto d = sweep_allee(kFig2, 0.05, 1.0, 200);
  ASSERT_EQ(d.markers.size(), 1u);
  const double ms = *derived_thresholds(kFig2).mstar;
  const double step = 0.95 / 199;
  EXPECT_NEAR(d.markers[0].m, ms, step);
  EXPECT_EQ(d.markers[0].branch, "SN");
  double prev_u = std::numeric_limits<double>::infinity();
  for (const auto& row : d.rows) {
    if (row.is_sn_marker) continue;
    if (row.m < ms) {
      EXPECT_TRUE(row.branch == "E1" || row.branch == "E2");
    } else {
      ADD_FAILURE() << "positive equilibrium past the fold at m=" << row.m;
    }
    if (row.branch == "E1") {
      EXPECT_LT(row.u, prev_u);
      prev_u = row.u;
      EXPECT_TRUE(is_attracting(row.stability));
    } else {
      EXPECT_EQ(row.stability.type, Stability::Saddle);
    }
  }
}

TEST(Sweep, FoldBracketedOnRandomDraws) {
  oracle::ParamSampler rng(32);
  for (int i = 0; i < 100; ++i) {
    const auto q = rng.above_B();
    const OdeParams p{q.m, q.e, q.h, q.delta, q.s};
    const double ms = *derived_thresholds(p).mstar;
    if (!(ms > 0.02)) continue;
    const double lo = 0.01, hi = 2 * ms + 0.1;
    const int steps = 50;
    const auto d = sweep_allee(p, lo, hi, steps);
    ASSERT_EQ(d.markers.size(), 1u);
    EXPECT_NEAR(d.markers[0].m, ms, (hi - lo) / (steps - 1));
  }
}

TEST(Sweep, EmptyAboveMstar) {
  const auto d = sweep_allee(kFig2, 0.9, 1.5, 20);
  EXPECT_TRUE(d.rows.empty());
  EXPECT_TRUE(d.markers.empty());
}

TEST(Sweep, BoundaryRowsAndAxisMarker) {
  SweepOptions opt;
  opt.include_boundary = true;
  const auto d = sweep_allee(kFig2, 0.05, 1.0, 200, opt);
  ASSERT_EQ(d.markers.size(), 2u);
  EXPECT_EQ(d.markers[0].branch, "SN-axis");
  EXPECT_NEAR(d.markers[0].m, derived_thresholds(kFig2).m0, 1e-9);
  EXPECT_EQ(d.markers[1].branch, "SN");
}

TEST(Sweep, RejectsBadRange) {
  EXPECT_THROW(sweep_allee(kFig2, 1.0, 0.5, 10), ValidationError);
  EXPECT_THROW(sweep_allee(kFig2, 0.1, 0.5, 1), ValidationError);
}

TEST(Sensitivity, SpecExample) {
  const OdeParams p{0.5, 0.05, 0.9, 0.1, 0.9};
  const auto r = abundance_sensitivity(p);
  EXPECT_LT(r.dT_dm, 0);
  EXPECT_GT(r.C, 0);
  const double h = 1e-5;
  const double fd =
      (abundance_sensitivity(p, 0.5 + h).total - abundance_sensitivity(p, 0.5 - h).total) / (2 * h);
  EXPECT_NEAR(r.dT_dm, fd, 1e-6 * std::abs(fd));
  EXPECT_NEAR(r.dv1_dm / r.du1_dm, 0.1, 1e-12);
}

TEST(Sensitivity, SmallDeltaDecouplesV) {
  const auto r = abundance_sensitivity({0.5, 1e-7, 0.9, 1e-6, 0.9});
  EXPECT_LT(std::abs(r.dv1_dm), 1e-5 * std::abs(r.du1_dm));
}

TEST(Sensitivity, SignLaw) {
  oracle::ParamSampler rng(33);
  for (int i = 0; i < 1000; ++i) {
    const auto q = rng.below_B();
    const auto r = abundance_sensitivity({q.m, q.e, q.h, q.delta, q.s});
    EXPECT_LT(r.du1_dm, 0);
    EXPECT_LT(r.dv1_dm, 0);
    EXPECT_LT(r.dT_dm, 0);
    EXPECT_GT(r.C, 0);
  }
}

TEST(Sensitivity, RegimePrecondition) {
  EXPECT_THROW(abundance_sensitivity(kFig2), DomainError);
}
