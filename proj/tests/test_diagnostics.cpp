#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rspider/diagnostics.hpp"
#include "rspider/errors.hpp"

using namespace rspider;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// A = diag(lambda1, lambda1 - delta) as a two-component PCA instance.
PcaProblem diag_pair(double lambda1, double delta) {
  MatrixXd z = MatrixXd::Zero(2, 2);
  z(0, 0) = std::sqrt(2.0 * lambda1);
  z(1, 1) = std::sqrt(2.0 * (lambda1 - delta));
  return PcaProblem(z);
}

Point angle_point(const Manifold& m, double theta) {
  return m.point(Eigen::Vector2d(std::cos(theta), std::sin(theta)));
}

FrozenState frozen_at(const PcaProblem& p, std::uint64_t seed, std::size_t batch) {
  const Manifold& m = p.manifold();
  Rng rng = make_rng(seed, Stream::Initialization);
  const Point x_prev = m.random_point(rng);
  const Tangent v_prev = p.full_gradient(x_prev);
  const Point x = m.exp(x_prev, (-1.0 / (2.0 * p.smoothness_hint())) * v_prev);
  return FrozenState{x_prev, x, v_prev, batch, 0.05};
}

}  // namespace

TEST(FdGradientCheck, LinearIsExact) {
  const Manifold e = Manifold::euclidean(4);
  const VectorXd c = VectorXd::LinSpaced(4, -1.0, 2.0);
  ComponentSum f(
      e, 1, 0.0, [&](std::size_t, const VectorXd& x) { return c.dot(x); },
      [&](std::size_t, const VectorXd&) -> VectorXd { return c; });
  const ProbeReport r = fd_gradient_check(f, e.point(VectorXd::Zero(4)), 50, 1e-3, 1, 1e-12);
  EXPECT_LE(r.statistic, 1e-12);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.samples, 50u);
}

TEST(FdGradientCheck, DirectionalDerivativeExample) {
  const PcaProblem p = diag_pair(2.0, 1.0);
  const Manifold& m = p.manifold();
  const Point x = angle_point(m, std::numbers::pi / 4);
  const Tangent v = m.tangent(x, Eigen::Vector2d(-1, 1) / std::sqrt(2.0));
  EXPECT_NEAR(m.inner(x, p.full_gradient(x), v), 1.0, 1e-15);
}

TEST(FdGradientCheck, SecondOrderDecay) {
  const PcaProblem p = generate_gap_matrix({10, 40, 0.2, 3, 0.9});
  Rng rng = make_rng(2, Stream::Initialization);
  const Point x = p.manifold().random_point(rng);
  const double coarse = fd_gradient_check(p, x, 20, 1e-3, 5).statistic;
  const double fine = fd_gradient_check(p, x, 20, 1e-4, 5).statistic;
  // Same directions (same seed), step ratio 10: error ratio near 100.
  EXPECT_GT(coarse / fine, 50.0);
  EXPECT_LT(coarse / fine, 200.0);
  EXPECT_THROW(fd_gradient_check(p, x, 1, 1e-2, 0), UsageError);
  EXPECT_THROW(fd_gradient_check(p, x, 0, 1e-4, 0), UsageError);
}

TEST(FdGradientCheck, ReportsAreReproducible) {
  const PcaProblem p = generate_gap_matrix({10, 40, 0.2, 3, 0.9});
  const Point x = p.manifold().point(VectorXd::Ones(10));
  EXPECT_EQ(fd_gradient_check(p, x, 10, 1e-5, 9).to_text(), fd_gradient_check(p, x, 10, 1e-5, 9).to_text());
}

TEST(SmoothnessProbe, ConstantGradientIsZero) {
  const Manifold e = Manifold::euclidean(3);
  ComponentSum f(
      e, 2, 1.0, [](std::size_t, const VectorXd& x) { return x.sum(); },
      [](std::size_t, const VectorXd&) -> VectorXd { return VectorXd::Ones(3); });
  const ProbeReport r = smoothness_probe(f, 30, 1.0, 1);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(SmoothnessProbe, Diag21WithinHint) {
  const PcaProblem p = diag_pair(2.0, 1.0);
  EXPECT_NEAR(p.smoothness_hint(), 8.0, 1e-9);
  const ProbeReport r = smoothness_probe(p, 500, 1.5, 2);
  EXPECT_GT(r.statistic, 0.0);
  EXPECT_LE(r.statistic, 8.0);
  EXPECT_TRUE(r.pass);
  EXPECT_THROW(smoothness_probe(p, 0, 1.0, 2), UsageError);
}

TEST(SmoothnessProbe, SymmetricInThePair) {
  const PcaProblem p = generate_gap_matrix({6, 30, 0.2, 4, 0.9});
  const Manifold& m = p.manifold();
  Rng rng = make_rng(3, Stream::Probe);
  for (int t = 0; t < 100; ++t) {
    const Point x = m.random_point(rng);
    const Point y = m.exp(x, 1.2 * m.random_unit_tangent(x, rng));
    EXPECT_NEAR(smoothness_ratio(p, x, y), smoothness_ratio(p, y, x), 1e-10);
  }
  const Point x = m.random_point(rng);
  EXPECT_THROW(smoothness_ratio(p, x, x), UsageError);
}

TEST(PlEstimate, MatchesClosedFormInTwoDimensions) {
  for (double delta : {1.0, 0.5, 0.25}) {
    const PcaProblem p = diag_pair(1.0, delta);
    const Manifold& m = p.manifold();
    for (double theta : {0.1, 0.3, std::numbers::pi / 4, 0.9}) {
      const Point x = angle_point(m, theta);
      const std::vector<Point> one{x};
      const double expected = 1.0 / (4.0 * delta * std::cos(theta) * std::cos(theta));
      EXPECT_NEAR(pl_constant_estimate(p, -1.0, one).statistic, expected, 1e-9 * expected)
          << "delta=" << delta << " theta=" << theta;
    }
  }
  const PcaProblem p = diag_pair(1.0, 1.0);
  const std::vector<Point> quarter{angle_point(p.manifold(), std::numbers::pi / 4)};
  EXPECT_NEAR(pl_constant_estimate(p, -1.0, quarter).statistic, 0.5, 1e-12);
}

TEST(PlEstimate, ExcludesCriticalPoints) {
  const PcaProblem p = diag_pair(2.0, 1.0);
  const Manifold& m = p.manifold();
  const std::vector<Point> optimum{m.point(Eigen::Vector2d(1, 0))};
  EXPECT_THROW(pl_constant_estimate(p, -2.0, optimum), UsageError);
  const std::vector<Point> mixed{m.point(Eigen::Vector2d(1, 0)), angle_point(m, 0.5)};
  const ProbeReport r = pl_constant_estimate(p, -2.0, mixed);
  EXPECT_EQ(r.samples, 1u);
  EXPECT_EQ(r.details.at("excluded"), 1.0);
}

TEST(PlEstimate, BallSamplesStayWithinRadius) {
  const PcaProblem p = generate_gap_matrix({12, 60, 0.1, 5, 0.9});
  const std::vector<Point> pts = pca_pl_points(p, 200, 4);
  ASSERT_EQ(pts.size(), 200u);
  const Point center = p.manifold().point(leading_eigpair(p).vector);
  for (const Point& x : pts) EXPECT_LE(p.manifold().dist(center, x), std::numbers::pi / 4 + 1e-12);
  EXPECT_EQ(pca_pl_points(p, 20, 4).front(), pts.front());
}

TEST(VarianceProbe, FullBatchHasNoNoise) {
  const PcaProblem p = generate_gap_matrix({6, 30, 0.2, 6, 0.9});
  const ProbeReport r = variance_probe(p, frozen_at(p, 1, 30), 20, 2);
  EXPECT_LT(r.statistic, 1e-26);
  EXPECT_TRUE(r.pass);
  EXPECT_DOUBLE_EQ(*r.bound, 2.0 * 0.05 * 0.05);
}

TEST(VarianceProbe, TwoComponentsMatchExhaustiveVariance) {
  MatrixXd z(3, 2);
  z << 1.0, 0.2, -0.5, 1.5, 0.3, -0.7;
  const PcaProblem p(z);
  const Manifold& m = p.manifold();
  const FrozenState s = frozen_at(p, 3, 1);
  const Tangent truth = p.full_gradient(s.x);
  double exact = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const Tangent v = p.component_gradient(i, s.x) -
                      m.transport(s.x_prev, s.x, p.component_gradient(i, s.x_prev) - s.v_prev);
    exact += 0.5 * (v - truth).squared_norm();
  }
  const ProbeReport r = variance_probe(p, s, 4000, 4);
  EXPECT_LE(std::abs(r.statistic - exact), 3.0 * r.details.at("standard_error"));
}

TEST(VarianceProbe, ScalesInverselyWithBatch) {
  const PcaProblem p = generate_gap_matrix({8, 400, 0.2, 7, 0.9});
  std::vector<double> log_b;
  std::vector<double> log_v;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t b : {1u, 2u, 4u, 8u}) {
    const ProbeReport r = variance_probe(p, frozen_at(p, 8, b), 4000, 9);
    EXPECT_LE(r.statistic, prev + 3.0 * r.details.at("standard_error"));
    prev = r.statistic;
    log_b.push_back(std::log(static_cast<double>(b)));
    log_v.push_back(std::log(r.statistic));
  }
  const double mb = (log_b[0] + log_b[1] + log_b[2] + log_b[3]) / 4.0;
  const double mv = (log_v[0] + log_v[1] + log_v[2] + log_v[3]) / 4.0;
  double sxy = 0.0;
  double sxx = 0.0;
  for (int i = 0; i < 4; ++i) {
    sxy += (log_b[i] - mb) * (log_v[i] - mv);
    sxx += (log_b[i] - mb) * (log_b[i] - mb);
  }
  EXPECT_NEAR(sxy / sxx, -1.0, 0.15);
}

TEST(EpochsToDouble, RatioExamples) {
  EXPECT_DOUBLE_EQ(doubling_from_ratio(1.0, 0.5, 5.0).value, 5.0);
  EXPECT_DOUBLE_EQ(doubling_from_ratio(0.4, 0.1, 5.0).value, 2.5);
  const DoublingEstimate stalled = doubling_from_ratio(0.3, 0.3, 5.0);
  EXPECT_EQ(stalled.kind, DoublingEstimate::Kind::NoProgress);
  EXPECT_TRUE(std::isinf(stalled.value));
  const DoublingEstimate done = doubling_from_ratio(1e-3, 1e-17, 5.0);
  EXPECT_EQ(done.kind, DoublingEstimate::Kind::Converged);
  EXPECT_TRUE(std::isnan(done.value));
}

TEST(EpochsToDouble, SlidingWindows) {
  const std::vector<double> acc{1.0, 0.5, 0.25, 0.125, 0.0625};
  const std::vector<DoublingEstimate> est = epochs_to_double(acc, 2, 2.5);
  ASSERT_EQ(est.size(), 3u);
  for (const DoublingEstimate& e : est) EXPECT_NEAR(e.value, 2.5, 1e-12);
  EXPECT_DOUBLE_EQ(est.front().epoch, 5.0);
  EXPECT_DOUBLE_EQ(est.back().epoch, 10.0);
  EXPECT_THROW(epochs_to_double(std::span<const double>(acc.data(), 2), 2, 1.0), UsageError);
}

TEST(EpochsToDouble, FromCheckpointTrace) {
  RunTrace trace;
  trace.checkpoint_every = 1.0;
  for (int e = 0; e <= 10; ++e) {
    TraceRecord r;
    r.epoch = e;
    r.f = -2.0 + 2.0 * std::pow(0.5, e / 5.0);
    trace.records.push_back(r);
  }
  const std::vector<DoublingEstimate> est = epochs_to_double(trace, -2.0, 5.0);
  ASSERT_EQ(est.size(), 6u);
  for (const DoublingEstimate& e : est) EXPECT_NEAR(e.value, 5.0, 1e-9);
  EXPECT_THROW(epochs_to_double(trace, 0.0, 5.0), UsageError);
  EXPECT_THROW(epochs_to_double(trace, -2.0, 2.5), UsageError);
  trace.checkpoint_every = 0.0;
  EXPECT_THROW(epochs_to_double(trace, -2.0, 5.0), UsageError);
}

TEST(ProbeReport, TextBlock) {
  ProbeReport r;
  r.name = "demo";
  r.samples = 3;
  r.statistic = 0.5;
  r.bound = 1.0;
  r.details["alpha"] = 2.0;
  EXPECT_EQ(r.to_text(), "probe=demo\nsamples=3\nstatistic=0.5\nbound=1\npass=true\ndetail.alpha=2\n");
  r.bound.reset();
  EXPECT_NE(r.to_text().find("bound=none\n"), std::string::npos);
}
