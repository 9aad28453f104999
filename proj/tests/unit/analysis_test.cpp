#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "tlsim/analysis.hpp"
#include "tlsim/errors.hpp"

namespace tlsim {
namespace {

constexpr double kD3 = 5.8813559322033898;

DetectorSpec clean_detector() {
  DetectorSpec d;
  d.position_sigma_um = 0.0;
  return d;
}

std::vector<Event> sinusoid_events(double c, std::size_t n, std::uint64_t seed, double rotation_mrad = 0.0,
                                   double half_s_mm = 10.0) {
  DetectorSpec det = clean_detector();
  det.rotation_misalignment_mrad = rotation_mrad;
  det.half_extent_s_mm = half_s_mm;
  EventList ev = sample_events(c > 0 ? sinusoid_model(kD3, c, det) : uniform_model(det), n, seed, det);
  return apply_detector_effects(ev, det, seed).events;
}

TEST(Rayleigh, CombGivesTwo) {
  std::vector<Event> comb;
  for (int j = 0; j < 500; ++j) comb.push_back(Event{j * kD3, 0.0});
  EXPECT_NEAR(rayleigh_power(comb, kD3, 0.0), 2.0, 1e-9);
  EXPECT_THROW(rayleigh_power(comb, 0.0, 0.0), DomainError);
  EXPECT_THROW(rayleigh_power(std::vector<Event>{Event{}}, 1.0, 0.0), DomainError);
}

TEST(Rayleigh, NullMean) {
  const std::size_t n = 10000;
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) sum += rayleigh_power(sinusoid_events(0.0, n, 1000 + seed), kD3, 0.0);
  const double mean = sum / 200.0;
  EXPECT_NEAR(std::sqrt(std::numbers::pi / n), 0.0177245, 1e-6);
  EXPECT_NEAR(mean, std::sqrt(std::numbers::pi / n), 0.1 * std::sqrt(std::numbers::pi / n));
}

TEST(Rayleigh, ConsistentForSinusoid) {
  const auto ev = sinusoid_events(0.3, 100000, 5);
  EXPECT_NEAR(rayleigh_power(ev, kD3, 0.0), 0.300, 0.013);
}

TEST(CorrectedContrast, Examples) {
  const std::size_t n = 10000;
  EXPECT_EQ(corrected_contrast(std::sqrt(4.0 / n), n).contrast, 0.0);
  const auto c = corrected_contrast(0.2, n);
  EXPECT_NEAR(c.contrast, 0.19900744, 1e-8);
  EXPECT_NEAR(c.sigma, 0.014142136, 1e-9);
  EXPECT_NEAR(c.contrast, 0.1990, 5e-5);
  EXPECT_EQ(corrected_contrast(0.0, 77).contrast, 0.0);
  EXPECT_THROW(corrected_contrast(0.1, 1), DomainError);
}

TEST(CorrectedContrast, RemovesNoiseFloorOnSquaredScale) {
  // The squared estimate is unbiased under the null. The clamp at zero then
  // leaves E[C] = 2 e^-1 Gamma(3/2) / sqrt(n), not 0.
  const std::size_t n = 10000;
  const int sets = 200;
  std::vector<double> c2, c;
  for (int k = 0; k < sets; ++k) {
    const double r = rayleigh_power(sinusoid_events(0.0, n, 5000 + k), kD3, 0.0);
    c2.push_back((r * r - 4.0 / n) / (1.0 - 1.0 / n));
    c.push_back(corrected_contrast(r, n).contrast);
  }
  auto mean_se = [&](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::pair{m, std::sqrt(ss / (v.size() - 1) / v.size())};
  };
  const auto [m2, se2] = mean_se(c2);
  EXPECT_LT(std::abs(m2), 3.0 * se2);
  const auto [m1, se1] = mean_se(c);
  const double clamp_bias = 2.0 * std::exp(-1.0) * std::tgamma(1.5) / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(m1, clamp_bias, 3.0 * se1);
}

TEST(CorrectedContrast, ErrorShrinksAsInverseRootN) {
  for (double c : {0.1, 0.3, 0.6}) {
    std::vector<double> log_n, log_err;
    for (std::size_t n : {1000u, 10000u, 100000u}) {
      double ss = 0.0;
      const int reps = 20;
      for (int k = 0; k < reps; ++k) {
        const auto ev = sinusoid_events(c, n, 100 * n + k);
        const double est = corrected_contrast(rayleigh_power(ev, kD3, 0.0), n).contrast;
        ss += (est - c) * (est - c);
      }
      log_n.push_back(std::log(static_cast<double>(n)));
      log_err.push_back(0.5 * std::log(ss / reps));
    }
    const double slope = (log_err[2] - log_err[0]) / (log_n[2] - log_n[0]);
    EXPECT_GT(slope, -0.75) << c;
    EXPECT_LT(slope, -0.3) << c;
  }
}

TEST(Fit, RecoversTruth) {
  const std::size_t n = 200000;
  const auto ev = sinusoid_events(0.2, n, 61, 10.0);
  const auto fit = fit_fringes(ev, {5.7, 6.1}, {5.0, 15.0});
  EXPECT_NEAR(fit.period_um, 5.881, 0.05);
  EXPECT_NEAR(fit.rotation_mrad, 10.0, 2.0);
  EXPECT_NEAR(fit.contrast, 0.2, 3.0 * std::sqrt(2.0 / n));
  EXPECT_FALSE(fit.flags.low_significance);
  EXPECT_FALSE(fit.flags.boundary);
  EXPECT_EQ(fit.n_events, n);
  EXPECT_GT(fit.contrast_sigma, 0.0);
}

// The 3 sigma bound is pointwise. Searching more than about one resolution
// cell (d^2/span_u in period, d/span_s in rotation) inflates the null maximum.
TEST(Fit, NullFlagsLowSignificance) {
  const std::size_t n = 100000;
  const auto ev = sinusoid_events(0.0, n, 71);
  const auto fit = fit_fringes(ev, {kD3 * 0.9975, kD3 * 1.0025}, {-0.1, 0.1});
  EXPECT_LE(fit.contrast, 3.0 * std::sqrt(2.0 / n));
  EXPECT_TRUE(fit.flags.low_significance);
}

TEST(Fit, BoundaryFlag) {
  const auto ev = sinusoid_events(0.3, 50000, 81);
  // The upper edge sits inside the main lobe of the true period.
  const auto fit = fit_fringes(ev, {5.0, 5.875}, {-1.0, 1.0});
  EXPECT_TRUE(fit.flags.boundary);
  EXPECT_GE(fit.period_um, 5.0);
  EXPECT_LE(fit.period_um, 5.875);
}

TEST(Fit, RotationInvariance) {
  const auto ev = sinusoid_events(0.3, 100000, 91, 1.0);
  const double delta = 3e-3;
  std::vector<Event> turned;
  // Turning every event by +delta turns the fringe normal by +delta.
  for (const auto& e : ev) {
    turned.push_back(Event{e.u_um * std::cos(delta) - e.s_um * std::sin(delta),
                           e.u_um * std::sin(delta) + e.s_um * std::cos(delta)});
  }
  const auto a = fit_fringes(ev, {5.7, 6.1}, {-2.0, 4.0});
  const auto b = fit_fringes(turned, {5.7, 6.1}, {-2.0 + 3.0, 4.0 + 3.0});
  EXPECT_NEAR(b.rotation_mrad, a.rotation_mrad + 3.0, 0.02);
  EXPECT_NEAR(b.period_um, a.period_um, 2e-4);
  EXPECT_NEAR(b.contrast, a.contrast, 1e-3);
}

TEST(Fit, PeakStandsAboveDetunedPeriods) {
  const auto ev = sinusoid_events(0.2, 200000, 101);
  const double at_truth = rayleigh_power(ev, kD3, 0.0);
  EXPECT_GE(at_truth, 2.0 * rayleigh_power(ev, kD3 * 1.02, 0.0));
  EXPECT_GE(at_truth, 2.0 * rayleigh_power(ev, kD3 * 0.98, 0.0));
}

TEST(Fit, DuplicatedEventsKeepArgmax) {
  const auto ev = sinusoid_events(0.3, 20000, 111, 0.5);
  std::vector<Event> tripled;
  for (const auto& e : ev) tripled.insert(tripled.end(), 3, e);
  const auto a = fit_fringes(ev, {5.7, 6.1}, {-2.0, 2.0});
  const auto b = fit_fringes(tripled, {5.7, 6.1}, {-2.0, 2.0});
  EXPECT_NEAR(a.period_um, b.period_um, 1e-4);
  EXPECT_NEAR(a.rotation_mrad, b.rotation_mrad, 1e-2);
}

TEST(Fit, WorkerCountDoesNotChangeResult) {
  const auto ev = sinusoid_events(0.3, 50000, 121);
  const auto a = fit_fringes(ev, {5.7, 6.1}, {-2.0, 2.0}, 1);
  const auto b = fit_fringes(ev, {5.7, 6.1}, {-2.0, 2.0}, 4);
  EXPECT_EQ(a.period_um, b.period_um);
  EXPECT_EQ(a.rotation_mrad, b.rotation_mrad);
  EXPECT_EQ(a.rayleigh_power, b.rayleigh_power);
}

TEST(Fit, FixedRotation) {
  const auto ev = sinusoid_events(0.3, 50000, 131);
  const auto fit = fit_fringes(ev, {5.7, 6.1}, {0.0, 0.0});
  EXPECT_EQ(fit.rotation_mrad, 0.0);
  EXPECT_NEAR(fit.period_um, kD3, 0.01);
}

TEST(Fit, RejectsBadInput) {
  const auto ev = sinusoid_events(0.3, 1000, 141);
  EXPECT_THROW(fit_fringes(std::span(ev).first(50), {5.7, 6.1}, {-1, 1}), DomainError);
  EXPECT_THROW(fit_fringes(ev, {6.1, 5.7}, {-1, 1}), DomainError);
  EXPECT_THROW(fit_fringes(ev, {0.0, 5.7}, {-1, 1}), DomainError);
}

TEST(Flags, Text) {
  FitFlags f;
  EXPECT_EQ(f.to_string(), "none");
  f.boundary = true;
  f.low_significance = true;
  EXPECT_EQ(f.to_string(), "boundary,low_significance");
}

TEST(Longitudinal, UniformEventsGiveZeroContrast) {
  // About one resolution cell per bin; each bin then exceeds 3 sigma a few
  // percent of the time, so the excess count is checked over 32 bins.
  SimulationConfig c;
  FitSettings narrow;
  narrow.period_half_width_rel = 0.0025;
  narrow.rotation_half_width_mrad = 1.0;
  int over = 0;
  for (std::uint64_t seed = 151; seed < 155; ++seed) {
    const auto scan = contrast_vs_longitudinal(sinusoid_events(0.0, 100000, seed), 8, c, narrow);
    ASSERT_EQ(scan.curve.contrast.size(), 8u);
    for (std::size_t i = 0; i < 8; ++i) over += scan.curve.contrast[i] > 3.0 * scan.curve.sigma[i];
  }
  EXPECT_LE(over, 3);
}

TEST(Longitudinal, SeedsFollowMagnifiedPeriod) {
  SimulationConfig c;
  const auto ev = sinusoid_events(0.3, 40000, 161);
  const auto scan = contrast_vs_longitudinal(ev, 8, c);
  ASSERT_EQ(scan.period_seed_um.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    const double l2 = longitudinal_mapping_m(scan.curve.abscissa[i], c.geometry);
    EXPECT_NEAR(scan.period_seed_um[i], magnified_period_um(c.g2.period_um, c.geometry.l1_m, l2), 1e-12);
  }
  EXPECT_NEAR(scan.curve.abscissa.front(), -8.75, 1e-12);
  EXPECT_GT(scan.period_seed_um.back(), scan.period_seed_um.front());
}

TEST(Longitudinal, SparseBinsMerge) {
  SimulationConfig c;
  auto ev = sinusoid_events(0.3, 5000, 171);
  const auto scan = contrast_vs_longitudinal(ev, 8, c);
  EXPECT_LT(scan.curve.abscissa.size(), 8u);
  EXPECT_TRUE(scan.fits.front().flags.merged);
  EXPECT_THROW(contrast_vs_longitudinal(ev, 2, c), DomainError);
}

}  // namespace
}  // namespace tlsim
