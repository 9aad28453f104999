#include <gtest/gtest.h>

#include <cmath>

#include "tlsim/errors.hpp"
#include "tlsim/physics.hpp"

namespace tlsim {
namespace {

// Frozen from an independent 30-digit evaluation of hc / sqrt(E^2 + 2 E mc^2).
struct KinematicsOracle {
  double energy_kev, momentum_kev_c, wavelength_pm;
};
constexpr KinematicsOracle kOracle[] = {
    {8.0, 90.7743532062, 13.658504701},
    {9.0, 96.3274680452, 12.8711151156},
    {11.0, 106.597264974, 11.6310857535},
    {14.0, 120.432431679, 10.2949173468},
    {16.0, 128.871899187, 9.62073142263},
};

TEST(Kinematics, MomentumMatchesOracle) {
  for (const auto& o : kOracle) EXPECT_NEAR(momentum_kev_c(o.energy_kev), o.momentum_kev_c, 1e-8) << o.energy_kev;
  EXPECT_NEAR(momentum_kev_c(14.0), 120.433, 1e-3);
  EXPECT_NEAR(momentum_kev_c(8.0), 90.774, 1e-3);
}

TEST(Kinematics, WavelengthMatchesOracle) {
  for (const auto& o : kOracle) EXPECT_NEAR(debroglie_wavelength_pm(o.energy_kev), o.wavelength_pm, 1e-8);
  EXPECT_NEAR(debroglie_wavelength_pm(14.0), 10.295, 1e-3);
  EXPECT_NEAR(debroglie_wavelength_pm(8.0), 13.659, 1e-3);
  EXPECT_NEAR(debroglie_wavelength_pm(16.0), 9.621, 1e-3);
}

TEST(Kinematics, MomentumVanishesAtZeroEnergy) {
  EXPECT_LT(momentum_kev_c(1e-12), 1e-4);
  EXPECT_THROW(momentum_kev_c(0.0), DomainError);
  EXPECT_THROW(momentum_kev_c(-1.0), DomainError);
  EXPECT_THROW(debroglie_wavelength_pm(0.0), DomainError);
}

TEST(Kinematics, TransitTime) {
  EXPECT_NEAR(transit_time_s(14.0, 0.694), 1.009145405e-8, 1e-16);
  EXPECT_NEAR(transit_time_s(8.0, 0.694), 1.323555276e-8, 1e-16);
  EXPECT_NEAR(transit_time_s(14.0, 0.694), 1.01e-8, 0.005e-8);
  EXPECT_THROW(transit_time_s(14.0, 0.0), DomainError);
  EXPECT_THROW(transit_time_s(0.0, 1.0), DomainError);
}

TEST(Kinematics, WavelengthStrictlyDecreasing) {
  for (double e = 5.0; e < 18.0; e += 0.5) {
    EXPECT_GT(debroglie_wavelength_pm(e), debroglie_wavelength_pm(e + 0.5)) << e;
  }
}

TEST(Kinematics, RelativisticCorrectionSize) {
  const double m = PhysicalConstants::electron_rest_energy;
  for (double e = 5.0; e <= 18.0; e += 0.5) {
    const double nonrel = PhysicalConstants::planck_hc / std::sqrt(2.0 * m * e) * 1e3;
    const double rel = debroglie_wavelength_pm(e);
    const double excess = nonrel / rel - 1.0;
    EXPECT_NEAR(excess, std::sqrt(1.0 + e / (2.0 * m)) - 1.0, 1e-12);
    EXPECT_GT(excess, 0.002) << e;
    EXPECT_LT(excess, 0.016) << e;
  }
}

TEST(Geometry, ResonanceResidual) {
  const InterferometerGeometry geom;
  const GratingSpec g1{.period_um = 1.2}, g2{.period_um = 1.0};
  EXPECT_NEAR(resonance_residual(geom, g1, g2), 0.00486111111111, 1e-12);
  EXPECT_NEAR(resonance_residual(0.1152, 0.576, 1.2, 1.0), 0.0, 1e-15);
  EXPECT_EQ(resonance_residual(0.0, 0.5, 1.0, 1.0), 0.0);
  EXPECT_THROW(resonance_residual(0.1, 0.0, 1.2, 1.0), DomainError);
  EXPECT_THROW(resonance_residual(0.1, 0.5, 1.2, 0.0), DomainError);
}

TEST(Geometry, ResonantG1BalancesResidual) {
  for (double l2 : {0.3, 0.576, 0.9}) {
    const double d1 = resonant_g1_period_um(1.0, 0.118, l2);
    EXPECT_NEAR(resonance_residual(0.118, l2, d1, 1.0), 0.0, 1e-15);
  }
}

TEST(Geometry, MagnifiedPeriod) {
  EXPECT_NEAR(magnified_period_um(1.0, 0.118, 0.576), 5.8813559322, 1e-10);
  EXPECT_NEAR(magnified_period_um(1.0, 0.118, 0.576), 5.9, 0.05);
  EXPECT_EQ(magnified_period_um(1.0, 0.118, 0.0), 1.0);
  EXPECT_EQ(magnified_period_um(1.0, 0.3, 0.3), 2.0);
  EXPECT_THROW(magnified_period_um(1.0, 0.0, 0.5), DomainError);
  for (double k : {0.5, 2.0, 10.0}) {
    EXPECT_NEAR(magnified_period_um(1.0, 0.118 * k, 0.576 * k), magnified_period_um(1.0, 0.118, 0.576), 1e-12);
    EXPECT_NEAR(magnified_period_um(1.0, 0.118, 0.576), 1.0 * (1.0 + 0.576 / 0.118), 1e-12);
  }
}

TEST(Geometry, BeatPeriodEqualsMagnifiedAtResonance) {
  const double d1 = resonant_g1_period_um(1.0, 0.118, 0.576);
  EXPECT_NEAR(beat_period_um(d1, 1.0), magnified_period_um(1.0, 0.118, 0.576), 1e-12);
}

TEST(Geometry, TalbotLength) {
  EXPECT_NEAR(talbot_length_m(1.0, 10.295), 0.1942690627, 1e-9);
  EXPECT_NEAR(talbot_length_m(1.0, 13.659), 0.1464236035, 1e-9);
  EXPECT_NEAR(talbot_length_m(1.0, 10.295), 0.1943, 1e-4);
  EXPECT_NEAR(talbot_length_m(1.0, 13.659), 0.1464, 1e-4);
  // lambda = 2 d^2 gives one unit: d = 1e-3 um = 1e-9 m, lambda = 2e-18 m = 2e-6 pm.
  EXPECT_NEAR(talbot_length_m(1e-3, 2e-6), 1.0, 1e-12);
  EXPECT_THROW(talbot_length_m(0.0, 10.0), DomainError);
  EXPECT_THROW(talbot_length_m(1.0, -1.0), DomainError);
}

TEST(Geometry, LongitudinalMapping) {
  const InterferometerGeometry geom;
  EXPECT_EQ(longitudinal_mapping_m(0.0, geom), 0.576);
  EXPECT_NEAR(longitudinal_mapping_m(10.0, geom), 0.5830710678, 1e-10);
  EXPECT_NEAR(longitudinal_mapping_m(-10.0, geom), 0.5689289322, 1e-10);
  EXPECT_THROW(longitudinal_mapping_m(10.5, geom, 10.0), DomainError);
  // Affine with slope cos(tilt).
  for (double tilt : {0.0, 30.0, 45.0, 80.0}) {
    InterferometerGeometry g = geom;
    g.detector_tilt_deg = tilt;
    const double slope = (longitudinal_mapping_m(4.0, g) - longitudinal_mapping_m(-4.0, g)) / 8e-3;
    EXPECT_NEAR(slope, std::cos(tilt * 3.14159265358979323846 / 180.0), 1e-9);
  }
  InterferometerGeometry vertical = geom;
  vertical.detector_tilt_deg = 90.0;
  EXPECT_THROW(vertical.validate(), ConfigError);
}

TEST(Specs, Validation) {
  BeamSpec b;
  EXPECT_NO_THROW(b.validate());
  b.energy_sigma_rel = 0.02;
  EXPECT_THROW(b.validate(), ConfigError);
  b = BeamSpec{};
  b.kinetic_energy_kev = 20.0;
  EXPECT_NO_THROW(b.validate());
  EXPECT_FALSE(b.energy_in_nominal_range());
  GratingSpec g{.period_um = 0.0};
  try {
    g.validate("g2");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "g2.period_um");
  }
}

TEST(Specs, GratingTransmission) {
  const GratingSpec g{.period_um = 1.0, .open_fraction = 0.5};
  EXPECT_EQ(g.transmission(0.0), 1.0);
  EXPECT_EQ(g.transmission(0.5), 0.0);
  for (double x = -3.0; x < 3.0; x += 0.0137) EXPECT_EQ(g.transmission(x + 1.0), g.transmission(x));
  const GratingSpec shifted{.period_um = 1.0, .open_fraction = 0.5, .lateral_offset_um = 0.25};
  EXPECT_EQ(shifted.transmission(0.25), 1.0);
  EXPECT_EQ(shifted.transmission(0.75), 0.0);
  // Brute enumeration of one period: open exactly on (offset - f/2, offset + f/2).
  int open = 0;
  for (int i = 0; i < 1000; ++i) {
    const double x = (i + 0.5) / 1000.0;
    const bool expect = std::abs(x - 0.25) < 0.25;
    EXPECT_EQ(shifted.transmission(x), expect ? 1.0 : 0.0) << x;
    open += expect;
  }
  EXPECT_EQ(open, 500);
}

}  // namespace
}  // namespace tlsim
