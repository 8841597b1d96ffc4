#include <gtest/gtest.h>

#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "gridfr/quadrature.hpp"
#include "gridfr/window.hpp"

using gridfr::complex;
using gridfr::GaussianWindow;

namespace {

// Independent route: adaptive Gauss-Kronrod of the defining integral.
complex transform_oracle(const GaussianWindow& w, double xi, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  const double tau = 2.0 * std::numbers::pi;
  auto re = [&](double x) { return w.unchecked_value(x) * std::cos(tau * xi * x); };
  auto im = [&](double x) { return -w.unchecked_value(x) * std::sin(tau * xi * x); };
  return {gauss_kronrod<double, 61>::integrate(re, a, b, 6, 1e-14),
          gauss_kronrod<double, 61>::integrate(im, a, b, 6, 1e-14)};
}

}  // namespace

TEST(TruncationRadius, DefaultWindowIsTen) {
  EXPECT_EQ(GaussianWindow().radius(), 10);
  EXPECT_EQ(gridfr::truncation_radius(0.125, 1e-12), 10);
}

TEST(TruncationRadius, SmallestIntegerMeetingTolerance) {
  for (double sigma : {0.05, 0.1, 0.125, 0.2, 0.3, 0.5, 1.0}) {
    for (double eps : {1e-3, 1e-6, 1e-9, 1e-12, 1e-15}) {
      const int k = gridfr::truncation_radius(sigma, eps);
      const double a = 2.0 * std::numbers::pi * std::numbers::pi * sigma * sigma;
      // Brute-force search from K = 1.
      int brute = 1;
      while (std::exp(-a * brute * brute) > eps) ++brute;
      EXPECT_EQ(k, brute) << "sigma=" << sigma << " eps=" << eps;
    }
  }
}

TEST(TruncationRadius, RejectsBadParameters) {
  EXPECT_THROW(gridfr::truncation_radius(0.0, 1e-12), gridfr::ParameterError);
  EXPECT_THROW(gridfr::truncation_radius(-1.0, 1e-12), gridfr::ParameterError);
  EXPECT_THROW(gridfr::truncation_radius(0.1, 0.0), gridfr::ParameterError);
  EXPECT_THROW(gridfr::truncation_radius(0.1, 1.0), gridfr::ParameterError);
  EXPECT_THROW(GaussianWindow(std::nan(""), 1e-12), gridfr::ParameterError);
}

TEST(GaussianWindow, ValueCenteredAndDomainChecked) {
  const GaussianWindow w;
  EXPECT_DOUBLE_EQ(w.value(0.5), 1.0);
  EXPECT_NEAR(w.value(0.0), std::exp(-8.0), 1e-16);
  EXPECT_DOUBLE_EQ(w.value(0.3), w.value(0.7));
  EXPECT_THROW(w.value(-1e-9), gridfr::DomainError);
  EXPECT_THROW(w.value(1.0 + 1e-9), gridfr::DomainError);
  EXPECT_THROW(w.value(std::nan("")), gridfr::DomainError);
}

TEST(GaussianWindow, SpectrumAtZeroIsMass) {
  const GaussianWindow w;
  EXPECT_NEAR(std::abs(w.spectrum(0.0)), std::sqrt(2.0 * std::numbers::pi) * 0.125, 1e-15);
  EXPECT_THROW(w.spectrum(INFINITY), gridfr::DomainError);
}

TEST(GaussianWindow, SpectrumMatchesWholeLineQuadrature) {
  for (double sigma : {0.125, 0.2}) {
    const GaussianWindow w(sigma, 1e-12);
    for (double xi : {0.0, 0.3, -0.7, 1.0, 2.5, -4.25, 7.0, 10.0}) {
      const complex oracle = transform_oracle(w, xi, -3.0, 4.0);
      EXPECT_LT(std::abs(w.spectrum(xi) - oracle), 1e-10) << "sigma=" << sigma << " xi=" << xi;
    }
  }
}

TEST(GaussianWindow, UnitIntervalCoefficientWithinTailBound) {
  const GaussianWindow w;
  EXPECT_GT(w.tail_bound(), 1e-6);
  EXPECT_LT(w.tail_bound(), 1e-4);
  for (double xi : {0.0, 0.5, 1.0, 3.0, 9.5}) {
    const complex unit = transform_oracle(w, xi, 0.0, 1.0);
    EXPECT_LE(std::abs(unit - w.spectrum(xi)), w.tail_bound() * (1.0 + 1e-9));
  }
}

TEST(GaussianWindow, SpectrumIsHermitian) {
  const GaussianWindow w(0.2, 1e-12);
  for (double xi : {0.1, 1.3, 4.0}) {
    EXPECT_NEAR(std::abs(w.spectrum(-xi) - std::conj(w.spectrum(xi))), 0.0, 1e-16);
  }
}

TEST(GaussianWindow, BeyondRadiusBelowTolerance) {
  const GaussianWindow w;
  const double peak = std::abs(w.spectrum(0.0));
  EXPECT_LE(std::abs(w.spectrum(w.radius())), 1e-12 * peak);
  EXPECT_GT(std::abs(w.spectrum(w.radius() - 1)), 1e-12 * peak);
}

TEST(GaussianWindow, TensorProducts) {
  const GaussianWindow w;
  const std::array<double, 2> x{0.25, 0.6};
  EXPECT_DOUBLE_EQ(gridfr::eval_window(x, w), w.value(0.25) * w.value(0.6));
  const std::array<double, 2> xi{1.5, -2.0};
  EXPECT_EQ(gridfr::eval_spectrum(xi, w), w.spectrum(1.5) * w.spectrum(-2.0));
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  const auto rule = gridfr::gauss_legendre(7);
  ASSERT_EQ(rule.size(), 7u);
  // degree <= 13 exact on [0,1]
  for (int p = 0; p <= 13; ++p) {
    double s = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) s += rule.weights[k] * std::pow(rule.nodes[k], p);
    EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14) << "p=" << p;
  }
  EXPECT_THROW(gridfr::gauss_legendre(0), gridfr::ParameterError);
}

TEST(GaussLegendre, MappedInterval) {
  const auto rule = gridfr::gauss_legendre(20, -2.0, 3.0);
  double s = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) s += rule.weights[k] * std::exp(rule.nodes[k]);
  EXPECT_NEAR(s, std::exp(3.0) - std::exp(-2.0), 1e-12);
}

TEST(GaussianWindow, ClosedFormExamples) {
  const GaussianWindow w;
  const std::array<double, 2> center{0.5, 0.5};
  EXPECT_DOUBLE_EQ(gridfr::eval_window(center, w), 1.0);
  EXPECT_NEAR(w.value(0.0), 3.3546e-4, 1e-8);
  EXPECT_NEAR(std::abs(w.spectrum(0.0)), 0.31333, 1e-5);
  const complex one = std::sqrt(2.0 * std::numbers::pi) / 8.0 *
                      std::exp(-std::numbers::pi * std::numbers::pi / 32.0) *
                      std::polar(1.0, -std::numbers::pi);
  EXPECT_LT(std::abs(w.spectrum(1.0) - one), 1e-15);
}

TEST(GaussianWindow, SymmetricAndPositive) {
  const GaussianWindow w;
  for (int i = 0; i <= 100; ++i) {
    const double x = i / 100.0;
    EXPECT_GT(w.value(x), 0.0);
    EXPECT_NEAR(w.value(x), w.value(1.0 - x), 1e-15);
  }
}

TEST(GaussianWindow, SpectrumMagnitudeEvenAndDecreasing) {
  const GaussianWindow w;
  double prev = std::abs(w.spectrum(0.0));
  for (int i = 1; i <= 120; ++i) {
    const double xi = i / 10.0;
    const double m = std::abs(w.spectrum(xi));
    EXPECT_EQ(m, std::abs(w.spectrum(-xi)));
    EXPECT_LE(m, prev);
    prev = m;
  }
}

TEST(TruncationRadius, DegenerateToleranceClampsToOne) {
  EXPECT_EQ(gridfr::truncation_radius(0.125, 0.999999), 1);
  EXPECT_EQ(gridfr::truncation_radius(5.0, 0.5), 1);
}

TEST(TruncationRadius, ScalesInverselyWithSigma) {
  const int k1 = gridfr::truncation_radius(0.05, 1e-12);
  const int k2 = gridfr::truncation_radius(0.1, 1e-12);
  EXPECT_NEAR(double(k1) / k2, 2.0, 0.15);
}
