#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "gridfr/numerics.hpp"
#include "gridfr/raster.hpp"
#include "gridfr/rng.hpp"

using gridfr::Matrix;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, gridfr::CounterRng& rng) {
  Matrix a(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) a(i, j) = {rng.normal(), rng.normal()};
  return a;
}

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

TEST(PseudoInverse, IdentityAndRankDeficientDiagonal) {
  const Matrix id = Matrix::Identity(4, 4);
  EXPECT_LT(rel(gridfr::pseudo_inverse(id), id), 1e-15);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  const auto p = gridfr::pseudo_inverse_ex(d);
  EXPECT_EQ(p.rank, 1);
  EXPECT_NEAR(p.matrix(0, 0).real(), 0.5, 1e-15);
  EXPECT_EQ(std::abs(p.matrix(1, 1)), 0.0);
}

TEST(PseudoInverse, TallFullRank) {
  gridfr::CounterRng rng(1);
  const Matrix a = random_matrix(5, 3, rng);
  const Matrix b = gridfr::pseudo_inverse(a);
  EXPECT_LE((a * b * a - a).norm() / a.norm(), 1e-12);
}

// Moore-Penrose identities by direct multiplication, independent of the SVD path.
TEST(PseudoInverse, FourIdentitiesOnRandomMatrices) {
  gridfr::CounterRng rng(77);
  for (int t = 0; t < 50; ++t) {
    const auto r = static_cast<Eigen::Index>(1 + rng.next() % 64);
    const auto c = static_cast<Eigen::Index>(1 + rng.next() % 64);
    Matrix a = random_matrix(r, c, rng);
    if (t % 5 == 0 && std::min(r, c) > 2) {
      // Exact rank deficiency.
      const Eigen::Index k = std::min(r, c) / 2;
      a = random_matrix(r, k, rng) * random_matrix(k, c, rng);
    }
    const Matrix b = gridfr::pseudo_inverse(a);
    EXPECT_LE(rel(a * b * a, a), 1e-10) << r << "x" << c;
    EXPECT_LE(rel(b * a * b, b), 1e-10);
    EXPECT_LE(rel((a * b).adjoint(), a * b), 1e-10);
    EXPECT_LE(rel((b * a).adjoint(), b * a), 1e-10);
  }
}

TEST(PseudoInverse, ThresholdDropsSmallSingularValues) {
  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = 1.0;
  d(1, 1) = 1e-3;
  d(2, 2) = 1e-12;
  EXPECT_EQ(gridfr::pseudo_inverse_ex(d, 1e-6).rank, 2);
  EXPECT_EQ(gridfr::pseudo_inverse_ex(d, 0.0).rank, 3);
  EXPECT_THROW(gridfr::pseudo_inverse_ex(d, -1.0), gridfr::ParameterError);
  Matrix bad = d;
  bad(0, 1) = NAN;
  EXPECT_THROW(gridfr::pseudo_inverse(bad), gridfr::DomainError);
}

TEST(BandMask, Examples) {
  gridfr::CounterRng rng(3);
  const Matrix a = random_matrix(6, 6, rng);
  const Matrix d = gridfr::band_mask(a, gridfr::BandSpec(1));
  EXPECT_EQ(d, Matrix(a.diagonal().asDiagonal()));
  EXPECT_EQ(gridfr::band_mask(a, gridfr::BandSpec(6)), a);
  EXPECT_EQ(gridfr::band_mask(a, gridfr::BandSpec(9)), a);
  const Matrix ones = Matrix::Ones(3, 3);
  const Matrix tri = gridfr::band_mask(ones, gridfr::BandSpec(2));
  EXPECT_NEAR(tri.real().sum(), 7.0, 0.0);
  EXPECT_EQ(tri(0, 2), 0.0);
  EXPECT_THROW(gridfr::band_mask(Matrix::Ones(2, 3), gridfr::BandSpec(1)), gridfr::DimensionError);
  EXPECT_THROW(gridfr::BandSpec(0), gridfr::ParameterError);
}

TEST(BandMask, IdempotentAndMonotone) {
  gridfr::CounterRng rng(8);
  const Matrix a = random_matrix(12, 12, rng);
  for (int r = 1; r <= 12; ++r) {
    const Matrix m = gridfr::band_mask(a, gridfr::BandSpec(r));
    EXPECT_EQ(gridfr::band_mask(m, gridfr::BandSpec(r)), m);
    const Matrix next = gridfr::band_mask(a, gridfr::BandSpec(r + 1));
    for (Eigen::Index i = 0; i < 12; ++i)
      for (Eigen::Index j = 0; j < 12; ++j)
        if (m(i, j) != 0.0) {
          EXPECT_NE(next(i, j), 0.0);
        }
    // kept_fraction agrees with counting nonzeros.
    const double nz = static_cast<double>((m.array() != gridfr::complex(0.0, 0.0)).count());
    EXPECT_DOUBLE_EQ(nz / 144.0, gridfr::kept_fraction(12, r));
  }
}

TEST(KeptFraction, NineHundredBandFifteen) {
  const double f = gridfr::kept_fraction(900, 8);
  EXPECT_DOUBLE_EQ(f, (15.0 * 900 - 8 * 7) / (900.0 * 900.0));
  EXPECT_GT(f, 0.016);
  EXPECT_LT(f, 0.018);
  EXPECT_DOUBLE_EQ(gridfr::kept_fraction(5, 50), 1.0);
}

TEST(ConditionNumber, Examples) {
  EXPECT_DOUBLE_EQ(gridfr::condition_number(Matrix::Identity(3, 3)), 1.0);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 10.0;
  d(1, 1) = 1.0;
  EXPECT_NEAR(gridfr::condition_number(d), 10.0, 1e-14);
  const auto c = gridfr::condition_number_ex(d);
  EXPECT_NEAR(c.smallest_retained, 1.0, 1e-15);
  EXPECT_THROW(gridfr::condition_number(Matrix::Zero(3, 3)), gridfr::NumericalError);
}

TEST(ConditionNumber, PinvKappaMatchesIndependentSvdOfInverse) {
  gridfr::CounterRng rng(12);
  const Matrix a = random_matrix(20, 20, rng);
  const auto p = gridfr::pseudo_inverse_ex(a);
  EXPECT_NEAR(p.kappa() / gridfr::condition_number(p.matrix), 1.0, 1e-8);
}

TEST(DensityWeights, UniformRasterIsOne) {
  const gridfr::Raster r = gridfr::jittered_grid({6}, 0.0, 0);
  for (double w : gridfr::density_weights(r)) EXPECT_DOUBLE_EQ(w, 1.0);
  const gridfr::Raster r2 = gridfr::jittered_grid({3, 4}, 0.0, 0);
  for (double w : gridfr::density_weights(r2)) EXPECT_DOUBLE_EQ(w, 1.0);
}

TEST(DensityWeights, TrapezoidArithmetic) {
  gridfr::Raster r;
  r.dim = 1;
  r.points = {{0.0, 0.0}, {1.0, 0.0}, {3.0, 0.0}};
  const auto half = gridfr::density_weights(r, gridfr::EndRule::half_gap);
  EXPECT_DOUBLE_EQ(half[0], 0.5);
  EXPECT_DOUBLE_EQ(half[1], 1.5);
  EXPECT_DOUBLE_EQ(half[2], 1.0);
  const auto full = gridfr::density_weights(r);
  EXPECT_DOUBLE_EQ(full[0], 1.0);
  EXPECT_DOUBLE_EQ(full[1], 1.5);
  EXPECT_DOUBLE_EQ(full[2], 2.0);
  // Input order is preserved.
  r.points = {{3.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}};
  const auto perm = gridfr::density_weights(r, gridfr::EndRule::half_gap);
  EXPECT_DOUBLE_EQ(perm[0], 1.0);
  EXPECT_DOUBLE_EQ(perm[1], 0.5);
  EXPECT_DOUBLE_EQ(perm[2], 1.5);
}

TEST(DensityWeights, JitterQuarterBounds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (double w : gridfr::density_weights(gridfr::jittered_grid({16}, 0.25, seed))) {
      EXPECT_GE(w, 0.5);
      EXPECT_LE(w, 1.5);
    }
    for (double w : gridfr::density_weights(gridfr::jittered_grid({5, 5}, 0.25, seed))) {
      EXPECT_GE(w, 0.25);
      EXPECT_LE(w, 2.25);
    }
  }
}

TEST(DensityWeights, UnstructuredCellShare) {
  const gridfr::Raster r = gridfr::asterisk(4, 2, 1.0);
  const auto w = gridfr::density_weights(r);
  ASSERT_EQ(w.size(), r.size());
  double total = 0.0;
  for (double x : w) total += x;
  // Weights sum to the number of occupied unit cells.
  std::set<std::pair<long long, long long>> cells;
  for (const auto& p : r.points) cells.insert({std::llround(p[0]), std::llround(p[1])});
  EXPECT_NEAR(total, static_cast<double>(cells.size()), 1e-12);
  EXPECT_THROW(gridfr::density_weights(gridfr::Raster{}), gridfr::ParameterError);
}

TEST(MagnitudeCsv, OneRowPerMatrixRow) {
  Matrix a(2, 3);
  a << gridfr::complex(3, 4), 0.0, -1.0, 2.0, gridfr::complex(0, -0.5), 7.0;
  std::ostringstream os;
  gridfr::write_magnitude_csv(os, a);
  EXPECT_EQ(os.str(), "5,0,1\n2,0.5,7\n");
}
