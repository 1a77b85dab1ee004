#include "heavyica/error.hpp"
#include "heavyica/sources.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace heavyica;

namespace {

double mean_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST(Sources, GaussianNormalizedToUnitFirstAbsMoment) {
  const SourceSpec g{SourceFamily::gaussian};
  EXPECT_NEAR((*SourceSpec{SourceFamily::gaussian, 2.0, 1.0, false}.first_abs_moment()), std::sqrt(2.0 / std::numbers::pi),
              1e-15);
  const std::vector<SourceSpec> specs{g};
  const auto S = sample_sources(specs, 400000, 1);
  EXPECT_NEAR(mean_abs(column(S, 0)), 1.0, 0.005);
}

TEST(Sources, UniformNormalizedHasHalfWidthTwo) {
  const std::vector<SourceSpec> specs{{SourceFamily::uniform}};
  const auto S = sample_sources(specs, 200000, 2);
  EXPECT_LE(S.data.cwiseAbs().maxCoeff(), 2.0);
  EXPECT_GT(S.data.cwiseAbs().maxCoeff(), 1.999);
  EXPECT_NEAR(mean_abs(column(S, 0)), 1.0, 0.01);
}

TEST(Sources, ClosedFormFirstAbsMoments) {
  EXPECT_DOUBLE_EQ((*SourceSpec{SourceFamily::pareto, 2.0, 1.0, false}.first_abs_moment()), 2.0);
  EXPECT_DOUBLE_EQ((*SourceSpec{SourceFamily::uniform, 2.0, 3.0, false}.first_abs_moment()), 1.5);
  // Student-t with 3 dof: E|T| = 2 sqrt(3) / pi.
  EXPECT_NEAR((*SourceSpec{SourceFamily::student_t, 3.0, 1.0, false}.first_abs_moment()), 2.0 * std::sqrt(3.0) / std::numbers::pi,
              1e-14);
  EXPECT_FALSE(SourceSpec{SourceFamily::cauchy}.first_abs_moment());
  EXPECT_FALSE((SourceSpec{SourceFamily::pareto, 1.0, 1.0, false}.first_abs_moment()));
}

TEST(Sources, NormalizedPareto) {
  const std::vector<SourceSpec> specs{{SourceFamily::pareto, 3.0}};
  const auto S = sample_sources(specs, 400000, 3);
  EXPECT_NEAR(mean_abs(column(S, 0)), 1.0, 0.01);
}

TEST(Sources, InvalidSpecsRejected) {
  EXPECT_THROW((SourceSpec{SourceFamily::pareto, -1.0}.validate()), Error);
  EXPECT_THROW((SourceSpec{SourceFamily::student_t, 0.0}.validate()), Error);
  EXPECT_THROW((SourceSpec{SourceFamily::cauchy, 1.0, 1.0, true}.validate()), Error);
  EXPECT_THROW((SourceSpec{SourceFamily::gaussian, 1.0, 0.0}.validate()), Error);
  EXPECT_THROW(parse_source_family("levy"), Error);
  EXPECT_EQ(parse_source_family("student_t"), SourceFamily::student_t);
}

TEST(Sources, DeterministicGivenSeed) {
  const std::vector<SourceSpec> specs{{SourceFamily::pareto, 1.5}, {SourceFamily::student_t, 3.0}};
  const auto a = sample_sources(specs, 5000, 42);
  const auto b = sample_sources(specs, 5000, 42);
  EXPECT_TRUE((a.data.array() == b.data.array()).all());
  const auto c = sample_sources(specs, 5000, 43);
  EXPECT_FALSE((a.data.array() == c.data.array()).all());
}

TEST(Sources, RowsDependOnlyOnSeedAndIndex) {
  const std::vector<SourceSpec> specs{{SourceFamily::uniform}};
  const auto small = sample_sources(specs, 100, 9);
  const auto large = sample_sources(specs, 70000, 9);
  EXPECT_TRUE((small.data.array() == large.data.topRows(100).array()).all());
}

TEST(Mix, IdentityIsExact) {
  const std::vector<SourceSpec> specs{{SourceFamily::uniform}, {SourceFamily::gaussian}};
  const auto S = sample_sources(specs, 1000, 5);
  const auto model = make_model(specs, Eigen::MatrixXd::Identity(2, 2));
  EXPECT_TRUE((mix(model, S).data.array() == S.data.array()).all());
}

TEST(Mix, DiagonalExample) {
  const std::vector<SourceSpec> specs{{SourceFamily::uniform}, {SourceFamily::uniform}};
  Eigen::MatrixXd A(2, 2);
  A << 2, 0, 0, 1;
  const auto model = make_model(specs, A);
  SampleMatrix s;
  s.data = Eigen::MatrixXd::Ones(1, 2);
  const auto x = mix(model, s);
  EXPECT_DOUBLE_EQ(x.data(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(x.data(0, 1), 1.0);
}

TEST(Mix, RotationPreservesNorm) {
  const std::vector<SourceSpec> specs(3, SourceSpec{SourceFamily::gaussian});
  const auto model = make_model(specs, random_orthogonal(3, 17));
  SampleMatrix s;
  s.data = Eigen::RowVector3d(0.6, 0.0, 0.8);
  EXPECT_NEAR(mix(model, s).data.row(0).norm(), 1.0, 1e-14);
}

TEST(Mix, DimensionMismatch) {
  const std::vector<SourceSpec> specs(2, SourceSpec{SourceFamily::gaussian});
  const auto model = make_model(specs, Eigen::MatrixXd::Identity(2, 2));
  SampleMatrix s;
  s.data = Eigen::MatrixXd::Ones(3, 3);
  EXPECT_THROW(mix(model, s), Error);
}

TEST(Model, BoundsAndUnitColumns) {
  const auto A = random_unit_column_matrix(3, 5.0, 8);
  for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(A.col(j).norm(), 1.0, 1e-14);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  EXPECT_LE(svd.singularValues()(0) / svd.singularValues()(2), 5.0);
  const std::vector<SourceSpec> specs(3, SourceSpec{SourceFamily::gaussian});
  auto model = make_model(specs, A);
  EXPECT_NO_THROW(model.validate());
  model.s_M = 0.5 * model.s_M;
  EXPECT_THROW(model.validate(), Error);
  const auto Q = random_orthogonal(4, 1);
  EXPECT_TRUE(make_model(std::vector<SourceSpec>(4, SourceSpec{}), Q).is_unitary());
}

TEST(Symmetrize, PairDifferences) {
  SampleMatrix s;
  s.data.resize(4, 2);
  s.data << 1, 2, 1, 2, 5, 1, 2, 3;
  const auto out = symmetrize(s);
  ASSERT_EQ(out.rows(), 2);
  EXPECT_EQ(out.data.row(0), Eigen::RowVector2d(0, 0));
  EXPECT_EQ(out.data.row(1), Eigen::RowVector2d(3, -2));
  s.data.conservativeResize(3, 2);
  EXPECT_THROW(symmetrize(s), Error);
}

TEST(Symmetrize, DoublesCum4AndBoundsFourthMoment) {
  // One-sided Pareto(5): finite eighth moment below 5, so the cum4 standard
  // error is meaningful.
  const std::vector<SourceSpec> specs{{SourceFamily::pareto, 5.0, 1.0, false, false}};
  const auto S = sample_sources(specs, 2000000, 21);
  const auto Y = symmetrize(S);
  const auto x = column(S, 0), y = column(Y, 0);
  const Cum4Estimate cx = cum4_with_error(x), cy = cum4_with_error(y);
  EXPECT_LE(std::abs(cy.value - 2.0 * cx.value), 3.0 * std::hypot(cy.std_error, 2.0 * cx.std_error));
  EXPECT_LE(raw_moment(y, 4), 16.0 * raw_moment(x, 4));
}

TEST(Symmetrize, OddMomentsVanish) {
  const std::vector<SourceSpec> specs{{SourceFamily::pareto, 5.0, 1.0, false, false}};
  const auto y = column(symmetrize(sample_sources(specs, 400000, 4)), 0);
  const double n = static_cast<double>(y.size());
  for (int k : {1, 3}) {
    const double m = raw_moment(y, k);
    const double se = std::sqrt((raw_moment(y, 2 * k) - m * m) / n);
    EXPECT_LE(std::abs(m), 3.0 * se) << "moment " << k;
  }
}

TEST(Cum4, ConstantIsZero) {
  const std::vector<double> c(100, 3.25);
  EXPECT_DOUBLE_EQ(cum4(c), 0.0);
}

TEST(Cum4, GaussianNearZero) {
  const std::vector<SourceSpec> specs{{SourceFamily::gaussian, 2.0, 1.0, false}};
  const auto est = cum4_with_error(column(sample_sources(specs, 1000000, 6), 0));
  EXPECT_LE(std::abs(est.value), 4.0 * est.std_error);
  EXPECT_LT(std::abs(est.value), 0.03);
}

TEST(Cum4, UniformClosedForm) {
  const std::vector<SourceSpec> specs{{SourceFamily::uniform, 2.0, 1.0, false}};
  const auto v = column(sample_sources(specs, 1000000, 7), 0);
  EXPECT_NEAR(cum4(v), -2.0 / 15.0, 0.002);
}

TEST(Cum4, FullFormulaMatchesCentralForm) {
  // m4 - 4 m3 m1 - 3 m2^2 + 12 m2 m1^2 - 6 m1^4 with raw moments.
  const std::vector<double> v{0.3, 1.7, -2.2, 4.1, 0.9, 0.0, -0.4};
  const double m1 = raw_moment(v, 1), m2 = raw_moment(v, 2), m3 = raw_moment(v, 3), m4 = raw_moment(v, 4);
  const double full = m4 - 4 * m3 * m1 - 3 * m2 * m2 + 12 * m2 * m1 * m1 - 6 * m1 * m1 * m1 * m1;
  EXPECT_NEAR(cum4(v), full, 1e-12);
  EXPECT_THROW(cum4(std::vector<double>{1, 2, 3}), Error);
}

TEST(Cum4, AdditiveOverIndependentSums) {
  const std::vector<SourceSpec> specs{{SourceFamily::uniform, 2.0, 1.0, false}, {SourceFamily::pareto, 6.0, 1.0, false}};
  const auto S = sample_sources(specs, 2000000, 12);
  const auto u = column(S, 0), v = column(S, 1);
  std::vector<double> w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = u[i] + v[i];
  const auto cu = cum4_with_error(u), cv = cum4_with_error(v), cw = cum4_with_error(w);
  const double se = std::sqrt(cu.std_error * cu.std_error + cv.std_error * cv.std_error + cw.std_error * cw.std_error);
  EXPECT_LE(std::abs(cw.value - cu.value - cv.value), 4.0 * se);
}
