#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "juntakit/continuous.hpp"
#include "juntakit/errors.hpp"
#include "juntakit/scenario.hpp"
#include "oracles.hpp"

using namespace juntakit;

namespace {

const double kPi = std::acos(-1.0);

LinePtr gaussian(std::size_t nodes, double extent = 50.0) {
  LineOptions o;
  o.nodes = nodes;
  o.extent = extent;
  return build_line_model(gaussian_potential(), o);
}

}  // namespace

TEST(Continuous, GaussianGridIsAProbabilityChain) {
  const auto m = gaussian(257);
  double s = 0.0;
  for (double w : m->weights()) s += w;
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_LT(m->detailed_balance_error(), 1e-13);
  EXPECT_LT(m->truncated_mass(), 1e-10);
  EXPECT_NEAR(m->density(0.0), oracle::normal_density(0.0), 1e-12);
  EXPECT_NEAR(m->density(1.3), oracle::normal_density(1.3), 1e-12);
  EXPECT_EQ(m->fast_path(), FastPath::ExactGaussianHermite);
  EXPECT_EQ(build_line_model(boltzmann_potential(4.0))->fast_path(), FastPath::GridOnly);
}

TEST(Continuous, GeneratorApproximatesDiffusion) {
  // Second-order scheme: halving h divides the error by about four.
  const double coarse = generator_consistency_error(*gaussian(257));
  const double fine = generator_consistency_error(*gaussian(513));
  EXPECT_LT(coarse, 0.05);
  EXPECT_LT(fine, coarse / 3.0);
}

TEST(Continuous, OrnsteinUhlenbeckEigenvalues) {
  const auto m = gaussian(257);
  const auto& ev = m->spectrum().eigenvalues;
  for (Eigen::Index k = 0; k <= 12; ++k) EXPECT_NEAR(ev(k), static_cast<double>(k), 5e-4) << k;
}

TEST(Continuous, GridPathAgreesWithHermitePath) {
  // Orthonormal He_k/√k! so that the weighted L² gap is an absolute error.
  const auto m = gaussian(257);
  const double t = 0.3;
  for (std::size_t k = 0; k <= 12; ++k) {
    const double norm = std::sqrt(std::tgamma(static_cast<double>(k) + 1.0));
    auto he = [k, norm](double x) { return oracle::hermite(k, x) / norm; };
    const auto grid = evolve_line(*m, he, t);
    std::vector<double> f(m->size());
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = he(m->nodes()[j]);
    const auto fast = hermite_evolve(*m, f, t, 12);
    double err = 0.0, err_exact = 0.0;
    for (std::size_t j = 0; j < m->size(); ++j) {
      const double exact = std::exp(-static_cast<double>(k) * t) * f[j];
      err += m->weights()[j] * (grid[j] - fast[j]) * (grid[j] - fast[j]);
      err_exact += m->weights()[j] * (grid[j] - exact) * (grid[j] - exact);
    }
    EXPECT_LT(std::sqrt(err), 2e-6) << k;
    EXPECT_LT(std::sqrt(err_exact), 2e-6) << k;
  }
}

TEST(Continuous, HermiteFastPathDecaysEachDegree) {
  const auto m = gaussian(257);
  std::vector<double> f(m->size());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = oracle::hermite(3, m->nodes()[j]);
  const auto g = hermite_evolve(*m, f, 0.5, 12);
  for (std::size_t j = 0; j < f.size(); ++j) EXPECT_NEAR(g[j], std::exp(-1.5) * f[j], 1e-6 * (1 + std::abs(f[j])));
  EXPECT_THROW(hermite_evolve(*build_line_model(boltzmann_potential(4.0)), std::vector<double>(
                                  build_line_model(boltzmann_potential(4.0))->size(), 1.0), 0.1, 4),
               StructureError);
}

TEST(Continuous, GeometricInfluenceOfLinearAndSquare) {
  const ProductLine p(gaussian(201, 30.0), 2);
  EXPECT_NEAR(geometric_influence_analytic(p, [](std::span<const double>) { return 1.0; }), 1.0, 1e-9);
  // E|2X| = 2 √(2/π) for a standard normal.
  EXPECT_NEAR(geometric_influence_analytic(p, [](std::span<const double> x) { return 2.0 * x[0]; }),
              2.0 * std::sqrt(2.0 / kPi), 1e-3);
  const auto f = p.tabulate([](std::span<const double> x) { return x[1]; });
  EXPECT_NEAR(geometric_influence_fn(p, f, 1), 1.0, 1e-9);
  EXPECT_NEAR(geometric_influence_fn(p, f, 0), 0.0, 1e-15);
}

TEST(Continuous, HalfSpaceInfluenceIsTheDensity) {
  const ProductLine p(gaussian(512, 30.0), 2);
  const auto a = make_grid_set(p, [](std::span<const double> x) { return x[0] <= 0.0; }, Monotonicity::Decreasing);
  EXPECT_NEAR(geometric_influence_set(p, a, 0), 1.0 / std::sqrt(2.0 * kPi), 1e-6);
  EXPECT_NEAR(geometric_influence_set(p, a, 1), 0.0, 1e-12);
  EXPECT_NEAR(set_measure(p, a), 0.5, 1e-12);
}

TEST(Continuous, MonotonicityIsVerified) {
  const ProductLine p(gaussian(41, 30.0), 2);
  EXPECT_THROW(make_grid_set(p, [](std::span<const double> x) { return x[0] <= 0.0; }, Monotonicity::Increasing),
               ContractError);
  const auto band = make_grid_set(p, [](std::span<const double> x) { return std::abs(x[0]) < 1.0; },
                                  Monotonicity::None);
  EXPECT_FALSE(verify_monotone(p, GridSet{band.members, Monotonicity::Decreasing}));
}

TEST(Continuous, BoundaryOfQuadrantMatchesInfluences) {
  const ProductLine p(gaussian(512, 30.0), 2, std::size_t{1} << 20);
  const auto a =
      make_grid_set(p, [](std::span<const double> x) { return x[0] <= 0.3 && x[1] <= -0.2; }, Monotonicity::Decreasing);
  const double sum = geometric_influence_set(p, a, 0) + geometric_influence_set(p, a, 1);
  EXPECT_NEAR(uniform_enlargement_boundary(p, a).value, sum, 1e-3);
}

TEST(Continuous, GradientInequalitiesOnSmoothFunctions) {
  const ProductLine p(gaussian(61, 30.0), 2);
  std::vector<std::size_t> T = {1};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto f = random_smooth_function(p, seed);
    for (double t : {0.05, 0.3, 1.0}) {
      EXPECT_TRUE(commutation_check(p, f, t).strict.pass) << seed << " " << t;
      const auto rp = reverse_poincare_check(p, f, t);
      EXPECT_TRUE(rp.global.pass);
      EXPECT_TRUE(rp.pointwise.pass);
      EXPECT_TRUE(sup_gradient_check(p, f, t).pass);
      EXPECT_TRUE(ledoux_l1_check(p, f, t).pass);
      EXPECT_TRUE(gradient_l1_decay_check(p, f, t).pass);
      EXPECT_TRUE(averaging_error_check(p, 1.0, f, t, T).pass);
    }
  }
}

TEST(Continuous, BoltzmannCommutationUsesZeroCurvature) {
  const auto m = boltzmann_model(4.0, 61, 30.0);
  EXPECT_DOUBLE_EQ(m->kappa(), 0.0);
  const ProductLine p(m, 2);
  const auto f = random_smooth_function(p, 3);
  const auto r = commutation_check(p, f, 0.2);
  EXPECT_TRUE(r.strict.pass);
  EXPECT_NEAR(r.slack_plus, r.slack_minus, 1e-15);
}

TEST(Continuous, PotentialErrors) {
  EXPECT_THROW(boltzmann_potential(1.5), DomainError);
  Potential wrong = boltzmann_potential(4.0);
  wrong.kappa = 1.0;  // v'' vanishes at the origin
  EXPECT_THROW(build_line_model(wrong), ContractError);
  LineOptions narrow;
  narrow.extent = 3.0;
  EXPECT_THROW(build_line_model(gaussian_potential(), narrow), ExtentError);
  EXPECT_THROW(ProductLine(gaussian(65, 30.0), 3), CapacityError);
}

TEST(Continuous, ParsePotential) {
  EXPECT_EQ(parse_potential("gaussian").name, gaussian_potential().name);
  EXPECT_DOUBLE_EQ(parse_potential("boltzmann:2").kappa, 2.0);
  EXPECT_DOUBLE_EQ(parse_potential("boltzmann:3").kappa, 0.0);
  EXPECT_DOUBLE_EQ(parse_potential("quartic:1,0.5").kappa, -1.0);
  EXPECT_THROW(parse_potential("cauchy"), Error);
}

TEST(Continuous, TabulatedPotentialMatchesGaussian) {
  const std::string path = ::testing::TempDir() + "gauss_table.txt";
  {
    std::ofstream out(path);
    out.precision(17);
    for (int i = -400; i <= 400; ++i) {
      const double x = i * 0.025;
      out << x << " " << 0.5 * x * x << " " << x << " " << 1.0 << "\n";
    }
  }
  LineOptions o;
  o.nodes = 129;
  o.extent = 30.0;
  const auto tab = build_line_model(tabulated_potential(path), o);
  const auto ref = build_line_model(gaussian_potential(), o);
  ASSERT_EQ(tab->size(), ref->size());
  for (std::size_t j = 0; j < tab->size(); ++j) EXPECT_NEAR(tab->weights()[j], ref->weights()[j], 1e-8);
}

TEST(Continuous, EffectiveRho) {
  std::string source;
  EXPECT_DOUBLE_EQ(effective_rho(*gaussian(61, 30.0), 0.0, &source), 1.0);
  EXPECT_EQ(source, "strict-convexity");
  const auto b = boltzmann_model(4.0, 61, 30.0);
  EXPECT_THROW(effective_rho(*b, 0.0), ContractError);
  EXPECT_DOUBLE_EQ(effective_rho(*b, 0.4, &source), 0.4);
  EXPECT_EQ(source, "supplied");
}

TEST(Continuous, MollifierPreservesConstants) {
  const ProductLine p(gaussian(31, 30.0), 2);
  const std::vector<double> c(p.size(), 3.0);
  for (double s : {0.0, 0.5, 1.0})
    for (double v : mollify(p, c, s)) EXPECT_NEAR(v, 3.0, 1e-14);
}

TEST(Continuous, ExtractionOfARidge) {
  const ProductLine p(gaussian(61, 30.0), 2);
  const auto f = p.tabulate([](std::span<const double> x) { return std::tanh(x[0]) + 1e-4 * std::sin(x[1]); });
  const auto [g, cert] = continuous_extract_junta(p, 0.0, f, 0.1);
  EXPECT_LE(cert.measured_error, 0.1);
  EXPECT_EQ(cert.kept_set.front(), 0u);
  const auto h = p.tabulate([](std::span<const double> x) { return std::tanh(x[0]); });
  EXPECT_EQ(continuous_extract_junta(p, 0.0, h, 0.1).second.kept_set, (std::vector<std::size_t>{0}));
}

TEST(Continuous, MonotoneHalfSpaceJunta) {
  const ProductLine p(gaussian(128, 30.0), 2);
  const auto a = make_grid_set(p, [](std::span<const double> x) { return x[0] <= 0.4; }, Monotonicity::Decreasing);
  const auto mj = monotone_set_junta(p, a, 0.1);
  EXPECT_LE(mj.symmetric_difference, 0.1);
  EXPECT_EQ(mj.certificate.kept_set, (std::vector<std::size_t>{0}));
}
