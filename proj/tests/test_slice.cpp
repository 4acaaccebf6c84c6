#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "juntakit/errors.hpp"
#include "juntakit/influence.hpp"
#include "juntakit/semigroup.hpp"
#include "juntakit/slice.hpp"
#include "oracles.hpp"

using namespace juntakit;

TEST(Slice, TopSetCountsAndAdmissibility) {
  for (std::size_t n = 2; n <= 8; ++n)
    for (std::size_t k = 0; k <= n; ++k) EXPECT_EQ(top_sets(n, k).size(), binomial(n, k)) << n << "," << k;
  EXPECT_TRUE(is_top_set(TopSet{{2, 4}}, 5, 2));
  EXPECT_FALSE(is_top_set(TopSet{{1}}, 5, 2));
  EXPECT_FALSE(is_top_set(TopSet{{2, 3}}, 5, 2));
  EXPECT_FALSE(is_top_set(TopSet{{2, 4, 6}}, 6, 2));  // degree above min(k, n-k)
}

TEST(Slice, EigenvalueFormula) {
  EXPECT_DOUBLE_EQ(eigenvalue_of_degree(0, 6), 0.0);
  EXPECT_NEAR(eigenvalue_of_degree(1, 6), 2.0 / 5.0, 1e-15);
  EXPECT_NEAR(eigenvalue_of_degree(3, 6), 2.0 * 3.0 * 4.0 / 30.0, 1e-15);
}

TEST(Slice, SpectrumMatchesDegreeFormula) {
  for (std::size_t n = 2; n <= 7; ++n)
    for (std::size_t k = 1; k < n; ++k) {
      const auto gen = generator(build_slice(n, k));
      const auto& ev = gen.spectrum().eigenvalues;
      const auto pred = predicted_slice_spectrum(n, k);
      ASSERT_EQ(static_cast<std::size_t>(ev.size()), pred.size());
      for (std::size_t i = 0; i < pred.size(); ++i) EXPECT_NEAR(ev(static_cast<Eigen::Index>(i)), pred[i], 1e-8);
    }
}

TEST(Slice, BasisIsOrthogonalEigenbasis) {
  for (auto [n, k] : {std::pair<std::size_t, std::size_t>{4, 2}, {5, 2}, {6, 3}, {6, 2}}) {
    for (auto method : {BasisMethod::Explicit, BasisMethod::JointDiagonalization}) {
      const auto basis = build_basis(n, k, method);
      EXPECT_EQ(validate_basis(basis), "");
      ASSERT_EQ(basis.elements.size(), binomial(n, k));
      const auto gen = generator(basis.space);
      for (std::size_t a = 0; a < basis.elements.size(); ++a) {
        const auto& e = basis.elements[a];
        EXPECT_NEAR(inner_product(e.vector, e.vector), e.squared_norm, 1e-12);
        for (std::size_t b = a + 1; b < basis.elements.size(); ++b)
          EXPECT_NEAR(inner_product(e.vector, basis.elements[b].vector), 0.0, 1e-9);
        const auto le = gen.apply(e.vector);
        for (std::size_t x = 0; x < le.size(); ++x) EXPECT_NEAR(le[x], -e.eigenvalue * e.vector[x], 1e-9);
        EXPECT_NEAR(e.eigenvalue, eigenvalue_of(e.top, n), 1e-12);
      }
    }
  }
}

TEST(Slice, ExpansionRoundTripAndParseval) {
  const auto basis = build_basis(6, 3);
  const FunctionTable f(basis.space, oracle::random_values(basis.space->size(), 31));
  const auto c = fourier_expand(basis, f);
  const auto g = fourier_synthesize(basis, c);
  for (std::size_t x = 0; x < f.size(); ++x) EXPECT_NEAR(g[x], f[x], 1e-12);
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * c[i] * basis.elements[i].squared_norm;
  EXPECT_NEAR(s, inner_product(f, f), 1e-9);
}

TEST(Slice, PrefixInfluenceIdentity) {
  for (auto [n, k] : {std::pair<std::size_t, std::size_t>{4, 2}, {5, 2}, {6, 3}}) {
    const auto basis = build_basis(n, k);
    for (int r = 0; r < 5; ++r) {
      const auto v = oracle::random_values(basis.space->size(), 40 + r);
      const FunctionTable f(basis.space, v);
      for (std::size_t pre = 2; pre <= n; ++pre) {
        const auto id = influence_identity_check(basis, f, pre);
        // Combinatorial side recomputed from raw swaps.
        double direct = 0.0;
        const auto& s = *basis.space;
        for (std::size_t i = 0; i < pre; ++i)
          for (std::size_t j = i + 1; j < pre; ++j)
            for (std::size_t x = 0; x < s.size(); ++x) {
              const double d = v[s.index_of(oracle::swapped(s.coordinates(x), i, j))] - v[x];
              direct += s.measure()[x] * 0.5 * d * d;
            }
        EXPECT_NEAR(id.combinatorial, direct / static_cast<double>(pre), 1e-12);
        EXPECT_LT(id.error, 1e-8);
      }
    }
  }
}

TEST(Slice, LowDegreeDecay) {
  const auto basis = build_basis(5, 2);
  const auto gen = generator(basis.space);
  for (int r = 0; r < 5; ++r) {
    const FunctionTable f(basis.space, oracle::random_values(basis.space->size(), 50 + r));
    for (std::size_t m : {1u, 2u, 3u}) {
      const auto rep = low_degree_decay_check(basis, gen, f, 0.3, m);
      EXPECT_TRUE(rep.pass);
      EXPECT_NEAR(rep.lhs_basis, rep.lhs_direct, 1e-10);
    }
  }
  const auto c = low_degree_decay_check(basis, gen, FunctionTable::constant(basis.space, 2.0), 0.3, 2);
  EXPECT_NEAR(c.lhs_basis, 0.0, 1e-14);
  EXPECT_NEAR(c.rhs, 0.0, 1e-14);
}

TEST(Slice, LowDegreeDecayVanishesOnLastCoordinates) {
  // χ_B with B inside the last m coordinates is invariant under the prefix swaps.
  const std::size_t n = 6, m = 3;
  const auto basis = build_basis(n, 3);
  const auto gen = generator(basis.space);
  for (const auto& e : basis.elements) {
    if (e.top.degree() == 0 ||
        !std::all_of(e.top.elements.begin(), e.top.elements.end(), [](std::size_t b) { return b > n - m; }))
      continue;
    EXPECT_NEAR(low_degree_decay_check(basis, gen, e.vector, 1e-12, m).lhs_basis, 0.0, 1e-12);
  }
}

TEST(Slice, RescaledSemigroup) {
  const auto s = build_slice(5, 2);
  const auto gen = generator(s);
  const FunctionTable f(s, oracle::random_values(s->size(), 60));
  const auto a = rescaled_evolve(gen, f, 0.4);
  const auto b = gen.evolve(f, 0.4 * 4.0 / 2.0);
  for (std::size_t x = 0; x < f.size(); ++x) EXPECT_NEAR(a[x], b[x], 1e-13);
}

TEST(Slice, HypercontractiveStep) {
  const auto s = build_slice(6, 3);
  const auto gen = generator(s);
  const double rho = log_sobolev_constant(gen, LogSobolevMethod::NumericSearch);
  for (int r = 0; r < 10; ++r) {
    const FunctionTable f(s, oracle::random_values(s->size(), 70 + r));
    EXPECT_TRUE(slice_hyper_step_check(gen, rho, f, 0.05 + 0.1 * r, 1e-9).pass);
  }
}

TEST(Slice, LeeYauOmega) {
  EXPECT_DOUBLE_EQ(lee_yau_report(6, 3, 1.0).omega, 4.0);
  EXPECT_DOUBLE_EQ(lee_yau_report(4, 2, 1.0).omega, 4.0);  // 16 / (2·2)
  EXPECT_DOUBLE_EQ(lee_yau_report(8, 4, 1.0).omega, lee_yau_report(12, 6, 1.0).omega);
  EXPECT_NEAR(lee_yau_report(6, 3, 0.5).ratio, 0.5 * 6.0 * std::log(4.0), 1e-14);
}

TEST(Slice, ExtractionOfADictator) {
  const auto s = build_slice(6, 3);
  const auto gen = generator(s);
  const auto f = FunctionTable::tabulate(s, [](std::span<const int> c) { return 2.0 * c[0] - 1.0; });
  const auto ex = slice_extract_junta(gen, log_sobolev_constant(gen, LogSobolevMethod::NumericSearch), f, 0.2);
  EXPECT_LE(ex.certificate.measured_error, 0.2);
  EXPECT_TRUE(ex.bound_holds);
  EXPECT_EQ(ex.certificate.kept_kind, "vertices");
}

TEST(Slice, ExportHasOneRowPerElement) {
  const auto basis = build_basis(4, 2);
  std::istringstream in(export_basis(basis));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++rows;
  EXPECT_GE(rows, basis.elements.size());
  EXPECT_LE(rows, basis.elements.size() + 1);
}

TEST(Slice, NonSliceIsRejected) {
  EXPECT_THROW(build_basis(build_biased_cube(3, 0.5)), StructureError);
}
