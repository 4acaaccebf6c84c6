// Acceptance suite: one line per criterion with its measured figure, the
// threshold and the elapsed time against the time limit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "juntakit/continuous.hpp"
#include "juntakit/influence.hpp"
#include "juntakit/junta.hpp"
#include "juntakit/scenario.hpp"
#include "juntakit/semigroup.hpp"
#include "juntakit/slice.hpp"

using namespace juntakit;
namespace fs = std::filesystem;

namespace {

const double kPi = std::acos(-1.0);

struct Outcome {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double time_limit;  // seconds
  std::function<Outcome()> run;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

double sample(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

FunctionTable random_table(const SpacePtr& s, std::mt19937_64& rng) {
  std::vector<double> v(s->size());
  for (auto& x : v) x = sample(rng, -1.0, 1.0);
  return FunctionTable(s, std::move(v));
}

// ---------------------------------------------------------------------------

Outcome product_gap() {
  double worst = 0.0;
  for (double p : {0.3, 0.5, 0.7})
    for (std::size_t n = 1; n <= 8; ++n)
      worst = std::max(worst, std::abs(spectral_gap(generator(build_biased_cube(n, p))) - 1.0));
  std::mt19937_64 rng(101);
  for (int k = 0; k < 20; ++k) {
    std::vector<std::vector<double>> factors(1 + k % 4);
    for (auto& f : factors) {
      f.resize(2 + static_cast<std::size_t>(sample(rng, 0.0, 4.0)));
      double s = 0.0;
      for (auto& w : f) s += (w = sample(rng, 0.05, 1.0));
      for (auto& w : f) w /= s;
    }
    worst = std::max(worst, std::abs(spectral_gap(generator(build_product(factors))) - 1.0));
  }
  return {worst <= 1e-9, "max |gap - 1| = " + num(worst) + " (limit 1e-9) over 24 cubes and 20 products"};
}

Outcome torus_gap() {
  double worst = 0.0, m2 = 0.0;
  for (std::size_t m = 2; m <= 8; ++m) {
    const double gap = spectral_gap(generator(build_torus(1, m)));
    worst = std::max(worst, std::abs(gap - (1.0 - std::cos(2.0 * kPi / static_cast<double>(m))) / 2.0));
    if (m == 2) m2 = std::abs(gap - 1.0);
  }
  // "Exactly" for m = 2 is read as agreement to a few units in the last place.
  const bool ok = worst <= 1e-9 && m2 <= 4.0 * std::numeric_limits<double>::epsilon();
  return {ok, "max formula error = " + num(worst) + " (limit 1e-9); |gap(m=2) - 1| = " + num(m2) +
                  " (limit 4 ulp)"};
}

Outcome two_point() {
  double worst = 0.0, half = 0.0;
  for (double p : {0.5, 0.7, 0.9}) {
    const auto gen = generator(build_biased_cube(1, p));
    const double exact = log_sobolev_constant(gen, LogSobolevMethod::ExactTwoPoint);
    const double numeric = log_sobolev_constant(gen, LogSobolevMethod::NumericSearch);
    worst = std::max(worst, std::abs(exact - numeric));
    if (p == 0.5) half = std::max(std::abs(exact - 1.0), std::abs(numeric - 1.0));
  }
  return {worst <= 1e-4 && half <= 1e-6,
          "max |exact - numeric| = " + num(worst) + " (limit 1e-4); p=0.5 deviation from 1 = " + num(half) +
              " (limit 1e-6)"};
}

Outcome hyper_suite() {
  std::mt19937_64 rng(404);
  double worst = std::numeric_limits<double>::infinity();
  std::size_t violations = 0, total = 0;
  auto family = [&](const std::vector<SpacePtr>& spaces) {
    std::vector<Generator> gens;
    std::vector<double> rhos;
    for (const auto& s : spaces) {
      gens.push_back(generator(s));
      const bool two_point = s->kind() == SpaceKind::BiasedCube;
      rhos.push_back(log_sobolev_constant(gens.back(), two_point ? LogSobolevMethod::ExactTwoPoint
                                                                 : LogSobolevMethod::NumericSearch));
    }
    for (int k = 0; k < 200; ++k) {
      const std::size_t i = static_cast<std::size_t>(k) % spaces.size();
      const auto f = random_table(spaces[i], rng);
      const auto h = hypercontractivity_check(gens[i], rhos[i], f, sample(rng, 0.005, 1.5), sample(rng, 1.05, 5.0));
      worst = std::min(worst, h.slack);
      violations += h.slack < -1e-9;
      ++total;
    }
  };
  std::vector<SpacePtr> cubes, tori, slices;
  for (std::size_t n = 1; n <= 8; ++n)
    for (double p : {0.2, 0.5, 0.8}) cubes.push_back(build_biased_cube(n, p));
  for (std::size_t n = 1; n <= 3; ++n)
    for (std::size_t m = 2; m <= 4; ++m) tori.push_back(build_torus(n, m));
  for (std::size_t n = 2; n <= 6; ++n)
    for (std::size_t k = 1; k < n; ++k) slices.push_back(build_slice(n, k));
  family(cubes);
  family(tori);
  family(slices);
  return {violations == 0, std::to_string(total) + " instances, violations = " + std::to_string(violations) +
                               ", worst slack = " + num(worst) + " (limit -1e-9)"};
}

Outcome lemma_suites() {
  std::mt19937_64 rng(505);
  std::size_t la_bad = 0, bakry_bad = 0, la_nontrivial = 0;
  double la_worst = std::numeric_limits<double>::infinity(), bakry_worst = la_worst;
  std::map<std::size_t, std::pair<SpacePtr, Generator>> cache;
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 4 + static_cast<std::size_t>(k) % 7;  // 4..10
    if (!cache.count(n)) {
      auto s = build_biased_cube(n, 0.5);
      cache.emplace(n, std::make_pair(s, generator(s)));
    }
    const auto& [s, gen] = cache.at(n);
    FunctionTable f = random_table(s, rng);
    // Make some coordinates weak so that the averaged set is not empty.
    const std::size_t weak = static_cast<std::size_t>(k) % (n - 1);
    const double damp = sample(rng, 0.0, 0.2);
    f = FunctionTable::tabulate(s, [&](std::span<const int> c) {
      const std::size_t x = s->index_of(c);
      auto cw = std::vector<int>(c.begin(), c.end());
      for (std::size_t i = 0; i < weak; ++i) cw[i] = 1;
      return damp * f[x] + (1.0 - damp) * f[s->index_of(cw)];
    });
    auto prof = influence_profile(*s, f);
    f = f.scaled(1.0 / prof.max_sup_norm());
    prof = influence_profile(*s, f);
    if (prof.total < 1.0) {
      f = f.scaled(1.0);  // the lemma needs I ≥ 1; such draws only feed the second check
    }
    const double t = sample(rng, 0.01, 1.0);
    if (prof.total >= 1.0) {
      auto entries = prof.entries;
      std::sort(entries.begin(), entries.end());
      const double eta = std::min(0.9, entries[static_cast<std::size_t>(sample(rng, 0.0, 1.0) * (n - 1))] * 1.05);
      const auto la = lemma_la_check(gen, 1.0, f, eta, t);
      la_worst = std::min(la_worst, la.slack);
      la_bad += !la.pass;
      la_nontrivial += la.lhs > 0.0;
    }
    const auto b = bakry_check(gen, f, t);
    bakry_worst = std::min(bakry_worst, b.slack);
    bakry_bad += !b.pass;
  }
  return {la_bad == 0 && bakry_bad == 0 && la_nontrivial > 100,
          "influence lemma: violations = " + std::to_string(la_bad) + ", worst slack = " + num(la_worst) + ", " +
              std::to_string(la_nontrivial) + " with nonzero left side; semigroup lemma: violations = " +
              std::to_string(bakry_bad) + ", worst slack = " + num(bakry_worst)};
}

Outcome extraction_soundness() {
  const auto s = build_biased_cube(10, 0.5);
  const auto gen = generator(s);
  std::mt19937_64 rng(606);
  std::size_t bad = 0;
  std::size_t kept_total = 0;
  double worst_err = 0.0, worst_size_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 50; ++k) {
    const std::size_t size = 1 + static_cast<std::size_t>(k) % 3;
    std::vector<std::size_t> coords(10);
    for (std::size_t i = 0; i < 10; ++i) coords[i] = i;
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(size);
    std::map<std::vector<int>, double> table;
    const double noise = sample(rng, 0.0, 0.02);
    auto f = FunctionTable::tabulate(s, [&](std::span<const int> c) {
      std::vector<int> key;
      for (auto i : coords) key.push_back(c[i]);
      auto it = table.find(key);
      if (it == table.end()) it = table.emplace(key, sample(rng, -1.0, 1.0)).first;
      return it->second + noise * sample(rng, -1.0, 1.0);
    });
    const auto [g, cert] = extract_junta(gen, 1.0, f, 0.1);
    bool ok = cert.measured_error <= 0.1;
    for (auto i : coords) ok = ok && std::find(cert.kept_set.begin(), cert.kept_set.end(), i) != cert.kept_set.end();
    // |kept| ≤ I/η, compared in logs since η may underflow.
    const double margin = std::log(std::max(cert.total_influence, 1e-300)) - cert.log_eta -
                          std::log(static_cast<double>(std::max<std::size_t>(cert.kept_set.size(), 1)));
    ok = ok && (cert.kept_set.empty() || margin >= -1e-12);
    worst_size_margin = std::min(worst_size_margin, margin);
    worst_err = std::max(worst_err, cert.measured_error);
    kept_total += cert.kept_set.size();
    bad += !ok;
  }
  return {bad == 0, "50 planted juntas, failures = " + std::to_string(bad) + ", worst error = " + num(worst_err) +
                        " (limit 0.1), mean |kept| = " + num(static_cast<double>(kept_total) / 50.0) +
                        ", min log(I/eta) - log|kept| = " + num(worst_size_margin)};
}

Outcome slice_spectrum() {
  double worst = 0.0;
  std::size_t cases = 0;
  for (std::size_t n = 2; n <= 8; ++n)
    for (std::size_t k = 1; k < n; ++k) {
      const auto gen = generator(build_slice(n, k));
      const auto& ev = gen.spectrum().eigenvalues;
      const auto pred = predicted_slice_spectrum(n, k);
      if (static_cast<std::size_t>(ev.size()) != pred.size()) return {false, "multiset sizes differ"};
      for (std::size_t i = 0; i < pred.size(); ++i)
        worst = std::max(worst, std::abs(ev(static_cast<Eigen::Index>(i)) - pred[i]));
      ++cases;
    }
  return {worst <= 1e-8, std::to_string(cases) + " slices, max eigenvalue error = " + num(worst) + " (limit 1e-8)"};
}

Outcome slice_basis() {
  double orth = 0.0, pars = 0.0, ident = 0.0;
  bool complete = true;
  std::mt19937_64 rng(808);
  for (auto [n, k] : {std::pair<std::size_t, std::size_t>{4, 2}, {5, 2}, {6, 3}}) {
    const auto basis = build_basis(n, k);
    const auto& el = basis.elements;
    complete = complete && el.size() == basis.space->size() && validate_basis(basis).empty();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(el.size()), static_cast<Eigen::Index>(el.size()));
    for (std::size_t a = 0; a < el.size(); ++a)
      for (std::size_t b = 0; b < el.size(); ++b) {
        const double ip = inner_product(el[a].vector, el[b].vector) / std::sqrt(el[a].squared_norm * el[b].squared_norm);
        m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = ip;
        if (a != b) orth = std::max(orth, std::abs(ip));
      }
    complete = complete && Eigen::FullPivLU<Eigen::MatrixXd>(m).rank() == m.rows();
    for (int r = 0; r < 20; ++r) {
      const auto f = random_table(basis.space, rng);
      const auto c = fourier_expand(basis, f);
      double s = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * c[i] * el[i].squared_norm;
      pars = std::max(pars, std::abs(s - inner_product(f, f)));
      for (std::size_t pre = 2; pre <= n; ++pre) ident = std::max(ident, influence_identity_check(basis, f, pre).error);
    }
  }
  return {complete && orth <= 1e-9 && pars <= 1e-9 && ident <= 1e-8,
          std::string("complete = ") + (complete ? "yes" : "no") + ", orthogonality " + num(orth) +
              " (limit 1e-9), Parseval " + num(pars) + " (limit 1e-9), influence identity " + num(ident) +
              " (limit 1e-8)"};
}

Outcome gaussian_suite() {
  LineOptions fine;
  fine.nodes = 513;
  const auto model = build_line_model(gaussian_potential(), fine);
  double eig = 0.0, decay = 0.0;
  const auto& ev = model->spectrum().eigenvalues;
  for (Eigen::Index k = 0; k <= 12; ++k) eig = std::max(eig, std::abs(ev(k) - static_cast<double>(k)));
  for (std::size_t k = 0; k <= 12; ++k) {
    const double norm = std::sqrt(std::tgamma(static_cast<double>(k) + 1.0));
    auto he = [k, norm](double x) {
      double a = 1.0, b = x;
      if (k == 0) b = 1.0;
      for (std::size_t i = 1; i < k; ++i) {
        const double c = x * b - static_cast<double>(i) * a;
        a = b;
        b = c;
      }
      return b / norm;
    };
    std::vector<double> f(model->size());
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = he(model->nodes()[j]);
    for (double t : {0.1, 0.5}) {
      const auto g = evolve_line(*model, he, t);
      double e = 0.0;
      for (std::size_t j = 0; j < f.size(); ++j) {
        const double d = g[j] - std::exp(-static_cast<double>(k) * t) * f[j];
        e += model->weights()[j] * d * d;
      }
      decay = std::max(decay, std::sqrt(e));
    }
  }

  LineOptions half;
  half.nodes = 512;
  half.extent = 30.0;
  const ProductLine hp(build_line_model(gaussian_potential(), half), 2);
  const auto hs = make_grid_set(hp, [](std::span<const double> x) { return x[0] <= 0.0; }, Monotonicity::Decreasing);
  const double hs_err = std::abs(geometric_influence_set(hp, hs, 0) - 1.0 / std::sqrt(2.0 * kPi));

  LineOptions coarse;
  coarse.nodes = 61;
  coarse.extent = 30.0;
  const auto cm = build_line_model(gaussian_potential(), coarse);
  std::vector<ProductLine> products;
  for (std::size_t n = 1; n <= 3; ++n) products.emplace_back(cm, n);
  std::mt19937_64 rng(909);
  std::map<std::string, std::size_t> failures;
  std::map<std::string, double> worst;
  auto note = [&](const std::string& name, const CheckReport& r) {
    failures[name] += !r.pass;
    if (!worst.count(name) || r.slack < worst[name]) worst[name] = r.slack;
  };
  for (int k = 0; k < 100; ++k) {
    const auto& p = products[static_cast<std::size_t>(k) % 3];
    const auto f = random_smooth_function(p, 1000 + static_cast<std::uint64_t>(k));
    const double t = sample(rng, 0.05, 1.0);
    const auto rp = reverse_poincare_check(p, f, t);
    note("reverse-poincare", rp.global);
    note("reverse-poincare-pointwise", rp.pointwise);
    note("ledoux", ledoux_l1_check(p, f, t));
    note("commutation", commutation_check(p, f, t).strict);
    std::vector<std::size_t> T;
    for (std::size_t i = 1; i < p.dimension(); ++i) T.push_back(i);
    note("averaging", averaging_error_check(p, effective_rho(p.model(), 0.0), f, t, T));
    note("l1-gradient-decay", gradient_l1_decay_check(p, f, t));
  }
  std::size_t bad = 0;
  std::string summary;
  for (const auto& [name, count] : failures) {
    bad += count;
    summary += " " + name + ":" + std::to_string(count) + "/" + num(worst[name]);
  }
  return {eig <= 2e-4 && decay <= 2e-4 && hs_err <= 1e-6 && bad == 0,
          "eigenvalue error " + num(eig) + ", decay error " + num(decay) + " (limit 2e-4); half-space " + num(hs_err) +
              " (limit 1e-6); failures/worst slack over 100 functions:" + summary};
}

Outcome monotone_identity() {
  LineOptions o;
  o.nodes = 1024;
  o.extent = 30.0;
  const ProductLine p(build_line_model(gaussian_potential(), o), 2, std::size_t{1} << 20);
  using Pred = std::function<bool(std::span<const double>)>;
  const std::vector<std::pair<Pred, Monotonicity>> sets = {
      {[](auto x) { return x[0] <= 0.0; }, Monotonicity::Decreasing},
      {[](auto x) { return x[1] <= 0.7; }, Monotonicity::Decreasing},
      {[](auto x) { return x[0] >= -0.4; }, Monotonicity::Increasing},
      {[](auto x) { return x[0] <= 0.3 && x[1] <= -0.2; }, Monotonicity::Decreasing},
      {[](auto x) { return x[0] <= 1.0 && x[1] <= 1.0; }, Monotonicity::Decreasing},
      {[](auto x) { return x[0] >= 0.5 || x[1] >= 0.5; }, Monotonicity::Increasing},
      {[](auto x) { return x[0] >= -1.0 || x[1] >= 0.2; }, Monotonicity::Increasing},
      {[](auto x) { return x[0] + x[1] <= 0.0; }, Monotonicity::Decreasing},
      {[](auto x) { return x[0] + 2.0 * x[1] >= 0.5; }, Monotonicity::Increasing},
      {[](auto x) { return x[0] <= 0.0 || x[1] <= -1.0; }, Monotonicity::Decreasing},
  };
  double worst = 0.0;
  for (const auto& [pred, mono] : sets) {
    const auto a = make_grid_set(p, pred, mono);
    const double sum = geometric_influence_set(p, a, 0) + geometric_influence_set(p, a, 1);
    worst = std::max(worst, std::abs(uniform_enlargement_boundary(p, a).value - sum));
  }
  return {worst <= 5e-4, "10 monotone sets, max |boundary - sum of influences| = " + num(worst) + " (limit 5e-4)"};
}

Outcome monotone_extraction() {
  LineOptions o;
  o.nodes = 128;
  o.extent = 30.0;
  const ProductLine p(build_line_model(gaussian_potential(), o), 2);
  const auto a = make_grid_set(p, [](std::span<const double> x) { return x[0] <= 0.0; }, Monotonicity::Decreasing);
  const auto mj = monotone_set_junta(p, a, 0.1);
  const bool ok = mj.certificate.kept_set.size() == 1 && mj.certificate.kept_set[0] == 0 &&
                  mj.symmetric_difference <= 0.1;
  return {ok, "kept " + std::to_string(mj.certificate.kept_set.size()) + " coordinate(s), symmetric difference " +
                  num(mj.symmetric_difference) + " (limit 0.1)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome sweep_determinism() {
  const fs::path dir = fs::temp_directory_path() / "juntakit-acceptance-sweep";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg = dir / "sweep.cfg";
  {
    std::ofstream out(cfg);
    out << "[scenario]\ncommand = verify\nspace = cube:n=5,p=0.3\nfn = random:seed={seed}\n"
           "check = hyper,bakry,gap,martingale\nsamples = 10\nseed = 7\n[grid]\nseed = 1..4\nt = 0.1, 0.3\n";
  }
  std::vector<std::string> reports;
  for (int run = 0; run < 2; ++run) {
    const fs::path out = dir / ("run" + std::to_string(run));
    const std::string cmd = std::string(JUNTAKIT_CLI) + " sweep --config " + cfg.string() + " --out " + out.string() +
                            " > " + (dir / "stdout.txt").string() + " 2>&1";
    const int st = std::system(cmd.c_str());
    if (st != 0) return {false, "sweep exited with status " + std::to_string(st)};
    reports.push_back(slurp(out / "report.csv") + slurp(out / "summary.txt"));
  }
  const std::size_t rows = static_cast<std::size_t>(std::count(reports[0].begin(), reports[0].end(), '\n'));
  return {reports[0] == reports[1] && !reports[0].empty(),
          std::string(reports[0] == reports[1] ? "identical" : "different") + " bytes across two runs (" +
              std::to_string(reports[0].size()) + " bytes, " + std::to_string(rows) + " lines)"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "product-normalization spectral gap", 5, product_gap},
      {2, "torus spectral gap formula", 5, torus_gap},
      {3, "two-point log-Sobolev constant", 30, two_point},
      {4, "hypercontractivity suite", 60, hyper_suite},
      {5, "influence and semigroup lemma suites", 60, lemma_suites},
      {6, "junta extraction soundness", 120, extraction_soundness},
      {7, "slice spectrum", 30, slice_spectrum},
      {8, "slice basis", 60, slice_basis},
      {9, "Gaussian continuous suite", 180, gaussian_suite},
      {10, "monotone-set boundary identity", 60, monotone_identity},
      {11, "continuous monotone-set extraction", 60, monotone_extraction},
      {12, "sweep determinism", 60, sweep_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = o.ok && secs < c.time_limit;
    failed += !pass;
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.2fs < %.0fs", secs, c.time_limit);
    std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.title << ": " << o.detail << "; time "
              << timing << (secs < c.time_limit ? "" : " EXCEEDED") << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
