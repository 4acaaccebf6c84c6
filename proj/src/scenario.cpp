#include "juntakit/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "juntakit/influence.hpp"
#include "juntakit/junta.hpp"
#include "juntakit/semigroup.hpp"
#include "juntakit/slice.hpp"

namespace juntakit {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw UsageError("option '" + key + "' expects a number, got '" + v + "'");
  }
}

std::size_t to_size(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d < 0 || d != std::floor(d)) throw UsageError("option '" + key + "' expects a nonnegative integer");
  return static_cast<std::size_t>(d);
}

double get_double(const Options& o, const std::string& key, double fallback) {
  const auto it = o.find(key);
  return it == o.end() || it->second.empty() ? fallback : to_double(key, it->second);
}

std::size_t get_size(const Options& o, const std::string& key, std::size_t fallback) {
  const auto it = o.find(key);
  return it == o.end() || it->second.empty() ? fallback : to_size(key, it->second);
}

std::string get_string(const Options& o, const std::string& key, const std::string& fallback = {}) {
  const auto it = o.find(key);
  return it == o.end() || it->second.empty() ? fallback : it->second;
}

bool has(const Options& o, const std::string& key) {
  const auto it = o.find(key);
  return it != o.end() && !it->second.empty();
}

std::string require(const Options& o, const std::string& key) {
  if (!has(o, key)) throw UsageError("missing required option '" + key + "'");
  return o.at(key);
}

double param_double(const Descriptor& d, const std::string& key, double fallback) {
  const auto it = d.params.find(key);
  return it == d.params.end() ? fallback : to_double(d.kind + "." + key, it->second);
}

std::size_t param_size(const Descriptor& d, const std::string& key, std::size_t fallback) {
  const auto it = d.params.find(key);
  return it == d.params.end() ? fallback : to_size(d.kind + "." + key, it->second);
}

void check_params(const Descriptor& d, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : d.params) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw UsageError("unknown parameter '" + k + "' in descriptor '" + d.raw + "'");
  }
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

CheckReport equality_row(std::string name, double left, double right, double tol) {
  CheckReport r;
  r.name = std::move(name);
  r.lhs = left;
  r.rhs = right;
  r.slack = tol - std::abs(left - right);
  r.pass = r.slack >= 0.0;
  return r;
}

CheckReport bound_row(std::string name, double value, double limit) {
  CheckReport r;
  r.name = std::move(name);
  r.lhs = value;
  r.rhs = limit;
  r.slack = limit - value;
  r.pass = value <= limit;
  return r;
}

CheckReport renamed(CheckReport r, std::string name) {
  r.name = std::move(name);
  return r;
}

SpaceConfig space_config(const Options& o) {
  SpaceConfig c;
  c.state_budget = get_size(o, "budget-states", c.state_budget);
  return c;
}

std::vector<std::string> check_list(const Options& o, const std::string& command) {
  std::vector<std::string> out;
  if (has(o, "check"))
    for (auto& c : split(o.at("check"), ','))
      if (!c.empty()) out.push_back(c);
  if (out.empty()) throw UsageError("no checks requested");
  const auto known = known_checks(command);
  for (const auto& c : out)
    if (std::find(known.begin(), known.end(), c) == known.end())
      throw UsageError("unknown check '" + c + "' for " + command);
  return out;
}

// Coordinate value in [-1, 1] used by the named Boolean-style functions.
std::vector<double> signed_coordinates(const MarkovSpace& space, std::size_t state) {
  const auto c = space.coordinates(state);
  std::vector<double> s(c.size());
  const double two_pi = 2.0 * std::acos(-1.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    switch (space.kind()) {
      case SpaceKind::BiasedCube: s[i] = c[i]; break;
      case SpaceKind::Slice: s[i] = 2.0 * c[i] - 1.0; break;
      case SpaceKind::SymmetricGroup: s[i] = c[i] == static_cast<int>(i) ? 1.0 : -1.0; break;
      default: {
        const double m = static_cast<double>(space.shape()[i]);
        s[i] = std::cos(two_pi * c[i] / m);
      }
    }
  }
  return s;
}

double empirical_gap_expectation(const MarkovSpace& space) {
  switch (space.kind()) {
    case SpaceKind::BiasedCube:
    case SpaceKind::Product: return 1.0;
    case SpaceKind::Torus: {
      const double m = static_cast<double>(space.modulus());
      return (1.0 - std::cos(2.0 * std::acos(-1.0) / m)) / 2.0;
    }
    default: return 2.0 / (static_cast<double>(space.dimension()) - 1.0);
  }
}

bool two_point_product(const MarkovSpace& space) {
  if (!space.is_product()) return false;
  for (const auto& f : space.product().factors)
    if (f.measure.size() != 2) return false;
  return true;
}

double rho_for(const Generator& gen, const Options& o) {
  if (has(o, "rho")) return get_double(o, "rho", 0.0);
  if (two_point_product(gen.space())) return log_sobolev_constant(gen, LogSobolevMethod::ExactTwoPoint);
  LogSobolevOptions lo;
  lo.seed = get_size(o, "seed", 1);
  return log_sobolev_constant(gen, LogSobolevMethod::NumericSearch, lo);
}

FunctionTable normalized(const FunctionTable& f) {
  const auto prof = influence_profile(f.space(), f);
  const double s = prof.max_sup_norm();
  return s == 0.0 ? f : f.scaled(1.0 / s);
}

struct LineSetup {
  LinePtr model;
  std::shared_ptr<ProductLine> product;
};

LineSetup line_setup(const Options& o) {
  LineOptions lo;
  lo.nodes = get_size(o, "nodes", 61);
  lo.extent = get_double(o, "extent", 30.0);
  LineSetup s;
  s.model = build_line_model(parse_potential(get_string(o, "potential", "gaussian")), lo);
  s.product = std::make_shared<ProductLine>(s.model, get_size(o, "dim", 2),
                                            get_size(o, "budget-states", std::size_t{1} << 18));
  return s;
}

double tol_or(const Options& o, double fallback) { return get_double(o, "tol", fallback); }

// ---------------------------------------------------------------------------

RunResult spaces_info(const Options& o) {
  const auto space = parse_space(require(o, "space"), space_config(o));
  RunResult r;
  r.info.emplace_back("descriptor", space->descriptor());
  r.info.emplace_back("kind", to_string(space->kind()));
  r.info.emplace_back("states", std::to_string(space->size()));
  r.info.emplace_back("dimension", std::to_string(space->dimension()));
  r.info.emplace_back("normalization", to_string(space->normalization()));
  r.info.emplace_back("generator_scale", format_number(space->generator_scale()));
  const auto d = diagnose(*space);
  const double worst =
      std::max({d.mass_error, d.invariance_error, d.reversibility_error, d.row_sum_error});
  r.info.emplace_back("min_weight", format_number(d.min_weight));
  const double tol = tol_or(o, 1e-9);
  r.report.add(bound_row("diagnose", worst, tol));
  const auto gen = generator(space);
  const double gap = spectral_gap(gen);
  r.info.emplace_back("spectral_gap", format_number(gap));
  r.report.add(equality_row("gap", gap, empirical_gap_expectation(*space), tol));
  return r;
}

RunResult verify(const Options& o) {
  const auto checks = check_list(o, "verify");
  const auto space = parse_space(require(o, "space"), space_config(o));
  const auto gen = generator(space);
  const auto f = parse_function(space, get_string(o, "fn", "random:seed=" + get_string(o, "seed", "1")));
  const double tol = tol_or(o, 1e-9);
  const double t = get_double(o, "t", 0.2);
  const double eta = get_double(o, "eta", 0.1);
  const std::size_t samples = get_size(o, "samples", 20);
  std::mt19937_64 rng(get_size(o, "seed", 1));
  RunResult r;
  double rho = -1.0;
  auto rho_once = [&] {
    if (rho < 0.0) rho = rho_for(gen, o);
    return rho;
  };
  for (const auto& c : checks) {
    if (c == "gap") {
      r.report.add(equality_row("gap", spectral_gap(gen), empirical_gap_expectation(*space), tol));
    } else if (c == "log-sobolev") {
      LogSobolevOptions lo;
      lo.seed = get_size(o, "seed", 1);
      const double numeric = log_sobolev_constant(gen, LogSobolevMethod::NumericSearch, lo);
      if (two_point_product(*space))
        r.report.add(equality_row("log-sobolev", numeric,
                                  log_sobolev_constant(gen, LogSobolevMethod::ExactTwoPoint), 1e-4));
      else
        r.report.add(make_report("log-sobolev", numeric, spectral_gap(gen), tol));
    } else if (c == "hyper") {
      const double q_fixed = get_double(o, "q", 0.0);
      CheckReport worst;
      bool first = true;
      for (std::size_t s = 0; s < samples; ++s) {
        const double ts = has(o, "t") ? t : 0.01 + uniform01(rng);
        const double q = q_fixed > 1.0 ? q_fixed : 1.1 + 2.9 * uniform01(rng);
        const auto h = hypercontractivity_check(gen, rho_once(), f, ts, q);
        auto row = make_report("hyper", h.lhs, h.rhs, tol);
        if (first || row.slack < worst.slack) worst = row;
        first = false;
      }
      r.report.add(worst);
    } else if (c == "lemma-la") {
      r.report.add(renamed(lemma_la_check(gen, rho_once(), normalized(f), eta, t, tol), "lemma-la"));
    } else if (c == "bakry") {
      r.report.add(renamed(bakry_check(gen, f, t, tol), "bakry"));
    } else if (c == "chain") {
      const auto ch = theorem_chain_check(gen, rho_once(), normalized(f), eta, t, tol);
      CheckReport row;
      row.name = "chain";
      row.lhs = ch.total;
      row.rhs = ch.bounds[0] + ch.bounds[1] + ch.bounds[2];
      row.slack = row.rhs - row.lhs;
      row.pass = ch.pass;
      r.report.add(row);
    } else if (c == "martingale") {
      std::vector<std::size_t> T(space->dimension());
      for (std::size_t i = 0; i < T.size(); ++i) T[i] = i;
      const auto m = reverse_martingale_check(f, T);
      r.report.add(equality_row("martingale", m.lhs, m.rhs, tol * std::max(1.0, m.lhs)));
    } else if (c == "poincare") {
      const double energy = dirichlet_energy(*space, f).energy;
      r.report.add(make_report("poincare", spectral_gap(gen) * variance(f), energy, tol));
    } else if (c == "decay") {
      const auto d = boolean_decay_check(gen, rho_once(), f, t, tol);
      CheckReport row = make_report("decay", 0.0, 0.0, tol);
      bool first = true;
      for (const auto& e : d.entries) {
        auto rr = make_report("decay", e.lhs, e.rhs, tol);
        if (first || rr.slack < row.slack) row = rr;
        first = false;
      }
      r.report.add(row);
    } else if (c == "diagnose") {
      const auto d = diagnose(*space);
      r.report.add(bound_row(
          "diagnose", std::max({d.mass_error, d.invariance_error, d.reversibility_error, d.row_sum_error}), tol));
    } else if (c == "holder") {
      std::vector<double> a(space->dimension()), b(space->dimension());
      for (auto& v : a) v = uniform01(rng);
      for (auto& v : b) v = uniform01(rng);
      r.report.add(renamed(holder_check(a, b, 0.05 + 0.9 * uniform01(rng), 1e-12), "holder"));
    }
  }
  return r;
}

RunResult junta_extract(const Options& o) {
  const auto space = parse_space(require(o, "space"), space_config(o));
  const auto gen = generator(space);
  const auto fd = get_string(o, "fn", "random:seed=" + get_string(o, "seed", "1"));
  const auto f = parse_function(space, fd);
  const double eps = get_double(o, "eps", 0.1);
  const auto norm_s = get_string(o, "norm", "L2");
  if (norm_s != "L2" && norm_s != "L1") throw UsageError("norm must be L2 or L1");
  const auto norm = norm_s == "L2" ? ErrorNorm::L2 : ErrorNorm::L1;
  ExtractOptions eo;
  eo.retry_budget = get_size(o, "retry-budget", eo.retry_budget);
  const auto [g, cert] = extract_junta(gen, rho_for(gen, o), f, eps, norm, eo);
  RunResult r;
  r.report.add(bound_row("extract", cert.measured_error, eps));
  const auto planted = planted_coordinates(fd);
  if (!planted.empty()) {
    std::size_t missing = 0;
    for (auto i : planted)
      if (std::find(cert.kept_set.begin(), cert.kept_set.end(), i) == cert.kept_set.end()) ++missing;
    r.report.add(bound_row("planted-kept", static_cast<double>(missing), 0.0));
  }
  r.certificates.push_back(serialize(cert));
  return r;
}

SpacePtr slice_space(const Options& o) {
  const auto space = parse_space(require(o, "space"), space_config(o));
  if (space->kind() != SpaceKind::Slice) throw UsageError("slice commands need a slice:n=..,k=.. space");
  return space;
}

BasisMethod basis_method(const Options& o) {
  const auto m = get_string(o, "method", "auto");
  if (m == "auto") return BasisMethod::Auto;
  if (m == "explicit") return BasisMethod::Explicit;
  if (m == "joint") return BasisMethod::JointDiagonalization;
  throw UsageError("method must be auto, explicit or joint");
}

RunResult slice_basis(const Options& o) {
  const auto basis = build_basis(slice_space(o), basis_method(o));
  RunResult r;
  r.info.emplace_back("basis_path", basis.path);
  r.info.emplace_back("elements", std::to_string(basis.elements.size()));
  const auto failure = validate_basis(basis);
  CheckReport row = bound_row("basis", failure.empty() ? 0.0 : 1.0, 0.0);
  r.report.add(row);
  r.artifact = export_basis(basis);
  return r;
}

RunResult slice_verify(const Options& o) {
  const auto checks = check_list(o, "slice-verify");
  const auto space = slice_space(o);
  const auto gen = generator(space);
  const std::size_t n = space->dimension();
  const auto f = parse_function(space, get_string(o, "fn", "random:seed=" + get_string(o, "seed", "1")));
  const double tol = tol_or(o, 1e-9);
  const double t = get_double(o, "t", 0.2);
  RunResult r;
  std::unique_ptr<SliceBasis> basis;
  auto need_basis = [&]() -> const SliceBasis& {
    if (!basis) basis = std::make_unique<SliceBasis>(build_basis(space, basis_method(o)));
    return *basis;
  };
  for (const auto& c : checks) {
    if (c == "spectrum") {
      const auto& ev = gen.spectrum().eigenvalues;
      const auto pred = predicted_slice_spectrum(n, space->slice_weight());
      double worst = ev.size() == static_cast<Eigen::Index>(pred.size()) ? 0.0 : 1.0;
      if (worst == 0.0)
        for (std::size_t i = 0; i < pred.size(); ++i)
          worst = std::max(worst, std::abs(ev(static_cast<Eigen::Index>(i)) - pred[i]));
      r.report.add(bound_row("spectrum", worst, get_double(o, "tol", 1e-8)));
    } else if (c == "basis") {
      r.report.add(bound_row("basis", validate_basis(need_basis()).empty() ? 0.0 : 1.0, 0.0));
    } else if (c == "parseval") {
      const auto& b = need_basis();
      const auto coef = fourier_expand(b, f);
      double s = 0.0;
      for (std::size_t i = 0; i < coef.size(); ++i) s += coef[i] * coef[i] * b.elements[i].squared_norm;
      r.report.add(equality_row("parseval", s, inner_product(f, f), tol));
    } else if (c == "identity") {
      const auto id = influence_identity_check(need_basis(), f, get_size(o, "prefix", n));
      r.report.add(equality_row("identity", id.spectral, id.combinatorial, get_double(o, "tol", 1e-8)));
    } else if (c == "low-degree-decay") {
      const auto rep = low_degree_decay_check(need_basis(), gen, f, t, get_size(o, "m", 1), tol);
      CheckReport row = make_report("low-degree-decay", rep.lhs_basis, rep.rhs, tol);
      row.pass = rep.pass;
      r.report.add(row);
    } else if (c == "slice-hyper") {
      r.report.add(slice_hyper_step_check(gen, rho_for(gen, o), f, t, tol));
    } else if (c == "lee-yau") {
      const auto ly = lee_yau_report(n, space->slice_weight(), rho_for(gen, o));
      r.info.emplace_back("omega", format_number(ly.omega));
      r.info.emplace_back("rho_n_log_omega", format_number(ly.ratio));  // reported, not asserted
    }
  }
  return r;
}

RunResult slice_extract(const Options& o) {
  const auto space = slice_space(o);
  const auto gen = generator(space);
  const auto f = parse_function(space, get_string(o, "fn", "random:seed=" + get_string(o, "seed", "1")));
  const double eps = get_double(o, "eps", 0.1);
  std::string path;
  if (has(o, "method")) path = build_basis(space, basis_method(o)).path;
  ExtractOptions eo;
  eo.retry_budget = get_size(o, "retry-budget", eo.retry_budget);
  const auto ex = slice_extract_junta(gen, rho_for(gen, o), f, eps, eo, path);
  RunResult r;
  r.report.add(bound_row("extract", ex.certificate.measured_error, eps));
  r.report.add(bound_row("proven-bound", ex.normalized_sq_error, ex.proven_bound));
  r.certificates.push_back(serialize(ex.certificate));
  return r;
}

RunResult continuous_verify(const Options& o) {
  const auto checks = check_list(o, "continuous-verify");
  const auto setup = line_setup(o);
  const auto& model = *setup.model;
  const auto& product = *setup.product;
  const double tol = tol_or(o, 1e-6);
  const double t = get_double(o, "t", 0.2);
  const std::size_t samples = get_size(o, "samples", 1);
  const auto seed = get_size(o, "seed", 1);
  std::vector<std::vector<double>> fs;
  if (has(o, "fn")) {
    fs.push_back(parse_line_function(product, o.at("fn")));
  } else {
    for (std::size_t s = 0; s < samples; ++s) fs.push_back(random_smooth_function(product, seed + s));
  }
  auto worst_of = [&](const std::string& name, const std::function<CheckReport(const std::vector<double>&)>& fn) {
    CheckReport worst;
    bool first = true;
    for (const auto& f : fs) {
      auto row = fn(f);
      if (first || row.slack < worst.slack) worst = row;
      first = false;
    }
    worst.name = name;
    return worst;
  };
  RunResult r;
  for (const auto& c : checks) {
    if (c == "detailed-balance") {
      r.report.add(bound_row("detailed-balance", model.detailed_balance_error(), 1e-12));
    } else if (c == "mass") {
      r.report.add(bound_row("mass", model.truncated_mass(), 1e-10));
    } else if (c == "eigen") {
      const auto& ev = model.spectrum().eigenvalues;
      double worst = 0.0;
      for (Eigen::Index k = 0; k <= 12 && k < ev.size(); ++k)
        worst = std::max(worst, std::abs(ev(k) - static_cast<double>(k)));
      r.report.add(bound_row("eigen", worst, get_double(o, "eigen-tol", 2e-4)));
    } else if (c == "hermite") {
      double worst = 0.0;
      for (std::size_t deg = 0; deg <= model.max_degree(); ++deg) {
        auto he = [deg](double x) {
          double a = 1.0, b = x;
          if (deg == 0) return 1.0;
          for (std::size_t k = 1; k < deg; ++k) {
            const double c2 = x * b - static_cast<double>(k) * a;
            a = b;
            b = c2;
          }
          return b / std::sqrt(std::tgamma(static_cast<double>(deg) + 1.0));
        };
        std::vector<double> fv(model.size());
        for (std::size_t j = 0; j < fv.size(); ++j) fv[j] = he(model.nodes()[j]);
        const auto a = hermite_evolve(model, fv, t, model.max_degree());
        const auto b = evolve_line(model, he, t);
        double e = 0.0;
        for (std::size_t j = 0; j < fv.size(); ++j) e += model.weights()[j] * (a[j] - b[j]) * (a[j] - b[j]);
        worst = std::max(worst, std::sqrt(e));
      }
      r.report.add(bound_row("hermite", worst, get_double(o, "hermite-tol", 2e-6)));
    } else if (c == "half-space") {
      LineOptions lo = model.options();
      lo.nodes += lo.nodes % 2;
      const auto even = build_line_model(model.potential(), lo);
      const ProductLine p(even, product.dimension(), get_size(o, "budget-states", std::size_t{1} << 18));
      const auto a = make_grid_set(p, [](std::span<const double> x) { return x[0] <= 0.0; },
                                   Monotonicity::Decreasing);
      r.report.add(equality_row("half-space", geometric_influence_set(p, a, 0), even->density(0.0), tol));
    } else if (c == "commutation") {
      r.report.add(worst_of("commutation", [&](const auto& f) { return commutation_check(product, f, t, tol).strict; }));
    } else if (c == "reverse-poincare") {
      r.report.add(worst_of("reverse-poincare",
                            [&](const auto& f) { return reverse_poincare_check(product, f, t, tol).global; }));
    } else if (c == "reverse-poincare-pointwise") {
      r.report.add(worst_of("reverse-poincare-pointwise",
                            [&](const auto& f) { return reverse_poincare_check(product, f, t, tol).pointwise; }));
    } else if (c == "sup-gradient") {
      r.report.add(worst_of("sup-gradient", [&](const auto& f) { return sup_gradient_check(product, f, t, tol); }));
    } else if (c == "ledoux") {
      r.report.add(worst_of("ledoux", [&](const auto& f) { return ledoux_l1_check(product, f, t, tol); }));
    } else if (c == "averaging") {
      std::vector<std::size_t> T;
      for (std::size_t i = 1; i < product.dimension(); ++i) T.push_back(i);
      const double rho = effective_rho(model, get_double(o, "rho", 0.0));
      r.report.add(worst_of("averaging", [&](const auto& f) { return averaging_error_check(product, rho, f, t, T, tol); }));
    } else if (c == "l1-gradient-decay") {
      r.report.add(worst_of("l1-gradient-decay", [&](const auto& f) { return gradient_l1_decay_check(product, f, t, tol); }));
    } else if (c == "boundary") {
      const auto a = parse_grid_set(product, get_string(o, "set", "quadrant:a=0,b=0"));
      double total = 0.0;
      for (std::size_t i = 0; i < product.dimension(); ++i) total += geometric_influence_set(product, a, i);
      r.report.add(equality_row("boundary", uniform_enlargement_boundary(product, a).value, total,
                                get_double(o, "boundary-tol", 5e-4)));
    }
  }
  return r;
}

RunResult continuous_extract(const Options& o) {
  const auto setup = line_setup(o);
  const auto& product = *setup.product;
  const double eps = get_double(o, "eps", 0.1);
  RunResult r;
  if (has(o, "set")) {
    const auto a = parse_grid_set(product, o.at("set"));
    const auto mj = monotone_set_junta(product, a, eps, get_double(o, "rho", 0.0));
    r.report.add(bound_row("symmetric-difference", mj.symmetric_difference, eps));
    r.info.emplace_back("mollification", format_number(mj.mollification));
    r.certificates.push_back(serialize(mj.certificate));
  } else {
    const auto f = parse_line_function(product, get_string(o, "fn", "linear:i=1"));
    ExtractOptions eo;
    eo.retry_budget = get_size(o, "retry-budget", eo.retry_budget);
    const auto [g, cert] = continuous_extract_junta(product, get_double(o, "rho", 0.0), f, eps, eo);
    r.report.add(bound_row("extract", cert.measured_error, eps));
    r.certificates.push_back(serialize(cert));
  }
  return r;
}

std::string substitute(std::string value, const std::vector<std::pair<std::string, std::string>>& point) {
  for (const auto& [k, v] : point) {
    const std::string pat = "{" + k + "}";
    for (auto pos = value.find(pat); pos != std::string::npos; pos = value.find(pat, pos + v.size()))
      value.replace(pos, pat.size(), v);
  }
  return value;
}

std::vector<std::string> expand_values(const std::string& key, const std::string& list) {
  std::vector<std::string> out;
  for (const auto& item : split(list, ',')) {
    if (item.empty()) continue;
    const auto dots = item.find("..");
    if (dots != std::string::npos) {
      const auto a = to_size(key, item.substr(0, dots));
      const auto b = to_size(key, item.substr(dots + 2));
      if (b < a) throw UsageError("empty range '" + item + "' for grid key '" + key + "'");
      for (auto v = a; v <= b; ++v) out.push_back(std::to_string(v));
    } else {
      out.push_back(item);
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

Config parse_config(std::string_view text, const std::string& source) {
  Config cfg;
  std::string section = "scenario";
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto where = source + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(where + "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "scenario" && section != "grid")
        throw ParseError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(where + "expected key = value");
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ParseError(where + "empty key");
    if (section == "grid") {
      for (const auto& [k, v] : cfg.grid)
        if (k == key) throw ParseError(where + "duplicate grid key '" + key + "'");
      try {
        cfg.grid.emplace_back(key, expand_values(key, value));
      } catch (const UsageError& e) {
        throw ParseError(where + e.what());
      }
    } else {
      if (cfg.scenario.count(key)) throw ParseError(where + "duplicate key '" + key + "'");
      cfg.scenario[key] = value;
    }
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open configuration file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

Descriptor parse_descriptor(const std::string& text) {
  Descriptor d;
  d.raw = text;
  const auto colon = text.find(':');
  d.kind = trim(text.substr(0, colon));
  if (d.kind.empty()) throw UsageError("empty descriptor");
  if (colon == std::string::npos) return d;
  const auto rest = text.substr(colon + 1);
  if (d.kind == "file") {
    d.params["path"] = trim(rest);
    return d;
  }
  for (const auto& item : split(rest, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("expected key=value in descriptor '" + text + "'");
    d.params[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
  return d;
}

SpacePtr parse_space(const std::string& descriptor, const SpaceConfig& config) {
  const auto d = parse_descriptor(descriptor);
  auto need = [&](const char* key) {
    if (!d.params.count(key)) throw UsageError("space descriptor '" + descriptor + "' lacks " + key);
    return param_size(d, key, 0);
  };
  if (d.kind == "cube") {
    check_params(d, {"n", "p"});
    return build_biased_cube(need("n"), param_double(d, "p", 0.5), config);
  }
  if (d.kind == "torus") {
    check_params(d, {"n", "m"});
    return build_torus(need("n"), need("m"), config);
  }
  if (d.kind == "slice") {
    check_params(d, {"n", "k"});
    return build_slice(need("n"), need("k"), config);
  }
  if (d.kind == "symmetric") {
    check_params(d, {"n"});
    return build_symmetric_group(need("n"), config);
  }
  if (d.kind == "product") {
    check_params(d, {"m", "seed"});
    if (!d.params.count("m")) throw UsageError("product descriptor needs m=2x3...");
    std::vector<std::vector<double>> measures;
    const bool random = d.params.count("seed") != 0;
    std::mt19937_64 rng(param_size(d, "seed", 0));
    for (const auto& part : split(d.params.at("m"), 'x')) {
      const auto m = to_size("product.m", part);
      if (m < 2) throw UsageError("product factors need at least two points");
      std::vector<double> w(m, 1.0 / static_cast<double>(m));
      if (random) {
        double s = 0.0;
        for (auto& v : w) s += (v = 0.2 + uniform01(rng));
        for (auto& v : w) v /= s;
      }
      measures.push_back(std::move(w));
    }
    return build_product(std::move(measures), config);
  }
  throw UsageError("unknown space kind '" + d.kind + "'");
}

std::vector<std::size_t> planted_coordinates(const std::string& descriptor) {
  const auto d = parse_descriptor(descriptor);
  if (d.kind != "planted-junta") return {};
  std::vector<std::size_t> out(param_size(d, "k", 2));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

FunctionTable parse_function(const SpacePtr& space, const std::string& descriptor) {
  const auto d = parse_descriptor(descriptor);
  const std::size_t n = space->dimension();
  const std::size_t states = space->size();
  std::vector<double> v(states);
  auto sign = [](double x) { return x >= 0.0 ? 1.0 : -1.0; };
  if (d.kind == "dictator") {
    check_params(d, {"i"});
    const auto i = param_size(d, "i", 1);
    if (i < 1 || i > n) throw UsageError("dictator coordinate out of range");
    for (std::size_t x = 0; x < states; ++x) v[x] = signed_coordinates(*space, x)[i - 1];
  } else if (d.kind == "majority") {
    check_params(d, {});
    for (std::size_t x = 0; x < states; ++x) {
      double s = 0.0;
      for (double c : signed_coordinates(*space, x)) s += c;
      v[x] = sign(s);
    }
  } else if (d.kind == "parity") {
    check_params(d, {});
    for (std::size_t x = 0; x < states; ++x) {
      double s = 1.0;
      for (double c : signed_coordinates(*space, x)) s *= c;
      v[x] = s;
    }
  } else if (d.kind == "tribes") {
    check_params(d, {"w"});
    const auto w = param_size(d, "w", 2);
    if (w < 1) throw UsageError("tribes width must be positive");
    for (std::size_t x = 0; x < states; ++x) {
      const auto c = signed_coordinates(*space, x);
      bool any = false;
      for (std::size_t b = 0; b + w <= c.size(); b += w) {
        bool all = true;
        for (std::size_t j = b; j < b + w; ++j) all = all && c[j] > 0.0;
        any = any || all;
      }
      v[x] = any ? 1.0 : -1.0;
    }
  } else if (d.kind == "planted-junta") {
    check_params(d, {"k", "noise", "seed"});
    const auto k = param_size(d, "k", 2);
    const double noise = param_double(d, "noise", 0.01);
    if (k > n) throw UsageError("planted junta k exceeds the dimension");
    std::mt19937_64 rng(param_size(d, "seed", 1));
    std::map<std::vector<int>, double> table;
    for (std::size_t x = 0; x < states; ++x) {
      const auto c = space->coordinates(x);
      std::vector<int> key(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(std::min(k, c.size())));
      if (!table.count(key)) table[key] = 0.0;
    }
    for (auto& [key, val] : table) val = 2.0 * uniform01(rng) - 1.0;
    for (std::size_t x = 0; x < states; ++x) {
      const auto c = space->coordinates(x);
      std::vector<int> key(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(std::min(k, c.size())));
      v[x] = table[key] + noise * (2.0 * uniform01(rng) - 1.0);
    }
  } else if (d.kind == "random") {
    check_params(d, {"seed"});
    std::mt19937_64 rng(param_size(d, "seed", 1));
    for (auto& x : v) x = 2.0 * uniform01(rng) - 1.0;
  } else if (d.kind == "file") {
    std::ifstream in(d.params.at("path"));
    if (!in) throw UsageError("cannot open values file " + d.params.at("path"));
    std::vector<double> vals;
    std::string tok;
    while (in >> tok) {
      for (auto& item : split(tok, ','))
        if (!item.empty()) vals.push_back(to_double("values", item));
    }
    if (vals.size() != states)
      throw DimensionError("values file has " + std::to_string(vals.size()) + " entries, space has " +
                           std::to_string(states));
    v = std::move(vals);
  } else {
    throw UsageError("unknown function kind '" + d.kind + "'");
  }
  return FunctionTable(space, std::move(v));
}

std::vector<double> random_smooth_function(const ProductLine& product, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = product.dimension();
  auto u = [&] { return 2.0 * uniform01(rng) - 1.0; };
  std::vector<double> amp(n), freq(n), phase(n);
  for (std::size_t i = 0; i < n; ++i) {
    amp[i] = u();
    freq[i] = 1.5 * u();
    phase[i] = 3.0 * u();
  }
  const double offset = u(), cross = 0.3 * u(), couple = u();
  return product.tabulate([&](std::span<const double> x) {
    double s = offset;
    for (std::size_t i = 0; i < n; ++i) s += amp[i] * std::sin(freq[i] * x[i] + phase[i]);
    if (n >= 2) s += cross * std::tanh(couple * x[0] * x[1]);
    return s;
  });
}

std::vector<double> parse_line_function(const ProductLine& product, const std::string& descriptor) {
  const auto d = parse_descriptor(descriptor);
  const std::size_t n = product.dimension();
  if (d.kind == "linear") {
    check_params(d, {"i"});
    const auto i = param_size(d, "i", 1);
    if (i < 1 || i > n) throw UsageError("coordinate out of range");
    return product.tabulate([i](std::span<const double> x) { return x[i - 1]; });
  }
  if (d.kind == "ridge") {
    check_params(d, {"eps"});
    if (n < 2) throw UsageError("ridge needs dimension at least 2");
    const double e = param_double(d, "eps", 1e-3);
    return product.tabulate([e](std::span<const double> x) { return x[0] + e * std::sin(x[1]); });
  }
  if (d.kind == "smooth") {
    check_params(d, {"seed"});
    return random_smooth_function(product, param_size(d, "seed", 1));
  }
  if (d.kind == "constant") {
    check_params(d, {"c"});
    const double c = param_double(d, "c", 1.0);
    return std::vector<double>(product.size(), c);
  }
  throw UsageError("unknown continuous function kind '" + d.kind + "'");
}

GridSet parse_grid_set(const ProductLine& product, const std::string& descriptor) {
  const auto d = parse_descriptor(descriptor);
  const std::size_t n = product.dimension();
  const double a = param_double(d, "a", 0.0), b = param_double(d, "b", 0.0);
  if (d.kind == "halfspace" || d.kind == "upper") {
    check_params(d, {"i", "a"});
    const auto i = param_size(d, "i", 1);
    if (i < 1 || i > n) throw UsageError("coordinate out of range");
    if (d.kind == "halfspace")
      return make_grid_set(product, [=](std::span<const double> x) { return x[i - 1] <= a; },
                           Monotonicity::Decreasing);
    return make_grid_set(product, [=](std::span<const double> x) { return x[i - 1] >= a; },
                         Monotonicity::Increasing);
  }
  if (n < 2 && d.kind != "empty" && d.kind != "full") throw UsageError(d.kind + " needs dimension at least 2");
  if (d.kind == "quadrant") {
    check_params(d, {"a", "b"});
    return make_grid_set(product, [=](std::span<const double> x) { return x[0] <= a && x[1] <= b; },
                         Monotonicity::Decreasing);
  }
  if (d.kind == "sum") {
    check_params(d, {"a"});
    return make_grid_set(product, [=](std::span<const double> x) { return x[0] + x[1] <= a; },
                         Monotonicity::Decreasing);
  }
  if (d.kind == "union") {
    check_params(d, {"a", "b"});
    return make_grid_set(product, [=](std::span<const double> x) { return x[0] >= a || x[1] >= b; },
                         Monotonicity::Increasing);
  }
  if (d.kind == "empty" || d.kind == "full") {
    check_params(d, {});
    const bool full = d.kind == "full";
    return make_grid_set(product, [=](std::span<const double>) { return full; }, Monotonicity::Decreasing);
  }
  throw UsageError("unknown set kind '" + d.kind + "'");
}

std::vector<std::string> known_checks(const std::string& command) {
  if (command == "verify")
    return {"gap", "log-sobolev", "hyper", "lemma-la", "bakry", "chain",
            "martingale", "poincare", "decay", "diagnose", "holder"};
  if (command == "slice-verify")
    return {"spectrum", "basis", "parseval", "identity", "low-degree-decay", "slice-hyper", "lee-yau"};
  if (command == "continuous-verify")
    return {"detailed-balance", "mass", "eigen", "hermite", "half-space", "commutation",
            "reverse-poincare", "reverse-poincare-pointwise", "sup-gradient", "ledoux",
            "averaging", "l1-gradient-decay", "boundary"};
  return {};
}

RunResult run_scenario(const std::string& command, const Options& options) {
  if (command == "spaces-info") return spaces_info(options);
  if (command == "verify") return verify(options);
  if (command == "junta-extract") return junta_extract(options);
  if (command == "slice-basis") return slice_basis(options);
  if (command == "slice-verify") return slice_verify(options);
  if (command == "slice-extract") return slice_extract(options);
  if (command == "continuous-verify") return continuous_verify(options);
  if (command == "continuous-extract") return continuous_extract(options);
  throw UsageError("unknown command '" + command + "'");
}

RunResult run_sweep(const Config& config, const Options& overrides) {
  if (config.grid.empty()) throw UsageError("empty grid: the [grid] section lists no parameters");
  for (const auto& [k, values] : config.grid)
    if (values.empty()) throw UsageError("empty grid: key '" + k + "' has no values");
  Options base = config.scenario;
  for (const auto& [k, v] : overrides) base[k] = v;
  const auto command = get_string(base, "command", "verify");
  base.erase("command");
  std::size_t total = 1;
  for (const auto& [k, values] : config.grid) total *= values.size();
  const std::size_t cap = get_size(base, "max-grid-points", 4096);
  if (total > cap) throw CapacityError("sweep grid has " + std::to_string(total) + " points (limit " +
                                       std::to_string(cap) + ")");
  RunResult out;
  std::vector<std::size_t> idx(config.grid.size(), 0);
  for (std::size_t p = 0; p < total; ++p) {
    // Last key varies fastest.
    std::size_t rem = p;
    for (std::size_t g = config.grid.size(); g-- > 0;) {
      idx[g] = rem % config.grid[g].second.size();
      rem /= config.grid[g].second.size();
    }
    std::vector<std::pair<std::string, std::string>> point;
    std::string label;
    for (std::size_t g = 0; g < config.grid.size(); ++g) {
      point.emplace_back(config.grid[g].first, config.grid[g].second[idx[g]]);
      label += (g ? ";" : "") + config.grid[g].first + "=" + config.grid[g].second[idx[g]];
    }
    Options opts;
    for (const auto& [k, v] : base) opts[k] = substitute(v, point);
    for (const auto& [k, v] : point) opts[k] = v;
    auto r = run_scenario(command, opts);
    for (auto row : r.report.rows()) {
      row.name += "@" + label;
      out.report.add(std::move(row));
    }
    for (auto& c : r.certificates) out.certificates.push_back("# " + label + "\n" + c);
    for (auto& [k, v] : r.info) out.info.emplace_back(k + "@" + label, v);
  }
  return out;
}

std::string render_summary(const RunResult& result) {
  std::ostringstream os;
  os << result.report.summary() << "\n";
  for (const auto& [k, v] : result.info) os << k << "=" << v << "\n";
  for (const auto& c : result.certificates) os << "[certificate]\n" << c;
  return os.str();
}

}  // namespace juntakit
