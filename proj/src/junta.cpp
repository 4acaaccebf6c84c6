#include "juntakit/junta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "juntakit/detail/tensor.hpp"
#include "juntakit/errors.hpp"

namespace juntakit {

namespace {

bool coordinate_space(const MarkovSpace& s) {
  return s.is_product() || s.kind() == SpaceKind::Torus;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

double energy(const Generator& gen, const FunctionTable& f) {
  const auto lf = gen.apply(f);
  return std::max(0.0, -inner_product(f, lf));
}

double sq_norm(const FunctionTable& f) { return inner_product(f, f); }

bool all_equal(std::span<const double> v) {
  for (double x : v)
    if (x != v[0]) return false;
  return true;
}

void require_lemma_normalization(const MarkovSpace& space, const InfluenceProfile& prof) {
  if (!space.is_product())
    throw StructureError("the low-influence lemma is checked on product spaces only");
  const double sup = prof.max_sup_norm();
  if (std::abs(sup - 1.0) > 1e-9)
    throw ContractError("normalization max_i ‖L_i f‖_∞ = 1 violated (got " + std::to_string(sup) + ")");
  if (prof.total < 1.0 - 1e-12)
    throw ContractError("assumption I(f) >= 1 violated (got " + std::to_string(prof.total) + ")");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

FunctionTable average_out(const FunctionTable& f, std::span<const std::size_t> T) {
  const auto& space = f.space();
  if (T.empty()) return f;
  std::vector<double> v(f.values().begin(), f.values().end());
  if (coordinate_space(space)) {
    for (auto i : T) {
      if (i >= space.dimension()) throw DomainError("coordinate index out of range");
      const auto w = space.coordinate_measure(i);
      detail::integrate_axis(v, space.shape(), i, w);
    }
    return FunctionTable(f.space_ptr(), std::move(v));
  }
  // Orbits of the subgroup generated by the moves in T.
  const auto& moves = space.schreier().moves;
  const std::size_t n = space.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (auto s : T) {
    if (s >= moves.size()) throw DomainError("unknown generator index " + std::to_string(s));
    for (std::size_t x = 0; x < n; ++x) {
      const auto a = find_root(parent, x);
      const auto b = find_root(parent, moves[s].image[x]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  const auto mu = space.measure();
  std::vector<double> mass(n, 0.0), acc(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    const auto r = find_root(parent, x);
    mass[r] += mu[x];
    acc[r] += mu[x] * f[x];
  }
  for (std::size_t x = 0; x < n; ++x) {
    const auto r = find_root(parent, x);
    v[x] = acc[r] / mass[r];
  }
  return FunctionTable(f.space_ptr(), std::move(v));
}

CheckReport make_report(std::string name, double lhs, double rhs, double tol) {
  CheckReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.pass = r.slack >= -tol;
  return r;
}

MartingaleReport reverse_martingale_check(const FunctionTable& g, std::span<const std::size_t> T) {
  if (!coordinate_space(g.space()))
    throw StructureError("the martingale decomposition needs a coordinate space");
  MartingaleReport r;
  FunctionTable cur = g;
  for (auto i : T) {
    const std::size_t one[] = {i};
    FunctionTable next = average_out(cur, one);
    r.increments.push_back(sq_norm(cur - next));
    r.rhs += r.increments.back();
    cur = std::move(next);
  }
  r.lhs = sq_norm(g - average_out(g, T));
  r.error = std::abs(r.lhs - r.rhs);
  return r;
}

Selection select_low_influence_log(const InfluenceProfile& profile, double log_eta) {
  Selection sel;
  auto low = [log_eta](double inf) { return inf <= kZeroInfluence || std::log(inf) <= log_eta; };
  if (profile.kind != DirectionKind::Transposition) {
    for (std::size_t i = 0; i < profile.entries.size(); ++i)
      (low(profile.entries[i]) ? sel.T : sel.kept).push_back(i);
    return sel;
  }
  const std::size_t n = profile.dimension;
  std::vector<char> in_s(n, 0);
  auto pair_inf = [&](std::size_t i, std::size_t j) {
    return profile.entries[transposition_index(n, i, j)];
  };
  for (;;) {
    // Weighted heavy degree of each vertex outside S.
    std::vector<double> degree(n, 0.0);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_s[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (in_s[j]) continue;
        const double w = pair_inf(i, j);
        if (!low(w)) {
          degree[i] += w;
          degree[j] += w;
          any = true;
        }
      }
    }
    if (!any) break;
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (degree[i] > degree[best]) best = i;
    in_s[best] = 1;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (in_s[i]) sel.kept.push_back(i);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!in_s[i] && !in_s[j]) sel.T.push_back(transposition_index(n, i, j));
  std::sort(sel.T.begin(), sel.T.end());
  return sel;
}

Selection select_low_influence(const InfluenceProfile& profile, double eta) {
  if (!(eta > 0.0)) throw DomainError("threshold eta must be positive");
  return select_low_influence_log(profile, std::log(eta));
}

double hyper_alpha(double rho, double t) {
  const double e = std::exp(-2.0 * rho * t);
  return (1.0 - e) / (1.0 + e);
}

CheckReport lemma_la_check(const Generator& gen, double rho, const FunctionTable& f, double eta,
                           double t, double tol) {
  const auto& space = gen.space();
  require_on_space(space, f);
  if (!(eta > 0.0) || !(t > 0.0)) throw DomainError("lemma check needs eta > 0 and t > 0");
  const auto prof = influence_profile(space, f);
  require_lemma_normalization(space, prof);
  const auto sel = select_low_influence(prof, eta);
  const auto pt = gen.evolve(f, t);
  const double lhs = sq_norm(pt - average_out(pt, sel.T));
  const double rhs = prof.total * std::pow(eta, hyper_alpha(rho, t));
  return make_report("lemma-la", lhs, rhs, tol);
}

CheckReport bakry_check(const Generator& gen, const FunctionTable& f, double t, double tol) {
  require_on_space(gen.space(), f);
  if (!(t >= 0.0)) throw DomainError("bakry check needs t >= 0");
  const double lhs = t == 0.0 ? 0.0 : sq_norm(f - gen.evolve(f, t));
  const double rhs = t * energy(gen, f);
  return make_report("bakry", lhs, rhs, tol);
}

ChainReport theorem_chain_check(const Generator& gen, double rho, const FunctionTable& f,
                                double eta, double t, double tol) {
  const auto& space = gen.space();
  require_on_space(space, f);
  const auto prof = influence_profile(space, f);
  require_lemma_normalization(space, prof);
  const auto sel = select_low_influence(prof, eta);
  const auto pt = gen.evolve(f, t);
  const auto pif = average_out(f, sel.T);
  const auto pipt = average_out(pt, sel.T);
  ChainReport r;
  r.total = std::sqrt(sq_norm(f - pif));
  r.terms[0] = std::sqrt(sq_norm(f - pt));
  r.terms[1] = std::sqrt(sq_norm(pt - pipt));
  r.terms[2] = std::sqrt(sq_norm(pipt - pif));
  const double te = std::sqrt(t * energy(gen, f));
  r.bounds[0] = te;
  r.bounds[1] = std::sqrt(prof.total * std::pow(eta, hyper_alpha(rho, t)));
  r.bounds[2] = te;
  r.pass = r.total <= r.terms[0] + r.terms[1] + r.terms[2] + tol;
  for (int k = 0; k < 3; ++k) r.pass = r.pass && r.terms[k] <= r.bounds[k] + tol;
  return r;
}

CheckReport holder_check(std::span<const double> a, std::span<const double> b, double alpha,
                         double tol) {
  if (a.size() != b.size()) throw DimensionError("Hölder check needs equal-length vectors");
  double lhs = 0.0, sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    lhs += std::pow(a[i], 2.0 * alpha) * std::pow(b[i], 2.0 - 2.0 * alpha);
    sa += a[i] * a[i];
    sb += b[i] * b[i];
  }
  return make_report("holder", lhs, std::pow(sa, alpha) * std::pow(sb, 1.0 - alpha), tol);
}

double distance(const FunctionTable& f, const FunctionTable& g, ErrorNorm norm) {
  require_same_space(f, g);
  const auto mu = f.space().measure();
  double acc = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) {
    const double d = std::abs(f[x] - g[x]);
    acc += mu[x] * (norm == ErrorNorm::L2 ? d * d : d);
  }
  return norm == ErrorNorm::L2 ? std::sqrt(acc) : acc;
}

std::string serialize(const JuntaCertificate& c) {
  std::ostringstream os;
  os << "kept_set=[";
  for (std::size_t i = 0; i < c.kept_set.size(); ++i) os << (i ? "," : "") << c.kept_set[i] + 1;
  os << "]\n";
  os << "eta=" << fmt(c.eta) << "\n";
  os << "t=" << fmt(c.t) << "\n";
  os << "alpha=" << fmt(c.alpha) << "\n";
  os << "bound_la=" << fmt(c.bound_la) << "\n";
  os << "bound_bakry=" << fmt(c.bound_bakry) << "\n";
  os << "measured_error=" << fmt(c.measured_error) << "\n";
  os << "epsilon=" << fmt(c.epsilon) << "\n";
  os << "retries=" << c.retries << "\n";
  os << "log_eta=" << fmt(c.log_eta) << "\n";
  os << "scale=" << fmt(c.scale) << "\n";
  os << "norm=" << (c.norm == ErrorNorm::L2 ? "L2" : "L1") << "\n";
  os << "total_influence=" << fmt(c.total_influence) << "\n";
  os << "rho=" << fmt(c.rho) << "\n";
  if (!c.rho_source.empty()) os << "rho_source=" << c.rho_source << "\n";
  os << "kept_kind=" << c.kept_kind << "\n";
  if (!c.basis_path.empty()) os << "basis_path=" << c.basis_path << "\n";
  if (c.c != 0.0) os << "c=" << fmt(c.c) << "\n";
  os << "success=" << (c.success ? "true" : "false") << "\n";
  return os.str();
}

std::pair<FunctionTable, JuntaCertificate> extract_junta(const Generator& gen, double rho,
                                                         const FunctionTable& f, double epsilon,
                                                         ErrorNorm norm,
                                                         const ExtractOptions& options) {
  const auto& space = gen.space();
  require_on_space(space, f);
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0,1)");
  if (!(rho > 0.0)) throw DomainError("rho must be positive");
  JuntaCertificate cert;
  cert.epsilon = epsilon;
  cert.norm = norm;
  cert.rho = rho;
  cert.kept_kind = space.kind() == SpaceKind::Slice ? "vertices"
                   : coordinate_space(space)        ? "coordinates"
                                                    : "generators";
  const auto prof0 = influence_profile(space, f);
  if (all_equal(f.values()) || prof0.max_sup_norm() == 0.0) {
    cert.log_eta = -std::numeric_limits<double>::infinity();
    return {f, cert};
  }
  cert.scale = prof0.max_sup_norm();
  const auto fn = f.scaled(1.0 / cert.scale);
  const auto prof = influence_profile(space, fn);
  cert.total_influence = prof.total;
  const double i_sched = std::max(prof.total, 1.0);
  cert.t = epsilon * epsilon / (16.0 * i_sched);
  cert.alpha = hyper_alpha(rho, cert.t);
  cert.log_eta = std::log(epsilon / (2.0 * i_sched)) / cert.alpha;
  cert.bound_bakry = cert.t * energy(gen, fn);

  // Halving η only changes T when it crosses an influence value, so the loop
  // jumps straight to the next crossing and counts the halvings it skipped.
  const double log2 = std::log(2.0);
  for (;;) {
    const auto sel = select_low_influence_log(prof, cert.log_eta);
    auto g = average_out(f, sel.T);
    cert.measured_error = distance(f, g, norm);
    cert.kept_set = sel.kept;
    if (cert.measured_error <= epsilon) {
      cert.eta = std::exp(cert.log_eta);
      cert.bound_la = std::exp(std::log(prof.total) + cert.alpha * cert.log_eta);
      return {std::move(g), cert};
    }
    double next = -std::numeric_limits<double>::infinity();
    for (double e : prof.entries)
      if (e > kZeroInfluence && std::log(e) <= cert.log_eta) next = std::max(next, std::log(e));
    if (!std::isfinite(next)) {
      // Only zero-influence directions remain in T; nothing further to keep.
      cert.success = false;
      cert.eta = std::exp(cert.log_eta);
      throw BudgetExhaustedError("extraction cannot reach epsilon: error " +
                                     fmt(cert.measured_error) + " with T at the zero-influence set",
                                 cert.measured_error, std::vector<double>(g.values().begin(), g.values().end()));
    }
    const auto steps = static_cast<std::size_t>(std::floor((cert.log_eta - next) / log2)) + 1;
    cert.retries += steps;
    cert.log_eta -= static_cast<double>(steps) * log2;
    if (cert.retries > options.retry_budget) {
      throw BudgetExhaustedError("extraction exceeded the retry budget of " +
                                     std::to_string(options.retry_budget) + " halvings",
                                 cert.measured_error, std::vector<double>(g.values().begin(), g.values().end()));
    }
  }
}

FunctionTable boolean_round(const FunctionTable& g) {
  std::vector<double> v(g.size());
  for (std::size_t x = 0; x < v.size(); ++x) v[x] = g[x] >= 0.0 ? 1.0 : 0.0;
  return FunctionTable(g.space_ptr(), std::move(v));
}

DecayReport boolean_decay_check(const Generator& gen, double rho, const FunctionTable& f, double t,
                                double tol) {
  const auto& space = gen.space();
  require_on_space(space, f);
  if (!space.is_product()) throw StructureError("the Boolean decay check needs a product space");
  DecayReport r;
  r.beta = 2.0 / (1.0 + std::exp(-rho * t));
  const auto pt = gen.evolve(f, t);
  const auto mu = space.measure();
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    const auto li = coordinate_laplacian(f, i);
    for (double v : li.values()) {
      const double a = std::abs(v);
      if (a > 1e-9 && std::abs(a - 1.0) > 1e-9)
        throw ContractError("L_i f must take values in {-1, 0, 1}; found " + fmt(v));
    }
    const auto lpt = coordinate_laplacian(pt, i);
    DecayEntry e;
    e.lhs = inner_product(lpt, lpt);
    double inf = 0.0;
    for (std::size_t x = 0; x < li.size(); ++x) inf += mu[x] * std::abs(li[x]);
    e.rhs = inf == 0.0 ? 0.0 : std::pow(inf, r.beta);
    e.slack = e.rhs - e.lhs;
    if (e.slack < -tol) r.pass = false;
    r.entries.push_back(e);
  }
  return r;
}

}  // namespace juntakit
