#include "juntakit/slice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "juntakit/errors.hpp"
#include "juntakit/influence.hpp"

namespace juntakit {

namespace {

void require_slice(const MarkovSpace& s) {
  if (s.kind() != SpaceKind::Slice) throw StructureError(s.descriptor() + " is not a slice");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Bit i of the state mask holds coordinate i+1.
std::vector<std::vector<int>> state_bits(const MarkovSpace& space) {
  std::vector<std::vector<int>> bits(space.size());
  for (std::size_t x = 0; x < space.size(); ++x) bits[x] = space.coordinates(x);
  return bits;
}

// -L g computed from the moves of the space.
std::vector<double> neg_generator(const MarkovSpace& space, std::span<const double> g) {
  std::vector<double> out(g.size(), 0.0);
  for (const auto& mv : space.schreier().moves)
    for (std::size_t x = 0; x < g.size(); ++x) out[x] += mv.weight * (g[x] - g[mv.image[x]]);
  return out;
}

// Q_k g = Σ_{i<j≤k} (g - g∘τ_ij).
std::vector<double> prefix_operator(const MarkovSpace& space, std::span<const double> g,
                                    std::size_t k) {
  const std::size_t n = space.dimension();
  const auto& moves = space.schreier().moves;
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const auto& image = moves[transposition_index(n, i, j)].image;
      for (std::size_t x = 0; x < g.size(); ++x) out[x] += g[x] - g[image[x]];
    }
  return out;
}

double mean_dot(std::span<const double> a, std::span<const double> b, std::span<const double> mu) {
  double s = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x) s += mu[x] * a[x] * b[x];
  return s;
}

std::size_t prefix_count(const TopSet& b, std::size_t k) {
  std::size_t r = 0;
  for (auto e : b.elements)
    if (e <= k) ++r;
  return r;
}

// Σ over sequences a_1..a_d of distinct elements outside B with a_i < b_i of
// Π (x_{a_i} - x_{b_i}).
void explicit_vector(const TopSet& b, const std::vector<std::vector<int>>& bits, std::size_t level,
                     std::vector<char>& used, std::vector<double>& prod, std::vector<double>& acc) {
  if (level == b.elements.size()) {
    for (std::size_t x = 0; x < acc.size(); ++x) acc[x] += prod[x];
    return;
  }
  const std::size_t bi = b.elements[level];
  for (std::size_t a = 1; a < bi; ++a) {
    if (used[a]) continue;
    used[a] = 1;
    std::vector<double> next(prod.size());
    bool nonzero = false;
    for (std::size_t x = 0; x < prod.size(); ++x) {
      next[x] = prod[x] * static_cast<double>(bits[x][a - 1] - bits[x][bi - 1]);
      nonzero = nonzero || next[x] != 0.0;
    }
    if (nonzero) explicit_vector(b, bits, level + 1, used, next, acc);
    used[a] = 0;
  }
}

SliceBasis explicit_basis(const SpacePtr& space) {
  const std::size_t n = space->dimension();
  const std::size_t k = space->slice_weight();
  const auto bits = state_bits(*space);
  SliceBasis basis;
  basis.space = space;
  basis.path = "explicit";
  for (auto& b : top_sets(n, k)) {
    std::vector<char> used(n + 1, 0);
    for (auto e : b.elements) used[e] = 1;
    std::vector<double> prod(space->size(), 1.0), acc(space->size(), 0.0);
    explicit_vector(b, bits, 0, used, prod, acc);
    FunctionTable v(space, std::move(acc));
    const double nrm = inner_product(v, v);
    const double lam = eigenvalue_of(b, n);
    basis.elements.push_back(BasisElement{std::move(b), std::move(v), nrm, lam});
  }
  return basis;
}

SliceBasis joint_basis(const SpacePtr& space) {
  const std::size_t n = space->dimension();
  const std::size_t N = space->size();
  const auto Ni = static_cast<Eigen::Index>(N);
  SliceBasis basis;
  basis.space = space;
  basis.path = "joint-diagonalization";
  // Dense Q_k for k = 2..n, and a generic combination with distinct weights.
  std::vector<Eigen::MatrixXd> q(n + 1);
  Eigen::MatrixXd combo = Eigen::MatrixXd::Zero(Ni, Ni);
  for (std::size_t k = 2; k <= n; ++k) {
    q[k] = Eigen::MatrixXd::Zero(Ni, Ni);
    std::vector<double> e(N, 0.0);
    for (std::size_t y = 0; y < N; ++y) {
      e.assign(N, 0.0);
      e[y] = 1.0;
      const auto col = prefix_operator(*space, e, k);
      for (std::size_t x = 0; x < N; ++x) q[k](static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = col[x];
    }
    combo += std::sqrt(static_cast<double>(2 * k + 1)) * std::pow(1.37, static_cast<double>(k)) * q[k];
  }
  combo = 0.5 * (combo + combo.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(combo);
  if (es.info() != Eigen::Success) throw BasisConstructionError("eigensolver failed");
  const double scale = std::sqrt(static_cast<double>(N));  // unit norm under the uniform measure
  for (Eigen::Index c = 0; c < Ni; ++c) {
    Eigen::VectorXd v = es.eigenvectors().col(c) * scale;
    // Read off r_k = |B ∩ [k]| from the Rayleigh quotient r(k+1-r) of Q_k.
    TopSet b;
    std::size_t prev = 0;
    for (std::size_t k = 2; k <= n; ++k) {
      const double val = v.dot(q[k] * v) / v.squaredNorm();
      const double kk = static_cast<double>(k + 1);
      const double disc = std::max(0.0, kk * kk - 4.0 * val);
      const double r = (kk - std::sqrt(disc)) / 2.0;
      const auto ri = static_cast<std::size_t>(std::llround(r));
      if (std::abs(r - static_cast<double>(ri)) > 1e-6 || ri < prev || ri > prev + 1)
        throw BasisConstructionError("joint eigenspaces are not separated at prefix " + std::to_string(k));
      if (ri == prev + 1) b.elements.push_back(k);
      prev = ri;
    }
    // Deterministic sign: first entry of magnitude above 1e-9 is positive.
    for (Eigen::Index x = 0; x < Ni; ++x)
      if (std::abs(v[x]) > 1e-9) {
        if (v[x] < 0) v = -v;
        break;
      }
    FunctionTable vec(space, std::vector<double>(v.data(), v.data() + Ni));
    const double nrm = inner_product(vec, vec);
    const double lam = eigenvalue_of(b, n);
    basis.elements.push_back(BasisElement{std::move(b), std::move(vec), nrm, lam});
  }
  std::stable_sort(basis.elements.begin(), basis.elements.end(),
                   [](const BasisElement& a, const BasisElement& b) {
                     if (a.top.degree() != b.top.degree()) return a.top.degree() < b.top.degree();
                     return a.top.elements < b.top.elements;
                   });
  return basis;
}

}  // namespace

std::string TopSet::label() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < elements.size(); ++i) os << (i ? " " : "") << elements[i];
  os << '}';
  return os.str();
}

bool operator==(const TopSet& a, const TopSet& b) { return a.elements == b.elements; }

bool is_top_set(const TopSet& b, std::size_t n, std::size_t k) {
  if (b.degree() > std::min(k, n - k)) return false;
  for (std::size_t i = 0; i < b.elements.size(); ++i) {
    if (b.elements[i] > n || b.elements[i] < 2 * (i + 1)) return false;
    if (i > 0 && b.elements[i] <= b.elements[i - 1]) return false;
  }
  return true;
}

std::vector<TopSet> top_sets(std::size_t n, std::size_t k) {
  std::vector<TopSet> out;
  const std::size_t dmax = std::min(k, n - k);
  for (std::size_t d = 0; d <= dmax; ++d) {
    // Lexicographic enumeration of increasing sequences with b_i ≥ 2i.
    std::vector<std::size_t> cur;
    auto rec = [&](auto&& self, std::size_t i, std::size_t lo) -> void {
      if (i == d) {
        out.push_back(TopSet{cur});
        return;
      }
      for (std::size_t v = std::max(lo, 2 * (i + 1)); v <= n; ++v) {
        cur.push_back(v);
        self(self, i + 1, v + 1);
        cur.pop_back();
      }
    };
    rec(rec, 0, 1);
  }
  return out;
}

double eigenvalue_of_degree(std::size_t d, std::size_t n) {
  const auto dd = static_cast<double>(d);
  const auto nn = static_cast<double>(n);
  return 2.0 * dd * (nn + 1.0 - dd) / (nn * (nn - 1.0));
}

double eigenvalue_of(const TopSet& b, std::size_t n) { return eigenvalue_of_degree(b.degree(), n); }

std::vector<double> predicted_slice_spectrum(std::size_t n, std::size_t k) {
  std::vector<double> out;
  for (std::size_t r = 0; r <= std::min(k, n - k); ++r) {
    const std::uint64_t mult = binomial(n, r) - (r ? binomial(n, r - 1) : 0);
    out.insert(out.end(), mult, eigenvalue_of_degree(r, n));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string validate_basis(const SliceBasis& basis) {
  const auto& space = *basis.space;
  const std::size_t n = space.dimension();
  const auto mu = space.measure();
  const auto& el = basis.elements;
  if (el.size() != space.size())
    return "completeness: " + std::to_string(el.size()) + " vectors for " +
           std::to_string(space.size()) + " states";
  for (const auto& e : el) {
    if (!is_top_set(e.top, n, space.slice_weight())) return "top set " + e.top.label() + " is not admissible";
    if (!(e.squared_norm > 1e-12)) return "vector " + e.top.label() + " vanishes";
  }
  if (!el.empty() && (el[0].top.degree() != 0 || std::abs(el[0].squared_norm - 1.0) > 1e-12))
    return "the empty top set must carry the constant 1";
  for (const auto& e : el) {
    const double nrm = std::sqrt(e.squared_norm);
    const auto lg = neg_generator(space, e.vector.values());
    double res = 0.0;
    for (std::size_t x = 0; x < lg.size(); ++x) {
      const double d = lg[x] - e.eigenvalue * e.vector[x];
      res += mu[x] * d * d;
    }
    if (std::sqrt(res) > 1e-9 * nrm) return "eigenvalue identity fails for " + e.top.label();
    for (std::size_t k = 2; k <= n; ++k) {
      const double r = static_cast<double>(prefix_count(e.top, k));
      const double want = r * (static_cast<double>(k) + 1.0 - r);
      const auto qv = prefix_operator(space, e.vector.values(), k);
      double rq = 0.0;
      for (std::size_t x = 0; x < qv.size(); ++x) {
        const double d = qv[x] - want * e.vector[x];
        rq += mu[x] * d * d;
      }
      if (std::sqrt(rq) > 1e-9 * nrm)
        return "prefix eigen-relation fails for " + e.top.label() + " at k=" + std::to_string(k);
    }
  }
  for (std::size_t a = 0; a < el.size(); ++a)
    for (std::size_t b = a + 1; b < el.size(); ++b) {
      const double ip = mean_dot(el[a].vector.values(), el[b].vector.values(), mu);
      if (std::abs(ip) > 1e-9 * std::sqrt(el[a].squared_norm * el[b].squared_norm))
        return "orthogonality fails for " + el[a].top.label() + " and " + el[b].top.label();
    }
  return {};
}

SliceBasis build_basis(SpacePtr slice, BasisMethod method) {
  require_slice(*slice);
  std::string failure;
  if (method != BasisMethod::JointDiagonalization) {
    auto b = explicit_basis(slice);
    failure = validate_basis(b);
    if (failure.empty()) return b;
    if (method == BasisMethod::Explicit) throw BasisConstructionError("explicit basis: " + failure);
  }
  auto b = joint_basis(slice);
  const auto jd = validate_basis(b);
  if (jd.empty()) return b;
  throw BasisConstructionError((failure.empty() ? "" : "explicit basis: " + failure + "; ") +
                               "joint diagonalization: " + jd);
}

SliceBasis build_basis(std::size_t n, std::size_t k, BasisMethod method) {
  return build_basis(build_slice(n, k), method);
}

std::vector<double> fourier_expand(const SliceBasis& basis, const FunctionTable& f) {
  require_on_space(*basis.space, f);
  std::vector<double> c;
  c.reserve(basis.elements.size());
  for (const auto& e : basis.elements) c.push_back(inner_product(f, e.vector) / e.squared_norm);
  return c;
}

FunctionTable fourier_synthesize(const SliceBasis& basis, std::span<const double> coefficients) {
  if (coefficients.size() != basis.elements.size())
    throw DimensionError("coefficient count does not match the basis");
  std::vector<double> v(basis.space->size(), 0.0);
  for (std::size_t b = 0; b < coefficients.size(); ++b) {
    const auto& vec = basis.elements[b].vector;
    for (std::size_t x = 0; x < v.size(); ++x) v[x] += coefficients[b] * vec[x];
  }
  return FunctionTable(basis.space, std::move(v));
}

IdentityReport influence_identity_check(const SliceBasis& basis, const FunctionTable& f,
                                        std::size_t k_prefix) {
  const auto& space = *basis.space;
  if (k_prefix < 1 || k_prefix > space.dimension()) throw DomainError("prefix size k must lie in [1, n]");
  IdentityReport r;
  r.combinatorial = slice_quadratic_influence(space, f, k_prefix);
  const auto c = fourier_expand(basis, f);
  const double k = static_cast<double>(k_prefix);
  for (std::size_t b = 0; b < c.size(); ++b) {
    const double rr = static_cast<double>(prefix_count(basis.elements[b].top, k_prefix));
    r.spectral += rr * (k + 1.0 - rr) / k * c[b] * c[b] * basis.elements[b].squared_norm;
  }
  r.error = std::abs(r.combinatorial - r.spectral);
  return r;
}

FunctionTable rescaled_evolve(const Generator& gen, const FunctionTable& f, double t) {
  require_slice(gen.space());
  if (!(t >= 0.0)) throw DomainError("evolution time must be t >= 0");
  const double n = static_cast<double>(gen.space().dimension());
  return gen.evolve(f, (n - 1.0) * t / 2.0);
}

LowDegreeDecayReport low_degree_decay_check(const SliceBasis& basis, const Generator& gen,
                                      const FunctionTable& f, double t, std::size_t m, double tol) {
  const auto& space = gen.space();
  require_slice(space);
  require_on_space(*basis.space, f);
  const std::size_t n = space.dimension();
  if (m >= n) throw DomainError("m must be smaller than n");
  const std::size_t k = n - m;
  LowDegreeDecayReport r;
  const auto c = fourier_expand(basis, f);
  for (std::size_t b = 0; b < c.size(); ++b) {
    const auto& e = basis.elements[b];
    if (prefix_count(e.top, k) == 0) continue;
    const double d = static_cast<double>(e.top.degree());
    const double cb = d * (static_cast<double>(n) + 1.0 - d) / static_cast<double>(n);
    r.lhs_basis += std::exp(-2.0 * t * cb) * c[b] * c[b] * e.squared_norm;
  }
  const auto h = rescaled_evolve(gen, f, t);
  std::vector<std::size_t> T;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) T.push_back(transposition_index(n, i, j));
  const auto diff = h - average_out(h, T);
  r.lhs_direct = inner_product(diff, diff);
  r.rhs = slice_quadratic_influence(space, h, k);
  r.slack = r.rhs - r.lhs_basis;
  r.pass = r.slack >= -tol && std::abs(r.lhs_basis - r.lhs_direct) <= 1e-9 * std::max(1.0, r.lhs_direct);
  return r;
}

CheckReport slice_hyper_step_check(const Generator& gen, double rho, const FunctionTable& f,
                                   double t, double tol) {
  const auto& space = gen.space();
  require_slice(space);
  const double n = static_cast<double>(space.dimension());
  const double rho_h = (n - 1.0) * rho / 2.0;
  const double p = 1.0 + std::exp(-2.0 * rho_h * t);
  const auto h = rescaled_evolve(gen, f, t);
  CheckReport worst = make_report("slice-hyper", 0.0, 0.0, tol);
  bool first = true;
  for (std::size_t s = 0; s < space.schreier().moves.size(); ++s) {
    const auto dh = move_difference(h, s);
    const auto df = move_difference(f, s);
    const double lhs = inner_product(dh, dh);
    const double nf = lp_norm(space, df, p);
    auto rep = make_report("slice-hyper", lhs, nf * nf, tol);
    if (first || rep.slack < worst.slack) worst = rep;
    first = false;
  }
  return worst;
}

SliceExtraction slice_extract_junta(const Generator& gen, double rho, const FunctionTable& f,
                                    double epsilon, const ExtractOptions& options,
                                    const std::string& basis_path) {
  const auto& space = gen.space();
  require_slice(space);
  require_on_space(space, f);
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0,1)");
  if (!(rho > 0.0)) throw DomainError("rho must be positive");
  const std::size_t n = space.dimension();
  SliceExtraction out{f, {}, 0.0, 0.0, true};
  auto& cert = out.certificate;
  cert.epsilon = epsilon;
  cert.rho = rho;
  cert.kept_kind = "vertices";
  cert.basis_path = basis_path;
  const auto prof0 = influence_profile(space, f);
  if (prof0.max_sup_norm() == 0.0) {
    cert.log_eta = -std::numeric_limits<double>::infinity();
    return out;
  }
  cert.scale = prof0.max_sup_norm();
  const auto fn = f.scaled(1.0 / cert.scale);
  const auto prof = influence_profile(space, fn);
  cert.total_influence = prof.total;
  const double i_sched = std::max(prof.total, 1.0);
  cert.t = epsilon / (2.0 * i_sched);
  const double rho_h = (static_cast<double>(n) - 1.0) * rho / 2.0;
  cert.alpha = hyper_alpha(rho_h, cert.t);
  cert.c = cert.alpha / (2.0 * epsilon);
  // η^{cε} = ε / (4 I).
  cert.log_eta = std::log(epsilon / (4.0 * i_sched)) / (cert.c * epsilon);
  cert.bound_bakry = cert.t * prof.total;
  const double log2 = std::log(2.0);
  for (;;) {
    const auto sel = select_low_influence_log(prof, cert.log_eta);
    auto g = average_out(f, sel.T);
    cert.measured_error = distance(f, g, ErrorNorm::L2);
    cert.kept_set = sel.kept;
    if (cert.measured_error <= epsilon) {
      cert.eta = std::exp(cert.log_eta);
      const std::size_t m = sel.kept.size();
      const auto gn = average_out(fn, sel.T);
      const auto d = fn - gn;
      out.normalized_sq_error = inner_product(d, d);
      if (m < n) {
        cert.bound_la = static_cast<double>(n) / static_cast<double>(n - m) *
                        std::exp(cert.alpha * cert.log_eta) * prof.total;
        out.proven_bound = cert.bound_bakry + cert.bound_la;
      } else {
        cert.bound_la = std::numeric_limits<double>::infinity();
        out.proven_bound = std::numeric_limits<double>::infinity();
      }
      out.bound_holds = out.normalized_sq_error <= out.proven_bound + 1e-9;
      out.g = std::move(g);
      return out;
    }
    double next = -std::numeric_limits<double>::infinity();
    for (double e : prof.entries)
      if (e > kZeroInfluence && std::log(e) <= cert.log_eta) next = std::max(next, std::log(e));
    if (!std::isfinite(next))
      throw BudgetExhaustedError("slice extraction cannot reach epsilon", cert.measured_error,
                                 std::vector<double>(g.values().begin(), g.values().end()));
    const auto steps = static_cast<std::size_t>(std::floor((cert.log_eta - next) / log2)) + 1;
    cert.retries += steps;
    cert.log_eta -= static_cast<double>(steps) * log2;
    if (cert.retries > options.retry_budget)
      throw BudgetExhaustedError("slice extraction exceeded the retry budget", cert.measured_error,
                                 std::vector<double>(g.values().begin(), g.values().end()));
  }
}

LeeYauReport lee_yau_report(std::size_t n, std::size_t k, double rho) {
  if (k < 1 || k >= n) throw DomainError("k must lie in [1, n-1]");
  LeeYauReport r;
  const double nn = static_cast<double>(n);
  const double kk = static_cast<double>(k);
  r.omega = nn * nn / (kk * (nn - kk));
  r.ratio = rho * nn * std::log(r.omega);
  return r;
}

std::string export_basis(const SliceBasis& basis) {
  std::ostringstream os;
  os << "# path=" << basis.path << " space=" << basis.space->descriptor() << "\n";
  os << "top_set,eigenvalue,squared_norm,values\n";
  for (const auto& e : basis.elements) {
    os << e.top.label() << ',' << fmt(e.eigenvalue) << ',' << fmt(e.squared_norm) << ',';
    for (std::size_t x = 0; x < e.vector.size(); ++x) os << (x ? " " : "") << fmt(e.vector[x]);
    os << "\n";
  }
  return os.str();
}

}  // namespace juntakit
