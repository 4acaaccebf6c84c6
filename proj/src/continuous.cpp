#include "juntakit/continuous.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include "juntakit/detail/tensor.hpp"
#include "juntakit/errors.hpp"

namespace juntakit {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Poisson-weighted series Σ_k p_k(qt) (I + L/q)^k f for a birth-death chain.
std::vector<double> uniformize(const std::vector<double>& up, const std::vector<double>& down,
                               std::span<const double> f, double t) {
  const std::size_t n = f.size();
  std::vector<double> out(f.begin(), f.end());
  if (t == 0.0 || n < 2) return out;
  double q = 0.0;
  for (std::size_t j = 0; j < n; ++j) q = std::max(q, up[j] + down[j]);
  if (q == 0.0) return out;
  const double lam = q * t;
  const auto kmax = static_cast<std::size_t>(lam + 12.0 * std::sqrt(lam) + 40.0);
  std::vector<double> cur(f.begin(), f.end()), next(n);
  std::fill(out.begin(), out.end(), 0.0);
  const double loglam = std::log(lam);
  for (std::size_t k = 0; k <= kmax; ++k) {
    const double lw = -lam + static_cast<double>(k) * loglam - std::lgamma(static_cast<double>(k) + 1.0);
    const double wk = std::exp(lw);
    if (wk > 0.0)
      for (std::size_t j = 0; j < n; ++j) out[j] += wk * cur[j];
    if (k == kmax) break;
    for (std::size_t j = 0; j < n; ++j) {
      double lv = 0.0;
      if (j + 1 < n) lv += up[j] * (cur[j + 1] - cur[j]);
      if (j > 0) lv += down[j] * (cur[j - 1] - cur[j]);
      next[j] = cur[j] + lv / q;
    }
    cur.swap(next);
  }
  return out;
}

Eigen::MatrixXd uniformized_matrix(const std::vector<double>& up, const std::vector<double>& down,
                                   double t) {
  const std::size_t n = up.size();
  Eigen::MatrixXd m(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const auto col = uniformize(up, down, e, t);
    for (std::size_t i = 0; i < n; ++i) m(i, j) = col[i];
    e[j] = 0.0;
  }
  return m;
}

// Outward search for v(x) - v(x*) ≥ level, clipped to the domain.
double extent_point(const Potential& p, double vstar, double level, double dir) {
  const double bound = dir > 0 ? p.hi : p.lo;
  auto gap = [&](double x) { return p.v(x) - vstar; };
  double inside = p.minimizer;
  double step = 1.0;
  double outside = p.minimizer + dir * step;
  for (int it = 0; it < 200; ++it) {
    if (dir > 0 ? outside >= bound : outside <= bound) {
      if (gap(bound) < level) return bound;
      outside = bound;
      break;
    }
    if (gap(outside) >= level) break;
    inside = outside;
    step *= 2.0;
    outside = p.minimizer + dir * step;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (inside + outside);
    if (mid == inside || mid == outside) break;
    (gap(mid) >= level ? outside : inside) = mid;
  }
  return outside;
}

}  // namespace

Potential gaussian_potential() {
  Potential p;
  p.name = "gaussian";
  p.v = [](double x) { return 0.5 * x * x; };
  p.dv = [](double x) { return x; };
  p.d2v = [](double) { return 1.0; };
  p.kappa = 1.0;
  return p;
}

Potential boltzmann_potential(double p) {
  if (!(p >= 2.0))
    throw DomainError("boltzmann potentials need p >= 2: hypercontractivity fails for p in [1,2)");
  Potential pot;
  pot.name = "boltzmann:" + fmt(p);
  pot.v = [p](double x) { return std::pow(std::abs(x), p); };
  pot.dv = [p](double x) {
    const double a = std::abs(x);
    return a == 0.0 ? 0.0 : std::copysign(p * std::pow(a, p - 1.0), x);
  };
  pot.d2v = [p](double x) {
    const double a = std::abs(x);
    if (p == 2.0) return 2.0;
    return a == 0.0 ? 0.0 : p * (p - 1.0) * std::pow(a, p - 2.0);
  };
  pot.kappa = p == 2.0 ? 2.0 : 0.0;
  pot.cusp_at_zero = p > 2.0 && p < 3.0;
  return pot;
}

Potential quartic_potential(double a, double b) {
  if (!(a > 0.0)) throw DomainError("quartic potential needs a > 0");
  Potential p;
  p.name = "quartic:" + fmt(a) + "," + fmt(b);
  p.v = [a, b](double x) { return a * x * x * x * x - b * x * x; };
  p.dv = [a, b](double x) { return 4.0 * a * x * x * x - 2.0 * b * x; };
  p.d2v = [a, b](double x) { return 12.0 * a * x * x - 2.0 * b; };
  p.kappa = -2.0 * b;
  p.minimizer = b > 0.0 ? std::sqrt(b / (2.0 * a)) : 0.0;
  return p;
}

Potential tabulated_potential(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open potential table " + path);
  struct Row {
    double x, v, dv, d2v;
  };
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Row r{};
    if (ls >> r.x >> r.v >> r.dv >> r.d2v) rows.push_back(r);
  }
  if (rows.size() < 2) throw DomainError("potential table " + path + " needs at least two rows");
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].x > rows[i - 1].x))
      throw DomainError("potential table " + path + " must have increasing x");
  auto table = std::make_shared<std::vector<Row>>(std::move(rows));
  auto locate = [table](double x) {
    const auto& t = *table;
    auto it = std::upper_bound(t.begin(), t.end(), x, [](double a, const Row& r) { return a < r.x; });
    std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    return std::min(i, t.size() - 2);
  };
  Potential p;
  p.name = "file:" + path;
  p.v = [table, locate](double x) {
    const auto i = locate(x);
    const auto& a = (*table)[i];
    const auto& b = (*table)[i + 1];
    const double d = b.x - a.x, s = (x - a.x) / d;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * a.v + (s3 - 2 * s2 + s) * d * a.dv + (-2 * s3 + 3 * s2) * b.v +
           (s3 - s2) * d * b.dv;
  };
  p.dv = [table, locate](double x) {
    const auto i = locate(x);
    const auto& a = (*table)[i];
    const auto& b = (*table)[i + 1];
    const double d = b.x - a.x, s = (x - a.x) / d;
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) * a.v + (-6 * s2 + 6 * s) * b.v) / d + (3 * s2 - 4 * s + 1) * a.dv +
           (3 * s2 - 2 * s) * b.dv;
  };
  p.d2v = [table, locate](double x) {
    const auto i = locate(x);
    const auto& a = (*table)[i];
    const auto& b = (*table)[i + 1];
    const double s = std::clamp((x - a.x) / (b.x - a.x), 0.0, 1.0);
    return (1 - s) * a.d2v + s * b.d2v;
  };
  double kappa = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < table->size(); ++i) {
    kappa = std::min(kappa, (*table)[i].d2v);
    if ((*table)[i].v < (*table)[arg].v) arg = i;
  }
  p.kappa = kappa;
  p.minimizer = (*table)[arg].x;
  p.lo = table->front().x;
  p.hi = table->back().x;
  return p;
}

Potential parse_potential(const std::string& descriptor) {
  if (descriptor == "gaussian") return gaussian_potential();
  const auto colon = descriptor.find(':');
  if (colon == std::string::npos) throw DomainError("unknown potential '" + descriptor + "'");
  const auto head = descriptor.substr(0, colon);
  const auto rest = descriptor.substr(colon + 1);
  try {
    if (head == "boltzmann") return boltzmann_potential(std::stod(rest));
    if (head == "quartic") {
      const auto comma = rest.find(',');
      if (comma == std::string::npos) throw DomainError("quartic potential needs 'quartic:a,b'");
      return quartic_potential(std::stod(rest.substr(0, comma)), std::stod(rest.substr(comma + 1)));
    }
  } catch (const std::invalid_argument&) {
    throw DomainError("malformed potential '" + descriptor + "'");
  }
  if (head == "file") return tabulated_potential(rest);
  throw DomainError("unknown potential '" + descriptor + "'");
}

struct LineModel::Cache {
  std::once_flag once;
  SpectralData spectrum;
  std::once_flag fine_once;
  std::unique_ptr<LineModel> fine;
};

LineModel::LineModel(Potential potential, const LineOptions& options)
    : pot_(std::move(potential)), opts_(options), cache_(std::make_shared<Cache>()) {
  const std::size_t n = opts_.nodes;
  if (n < 3) throw DomainError("a line model needs at least 3 nodes");
  if (!(opts_.extent > 0.0)) throw DomainError("grid extent must be positive");
  fast_ = pot_.name == "gaussian" ? FastPath::ExactGaussianHermite : FastPath::GridOnly;
  const double vstar = pot_.v(pot_.minimizer);
  const double lo = extent_point(pot_, vstar, opts_.extent, -1.0);
  const double hi = extent_point(pot_, vstar, opts_.extent, +1.0);
  const double centre = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  const double denom = static_cast<double>(n - 1);
  x_.resize(n);
  for (std::size_t j = 0; j < n; ++j)
    x_[j] = centre + half * (2.0 * static_cast<double>(j) - denom) / denom;
  h_ = (hi - lo) / denom;

  for (std::size_t j = 0; j < n; ++j) {
    double c = pot_.d2v(x_[j]);
    if (pot_.cusp_at_zero && std::abs(x_[j]) < h_)
      c = (pot_.v(x_[j] + h_) - 2.0 * pot_.v(x_[j]) + pot_.v(x_[j] - h_)) / (h_ * h_);
    if (c < pot_.kappa - 1e-9 * (1.0 + std::abs(pot_.kappa)))
      throw ContractError("convexity bound v'' >= " + fmt(pot_.kappa) + " fails at x = " + fmt(x_[j]) +
                          " (v'' = " + fmt(c) + ")");
  }

  std::vector<double> u(n), um(n - 1);
  for (std::size_t j = 0; j < n; ++j) u[j] = std::exp(-(pot_.v(x_[j]) - vstar));
  for (std::size_t j = 0; j + 1 < n; ++j) um[j] = std::exp(-(pot_.v(0.5 * (x_[j] + x_[j + 1])) - vstar));
  double z = 0.0;
  for (double a : u) z += h_ * a;
  w_.resize(n);
  pi_.resize(n - 1);
  for (std::size_t j = 0; j < n; ++j) w_[j] = h_ * u[j] / z;
  for (std::size_t j = 0; j + 1 < n; ++j) pi_[j] = h_ * um[j] / z;
  z_ = z * std::exp(-vstar);

  up_.assign(n, 0.0);
  down_.assign(n, 0.0);
  const double h2 = h_ * h_;
  for (std::size_t j = 0; j + 1 < n; ++j) up_[j] = um[j] / (u[j] * h2);
  for (std::size_t j = 1; j < n; ++j) down_[j] = um[j - 1] / (u[j] * h2);

  auto tail = [&](double edge, double dir) {
    const double slope = dir * pot_.dv(edge);
    const double mass = std::exp(-(pot_.v(edge) - vstar));
    if (slope <= 0.0) return std::numeric_limits<double>::infinity();
    return mass / slope;
  };
  const double a_end = x_.front() - 0.5 * h_, b_end = x_.back() + 0.5 * h_;
  tail_ = (tail(std::max(a_end, pot_.lo), -1.0) + tail(std::min(b_end, pot_.hi), +1.0)) / z;
  if (!(tail_ < 1e-10))
    throw ExtentError("grid [" + fmt(lo) + ", " + fmt(hi) + "] misses an estimated mass of " + fmt(tail_) +
                      "; enlarge the grid or the table range");
}

double LineModel::density(double x) const { return std::exp(-pot_.v(x)) / z_; }

std::vector<double> LineModel::apply(std::span<const double> f) const {
  if (f.size() != size()) throw DimensionError("function length does not match the grid");
  const std::size_t n = size();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j + 1 < n) out[j] += up_[j] * (f[j + 1] - f[j]);
    if (j > 0) out[j] += down_[j] * (f[j - 1] - f[j]);
  }
  return out;
}

const SpectralData& LineModel::spectrum() const {
  std::call_once(cache_->once, [this] {
    const std::size_t n = size();
    Eigen::VectorXd diag(n), sub(n - 1);
    for (std::size_t j = 0; j < n; ++j) diag(j) = up_[j] + down_[j];
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const double wij = std::sqrt(w_[j]) * std::sqrt(w_[j + 1]);
      sub(j) = -pi_[j] / (h_ * h_ * wij);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    cache_->spectrum.eigenvalues = es.eigenvalues();
    cache_->spectrum.vectors = es.eigenvectors();
    for (std::size_t j = 0; j < n; ++j) cache_->spectrum.vectors.row(j) /= std::sqrt(w_[j]);
  });
  return cache_->spectrum;
}

Eigen::MatrixXd LineModel::evolution_matrix(double t) const {
  if (t < 0.0) throw DomainError("t must be nonnegative");
  return uniformized_matrix(up_, down_, t);
}

Eigen::MatrixXd LineModel::edge_evolution_matrix(double t) const {
  if (t < 0.0) throw DomainError("t must be nonnegative");
  const std::size_t m = size() - 1;
  std::vector<double> up(m, 0.0), down(m, 0.0);
  for (std::size_t e = 0; e < m; ++e) {
    up[e] = e + 1 < m ? up_[e + 1] : 0.0;
    down[e] = e > 0 ? down_[e] : 0.0;
  }
  return uniformized_matrix(up, down, t);
}

double LineModel::detailed_balance_error() const {
  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < size(); ++j) {
    const double a = w_[j] * up_[j], b = w_[j + 1] * down_[j + 1];
    worst = std::max(worst, std::abs(a - b) / std::max(a, b));
  }
  return worst;
}

LinePtr build_line_model(Potential potential, const LineOptions& options) {
  return std::make_shared<const LineModel>(std::move(potential), options);
}

LinePtr boltzmann_model(double p, std::size_t nodes, double extent) {
  LineOptions o;
  o.nodes = nodes;
  o.extent = extent;
  return build_line_model(boltzmann_potential(p), o);
}

double generator_consistency_error(const LineModel& model) {
  const auto& x = model.nodes();
  const auto& pot = model.potential();
  const double vstar = pot.v(pot.minimizer);
  struct Test {
    double (*f)(double);
    double (*d1)(double);
    double (*d2)(double);
  };
  const Test tests[] = {
      {[](double y) { return y; }, [](double) { return 1.0; }, [](double) { return 0.0; }},
      {[](double y) { return std::sin(y); }, [](double y) { return std::cos(y); },
       [](double y) { return -std::sin(y); }},
      {[](double y) { return std::exp(-y * y / 4); }, [](double y) { return -0.5 * y * std::exp(-y * y / 4); },
       [](double y) { return (0.25 * y * y - 0.5) * std::exp(-y * y / 4); }},
  };
  double worst = 0.0;
  for (const auto& test : tests) {
    std::vector<double> f(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) f[j] = test.f(x[j]);
    const auto lf = model.apply(f);
    for (std::size_t j = 1; j + 1 < x.size(); ++j) {
      if (pot.v(x[j]) - vstar > 10.0) continue;
      const double exact = test.d2(x[j]) - pot.dv(x[j]) * test.d1(x[j]);
      worst = std::max(worst, std::abs(lf[j] - exact));
    }
  }
  return worst;
}

std::vector<double> evolve_line(const LineModel& model, std::span<const double> f, double t) {
  if (t < 0.0) throw DomainError("t must be nonnegative");
  if (f.size() != model.size()) throw DimensionError("function length does not match the grid");
  return uniformize(model.up_rates(), model.down_rates(), f, t);
}

const LineModel& refined(const LineModel& model) {
  std::call_once(model.cache_->fine_once, [&model] {
    auto o = model.opts_;
    o.nodes = 2 * model.size() - 1;
    model.cache_->fine = std::make_unique<LineModel>(model.pot_, o);
  });
  return *model.cache_->fine;
}

std::vector<double> evolve_line(const LineModel& model, const std::function<double(double)>& f, double t) {
  if (t < 0.0) throw DomainError("t must be nonnegative");
  const auto& fine = refined(model);
  std::vector<double> coarse(model.size()), dense(fine.size());
  for (std::size_t j = 0; j < coarse.size(); ++j) coarse[j] = f(model.nodes()[j]);
  for (std::size_t j = 0; j < dense.size(); ++j) dense[j] = f(fine.nodes()[j]);
  const auto a = evolve_line(model, coarse, t);
  const auto b = evolve_line(fine, dense, t);
  std::vector<double> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = (4.0 * b[2 * j] - a[j]) / 3.0;
  return out;
}

std::vector<double> hermite_evolve(const LineModel& model, std::span<const double> f, double t,
                                   std::size_t degree) {
  if (model.fast_path() != FastPath::ExactGaussianHermite)
    throw StructureError("the Hermite path needs the standard Gaussian potential");
  if (t < 0.0) throw DomainError("t must be nonnegative");
  if (f.size() != model.size()) throw DimensionError("function length does not match the grid");
  const auto& x = model.nodes();
  const auto& w = model.weights();
  const std::size_t n = x.size();
  std::vector<std::vector<double>> he(degree + 1, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    he[0][j] = 1.0;
    if (degree >= 1) he[1][j] = x[j];
    for (std::size_t k = 1; k < degree; ++k)
      he[k + 1][j] = x[j] * he[k][j] - static_cast<double>(k) * he[k - 1][j];
  }
  std::vector<double> out(n, 0.0);
  double fact = 1.0;
  for (std::size_t k = 0; k <= degree; ++k) {
    if (k > 0) fact *= static_cast<double>(k);
    double c = 0.0;
    for (std::size_t j = 0; j < n; ++j) c += w[j] * f[j] * he[k][j];
    c /= fact;
    const double decay = std::exp(-static_cast<double>(k) * t);
    for (std::size_t j = 0; j < n; ++j) out[j] += c * decay * he[k][j];
  }
  return out;
}

// ProductLine

ProductLine::ProductLine(LinePtr model, std::size_t n, std::size_t state_budget)
    : model_(std::move(model)), n_(n) {
  if (!model_) throw DomainError("null line model");
  if (n == 0) throw DomainError("a product needs at least one factor");
  const std::size_t m = model_->size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (total > state_budget / m)
      throw CapacityError("product grid " + std::to_string(m) + "^" + std::to_string(n) +
                          " exceeds the state budget " + std::to_string(state_budget));
    total *= m;
  }
  shape_.assign(n, m);
  std::vector<std::span<const double>> fw(n, std::span<const double>(model_->weights()));
  w_ = detail::product_weights(shape_, fw);
}

std::vector<double> ProductLine::point(std::size_t index) const {
  std::vector<double> p(n_);
  const auto& x = model_->nodes();
  const std::size_t m = x.size();
  for (std::size_t i = 0; i < n_; ++i) {
    p[i] = x[index % m];
    index /= m;
  }
  return p;
}

std::vector<double> ProductLine::tabulate(
    const std::function<double(std::span<const double>)>& fn) const {
  std::vector<double> out(size());
  for (std::size_t s = 0; s < out.size(); ++s) {
    const auto p = point(s);
    out[s] = fn(p);
    if (!std::isfinite(out[s])) throw DomainError("function value is not finite");
  }
  return out;
}

std::vector<double> ProductLine::evolve(std::span<const double> f, double t) const {
  if (t < 0.0) throw DomainError("t must be nonnegative");
  if (f.size() != size()) throw DimensionError("function length does not match the product grid");
  std::vector<double> out(f.begin(), f.end());
  if (t == 0.0) return out;
  const auto m = model_->evolution_matrix(t);
  for (std::size_t i = 0; i < n_; ++i) detail::apply_along_axis(out, shape_, i, m);
  return out;
}

std::vector<double> ProductLine::average_out(std::span<const double> f,
                                             std::span<const std::size_t> T) const {
  if (f.size() != size()) throw DimensionError("function length does not match the product grid");
  std::vector<double> out(f.begin(), f.end());
  for (std::size_t i : T) {
    if (i >= n_) throw DomainError("coordinate out of range");
    detail::integrate_axis(out, shape_, i, model_->weights());
  }
  return out;
}

std::vector<double> ProductLine::partial(std::span<const double> f, std::size_t i) const {
  if (f.size() != size()) throw DimensionError("function length does not match the product grid");
  if (i >= n_) throw DomainError("coordinate out of range");
  auto d = detail::forward_difference(f, shape_, i);
  const double h = model_->spacing();
  for (double& v : d) v /= h;
  return d;
}

std::vector<double> ProductLine::edge_weights(std::size_t i) const {
  if (i >= n_) throw DomainError("coordinate out of range");
  auto shape = shape_;
  shape[i] -= 1;
  std::vector<std::span<const double>> fw(n_, std::span<const double>(model_->weights()));
  fw[i] = std::span<const double>(model_->edge_weights());
  return detail::product_weights(shape, fw);
}

std::vector<double> ProductLine::evolve_edges(std::span<const double> g, std::size_t i, double t) const {
  if (t < 0.0) throw DomainError("t must be nonnegative");
  auto shape = shape_;
  shape[i] -= 1;
  if (g.size() != detail::volume(shape)) throw DimensionError("edge function length mismatch");
  std::vector<double> out(g.begin(), g.end());
  if (t == 0.0) return out;
  const auto m = model_->evolution_matrix(t);
  const auto q = model_->edge_evolution_matrix(t);
  for (std::size_t a = 0; a < n_; ++a) detail::apply_along_axis(out, shape, a, a == i ? q : m);
  return out;
}

double ProductLine::l1(std::span<const double> f) const {
  double s = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) s += w_[x] * std::abs(f[x]);
  return s;
}

double ProductLine::l2_squared(std::span<const double> f) const {
  double s = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) s += w_[x] * f[x] * f[x];
  return s;
}

double ProductLine::mean(std::span<const double> f) const {
  double s = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) s += w_[x] * f[x];
  return s;
}

double ProductLine::partial_l1(std::span<const double> f, std::size_t i) const {
  const auto d = partial(f, i);
  const auto ew = edge_weights(i);
  double s = 0.0;
  for (std::size_t e = 0; e < d.size(); ++e) s += ew[e] * std::abs(d[e]);
  return s;
}

std::vector<double> ProductLine::gradient_squared(std::span<const double> f) const {
  if (f.size() != size()) throw DimensionError("function length does not match the product grid");
  const std::size_t m = model_->size();
  const auto& up = model_->up_rates();
  const auto& down = model_->down_rates();
  const auto strides = detail::strides_of(shape_);
  std::vector<double> out(size(), 0.0);
  for (std::size_t s = 0; s < size(); ++s) {
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j = (s / strides[i]) % m;
      double g = 0.0;
      if (j + 1 < m) {
        const double d = f[s + strides[i]] - f[s];
        g += up[j] * d * d;
      }
      if (j > 0) {
        const double d = f[s - strides[i]] - f[s];
        g += down[j] * d * d;
      }
      out[s] += 0.5 * g;
    }
  }
  return out;
}

double geometric_influence_analytic(const ProductLine& product,
                                    const std::function<double(std::span<const double>)>& dfi) {
  const auto& w = product.weights();
  double s = 0.0;
  for (std::size_t x = 0; x < w.size(); ++x) s += w[x] * std::abs(dfi(product.point(x)));
  return s;
}

double geometric_influence_fn(const ProductLine& product, std::span<const double> f, std::size_t i) {
  return product.partial_l1(f, i);
}

// Sets

bool verify_monotone(const ProductLine& product, const GridSet& set) {
  if (set.members.size() != product.size()) throw DimensionError("set size does not match the product grid");
  if (set.monotonicity == Monotonicity::None) return true;
  const auto shape = product.shape();
  const auto strides = detail::strides_of(shape);
  const std::size_t m = product.model().size();
  const bool inc = set.monotonicity == Monotonicity::Increasing;
  for (std::size_t s = 0; s < set.members.size(); ++s) {
    if (!set.members[s]) continue;
    for (std::size_t i = 0; i < product.dimension(); ++i) {
      const std::size_t j = (s / strides[i]) % m;
      if (inc && j + 1 < m && !set.members[s + strides[i]]) return false;
      if (!inc && j > 0 && !set.members[s - strides[i]]) return false;
    }
  }
  return true;
}

GridSet make_grid_set(const ProductLine& product,
                      const std::function<bool(std::span<const double>)>& inside,
                      Monotonicity declared) {
  GridSet set;
  set.monotonicity = declared;
  set.members.resize(product.size());
  for (std::size_t s = 0; s < product.size(); ++s) set.members[s] = inside(product.point(s)) ? 1 : 0;
  if (!verify_monotone(product, set)) throw ContractError("declared monotonicity does not hold for the set");
  return set;
}

double set_measure(const ProductLine& product, const GridSet& set) {
  if (set.members.size() != product.size()) throw DimensionError("set size does not match the product grid");
  const auto& w = product.weights();
  double s = 0.0;
  for (std::size_t x = 0; x < w.size(); ++x)
    if (set.members[x]) s += w[x];
  return s;
}

double geometric_influence_set(const ProductLine& product, const GridSet& set, std::size_t i) {
  if (set.members.size() != product.size()) throw DimensionError("set size does not match the product grid");
  if (i >= product.dimension()) throw DomainError("coordinate out of range");
  const auto& model = product.model();
  const auto& x = model.nodes();
  const auto& w1 = model.weights();
  const std::size_t m = x.size();
  const double h = model.spacing();
  std::vector<double> mid(m - 1);
  for (std::size_t j = 0; j + 1 < m; ++j) mid[j] = model.edge_weights()[j] / h;
  const double left = model.density(x.front() - 0.5 * h);
  const double right = model.density(x.back() + 0.5 * h);
  const auto strides = detail::strides_of(product.shape());
  const auto& w = product.weights();
  double total = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    const std::size_t j = (s / strides[i]) % m;
    const double other = w[s] / w1[j];
    const bool in = set.members[s] != 0;
    if (j + 1 < m && in != (set.members[s + strides[i]] != 0)) total += other * mid[j];
    if (in && j == 0) total += other * left;
    if (in && j + 1 == m) total += other * right;
  }
  return total;
}

namespace {

std::vector<char> dilate(const ProductLine& product, std::vector<char> a) {
  const auto strides = detail::strides_of(product.shape());
  const std::size_t m = product.model().size();
  for (std::size_t i = 0; i < product.dimension(); ++i) {
    auto b = a;
    for (std::size_t s = 0; s < a.size(); ++s) {
      if (!a[s]) continue;
      const std::size_t j = (s / strides[i]) % m;
      if (j + 1 < m) b[s + strides[i]] = 1;
      if (j > 0) b[s - strides[i]] = 1;
    }
    a.swap(b);
  }
  return a;
}

}  // namespace

BoundaryEstimate uniform_enlargement_boundary(const ProductLine& product, const GridSet& set) {
  if (set.members.size() != product.size()) throw DimensionError("set size does not match the product grid");
  const double h = product.model().spacing();
  const auto& w = product.weights();
  auto measure = [&](const std::vector<char>& a) {
    double s = 0.0;
    for (std::size_t x = 0; x < a.size(); ++x)
      if (a[x]) s += w[x];
    return s;
  };
  const double base = measure(set.members);
  const auto one = dilate(product, set.members);
  const auto two = dilate(product, one);
  BoundaryEstimate b;
  b.d_h = (measure(one) - base) / h;
  b.d_2h = (measure(two) - base) / (2.0 * h);
  b.value = std::max(0.0, 2.0 * b.d_h - b.d_2h);
  return b;
}

// Inequalities

CommutationReport commutation_check(const ProductLine& product, std::span<const double> f, double t,
                                    double tol) {
  if (t < 0.0) throw DomainError("t must be nonnegative");
  const double kappa = product.model().kappa();
  const auto pt = product.evolve(f, t);
  CommutationReport r;
  r.strict = make_report("commutation", 0.0, 0.0, tol);
  double worst = std::numeric_limits<double>::infinity();
  r.slack_plus = r.slack_minus = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < product.dimension(); ++i) {
    const auto d = product.partial(pt, i);
    auto g = product.partial(f, i);
    for (double& v : g) v = std::abs(v);
    const auto rhs = product.evolve_edges(g, i, t);
    for (std::size_t e = 0; e < d.size(); ++e) {
      const double lhs = std::abs(d[e]);
      const double slack = rhs[e] - lhs;
      if (slack < worst) {
        worst = slack;
        r.strict.lhs = lhs;
        r.strict.rhs = rhs[e];
      }
      r.slack_plus = std::min(r.slack_plus, std::exp(kappa * t) * rhs[e] - lhs);
      r.slack_minus = std::min(r.slack_minus, std::exp(-kappa * t) * rhs[e] - lhs);
    }
  }
  r.strict.slack = worst;
  r.strict.pass = worst >= -tol;
  return r;
}

ReversePoincareReport reverse_poincare_check(const ProductLine& product, std::span<const double> f,
                                             double t, double tol) {
  if (!(t > 0.0)) throw DomainError("reverse Poincaré needs t > 0");
  const auto pt = product.evolve(f, t);
  double energy = 0.0;
  for (std::size_t i = 0; i < product.dimension(); ++i) {
    const auto d = product.partial(pt, i);
    const auto ew = product.edge_weights(i);
    for (std::size_t e = 0; e < d.size(); ++e) energy += ew[e] * d[e] * d[e];
  }
  ReversePoincareReport r;
  r.global = make_report("reverse_poincare", energy, product.l2_squared(f) / (2.0 * t), tol);

  std::vector<double> f2(f.size());
  for (std::size_t x = 0; x < f.size(); ++x) f2[x] = f[x] * f[x];
  const auto pf2 = product.evolve(f2, t);
  const auto grad = product.gradient_squared(pt);
  const auto strides = detail::strides_of(product.shape());
  const std::size_t m = product.model().size();
  double worst = std::numeric_limits<double>::infinity();
  r.pointwise = make_report("reverse_poincare_pointwise", 0.0, 0.0, tol);
  for (std::size_t s = 0; s < f.size(); ++s) {
    bool interior = true;
    for (std::size_t i = 0; i < product.dimension(); ++i) {
      const std::size_t j = (s / strides[i]) % m;
      if (j == 0 || j + 1 == m) interior = false;
    }
    if (!interior) continue;
    const double lhs = 2.0 * t * grad[s];
    const double rhs = pf2[s] - pt[s] * pt[s];
    if (rhs - lhs < worst) {
      worst = rhs - lhs;
      r.pointwise.lhs = lhs;
      r.pointwise.rhs = rhs;
    }
  }
  if (std::isfinite(worst)) {
    r.pointwise.slack = worst;
    r.pointwise.pass = worst >= -tol;
  }
  return r;
}

CheckReport sup_gradient_check(const ProductLine& product, std::span<const double> f, double t,
                               double tol) {
  if (!(t > 0.0)) throw DomainError("the gradient bound needs t > 0");
  const auto pt = product.evolve(f, t);
  const auto grad = product.gradient_squared(pt);
  double sup_f = 0.0, sup_g = 0.0;
  for (double v : f) sup_f = std::max(sup_f, std::abs(v));
  for (double g : grad) sup_g = std::max(sup_g, std::sqrt(g));
  return make_report("sup_gradient", sup_g, sup_f / std::sqrt(2.0 * t), tol);
}

CheckReport ledoux_l1_check(const ProductLine& product, std::span<const double> f, double t, double tol) {
  if (t < 0.0) throw DomainError("t must be nonnegative");
  const auto pt = product.evolve(f, t);
  std::vector<double> diff(f.size());
  for (std::size_t x = 0; x < f.size(); ++x) diff[x] = f[x] - pt[x];
  double inf = 0.0;
  for (std::size_t i = 0; i < product.dimension(); ++i) inf += product.partial_l1(f, i);
  return make_report("ledoux_l1", product.l1(diff), 2.0 * std::sqrt(t) * inf, tol);
}

CheckReport averaging_error_check(const ProductLine& product, double rho, std::span<const double> f, double t,
                          std::span<const std::size_t> T, double tol) {
  if (!(t > 0.0)) throw DomainError("the chain bound needs t > 0");
  if (!(rho > 0.0)) throw DomainError("rho must be positive");
  const auto pt = product.evolve(f, t);
  const auto avg = product.average_out(pt, T);
  std::vector<double> diff(f.size());
  for (std::size_t x = 0; x < f.size(); ++x) diff[x] = pt[x] - avg[x];
  double sum_sq = 0.0;
  for (std::size_t i : T) {
    const double a = product.partial_l1(f, i);
    sum_sq += a * a;
  }
  const double alpha = hyper_alpha(rho, 0.5 * t);
  const double norm = product.l2_squared(f);
  double rhs = 0.0;
  if (sum_sq > 0.0 && norm > 0.0)
    rhs = std::exp(alpha * std::log(sum_sq) + (1.0 - alpha) * std::log(norm / t)) / rho;
  return make_report("averaging", product.l2_squared(diff), rhs, tol);
}

CheckReport gradient_l1_decay_check(const ProductLine& product, std::span<const double> f, double t, double tol) {
  if (t < 0.0) throw DomainError("t must be nonnegative");
  const auto half = product.evolve(f, 0.5 * t);
  CheckReport worst = make_report("l1-gradient-decay", 0.0, 0.0, tol);
  worst.slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < product.dimension(); ++i) {
    const auto r = make_report("l1-gradient-decay", product.partial_l1(half, i), product.partial_l1(f, i), tol);
    if (r.slack < worst.slack) worst = r;
  }
  return worst;
}

double effective_rho(const LineModel& model, double rho, std::string* source) {
  if (model.kappa() > 0.0) {
    if (source) *source = "strict-convexity";
    return model.kappa();
  }
  if (!(rho > 0.0))
    throw ContractError("no log-Sobolev constant: the potential is not strictly convex and rho <= 0");
  if (source) *source = "supplied";
  return rho;
}

std::pair<std::vector<double>, JuntaCertificate> continuous_extract_junta(
    const ProductLine& product, double rho, std::span<const double> f, double epsilon,
    const ExtractOptions& options) {
  if (f.size() != product.size()) throw DimensionError("function length does not match the product grid");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ContractError("epsilon must lie in (0,1)");
  if (product.model().kappa() < 0.0) throw ContractError("extraction needs a convex potential");
  for (double v : f)
    if (!std::isfinite(v)) throw ContractError("f must be finite");
  JuntaCertificate cert;
  cert.epsilon = epsilon;
  cert.norm = ErrorNorm::L1;
  cert.rho = effective_rho(product.model(), rho, &cert.rho_source);
  const std::size_t n = product.dimension();
  std::vector<double> inf(n);
  for (std::size_t i = 0; i < n; ++i) inf[i] = product.partial_l1(f, i);
  double total = 0.0;
  for (double v : inf) total += v;
  cert.total_influence = total;
  std::vector<double> out(f.begin(), f.end());
  if (total <= kZeroInfluence) {
    cert.log_eta = -std::numeric_limits<double>::infinity();
    return {out, cert};
  }
  const double i_sched = std::max(total, 1.0);
  cert.t = std::pow(epsilon / (8.0 * i_sched), 2);
  cert.alpha = hyper_alpha(cert.rho, 0.5 * cert.t);
  cert.bound_bakry = 4.0 * std::sqrt(cert.t) * total;
  const double log_norm = 0.5 * std::log(product.l2_squared(f));
  // (1/√ρ) (η I)^{α/2} ‖f‖₂^{1-α} t^{-(1-α)/2} = ε/2
  const double a = cert.alpha;
  cert.log_eta = (2.0 / a) * (std::log(0.5 * epsilon) + 0.5 * std::log(cert.rho) - (1.0 - a) * log_norm +
                               0.5 * (1.0 - a) * std::log(cert.t)) -
                 std::log(total);
  auto second_term = [&](double log_eta) {
    return std::exp(-0.5 * std::log(cert.rho) + 0.5 * a * (log_eta + std::log(total)) + (1.0 - a) * log_norm -
                    0.5 * (1.0 - a) * std::log(cert.t));
  };
  const double log2 = std::log(2.0);
  for (;;) {
    std::vector<std::size_t> T, kept;
    for (std::size_t i = 0; i < n; ++i) {
      if (inf[i] <= kZeroInfluence || std::log(inf[i]) <= cert.log_eta)
        T.push_back(i);
      else
        kept.push_back(i);
    }
    auto g = product.average_out(f, T);
    std::vector<double> diff(f.size());
    for (std::size_t x = 0; x < f.size(); ++x) diff[x] = f[x] - g[x];
    cert.measured_error = product.l1(diff);
    cert.kept_set = kept;
    if (cert.measured_error <= epsilon) {
      cert.eta = std::exp(cert.log_eta);
      cert.bound_la = second_term(cert.log_eta);
      return {std::move(g), cert};
    }
    double next = -std::numeric_limits<double>::infinity();
    for (double e : inf)
      if (e > kZeroInfluence && std::log(e) <= cert.log_eta) next = std::max(next, std::log(e));
    if (!std::isfinite(next)) {
      cert.success = false;
      throw BudgetExhaustedError("extraction cannot reach epsilon: L1 error " + fmt(cert.measured_error) +
                                     " with only zero-influence coordinates averaged",
                                 cert.measured_error, g);
    }
    const auto steps = static_cast<std::size_t>(std::floor((cert.log_eta - next) / log2)) + 1;
    cert.retries += steps;
    cert.log_eta -= static_cast<double>(steps) * log2;
    if (cert.retries > options.retry_budget)
      throw BudgetExhaustedError("extraction exceeded the retry budget of " +
                                     std::to_string(options.retry_budget) + " halvings",
                                 cert.measured_error, g);
  }
}

std::vector<double> mollify(const ProductLine& product, std::span<const double> f, double s) {
  if (f.size() != product.size()) throw DimensionError("function length does not match the product grid");
  const std::size_t m = product.model().size();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t j = 0; j < m; ++j) {
    double total = 0.6;
    k(j, j) = 0.6;
    if (j > 0) k(j, j - 1) = 0.2, total += 0.2;
    if (j + 1 < m) k(j, j + 1) = 0.2, total += 0.2;
    k.row(j) /= total;
  }
  const Eigen::MatrixXd mix = (1.0 - s) * Eigen::MatrixXd::Identity(m, m) + s * k;
  std::vector<double> out(f.begin(), f.end());
  for (std::size_t i = 0; i < product.dimension(); ++i) detail::apply_along_axis(out, product.shape(), i, mix);
  return out;
}

MonotoneJunta monotone_set_junta(const ProductLine& product, const GridSet& set, double epsilon,
                                 double rho, std::size_t mollification_budget) {
  if (set.members.size() != product.size()) throw DimensionError("set size does not match the product grid");
  if (set.monotonicity == Monotonicity::None) throw ContractError("the set must be declared monotone");
  if (!verify_monotone(product, set)) throw ContractError("declared monotonicity does not hold for the set");
  std::vector<double> indicator(set.members.size());
  for (std::size_t x = 0; x < indicator.size(); ++x) indicator[x] = set.members[x] ? 1.0 : 0.0;
  const auto& w = product.weights();
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_values;
  double s = 1.0;
  for (std::size_t attempt = 0; attempt < mollification_budget; ++attempt, s *= 0.5) {
    const auto smooth = mollify(product, indicator, s);
    std::vector<double> g;
    JuntaCertificate cert;
    try {
      std::tie(g, cert) = continuous_extract_junta(product, rho, smooth, 0.5 * epsilon);
    } catch (const BudgetExhaustedError&) {
      continue;
    }
    MonotoneJunta out;
    out.set.members.resize(g.size());
    out.set.monotonicity = set.monotonicity;
    double sd = 0.0;
    for (std::size_t x = 0; x < g.size(); ++x) {
      out.set.members[x] = g[x] >= 0.5 ? 1 : 0;
      if (out.set.members[x] != set.members[x]) sd += w[x];
    }
    if (sd <= epsilon) {
      cert.measured_error = sd;
      cert.epsilon = epsilon;
      cert.retries += attempt;
      out.certificate = cert;
      out.symmetric_difference = sd;
      out.mollification = s;
      return out;
    }
    if (sd < best) {
      best = sd;
      best_values.assign(out.set.members.begin(), out.set.members.end());
    }
  }
  throw BudgetExhaustedError("mollification budget exhausted; best symmetric difference " + fmt(best), best,
                             best_values);
}

}  // namespace juntakit
