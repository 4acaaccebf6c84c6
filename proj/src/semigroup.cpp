#include "juntakit/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>

#include "juntakit/detail/tensor.hpp"
#include "juntakit/errors.hpp"

namespace juntakit {

struct Generator::Cache {
  std::once_flag once;
  SpectralData data;
};

namespace {

// u ∈ [0,1) from the top 53 bits; fixed across standard libraries.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool is_constant(std::span<const double> v) {
  for (double x : v)
    if (x != v[0]) return false;
  return true;
}

void fix_signs(SpectralData& s) {
  for (Eigen::Index c = 0; c < s.vectors.cols(); ++c) {
    for (Eigen::Index r = 0; r < s.vectors.rows(); ++r) {
      const double v = s.vectors(r, c);
      if (std::abs(v) > 1e-12) {
        if (v < 0) s.vectors.col(c) *= -1.0;
        break;
      }
    }
  }
}

// Torus coordinate generator (1/4)(S⁺ + S⁻ - 2 Id) on Z/m.
Eigen::MatrixXd torus_factor(std::size_t m) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t x = 0; x < m; ++x) {
    g(x, (x + 1) % m) += 0.25;
    g(x, (x + m - 1) % m) += 0.25;
    g(x, x) -= 0.5;
  }
  return g;
}

Eigen::MatrixXd factor_evolution(const FactorGenerator& fg, double t) {
  const auto m = static_cast<Eigen::Index>(fg.measure.size());
  if (fg.projection) {
    const double e = std::exp(-t);
    Eigen::MatrixXd mat = Eigen::MatrixXd::Identity(m, m) * e;
    for (Eigen::Index x = 0; x < m; ++x)
      for (Eigen::Index y = 0; y < m; ++y) mat(x, y) += (1.0 - e) * fg.measure[y];
    return mat;
  }
  const auto& s = fg.spectrum;
  Eigen::VectorXd decay = (-t * s.eigenvalues.array()).exp();
  Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(fg.measure.data(), m);
  return s.vectors * decay.asDiagonal() * s.vectors.transpose() * mu.asDiagonal();
}

}  // namespace

SpectralData reversible_spectrum(const Eigen::MatrixXd& generator, std::span<const double> measure) {
  const auto n = generator.rows();
  Eigen::VectorXd sq(n), isq(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sq[i] = std::sqrt(measure[i]);
    isq[i] = 1.0 / sq[i];
  }
  Eigen::MatrixXd s = -(sq.asDiagonal() * generator * isq.asDiagonal());
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
  SpectralData out;
  out.eigenvalues = es.eigenvalues();
  out.vectors = isq.asDiagonal() * es.eigenvectors();
  fix_signs(out);
  return out;
}

Generator::Generator(SpacePtr space, std::size_t dense_cap)
    : space_(std::move(space)), dense_cap_(dense_cap), cache_(std::make_shared<Cache>()) {
  if (!space_) throw DomainError("generator without a space");
  if (space_->is_product()) {
    rep_ = Representation::Factorized;
    scale_ = 1.0;
    for (const auto& f : space_->product().factors) {
      FactorGenerator fg;
      const auto m = static_cast<Eigen::Index>(f.measure.size());
      fg.measure = f.measure;
      fg.projection = true;
      fg.matrix = -Eigen::MatrixXd::Identity(m, m);
      for (Eigen::Index x = 0; x < m; ++x)
        for (Eigen::Index y = 0; y < m; ++y) fg.matrix(x, y) += f.measure[y];
      fg.spectrum = reversible_spectrum(fg.matrix, fg.measure);
      factors_.push_back(std::move(fg));
    }
  } else if (space_->kind() == SpaceKind::Torus) {
    rep_ = Representation::Factorized;
    scale_ = space_->generator_scale();
    for (std::size_t i = 0; i < space_->dimension(); ++i) {
      FactorGenerator fg;
      const std::size_t m = space_->modulus();
      fg.measure.assign(m, 1.0 / static_cast<double>(m));
      fg.matrix = torus_factor(m);
      fg.spectrum = reversible_spectrum(fg.matrix, fg.measure);
      factors_.push_back(std::move(fg));
    }
  } else {
    rep_ = Representation::Matrix;
    scale_ = space_->generator_scale();
  }
}

Generator generator(SpacePtr space) { return Generator(std::move(space)); }

FunctionTable Generator::apply(const FunctionTable& f) const {
  require_on_space(*space_, f);
  std::vector<double> out(f.size(), 0.0);
  if (rep_ == Representation::Factorized) {
    std::vector<double> tmp;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      tmp.assign(f.values().begin(), f.values().end());
      detail::apply_along_axis(tmp, space_->shape(), i, factors_[i].matrix);
      for (std::size_t x = 0; x < out.size(); ++x) out[x] += tmp[x];
    }
  } else {
    for (const auto& mv : space_->schreier().moves)
      for (std::size_t x = 0; x < out.size(); ++x) out[x] += mv.weight * (f[mv.image[x]] - f[x]);
    for (double& v : out) v *= scale_;
  }
  return FunctionTable(f.space_ptr(), std::move(out));
}

FunctionTable Generator::evolve(const FunctionTable& f, double t) const {
  require_on_space(*space_, f);
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("evolution time must be a finite t >= 0");
  if (t == 0.0 || is_constant(f.values())) return f;
  if (rep_ == Representation::Factorized) {
    std::vector<double> v(f.values().begin(), f.values().end());
    for (std::size_t i = 0; i < factors_.size(); ++i)
      detail::apply_along_axis(v, space_->shape(), i, factor_evolution(factors_[i], t));
    return FunctionTable(f.space_ptr(), std::move(v));
  }
  const auto& s = spectrum();
  const auto mu = space_->measure();
  const auto n = static_cast<Eigen::Index>(f.size());
  Eigen::VectorXd fw(n);
  for (Eigen::Index x = 0; x < n; ++x) fw[x] = f[x] * mu[x];
  Eigen::VectorXd coeff = s.vectors.transpose() * fw;
  coeff.array() *= (-t * s.eigenvalues.array()).exp();
  Eigen::VectorXd out = s.vectors * coeff;
  return FunctionTable(f.space_ptr(), std::vector<double>(out.data(), out.data() + n));
}

Eigen::MatrixXd Generator::assemble() const {
  const std::size_t n = space_->size();
  if (n > dense_cap_)
    throw CapacityError(space_->descriptor() + " has " + std::to_string(n) +
                        " states, above the dense limit " + std::to_string(dense_cap_));
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(N, N);
  if (rep_ == Representation::Factorized) {
    const auto strides = detail::strides_of(space_->shape());
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      const auto m = space_->shape()[i];
      for (std::size_t x = 0; x < n; ++x) {
        const std::size_t xi = (x / strides[i]) % m;
        const std::size_t base = x - xi * strides[i];
        for (std::size_t yi = 0; yi < m; ++yi)
          l(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(base + yi * strides[i])) +=
              factors_[i].matrix(static_cast<Eigen::Index>(xi), static_cast<Eigen::Index>(yi));
      }
    }
    return l;
  }
  for (std::size_t x = 0; x < n; ++x) {
    for (auto [y, k] : space_->kernel_row(x))
      l(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) += scale_ * k;
    l(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)) -= scale_;
  }
  return l;
}

const SpectralData& Generator::spectrum() const {
  std::call_once(cache_->once, [this] {
    const std::size_t n = space_->size();
    if (n > dense_cap_)
      throw CapacityError(space_->descriptor() + " has " + std::to_string(n) +
                          " states, above the dense limit " + std::to_string(dense_cap_));
    if (rep_ == Representation::Matrix) {
      cache_->data = reversible_spectrum(assemble(), space_->measure());
      return;
    }
    // Tensor the factor eigenpairs; axis 0 varies fastest, matching kron(Φ_i, V).
    Eigen::MatrixXd v = Eigen::MatrixXd::Ones(1, 1);
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(1);
    for (const auto& fg : factors_) {
      const auto& fs = fg.spectrum;
      const auto m = fs.vectors.rows();
      Eigen::MatrixXd nv(v.rows() * m, v.cols() * m);
      Eigen::VectorXd nl(lam.size() * m);
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b)
          nv.block(a * v.rows(), b * v.cols(), v.rows(), v.cols()) = fs.vectors(a, b) * v;
      for (Eigen::Index b = 0; b < m; ++b)
        nl.segment(b * lam.size(), lam.size()) = lam.array() + fs.eigenvalues[b];
      v = std::move(nv);
      lam = std::move(nl);
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(lam.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&lam](Eigen::Index a, Eigen::Index b) { return lam[a] < lam[b]; });
    cache_->data.eigenvalues.resize(lam.size());
    cache_->data.vectors.resize(v.rows(), v.cols());
    for (std::size_t c = 0; c < order.size(); ++c) {
      cache_->data.eigenvalues[static_cast<Eigen::Index>(c)] = lam[order[c]];
      cache_->data.vectors.col(static_cast<Eigen::Index>(c)) = v.col(order[c]);
    }
  });
  return cache_->data;
}

FunctionTable evolve(const Generator& gen, const FunctionTable& f, double t) {
  return gen.evolve(f, t);
}

double spectral_gap(const Generator& gen) {
  constexpr double zero_tol = 1e-10;
  if (gen.representation() == Generator::Representation::Factorized) {
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& fg : gen.factors()) {
      const auto& ev = fg.spectrum.eigenvalues;
      if (ev.size() < 2 || ev[1] <= zero_tol)
        throw StructureError("eigenvalue 0 of -L is not simple: the space is disconnected");
      gap = std::min(gap, ev[1]);
    }
    return gap;
  }
  const auto& ev = gen.spectrum().eigenvalues;
  if (ev.size() < 2 || ev[1] <= zero_tol)
    throw StructureError("eigenvalue 0 of -L is not simple: the space is disconnected");
  return ev[1];
}

// ---------------------------------------------------------------------------
// Log-Sobolev constants

namespace {

// (1+u) log1p(u) - u, with a series where cancellation would bite.
double ent_kernel(double u) {
  if (u <= -1.0) return 1.0;
  if (std::abs(u) < 1e-3) return u * u * (0.5 - u / 6.0 + u * u / 12.0);
  return (1.0 + u) * std::log1p(u) - u;
}

// Quotient 2E(f,f)/Ent(f²) for f = e^u, computed from expm1 terms so that
// near-constant f keep full relative accuracy. Optionally fills the
// μ-preconditioned gradient with respect to u.
struct Quotient {
  const Eigen::MatrixXd& l;
  std::span<const double> mu;

  double operator()(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const {
    const auto n = u.size();
    Eigen::VectorXd g(n), e2(n);
    double mean_e2 = 0.0;
    for (Eigen::Index x = 0; x < n; ++x) {
      g[x] = std::expm1(u[x]);
      e2[x] = std::expm1(2.0 * u[x]);
      mean_e2 += mu[x] * e2[x];
    }
    const double log_s = std::log1p(mean_e2);
    const double s = 1.0 + mean_e2;
    Eigen::VectorXd lg = l * g;
    // Energy as ½ Σ μ_x L_xy (g_y - g_x)², which cannot cancel below zero.
    double energy = 0.0;
    double ent_unit = 0.0;
    for (Eigen::Index x = 0; x < n; ++x) {
      for (Eigen::Index y = 0; y < n; ++y)
        if (y != x && l(x, y) != 0.0) energy += 0.5 * mu[x] * l(x, y) * (g[y] - g[x]) * (g[y] - g[x]);
      ent_unit += mu[x] * ent_kernel(std::expm1(2.0 * u[x] - log_s));
    }
    const double ent = s * ent_unit;
    if (!(ent > 0.0)) return std::numeric_limits<double>::infinity();
    const double q = 2.0 * energy / ent;
    if (grad) {
      grad->resize(n);
      for (Eigen::Index x = 0; x < n; ++x) {
        const double f = 1.0 + g[x];
        const double de = -2.0 * lg[x];                  // /μ_x
        const double dent = 2.0 * f * (2.0 * u[x] - log_s);  // /μ_x
        (*grad)[x] = f * (2.0 * de * ent - 2.0 * energy * dent) / (ent * ent);
      }
    }
    return q;
  }
};

struct SearchOutcome {
  double value;
  Eigen::VectorXd iterate;
  bool converged;
};

// BFGS on u with inverse-Hessian seed diag(1/μ) and Armijo backtracking.
// `floor` is the best near-constant probe value. Descents that sink to within
// a relative 1e-4 of it are heading for the same spectral limit and stop there.
SearchOutcome descend(const Quotient& quot, Eigen::VectorXd u, std::size_t iterations,
                      double floor) {
  const auto mu = quot.mu;
  const auto n = u.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  auto reset = [&] {
    h.setZero();
    for (Eigen::Index x = 0; x < n; ++x) h(x, x) = 1.0 / mu[x];
  };
  reset();
  Eigen::VectorXd grad;
  double q = quot(u, &grad);
  if (!std::isfinite(q)) return {q, u, false};
  grad.array() *= Eigen::Map<const Eigen::ArrayXd>(mu.data(), n);
  for (std::size_t it = 0; it < iterations; ++it) {
    if (q >= floor && q - floor <= 1e-4 * floor) return {q, u, true};
    Eigen::VectorXd dir = -h * grad;
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      reset();
      dir = -h * grad;
      slope = grad.dot(dir);
    }
    if (-slope < 1e-26) return {q, u, true};
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd cand, cgrad;
    double cq = q;
    while (step > 1e-14) {
      cand = u + step * dir;
      cq = quot(cand, &cgrad);
      if (std::isfinite(cq) && cq <= q + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return {q, u, true};  // no descent left at machine precision
    cgrad.array() *= Eigen::Map<const Eigen::ArrayXd>(mu.data(), n);
    const Eigen::VectorXd s = cand - u;
    const Eigen::VectorXd y = cgrad - grad;
    const double sy = s.dot(y);
    const double dq = q - cq;
    u = std::move(cand);
    grad = std::move(cgrad);
    q = cq;
    if (dq <= 1e-15 * std::max(1.0, std::abs(q))) return {q, u, true};
    if (sy > 1e-300) {
      const Eigen::VectorXd hy = h * y;
      const double yhy = y.dot(hy);
      h += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) - (hy * s.transpose() + s * hy.transpose()) / sy;
    }
    // Q is invariant under u + c; keep u centred for conditioning.
    double m = 0.0;
    for (Eigen::Index x = 0; x < n; ++x) m += mu[x] * u[x];
    u.array() -= m;
  }
  return {q, u, false};
}

}  // namespace

double entropy_of_square(std::span<const double> f, std::span<const double> measure) {
  double s = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) s += measure[x] * f[x] * f[x];
  if (s == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) acc += measure[x] * ent_kernel(f[x] * f[x] / s - 1.0);
  return s * acc;
}

double two_point_log_sobolev(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("two-point bias must lie in (0,1)");
  const double s = 2.0 * p - 1.0;
  if (std::abs(s) < 1e-4) return 1.0 - s * s / 3.0 - 4.0 * s * s * s * s / 45.0;
  return s / std::atanh(s);
}

double log_sobolev_search(const Eigen::MatrixXd& l, std::span<const double> measure,
                          const LogSobolevOptions& options) {
  const auto n = l.rows();
  if (n < 2) throw DomainError("log-Sobolev search needs at least two states");
  Quotient quot{l, measure};
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_u;
  bool any_converged = false;

  // Near-constant probes f = 1 + δφ_k recover the spectral limit of the quotient.
  const auto spec = reversible_spectrum(l, measure);
  for (Eigen::Index k = 1; k < n; ++k) {
    for (double delta : {1e-5, -1e-5}) {
      Eigen::VectorXd u(n);
      bool ok = true;
      for (Eigen::Index x = 0; x < n; ++x) {
        const double a = delta * spec.vectors(x, k);
        if (a <= -1.0) ok = false;
        u[x] = std::log1p(a);
      }
      if (!ok) continue;
      const double q = quot(u, nullptr);
      if (q < best) {
        best = q;
        best_u = u;
      }
    }
  }

  const double probe_best = best;
  std::mt19937_64 rng(options.seed);
  static constexpr double spreads[] = {0.05, 0.3, 1.0, 2.5};
  for (std::size_t s = 0; s < options.starts; ++s) {
    Eigen::VectorXd u(n);
    const double spread = spreads[s % 4];
    for (Eigen::Index x = 0; x < n; ++x) u[x] = spread * (2.0 * uniform01(rng) - 1.0);
    const auto out = descend(quot, u, options.iterations, probe_best);
    if (out.converged) any_converged = true;
    if (out.value < best) {
      best = out.value;
      best_u = out.iterate;
    }
  }
  if (!any_converged) {
    std::vector<double> it(best_u.data(), best_u.data() + best_u.size());
    for (double& v : it) v = std::exp(v);
    throw BudgetExhaustedError("log-Sobolev search did not converge within " +
                                   std::to_string(options.iterations) + " iterations",
                               best, std::move(it));
  }
  return best;
}

double log_sobolev_constant(const Generator& gen, LogSobolevMethod method,
                            const LogSobolevOptions& options) {
  const auto& space = gen.space();
  if (method == LogSobolevMethod::ExactTwoPoint) {
    if (!space.is_product()) throw DomainError("ExactTwoPoint applies only to two-point product factors");
    double rho = std::numeric_limits<double>::infinity();
    for (const auto& f : space.product().factors) {
      if (f.measure.size() != 2) throw DomainError("ExactTwoPoint applies only to two-point factors");
      rho = std::min(rho, two_point_log_sobolev(f.measure[0]));
    }
    return rho;
  }
  if (gen.representation() == Generator::Representation::Factorized) {
    // The constant tensorizes: search each distinct factor and take the minimum.
    double rho = std::numeric_limits<double>::infinity();
    std::vector<const FactorGenerator*> seen;
    for (const auto& fg : gen.factors()) {
      bool dup = false;
      for (const auto* s : seen)
        if (s->measure == fg.measure && s->matrix == fg.matrix) dup = true;
      if (dup) continue;
      seen.push_back(&fg);
      rho = std::min(rho, log_sobolev_search(fg.matrix, fg.measure, options));
    }
    return rho;
  }
  return log_sobolev_search(gen.assemble(), space.measure(), options);
}

// ---------------------------------------------------------------------------

double lp_norm(std::span<const double> values, std::span<const double> measure, double p) {
  if (!(p >= 1.0)) throw DomainError("L^p norm needs p >= 1");
  if (values.empty()) return 0.0;
  if (is_constant(values)) return std::abs(values[0]);
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  if (m == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t x = 0; x < values.size(); ++x) acc += measure[x] * std::pow(std::abs(values[x]) / m, p);
  return m * std::pow(acc, 1.0 / p);
}

double lp_norm(const MarkovSpace& space, const FunctionTable& f, double p) {
  require_on_space(space, f);
  return lp_norm(f.values(), space.measure(), p);
}

HyperReport hypercontractivity_check(const Generator& gen, double rho, const FunctionTable& f,
                                     double t, double q) {
  if (!(q > 1.0)) throw DomainError("hypercontractivity needs q > 1");
  if (!(rho > 0.0)) throw DomainError("hypercontractivity needs rho > 0");
  if (!(t >= 0.0)) throw DomainError("hypercontractivity needs t >= 0");
  HyperReport r;
  r.t = t;
  r.q = q;
  r.p = 1.0 + (q - 1.0) * std::exp(-2.0 * rho * t);
  const auto pt = gen.evolve(f, t);
  r.lhs = lp_norm(gen.space(), pt, q);
  r.rhs = lp_norm(gen.space(), f, r.p);
  r.slack = r.rhs - r.lhs;
  r.violated = r.slack < -1e-9;
  return r;
}

}  // namespace juntakit
