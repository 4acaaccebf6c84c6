// Command-line front end: every verifier and extractor as a subcommand.
//
// Exit status: 0 all checks pass, 1 a check failed or a budget ran out,
// 2 usage/parse/domain/contract errors, 3 capacity errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "juntakit/scenario.hpp"

namespace fs = std::filesystem;
using namespace juntakit;

namespace {

struct Invocation {
  std::string command;  // scenario command, or "sweep"
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;  // extra key=value pairs
  std::string config;
  std::string out;
};

struct Flag {
  const char* name;
  const char* help;
};

const Flag kCommon[] = {
    {"seed", "seed for random instances (default 1)"},
    {"budget-states", "largest state space or grid that may be materialized"},
    {"tol", "tolerance on every slack (default 1e-9 exact, 1e-6 grid-based)"},
};

void add_flags(CLI::App* app, Invocation& inv, std::initializer_list<Flag> flags) {
  for (const auto& f : kCommon) app->add_option(std::string("--") + f.name, inv.values[f.name], f.help);
  for (const auto& f : flags) app->add_option(std::string("--") + f.name, inv.values[f.name], f.help);
  app->add_option("--out", inv.out, "directory for report.csv, summary.txt and certificate.txt");
  app->add_option("--opt", inv.sets, "extra option as key=value (repeatable)");
  if (inv.command != "sweep")
    app->add_option("--config", inv.config, "key=value file supplying defaults for the flags");
}

CLI::App* leaf(CLI::App& parent, const std::string& name, const std::string& help,
               const std::string& command, std::string& selected) {
  auto* app = parent.add_subcommand(name, help);
  app->callback([&selected, command] { selected = command; });
  return app;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

int emit(const RunResult& result, const std::string& out_dir) {
  if (out_dir.empty()) {
    std::cout << result.report.csv() << render_summary(result) << result.artifact;
  } else {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "report.csv", result.report.csv());
    write_file(fs::path(out_dir) / "summary.txt", render_summary(result));
    if (!result.certificates.empty()) {
      std::string all;
      for (const auto& c : result.certificates) all += c;
      write_file(fs::path(out_dir) / "certificate.txt", all);
    }
    if (!result.artifact.empty()) write_file(fs::path(out_dir) / "basis.csv", result.artifact);
    std::cout << result.report.summary() << "\n";
  }
  return result.report.failures() == 0 ? 0 : 1;
}

Options collect(const Invocation& inv) {
  Options o;
  if (!inv.config.empty()) {
    const auto cfg = load_config(inv.config);
    if (!cfg.grid.empty()) throw UsageError(inv.config + ": [grid] is only accepted by sweep");
    o = cfg.scenario;
  }
  for (const auto& [k, v] : inv.values)
    if (!v.empty()) o[k] = v;
  for (const auto& s : inv.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--opt expects key=value, got '" + s + "'");
    o[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"juntakit: verify semigroup inequalities and extract juntas on small product spaces"};
  app.require_subcommand(1);
  std::string selected;
  std::map<std::string, Invocation> inv;
  for (const char* c : {"spaces-info", "verify", "junta-extract", "slice-basis", "slice-extract", "slice-verify",
                        "continuous-verify", "continuous-extract", "sweep"})
    inv[c].command = c;

  const Flag space{"space", "cube:n=..,p=.. | product:m=2x3[,seed=..] | torus:n=..,m=.. | slice:n=..,k=.. | symmetric:n=.."};
  const Flag fn{"fn", "dictator:i=.. | majority | parity | tribes:w=.. | planted-junta:k=..,noise=..[,seed=..] | random:seed=.. | file:<path>"};
  const Flag rho{"rho", "log-Sobolev constant to use instead of computing one"};
  const Flag eps{"eps", "target approximation error (default 0.1)"};
  const Flag t{"t", "semigroup time (default 0.2)"};

  auto* spaces = app.add_subcommand("spaces", "state spaces");
  spaces->require_subcommand(1);
  add_flags(leaf(*spaces, "info",
                 "Build a space and report its size, normalization, invariance and reversibility errors and "
                 "spectral gap (one for product normalization, (1-cos(2pi/m))/2 on the rescaled torus).", "spaces-info", selected),
            inv["spaces-info"], {space});

  add_flags(leaf(app, "verify",
                 "Check semigroup inequalities on a discrete space. Checks: gap (spectral gap formula), "
                 "log-sobolev (two-point constant against numeric search), hyper (hypercontractivity "
                 "||P_t f||_q <= ||f||_p), lemma-la (influence bound on ||f - P_t f||_2^2 through "
                 "hypercontractivity), bakry (||f - P_t f||_2^2 <= t times the Dirichlet energy), chain "
                 "(three-term bound on the junta approximation error), martingale (orthogonal decomposition "
                 "of f - Pi_T f), poincare (gap times variance at most the Dirichlet energy), decay (influence "
                 "decay of Boolean functions under the semigroup), diagnose, holder.", "verify", selected),
            inv["verify"],
            {space, fn, {"check", "comma-separated check names"}, t, {"q", "target Lebesgue exponent"},
             {"eta", "influence threshold (default 0.1)"}, rho, {"samples", "random instances for hyper"}});

  auto* junta = app.add_subcommand("junta", "junta extraction on discrete spaces");
  junta->require_subcommand(1);
  add_flags(leaf(*junta, "extract",
                 "Junta extraction: keep coordinates with semigroup-smoothed influence above eta, "
                 "project P_t f onto them and certify the measured error and |kept| <= I(f)/eta.", "junta-extract", selected),
            inv["junta-extract"],
            {space, fn, eps, {"norm", "L2 or L1 error"}, rho, {"retry-budget", "schedule retries"}});

  auto* slice = app.add_subcommand("slice", "slices of the Boolean cube");
  slice->require_subcommand(1);
  const Flag method{"method", "basis construction: auto, explicit or joint"};
  add_flags(leaf(*slice, "basis",
                 "Build and validate the orthogonal basis that diagonalizes the transposition walk on the "
                 "slice (orthogonality, completeness, eigenvalue per degree); export it as basis.csv.", "slice-basis", selected),
            inv["slice-basis"], {space, method});
  add_flags(leaf(*slice, "extract",
                 "Junta extraction on the slice with the hypercontractive step of the transposition walk and "
                 "the smoothed-influence threshold; certifies ||f - g||_2 <= eps.", "slice-extract", selected),
            inv["slice-extract"], {space, fn, eps, rho, method, {"retry-budget", "schedule retries"}});
  add_flags(leaf(*slice, "verify",
                 "Slice checks: spectrum (eigenvalue d(n+1-d)/C(n,2) with multiplicity C(n,d)-C(n,d-1) for each degree d), basis, parseval, "
                 "identity (total influence of a coordinate prefix as a degree-weighted spectral sum), low-degree-decay "
                 "(decay of low-degree mass through the basis), slice-hyper (one hypercontractive step), "
                 "lee-yau (log-Sobolev constant against log of the slice size).", "slice-verify", selected),
            inv["slice-verify"],
            {space, fn, {"check", "comma-separated check names"}, t, {"m", "degree cut for low-degree-decay"},
             {"prefix", "coordinate prefix length for identity"}, rho, method});

  auto* cont = app.add_subcommand("continuous", "log-concave product measures on grids");
  cont->require_subcommand(1);
  const Flag pot{"potential", "gaussian | boltzmann:p | quartic:a,b | file:<path>"};
  const Flag nodes{"nodes", "grid nodes per axis (default 61)"};
  const Flag extent{"extent", "grid covers v - min v below this value (default 30)"};
  const Flag dim{"dim", "number of coordinates (default 2)"};
  const Flag set{"set", "halfspace:i=..,a=.. | upper | quadrant:a=..,b=.. | sum:a=.. | union:a=..,b=.. | empty | full"};
  add_flags(leaf(*cont, "verify",
                 "Grid checks for e^{-v} measures: eigen (Ornstein-Uhlenbeck eigenvalues k), hermite (Hermite "
                 "decay e^{-kt} against the grid semigroup), detailed-balance, mass, half-space (geometric "
                 "influence equals the density at the boundary), commutation (|d_i P_t f| <= P_t|d_i f| for "
                 "convex v), reverse-poincare and reverse-poincare-pointwise, sup-gradient "
                 "(||grad P_t f||_inf <= ||f||_inf/sqrt(2t)), ledoux (||f - P_t f||_1 <= 2 sqrt(t) sum "
                 "||d_i f||_1), averaging (L2 error of averaging out coordinates from L1 gradients), l1-gradient-decay (L1 "
                 "gradients do not grow under the semigroup), boundary (uniform-enlargement boundary of a "
                 "monotone set equals the sum of its geometric influences).", "continuous-verify", selected),
            inv["continuous-verify"],
            {pot, nodes, extent, dim, {"check", "comma-separated check names"},
             {"fn", "linear:i=.. | ridge:eps=.. | smooth:seed=.. | constant:c=.."}, set, t,
             {"samples", "random smooth functions when --fn is absent"}, rho});
  add_flags(leaf(*cont, "extract",
                 "Continuous junta extraction from geometric influences; with --set, approximate a monotone "
                 "set by a junta set after mollification and report the symmetric difference.", "continuous-extract", selected),
            inv["continuous-extract"],
            {pot, nodes, extent, dim, {"fn", "linear:i=.. | ridge:eps=.. | smooth:seed=.."}, set, eps, rho,
             {"retry-budget", "schedule retries"}});

  auto* sweep = leaf(app, "sweep",
                     "Run a scenario over the Cartesian product of a [grid] section; '{key}' in option values "
                     "is replaced per point and rows are suffixed with '@key=value;...'.", "sweep", selected);
  add_flags(sweep, inv["sweep"], {});
  sweep->add_option("--config", inv["sweep"].config, "configuration with [scenario] and [grid] sections")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto& chosen = inv.at(selected);
    if (selected == "sweep") {
      Options overrides;
      for (const auto& [k, v] : chosen.values)
        if (!v.empty()) overrides[k] = v;
      for (const auto& s : chosen.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--opt expects key=value, got '" + s + "'");
        overrides[s.substr(0, eq)] = s.substr(eq + 1);
      }
      return emit(run_sweep(load_config(chosen.config), overrides), chosen.out);
    }
    return emit(run_scenario(selected, collect(chosen)), chosen.out);
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 3;
  } catch (const BudgetExhaustedError& e) {
    std::cerr << "budget exhausted: " << e.what() << "\n";
    return 1;
  } catch (const BasisConstructionError& e) {
    std::cerr << "basis construction failed: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
