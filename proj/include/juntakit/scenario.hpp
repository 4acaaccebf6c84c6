#pragma once

// Scenario plumbing behind the command-line tool: descriptor parsing,
// key=value configuration files, check runners and parameter sweeps.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "juntakit/continuous.hpp"
#include "juntakit/errors.hpp"
#include "juntakit/report.hpp"
#include "juntakit/spaces.hpp"

namespace juntakit {

/// Bad invocation: unknown option, empty check list, empty grid.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration text; the message carries "source:line".
class ParseError : public UsageError {
 public:
  using UsageError::UsageError;
};

/// Ordered key=value options of one scenario.
using Options = std::map<std::string, std::string>;

struct Config {
  Options scenario;                                               // [scenario] and top-level keys
  std::vector<std::pair<std::string, std::vector<std::string>>> grid;  // [grid], in file order
};

Config parse_config(std::string_view text, const std::string& source = "config");
Config load_config(const std::string& path);

/// "kind:key=value,..." split into the kind and its parameters.
struct Descriptor {
  std::string kind;
  Options params;
  std::string raw;
};
Descriptor parse_descriptor(const std::string& text);

/// cube:n=..,p=.. | product:m=2x3[,seed=..] | torus:n=..,m=.. | slice:n=..,k=.. | symmetric:n=..
SpacePtr parse_space(const std::string& descriptor, const SpaceConfig& config = {});

/// dictator[:i=1] | majority | parity | tribes[:w=2] | planted-junta:k=..,noise=..[,seed=..]
/// | random[:seed=..] | file:<path>
FunctionTable parse_function(const SpacePtr& space, const std::string& descriptor);

/// Planted coordinates (0-based) of a planted-junta descriptor; empty otherwise.
std::vector<std::size_t> planted_coordinates(const std::string& descriptor);

/// linear[:i=1] | ridge[:eps=..] | smooth[:seed=..] | constant[:c=..]
std::vector<double> parse_line_function(const ProductLine& product, const std::string& descriptor);

/// halfspace[:i=1,a=0] | upper[:i=1,a=0] | quadrant[:a=0,b=0] | sum[:a=0] | union[:a=0,b=0]
/// | empty | full
GridSet parse_grid_set(const ProductLine& product, const std::string& descriptor);

/// Random smooth bounded function on a product grid, the family used by the suites.
std::vector<double> random_smooth_function(const ProductLine& product, std::uint64_t seed);

struct RunResult {
  Report report;
  std::vector<std::string> certificates;             // serialized records
  std::vector<std::pair<std::string, std::string>> info;  // key=value lines
  std::string artifact;                              // e.g. an exported basis
};

/// Commands: spaces-info, verify, junta-extract, slice-basis, slice-extract,
/// slice-verify, continuous-verify, continuous-extract.
RunResult run_scenario(const std::string& command, const Options& options);

/// Cartesian product of the grid; "{key}" in option values is replaced by the
/// grid value and rows are suffixed with "@key=value;...". Rows keep grid order.
RunResult run_sweep(const Config& config, const Options& overrides = {});

/// Names of the checks each command accepts.
std::vector<std::string> known_checks(const std::string& command);

/// key=value lines, then certificates, as printed by the tool.
std::string render_summary(const RunResult& result);

}  // namespace juntakit
