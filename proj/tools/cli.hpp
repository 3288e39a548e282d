#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fluxctl/placement.hpp"

namespace fluxctl::cli {

inline constexpr const char* kVersion = "0.1.0";

enum class SystemMode { kRaw, kAdjacency, kLaplacian };
enum class Method { kFlux, kGpgm, kRam };

/// Fully resolved run settings. Built from the command-line flags with the
/// `--config` JSON layered on top.
struct RunConfig {
  std::string command;
  std::string input_path;
  SystemMode mode = SystemMode::kLaplacian;
  bool undirected = true;
  std::vector<double> t_star{1.0};
  nlohmann::json goal;  // "mean", "variance", "repulsion" or an object
  double eta = 1.0;
  int m = 1;
  Method method = Method::kFlux;
  GpgmConfig gpgm;
  int seeds = 20;
  int steps = 2000;
  std::string output_dir;
  nlohmann::json x0 = "zeros";           // array, "zeros" or "uniform:<seed>"
  std::optional<MatrixXd> A;             // inline dynamics
  std::optional<MatrixXd> B;             // inline schematic
  nlohmann::json resolved;               // everything above, for hashing
};

/// Merges `overrides` into `base` key by key; objects merge recursively.
nlohmann::json merge(nlohmann::json base, const nlohmann::json& overrides);

/// Builds a RunConfig from a settings object (the merged flags and config
/// file). Throws fluxctl::Error(kInvalidInput) on bad values.
RunConfig make_config(const std::string& command, const nlohmann::json& settings);

/// 64-bit FNV-1a of the bytes.
std::uint64_t fnv1a(const std::string& bytes);

/// %.17g
std::string format_double(double value);

/// Entry point shared by the executable and the tests. Returns the process
/// exit code: 0 on success, 1 on usage errors, 2 on solver or input errors
/// (with error.json written into the output directory when one is known).
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace fluxctl::cli
