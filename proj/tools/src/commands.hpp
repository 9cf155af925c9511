#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "manifest.hpp"

namespace cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitParse = 3;
inline constexpr int kExitFit = 4;
inline constexpr int kExitBootstrap = 5;
inline constexpr int kExitReplayMismatch = 6;

struct ReserveArgs {
  std::string triangle;
  bool cumulative = false;
  double huber_c = 1.345;
  double flag_threshold = 0.10;
};

struct BootstrapArgs {
  std::string triangle;
  bool cumulative = false;
  std::string method = "tcl";
  std::string residuals = "cordeiro";
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  std::vector<double> levels{0.75, 0.90, 0.95, 0.995};
  double huber_c = 1.345;
  double ifb_d = 30.0;
  double ifb_gamma = 10.0;
  double ifb_quantile = 0.90;
  double winsor_fraction = 0.10;
  int threads = 0;
  std::size_t bins = 50;
  std::string reference;   ///< replicates.csv of another run, for QQ pairs
};

struct DiagnoseArgs {
  std::string triangle;
  bool cumulative = false;
  double huber_c = 1.345;
};

struct ConfigFileArgs {
  std::string config;
  int threads = 0;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ReserveArgs, triangle, cumulative, huber_c, flag_threshold)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BootstrapArgs, triangle, cumulative, method, residuals, replicates, seed,
                                                levels, huber_c, ifb_d, ifb_gamma, ifb_quantile, winsor_fraction,
                                                threads, bins, reference)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DiagnoseArgs, triangle, cumulative, huber_c)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ConfigFileArgs, config, threads)

/// Each command writes its files into @p out_dir, prints a short summary to
/// @p log and returns the manifest (also written as manifest.json).
RunManifest cmd_reserve(const ReserveArgs& args, const std::string& out_dir, std::ostream& log);
RunManifest cmd_bootstrap(const BootstrapArgs& args, const std::string& out_dir, std::ostream& log);
RunManifest cmd_cdr(const BootstrapArgs& args, const std::string& out_dir, std::ostream& log);
RunManifest cmd_simulate(const ConfigFileArgs& args, const std::string& out_dir, std::ostream& log);
RunManifest cmd_coverage(const ConfigFileArgs& args, const std::string& out_dir, std::ostream& log);
RunManifest cmd_diagnose(const DiagnoseArgs& args, const std::string& out_dir, std::ostream& log);

/// Re-runs the command recorded in @p manifest_path into @p out_dir and
/// compares output digests. Returns the number of mismatching files.
int cmd_replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& log);

/// Maps the exception in flight to an exit status and prints it.
int report_error(std::ostream& err);

}  // namespace cli
