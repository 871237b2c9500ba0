#pragma once

// Command-line orchestration: run configuration, trace manifests and the
// gen-traces / run-baseline / train / eval / compare commands.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ho/channel.hpp"
#include "ho/env.hpp"
#include "ho/metrics.hpp"
#include "ho/ppo.hpp"
#include "ho/protocol.hpp"
#include "json.hpp"

namespace ho::cli {

enum class ExitCode : int {
  Ok = 0,
  Usage = 1,
  Config = 2,
  Io = 3,
  Incompatible = 4,
  Diverged = 5,
  Failure = 6,
};

class CliError : public std::runtime_error {
 public:
  CliError(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

class ConfigError : public CliError {
 public:
  explicit ConfigError(const std::string& what) : CliError(ExitCode::Config, what) {}
};

class IoError : public CliError {
 public:
  explicit IoError(const std::string& what) : CliError(ExitCode::Io, what) {}
};

class IncompatibleError : public CliError {
 public:
  explicit IncompatibleError(const std::string& what) : CliError(ExitCode::Incompatible, what) {}
};

// --- run configuration ------------------------------------------------------

struct LayoutConfig {
  std::size_t n_bs = 7;
  double area_width_m = 1000.0;
  double area_height_m = 1000.0;
  double tx_power_dbm = 46.0;
  double min_spacing_m = 200.0;
  // The layout is shared by every trace set generated with the same value,
  // so training and evaluation sets can use different trace seeds.
  std::uint64_t seed = 1;
};

struct MobilityConfig {
  double duration_s = 60.0;
  std::vector<double> speeds_kmh = {30.0, 50.0, 70.0, 90.0};
  std::size_t count = 10;  // traces per speed class
};

struct SweepConfig {
  std::vector<int> ttt_ms = {40, 80, 160};
  std::vector<double> off_db = {0.0, 1.0, 2.0};
};

struct RunConfig {
  LayoutConfig layout;
  MobilityConfig mobility;
  channel::RadioConfig radio;
  channel::FilterConfig filter;
  protocol::ProtocolConfig protocol;
  env::EnvConfig env;
  ppo::PpoConfig ppo;
  metrics::RateConfig rate;
  SweepConfig sweep;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the offending key.
  void validate() const;
};

// YAML document with one mapping per section: layout, mobility, radio,
// filter, a3, rlf, timing, env, ppo, metrics, sweep, run. Unknown sections or
// keys and ill-typed values raise ConfigError("<source>:<line>: ...").
RunConfig parse_config(std::string_view text, const std::string& source);
RunConfig load_config(const std::filesystem::path& path);

// Canonical snapshot embedded in every output.
nlohmann::ordered_json config_to_json(const RunConfig& cfg);
std::string config_to_yaml(const RunConfig& cfg);

// Deterministic 64-bit seed from a base seed and a path of integers.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

// --- manifests --------------------------------------------------------------

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

struct TraceEntry {
  std::string path;  // relative to the manifest's directory
  std::string sha256;
  double speed_kmh = 0.0;
  std::int64_t ue_id = 0;
  std::uint64_t seed = 0;

  bool operator==(const TraceEntry&) const = default;
};

struct Manifest {
  std::vector<TraceEntry> traces;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();

  // Identity of the trace set: hash over the ordered trace hashes.
  std::string set_hash() const;
};

void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

// Reads every trace listed in the manifest, verifying its hash.
std::vector<channel::RawTrace> load_traces(const Manifest& m, const std::filesystem::path& manifest_path);

// Measurement view used by every controller and metric: L1-filtered trace.
channel::RawTrace measured(const channel::RawTrace& raw, const channel::FilterConfig& filter);

// --- evaluation helpers -----------------------------------------------------

struct TraceRun {
  protocol::EventLog events;
  std::vector<int> serving;
};

TraceRun run_baseline_on(const channel::RawTrace& measured_trace, const channel::FilterConfig& filter,
                         const protocol::ProtocolConfig& cfg);

// Greedy policy over the whole trace with evaluation semantics (no
// termination, actions ignored while executing or recovering).
TraceRun run_agent_on(const channel::RawTrace& measured_trace, const ppo::Mlp& actor, const env::EnvConfig& env,
                      const protocol::ProtocolConfig& protocol);

// Runs fn(i) for i in [0, n) on a small thread pool; each index is handled
// exactly once, so results written to slot i are deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// --- entry point ------------------------------------------------------------

// Parses argv and dispatches to a subcommand; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ho::cli
