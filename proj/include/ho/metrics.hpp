#pragma once

// Evaluation quantities: average and idealized maximum rate, relative rate,
// HOF/PP probabilities, and SINR ECDFs at HO command and completion.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ho/channel.hpp"
#include "ho/protocol.hpp"
#include "json.hpp"

namespace ho::metrics {

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RateConfig {
  double bandwidth_hz = 10e6;

  void validate() const;
};

// B log2(1 + SINR_linear).
double shannon_rate(double sinr_db, double bandwidth_hz);

// The same averages in bit/s/Hz (bandwidth factored out).
double mean_spectral_efficiency(const channel::Matrix& sinr_db, std::span<const int> serving);
double max_spectral_efficiency(const channel::Matrix& sinr_db);

// (1/T) sum_t rate of the serving cell; kNoBs ticks contribute 0.
double average_rate(const channel::Matrix& sinr_db, std::span<const int> serving, const RateConfig& cfg);

// (1/T) sum_t max_b rate of b.
double max_rate(const channel::Matrix& sinr_db, const RateConfig& cfg);

double gamma_r(double avg_rate, double max_rate);

// Serving BS with the highest SINR at every tick (ties: lowest index).
std::vector<int> oracle_timeline(const channel::Matrix& sinr_db);

struct EventCounts {
  std::int64_t ho_prep_start = 0;
  std::int64_t ho_abort = 0;
  std::int64_t ho_cmd = 0;
  std::int64_t ho_complete = 0;
  std::int64_t hof = 0;
  // HOFs declared while still preparing, i.e. never reaching HO_CMD.
  std::int64_t hof_before_cmd = 0;
  std::int64_t pp = 0;
  std::int64_t rlf = 0;
  std::int64_t oos = 0;

  EventCounts& operator+=(const EventCounts& o);
  bool operator==(const EventCounts&) const = default;
};

EventCounts count_events(std::span<const protocol::Event> log);

struct EventProbabilities {
  std::optional<double> hof_prob;  // HOF / (HO_CMD + HOF before command)
  std::optional<double> pp_prob;   // PP / HO_COMPLETE
};

EventProbabilities event_probabilities(const EventCounts& counts);

// Empirical CDF over a sorted sample set.
class Ecdf {
 public:
  Ecdf() = default;
  explicit Ecdf(std::vector<double> samples);

  const std::vector<double>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  // P(X <= x); absent for an empty sample set.
  std::optional<double> prob_le(double x) const;

  // Union of both sample sets.
  Ecdf pooled(const Ecdf& other) const;

  // Two columns (sinr_db, cum_prob), one row per sample.
  void write_csv(std::ostream& out) const;

  bool operator==(const Ecdf&) const = default;

 private:
  std::vector<double> samples_;
};

struct HoSinrSamples {
  std::vector<double> at_command;     // serving-cell SINR at each HO_CMD
  std::vector<double> at_completion;  // target-cell SINR at each HO_COMPLETE
};

HoSinrSamples sinr_at_ho(std::span<const protocol::Event> log, const channel::Matrix& sinr_db);

struct EvalReport {
  std::string label;
  std::optional<double> speed_kmh;
  std::size_t n_traces = 0;
  std::int64_t n_ticks = 0;
  // Mean over traces of each trace's relative rate.
  double gamma_r = 0.0;
  double avg_rate = 0.0;
  double max_rate = 0.0;
  EventCounts counts;
  EventProbabilities probs;
  Ecdf ecdf_start;
  Ecdf ecdf_end;
  std::vector<std::uint64_t> seeds;
};

// Report for one trace given the controller's events and serving timeline.
EvalReport evaluate_run(const channel::RawTrace& trace, std::span<const protocol::Event> events,
                        std::span<const int> serving, const RateConfig& cfg, std::string label = {});

// Ordered reduction: counts add, ECDF samples concatenate, rates average
// over traces.
EvalReport pool(std::span<const EvalReport> reports, std::string label);

void write_report_csv_header(std::ostream& out);
void write_report_csv_row(std::ostream& out, const EvalReport& r, double q_out_db);

nlohmann::ordered_json report_to_json(const EvalReport& r, double q_out_db);
EvalReport report_from_json(const nlohmann::ordered_json& j);

}  // namespace ho::metrics
