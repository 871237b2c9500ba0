#include <algorithm>
#include <ostream>

#include "ho/metrics.hpp"
#include "ho/text.hpp"

namespace ho::metrics {

using protocol::EventKind;

EventCounts& EventCounts::operator+=(const EventCounts& o) {
  ho_prep_start += o.ho_prep_start;
  ho_abort += o.ho_abort;
  ho_cmd += o.ho_cmd;
  ho_complete += o.ho_complete;
  hof += o.hof;
  hof_before_cmd += o.hof_before_cmd;
  pp += o.pp;
  rlf += o.rlf;
  oos += o.oos;
  return *this;
}

EventCounts count_events(std::span<const protocol::Event> log) {
  EventCounts c;
  for (std::size_t i = 0; i < log.size(); ++i) {
    switch (log[i].kind) {
      case EventKind::HoPrepStart: ++c.ho_prep_start; break;
      case EventKind::HoAbort: ++c.ho_abort; break;
      case EventKind::HoCmd: ++c.ho_cmd; break;
      case EventKind::HoComplete: ++c.ho_complete; break;
      case EventKind::PingPong: ++c.pp; break;
      case EventKind::OutOfSync: ++c.oos; break;
      case EventKind::Rlf: ++c.rlf; break;
      case EventKind::Recovered: break;
      case EventKind::Hof: {
        ++c.hof;
        // A failed command is logged as HO_CMD immediately followed by HOF.
        const bool at_command = i > 0 && log[i - 1].kind == EventKind::HoCmd && log[i - 1].tick == log[i].tick;
        if (!at_command) ++c.hof_before_cmd;
        break;
      }
    }
  }
  return c;
}

EventProbabilities event_probabilities(const EventCounts& c) {
  EventProbabilities p;
  const std::int64_t attempts = c.ho_cmd + c.hof_before_cmd;
  if (attempts > 0) p.hof_prob = static_cast<double>(c.hof) / static_cast<double>(attempts);
  if (c.ho_complete > 0) p.pp_prob = static_cast<double>(c.pp) / static_cast<double>(c.ho_complete);
  return p;
}

Ecdf::Ecdf(std::vector<double> samples) : samples_(std::move(samples)) {
  std::sort(samples_.begin(), samples_.end());
}

std::optional<double> Ecdf::prob_le(double x) const {
  if (samples_.empty()) return std::nullopt;
  const auto n_le = std::upper_bound(samples_.begin(), samples_.end(), x) - samples_.begin();
  return static_cast<double>(n_le) / static_cast<double>(samples_.size());
}

Ecdf Ecdf::pooled(const Ecdf& other) const {
  std::vector<double> all;
  all.reserve(samples_.size() + other.samples_.size());
  std::merge(samples_.begin(), samples_.end(), other.samples_.begin(), other.samples_.end(),
             std::back_inserter(all));
  Ecdf out;
  out.samples_ = std::move(all);
  return out;
}

void Ecdf::write_csv(std::ostream& out) const {
  out << "sinr_db,cum_prob\n";
  const double n = static_cast<double>(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    out << format_double(samples_[i]) << ',' << format_double(static_cast<double>(i + 1) / n) << '\n';
  }
}

HoSinrSamples sinr_at_ho(std::span<const protocol::Event> log, const channel::Matrix& sinr_db) {
  HoSinrSamples out;
  auto at = [&](const protocol::Event& e, int bs) {
    if (e.tick < 0 || static_cast<std::size_t>(e.tick) >= sinr_db.rows() || bs < 0 ||
        static_cast<std::size_t>(bs) >= sinr_db.cols()) {
      throw MetricsError("event at tick " + std::to_string(e.tick) + " lies outside the trace");
    }
    return sinr_db(static_cast<std::size_t>(e.tick), static_cast<std::size_t>(bs));
  };
  for (const auto& e : log) {
    if (e.kind == EventKind::HoCmd) out.at_command.push_back(at(e, e.serving));
    if (e.kind == EventKind::HoComplete) out.at_completion.push_back(at(e, e.target));
  }
  return out;
}

}  // namespace ho::metrics
