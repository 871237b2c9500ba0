#include <ostream>

#include "ho/metrics.hpp"
#include "ho/text.hpp"

namespace ho::metrics {
namespace {

using json = nlohmann::ordered_json;

std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json counts_to_json(const EventCounts& c) {
  return {{"ho_prep_start", c.ho_prep_start}, {"ho_abort", c.ho_abort}, {"ho_cmd", c.ho_cmd},
          {"ho_complete", c.ho_complete},     {"hof", c.hof},           {"hof_before_cmd", c.hof_before_cmd},
          {"pp", c.pp},                       {"rlf", c.rlf},           {"oos", c.oos}};
}

EventCounts counts_from_json(const json& j) {
  EventCounts c;
  c.ho_prep_start = j.at("ho_prep_start").get<std::int64_t>();
  c.ho_abort = j.at("ho_abort").get<std::int64_t>();
  c.ho_cmd = j.at("ho_cmd").get<std::int64_t>();
  c.ho_complete = j.at("ho_complete").get<std::int64_t>();
  c.hof = j.at("hof").get<std::int64_t>();
  c.hof_before_cmd = j.at("hof_before_cmd").get<std::int64_t>();
  c.pp = j.at("pp").get<std::int64_t>();
  c.rlf = j.at("rlf").get<std::int64_t>();
  c.oos = j.at("oos").get<std::int64_t>();
  return c;
}

}  // namespace

EvalReport evaluate_run(const channel::RawTrace& trace, std::span<const protocol::Event> events,
                        std::span<const int> serving, const RateConfig& cfg, std::string label) {
  cfg.validate();
  EvalReport r;
  r.label = std::move(label);
  r.n_traces = 1;
  r.n_ticks = static_cast<std::int64_t>(trace.n_ticks());
  const double se_avg = mean_spectral_efficiency(trace.sinr_db, serving);
  const double se_max = max_spectral_efficiency(trace.sinr_db);
  r.gamma_r = gamma_r(se_avg, se_max);
  r.avg_rate = cfg.bandwidth_hz * se_avg;
  r.max_rate = cfg.bandwidth_hz * se_max;
  r.counts = count_events(events);
  r.probs = event_probabilities(r.counts);
  auto samples = sinr_at_ho(events, trace.sinr_db);
  r.ecdf_start = Ecdf(std::move(samples.at_command));
  r.ecdf_end = Ecdf(std::move(samples.at_completion));
  r.seeds = {trace.seed};
  if (trace.meta.contains("speed_kmh")) r.speed_kmh = trace.meta.at("speed_kmh").get<double>();
  return r;
}

EvalReport pool(std::span<const EvalReport> reports, std::string label) {
  EvalReport out;
  out.label = std::move(label);
  if (reports.empty()) return out;
  out.speed_kmh = reports.front().speed_kmh;
  double gamma_sum = 0.0;
  double avg_sum = 0.0;
  double max_sum = 0.0;
  for (const auto& r : reports) {
    if (out.speed_kmh != r.speed_kmh) out.speed_kmh.reset();
    out.n_traces += r.n_traces;
    out.n_ticks += r.n_ticks;
    // Weight by trace count so pooling pooled reports stays a per-trace mean.
    const auto w = static_cast<double>(r.n_traces);
    gamma_sum += r.gamma_r * w;
    avg_sum += r.avg_rate * w;
    max_sum += r.max_rate * w;
    out.counts += r.counts;
    out.ecdf_start = out.ecdf_start.pooled(r.ecdf_start);
    out.ecdf_end = out.ecdf_end.pooled(r.ecdf_end);
    out.seeds.insert(out.seeds.end(), r.seeds.begin(), r.seeds.end());
  }
  if (out.n_traces > 0) {
    const auto n = static_cast<double>(out.n_traces);
    out.gamma_r = gamma_sum / n;
    out.avg_rate = avg_sum / n;
    out.max_rate = max_sum / n;
  }
  out.probs = event_probabilities(out.counts);
  return out;
}

void write_report_csv_header(std::ostream& out) {
  out << "label,speed_kmh,n_traces,n_ticks,gamma_r,avg_rate_bps,max_rate_bps,ho_prep_start,ho_abort,ho_cmd,"
         "ho_complete,hof,hof_before_cmd,pp,rlf,oos,hof_prob,pp_prob,p_cmd_sinr_le_qout,p_complete_sinr_le_qout\n";
}

void write_report_csv_row(std::ostream& out, const EvalReport& r, double q_out_db) {
  const auto& c = r.counts;
  out << r.label << ',' << optional_field(r.speed_kmh) << ',' << r.n_traces << ',' << r.n_ticks << ','
      << format_double(r.gamma_r) << ',' << format_double(r.avg_rate) << ',' << format_double(r.max_rate) << ','
      << c.ho_prep_start << ',' << c.ho_abort << ',' << c.ho_cmd << ',' << c.ho_complete << ',' << c.hof << ','
      << c.hof_before_cmd << ',' << c.pp << ',' << c.rlf << ',' << c.oos << ',' << optional_field(r.probs.hof_prob)
      << ',' << optional_field(r.probs.pp_prob) << ',' << optional_field(r.ecdf_start.prob_le(q_out_db)) << ','
      << optional_field(r.ecdf_end.prob_le(q_out_db)) << '\n';
}

json report_to_json(const EvalReport& r, double q_out_db) {
  return {{"label", r.label},
          {"speed_kmh", optional_json(r.speed_kmh)},
          {"n_traces", r.n_traces},
          {"n_ticks", r.n_ticks},
          {"gamma_r", r.gamma_r},
          {"avg_rate_bps", r.avg_rate},
          {"max_rate_bps", r.max_rate},
          {"counts", counts_to_json(r.counts)},
          {"hof_prob", optional_json(r.probs.hof_prob)},
          {"pp_prob", optional_json(r.probs.pp_prob)},
          {"q_out_db", q_out_db},
          {"p_cmd_sinr_le_qout", optional_json(r.ecdf_start.prob_le(q_out_db))},
          {"p_complete_sinr_le_qout", optional_json(r.ecdf_end.prob_le(q_out_db))},
          {"ecdf_start", r.ecdf_start.samples()},
          {"ecdf_end", r.ecdf_end.samples()},
          {"seeds", r.seeds}};
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.label = j.at("label").get<std::string>();
  r.speed_kmh = optional_from_json(j.at("speed_kmh"));
  r.n_traces = j.at("n_traces").get<std::size_t>();
  r.n_ticks = j.at("n_ticks").get<std::int64_t>();
  r.gamma_r = j.at("gamma_r").get<double>();
  r.avg_rate = j.at("avg_rate_bps").get<double>();
  r.max_rate = j.at("max_rate_bps").get<double>();
  r.counts = counts_from_json(j.at("counts"));
  r.probs = event_probabilities(r.counts);
  r.ecdf_start = Ecdf(j.at("ecdf_start").get<std::vector<double>>());
  r.ecdf_end = Ecdf(j.at("ecdf_end").get<std::vector<double>>());
  r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  return r;
}

}  // namespace ho::metrics
