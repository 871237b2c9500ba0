#include <algorithm>
#include <atomic>
#include <bit>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "ho/cli.hpp"
#include "ho/text.hpp"
#include "ho/trace_io.hpp"

namespace ho::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Seed-derivation tags keep independent random streams apart.
constexpr std::uint64_t kTagPath = 1;
constexpr std::uint64_t kTagShadow = 2;
constexpr std::uint64_t kTagEnv = 3;

constexpr int kReportVersion = 1;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  bool verbose = false;
};

struct Context {
  RunConfig cfg;
  fs::path out;
  bool verbose = false;
  std::ostream& log;
  std::ostream& err;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  finish(out, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

std::string speed_dir(double speed_kmh) { return "speed_" + format_double(speed_kmh); }

struct LoadedSet {
  Manifest manifest;
  std::vector<channel::RawTrace> measured;
};

LoadedSet load_set(const fs::path& manifest_path, const RunConfig& cfg) {
  LoadedSet s;
  s.manifest = read_manifest(manifest_path);
  const auto raw = load_traces(s.manifest, manifest_path);
  if (raw.empty()) throw IoError("manifest " + manifest_path.string() + " lists no traces");
  s.measured.resize(raw.size());
  parallel_for(raw.size(), [&](std::size_t i) { s.measured[i] = measured(raw[i], cfg.filter); });
  return s;
}

std::vector<metrics::EvalReport> evaluate_all(const LoadedSet& set, const std::vector<TraceRun>& runs,
                                              const metrics::RateConfig& rate) {
  std::vector<metrics::EvalReport> reports(runs.size());
  parallel_for(runs.size(), [&](std::size_t i) {
    reports[i] = metrics::evaluate_run(set.measured[i], runs[i].events, runs[i].serving, rate,
                                       set.manifest.traces[i].path);
    reports[i].speed_kmh = set.manifest.traces[i].speed_kmh;
  });
  return reports;
}

// Reports pooled per speed class (ascending), then over the whole set.
std::vector<metrics::EvalReport> pool_by_speed(const std::vector<metrics::EvalReport>& reports,
                                               metrics::EvalReport& all) {
  std::map<double, std::vector<metrics::EvalReport>> groups;
  for (const auto& r : reports) groups[r.speed_kmh.value_or(0.0)].push_back(r);
  std::vector<metrics::EvalReport> out;
  for (const auto& [speed, group] : groups) out.push_back(metrics::pool(group, speed_dir(speed)));
  all = metrics::pool(reports, "all");
  return out;
}

void write_eval_outputs(const Context& ctx, const fs::path& dir, const std::string& protocol_name,
                        const LoadedSet& set, const std::vector<TraceRun>& runs,
                        const std::vector<metrics::EvalReport>& reports, json controller) {
  ensure_dir(dir);
  const double q_out = ctx.cfg.protocol.rlf.q_out_db;

  {
    const auto path = dir / "per_trace.csv";
    auto out = open_out(path);
    metrics::write_report_csv_header(out);
    for (const auto& r : reports) metrics::write_report_csv_row(out, r, q_out);
    finish(out, path);
  }
  metrics::EvalReport all;
  const auto by_speed = pool_by_speed(reports, all);
  {
    const auto path = dir / "pooled.csv";
    auto out = open_out(path);
    metrics::write_report_csv_header(out);
    for (const auto& r : by_speed) metrics::write_report_csv_row(out, r, q_out);
    metrics::write_report_csv_row(out, all, q_out);
    finish(out, path);
  }
  {
    const auto path = dir / "events.csv";
    auto out = open_out(path);
    out << "trace,tick,kind,serving,target\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
      for (const auto& e : runs[i].events) {
        out << set.manifest.traces[i].path << ',' << e.tick << ',' << protocol::to_string(e.kind) << ','
            << e.serving << ',' << e.target << '\n';
      }
    }
    finish(out, path);
  }
  json speeds = json::array();
  for (const auto& r : by_speed) speeds.push_back(metrics::report_to_json(r, q_out));
  const json report = {{"format", "ho-eval-report"},
                       {"version", kReportVersion},
                       {"protocol", protocol_name},
                       {"manifest_hash", set.manifest.set_hash()},
                       {"config", config_to_json(ctx.cfg)},
                       {"controller", std::move(controller)},
                       {"q_out_db", q_out},
                       {"by_speed", std::move(speeds)},
                       {"all", metrics::report_to_json(all, q_out)}};
  write_text(dir / "report.json", report.dump(1) + "\n");
  write_text(dir / "config.yaml", config_to_yaml(ctx.cfg));

  ctx.log << protocol_name << ": " << all.n_traces << " traces, gamma_r " << format_double(all.gamma_r)
          << ", HO_CMD " << all.counts.ho_cmd << ", HOF " << all.counts.hof << ", PP " << all.counts.pp << '\n';
}

// --- gen-traces ---------------------------------------------------------------

int cmd_gen_traces(Context& ctx) {
  const auto& cfg = ctx.cfg;
  ensure_dir(ctx.out);
  channel::BsLayout layout;
  try {
    layout = channel::generate_layout(cfg.layout.n_bs, {cfg.layout.area_width_m, cfg.layout.area_height_m},
                                      cfg.layout.seed, cfg.layout.tx_power_dbm, cfg.layout.min_spacing_m);
  } catch (const channel::LayoutError& e) {
    throw ConfigError(std::string("layout: ") + e.what());
  }
  const channel::Area area{cfg.layout.area_width_m, cfg.layout.area_height_m};

  Manifest manifest;
  manifest.config = config_to_json(cfg);
  for (double speed : cfg.mobility.speeds_kmh) {
    const fs::path sub = speed_dir(speed);
    if (cfg.mobility.count > 0) ensure_dir(ctx.out / sub);
    std::vector<TraceEntry> entries(cfg.mobility.count);
    parallel_for(cfg.mobility.count, [&](std::size_t i) {
      const std::uint64_t trace_seed = derive_seed(cfg.seed, {std::bit_cast<std::uint64_t>(speed), i});
      const auto path = channel::generate_path(area, speed, cfg.mobility.duration_s,
                                               derive_seed(trace_seed, {kTagPath}));
      const auto trace = channel::synthesize_trace(layout, path, cfg.radio, derive_seed(trace_seed, {kTagShadow}),
                                                   static_cast<std::int64_t>(i));
      const std::string text = channel::format_trace(trace);
      char name[32];
      std::snprintf(name, sizeof(name), "ue_%04zu.trace.csv", i);
      const auto rel = sub / name;
      write_text(ctx.out / rel, text);
      entries[i] = {rel.generic_string(), sha256_hex(text), speed, static_cast<std::int64_t>(i), trace_seed};
    });
    manifest.traces.insert(manifest.traces.end(), entries.begin(), entries.end());
  }
  write_manifest(manifest, ctx.out / "manifest.json");
  ctx.log << "wrote " << manifest.traces.size() << " traces, set hash " << manifest.set_hash() << '\n';
  return 0;
}

// --- run-baseline -------------------------------------------------------------

std::vector<TraceRun> baseline_runs(const LoadedSet& set, const RunConfig& cfg, const protocol::ProtocolConfig& p) {
  std::vector<TraceRun> runs(set.measured.size());
  parallel_for(runs.size(), [&](std::size_t i) { runs[i] = run_baseline_on(set.measured[i], cfg.filter, p); });
  return runs;
}

int cmd_run_baseline(Context& ctx, const fs::path& traces, bool sweep) {
  const auto set = load_set(traces, ctx.cfg);
  ensure_dir(ctx.out);
  protocol::ProtocolConfig chosen = ctx.cfg.protocol;
  json controller = json::object();

  if (sweep) {
    const auto path = ctx.out / "sweep.csv";
    auto out = open_out(path);
    out << "ttt_ms,off_db,gamma_r,hof_prob,pp_prob,ho_cmd,hof,pp\n";
    std::optional<double> best;
    json grid = json::array();
    for (int ttt : ctx.cfg.sweep.ttt_ms) {
      for (double off : ctx.cfg.sweep.off_db) {
        protocol::ProtocolConfig p = ctx.cfg.protocol;
        p.a3.ttt_ms = ttt;
        p.a3.off_db = off;
        const auto reports = evaluate_all(set, baseline_runs(set, ctx.cfg, p), ctx.cfg.rate);
        const auto all = metrics::pool(reports, "all");
        auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
        out << ttt << ',' << format_double(off) << ',' << format_double(all.gamma_r) << ','
            << opt(all.probs.hof_prob) << ',' << opt(all.probs.pp_prob) << ',' << all.counts.ho_cmd << ','
            << all.counts.hof << ',' << all.counts.pp << '\n';
        grid.push_back({{"ttt_ms", ttt}, {"off_db", off}, {"gamma_r", all.gamma_r}});
        // Strictly better only: ties keep the earlier grid point.
        if (!best || all.gamma_r > *best) {
          best = all.gamma_r;
          chosen = p;
        }
        if (ctx.verbose) {
          ctx.log << "sweep ttt=" << ttt << " off=" << format_double(off) << " gamma_r=" << format_double(all.gamma_r)
                  << '\n';
        }
      }
    }
    finish(out, path);
    controller["sweep"] = std::move(grid);
    ctx.log << "best A3 config: ttt_ms=" << chosen.a3.ttt_ms << " off_db=" << format_double(chosen.a3.off_db) << '\n';
  }
  controller["ttt_ms"] = chosen.a3.ttt_ms;
  controller["off_db"] = chosen.a3.off_db;
  controller["hys_db"] = chosen.a3.hys_db;

  const auto runs = baseline_runs(set, ctx.cfg, chosen);
  const auto reports = evaluate_all(set, runs, ctx.cfg.rate);
  RunConfig snapshot = ctx.cfg;
  snapshot.protocol = chosen;
  Context out_ctx{snapshot, ctx.out, ctx.verbose, ctx.log, ctx.err};
  write_eval_outputs(out_ctx, ctx.out, "baseline", set, runs, reports, std::move(controller));
  return 0;
}

// --- train --------------------------------------------------------------------

// Keeps the header and rows up to `last_update` of an existing training log.
std::string truncate_log(const fs::path& path, std::int64_t last_update) {
  std::ifstream in(path, std::ios::binary);
  std::string out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      out += line + "\n";
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    const auto update = parse_double(line.substr(0, comma));
    if (update && *update <= static_cast<double>(last_update)) out += line + "\n";
  }
  return out;
}

int cmd_train(Context& ctx, const fs::path& traces, const std::optional<std::int64_t>& steps,
              const std::optional<double>& phase_split, fs::path checkpoint_dir, const std::string& resume,
              std::int64_t checkpoint_every) {
  const auto set = load_set(traces, ctx.cfg);
  auto dataset = std::make_shared<const env::Dataset>(set.measured);
  ppo::PpoConfig pcfg = ctx.cfg.ppo;
  pcfg.seed = ctx.cfg.seed;
  if (steps) pcfg.total_timesteps = *steps;
  if (phase_split) pcfg.phase1_fraction = *phase_split;
  try {
    pcfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (checkpoint_every <= 0) throw ConfigError("--checkpoint-every must be positive");
  ensure_dir(ctx.out);
  if (checkpoint_dir.empty()) checkpoint_dir = ctx.out / "checkpoints";
  ensure_dir(checkpoint_dir);

  const auto env_cfg = ctx.cfg.env;
  const auto protocol = ctx.cfg.protocol;
  const std::uint64_t seed = ctx.cfg.seed;
  ppo::Trainer trainer(pcfg, [&](std::size_t i) {
    return std::make_unique<env::HandoverEnv>(dataset, env_cfg, protocol, derive_seed(seed, {kTagEnv, i}));
  });

  const fs::path log_path = ctx.out / "train_log.csv";
  std::string log_prefix;
  if (!resume.empty()) {
    ppo::Checkpoint ck;
    try {
      ck = ppo::load_checkpoint(resume);
      ppo::ensure_compatible(ck, 2 * dataset->front().n_bs() + 1, dataset->front().n_bs());
    } catch (const ppo::CheckpointError& e) {
      throw IoError(e.what());
    } catch (const ppo::IncompatibleCheckpoint& e) {
      throw IncompatibleError(e.what());
    }
    if (ck.state.model.actor.sizes() != trainer.model().actor.sizes()) {
      throw IncompatibleError("checkpoint hidden layers differ from ppo.hidden");
    }
    trainer.restore(ck.state);
    if (fs::exists(log_path)) log_prefix = truncate_log(log_path, ck.state.update);
    ctx.log << "resumed from " << resume << " at timestep " << ck.state.timesteps << '\n';
  }
  auto log = open_out(log_path);
  if (log_prefix.empty()) {
    ppo::write_log_header(log);
  } else {
    log << log_prefix;
  }

  const json run = {{"manifest_hash", set.manifest.set_hash()}, {"config", config_to_json(ctx.cfg)}};
  auto save = [&](const fs::path& path) {
    try {
      ppo::save_checkpoint({trainer.snapshot(), pcfg, run}, path);
    } catch (const ppo::CheckpointError& e) {
      throw IoError(e.what());
    }
  };
  fs::path last_good;
  try {
    trainer.train([&](const ppo::UpdateMetrics& m) {
      ppo::write_log_row(log, m);
      log.flush();
      if (m.update % checkpoint_every == 0) {
        char name[40];
        std::snprintf(name, sizeof(name), "update_%06lld.json", static_cast<long long>(m.update));
        last_good = checkpoint_dir / name;
        save(last_good);
      }
      if (ctx.verbose) {
        ctx.log << "update " << m.update << " steps " << m.timesteps << " phase " << m.phase << " reward "
                << (m.mean_episode_reward ? format_double(*m.mean_episode_reward) : "-") << '\n';
      }
    });
  } catch (const ppo::TrainingDiverged& e) {
    finish(log, log_path);
    ctx.err << "training diverged: " << e.what() << '\n';
    ctx.err << "last good checkpoint: " << (last_good.empty() ? std::string("none") : last_good.string()) << '\n';
    return static_cast<int>(ExitCode::Diverged);
  }
  finish(log, log_path);
  save(checkpoint_dir / "final.json");
  ctx.log << "trained " << trainer.timesteps() << " steps; final checkpoint " << (checkpoint_dir / "final.json").string()
          << '\n';
  return 0;
}

// --- eval ---------------------------------------------------------------------

int cmd_eval(Context& ctx, const fs::path& checkpoint, const fs::path& traces) {
  ppo::Checkpoint ck;
  try {
    ck = ppo::load_checkpoint(checkpoint);
  } catch (const ppo::CheckpointError& e) {
    throw IoError(e.what());
  }
  const auto set = load_set(traces, ctx.cfg);
  const std::size_t n_bs = set.measured.front().n_bs();
  try {
    ppo::ensure_compatible(ck, 2 * n_bs + 1, n_bs);
  } catch (const ppo::IncompatibleCheckpoint& e) {
    throw IncompatibleError(e.what());
  }
  const auto& actor = ck.state.model.actor;
  std::vector<TraceRun> runs(set.measured.size());
  parallel_for(runs.size(), [&](std::size_t i) {
    runs[i] = run_agent_on(set.measured[i], actor, ctx.cfg.env, ctx.cfg.protocol);
  });
  const auto reports = evaluate_all(set, runs, ctx.cfg.rate);
  const std::string trained_on = ck.run_snapshot.value("manifest_hash", std::string());
  json controller = {{"checkpoint_sha256", sha256_file(checkpoint)},
                     {"timesteps", ck.state.timesteps},
                     {"trained_on_manifest", trained_on},
                     {"held_out", trained_on != set.manifest.set_hash()}};
  write_eval_outputs(ctx, ctx.out, "agent", set, runs, reports, std::move(controller));
  return 0;
}

// --- compare ------------------------------------------------------------------

json load_report(const fs::path& path) {
  json j = read_json(path);
  if (j.value("format", std::string()) != "ho-eval-report" || j.value("version", 0) != kReportVersion) {
    throw IncompatibleError(path.string() + " is not an evaluation report");
  }
  return j;
}

int cmd_compare(Context& ctx, const fs::path& baseline_path, const fs::path& agent_path) {
  const json b = load_report(baseline_path);
  const json a = load_report(agent_path);
  const auto hb = b.at("manifest_hash").get<std::string>();
  const auto ha = a.at("manifest_hash").get<std::string>();
  if (hb != ha) {
    throw IncompatibleError("reports come from different trace sets: baseline manifest " + hb + ", agent manifest " +
                            ha);
  }
  const double q_out = b.at("q_out_db").get<double>();
  ensure_dir(ctx.out);

  std::vector<std::pair<std::string, std::pair<metrics::EvalReport, metrics::EvalReport>>> rows;
  const auto& bs = b.at("by_speed");
  const auto& as = a.at("by_speed");
  if (bs.size() != as.size()) throw IncompatibleError("reports have different speed classes");
  for (std::size_t i = 0; i < bs.size(); ++i) {
    auto rb = metrics::report_from_json(bs[i]);
    auto ra = metrics::report_from_json(as[i]);
    if (rb.speed_kmh != ra.speed_kmh) throw IncompatibleError("reports have different speed classes");
    rows.push_back({rb.speed_kmh ? format_double(*rb.speed_kmh) : std::string(), {rb, ra}});
  }
  const auto all_b = metrics::report_from_json(b.at("all"));
  const auto all_a = metrics::report_from_json(a.at("all"));
  rows.push_back({"all", {all_b, all_a}});

  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  json table = json::array();
  {
    const auto path = ctx.out / "comparison.csv";
    auto out = open_out(path);
    out << "speed_kmh,n_traces,gamma_r_baseline,gamma_r_agent,hof_prob_baseline,hof_prob_agent,pp_prob_baseline,"
           "pp_prob_agent,p_cmd_sinr_le_qout_baseline,p_cmd_sinr_le_qout_agent,ho_cmd_baseline,ho_cmd_agent\n";
    for (const auto& [speed, pair] : rows) {
      const auto& [rb, ra] = pair;
      out << speed << ',' << rb.n_traces << ',' << format_double(rb.gamma_r) << ',' << format_double(ra.gamma_r)
          << ',' << opt(rb.probs.hof_prob) << ',' << opt(ra.probs.hof_prob) << ',' << opt(rb.probs.pp_prob) << ','
          << opt(ra.probs.pp_prob) << ',' << opt(rb.ecdf_start.prob_le(q_out)) << ','
          << opt(ra.ecdf_start.prob_le(q_out)) << ',' << rb.counts.ho_cmd << ',' << ra.counts.ho_cmd << '\n';
      table.push_back({{"speed_kmh", speed},
                       {"baseline", metrics::report_to_json(rb, q_out)},
                       {"agent", metrics::report_to_json(ra, q_out)}});
    }
    finish(out, path);
  }
  auto write_ecdf = [&](const std::string& name, const metrics::Ecdf& e) {
    const auto path = ctx.out / name;
    auto out = open_out(path);
    e.write_csv(out);
    finish(out, path);
  };
  write_ecdf("ecdf_baseline_start.csv", all_b.ecdf_start);
  write_ecdf("ecdf_baseline_end.csv", all_b.ecdf_end);
  write_ecdf("ecdf_agent_start.csv", all_a.ecdf_start);
  write_ecdf("ecdf_agent_end.csv", all_a.ecdf_end);
  const json summary = {{"format", "ho-comparison"},
                        {"version", 1},
                        {"manifest_hash", hb},
                        {"q_out_db", q_out},
                        {"baseline_controller", b.at("controller")},
                        {"agent_controller", a.at("controller")},
                        {"rows", std::move(table)}};
  write_text(ctx.out / "comparison.json", summary.dump(1) + "\n");
  ctx.log << "compared " << rows.size() - 1 << " speed classes\n";
  return 0;
}

}  // namespace

// --- evaluation helpers -----------------------------------------------------

TraceRun run_baseline_on(const channel::RawTrace& m, const channel::FilterConfig& filter,
                         const protocol::ProtocolConfig& cfg) {
  const auto rsrp_l3 = channel::l3_filter(m.rsrp_dbm, filter);
  auto r = protocol::run_baseline(rsrp_l3.data(), m.sinr_db.data(), m.n_bs(), cfg);
  return {std::move(r.events), std::move(r.timeline.serving)};
}

TraceRun run_agent_on(const channel::RawTrace& m, const ppo::Mlp& actor, const env::EnvConfig& env_cfg,
                      const protocol::ProtocolConfig& protocol) {
  env::EnvConfig cfg = env_cfg;
  cfg.evaluation = true;
  cfg.shuffle_bs = false;
  cfg.max_episode_ticks = static_cast<int>(std::max<std::size_t>(m.n_ticks(), 1));
  auto dataset = std::make_shared<const env::Dataset>(env::Dataset{m});
  env::HandoverEnv env(dataset, cfg, protocol, 0);
  std::vector<int> identity(m.n_bs());
  std::iota(identity.begin(), identity.end(), 0);
  env::StateVector state = env.reset_to(0, identity);
  while (!env.done()) {
    const int action = ppo::greedy_action(ppo::actor_forward(actor, state.values()));
    state = env.step(action).next_state;
  }
  return {env.episode_events(), env.serving_timeline()};
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cellular handover simulation: Event-A3 baseline and PPO agent"};
  app.name("hoctl");
  app.require_subcommand(1);

  GlobalOptions g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "YAML run configuration");
  auto* seed_opt = app.add_option("--seed", seed, "Run seed (overrides run.seed)");
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("-v,--verbose", g.verbose, "Progress messages");

  auto* gen = app.add_subcommand("gen-traces", "Generate synthetic trace files and a manifest");
  std::size_t count = 0;
  std::vector<double> speeds;
  double duration = 0.0;
  auto* count_opt = gen->add_option("--count", count, "Traces per speed class");
  auto* speed_opt = gen->add_option("--speed", speeds, "Speed class in km/h (repeatable)");
  auto* duration_opt = gen->add_option("--duration", duration, "Trace duration in seconds");

  auto* base = app.add_subcommand("run-baseline", "Evaluate the Event-A3 baseline");
  std::string traces;
  int ttt = 0;
  double off = 0.0;
  bool sweep = false;
  base->add_option("--traces", traces, "Trace manifest")->required();
  auto* ttt_opt = base->add_option("--ttt", ttt, "A3 time-to-trigger in ms");
  auto* off_opt = base->add_option("--off", off, "A3 offset in dB");
  base->add_flag("--sweep", sweep, "Select the best (TTT, Off) of the sweep grid by mean relative rate");

  auto* train = app.add_subcommand("train", "Train the PPO agent");
  std::int64_t steps = 0;
  double phase_split = 0.0;
  std::string checkpoint_dir;
  std::string resume;
  std::int64_t checkpoint_every = 10;
  train->add_option("--traces", traces, "Training trace manifest")->required();
  auto* steps_opt = train->add_option("--steps", steps, "Total environment steps");
  auto* split_opt = train->add_option("--phase-split", phase_split, "Fraction of steps trained in phase 1");
  train->add_option("--checkpoint-dir", checkpoint_dir, "Checkpoint directory (default <out>/checkpoints)");
  train->add_option("--resume", resume, "Continue from this checkpoint");
  train->add_option("--checkpoint-every", checkpoint_every, "Updates between checkpoints");

  auto* eval = app.add_subcommand("eval", "Evaluate a trained agent greedily");
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--traces", traces, "Trace manifest")->required();

  auto* compare = app.add_subcommand("compare", "Compare baseline and agent reports");
  std::string baseline_report;
  std::string agent_report;
  compare->add_option("--baseline", baseline_report, "Baseline report.json")->required();
  compare->add_option("--agent", agent_report, "Agent report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::Usage);
  }

  try {
    RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
    // Flags override the file, which overrides defaults.
    if (*seed_opt) cfg.seed = seed;
    if (*count_opt) cfg.mobility.count = count;
    if (*speed_opt) cfg.mobility.speeds_kmh = speeds;
    if (*duration_opt) cfg.mobility.duration_s = duration;
    if (*ttt_opt) cfg.protocol.a3.ttt_ms = ttt;
    if (*off_opt) cfg.protocol.a3.off_db = off;
    cfg.validate();

    Context ctx{cfg, g.out, g.verbose, out, err};
    if (*gen) return cmd_gen_traces(ctx);
    if (*base) return cmd_run_baseline(ctx, traces, sweep);
    if (*train) {
      return cmd_train(ctx, traces, *steps_opt ? std::optional(steps) : std::nullopt,
                       *split_opt ? std::optional(phase_split) : std::nullopt, checkpoint_dir, resume,
                       checkpoint_every);
    }
    if (*eval) return cmd_eval(ctx, checkpoint, traces);
    if (*compare) return cmd_compare(ctx, baseline_report, agent_report);
    return static_cast<int>(ExitCode::Usage);
  } catch (const CliError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Failure);
  }
}

}  // namespace ho::cli
