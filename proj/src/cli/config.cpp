#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "ho/cli.hpp"
#include "ho/text.hpp"

namespace ho::cli {
namespace {

using json = nlohmann::ordered_json;

// One configurable key: how to read it from YAML and how to snapshot it.
struct Field {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const YAML::Node&)> set;
  std::function<json(const RunConfig&)> get;
};

template <class T>
const char* type_name() {
  if constexpr (std::is_same_v<T, bool>) return "a boolean";
  else if constexpr (std::is_floating_point_v<T>) return "a number";
  else if constexpr (std::is_unsigned_v<T>) return "a non-negative integer";
  else if constexpr (std::is_integral_v<T>) return "an integer";
  else return "a list";
}

std::string where(const std::string& source, const YAML::Node& n) {
  return source + ":" + std::to_string(n.Mark().line + 1);
}

template <class T>
Field bind(std::string section, std::string key, std::function<T&(RunConfig&)> access) {
  Field f;
  f.section = section;
  f.key = key;
  f.set = [access, section, key](RunConfig& c, const YAML::Node& n) {
    try {
      if constexpr (std::is_floating_point_v<T>) {
        const double v = n.as<double>();
        if (!std::isfinite(v)) throw YAML::BadConversion(n.Mark());
        access(c) = v;
      } else {
        access(c) = n.as<T>();
      }
    } catch (const YAML::Exception&) {
      throw ConfigError(section + "." + key + " must be " + type_name<T>());
    }
  };
  f.get = [access](const RunConfig& c) { return json(access(const_cast<RunConfig&>(c))); };
  return f;
}

#define HO_FIELD(T, section, key, expr) bind<T>(section, key, [](RunConfig& c) -> T& { return expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      HO_FIELD(std::size_t, "layout", "n_bs", c.layout.n_bs),
      HO_FIELD(double, "layout", "area_width_m", c.layout.area_width_m),
      HO_FIELD(double, "layout", "area_height_m", c.layout.area_height_m),
      HO_FIELD(double, "layout", "tx_power_dbm", c.layout.tx_power_dbm),
      HO_FIELD(double, "layout", "min_spacing_m", c.layout.min_spacing_m),
      HO_FIELD(std::uint64_t, "layout", "seed", c.layout.seed),
      HO_FIELD(double, "mobility", "duration_s", c.mobility.duration_s),
      HO_FIELD(std::vector<double>, "mobility", "speeds_kmh", c.mobility.speeds_kmh),
      HO_FIELD(std::size_t, "mobility", "count", c.mobility.count),
      HO_FIELD(double, "radio", "carrier_hz", c.radio.carrier_hz),
      HO_FIELD(double, "radio", "pathloss_exponent", c.radio.pathloss_exponent),
      HO_FIELD(double, "radio", "shadow_sigma_db", c.radio.shadow_sigma_db),
      HO_FIELD(double, "radio", "shadow_decorrelation_m", c.radio.shadow_decorrelation_m),
      HO_FIELD(double, "radio", "noise_dbm", c.radio.noise_dbm),
      HO_FIELD(int, "filter", "l1_window", c.filter.l1_window),
      HO_FIELD(int, "filter", "l3_k", c.filter.l3_k),
      HO_FIELD(double, "a3", "hys_db", c.protocol.a3.hys_db),
      HO_FIELD(double, "a3", "off_db", c.protocol.a3.off_db),
      HO_FIELD(double, "a3", "off_n_db", c.protocol.a3.off_n_db),
      HO_FIELD(double, "a3", "off_cn_db", c.protocol.a3.off_cn_db),
      HO_FIELD(double, "a3", "off_p_db", c.protocol.a3.off_p_db),
      HO_FIELD(double, "a3", "off_cp_db", c.protocol.a3.off_cp_db),
      HO_FIELD(int, "a3", "ttt_ms", c.protocol.a3.ttt_ms),
      HO_FIELD(double, "rlf", "q_in_db", c.protocol.rlf.q_in_db),
      HO_FIELD(double, "rlf", "q_out_db", c.protocol.rlf.q_out_db),
      HO_FIELD(int, "rlf", "t310_ms", c.protocol.rlf.t310_ms),
      HO_FIELD(int, "rlf", "n310", c.protocol.rlf.n310),
      HO_FIELD(int, "rlf", "n311", c.protocol.rlf.n311),
      HO_FIELD(int, "rlf", "recovery_ms", c.protocol.rlf.recovery_ms),
      HO_FIELD(bool, "rlf", "band_resets_counters", c.protocol.rlf.band_resets_counters),
      HO_FIELD(int, "timing", "prep_ms", c.protocol.timing.prep_ms),
      HO_FIELD(int, "timing", "exec_ms", c.protocol.timing.exec_ms),
      HO_FIELD(int, "timing", "mts_ms", c.protocol.timing.mts_ms),
      HO_FIELD(double, "env", "reward_c", c.env.reward_c),
      HO_FIELD(int, "env", "max_episode_ticks", c.env.max_episode_ticks),
      HO_FIELD(bool, "env", "shuffle_bs", c.env.shuffle_bs),
      HO_FIELD(double, "env", "clip_lo_db", c.env.clip_lo_db),
      HO_FIELD(double, "env", "clip_hi_db", c.env.clip_hi_db),
      HO_FIELD(double, "ppo", "learning_rate", c.ppo.learning_rate),
      HO_FIELD(double, "ppo", "clip_eps", c.ppo.clip_eps),
      HO_FIELD(double, "ppo", "gamma", c.ppo.gamma),
      HO_FIELD(double, "ppo", "gae_lambda", c.ppo.gae_lambda),
      HO_FIELD(double, "ppo", "ent_coef", c.ppo.ent_coef),
      HO_FIELD(double, "ppo", "vf_coef", c.ppo.vf_coef),
      HO_FIELD(std::size_t, "ppo", "rollout_len", c.ppo.rollout_len),
      HO_FIELD(std::size_t, "ppo", "minibatch_size", c.ppo.minibatch_size),
      HO_FIELD(std::size_t, "ppo", "epochs_per_update", c.ppo.epochs_per_update),
      HO_FIELD(double, "ppo", "max_grad_norm", c.ppo.max_grad_norm),
      HO_FIELD(bool, "ppo", "normalize_advantage", c.ppo.normalize_advantage),
      HO_FIELD(std::int64_t, "ppo", "total_timesteps", c.ppo.total_timesteps),
      HO_FIELD(double, "ppo", "phase1_fraction", c.ppo.phase1_fraction),
      HO_FIELD(std::size_t, "ppo", "n_envs", c.ppo.n_envs),
      HO_FIELD(std::vector<std::size_t>, "ppo", "hidden", c.ppo.hidden),
      HO_FIELD(double, "metrics", "bandwidth_hz", c.rate.bandwidth_hz),
      HO_FIELD(std::vector<int>, "sweep", "ttt_ms", c.sweep.ttt_ms),
      HO_FIELD(std::vector<double>, "sweep", "off_db", c.sweep.off_db),
      HO_FIELD(std::uint64_t, "run", "seed", c.seed),
  };
  return table;
}

#undef HO_FIELD

// Runs one module validator, reporting failures as ConfigError.
void check(const std::string& section, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(section + ": " + e.what());
  }
}

void validate_section(const RunConfig& c, const std::string& section) {
  if (section == "layout") {
    const auto& l = c.layout;
    if (l.n_bs < 1) throw ConfigError("layout.n_bs must be >= 1");
    if (!(l.area_width_m > 0.0) || !(l.area_height_m > 0.0)) throw ConfigError("layout area must be positive");
    if (!(l.min_spacing_m >= 0.0)) throw ConfigError("layout.min_spacing_m must be >= 0");
  } else if (section == "mobility") {
    const auto& m = c.mobility;
    if (!(m.duration_s > 0.0)) throw ConfigError("mobility.duration_s must be positive");
    for (double v : m.speeds_kmh) {
      if (!(v >= 1.0 && v <= 120.0)) {
        throw ConfigError("mobility.speeds_kmh: " + format_double(v) + " km/h outside [1, 120]");
      }
    }
  } else if (section == "radio") {
    check(section, [&] { c.radio.validate(); });
  } else if (section == "filter") {
    check(section, [&] { c.filter.validate(); });
  } else if (section == "a3") {
    check(section, [&] { c.protocol.a3.validate(); });
  } else if (section == "rlf") {
    check(section, [&] { c.protocol.rlf.validate(); });
  } else if (section == "timing") {
    check(section, [&] { c.protocol.timing.validate(); });
  } else if (section == "env") {
    check(section, [&] { c.env.validate(); });
  } else if (section == "ppo") {
    check(section, [&] { c.ppo.validate(); });
  } else if (section == "metrics") {
    check(section, [&] { c.rate.validate(); });
  } else if (section == "sweep") {
    if (c.sweep.ttt_ms.empty() || c.sweep.off_db.empty()) throw ConfigError("sweep lists must not be empty");
    for (int ttt : c.sweep.ttt_ms) {
      protocol::A3Config a3 = c.protocol.a3;
      a3.ttt_ms = ttt;
      check("sweep.ttt_ms", [&] { a3.validate(); });
    }
    for (double off : c.sweep.off_db) {
      if (!std::isfinite(off)) throw ConfigError("sweep.off_db entries must be finite");
    }
  }
}

std::vector<std::string> section_order() {
  std::vector<std::string> out;
  for (const auto& f : fields()) {
    if (out.empty() || out.back() != f.section) out.push_back(f.section);
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  for (const auto& s : section_order()) validate_section(*this, s);
}

RunConfig parse_config(std::string_view text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  RunConfig cfg;
  if (root.IsNull()) {
    cfg.validate();
    return cfg;
  }
  if (!root.IsMap()) throw ConfigError(where(source, root) + ": top level must be a mapping of sections");

  const auto sections = section_order();
  for (const auto& sec : root) {
    const auto name = sec.first.as<std::string>();
    if (std::find(sections.begin(), sections.end(), name) == sections.end()) {
      throw ConfigError(where(source, sec.first) + ": unknown section '" + name + "'");
    }
    if (sec.second.IsNull()) continue;
    if (!sec.second.IsMap()) throw ConfigError(where(source, sec.second) + ": section '" + name + "' must be a mapping");
    for (const auto& kv : sec.second) {
      const auto key = kv.first.as<std::string>();
      const auto it = std::find_if(fields().begin(), fields().end(),
                                   [&](const Field& f) { return f.section == name && f.key == key; });
      if (it == fields().end()) {
        throw ConfigError(where(source, kv.first) + ": unknown key '" + name + "." + key + "'");
      }
      try {
        it->set(cfg, kv.second);
      } catch (const ConfigError& e) {
        throw ConfigError(where(source, kv.second) + ": " + e.what());
      }
    }
    try {
      validate_section(cfg, name);
    } catch (const ConfigError& e) {
      throw ConfigError(where(source, sec.first) + ": " + e.what());
    }
  }
  // Cross-section checks (e.g. sweep TTTs) against the final values.
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

json config_to_json(const RunConfig& cfg) {
  json out = json::object();
  for (const auto& f : fields()) out[f.section][f.key] = f.get(cfg);
  return out;
}

std::string config_to_yaml(const RunConfig& cfg) {
  auto scalar = [](const json& v) -> std::string {
    if (v.is_number_float()) return format_double(v.get<double>());
    return v.dump();
  };
  const json doc = config_to_json(cfg);
  std::ostringstream out;
  for (const auto& [section, keys] : doc.items()) {
    out << section << ":\n";
    for (const auto& [key, value] : keys.items()) {
      out << "  " << key << ": ";
      if (value.is_array()) {
        out << '[';
        for (std::size_t i = 0; i < value.size(); ++i) out << (i ? ", " : "") << scalar(value[i]);
        out << ']';
      } else {
        out << scalar(value);
      }
      out << '\n';
    }
  }
  return out.str();
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32)};
  for (auto p : path) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::mt19937_64 rng(seq);
  return rng();
}

}  // namespace ho::cli
