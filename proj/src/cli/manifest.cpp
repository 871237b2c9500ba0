#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <sstream>

#include "ho/cli.hpp"
#include "ho/trace_io.hpp"

namespace ho::cli {
namespace {

using json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw std::runtime_error("sha256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string Manifest::set_hash() const {
  std::string joined;
  for (const auto& t : traces) {
    joined += t.sha256;
    joined += '\n';
  }
  return sha256_hex(joined);
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  json traces = json::array();
  for (const auto& t : m.traces) {
    traces.push_back(
        {{"path", t.path}, {"sha256", t.sha256}, {"speed_kmh", t.speed_kmh}, {"ue_id", t.ue_id}, {"seed", t.seed}});
  }
  const json j = {{"format", "ho-trace-manifest"},
                  {"version", 1},
                  {"set_hash", m.set_hash()},
                  {"config", m.config},
                  {"traces", std::move(traces)}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "ho-trace-manifest") {
      throw IncompatibleError(path.string() + " is not a trace manifest");
    }
    if (j.at("version").get<int>() != 1) throw IncompatibleError("unsupported manifest version in " + path.string());
    Manifest m;
    m.config = j.at("config");
    for (const auto& t : j.at("traces")) {
      m.traces.push_back({t.at("path").get<std::string>(), t.at("sha256").get<std::string>(),
                          t.at("speed_kmh").get<double>(), t.at("ue_id").get<std::int64_t>(),
                          t.at("seed").get<std::uint64_t>()});
    }
    if (j.at("set_hash").get<std::string>() != m.set_hash()) {
      throw IncompatibleError("manifest " + path.string() + " set_hash does not match its trace list");
    }
    return m;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + path.string() + ": " + e.what());
  }
}

std::vector<channel::RawTrace> load_traces(const Manifest& m, const std::filesystem::path& manifest_path) {
  const auto dir = manifest_path.parent_path();
  std::vector<channel::RawTrace> out;
  out.reserve(m.traces.size());
  for (const auto& t : m.traces) {
    const auto file = dir / t.path;
    const std::string text = read_file(file);
    const std::string digest = sha256_hex(text);
    if (digest != t.sha256) {
      throw IncompatibleError("trace " + file.string() + " has sha256 " + digest + ", manifest lists " + t.sha256);
    }
    try {
      out.push_back(channel::parse_trace(text));
    } catch (const channel::TraceIoError& e) {
      throw IoError(file.string() + ": " + e.what());
    }
  }
  return out;
}

channel::RawTrace measured(const channel::RawTrace& raw, const channel::FilterConfig& filter) {
  return channel::l1_filter(raw, filter);
}

}  // namespace ho::cli
