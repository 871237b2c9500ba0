#include "ho/trace_io.hpp"

#include <fstream>
#include <sstream>
#include <string_view>

#include "ho/text.hpp"

namespace ho::channel {
namespace {

constexpr std::string_view kMagic = "# ho-trace ";

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string column_header(std::size_t n_bs) {
  std::string h = "t_s,ue_id";
  for (std::size_t b = 0; b < n_bs; ++b) h += ",rsrp_dbm_" + std::to_string(b);
  for (std::size_t b = 0; b < n_bs; ++b) h += ",sinr_db_" + std::to_string(b);
  return h;
}

}  // namespace

const char* to_string(TraceIoErrc e) {
  switch (e) {
    case TraceIoErrc::Io: return "io error";
    case TraceIoErrc::MalformedHeader: return "malformed header";
    case TraceIoErrc::ShapeMismatch: return "shape mismatch";
    case TraceIoErrc::UnsupportedVersion: return "unsupported version";
    case TraceIoErrc::BadNumber: return "bad number";
  }
  return "unknown";
}

std::string format_trace(const RawTrace& trace) {
  if (trace.rsrp_dbm.rows() != trace.sinr_db.rows() || trace.rsrp_dbm.cols() != trace.sinr_db.cols()) {
    throw TraceIoError(TraceIoErrc::ShapeMismatch, "rsrp and sinr matrices differ in shape");
  }
  nlohmann::ordered_json header;
  header["version"] = kTraceFormatVersion;
  header["ue_id"] = trace.ue_id;
  header["n_bs"] = trace.n_bs();
  header["n_ticks"] = trace.n_ticks();
  header["tick_s"] = trace.tick_s;
  header["seed"] = trace.seed;
  header["meta"] = trace.meta;

  std::string out;
  out.reserve(64 + trace.n_ticks() * trace.n_bs() * 40);
  out += kMagic;
  out += header.dump();
  out += '\n';
  out += column_header(trace.n_bs());
  out += '\n';
  const std::string ue = std::to_string(trace.ue_id);
  for (std::size_t t = 0; t < trace.n_ticks(); ++t) {
    out += format_double(static_cast<double>(t) * trace.tick_s);
    out += ',';
    out += ue;
    for (double v : trace.rsrp_dbm.row(t)) {
      out += ',';
      out += format_double(v);
    }
    for (double v : trace.sinr_db.row(t)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

RawTrace parse_trace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind(kMagic, 0) != 0) {
    throw TraceIoError(TraceIoErrc::MalformedHeader, "missing '# ho-trace' header line");
  }
  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(line.substr(kMagic.size()));
  } catch (const nlohmann::json::exception& e) {
    throw TraceIoError(TraceIoErrc::MalformedHeader, e.what());
  }

  RawTrace trace;
  std::size_t n_bs = 0;
  std::size_t n_ticks = 0;
  try {
    const int version = header.at("version").get<int>();
    if (version != kTraceFormatVersion) {
      throw TraceIoError(TraceIoErrc::UnsupportedVersion,
                         "file version " + std::to_string(version) + ", reader supports " +
                             std::to_string(kTraceFormatVersion));
    }
    trace.ue_id = header.at("ue_id").get<std::int64_t>();
    n_bs = header.at("n_bs").get<std::size_t>();
    n_ticks = header.at("n_ticks").get<std::size_t>();
    trace.tick_s = header.at("tick_s").get<double>();
    trace.seed = header.at("seed").get<std::uint64_t>();
    trace.meta = header.at("meta");
  } catch (const nlohmann::json::exception& e) {
    throw TraceIoError(TraceIoErrc::MalformedHeader, e.what());
  }

  if (!std::getline(in, line) || line != column_header(n_bs)) {
    throw TraceIoError(TraceIoErrc::MalformedHeader, "column header does not match n_bs");
  }

  trace.rsrp_dbm = Matrix(n_ticks, n_bs);
  trace.sinr_db = Matrix(n_ticks, n_bs);
  std::size_t t = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (t >= n_ticks) {
      throw TraceIoError(TraceIoErrc::ShapeMismatch, "more rows than n_ticks=" + std::to_string(n_ticks));
    }
    const auto cells = split_csv(line);
    if (cells.size() != 2 + 2 * n_bs) {
      throw TraceIoError(TraceIoErrc::ShapeMismatch,
                         "row " + std::to_string(t) + " has " + std::to_string(cells.size()) +
                             " columns, expected " + std::to_string(2 + 2 * n_bs));
    }
    for (std::size_t b = 0; b < 2 * n_bs; ++b) {
      const auto v = parse_double(cells[2 + b]);
      if (!v) {
        throw TraceIoError(TraceIoErrc::BadNumber,
                           "row " + std::to_string(t) + ": '" + std::string(cells[2 + b]) + "'");
      }
      if (b < n_bs) {
        trace.rsrp_dbm(t, b) = *v;
      } else {
        trace.sinr_db(t, b - n_bs) = *v;
      }
    }
    ++t;
  }
  if (t != n_ticks) {
    throw TraceIoError(TraceIoErrc::ShapeMismatch,
                       "found " + std::to_string(t) + " rows, header declares " + std::to_string(n_ticks));
  }
  return trace;
}

void write_trace(const RawTrace& trace, const std::filesystem::path& path) {
  const std::string text = format_trace(trace);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TraceIoError(TraceIoErrc::Io, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw TraceIoError(TraceIoErrc::Io, "write failed for " + path.string());
}

RawTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceIoError(TraceIoErrc::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str());
}

}  // namespace ho::channel
