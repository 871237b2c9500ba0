#pragma once

// Trace file format, version 1:
//
//   # ho-trace {"version":1,"ue_id":..,"n_bs":N,"n_ticks":T,"tick_s":0.01,"seed":..,"meta":{..}}
//   t_s,ue_id,rsrp_dbm_0,..,rsrp_dbm_{N-1},sinr_db_0,..,sinr_db_{N-1}
//   <T rows>
//
// Numbers are written in shortest round-trip form, so write/read is exact.

#include <filesystem>
#include <stdexcept>
#include <string>

#include "ho/channel.hpp"

namespace ho::channel {

inline constexpr int kTraceFormatVersion = 1;

enum class TraceIoErrc { Io, MalformedHeader, ShapeMismatch, UnsupportedVersion, BadNumber };

const char* to_string(TraceIoErrc e);

class TraceIoError : public std::runtime_error {
 public:
  TraceIoError(TraceIoErrc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  TraceIoErrc code() const { return code_; }

 private:
  TraceIoErrc code_;
};

void write_trace(const RawTrace& trace, const std::filesystem::path& path);
RawTrace read_trace(const std::filesystem::path& path);

std::string format_trace(const RawTrace& trace);
RawTrace parse_trace(const std::string& text);

}  // namespace ho::channel
