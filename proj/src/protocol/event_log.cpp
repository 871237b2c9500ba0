#include <array>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include "ho/protocol.hpp"
#include "ho/text.hpp"

namespace ho::protocol {
namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 9> kNames{{
    {EventKind::HoPrepStart, "HO_PREP_START"},
    {EventKind::HoAbort, "HO_ABORT"},
    {EventKind::HoCmd, "HO_CMD"},
    {EventKind::HoComplete, "HO_COMPLETE"},
    {EventKind::PingPong, "PP"},
    {EventKind::OutOfSync, "OOS"},
    {EventKind::Rlf, "RLF"},
    {EventKind::Hof, "HOF"},
    {EventKind::Recovered, "RECOVERED"},
}};

}  // namespace

std::string_view to_string(EventKind k) {
  for (const auto& [kind, name] : kNames) {
    if (kind == k) return name;
  }
  return "UNKNOWN";
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (const auto& [kind, name] : kNames) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

void write_event_csv(std::ostream& out, const EventLog& log) {
  out << "tick,kind,serving,target\n";
  for (const Event& e : log) {
    out << e.tick << ',' << to_string(e.kind) << ',' << e.serving << ',' << e.target << '\n';
  }
}

EventLog read_event_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "tick,kind,serving,target") {
    throw std::runtime_error("event csv: bad header");
  }
  EventLog log;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::array<std::string, 4> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto comma = line.find(',', start);
      if ((comma == std::string::npos) != (i == 3)) {
        throw std::runtime_error("event csv line " + std::to_string(lineno) + ": expected 4 fields");
      }
      cells[i] = std::string(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      start = comma + 1;
    }
    const auto kind = parse_event_kind(cells[1]);
    if (!kind) throw std::runtime_error("event csv line " + std::to_string(lineno) + ": unknown kind " + cells[1]);
    log.push_back({std::stoll(cells[0]), *kind, std::stoi(cells[2]), std::stoi(cells[3])});
  }
  return log;
}

}  // namespace ho::protocol
