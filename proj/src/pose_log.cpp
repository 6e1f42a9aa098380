#include "deckchase/pose_log.hpp"

#include "deckchase/errors.hpp"

#include <fmt/format.h>

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

namespace deckchase::usv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view field, std::size_t line) {
  field = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(fmt::format("pose log line {}: '{}' is not a number", line, field));
  }
  return value;
}

}  // namespace

std::vector<PoseMeasurement> read_pose_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("pose log is empty");
  }
  if (trim(line) != "t,x,y,z,eta") {
    throw ParseError(fmt::format("pose log header must be 't,x,y,z,eta', got '{}'", trim(line)));
  }
  std::vector<PoseMeasurement> poses;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::array<double, 5> values{};
    std::string_view rest(line);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (i + 1 == values.size())) {
        throw ParseError(fmt::format("pose log line {}: expected 5 fields", line_no));
      }
      values[i] = parse_double(rest.substr(0, comma), line_no);
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
    if (!poses.empty() && values[0] < poses.back().t) {
      throw ParseError(fmt::format("pose log line {}: timestamps must be non-decreasing", line_no));
    }
    poses.push_back(PoseMeasurement{values[0], values[1], values[2], values[3], values[4]});
  }
  return poses;
}

std::vector<PoseMeasurement> read_pose_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError(fmt::format("cannot open pose log '{}'", path));
  }
  return read_pose_log(in);
}

void write_pose_log(std::ostream& out, const std::vector<PoseMeasurement>& poses) {
  out << "t,x,y,z,eta\n";
  for (const auto& p : poses) {
    out << fmt::format("{:.4f},{:.6f},{:.6f},{:.6f},{:.6f}\n", p.t, p.x, p.y, p.z, p.eta);
  }
}

}  // namespace deckchase::usv
