#include "blockbgs/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "blockbgs/error.hpp"

namespace blockbgs {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParameterError("invalid value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

void require(bool ok, const char* message) {
  if (!ok) throw ParameterError(message);
}

}  // namespace

void Config::validate() const {
  require(block_size >= 2, "block_size must be >= 2");
  require(advance >= 1 && advance <= block_size, "advance must lie in [1, block_size]");
  require(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
  require(c1 >= 0.0 && c1 <= 2.0, "c1 must lie in [0, 2]");
  require(c2 >= 0.0 && c2 <= c1, "c2 must lie in [0, c1]");
  require(vote_threshold > 0.0 && vote_threshold <= 1.0, "vote_threshold must lie in (0, 1]");
  require(reinit_area > 0.0 && reinit_area < 1.0, "reinit_area must lie in (0, 1)");
  require(reinit_window >= 1, "reinit_window must be >= 1");
  require(training_frames >= 2, "training_frames must be >= 2");
  require(variance_floor > 0.0 && std::isfinite(variance_floor), "variance_floor must be > 0");
  require(em_max_iterations >= 1, "em_max_iterations must be >= 1");
  require(em_tolerance > 0.0, "em_tolerance must be > 0");
  require(gate > 0.0, "gate must be > 0");
  require(min_blob_area >= 1, "min_blob_area must be >= 1");
}

void apply_setting(Config& c, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "block_size") c.block_size = parse_number<int>(key, value);
  else if (key == "advance") c.advance = parse_number<int>(key, value);
  else if (key == "rho") c.rho = parse_number<double>(key, value);
  else if (key == "c1") c.c1 = parse_number<double>(key, value);
  else if (key == "c2") c.c2 = parse_number<double>(key, value);
  else if (key == "vote_threshold") c.vote_threshold = parse_number<double>(key, value);
  else if (key == "reinit_area") c.reinit_area = parse_number<double>(key, value);
  else if (key == "reinit_window") c.reinit_window = parse_number<int>(key, value);
  else if (key == "training_frames") c.training_frames = parse_number<int>(key, value);
  else if (key == "variance_floor") c.variance_floor = parse_number<double>(key, value);
  else if (key == "em_max_iterations") c.em_max_iterations = parse_number<int>(key, value);
  else if (key == "em_tolerance") c.em_tolerance = parse_number<double>(key, value);
  else if (key == "gate") c.gate = parse_number<double>(key, value);
  else if (key == "min_blob_area") c.min_blob_area = parse_number<int>(key, value);
  else throw ParameterError("unknown config key '" + std::string(key) + "'");
}

Config parse_config(std::string_view text, Config base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParameterError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

Config load_config(const std::filesystem::path& path, Config base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), base);
}

std::string to_string(const Config& c) {
  std::ostringstream out;
  out.precision(17);
  out << "block_size=" << c.block_size << '\n'
      << "advance=" << c.advance << '\n'
      << "rho=" << c.rho << '\n'
      << "c1=" << c.c1 << '\n'
      << "c2=" << c.c2 << '\n'
      << "vote_threshold=" << c.vote_threshold << '\n'
      << "reinit_area=" << c.reinit_area << '\n'
      << "reinit_window=" << c.reinit_window << '\n'
      << "training_frames=" << c.training_frames << '\n'
      << "variance_floor=" << c.variance_floor << '\n'
      << "em_max_iterations=" << c.em_max_iterations << '\n'
      << "em_tolerance=" << c.em_tolerance << '\n'
      << "gate=" << c.gate << '\n'
      << "min_blob_area=" << c.min_blob_area << '\n';
  return out.str();
}

int reinit_window_for_fps(double fps) {
  if (!(fps > 0.0)) throw ParameterError("fps must be > 0");
  return std::max(1, static_cast<int>(std::lround(fps / 2.0)));
}

}  // namespace blockbgs
