#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace blockbgs {

/// Every tunable of the engine and its evaluation harness. Defaults are the
/// reference operating point.
struct Config {
  int block_size = 8;
  int advance = 1;
  double rho = 0.01;             // adaptation rate
  double c1 = 0.001;             // cosine-distance threshold against the model mean
  double c2 = 0.0005;            // cosine-distance threshold against the previous frame
  double vote_threshold = 0.90;  // fraction of covering blocks needed for a foreground pixel
  double reinit_area = 0.70;
  int reinit_window = 15;
  int training_frames = 200;
  double variance_floor = 1e-4;
  int em_max_iterations = 50;
  double em_tolerance = 1e-6;    // relative log-likelihood change
  double gate = 30.0;            // track matching distance, pixels
  int min_blob_area = 15;

  /// Throws ParameterError naming the first field out of range.
  void validate() const;

  friend bool operator==(const Config&, const Config&) = default;
};

/// Sets one field from its textual key and value. Throws ParameterError for
/// unknown keys or unparsable values.
void apply_setting(Config& config, std::string_view key, std::string_view value);

/// Parses `key = value` lines on top of `base`. Blank lines and lines
/// starting with '#' are ignored.
Config parse_config(std::string_view text, Config base = {});

Config load_config(const std::filesystem::path& path, Config base = {});

/// key=value dump that parse_config reads back losslessly.
std::string to_string(const Config& config);

/// Window length covering half a second at the given frame rate.
int reinit_window_for_fps(double fps);

}  // namespace blockbgs
