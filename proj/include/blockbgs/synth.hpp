#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "blockbgs/imaging.hpp"
#include "blockbgs/metrics.hpp"

namespace blockbgs::synth {

enum class BackgroundKind { constant, flicker, textured };

struct BackgroundSpec {
  BackgroundKind kind = BackgroundKind::constant;
  std::array<double, 3> color{128, 128, 128};
  double amplitude = 0.0;  // texture contrast, or flicker swing
  double period = 30.0;    // flicker period in frames
  std::uint64_t seed = 1;  // texture pattern / flicker phases
};

/// Axis-aligned rectangle moving at constant velocity; present on frames
/// [enter, exit]. Position at frame t is (x, y) + velocity * (t - enter),
/// rounded to whole pixels.
struct ObjectSpec {
  std::string id;
  int x = 0;
  int y = 0;
  int width = 10;
  int height = 10;
  std::array<double, 3> color{255, 0, 0};
  double vx = 0.0;
  double vy = 0.0;
  int enter = 0;
  int exit = 0;
};

/// Global illumination gain ramping linearly from 1 at `start` to `factor`
/// at `end`, then held.
struct GainSpec {
  int start = 0;
  int end = 0;
  double factor = 1.0;
};

/// Instant swap to a new background from `frame` onward.
struct LightSwitchSpec {
  int frame = 0;
  BackgroundSpec background;
};

struct SceneScript {
  int width = 160;
  int height = 120;
  int length = 100;
  double noise_sigma = 0.0;
  std::uint64_t rng_seed = 1;
  BackgroundSpec background;
  std::vector<ObjectSpec> objects;
  std::vector<GainSpec> gains;
  std::vector<LightSwitchSpec> light_switches;
};

struct Sequence {
  std::vector<FrameRGB> frames;
  std::vector<MaskGray> masks;  // exact object footprints
  TrackSet tracks;              // object centroids
};

/// Every violated constraint, one message each; empty when valid.
std::vector<std::string> validate(const SceneScript& script);

/// Renders the script. Throws ValidationError listing all violations.
/// Output depends only on the script (including its seed).
Sequence render(const SceneScript& script);

/// Section/key-value script text, see docs/synth_script.md.
SceneScript parse_script(std::string_view text);
SceneScript load_script(const std::filesystem::path& path);

/// Writes frames/frame_NNNNN.ppm, truth/frame_NNNNN.pgm and tracks.txt.
void write_sequence(const Sequence& sequence, const std::filesystem::path& out_dir);

/// Zero-padded frame file stem used by write_sequence ("frame_00042").
std::string frame_stem(std::size_t index);

}  // namespace blockbgs::synth
