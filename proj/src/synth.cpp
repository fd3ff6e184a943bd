#include "blockbgs/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "blockbgs/error.hpp"

namespace blockbgs::synth {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform in [0, 1) from the top 53 bits; portable across standard libraries.
double unit(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}
  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - unit(rng_);  // (0, 1]
    const double u2 = unit(rng_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Static per-pixel pattern in [-1, 1]: half a few random plane waves, half
// per-pixel grain.
std::vector<double> make_texture(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  constexpr int kWaves = 3;
  std::array<double, kWaves> fx{}, fy{}, phase{};
  for (int k = 0; k < kWaves; ++k) {
    const double angle = 2.0 * std::numbers::pi * unit(rng);
    const double wavelength = 6.0 + 18.0 * unit(rng);
    fx[k] = std::cos(angle) * 2.0 * std::numbers::pi / wavelength;
    fy[k] = std::sin(angle) * 2.0 * std::numbers::pi / wavelength;
    phase[k] = 2.0 * std::numbers::pi * unit(rng);
  }
  std::vector<double> tex(std::size_t(width) * height * 3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) {
        double wave = 0.0;
        for (int k = 0; k < kWaves; ++k) wave += std::sin(fx[k] * x + fy[k] * y + phase[k] + c);
        tex[(std::size_t(y) * width + x) * 3 + c] = 0.5 * wave / kWaves + 0.5 * (2.0 * unit(rng) - 1.0);
      }
  return tex;
}

std::vector<double> make_phases(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed ^ 0xF11CCE5ULL));
  std::vector<double> phases(std::size_t(width) * height);
  for (double& p : phases) p = 2.0 * std::numbers::pi * unit(rng);
  return phases;
}

// Precomputed state for one background spec.
struct BackgroundField {
  BackgroundSpec spec;
  std::vector<double> texture;  // textured
  std::vector<double> phases;   // flicker

  BackgroundField(const BackgroundSpec& s, int width, int height) : spec(s) {
    if (s.kind == BackgroundKind::textured) texture = make_texture(width, height, s.seed);
    if (s.kind == BackgroundKind::flicker) phases = make_phases(width, height, s.seed);
  }

  double value(std::size_t pixel, int channel, int t) const {
    switch (spec.kind) {
      case BackgroundKind::constant:
        return spec.color[channel];
      case BackgroundKind::textured:
        return spec.color[channel] + spec.amplitude * texture[pixel * 3 + channel];
      case BackgroundKind::flicker:
        return spec.color[channel] +
               spec.amplitude * std::sin(2.0 * std::numbers::pi * t / spec.period + phases[pixel]);
    }
    return 0.0;
  }
};

double gain_at(const SceneScript& script, int t) {
  double g = 1.0;
  for (const auto& e : script.gains) {
    if (t < e.start) continue;
    if (t >= e.end) {
      g *= e.factor;
    } else {
      g *= 1.0 + (e.factor - 1.0) * double(t - e.start) / double(e.end - e.start);
    }
  }
  return g;
}

std::pair<int, int> position_at(const ObjectSpec& o, int t) {
  const double dt = t - o.enter;
  return {static_cast<int>(std::lround(o.x + o.vx * dt)),
          static_cast<int>(std::lround(o.y + o.vy * dt))};
}

std::string object_name(const ObjectSpec& o, std::size_t index) {
  return o.id.empty() ? "obj" + std::to_string(index) : o.id;
}

void check_background(const BackgroundSpec& b, const std::string& where,
                      std::vector<std::string>& errors) {
  for (double c : b.color) {
    if (!(c >= 0.0 && c <= 255.0)) errors.push_back(where + ": color outside [0, 255]");
  }
  if (!(b.amplitude >= 0.0)) errors.push_back(where + ": amplitude must be >= 0");
  if (b.kind == BackgroundKind::flicker && !(b.period > 0.0)) {
    errors.push_back(where + ": flicker period must be > 0");
  }
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

std::string frame_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05zu", index);
  return buf;
}

std::vector<std::string> validate(const SceneScript& s) {
  std::vector<std::string> errors;
  if (s.width < 1 || s.height < 1) errors.push_back("scene: width and height must be >= 1");
  if (s.length < 1) errors.push_back("scene: length must be >= 1");
  if (!(s.noise_sigma >= 0.0)) errors.push_back("scene: noise_sigma must be >= 0");
  check_background(s.background, "background", errors);

  std::set<std::string> ids;
  for (std::size_t k = 0; k < s.objects.size(); ++k) {
    const ObjectSpec& o = s.objects[k];
    const std::string name = "object " + object_name(o, k);
    if (!ids.insert(object_name(o, k)).second) errors.push_back(name + ": duplicate id");
    if (o.width < 1 || o.height < 1) errors.push_back(name + ": size must be >= 1");
    for (double c : o.color)
      if (!(c >= 0.0 && c <= 255.0)) errors.push_back(name + ": color outside [0, 255]");
    if (o.enter < 0 || o.exit >= s.length || o.enter > o.exit) {
      errors.push_back(name + ": needs 0 <= enter <= exit < length");
      continue;
    }
    for (int t = o.enter; t <= o.exit; ++t) {
      const auto [x, y] = position_at(o, t);
      if (x < 0 || y < 0 || x + o.width > s.width || y + o.height > s.height) {
        errors.push_back(name + ": leaves the frame at frame " + std::to_string(t));
        break;
      }
    }
  }
  for (const auto& g : s.gains) {
    if (g.start < 0 || g.end < g.start) errors.push_back("gain: needs 0 <= start <= end");
    if (!(g.factor > 0.0)) errors.push_back("gain: factor must be > 0");
  }
  for (const auto& l : s.light_switches) {
    if (l.frame < 0 || l.frame >= s.length) errors.push_back("light_switch: frame outside sequence");
    check_background(l.background, "light_switch", errors);
  }
  return errors;
}

Sequence render(const SceneScript& script) {
  if (const auto errors = validate(script); !errors.empty()) {
    std::string msg = "invalid scene script:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }
  const int w = script.width;
  const int h = script.height;

  std::vector<BackgroundField> fields;
  fields.emplace_back(script.background, w, h);
  auto switches = script.light_switches;
  std::stable_sort(switches.begin(), switches.end(),
                   [](const auto& a, const auto& b) { return a.frame < b.frame; });
  for (const auto& l : switches) fields.emplace_back(l.background, w, h);

  Sequence seq;
  seq.tracks.frames.resize(script.length);
  for (int t = 0; t < script.length; ++t) {
    std::size_t active = 0;
    while (active < switches.size() && switches[active].frame <= t) ++active;
    const BackgroundField& bg = fields[active];
    const double gain = gain_at(script, t);

    std::vector<double> canvas(std::size_t(w) * h * 3);
    for (std::size_t p = 0; p < std::size_t(w) * h; ++p)
      for (int c = 0; c < 3; ++c) canvas[p * 3 + c] = bg.value(p, c, t);

    MaskGray mask(w, h);
    for (std::size_t k = 0; k < script.objects.size(); ++k) {
      const ObjectSpec& o = script.objects[k];
      if (t < o.enter || t > o.exit) continue;
      const auto [x0, y0] = position_at(o, t);
      for (int y = y0; y < y0 + o.height; ++y)
        for (int x = x0; x < x0 + o.width; ++x) {
          const std::size_t p = std::size_t(y) * w + x;
          for (int c = 0; c < 3; ++c) canvas[p * 3 + c] = o.color[c];
          mask.data[p] = MaskGray::kForeground;
        }
      seq.tracks.frames[t].push_back(
          {object_name(o, k), {x0 + (o.width - 1) / 2.0, y0 + (o.height - 1) / 2.0}});
    }

    GaussianSource noise(splitmix64(script.rng_seed + std::uint64_t(t)));
    FrameRGB frame(w, h);
    for (std::size_t i = 0; i < canvas.size(); ++i) {
      const double n = script.noise_sigma > 0.0 ? script.noise_sigma * noise.next() : 0.0;
      frame.data[i] = to_byte(gain * canvas[i] + n);
    }
    seq.frames.push_back(std::move(frame));
    seq.masks.push_back(std::move(mask));
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Script parsing

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& message) {
  throw ValidationError("script line " + std::to_string(line) + ": " + message);
}

std::vector<double> numbers(std::string_view text, std::size_t line) {
  std::vector<double> out;
  while (true) {
    text = trim(text);
    if (text.empty()) break;
    const auto end = text.find_first_of(" \t");
    const std::string_view token = text.substr(0, end);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      fail(line, "not a number: '" + std::string(token) + "'");
    }
    out.push_back(v);
    if (end == std::string_view::npos) break;
    text = text.substr(end);
  }
  return out;
}

double scalar(std::string_view text, std::size_t line) {
  const auto v = numbers(text, line);
  if (v.size() != 1) fail(line, "expected one number");
  return v[0];
}

int integer(std::string_view text, std::size_t line) {
  const double v = scalar(text, line);
  if (v != std::floor(v)) fail(line, "expected an integer");
  return static_cast<int>(v);
}

std::array<double, 3> triple(std::string_view text, std::size_t line) {
  const auto v = numbers(text, line);
  if (v.size() != 3) fail(line, "expected three numbers");
  return {v[0], v[1], v[2]};
}

bool set_background(BackgroundSpec& b, std::string_view key, std::string_view value,
                    std::size_t line) {
  if (key == "kind") {
    if (value == "constant") b.kind = BackgroundKind::constant;
    else if (value == "flicker") b.kind = BackgroundKind::flicker;
    else if (value == "textured") b.kind = BackgroundKind::textured;
    else fail(line, "unknown background kind '" + std::string(value) + "'");
  } else if (key == "color") {
    b.color = triple(value, line);
  } else if (key == "amplitude") {
    b.amplitude = scalar(value, line);
  } else if (key == "period") {
    b.period = scalar(value, line);
  } else if (key == "seed") {
    b.seed = static_cast<std::uint64_t>(integer(value, line));
  } else {
    return false;
  }
  return true;
}

}  // namespace

SceneScript parse_script(std::string_view text) {
  enum class Section { none, scene, background, object, gain, light_switch };
  SceneScript s;
  Section section = Section::none;
  bool background_seed_set = false;
  std::vector<bool> object_exit_set;
  std::size_t line_no = 0;

  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      const std::string_view name = trim(line.substr(1, line.size() - 2));
      if (name == "scene") section = Section::scene;
      else if (name == "background") section = Section::background;
      else if (name == "object") {
        section = Section::object;
        s.objects.emplace_back();
        object_exit_set.push_back(false);
      } else if (name == "gain") {
        section = Section::gain;
        s.gains.emplace_back();
      } else if (name == "light_switch") {
        section = Section::light_switch;
        s.light_switches.emplace_back();
      } else {
        fail(line_no, "unknown section '" + std::string(name) + "'");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    bool known = true;
    switch (section) {
      case Section::none:
        fail(line_no, "key outside of a section");
      case Section::scene:
        if (key == "width") s.width = integer(value, line_no);
        else if (key == "height") s.height = integer(value, line_no);
        else if (key == "length") s.length = integer(value, line_no);
        else if (key == "noise_sigma") s.noise_sigma = scalar(value, line_no);
        else if (key == "seed") s.rng_seed = static_cast<std::uint64_t>(integer(value, line_no));
        else known = false;
        break;
      case Section::background:
        known = set_background(s.background, key, value, line_no);
        background_seed_set |= key == "seed";
        break;
      case Section::object: {
        ObjectSpec& o = s.objects.back();
        if (key == "id") o.id = std::string(value);
        else if (key == "rect") {
          const auto v = numbers(value, line_no);
          if (v.size() != 4) fail(line_no, "rect needs x y width height");
          o.x = int(v[0]); o.y = int(v[1]); o.width = int(v[2]); o.height = int(v[3]);
        } else if (key == "color") o.color = triple(value, line_no);
        else if (key == "velocity") {
          const auto v = numbers(value, line_no);
          if (v.size() != 2) fail(line_no, "velocity needs vx vy");
          o.vx = v[0]; o.vy = v[1];
        } else if (key == "enter") o.enter = integer(value, line_no);
        else if (key == "exit") {
          o.exit = integer(value, line_no);
          object_exit_set.back() = true;
        } else known = false;
        break;
      }
      case Section::gain: {
        GainSpec& g = s.gains.back();
        if (key == "start") g.start = integer(value, line_no);
        else if (key == "end") g.end = integer(value, line_no);
        else if (key == "factor") g.factor = scalar(value, line_no);
        else known = false;
        break;
      }
      case Section::light_switch: {
        LightSwitchSpec& l = s.light_switches.back();
        if (key == "frame") l.frame = integer(value, line_no);
        else known = set_background(l.background, key, value, line_no);
        break;
      }
    }
    if (!known) fail(line_no, "unknown key '" + std::string(key) + "'");
  }

  if (!background_seed_set) s.background.seed = s.rng_seed;
  for (std::size_t k = 0; k < s.objects.size(); ++k)
    if (!object_exit_set[k]) s.objects[k].exit = s.length - 1;
  return s;
}

SceneScript load_script(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_script(buf.str());
}

void write_sequence(const Sequence& sequence, const fs::path& out_dir) {
  const fs::path frames_dir = out_dir / "frames";
  const fs::path truth_dir = out_dir / "truth";
  fs::create_directories(frames_dir);
  fs::create_directories(truth_dir);
  for (std::size_t t = 0; t < sequence.frames.size(); ++t) {
    write_frame(sequence.frames[t], frames_dir / (frame_stem(t) + ".ppm"));
    write_mask(sequence.masks[t], truth_dir / (frame_stem(t) + ".pgm"));
  }
  write_tracks(sequence.tracks, out_dir / "tracks.txt");
}

}  // namespace blockbgs::synth
