#include "blockbgs/error.hpp"
#include "blockbgs/synth.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace blockbgs;
using namespace blockbgs::synth;

namespace {

SceneScript moving_box() {
  SceneScript s;
  s.width = 64;
  s.height = 48;
  s.length = 20;
  s.noise_sigma = 3.0;
  s.rng_seed = 99;
  s.background.kind = BackgroundKind::textured;
  s.background.amplitude = 20;
  ObjectSpec o;
  o.id = "box";
  o.x = 2;
  o.y = 5;
  o.width = 10;
  o.height = 10;
  o.vx = 1.0;
  o.enter = 0;
  o.exit = 19;
  s.objects.push_back(o);
  return s;
}

}  // namespace

TEST_CASE("static scene without noise renders identical frames and empty masks") {
  SceneScript s;
  s.width = 16;
  s.height = 12;
  s.length = 5;
  const Sequence seq = render(s);
  REQUIRE(seq.frames.size() == 5);
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(seq.frames[t] == seq.frames[0]);
    CHECK(seq.masks[t].count_foreground() == 0);
    CHECK(seq.tracks.frames[t].empty());
  }
  CHECK(seq.frames[0].data[0] == 128);
}

TEST_CASE("a moving object advances its centroid by one pixel per frame") {
  const Sequence seq = render(moving_box());
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    REQUIRE(seq.tracks.frames[t].size() == 1);
    const Point2 c = seq.tracks.frames[t][0].centroid;
    CHECK(c.x == doctest::Approx(2 + 4.5 + double(t)));
    CHECK(c.y == doctest::Approx(5 + 4.5));
    CHECK(seq.tracks.frames[t][0].id == "box");
  }
}

TEST_CASE("mask footprint equals the rectangle") {
  const Sequence seq = render(moving_box());
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    const MaskGray& m = seq.masks[t];
    REQUIRE(m.count_foreground() == 100);
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x) {
        const bool inside = x >= 2 + int(t) && x < 12 + int(t) && y >= 5 && y < 15;
        REQUIRE(m.foreground(x, y) == inside);
      }
  }
}

TEST_CASE("rendering is reproducible and seed dependent") {
  const SceneScript s = moving_box();
  const Sequence a = render(s);
  const Sequence b = render(s);
  CHECK(a.frames == b.frames);
  CHECK(a.masks == b.masks);
  SceneScript other = s;
  other.rng_seed = 100;
  CHECK(render(other).frames != a.frames);
}

TEST_CASE("a gain ramp leaves the ground truth empty") {
  SceneScript s;
  s.width = 16;
  s.height = 16;
  s.length = 120;
  s.gains.push_back({50, 100, 1.3});
  const Sequence seq = render(s);
  for (const auto& m : seq.masks) REQUIRE(m.count_foreground() == 0);
  CHECK(seq.frames[49].data[0] == 128);
  CHECK(seq.frames[75].data[0] == 147);  // 128 * 1.15 = 147.2
  CHECK(seq.frames[100].data[0] == 166);  // 128 * 1.3 = 166.4
  CHECK(seq.frames[119].data[0] == 166);
}

TEST_CASE("a light switch swaps the background from its frame on") {
  SceneScript s;
  s.width = 8;
  s.height = 8;
  s.length = 10;
  LightSwitchSpec l;
  l.frame = 4;
  l.background.color = {20, 30, 40};
  s.light_switches.push_back(l);
  const Sequence seq = render(s);
  CHECK(seq.frames[3].data[0] == 128);
  CHECK(seq.frames[4].data[0] == 20);
  CHECK(seq.frames[4].data[2] == 40);
}

TEST_CASE("flicker background varies over time") {
  SceneScript s;
  s.width = 8;
  s.height = 8;
  s.length = 10;
  s.background.kind = BackgroundKind::flicker;
  s.background.amplitude = 30;
  s.background.period = 8;
  const Sequence seq = render(s);
  CHECK(seq.frames[0] != seq.frames[2]);
  CHECK(seq.frames[0] == seq.frames[8]);
}

TEST_CASE("validation lists every violation") {
  SceneScript s = moving_box();
  s.objects[0].vx = 10.0;
  s.noise_sigma = -1;
  s.gains.push_back({10, 5, 1.2});
  const auto errors = validate(s);
  CHECK(errors.size() == 3);
  try {
    render(s);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("leaves the frame") != std::string::npos);
    CHECK(msg.find("noise_sigma") != std::string::npos);
    CHECK(msg.find("gain") != std::string::npos);
  }
}

TEST_CASE("script text parses into the scene") {
  const SceneScript s = parse_script(R"(# demo
[scene]
width = 64
height = 48
length = 30
noise_sigma = 2
seed = 5

[background]
kind = textured
color = 100 110 120
amplitude = 15

[object]
id = car
rect = 3 4 10 8
color = 220 40 40
velocity = 1.5 0
enter = 2

[gain]
start = 10
end = 20
factor = 1.3

[light_switch]
frame = 25
kind = constant
color = 30 30 30
)");
  CHECK(s.width == 64);
  CHECK(s.length == 30);
  CHECK(s.rng_seed == 5);
  CHECK(s.background.kind == BackgroundKind::textured);
  CHECK(s.background.seed == 5);
  CHECK(s.background.color[2] == 120);
  REQUIRE(s.objects.size() == 1);
  CHECK(s.objects[0].id == "car");
  CHECK(s.objects[0].height == 8);
  CHECK(s.objects[0].vx == 1.5);
  CHECK(s.objects[0].exit == 29);
  REQUIRE(s.gains.size() == 1);
  CHECK(s.gains[0].factor == 1.3);
  REQUIRE(s.light_switches.size() == 1);
  CHECK(s.light_switches[0].frame == 25);
  CHECK(validate(s).empty());
}

TEST_CASE("script errors name the line") {
  try {
    parse_script("[scene]\nwidth = 10\nbogus = 3\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_script("width = 3\n"), ValidationError);
  CHECK_THROWS_AS(parse_script("[nowhere]\n"), ValidationError);
  CHECK_THROWS_AS(parse_script("[scene]\nwidth = ten\n"), ValidationError);
}

TEST_CASE("write_sequence lays out frames, truth and tracks") {
  TempDir dir;
  SceneScript s = moving_box();
  s.length = 3;
  s.objects[0].exit = 2;
  const Sequence seq = render(s);
  write_sequence(seq, dir.path());
  CHECK(load_frame(dir / "frames/frame_00002.ppm") == seq.frames[2]);
  CHECK(load_mask(dir / "truth/frame_00001.pgm") == seq.masks[1]);
  const TrackSet t = load_tracks(dir / "tracks.txt");
  REQUIRE(t.frames.size() == 3);
  CHECK(t.frames[2][0].centroid == seq.tracks.frames[2][0].centroid);
}
