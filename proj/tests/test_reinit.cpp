#include <random>

#include "blockbgs/error.hpp"
#include "blockbgs/reinit.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace blockbgs;

TEST_CASE("monitor parameter validation") {
  CHECK_THROWS_AS(ReinitMonitor(0.0, 15), ParameterError);
  CHECK_THROWS_AS(ReinitMonitor(1.0, 15), ParameterError);
  CHECK_THROWS_AS(ReinitMonitor(0.7, 0), ParameterError);
}

TEST_CASE("fifteen consecutive heavy frames trigger on the fifteenth") {
  ReinitMonitor mon;
  const FrameRGB f(4, 4);
  for (int i = 1; i < 15; ++i) REQUIRE(mon.observe(f, 0.75) == ReinitEvent::none);
  CHECK(mon.observe(f, 0.75) == ReinitEvent::triggered);
  CHECK(mon.buffer().size() == 15);
  const auto buffered = mon.take_buffer();
  CHECK(buffered.size() == 15);
  CHECK(mon.consecutive_heavy_frames() == 0);
  CHECK(mon.buffer().empty());
}

TEST_CASE("a light frame resets the count") {
  ReinitMonitor mon;
  const FrameRGB f(4, 4);
  for (int i = 0; i < 14; ++i) mon.observe(f, 0.9);
  CHECK(mon.observe(f, 0.69) == ReinitEvent::none);
  CHECK(mon.consecutive_heavy_frames() == 0);
  CHECK(mon.buffer().empty());
  for (int i = 1; i < 15; ++i) REQUIRE(mon.observe(f, 0.9) == ReinitEvent::none);
  CHECK(mon.observe(f, 0.9) == ReinitEvent::triggered);
}

TEST_CASE("a fraction just below the threshold never triggers") {
  ReinitMonitor mon;
  const FrameRGB f(4, 4);
  for (int i = 0; i < 1000; ++i) REQUIRE(mon.observe(f, 0.69) == ReinitEvent::none);
}

TEST_CASE("the threshold itself counts as heavy") {
  ReinitMonitor mon(0.7, 2);
  const FrameRGB f(4, 4);
  CHECK(mon.observe(f, 0.7) == ReinitEvent::none);
  CHECK(mon.observe(f, 0.7) == ReinitEvent::triggered);
}

TEST_CASE("the buffer never exceeds the window") {
  ReinitMonitor mon(0.5, 3);
  const FrameRGB f(2, 2);
  for (int i = 0; i < 10; ++i) {
    mon.observe(f, 0.9);
    REQUIRE(mon.buffer().size() <= 3);
  }
}

namespace {

BackgroundModel trained_model(std::mt19937_64& rng) {
  std::vector<FrameRGB> frames;
  for (int i = 0; i < 6; ++i) frames.push_back(oracle::random_frame(20, 16, rng));
  return train(frames, make_grid(20, 16, 8, 2), Config{});
}

}  // namespace

TEST_CASE("rebuild from identical frames sets mu exactly and keeps var") {
  std::mt19937_64 rng(1);
  BackgroundModel model = trained_model(rng);
  for (auto& b : model.blocks) b.prev_label = PrevLabel::foreground;
  const BackgroundModel before = model;
  const FrameRGB scene = oracle::random_frame(20, 16, rng);
  const std::vector<FrameRGB> buffered(15, scene);
  rebuild(model, buffered);
  const auto desc = describe_frame(scene, model.grid);
  for (std::size_t k = 0; k < model.blocks.size(); ++k) {
    const BlockModel& b = model.blocks[k];
    REQUIRE(b.mu == desc[k]);
    REQUIRE(b.var == before.blocks[k].var);
    REQUIRE(b.prev_label == PrevLabel::unset);
    REQUIRE(b.log_threshold == make_block_model(b.mu, b.var, 1e-4).log_threshold);
  }
}

TEST_CASE("rebuild never modifies var and is deterministic") {
  std::mt19937_64 rng(2);
  BackgroundModel a = trained_model(rng);
  BackgroundModel b = a;
  std::vector<FrameRGB> buffered;
  for (int i = 0; i < 15; ++i) buffered.push_back(oracle::random_frame(20, 16, rng));
  rebuild(a, buffered, 1);
  rebuild(b, buffered, 3);
  for (std::size_t k = 0; k < a.blocks.size(); ++k) {
    REQUIRE(a.blocks[k].mu == b.blocks[k].mu);
    REQUIRE(a.blocks[k].var == b.blocks[k].var);
  }
}

TEST_CASE("rebuild with an empty buffer is a state error") {
  std::mt19937_64 rng(3);
  BackgroundModel model = trained_model(rng);
  CHECK_THROWS_AS(rebuild(model, std::vector<FrameRGB>{}), StateError);
}
