#include <random>

#include "blockbgs/error.hpp"
#include "blockbgs/mask.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace blockbgs;

namespace {

const BlockLabel kFg{Label::foreground, Stage::exhausted};
const BlockLabel kBg{Label::background, Stage::stage1};

std::vector<BlockLabel> random_labels(std::size_t n, double p_fg, std::mt19937_64& rng) {
  std::bernoulli_distribution fg(p_fg);
  std::vector<BlockLabel> labels(n);
  for (auto& l : labels) l = fg(rng) ? kFg : kBg;
  return labels;
}

// Labels the first `count` blocks covering (x, y) as foreground.
std::vector<BlockLabel> votes_at(const BlockGrid& grid, int x, int y, int count) {
  std::vector<BlockLabel> labels(grid.size(), kBg);
  const int n = grid.block_size();
  int given = 0;
  for (std::size_t k = 0; k < grid.size() && given < count; ++k) {
    const Anchor a = grid.anchor(k);
    if (a.row <= y && y < a.row + n && a.col <= x && x < a.col + n) {
      labels[k] = kFg;
      ++given;
    }
  }
  REQUIRE(given == count);
  return labels;
}

}  // namespace

TEST_CASE("totals count covering blocks") {
  const BlockGrid grid = make_grid(24, 24, 8, 1);
  const VoteCounts totals = precompute_totals(grid);
  CHECK(totals[12 * 24 + 12] == 64);
  CHECK(totals[0] == 1);
  CHECK(totals[23 * 24 + 23] == 1);
  CHECK(totals[3 * 24 + 12] == 4 * 8);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    const BlockGrid g = make_grid(std::uniform_int_distribution<int>(n, 30)(rng),
                                  std::uniform_int_distribution<int>(n, 30)(rng), n,
                                  std::uniform_int_distribution<int>(1, n)(rng));
    const VoteCounts t = precompute_totals(g);
    const std::vector<BlockLabel> all_fg(g.size(), kFg);
    REQUIRE(count_foreground_votes(all_fg, g) == t);
    for (auto v : t) REQUIRE(v >= 1);
  }
}

TEST_CASE("58 of 64 votes is foreground, 57 is not") {
  const BlockGrid grid = make_grid(24, 24, 8, 1);
  const MaskGray m58 = integrate(votes_at(grid, 12, 12, 58), grid, 0.90);
  const MaskGray m57 = integrate(votes_at(grid, 12, 12, 57), grid, 0.90);
  CHECK(m58.at(12, 12) == 255);
  CHECK(m57.at(12, 12) == 0);
}

TEST_CASE("all background gives an empty mask") {
  const BlockGrid grid = make_grid(30, 20, 8, 1);
  const std::vector<BlockLabel> labels(grid.size(), kBg);
  CHECK(integrate(labels, grid, 0.9).count_foreground() == 0);
}

TEST_CASE("a single foreground block among background yields nothing") {
  const BlockGrid grid = make_grid(32, 32, 8, 1);
  for (std::size_t k : {std::size_t(30), grid.size() / 2, grid.size() - 30}) {
    std::vector<BlockLabel> labels(grid.size(), kBg);
    labels[k] = kFg;
    CHECK(integrate(labels, grid, 0.9).count_foreground() == 0);
  }
  // A corner pixel has a single covering block, so that vote decides it.
  std::vector<BlockLabel> corner(grid.size(), kBg);
  corner[0] = kFg;
  CHECK(integrate(corner, grid, 0.9).count_foreground() == 1);
}

TEST_CASE("tiling grid upsamples block labels") {
  const BlockGrid grid = make_grid(32, 24, 8, 8);
  std::mt19937_64 rng(2);
  const auto labels = random_labels(grid.size(), 0.5, rng);
  const MaskGray mask = integrate(labels, grid, 0.9);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 32; ++x) {
      const std::size_t k = std::size_t(y / 8) * 4 + x / 8;
      REQUIRE(mask.foreground(x, y) == (labels[k].value == Label::foreground));
    }
}

TEST_CASE("integration matches the per-pixel vote loop") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    const int w = std::uniform_int_distribution<int>(std::max(n, 16), 24)(rng);
    const int h = std::uniform_int_distribution<int>(std::max(n, 16), 24)(rng);
    const BlockGrid grid = make_grid(w, h, n, std::uniform_int_distribution<int>(1, n)(rng));
    const double p = std::uniform_real_distribution<double>(0.5, 1.0)(rng);
    const auto labels = random_labels(grid.size(), p, rng);
    for (double thr : {0.5, 0.9, 1.0}) REQUIRE(integrate(labels, grid, thr) == oracle::vote_mask(labels, grid, thr));
  }
}

TEST_CASE("flipping a block to foreground never removes foreground pixels") {
  std::mt19937_64 rng(4);
  const BlockGrid grid = make_grid(20, 20, 4, 1);
  const MaskIntegrator integrator(grid);
  for (int trial = 0; trial < 100; ++trial) {
    auto labels = random_labels(grid.size(), 0.85, rng);
    const MaskGray before = integrator.integrate(labels, 0.9);
    labels[std::uniform_int_distribution<std::size_t>(0, grid.size() - 1)(rng)] = kFg;
    const MaskGray after = integrator.integrate(labels, 0.9);
    for (std::size_t i = 0; i < before.data.size(); ++i)
      if (before.data[i]) REQUIRE(after.data[i]);
  }
}

TEST_CASE("label count must match the grid") {
  const BlockGrid grid = make_grid(16, 16, 8, 8);
  CHECK_THROWS_AS(integrate(std::vector<BlockLabel>(3), grid, 0.9), ParameterError);
}
