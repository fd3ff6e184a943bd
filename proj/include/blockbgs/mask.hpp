#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "blockbgs/cascade.hpp"
#include "blockbgs/descriptor.hpp"
#include "blockbgs/imaging.hpp"

namespace blockbgs {

/// Per-pixel vote counts, row-major, width * height entries.
using VoteCounts = std::vector<std::uint32_t>;

/// Number of blocks covering each pixel. Depends only on the grid.
VoteCounts precompute_totals(const BlockGrid& grid);

/// Number of foreground-labelled blocks covering each pixel.
VoteCounts count_foreground_votes(std::span<const BlockLabel> labels, const BlockGrid& grid);

/// Pixel-level mask from block labels: a pixel is foreground when at least
/// `vote_threshold` of the blocks covering it are foreground. Holds the
/// coverage totals so they are computed once per geometry.
class MaskIntegrator {
 public:
  explicit MaskIntegrator(BlockGrid grid);

  const BlockGrid& grid() const { return grid_; }
  const VoteCounts& totals() const { return totals_; }

  MaskGray integrate(std::span<const BlockLabel> labels, double vote_threshold) const;

 private:
  BlockGrid grid_;
  VoteCounts totals_;
};

MaskGray integrate(std::span<const BlockLabel> labels, const BlockGrid& grid,
                   double vote_threshold);

}  // namespace blockbgs
