#include "blockbgs/mask.hpp"

#include "blockbgs/error.hpp"

namespace blockbgs {

namespace {

// Accumulates unit squares of side block_size at the selected anchors with a
// 2D difference array, then integrates it.
template <typename Select>
VoteCounts accumulate(const BlockGrid& grid, Select&& selected) {
  const int w = grid.width();
  const int h = grid.height();
  const int n = grid.block_size();
  std::vector<std::int64_t> diff(std::size_t(w + 1) * (h + 1), 0);
  const auto at = [&](int y, int x) -> std::int64_t& { return diff[std::size_t(y) * (w + 1) + x]; };
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!selected(k)) continue;
    const Anchor a = grid.anchor(k);
    at(a.row, a.col) += 1;
    at(a.row, a.col + n) -= 1;
    at(a.row + n, a.col) -= 1;
    at(a.row + n, a.col + n) += 1;
  }
  VoteCounts votes(std::size_t(w) * h);
  std::vector<std::int64_t> column(w + 1, 0);  // running sums down each column
  for (int y = 0; y < h; ++y) {
    std::int64_t run = 0;
    for (int x = 0; x < w; ++x) {
      column[x] += at(y, x);
      run += column[x];
      votes[std::size_t(y) * w + x] = static_cast<std::uint32_t>(run);
    }
  }
  return votes;
}

}  // namespace

VoteCounts precompute_totals(const BlockGrid& grid) {
  return accumulate(grid, [](std::size_t) { return true; });
}

VoteCounts count_foreground_votes(std::span<const BlockLabel> labels, const BlockGrid& grid) {
  if (labels.size() != grid.size()) throw ParameterError("one label per anchor required");
  return accumulate(grid, [&](std::size_t k) { return labels[k].value == Label::foreground; });
}

MaskIntegrator::MaskIntegrator(BlockGrid grid)
    : grid_(std::move(grid)), totals_(precompute_totals(grid_)) {}

MaskGray MaskIntegrator::integrate(std::span<const BlockLabel> labels,
                                   double vote_threshold) const {
  const VoteCounts fg = count_foreground_votes(labels, grid_);
  MaskGray mask(grid_.width(), grid_.height());
  for (std::size_t p = 0; p < fg.size(); ++p) {
    const double probability = static_cast<double>(fg[p]) / static_cast<double>(totals_[p]);
    mask.data[p] = probability >= vote_threshold ? MaskGray::kForeground : MaskGray::kBackground;
  }
  return mask;
}

MaskGray integrate(std::span<const BlockLabel> labels, const BlockGrid& grid,
                   double vote_threshold) {
  return MaskIntegrator(grid).integrate(labels, vote_threshold);
}

}  // namespace blockbgs
