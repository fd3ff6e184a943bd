#include "blockbgs/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "blockbgs/error.hpp"

namespace blockbgs {

namespace {

std::vector<int> anchor_positions(int extent, int block_size, int advance) {
  std::vector<int> pos;
  for (int p = 0; p + block_size <= extent; p += advance) pos.push_back(p);
  if (pos.back() != extent - block_size) pos.push_back(extent - block_size);
  return pos;
}

// Projection of each block-width segment of one image row onto the column
// basis vectors. Shared by dct_block and the batch extractor so that both
// produce bit-identical sums.
inline double project_segment(const std::uint8_t* row, int channel, const double* basis,
                              int block_size) {
  double acc = 0.0;
  for (int c = 0; c < block_size; ++c) acc += row[3 * c + channel] * basis[c];
  return acc;
}

}  // namespace

std::vector<Anchor> BlockGrid::anchors() const {
  std::vector<Anchor> out;
  out.reserve(size());
  for (int r : rows_)
    for (int c : cols_) out.push_back({r, c});
  return out;
}

BlockGrid make_grid(int width, int height, int block_size, int advance) {
  if (block_size < 2) throw ParameterError("block_size must be at least 2");
  if (block_size > std::min(width, height)) {
    throw ParameterError("block_size " + std::to_string(block_size) + " exceeds frame " +
                         std::to_string(width) + "x" + std::to_string(height));
  }
  if (advance < 1 || advance > block_size) {
    throw ParameterError("advance must lie in [1, block_size]");
  }
  BlockGrid grid;
  grid.width_ = width;
  grid.height_ = height;
  grid.block_size_ = block_size;
  grid.advance_ = advance;
  grid.rows_ = anchor_positions(height, block_size, advance);
  grid.cols_ = anchor_positions(width, block_size, advance);
  return grid;
}

std::array<std::pair<int, int>, kCoeffsPerChannel> retained_coefficients(int block_size) {
  std::array<std::pair<int, int>, kCoeffsPerChannel> out{};
  int taken = 0;
  for (int diag = 0; taken < kCoeffsPerChannel && diag <= 2 * (block_size - 1); ++diag) {
    // Odd diagonals run top-right to bottom-left, even ones the reverse.
    const int lo = std::max(0, diag - (block_size - 1));
    const int hi = std::min(diag, block_size - 1);
    for (int step = 0; step <= hi - lo && taken < kCoeffsPerChannel; ++step) {
      const int row = (diag % 2 == 1) ? lo + step : hi - step;
      out[taken++] = {row, diag - row};
    }
  }
  return out;
}

double dct_basis(int k, int n, int block_size) {
  const double scale = k == 0 ? std::sqrt(1.0 / block_size) : std::sqrt(2.0 / block_size);
  return scale * std::cos(std::numbers::pi * (2.0 * n + 1.0) * k / (2.0 * block_size));
}

Descriptor dct_block(const FrameRGB& frame, Anchor anchor, int block_size) {
  if (anchor.row < 0 || anchor.col < 0 || anchor.row + block_size > frame.height ||
      anchor.col + block_size > frame.width) {
    throw ParameterError("block outside frame");
  }
  const auto coeffs = retained_coefficients(block_size);
  std::vector<std::vector<double>> basis(block_size, std::vector<double>(block_size));
  for (int k = 0; k < block_size; ++k)
    for (int n = 0; n < block_size; ++n) basis[k][n] = dct_basis(k, n, block_size);

  Descriptor d{};
  std::vector<double> row_proj(block_size);
  for (int ch = 0; ch < kChannels; ++ch) {
    for (int c = 0; c < kCoeffsPerChannel; ++c) {
      const auto [u, v] = coeffs[c];
      for (int r = 0; r < block_size; ++r) {
        row_proj[r] = project_segment(frame.pixel(anchor.col, anchor.row + r), ch,
                                      basis[v].data(), block_size);
      }
      double acc = 0.0;
      for (int r = 0; r < block_size; ++r) acc += basis[u][r] * row_proj[r];
      d[ch * kCoeffsPerChannel + c] = acc;
    }
  }
  return d;
}

DescriptorExtractor::DescriptorExtractor(BlockGrid grid)
    : grid_(std::move(grid)), coeffs_(retained_coefficients(grid_.block_size())) {
  const int n = grid_.block_size();
  int max_freq = 0;
  for (int c = 0; c < kCoeffsPerChannel; ++c) {
    const int v = coeffs_[c].second;
    max_freq = std::max({max_freq, coeffs_[c].first, v});
    auto it = std::find(col_freqs_.begin(), col_freqs_.end(), v);
    if (it == col_freqs_.end()) {
      col_freqs_.push_back(v);
      it = col_freqs_.end() - 1;
    }
    col_slot_[c] = static_cast<int>(it - col_freqs_.begin());
  }
  basis_.assign(max_freq + 1, std::vector<double>(n));
  for (int k = 0; k <= max_freq; ++k)
    for (int x = 0; x < n; ++x) basis_[k][x] = dct_basis(k, x, n);
}

void DescriptorExtractor::describe(const FrameRGB& frame, std::span<Descriptor> out) const {
  describe_rows(frame, 0, grid_.anchor_rows().size(), out);
}

void DescriptorExtractor::describe_rows(const FrameRGB& frame, std::size_t row_begin,
                                        std::size_t row_end, std::span<Descriptor> out) const {
  if (frame.width != grid_.width() || frame.height != grid_.height()) {
    throw SequenceError("frame dimensions do not match the block grid");
  }
  const auto& cols = grid_.anchor_cols();
  const auto& rows = grid_.anchor_rows();
  if (out.size() != (row_end - row_begin) * cols.size()) {
    throw ParameterError("descriptor output span has the wrong size");
  }
  if (row_begin >= row_end) return;

  const int n = grid_.block_size();
  const int nv = static_cast<int>(col_freqs_.size());
  const int y0 = rows[row_begin];
  const int y1 = rows[row_end - 1] + n;  // exclusive

  // proj[((y - y0) * ncols + j) * kChannels * nv + ch * nv + slot]
  const std::size_t ncols = cols.size();
  const std::size_t stride = std::size_t(kChannels) * nv;
  std::vector<double> proj(std::size_t(y1 - y0) * ncols * stride);
  for (int y = y0; y < y1; ++y) {
    for (std::size_t j = 0; j < ncols; ++j) {
      const std::uint8_t* seg = frame.pixel(cols[j], y);
      double* dst = &proj[(std::size_t(y - y0) * ncols + j) * stride];
      for (int ch = 0; ch < kChannels; ++ch)
        for (int s = 0; s < nv; ++s)
          dst[ch * nv + s] = project_segment(seg, ch, basis_[col_freqs_[s]].data(), n);
    }
  }

  std::size_t k = 0;
  for (std::size_t ri = row_begin; ri < row_end; ++ri) {
    const int top = rows[ri] - y0;
    for (std::size_t j = 0; j < ncols; ++j, ++k) {
      Descriptor& d = out[k];
      for (int ch = 0; ch < kChannels; ++ch) {
        for (int c = 0; c < kCoeffsPerChannel; ++c) {
          const double* bu = basis_[coeffs_[c].first].data();
          const std::size_t slot = std::size_t(ch) * nv + col_slot_[c];
          double acc = 0.0;
          for (int r = 0; r < n; ++r) acc += bu[r] * proj[(std::size_t(top + r) * ncols + j) * stride + slot];
          d[ch * kCoeffsPerChannel + c] = acc;
        }
      }
    }
  }
}

std::vector<Descriptor> describe_frame(const FrameRGB& frame, const BlockGrid& grid) {
  DescriptorExtractor extractor(grid);
  std::vector<Descriptor> out(grid.size());
  extractor.describe(frame, out);
  return out;
}

}  // namespace blockbgs
