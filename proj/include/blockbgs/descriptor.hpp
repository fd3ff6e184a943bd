#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "blockbgs/imaging.hpp"

namespace blockbgs {

inline constexpr int kChannels = 3;
inline constexpr int kCoeffsPerChannel = 4;
inline constexpr int kDescriptorDim = kChannels * kCoeffsPerChannel;

/// Low-order DCT coefficients of one block, ordered
/// [r0..r3, g0..g3, b0..b3]. Also used for the per-block mean and variance
/// vectors of the background model.
using Descriptor = std::array<double, kDescriptorDim>;

/// Top-left corner of a block: `row` is i (vertical), `col` is j.
struct Anchor {
  int row = 0;
  int col = 0;
  friend bool operator==(const Anchor&, const Anchor&) = default;
};

/// Square blocks of side block_size placed every `advance` pixels, with an
/// extra anchor flush against the right/bottom edge whenever the stride does
/// not land there. Anchors are ordered row-major.
class BlockGrid {
 public:
  BlockGrid() = default;

  int width() const { return width_; }
  int height() const { return height_; }
  int block_size() const { return block_size_; }
  int advance() const { return advance_; }

  const std::vector<int>& anchor_rows() const { return rows_; }
  const std::vector<int>& anchor_cols() const { return cols_; }

  std::size_t size() const { return rows_.size() * cols_.size(); }
  Anchor anchor(std::size_t k) const {
    return {rows_[k / cols_.size()], cols_[k % cols_.size()]};
  }
  std::vector<Anchor> anchors() const;

  friend bool operator==(const BlockGrid&, const BlockGrid&) = default;
  friend BlockGrid make_grid(int width, int height, int block_size, int advance);

 private:
  int width_ = 0;
  int height_ = 0;
  int block_size_ = 0;
  int advance_ = 0;
  std::vector<int> rows_;
  std::vector<int> cols_;
};

/// Throws ParameterError unless 2 <= block_size <= min(width, height) and
/// 1 <= advance <= block_size.
BlockGrid make_grid(int width, int height, int block_size, int advance);

/// (row frequency, column frequency) of the retained coefficients: the first
/// four positions of the JPEG zig-zag scan of an N x N block.
std::array<std::pair<int, int>, kCoeffsPerChannel> retained_coefficients(int block_size);

/// Orthonormal DCT-II basis value for frequency k at sample n of an N-point
/// transform.
double dct_basis(int k, int n, int block_size);

/// Descriptor of the block at `anchor`, computed with separable row and
/// column passes. The block must lie inside the frame.
Descriptor dct_block(const FrameRGB& frame, Anchor anchor, int block_size);

/// Batch extractor for one grid geometry. Row projections are shared by all
/// blocks that overlap an image row, which is arithmetically identical to
/// running dct_block on each anchor.
class DescriptorExtractor {
 public:
  explicit DescriptorExtractor(BlockGrid grid);

  const BlockGrid& grid() const { return grid_; }

  /// Descriptors for every anchor, in anchor order.
  void describe(const FrameRGB& frame, std::span<Descriptor> out) const;

  /// Descriptors for anchor rows [row_begin, row_end); `out` holds
  /// (row_end - row_begin) * anchor_cols().size() entries.
  void describe_rows(const FrameRGB& frame, std::size_t row_begin, std::size_t row_end,
                     std::span<Descriptor> out) const;

 private:
  BlockGrid grid_;
  std::array<std::pair<int, int>, kCoeffsPerChannel> coeffs_{};
  std::vector<int> col_freqs_;          // distinct column frequencies
  std::array<int, kCoeffsPerChannel> col_slot_{};  // coeff -> index in col_freqs_
  std::vector<std::vector<double>> basis_;  // basis_[k][n], k <= max frequency
};

std::vector<Descriptor> describe_frame(const FrameRGB& frame, const BlockGrid& grid);

}  // namespace blockbgs
