#include "blockbgs/reinit.hpp"

#include "blockbgs/error.hpp"
#include "blockbgs/parallel.hpp"

namespace blockbgs {

ReinitMonitor::ReinitMonitor(double area_threshold, int window)
    : area_threshold_(area_threshold), window_(window) {
  if (!(area_threshold > 0.0 && area_threshold < 1.0)) {
    throw ParameterError("reinit area threshold must lie in (0, 1)");
  }
  if (window < 1) throw ParameterError("reinit window must be >= 1");
  buffer_.reserve(window);
}

ReinitEvent ReinitMonitor::observe(const FrameRGB& frame, double fg_block_fraction) {
  if (fg_block_fraction < area_threshold_) {
    clear();
    return ReinitEvent::none;
  }
  // A trigger that was never consumed slides the window forward.
  if (static_cast<int>(buffer_.size()) == window_) buffer_.erase(buffer_.begin());
  buffer_.push_back(frame);
  if (consecutive_ < window_) ++consecutive_;
  return consecutive_ == window_ ? ReinitEvent::triggered : ReinitEvent::none;
}

std::vector<FrameRGB> ReinitMonitor::take_buffer() {
  std::vector<FrameRGB> out = std::move(buffer_);
  clear();
  return out;
}

void ReinitMonitor::clear() {
  consecutive_ = 0;
  buffer_.clear();
}

void rebuild(BackgroundModel& model, std::span<const FrameRGB> buffered, unsigned threads) {
  if (buffered.empty()) throw StateError("reinitialisation requested with an empty frame buffer");
  const BlockGrid& grid = model.grid;
  for (const auto& f : buffered) {
    if (f.width != grid.width() || f.height != grid.height()) {
      throw SequenceError("buffered frame dimensions do not match the block grid");
    }
  }

  const DescriptorExtractor extractor(grid);
  const EmOptions options = em_options(model.config);
  const std::size_t nrows = grid.anchor_rows().size();
  const std::size_t ncols = grid.anchor_cols().size();
  const std::size_t nframes = buffered.size();

  parallel_for(nrows, threads, [&](std::size_t row_begin, std::size_t row_end) {
    std::vector<Descriptor> row(ncols);
    std::vector<Descriptor> samples(ncols * nframes);
    for (std::size_t r = row_begin; r < row_end; ++r) {
      for (std::size_t f = 0; f < nframes; ++f) {
        extractor.describe_rows(buffered[f], r, r + 1, row);
        for (std::size_t j = 0; j < ncols; ++j) samples[j * nframes + f] = row[j];
      }
      for (std::size_t j = 0; j < ncols; ++j) {
        const RobustFit fit = robust_fit(
            std::span<const Descriptor>(samples).subspan(j * nframes, nframes), options);
        BlockModel& block = model.blocks[r * ncols + j];
        block.mu = fit.mean;
        refresh_threshold(block);
        block.prev_label = PrevLabel::unset;
      }
    }
  });
}

}  // namespace blockbgs
