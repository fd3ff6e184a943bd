#pragma once

#include <span>
#include <vector>

#include "blockbgs/imaging.hpp"
#include "blockbgs/model.hpp"

namespace blockbgs {

enum class ReinitEvent { none, triggered };

/// Watches the per-frame fraction of foreground blocks and buffers frames
/// while it stays at or above `area_threshold`. Fires once `window`
/// consecutive frames qualify; any lighter frame resets the count.
class ReinitMonitor {
 public:
  explicit ReinitMonitor(double area_threshold = 0.70, int window = 15);

  ReinitEvent observe(const FrameRGB& frame, double fg_block_fraction);

  int consecutive_heavy_frames() const { return consecutive_; }
  const std::vector<FrameRGB>& buffer() const { return buffer_; }
  double area_threshold() const { return area_threshold_; }
  int window() const { return window_; }

  /// Hands over the buffered frames and resets the monitor.
  std::vector<FrameRGB> take_buffer();
  void clear();

 private:
  double area_threshold_;
  int window_;
  int consecutive_ = 0;
  std::vector<FrameRGB> buffer_;
};

/// Re-estimates every block mean from `buffered` with the same robust
/// mixture rule used in training. Variances are left untouched; thresholds
/// are refreshed and previous labels reset. Throws StateError when the
/// buffer is empty.
void rebuild(BackgroundModel& model, std::span<const FrameRGB> buffered, unsigned threads = 0);

}  // namespace blockbgs
