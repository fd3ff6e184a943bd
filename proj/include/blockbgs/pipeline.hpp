#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "blockbgs/cascade.hpp"
#include "blockbgs/config.hpp"
#include "blockbgs/descriptor.hpp"
#include "blockbgs/imaging.hpp"
#include "blockbgs/mask.hpp"
#include "blockbgs/model.hpp"
#include "blockbgs/reinit.hpp"

namespace blockbgs {

struct FrameResult {
  MaskGray mask;
  std::vector<BlockLabel> labels;  // one per anchor
  double fg_block_fraction = 0.0;
  bool reinitialized = false;  // the model was rebuilt after this frame
};

/// Frame-by-frame foreground segmentation: descriptor extraction, the
/// classifier cascade, reinitialisation on sustained heavy foreground, and
/// vote integration into a pixel mask. Frames must be fed in order.
class Segmenter {
 public:
  /// Takes its parameters from model.config. `threads` = 0 uses all cores;
  /// results do not depend on it.
  explicit Segmenter(BackgroundModel model, unsigned threads = 0);

  FrameResult process(const FrameRGB& frame);

  const BackgroundModel& model() const { return model_; }
  const CascadeCounters& counters() const { return counters_; }
  /// Per-anchor instrumentation of the most recent frame.
  const std::vector<CascadeTrace>& last_traces() const { return traces_; }
  const ReinitMonitor& monitor() const { return monitor_; }
  std::size_t frames_processed() const { return frames_; }

 private:
  BackgroundModel model_;
  CascadeParams params_;
  DescriptorExtractor extractor_;
  MaskIntegrator integrator_;
  ReinitMonitor monitor_;
  unsigned threads_;
  std::vector<Descriptor> descriptors_;
  std::vector<CascadeTrace> traces_;
  CascadeCounters counters_;
  std::size_t frames_ = 0;
};

/// Trains on `training` with the grid implied by config.
BackgroundModel train_model(std::span<const FrameRGB> training, const Config& config,
                            TrainStats* stats = nullptr, unsigned threads = 0);

struct RunReport {
  std::size_t frames_processed = 0;
  std::vector<std::size_t> reinit_frames;  // indices into the processed frames
  double mean_fg_fraction = 0.0;           // mean fraction of foreground pixels
  double train_seconds = 0.0;
  double process_seconds = 0.0;
  double fps() const { return process_seconds > 0.0 ? frames_processed / process_seconds : 0.0; }
};

struct RunOutput {
  std::vector<MaskGray> masks;
  std::vector<double> fg_block_fractions;
  RunReport report;
  CascadeCounters counters;
};

/// Trains on the first config.training_frames frames and segments the rest.
/// Throws TrainingError when the sequence is not longer than the training
/// span.
RunOutput run_sequence(std::span<const FrameRGB> frames, const Config& config,
                       unsigned threads = 0);

/// Segments every frame with an existing model.
RunOutput run_with_model(std::span<const FrameRGB> frames, BackgroundModel model,
                         unsigned threads = 0);

/// Mean F-measure over the frames whose ground truth contains foreground.
/// Returns nullopt when no such frame exists.
std::optional<double> mean_f_measure(std::span<const MaskGray> predicted,
                                     std::span<const MaskGray> truth);

struct BenchRow {
  int advance = 1;
  std::optional<double> f_measure;
  double fps = 0.0;
  double train_seconds = 0.0;
  std::size_t blocks = 0;
};

/// Runs the whole pipeline once per advance. When `truth` is non-empty it
/// must hold one mask per input frame; the F-measure covers the frames after
/// training.
std::vector<BenchRow> benchmark(std::span<const FrameRGB> frames, std::span<const MaskGray> truth,
                                const Config& config, std::span<const int> advances,
                                unsigned threads = 0);

}  // namespace blockbgs
