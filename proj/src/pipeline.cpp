#include "blockbgs/pipeline.hpp"

#include <chrono>

#include "blockbgs/error.hpp"
#include "blockbgs/metrics.hpp"
#include "blockbgs/parallel.hpp"

namespace blockbgs {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

Segmenter::Segmenter(BackgroundModel model, unsigned threads)
    : model_(std::move(model)),
      params_(cascade_params(model_.config)),
      extractor_(model_.grid),
      integrator_(model_.grid),
      monitor_(model_.config.reinit_area, model_.config.reinit_window),
      threads_(threads),
      descriptors_(model_.grid.size()),
      traces_(model_.grid.size()) {
  model_.config.validate();
  if (model_.blocks.size() != model_.grid.size()) {
    throw ParameterError("model has " + std::to_string(model_.blocks.size()) +
                         " blocks for a grid of " + std::to_string(model_.grid.size()));
  }
}

FrameResult Segmenter::process(const FrameRGB& frame) {
  const BlockGrid& grid = model_.grid;
  if (frame.width != grid.width() || frame.height != grid.height()) {
    throw SequenceError("frame is " + std::to_string(frame.width) + "x" +
                        std::to_string(frame.height) + ", model expects " +
                        std::to_string(grid.width()) + "x" + std::to_string(grid.height()));
  }
  const std::size_t ncols = grid.anchor_cols().size();
  parallel_for(grid.anchor_rows().size(), threads_, [&](std::size_t begin, std::size_t end) {
    extractor_.describe_rows(
        frame, begin, end,
        std::span<Descriptor>(descriptors_).subspan(begin * ncols, (end - begin) * ncols));
  });

  FrameResult result;
  result.labels.resize(grid.size());
  parallel_for(grid.size(), threads_, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      result.labels[k] = classify_block(model_.blocks[k], descriptors_[k], params_, &traces_[k]);
    }
  });

  std::size_t foreground = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    counters_.record(result.labels[k], traces_[k]);
    foreground += result.labels[k].value == Label::foreground;
  }
  result.fg_block_fraction = double(foreground) / double(grid.size());
  result.mask = integrator_.integrate(result.labels, model_.config.vote_threshold);

  if (monitor_.observe(frame, result.fg_block_fraction) == ReinitEvent::triggered) {
    const auto buffered = monitor_.take_buffer();
    rebuild(model_, buffered, threads_);
    result.reinitialized = true;
  }
  ++frames_;
  return result;
}

BackgroundModel train_model(std::span<const FrameRGB> training, const Config& config,
                            TrainStats* stats, unsigned threads) {
  config.validate();
  if (training.empty()) throw TrainingError("no training frames");
  const BlockGrid grid = make_grid(training.front().width, training.front().height,
                                   config.block_size, config.advance);
  return train(training, grid, config, stats, threads);
}

RunOutput run_with_model(std::span<const FrameRGB> frames, BackgroundModel model,
                         unsigned threads) {
  RunOutput out;
  Segmenter segmenter(std::move(model), threads);
  double fg_pixels = 0.0;
  const auto start = Clock::now();
  for (std::size_t t = 0; t < frames.size(); ++t) {
    FrameResult r = segmenter.process(frames[t]);
    if (r.reinitialized) out.report.reinit_frames.push_back(t);
    fg_pixels += double(r.mask.count_foreground()) / double(r.mask.data.size());
    out.fg_block_fractions.push_back(r.fg_block_fraction);
    out.masks.push_back(std::move(r.mask));
  }
  out.report.process_seconds = seconds_since(start);
  out.report.frames_processed = frames.size();
  out.report.mean_fg_fraction = frames.empty() ? 0.0 : fg_pixels / double(frames.size());
  out.counters = segmenter.counters();
  return out;
}

RunOutput run_sequence(std::span<const FrameRGB> frames, const Config& config,
                       unsigned threads) {
  const auto ntrain = static_cast<std::size_t>(config.training_frames);
  if (frames.size() <= ntrain) {
    throw TrainingError("sequence has " + std::to_string(frames.size()) +
                        " frames, training alone needs " + std::to_string(ntrain));
  }
  const auto start = Clock::now();
  BackgroundModel model = train_model(frames.first(ntrain), config, nullptr, threads);
  const double train_seconds = seconds_since(start);
  RunOutput out = run_with_model(frames.subspan(ntrain), std::move(model), threads);
  out.report.train_seconds = train_seconds;
  return out;
}

std::optional<double> mean_f_measure(std::span<const MaskGray> predicted,
                                     std::span<const MaskGray> truth) {
  if (predicted.size() != truth.size()) {
    throw ValidationError("predicted and ground-truth mask counts differ");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (truth[t].count_foreground() == 0) continue;
    sum += score_mask(predicted[t], truth[t]).f_measure;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / double(count);
}

std::vector<BenchRow> benchmark(std::span<const FrameRGB> frames, std::span<const MaskGray> truth,
                                const Config& config, std::span<const int> advances,
                                unsigned threads) {
  if (!truth.empty() && truth.size() != frames.size()) {
    throw ValidationError("benchmark needs one ground-truth mask per frame");
  }
  const auto ntrain = static_cast<std::size_t>(config.training_frames);
  std::vector<BenchRow> rows;
  for (int advance : advances) {
    Config c = config;
    c.advance = advance;
    const RunOutput out = run_sequence(frames, c, threads);
    BenchRow row;
    row.advance = advance;
    row.fps = out.report.fps();
    row.train_seconds = out.report.train_seconds;
    row.blocks = out.counters.blocks / std::max<std::size_t>(1, out.report.frames_processed);
    if (!truth.empty()) row.f_measure = mean_f_measure(out.masks, truth.subspan(ntrain));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace blockbgs
