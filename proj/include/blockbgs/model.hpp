#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "blockbgs/config.hpp"
#include "blockbgs/descriptor.hpp"
#include "blockbgs/imaging.hpp"

namespace blockbgs {

enum class Label : std::uint8_t { background, foreground };

/// Label carried over from the previous frame; `unset` right after
/// (re)training.
enum class PrevLabel : std::uint8_t { unset, background, foreground };

/// Diagonal Gaussian background model of one block location.
struct BlockModel {
  Descriptor mu{};
  Descriptor var{};
  double log_norm = 0.0;       // -(D/2) log(2 pi) - 1/2 sum log var
  double log_threshold = 0.0;  // log-likelihood at mu + 2 sqrt(var)
  Descriptor prev_descriptor{};
  PrevLabel prev_label = PrevLabel::unset;
};

/// Builds a block model from a mean and variance, clamping the variance to
/// `variance_floor` and caching the normaliser and threshold.
BlockModel make_block_model(const Descriptor& mu, const Descriptor& var, double variance_floor);

/// Recomputes log_norm and log_threshold from the current mu/var.
void refresh_threshold(BlockModel& model);

/// Log of the diagonal Gaussian density at d. Never exponentiated.
double log_likelihood(const BlockModel& model, const Descriptor& d);

enum class Stage1Verdict : std::uint8_t { background, undecided };

/// Background iff log_likelihood(d) >= log_threshold.
Stage1Verdict stage1_classify(const BlockModel& model, const Descriptor& d);

/// Running update toward d: mu <- (1-rho) mu + rho d, then
/// var <- (1-rho) var + rho (d - mu_new)^2, floored. Throws ParameterError
/// unless 0 < rho < 1.
void adapt(BlockModel& model, const Descriptor& d, double rho, double variance_floor);

struct EmOptions {
  int max_iterations = 50;
  double tolerance = 1e-6;
  double variance_floor = 1e-4;
};

EmOptions em_options(const Config& config);

/// Two-component diagonal mixture fitted by EM from a deterministic start:
/// both components take the pooled variance and sit at pooled mean -/+ 0.1
/// pooled standard deviation.
struct MixtureFit {
  std::array<double, 2> weights{};
  std::array<Descriptor, 2> means{};
  std::array<Descriptor, 2> vars{};
  int iterations = 0;
  double log_likelihood = 0.0;
};

MixtureFit fit_two_component(std::span<const Descriptor> samples, const EmOptions& options);

/// Mean and population variance (not floored) of all samples. The mean is accumulated as
/// offsets from the first sample, so identical samples reproduce it exactly.
std::pair<Descriptor, Descriptor> pooled_moments(std::span<const Descriptor> samples);

struct RobustFit {
  Descriptor mean{};
  Descriptor var{};
  bool dominant = false;  // true: one mixture component outweighed the other by > 0.5
};

/// Fits the mixture; if the weights differ by more than 0.5 the heavier
/// component is kept, otherwise a single Gaussian over all samples is used.
RobustFit robust_fit(std::span<const Descriptor> samples, const EmOptions& options);

struct BackgroundModel {
  BlockGrid grid;
  std::vector<BlockModel> blocks;  // one per anchor
  Config config;
};

struct TrainStats {
  std::size_t dominant = 0;  // anchors that kept the heavier mixture component
  std::size_t single = 0;    // anchors that fell back to one Gaussian
};

/// Fits one block model per anchor from the descriptors of `frames`.
/// Throws TrainingError for fewer than two frames.
BackgroundModel train(std::span<const FrameRGB> frames, const BlockGrid& grid,
                      const Config& config, TrainStats* stats = nullptr, unsigned threads = 0);

/// Binary snapshot: magic, format version, config, grid, per-anchor mu/var.
void save_model(const BackgroundModel& model, const std::filesystem::path& path);
BackgroundModel load_model(const std::filesystem::path& path);

}  // namespace blockbgs
