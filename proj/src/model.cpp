#include "blockbgs/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>

#include "blockbgs/error.hpp"
#include "blockbgs/parallel.hpp"

namespace blockbgs {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;  // log(2 pi)

double log_normaliser(const Descriptor& var) {
  double sum_log = 0.0;
  for (double v : var) sum_log += std::log(v);
  return -0.5 * kDescriptorDim * kLogTwoPi - 0.5 * sum_log;
}

}  // namespace

void refresh_threshold(BlockModel& model) {
  model.log_norm = log_normaliser(model.var);
  Descriptor t;
  for (int k = 0; k < kDescriptorDim; ++k) t[k] = model.mu[k] + 2.0 * std::sqrt(model.var[k]);
  model.log_threshold = log_likelihood(model, t);
}

BlockModel make_block_model(const Descriptor& mu, const Descriptor& var, double variance_floor) {
  BlockModel model;
  model.mu = mu;
  for (int k = 0; k < kDescriptorDim; ++k) model.var[k] = std::max(var[k], variance_floor);
  refresh_threshold(model);
  return model;
}

double log_likelihood(const BlockModel& model, const Descriptor& d) {
  double mahalanobis = 0.0;
  for (int k = 0; k < kDescriptorDim; ++k) {
    const double diff = d[k] - model.mu[k];
    mahalanobis += diff * diff / model.var[k];
  }
  return model.log_norm - 0.5 * mahalanobis;
}

Stage1Verdict stage1_classify(const BlockModel& model, const Descriptor& d) {
  return log_likelihood(model, d) >= model.log_threshold ? Stage1Verdict::background
                                                         : Stage1Verdict::undecided;
}

void adapt(BlockModel& model, const Descriptor& d, double rho, double variance_floor) {
  if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("adaptation rate must lie in (0, 1)");
  for (int k = 0; k < kDescriptorDim; ++k) {
    model.mu[k] += rho * (d[k] - model.mu[k]);
    const double diff = d[k] - model.mu[k];
    model.var[k] = std::max((1.0 - rho) * model.var[k] + rho * diff * diff, variance_floor);
  }
  refresh_threshold(model);
}

EmOptions em_options(const Config& config) {
  return {config.em_max_iterations, config.em_tolerance, config.variance_floor};
}

std::pair<Descriptor, Descriptor> pooled_moments(std::span<const Descriptor> samples) {
  if (samples.empty()) throw TrainingError("no samples");
  const double n = static_cast<double>(samples.size());
  const Descriptor& origin = samples.front();
  Descriptor offset{};
  for (const auto& x : samples)
    for (int k = 0; k < kDescriptorDim; ++k) offset[k] += x[k] - origin[k];
  Descriptor mean;
  for (int k = 0; k < kDescriptorDim; ++k) mean[k] = origin[k] + offset[k] / n;
  Descriptor var{};
  for (const auto& x : samples)
    for (int k = 0; k < kDescriptorDim; ++k) {
      const double diff = x[k] - mean[k];
      var[k] += diff * diff;
    }
  for (double& v : var) v /= n;
  return {mean, var};
}

MixtureFit fit_two_component(std::span<const Descriptor> samples, const EmOptions& options) {
  const auto [pooled_mean, pooled_var] = pooled_moments(samples);
  const std::size_t n = samples.size();

  // Work on data centred at the pooled mean to keep the second-moment
  // accumulators well conditioned.
  std::vector<Descriptor> centred(n);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < kDescriptorDim; ++k) centred[i][k] = samples[i][k] - pooled_mean[k];

  MixtureFit fit;
  fit.weights = {0.5, 0.5};
  for (int k = 0; k < kDescriptorDim; ++k) {
    const double spread = 0.1 * std::sqrt(pooled_var[k]);
    fit.means[0][k] = -spread;
    fit.means[1][k] = spread;
    fit.vars[0][k] = fit.vars[1][k] = std::max(pooled_var[k], options.variance_floor);
  }

  double previous = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iterations; ++it) {
    std::array<double, 2> bias{};
    std::array<Descriptor, 2> inv_var{};
    for (int c = 0; c < 2; ++c) {
      bias[c] = std::log(fit.weights[c]) + log_normaliser(fit.vars[c]);
      for (int k = 0; k < kDescriptorDim; ++k) inv_var[c][k] = 1.0 / fit.vars[c][k];
    }

    std::array<double, 2> mass{};
    std::array<Descriptor, 2> first{}, second{};
    double total = 0.0;
    for (const auto& y : centred) {
      std::array<double, 2> logp;
      for (int c = 0; c < 2; ++c) {
        double m = 0.0;
        for (int k = 0; k < kDescriptorDim; ++k) {
          const double diff = y[k] - fit.means[c][k];
          m += diff * diff * inv_var[c][k];
        }
        logp[c] = bias[c] - 0.5 * m;
      }
      const double top = std::max(logp[0], logp[1]);
      const double lse = top + std::log(std::exp(logp[0] - top) + std::exp(logp[1] - top));
      total += lse;
      for (int c = 0; c < 2; ++c) {
        const double r = std::exp(logp[c] - lse);
        mass[c] += r;
        for (int k = 0; k < kDescriptorDim; ++k) {
          first[c][k] += r * y[k];
          second[c][k] += r * y[k] * y[k];
        }
      }
    }

    fit.iterations = it + 1;
    fit.log_likelihood = total;
    if (it > 0 && std::abs(total - previous) <= options.tolerance * std::abs(previous)) break;
    previous = total;

    for (int c = 0; c < 2; ++c) {
      fit.weights[c] = mass[c] / static_cast<double>(n);
      if (mass[c] <= 1e-12) continue;  // starved component keeps its parameters
      for (int k = 0; k < kDescriptorDim; ++k) {
        const double mean = first[c][k] / mass[c];
        fit.means[c][k] = mean;
        fit.vars[c][k] = std::max(second[c][k] / mass[c] - mean * mean, options.variance_floor);
      }
    }
  }

  for (int c = 0; c < 2; ++c)
    for (int k = 0; k < kDescriptorDim; ++k) fit.means[c][k] += pooled_mean[k];
  return fit;
}

RobustFit robust_fit(std::span<const Descriptor> samples, const EmOptions& options) {
  const MixtureFit mixture = fit_two_component(samples, options);
  RobustFit out;
  if (std::abs(mixture.weights[0] - mixture.weights[1]) > 0.5) {
    const int heavy = mixture.weights[0] > mixture.weights[1] ? 0 : 1;
    out.mean = mixture.means[heavy];
    out.var = mixture.vars[heavy];
    out.dominant = true;
  } else {
    std::tie(out.mean, out.var) = pooled_moments(samples);
  }
  for (double& v : out.var) v = std::max(v, options.variance_floor);
  return out;
}

BackgroundModel train(std::span<const FrameRGB> frames, const BlockGrid& grid,
                      const Config& config, TrainStats* stats, unsigned threads) {
  if (frames.size() < 2) {
    throw TrainingError("training needs at least 2 frames, got " + std::to_string(frames.size()));
  }
  for (const auto& f : frames) {
    if (f.width != grid.width() || f.height != grid.height()) {
      throw SequenceError("training frame dimensions do not match the block grid");
    }
  }

  BackgroundModel model;
  model.grid = grid;
  model.config = config;
  model.config.block_size = grid.block_size();
  model.config.advance = grid.advance();
  model.blocks.resize(grid.size());

  const DescriptorExtractor extractor(grid);
  const EmOptions options = em_options(config);
  const std::size_t nrows = grid.anchor_rows().size();
  const std::size_t ncols = grid.anchor_cols().size();
  const std::size_t nframes = frames.size();
  std::vector<char> dominant(grid.size(), 0);

  parallel_for(nrows, threads, [&](std::size_t row_begin, std::size_t row_end) {
    std::vector<Descriptor> row(ncols);
    std::vector<Descriptor> samples(ncols * nframes);  // [anchor column][frame]
    for (std::size_t r = row_begin; r < row_end; ++r) {
      for (std::size_t f = 0; f < nframes; ++f) {
        extractor.describe_rows(frames[f], r, r + 1, row);
        for (std::size_t j = 0; j < ncols; ++j) samples[j * nframes + f] = row[j];
      }
      for (std::size_t j = 0; j < ncols; ++j) {
        const RobustFit fit = robust_fit(
            std::span<const Descriptor>(samples).subspan(j * nframes, nframes), options);
        model.blocks[r * ncols + j] = make_block_model(fit.mean, fit.var, config.variance_floor);
        dominant[r * ncols + j] = fit.dominant;
      }
    }
  });

  if (stats) {
    stats->dominant = static_cast<std::size_t>(std::count(dominant.begin(), dominant.end(), 1));
    stats->single = grid.size() - stats->dominant;
  }
  return model;
}

namespace {

constexpr char kMagic[8] = {'B', 'L', 'K', 'B', 'G', 'S', 'M', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("model file truncated");
  return value;
}

}  // namespace

void save_model(const BackgroundModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put(out, kFormatVersion);
  const std::string config = to_string(model.config);
  put(out, static_cast<std::uint32_t>(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  put(out, static_cast<std::int32_t>(model.grid.width()));
  put(out, static_cast<std::int32_t>(model.grid.height()));
  put(out, static_cast<std::int32_t>(model.grid.block_size()));
  put(out, static_cast<std::int32_t>(model.grid.advance()));
  put(out, static_cast<std::uint64_t>(model.blocks.size()));
  for (const auto& b : model.blocks) {
    out.write(reinterpret_cast<const char*>(b.mu.data()), sizeof(b.mu));
    out.write(reinterpret_cast<const char*>(b.var.data()), sizeof(b.var));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

BackgroundModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError(path.string() + " is not a model file");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw ValidationError("unsupported model format version " + std::to_string(version));
  }
  const auto config_len = get<std::uint32_t>(in);
  std::string config_text(config_len, '\0');
  in.read(config_text.data(), config_len);
  if (!in) throw ValidationError("model file truncated");

  BackgroundModel model;
  model.config = parse_config(config_text);
  const int width = get<std::int32_t>(in);
  const int height = get<std::int32_t>(in);
  const int block = get<std::int32_t>(in);
  const int advance = get<std::int32_t>(in);
  model.grid = make_grid(width, height, block, advance);
  const auto count = get<std::uint64_t>(in);
  if (count != model.grid.size()) throw ValidationError("model block count does not match grid");
  model.blocks.resize(count);
  for (auto& b : model.blocks) {
    in.read(reinterpret_cast<char*>(b.mu.data()), sizeof(b.mu));
    in.read(reinterpret_cast<char*>(b.var.data()), sizeof(b.var));
    if (!in) throw ValidationError("model file truncated");
    refresh_threshold(b);
  }
  return model;
}

}  // namespace blockbgs
