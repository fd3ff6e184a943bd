#include <cmath>
#include <fstream>
#include <random>

#include "blockbgs/error.hpp"
#include "blockbgs/model.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace blockbgs;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Descriptor filled(double v) {
  Descriptor d;
  d.fill(v);
  return d;
}

Descriptor random_descriptor(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Descriptor d;
  for (auto& x : d) x = u(rng);
  return d;
}

BlockModel random_model(std::mt19937_64& rng) {
  return make_block_model(random_descriptor(rng, -200, 800), random_descriptor(rng, 0.01, 50), 1e-4);
}

Descriptor offset_by_sigmas(const BlockModel& m, double k) {
  Descriptor d;
  for (int i = 0; i < kDescriptorDim; ++i) d[i] = m.mu[i] + k * std::sqrt(m.var[i]);
  return d;
}

}  // namespace

TEST_CASE("log_likelihood at the mean is the normaliser") {
  std::mt19937_64 rng(1);
  const BlockModel m = random_model(rng);
  double expected = -0.5 * kDescriptorDim * kLog2Pi;
  for (double v : m.var) expected -= 0.5 * std::log(v);
  CHECK(log_likelihood(m, m.mu) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("threshold is the likelihood at mu + 2 sigma, a Mahalanobis term of -24") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const BlockModel m = random_model(rng);
    const Descriptor t = offset_by_sigmas(m, 2.0);
    CHECK(log_likelihood(m, t) == doctest::Approx(m.log_threshold).epsilon(1e-12));
    CHECK(m.log_threshold - log_likelihood(m, m.mu) == doctest::Approx(-24.0).epsilon(1e-9));
  }
}

TEST_CASE("log_likelihood matches the dense-covariance oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const BlockModel m = random_model(rng);
    const Descriptor d = random_descriptor(rng, -200, 800);
    std::vector<double> mean(m.mu.begin(), m.mu.end()), x(d.begin(), d.end());
    std::vector<std::vector<double>> cov(kDescriptorDim, std::vector<double>(kDescriptorDim, 0.0));
    for (int i = 0; i < kDescriptorDim; ++i) cov[i][i] = m.var[i];
    const double expected = oracle::dense_gaussian_logpdf(mean, cov, x);
    REQUIRE(std::abs(log_likelihood(m, d) - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("log_likelihood stays finite far from the mean") {
  const BlockModel m = make_block_model(filled(0), filled(1e-4), 1e-4);
  const double ll = log_likelihood(m, filled(1e4));
  CHECK(std::isfinite(ll));
  CHECK(stage1_classify(m, filled(1e4)) == Stage1Verdict::undecided);
}

TEST_CASE("stage 1 verdicts") {
  std::mt19937_64 rng(4);
  const BlockModel m = random_model(rng);
  CHECK(stage1_classify(m, m.mu) == Stage1Verdict::background);
  CHECK(stage1_classify(m, offset_by_sigmas(m, 3.0)) == Stage1Verdict::undecided);

  // One coordinate 5 sigma out: Mahalanobis term -12.5 >= -24.
  Descriptor one = m.mu;
  one[5] += 5.0 * std::sqrt(m.var[5]);
  CHECK(stage1_classify(m, one) == Stage1Verdict::background);
  // Seven sigma on one coordinate gives -24.5.
  one[5] = m.mu[5] + 7.0 * std::sqrt(m.var[5]);
  CHECK(stage1_classify(m, one) == Stage1Verdict::undecided);
}

TEST_CASE("raising the threshold never turns undecided into background") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    BlockModel m = random_model(rng);
    const Descriptor d = offset_by_sigmas(m, std::uniform_real_distribution<double>(0, 3)(rng));
    const auto before = stage1_classify(m, d);
    m.log_threshold += 1.0;
    if (before == Stage1Verdict::undecided) REQUIRE(stage1_classify(m, d) == Stage1Verdict::undecided);
  }
}

TEST_CASE("variance floor is applied at construction") {
  const BlockModel m = make_block_model(filled(1), filled(0), 1e-4);
  for (double v : m.var) CHECK(v == 1e-4);
}

TEST_CASE("adapt: zero innovation shrinks variance only") {
  BlockModel m = make_block_model(filled(3), filled(2), 1e-4);
  adapt(m, m.mu, 0.01, 1e-4);
  for (int i = 0; i < kDescriptorDim; ++i) {
    CHECK(m.mu[i] == 3.0);
    CHECK(m.var[i] == doctest::Approx(0.99 * 2));
  }
}

TEST_CASE("adapt: scalar substitution with rho 0.5") {
  BlockModel m = make_block_model(filled(0), filled(4), 1e-4);
  adapt(m, filled(2), 0.5, 1e-4);
  for (int i = 0; i < kDescriptorDim; ++i) {
    CHECK(m.mu[i] == 1.0);
    CHECK(m.var[i] == doctest::Approx(0.5 * 4 + 0.5 * 1));
  }
}

TEST_CASE("adapt: rejects rho outside (0, 1)") {
  BlockModel m = make_block_model(filled(0), filled(1), 1e-4);
  CHECK_THROWS_AS(adapt(m, filled(1), 0.0, 1e-4), ParameterError);
  CHECK_THROWS_AS(adapt(m, filled(1), 1.0, 1e-4), ParameterError);
  CHECK_THROWS_AS(adapt(m, filled(1), -0.1, 1e-4), ParameterError);
}

TEST_CASE("adapt: invariants hold and the mean contracts toward d") {
  std::mt19937_64 rng(6);
  BlockModel m = random_model(rng);
  for (int step = 0; step < 500; ++step) {
    const Descriptor d = random_descriptor(rng, -200, 800);
    const Descriptor before = m.mu;
    adapt(m, d, 0.01, 1e-4);
    for (int i = 0; i < kDescriptorDim; ++i) {
      REQUIRE(m.var[i] >= 1e-4);
      REQUIRE(std::abs(m.mu[i] - d[i]) ==
              doctest::Approx(0.99 * std::abs(before[i] - d[i])).epsilon(1e-9));
    }
    REQUIRE(log_likelihood(m, offset_by_sigmas(m, 2.0)) ==
            doctest::Approx(m.log_threshold).epsilon(1e-12));
  }
}

TEST_CASE("adapt: constant input converges geometrically") {
  BlockModel m = make_block_model(filled(0), filled(1), 1e-4);
  for (int step = 1; step <= 300; ++step) {
    adapt(m, filled(10), 0.01, 1e-4);
    REQUIRE(10.0 - m.mu[0] == doctest::Approx(10.0 * std::pow(0.99, step)).epsilon(1e-9));
  }
}

TEST_CASE("adapt: tracks a stationary stream") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(50.0, 4.0);
  BlockModel m = make_block_model(filled(0), filled(1), 1e-4);
  for (int step = 0; step < 1000; ++step) {
    Descriptor d;
    for (auto& x : d) x = noise(rng);
    adapt(m, d, 0.01, 1e-4);
  }
  for (double mu : m.mu) CHECK(std::abs(mu - 50.0) < 0.2 * 4.0);
}

TEST_CASE("pooled moments of identical samples are exact") {
  Descriptor v;
  for (int i = 0; i < kDescriptorDim; ++i) v[i] = 0.1 * (i + 1) + 123.456;
  const std::vector<Descriptor> samples(37, v);
  const auto [mean, var] = pooled_moments(samples);
  CHECK(mean == v);
  CHECK(var == filled(0));
}

TEST_CASE("robust fit: identical descriptors give the vector and the floor") {
  Descriptor v;
  for (int i = 0; i < kDescriptorDim; ++i) v[i] = 17.25 * i - 3.0;
  const std::vector<Descriptor> samples(50, v);
  const RobustFit fit = robust_fit(samples, EmOptions{});
  CHECK(fit.mean == v);
  for (double x : fit.var) CHECK(x == 1e-4);
}

TEST_CASE("robust fit: 90/10 stream keeps the dominant component") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<Descriptor> samples;
  for (int k = 0; k < 500; ++k) {
    const double shift = (k % 10 == 0) ? 100.0 : 0.0;
    Descriptor d;
    for (auto& x : d) x = shift + unit(rng);
    samples.push_back(d);
  }
  std::shuffle(samples.begin(), samples.end(), rng);
  const RobustFit fit = robust_fit(samples, EmOptions{});
  CHECK(fit.dominant);
  for (double m : fit.mean) CHECK(std::abs(m) < 1.0);
  for (double v : fit.var) CHECK(v == doctest::Approx(1.0).epsilon(0.3));
}

TEST_CASE("robust fit: balanced bimodal stream falls back to one Gaussian") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<Descriptor> samples;
  for (int k = 0; k < 500; ++k) {
    const double shift = (k % 2 == 0) ? 100.0 : 0.0;
    Descriptor d;
    for (auto& x : d) x = shift + unit(rng);
    samples.push_back(d);
  }
  const RobustFit fit = robust_fit(samples, EmOptions{});
  CHECK_FALSE(fit.dominant);
  // Pooled std is about 50, so the standard error of the mean is about 50/sqrt(500).
  const double se = 50.0 / std::sqrt(500.0);
  for (double m : fit.mean) CHECK(std::abs(m - 50.0) < 3 * se);
  const auto [pm, pv] = pooled_moments(samples);
  CHECK(fit.mean == pm);
}

TEST_CASE("EM log-likelihood never decreases") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<Descriptor> samples;
  for (int k = 0; k < 300; ++k) {
    const double shift = (k % 3 == 0) ? 20.0 : 0.0;
    Descriptor d;
    for (auto& x : d) x = shift + 2 * unit(rng);
    samples.push_back(d);
  }
  double prev = -std::numeric_limits<double>::infinity();
  for (int iters = 1; iters <= 15; ++iters) {
    EmOptions opt;
    opt.max_iterations = iters;
    opt.tolerance = 0.0;
    const MixtureFit fit = fit_two_component(samples, opt);
    REQUIRE(fit.log_likelihood >= prev - 1e-7 * std::abs(prev));
    REQUIRE(fit.weights[0] + fit.weights[1] == doctest::Approx(1.0));
    prev = fit.log_likelihood;
  }
}

TEST_CASE("train: too few frames") {
  const std::vector<FrameRGB> one(1, FrameRGB(8, 8));
  CHECK_THROWS_AS(train(one, make_grid(8, 8, 8, 1), Config{}), TrainingError);
}

TEST_CASE("train: constant frames give floor variance and unset previous labels") {
  std::mt19937_64 rng(11);
  const FrameRGB f = oracle::random_frame(20, 14, rng);
  const std::vector<FrameRGB> frames(5, f);
  const BlockGrid grid = make_grid(20, 14, 8, 3);
  TrainStats stats;
  const BackgroundModel model = train(frames, grid, Config{}, &stats);
  REQUIRE(model.blocks.size() == grid.size());
  CHECK(stats.dominant + stats.single == grid.size());
  const auto desc = describe_frame(f, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(model.blocks[k].mu == desc[k]);
    for (double v : model.blocks[k].var) CHECK(v == 1e-4);
    CHECK(model.blocks[k].prev_label == PrevLabel::unset);
  }
}

TEST_CASE("train: result does not depend on the thread count") {
  std::mt19937_64 rng(12);
  std::vector<FrameRGB> frames;
  for (int i = 0; i < 12; ++i) frames.push_back(oracle::random_frame(24, 18, rng));
  const BlockGrid grid = make_grid(24, 18, 8, 1);
  const BackgroundModel a = train(frames, grid, Config{}, nullptr, 1);
  const BackgroundModel b = train(frames, grid, Config{}, nullptr, 4);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    REQUIRE(a.blocks[k].mu == b.blocks[k].mu);
    REQUIRE(a.blocks[k].var == b.blocks[k].var);
  }
}

TEST_CASE("model file round-trips losslessly") {
  std::mt19937_64 rng(13);
  std::vector<FrameRGB> frames;
  for (int i = 0; i < 6; ++i) frames.push_back(oracle::random_frame(19, 13, rng));
  Config cfg;
  cfg.rho = 0.0123456789012345;
  cfg.advance = 2;
  const BlockGrid grid = make_grid(19, 13, 8, 2);
  const BackgroundModel model = train(frames, grid, cfg);
  TempDir dir;
  save_model(model, dir / "m.bin");
  const BackgroundModel back = load_model(dir / "m.bin");
  CHECK(back.config == model.config);
  CHECK(back.grid == model.grid);
  REQUIRE(back.blocks.size() == model.blocks.size());
  for (std::size_t k = 0; k < model.blocks.size(); ++k) {
    REQUIRE(back.blocks[k].mu == model.blocks[k].mu);
    REQUIRE(back.blocks[k].var == model.blocks[k].var);
    REQUIRE(back.blocks[k].log_threshold == model.blocks[k].log_threshold);
  }
}

TEST_CASE("load_model rejects foreign and truncated files") {
  TempDir dir;
  {
    std::ofstream out(dir / "junk.bin", std::ios::binary);
    out << "definitely not a model";
  }
  CHECK_THROWS_AS(load_model(dir / "junk.bin"), ValidationError);
  CHECK_THROWS_AS(load_model(dir / "missing.bin"), IoError);

  std::mt19937_64 rng(14);
  const std::vector<FrameRGB> frames = {oracle::random_frame(8, 8, rng), oracle::random_frame(8, 8, rng)};
  save_model(train(frames, make_grid(8, 8, 8, 1), Config{}), dir / "ok.bin");
  std::filesystem::resize_file(dir / "ok.bin", std::filesystem::file_size(dir / "ok.bin") - 8);
  CHECK_THROWS_AS(load_model(dir / "ok.bin"), ValidationError);
}
