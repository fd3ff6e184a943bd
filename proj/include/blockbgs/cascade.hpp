#pragma once

#include <array>
#include <cstdint>

#include "blockbgs/descriptor.hpp"
#include "blockbgs/model.hpp"

namespace blockbgs {

/// Which test produced the final label. `exhausted` means no stage called
/// the block background, so it is foreground.
enum class Stage : std::uint8_t { stage1, stage2, stage3, exhausted };

struct BlockLabel {
  Label value = Label::foreground;
  Stage decided_by = Stage::exhausted;
  friend bool operator==(const BlockLabel&, const BlockLabel&) = default;
};

struct CascadeParams {
  double c1 = 0.001;
  double c2 = 0.0005;
  double rho = 0.01;
  double variance_floor = 1e-4;
};

CascadeParams cascade_params(const Config& config);

/// 1 - cos(angle(a, b)), in [0, 2]. Returns 1 when either vector has norm
/// below 1e-12.
double cosdist(const Descriptor& a, const Descriptor& b);

/// Instrumentation for one classify_block call.
struct CascadeTrace {
  std::array<bool, 3> evaluated{};  // stage k+1 was consulted
  bool adapted = false;
};

/// Aggregate instrumentation over many calls.
struct CascadeCounters {
  std::uint64_t blocks = 0;
  std::array<std::uint64_t, 3> evaluated{};  // per stage
  std::array<std::uint64_t, 4> decided{};    // indexed by Stage
  std::uint64_t adapted = 0;
  std::uint64_t background = 0;

  void record(const BlockLabel& label, const CascadeTrace& trace);
  CascadeCounters& operator+=(const CascadeCounters& other);
};

/// Runs the three stages in order and stops at the first background verdict:
///   1. Gaussian log-likelihood at or above the model threshold;
///   2. cosdist(d, mu) <= c1 (pure illumination scaling);
///   3. previous label background and cosdist(prev, d) <= c2.
/// Background blocks then adapt the model. prev_descriptor/prev_label are
/// always replaced by this frame's descriptor and label.
BlockLabel classify_block(BlockModel& model, const Descriptor& d, const CascadeParams& params,
                          CascadeTrace* trace = nullptr);

}  // namespace blockbgs
