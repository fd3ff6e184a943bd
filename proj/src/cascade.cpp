#include "blockbgs/cascade.hpp"

#include <algorithm>
#include <cmath>

namespace blockbgs {

CascadeParams cascade_params(const Config& config) {
  return {config.c1, config.c2, config.rho, config.variance_floor};
}

double cosdist(const Descriptor& a, const Descriptor& b) {
  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (int k = 0; k < kDescriptorDim; ++k) {
    dot += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  const double na = std::sqrt(aa);
  const double nb = std::sqrt(bb);
  if (na < 1e-12 || nb < 1e-12) return 1.0;
  const double cosine = dot / (na * nb);
  return 1.0 - std::clamp(cosine, -1.0, 1.0);
}

void CascadeCounters::record(const BlockLabel& label, const CascadeTrace& trace) {
  ++blocks;
  for (int s = 0; s < 3; ++s) evaluated[s] += trace.evaluated[s];
  ++decided[static_cast<int>(label.decided_by)];
  adapted += trace.adapted;
  background += label.value == Label::background;
}

CascadeCounters& CascadeCounters::operator+=(const CascadeCounters& other) {
  blocks += other.blocks;
  for (int s = 0; s < 3; ++s) evaluated[s] += other.evaluated[s];
  for (int s = 0; s < 4; ++s) decided[s] += other.decided[s];
  adapted += other.adapted;
  background += other.background;
  return *this;
}

BlockLabel classify_block(BlockModel& model, const Descriptor& d, const CascadeParams& params,
                          CascadeTrace* trace) {
  CascadeTrace local;
  CascadeTrace& t = trace ? *trace : local;
  t = CascadeTrace{};

  BlockLabel label;
  t.evaluated[0] = true;
  if (stage1_classify(model, d) == Stage1Verdict::background) {
    label = {Label::background, Stage::stage1};
  } else {
    t.evaluated[1] = true;
    if (cosdist(d, model.mu) <= params.c1) {
      label = {Label::background, Stage::stage2};
    } else {
      t.evaluated[2] = true;
      if (model.prev_label == PrevLabel::background &&
          cosdist(model.prev_descriptor, d) <= params.c2) {
        label = {Label::background, Stage::stage3};
      }
    }
  }

  if (label.value == Label::background) {
    adapt(model, d, params.rho, params.variance_floor);
    t.adapted = true;
  }
  model.prev_descriptor = d;
  model.prev_label = label.value == Label::background ? PrevLabel::background
                                                      : PrevLabel::foreground;
  return label;
}

}  // namespace blockbgs
