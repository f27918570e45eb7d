#pragma once

#include <cstdint>
#include <vector>

#include "mdug/params.hpp"

namespace mdug {

/// Training-loop settings shared by both training stages. The defaults are the
/// fine-tuning recipe (10 epochs, batch 10, peak 1e-5, linear warm-up/decay).
struct TrainOptions {
  int epochs = 10;
  int batch_size = 10;
  double peak_lr = 1e-5;
  double warmup_fraction = 0.1;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  std::uint64_t seed = 1;
};

/// Peak learning rate with linear warm-up followed by linear decay to zero.
struct LinearSchedule {
  double peak_lr = 1e-5;
  long total_steps = 1;
  double warmup_fraction = 0.1;

  double at(long step) const;
};

/// Decoupled weight-decay Adam.
class AdamW {
 public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
  };

  AdamW(ParamSet& params, Options options);

  /// Applies one update from the accumulated gradients scaled by grad_scale, then clears them.
  void step(double lr, double grad_scale = 1.0);
  long steps_taken() const { return t_; }

 private:
  ParamSet& params_;
  Options opt_;
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

/// Rescales accumulated gradients so their global L2 norm is at most max_norm; returns the pre-clip norm.
double clip_grad_norm(ParamSet& params, double max_norm);

}  // namespace mdug
