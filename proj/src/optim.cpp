#include "mdug/optim.hpp"

#include <algorithm>
#include <cmath>

namespace mdug {

double LinearSchedule::at(long step) const {
  const long warm = std::max<long>(1, static_cast<long>(std::lround(warmup_fraction * static_cast<double>(total_steps))));
  if (step < warm) return peak_lr * static_cast<double>(step + 1) / static_cast<double>(warm);
  const long rest = std::max<long>(1, total_steps - warm);
  const double frac = static_cast<double>(total_steps - step) / static_cast<double>(rest);
  return peak_lr * std::clamp(frac, 0.0, 1.0);
}

AdamW::AdamW(ParamSet& params, Options options) : params_(params), opt_(options) {
  for (const auto& p : params_.all()) {
    m_.emplace_back(p.value.rows(), p.value.cols());
    v_.emplace_back(p.value.rows(), p.value.cols());
  }
}

void AdamW::step(double lr, double grad_scale) {
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  std::size_t k = 0;
  for (auto& p : params_.all()) {
    double* w = p.value.data();
    double* g = p.grad.data();
    double* m = m_[k].data();
    double* v = v_[k].data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double gi = g[i] * grad_scale;
      m[i] = opt_.beta1 * m[i] + (1.0 - opt_.beta1) * gi;
      v[i] = opt_.beta2 * v[i] + (1.0 - opt_.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * (mhat / (std::sqrt(vhat) + opt_.eps) + opt_.weight_decay * w[i]);
      g[i] = 0.0;
    }
    ++k;
  }
}

double clip_grad_norm(ParamSet& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params.all())
    for (double g : p.grad.flat()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& p : params.all())
      for (double& g : p.grad.flat()) g *= s;
  }
  return norm;
}

}  // namespace mdug
