#pragma once

#include "w2s/augment.hpp"
#include "w2s/corpus.hpp"
#include "w2s/metrics.hpp"
#include "w2s/model.hpp"
#include "w2s/teacher.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace w2s {

enum class QuadrantMode { kPerDimension, kOctant };

struct TrainingConfig {
  int batch_size = 16;
  float learning_rate = 5e-5f;
  float weight_decay = 0.0f;
  float momentum = 0.0f;
  int total_steps = 20000;
  float lambda_quadrant = 1.0f;
  float neutral = 0.5f;
  QuadrantMode quadrant_mode = QuadrantMode::kPerDimension;
  bool bn_frozen_stats = false;
  int checkpoint_every = 5000;
  std::uint64_t seed = 0;
};

template <typename T>
struct LossGrad {
  double value = 0.0;
  std::vector<AdvTripleT<T>> grad;  // d(value)/d(pred), one triple per item
};

namespace detail {

template <typename T>
inline std::array<double, 3> triple_column(const std::vector<AdvTripleT<T>>& batch,
                                           std::size_t i) {
  return {static_cast<double>(batch[i].arousal), static_cast<double>(batch[i].dominance),
          static_cast<double>(batch[i].valence)};
}

}  // namespace detail

// Sum over A/D/V of 1 - CCC across the batch axis, with each variance term
// guarded by +1e-8 so constant batches stay differentiable.
template <typename T>
LossGrad<T> ccc_loss_grad(const std::vector<AdvTripleT<T>>& pred,
                          const std::vector<AdvTripleT<T>>& target) {
  const std::size_t n = pred.size();
  if (n < 2 || target.size() != n)
    throw std::invalid_argument("ccc_loss: need matching batches of at least 2");
  LossGrad<T> out;
  out.grad.assign(n, AdvTripleT<T>{});
  constexpr double kGuard = 1e-8;
  for (int d = 0; d < 3; ++d) {
    double sp = 0, st = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sp += detail::triple_column(pred, i)[static_cast<std::size_t>(d)];
      st += detail::triple_column(target, i)[static_cast<std::size_t>(d)];
    }
    const double mp = sp / static_cast<double>(n);
    const double mt = st / static_cast<double>(n);
    double vp = 0, vt = 0, cov = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = detail::triple_column(pred, i)[static_cast<std::size_t>(d)] - mp;
      const double t = detail::triple_column(target, i)[static_cast<std::size_t>(d)] - mt;
      vp += p * p;
      vt += t * t;
      cov += p * t;
    }
    vp = vp / static_cast<double>(n) + kGuard;
    vt = vt / static_cast<double>(n) + kGuard;
    cov /= static_cast<double>(n);
    const double dm = mp - mt;
    const double num = 2.0 * cov;
    const double den = vp + vt + dm * dm;
    out.value += 1.0 - num / den;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = detail::triple_column(pred, i)[static_cast<std::size_t>(d)] - mp;
      const double t = detail::triple_column(target, i)[static_cast<std::size_t>(d)] - mt;
      const double g =
          (num * (2.0 * p + 2.0 * dm) - 2.0 * t * den) / (static_cast<double>(n) * den * den);
      T* slot = d == 0 ? &out.grad[i].arousal : d == 1 ? &out.grad[i].dominance : &out.grad[i].valence;
      *slot = static_cast<T>(g);
    }
  }
  return out;
}

template <typename T>
double ccc_loss(const std::vector<AdvTripleT<T>>& pred,
                const std::vector<AdvTripleT<T>>& target) {
  return ccc_loss_grad(pred, target).value;
}

// Masked L1 toward the target, active only where student and teacher fall on
// opposite sides of the neutral point; batch-averaged. Octant mode applies
// the full L1 when any dimension's sign differs.
template <typename T>
LossGrad<T> quadrant_loss_grad(const std::vector<AdvTripleT<T>>& pred,
                               const std::vector<AdvTripleT<T>>& target, T neutral,
                               QuadrantMode mode) {
  const std::size_t n = pred.size();
  if (n == 0 || target.size() != n)
    throw std::invalid_argument("quadrant_loss: need matching non-empty batches");
  LossGrad<T> out;
  out.grad.assign(n, AdvTripleT<T>{});
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = detail::triple_column(pred, i);
    const auto t = detail::triple_column(target, i);
    bool differs[3];
    bool any = false;
    for (int d = 0; d < 3; ++d) {
      const int sp = half_space(p[static_cast<std::size_t>(d)], static_cast<double>(neutral));
      const int st = half_space(t[static_cast<std::size_t>(d)], static_cast<double>(neutral));
      differs[d] = sp != 0 && st != 0 && sp != st;
      any = any || differs[d];
    }
    for (int d = 0; d < 3; ++d) {
      const bool active = mode == QuadrantMode::kPerDimension ? differs[d] : any;
      if (!active) continue;
      const double diff = p[static_cast<std::size_t>(d)] - t[static_cast<std::size_t>(d)];
      out.value += std::abs(diff);
      const double g = (diff > 0 ? 1.0 : diff < 0 ? -1.0 : 0.0) / static_cast<double>(n);
      T* slot = d == 0 ? &out.grad[i].arousal : d == 1 ? &out.grad[i].dominance : &out.grad[i].valence;
      *slot = static_cast<T>(g);
    }
  }
  out.value /= static_cast<double>(n);
  return out;
}

template <typename T>
double quadrant_loss(const std::vector<AdvTripleT<T>>& pred,
                     const std::vector<AdvTripleT<T>>& target, T neutral, QuadrantMode mode) {
  return quadrant_loss_grad(pred, target, neutral, mode).value;
}

struct StepStats {
  int step = 0;
  double total = 0.0;
  double ccc_component = 0.0;
  double quadrant_component = 0.0;
  std::array<double, 3> batch_ccc{0.0, 0.0, 0.0};
  bool applied = false;
  std::string diagnostic;
};

// Velocity buffers for momentum SGD; unused while momentum stays 0.
template <typename T>
using Velocity = std::vector<std::vector<T>>;

// One batch: teacher labels on the exact augmented audio, per-item forward
// tapes, batch losses seeded back through every tape, one SGD update.
// A non-finite loss aborts before any parameter is touched.
template <typename T>
StepStats distill_step(Wav2SmallT<T>& model, const TeacherOracle& teacher,
                       const std::vector<Waveform>& batch, const TrainingConfig& cfg,
                       Velocity<T>* velocity = nullptr) {
  StepStats st;
  const std::size_t n = batch.size();
  if (n < 2) throw std::invalid_argument("distill_step: batch must hold at least 2 items");

  std::vector<AdvTripleT<T>> target(n), pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    const AdvTriple y = teacher.label(batch[i]);
    target[i] = {static_cast<T>(y.arousal), static_cast<T>(y.dominance),
                 static_cast<T>(y.valence)};
  }

  model.set_frozen_stats(cfg.bn_frozen_stats);
  model.zero_grad();
  // Running statistics move during the forward passes; keep a copy so an
  // aborted step can leave the model exactly as it found it.
  std::vector<std::vector<T>> buffer_backup;
  for (auto& p : model.params())
    if (!p.trainable) buffer_backup.push_back(*p.value);
  std::deque<Tape<T>> tapes;
  std::vector<Var<T>> outs;
  outs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    tapes.emplace_back();
    const Tensor4<T> logmel = model.frontend.compute(batch[i]);
    outs.push_back(model.forward_train(tapes.back(), logmel));
    const Tensor4<T>& o = outs.back().value;
    pred[i] = {o.data[0], o.data[1], o.data[2]};
  }

  const LossGrad<T> ccc = ccc_loss_grad(pred, target);
  LossGrad<T> quad;
  quad.grad.assign(n, AdvTripleT<T>{});
  if (cfg.lambda_quadrant != 0.0f)
    quad = quadrant_loss_grad(pred, target, static_cast<T>(cfg.neutral), cfg.quadrant_mode);

  st.ccc_component = ccc.value;
  st.quadrant_component = quad.value;
  st.total = cfg.lambda_quadrant != 0.0f
                 ? ccc.value + static_cast<double>(cfg.lambda_quadrant) * quad.value
                 : ccc.value;
  for (int d = 0; d < 3; ++d) {
    std::vector<double> pv(n), tv(n);
    for (std::size_t i = 0; i < n; ++i) {
      pv[i] = detail::triple_column(pred, i)[static_cast<std::size_t>(d)];
      tv[i] = detail::triple_column(target, i)[static_cast<std::size_t>(d)];
    }
    st.batch_ccc[static_cast<std::size_t>(d)] = w2s::ccc(pv, tv);
  }

  if (!std::isfinite(st.total)) {
    std::size_t slot = 0;
    for (auto& p : model.params())
      if (!p.trainable) *p.value = buffer_backup[slot++];
    st.diagnostic = "non-finite loss; step aborted with parameters unchanged";
    return st;
  }

  const T lambda = static_cast<T>(cfg.lambda_quadrant);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor4<T> seed(1, 1, 1, 3);
    seed.data[0] = ccc.grad[i].arousal;
    seed.data[1] = ccc.grad[i].dominance;
    seed.data[2] = ccc.grad[i].valence;
    if (cfg.lambda_quadrant != 0.0f) {
      seed.data[0] += lambda * quad.grad[i].arousal;
      seed.data[1] += lambda * quad.grad[i].dominance;
      seed.data[2] += lambda * quad.grad[i].valence;
    }
    tapes[i].backward(outs[i], seed);
  }

  auto params = model.params();
  if (velocity && velocity->empty()) {
    for (const auto& p : params)
      velocity->emplace_back(p.trainable ? p.value->size() : 0, T(0));
  }
  const T lr = static_cast<T>(cfg.learning_rate);
  const T wd = static_cast<T>(cfg.weight_decay);
  const T mom = static_cast<T>(cfg.momentum);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    if (!p.trainable) continue;
    for (std::size_t j = 0; j < p.value->size(); ++j) {
      T g = (*p.grad)[j];
      if (wd != T(0)) g += wd * (*p.value)[j];
      if (mom != T(0) && velocity) {
        T& v = (*velocity)[pi][j];
        v = mom * v + g;
        g = v;
      }
      (*p.value)[j] -= lr * g;
    }
  }
  model.zero_grad();
  st.applied = true;
  return st;
}

struct TrainCallbacks {
  std::ostream* telemetry = nullptr;
  std::function<void(const Wav2Small&, int)> checkpoint;
};

void write_telemetry(std::ostream& out, const StepStats& st);

// Runs total_steps batches drawn from the deterministic per-sample stream and
// returns the per-step statistics.
std::vector<StepStats> train_distill(Wav2Small& model, const TeacherOracle& teacher,
                                     const CorpusBuckets& buckets, const TrainingConfig& cfg,
                                     const AugmentationConfig& aug,
                                     const TrainCallbacks& callbacks = {});

}  // namespace w2s
