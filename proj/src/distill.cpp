#include "w2s/distill.hpp"

#include <cstdio>
#include <ostream>

namespace w2s {

void write_telemetry(std::ostream& out, const StepStats& st) {
  char line[256];
  std::snprintf(line, sizeof line,
                "{\"step\":%d,\"total\":%.6f,\"ccc\":%.6f,\"quadrant\":%.6f,"
                "\"batch_ccc\":[%.6f,%.6f,%.6f],\"applied\":%s}",
                st.step, st.total, st.ccc_component, st.quadrant_component, st.batch_ccc[0],
                st.batch_ccc[1], st.batch_ccc[2], st.applied ? "true" : "false");
  out << line << '\n';
}

std::vector<StepStats> train_distill(Wav2Small& model, const TeacherOracle& teacher,
                                     const CorpusBuckets& buckets, const TrainingConfig& cfg,
                                     const AugmentationConfig& aug,
                                     const TrainCallbacks& callbacks) {
  buckets.validate();
  if (cfg.batch_size < 2)
    throw std::invalid_argument("train_distill: batch size must be at least 2");
  if (cfg.total_steps < 0) throw std::invalid_argument("train_distill: negative step count");

  Velocity<float> velocity;
  std::vector<StepStats> history;
  history.reserve(static_cast<std::size_t>(cfg.total_steps));
  std::uint64_t counter = 0;
  for (int step = 1; step <= cfg.total_steps; ++step) {
    std::vector<Waveform> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));
    for (int b = 0; b < cfg.batch_size; ++b)
      batch.push_back(make_training_sample(buckets, aug, counter++));
    StepStats st = distill_step(model, teacher, batch, cfg, &velocity);
    st.step = step;
    if (callbacks.telemetry) write_telemetry(*callbacks.telemetry, st);
    if (callbacks.checkpoint && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0)
      callbacks.checkpoint(model, step);
    history.push_back(st);
  }
  return history;
}

}  // namespace w2s
