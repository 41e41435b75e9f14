#include "w2s/teacher.hpp"

#include <cmath>
#include <stdexcept>

namespace w2s {

std::uint64_t waveform_hash(const Waveform& w) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* ptr, std::size_t n) {
    const unsigned char* bytes = static_cast<const unsigned char*>(ptr);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  const std::uint64_t count = w.samples.size();
  mix(&count, sizeof count);
  if (count > 0) mix(w.samples.data(), w.samples.size() * sizeof(float));
  return h;
}

void LookupTeacher::add(const Waveform& w, const AdvTriple& value) {
  labels_[waveform_hash(w)] = value;
}

AdvTriple LookupTeacher::label(const Waveform& w) const {
  const auto it = labels_.find(waveform_hash(w));
  if (it == labels_.end())
    throw std::invalid_argument("lookup teacher: waveform has no stored label");
  return it->second;
}

EnsembleTeacher::EnsembleTeacher(std::vector<std::shared_ptr<TeacherOracle>> members)
    : members_(std::move(members)) {
  if (members_.empty()) throw std::invalid_argument("ensemble teacher: no members");
  for (const auto& m : members_)
    if (!m) throw std::invalid_argument("ensemble teacher: null member");
}

AdvTriple EnsembleTeacher::label(const Waveform& w) const {
  double a = 0.0, d = 0.0, v = 0.0;
  for (const auto& m : members_) {
    const AdvTriple y = m->label(w);
    a += y.arousal;
    d += y.dominance;
    v += y.valence;
  }
  const double k = static_cast<double>(members_.size());
  return {static_cast<float>(a / k), static_cast<float>(d / k), static_cast<float>(v / k)};
}

ModelTeacher make_synthetic_teacher(std::uint64_t seed,
                                    const std::vector<Waveform>& calibration) {
  if (calibration.size() < 2)
    throw std::invalid_argument("synthetic teacher: need at least 2 calibration waveforms");
  Wav2Small net;
  net.init_params(seed);

  double sum[3] = {0, 0, 0}, sumsq[3] = {0, 0, 0};
  for (const Waveform& w : calibration) {
    const AdvTriple y = net.forward(w);
    const double vals[3] = {y.arousal, y.dominance, y.valence};
    for (int d = 0; d < 3; ++d) {
      sum[d] += vals[d];
      sumsq[d] += vals[d] * vals[d];
    }
  }
  const double n = static_cast<double>(calibration.size());
  // y' = 0.5 + (y - mean) * 0.1 / sigma maps mean +/- 3 sigma onto [0.2, 0.8];
  // folding it into adv keeps the teacher an ordinary network.
  for (int d = 0; d < 3; ++d) {
    const double mean = sum[d] / n;
    const double var = std::max(sumsq[d] / n - mean * mean, 1e-12);
    const double scale = 0.1 / std::sqrt(var);
    for (int j = 0; j < kTokenDim; ++j)
      net.adv.weight.data[static_cast<std::size_t>(d * kTokenDim + j)] *=
          static_cast<float>(scale);
    net.adv.bias[static_cast<std::size_t>(d)] = static_cast<float>(
        (net.adv.bias[static_cast<std::size_t>(d)] - mean) * scale + 0.5);
  }
  return ModelTeacher(std::move(net));
}

}  // namespace w2s
