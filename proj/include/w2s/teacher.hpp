#pragma once

#include "w2s/model.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <vector>

namespace w2s {

// Deterministic annotator: the same waveform always gets the same A/D/V.
class TeacherOracle {
 public:
  virtual ~TeacherOracle() = default;
  virtual AdvTriple label(const Waveform& w) const = 0;
};

// Content hash over sample count and raw sample bytes.
std::uint64_t waveform_hash(const Waveform& w);

// File-backed labels keyed by waveform content.
class LookupTeacher : public TeacherOracle {
 public:
  void add(const Waveform& w, const AdvTriple& value);
  AdvTriple label(const Waveform& w) const override;
  std::size_t size() const { return labels_.size(); }

 private:
  std::map<std::uint64_t, AdvTriple> labels_;
};

// A frozen network evaluated in inference mode.
class ModelTeacher : public TeacherOracle {
 public:
  explicit ModelTeacher(Wav2Small net) : net_(std::move(net)) {}
  AdvTriple label(const Waveform& w) const override { return net_.forward(w); }
  const Wav2Small& net() const { return net_; }

 private:
  Wav2Small net_;
};

// Wraps any prediction function, e.g. a deserialized fused model.
class PredictorTeacher : public TeacherOracle {
 public:
  explicit PredictorTeacher(std::function<AdvTriple(const Waveform&)> fn) : fn_(std::move(fn)) {}
  AdvTriple label(const Waveform& w) const override { return fn_(w); }

 private:
  std::function<AdvTriple(const Waveform&)> fn_;
};

// Arithmetic mean of the members' labels.
class EnsembleTeacher : public TeacherOracle {
 public:
  explicit EnsembleTeacher(std::vector<std::shared_ptr<TeacherOracle>> members);
  AdvTriple label(const Waveform& w) const override;

 private:
  std::vector<std::shared_ptr<TeacherOracle>> members_;
};

// Randomly initialized frozen network whose output distribution over the
// calibration set is affinely squashed into [0.2, 0.8] (mean +/- 3 sigma),
// with the squash folded into the final linear layer.
ModelTeacher make_synthetic_teacher(std::uint64_t seed,
                                    const std::vector<Waveform>& calibration);

}  // namespace w2s
