#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "w2s/model.hpp"

namespace w2s {

// Concordance correlation: 2*cov / (var_x + var_y + (mean_x - mean_y)^2),
// population moments. Computed from accumulated sums so the result is
// independent of accumulation order.
template <typename T>
double ccc(const std::vector<T>& x, const std::vector<T>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("ccc: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("ccc: need at least 2 items");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = static_cast<double>(x[i]);
    const double b = static_cast<double>(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    syy += b * b;
    sxy += a * b;
  }
  const double mx = sx / n, my = sy / n;
  const double var_x = sxx / n - mx * mx;
  const double var_y = syy / n - my * my;
  const double cov = sxy / n - mx * my;
  const double gap = mx - my;
  const double denom = var_x + var_y + gap * gap;
  if (denom == 0.0) return 1.0;  // both constant and equal
  return 2.0 * cov / denom;
}

// Per-dimension sign of (value - neutral), each in {-1, 0, +1}.
struct SignTriple {
  int arousal = 0;
  int dominance = 0;
  int valence = 0;
};

inline int half_space(double v, double neutral) {
  if (v > neutral) return 1;
  if (v < neutral) return -1;
  return 0;
}

template <typename T>
SignTriple quadrant(const AdvTripleT<T>& a, double neutral) {
  return {half_space(a.arousal, neutral), half_space(a.dominance, neutral),
          half_space(a.valence, neutral)};
}

// A zero sign is a wildcard: exact-neutral agrees with either side.
inline bool signs_agree(int a, int b) { return a == 0 || b == 0 || a == b; }

inline bool quadrant_agrees(const SignTriple& a, const SignTriple& b) {
  return signs_agree(a.arousal, b.arousal) && signs_agree(a.dominance, b.dominance) &&
         signs_agree(a.valence, b.valence);
}

// ---- manifest-driven evaluation ----

using Predictor = std::function<AdvTriple(const Waveform&)>;
using SampleLoader = std::function<Waveform(const std::string&)>;

struct EvalRow {
  std::string source;
  AdvTriple reference;
};

struct EvalReport {
  double ccc_arousal = 0;
  double ccc_dominance = 0;
  double ccc_valence = 0;
  double quadrant_agreement = 0;
  int n = 0;
  int skipped = 0;
  double mae = 0;  // debug field: mean absolute error over all dimensions
  std::vector<std::string> row_errors;
};

// Runs the predictor over every resolvable row and reports per-dimension CCC
// plus the full-sign-triple agreement rate. Unresolvable or failing rows are
// skipped and their errors collected.
inline EvalReport evaluate_rows(const Predictor& model, const SampleLoader& loader,
                                const std::vector<EvalRow>& rows, double neutral = 0.5) {
  EvalReport report;
  std::vector<float> pa, pd, pv, ra, rd, rv;
  int agreements = 0;
  double abs_err = 0;
  for (const EvalRow& row : rows) {
    AdvTriple pred;
    try {
      pred = model(loader(row.source));
    } catch (const std::exception& e) {
      ++report.skipped;
      report.row_errors.push_back(row.source + ": " + e.what());
      continue;
    }
    pa.push_back(pred.arousal);
    pd.push_back(pred.dominance);
    pv.push_back(pred.valence);
    ra.push_back(row.reference.arousal);
    rd.push_back(row.reference.dominance);
    rv.push_back(row.reference.valence);
    if (quadrant_agrees(quadrant(pred, neutral), quadrant(row.reference, neutral))) ++agreements;
    abs_err += std::abs(pred.arousal - row.reference.arousal) +
               std::abs(pred.dominance - row.reference.dominance) +
               std::abs(pred.valence - row.reference.valence);
  }
  report.n = static_cast<int>(pa.size());
  if (report.n < 2)
    throw std::runtime_error("evaluate: fewer than 2 usable rows (" +
                             std::to_string(report.skipped) + " skipped)");
  report.ccc_arousal = ccc(pa, ra);
  report.ccc_dominance = ccc(pd, rd);
  report.ccc_valence = ccc(pv, rv);
  report.quadrant_agreement = static_cast<double>(agreements) / report.n;
  report.mae = abs_err / (3.0 * report.n);
  return report;
}

}  // namespace w2s
