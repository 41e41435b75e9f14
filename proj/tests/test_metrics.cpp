#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "doctest.h"
#include "w2s/metrics.hpp"

using namespace w2s;

namespace {

std::vector<double> random_series(int n, unsigned seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = dist(rng);
  return v;
}

// Shifts and scales to exact zero mean and unit population variance.
std::vector<double> standardized(int n, unsigned seed) {
  auto v = random_series(n, seed);
  double mean = 0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0;
  for (double& x : v) {
    x -= mean;
    var += x * x;
  }
  var /= n;
  const double inv = 1.0 / std::sqrt(var);
  for (double& x : v) x *= inv;
  return v;
}

double ccc_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0, vy = 0, cv = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
    cv += (x[i] - mx) * (y[i] - my);
  }
  vx /= n;
  vy /= n;
  cv /= n;
  return 2.0 * cv / (vx + vy + (mx - my) * (mx - my));
}

}  // namespace

TEST_CASE("ccc of a series with itself is 1") {
  auto x = random_series(50, 1);
  CHECK(ccc(x, x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unit-variance series against its shift by 1 gives 2/3") {
  auto x = standardized(200, 2);
  auto y = x;
  for (double& v : y) v += 1.0;
  CHECK(ccc(x, y) == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("perfect discordance gives -1") {
  auto x = standardized(100, 3);
  auto y = x;
  for (double& v : y) v = -v;
  CHECK(ccc(x, y) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("ccc is exactly symmetric") {
  for (unsigned seed = 10; seed < 15; ++seed) {
    auto x = random_series(37, seed);
    auto y = random_series(37, seed + 100);
    CHECK(ccc(x, y) == ccc(y, x));
  }
}

TEST_CASE("shift law: ccc(x, x + c) = 2v / (2v + c^2)") {
  auto x = random_series(500, 21, -2.0, 2.0);
  double mean = 0;
  for (double v : x) mean += v;
  mean /= x.size();
  double var = 0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= x.size();
  for (double c : {-1.5, -0.3, 0.0, 0.7, 2.0}) {
    auto y = x;
    for (double& v : y) v += c;
    const double want = 2.0 * var / (2.0 * var + c * c);
    CHECK(ccc(x, y) == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("scaling breaks perfect concordance") {
  auto x = standardized(100, 31);
  for (double a : {0.5, 2.0, -1.0, 3.7}) {
    auto y = x;
    for (double& v : y) v *= a;
    CHECK(ccc(x, y) < 1.0);
  }
}

TEST_CASE("ccc stays within [-1, 1] on random pairs") {
  for (unsigned seed = 0; seed < 1000; ++seed) {
    auto x = random_series(11, 2 * seed, -3.0, 3.0);
    auto y = random_series(11, 2 * seed + 1, -3.0, 3.0);
    const double v = ccc(x, y);
    CHECK(v >= -1.0 - 1e-12);
    CHECK(v <= 1.0 + 1e-12);
  }
}

TEST_CASE("degenerate series conventions") {
  std::vector<double> c1(10, 0.4), c2(10, 0.4), c3(10, 0.9);
  CHECK(ccc(c1, c2) == 1.0);
  CHECK(ccc(c1, c3) == doctest::Approx(0.0));
  auto varied = random_series(10, 41);
  CHECK(ccc(c1, varied) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ccc input validation") {
  std::vector<double> one{1.0}, two{1.0, 2.0}, three{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(ccc(one, one), std::invalid_argument);
  CHECK_THROWS_AS(ccc(two, three), std::invalid_argument);
}

TEST_CASE("quadrant signs") {
  AdvTriple a{0.7f, 0.6f, 0.4f};
  SignTriple s = quadrant(a, 0.5);
  CHECK(s.arousal == 1);
  CHECK(s.dominance == 1);
  CHECK(s.valence == -1);

  AdvTriple b{0.5f, 0.5f, 0.5f};
  SignTriple sb = quadrant(b, 0.5);
  CHECK(sb.arousal == 0);
  CHECK(sb.dominance == 0);
  CHECK(sb.valence == 0);

  AdvTriple c{-0.2f, 0.1f, 0.0f};
  SignTriple sc = quadrant(c, 0.0);
  CHECK(sc.arousal == -1);
  CHECK(sc.dominance == 1);
  CHECK(sc.valence == 0);
}

TEST_CASE("zero sign is a wildcard in agreement") {
  SignTriple mixed{0, 1, -1};
  CHECK(quadrant_agrees(mixed, {1, 1, -1}));
  CHECK(quadrant_agrees(mixed, {-1, 1, -1}));
  CHECK(quadrant_agrees(mixed, {0, 0, 0}));
  CHECK_FALSE(quadrant_agrees(mixed, {1, -1, -1}));
  CHECK_FALSE(quadrant_agrees({1, 1, 1}, {1, 1, -1}));
}

TEST_CASE("quadrant is invariant under monotone transforms fixing the neutral") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<float> dist(0.f, 1.f);
  const double neutral = 0.5;
  for (int i = 0; i < 200; ++i) {
    AdvTriple a{dist(rng), dist(rng), dist(rng)};
    auto warp = [&](float v) {
      const double d = v - neutral;
      return static_cast<float>(neutral + d * (1.0 + d * d));
    };
    AdvTriple b{warp(a.arousal), warp(a.dominance), warp(a.valence)};
    SignTriple sa = quadrant(a, neutral), sb = quadrant(b, neutral);
    CHECK(sa.arousal == sb.arousal);
    CHECK(sa.dominance == sb.dominance);
    CHECK(sa.valence == sb.valence);
  }
}

namespace {

// A loader over synthetic single-sample "files" keyed by name.
struct FakeCorpus {
  std::map<std::string, float> values;
  Waveform load(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw std::runtime_error("unreadable sample");
    Waveform w;
    w.samples.assign(64, it->second);
    return w;
  }
};

}  // namespace

TEST_CASE("evaluation self-consistency and skip handling") {
  FakeCorpus corpus;
  std::vector<EvalRow> rows;
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<float> dist(0.1f, 0.9f);
  for (int i = 0; i < 30; ++i) {
    const std::string name = "s" + std::to_string(i);
    const float v = dist(rng);
    corpus.values[name] = v;
    rows.push_back({name, AdvTriple{v, 1.f - v, v * 0.5f}});
  }

  // The "model" reconstructs the reference from the constant sample value.
  Predictor model = [](const Waveform& w) {
    const float v = w.samples[0];
    return AdvTriple{v, 1.f - v, v * 0.5f};
  };
  SampleLoader loader = [&](const std::string& n) { return corpus.load(n); };

  EvalReport r = evaluate_rows(model, loader, rows);
  CHECK(r.n == 30);
  CHECK(r.skipped == 0);
  CHECK(r.ccc_arousal == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.ccc_dominance == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.ccc_valence == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.quadrant_agreement == 1.0);
  CHECK(r.mae < 1e-7);

  rows.push_back({"missing1", AdvTriple{0.5f, 0.5f, 0.5f}});
  rows.push_back({"missing2", AdvTriple{0.5f, 0.5f, 0.5f}});
  EvalReport r2 = evaluate_rows(model, loader, rows);
  CHECK(r2.n == 30);
  CHECK(r2.skipped == 2);
  REQUIRE(r2.row_errors.size() == 2u);
  CHECK(r2.row_errors[0].find("missing1") != std::string::npos);
}

TEST_CASE("constant model scores zero ccc against varied references") {
  FakeCorpus corpus;
  std::vector<EvalRow> rows;
  for (int i = 0; i < 10; ++i) {
    const std::string name = "s" + std::to_string(i);
    corpus.values[name] = 0.f;
    const float v = 0.1f * static_cast<float>(i);
    rows.push_back({name, AdvTriple{v, v, v}});
  }
  Predictor model = [](const Waveform&) { return AdvTriple{0.6f, 0.6f, 0.6f}; };
  SampleLoader loader = [&](const std::string& n) { return corpus.load(n); };
  EvalReport r = evaluate_rows(model, loader, rows);
  CHECK(r.ccc_arousal == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r.ccc_dominance == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r.ccc_valence == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("linear corruption matches the direct-formula oracle") {
  FakeCorpus corpus;
  std::vector<EvalRow> rows;
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<float> dist(0.f, 1.f);
  std::vector<double> ref, pred;
  for (int i = 0; i < 200; ++i) {
    const std::string name = "r" + std::to_string(i);
    const float v = dist(rng);
    corpus.values[name] = v;
    rows.push_back({name, AdvTriple{v, v, v}});
    ref.push_back(v);
    pred.push_back(0.9f * v + 0.05f);  // same float rounding as the model below
  }
  Predictor model = [](const Waveform& w) {
    const float p = 0.9f * w.samples[0] + 0.05f;
    return AdvTriple{p, p, p};
  };
  SampleLoader loader = [&](const std::string& n) { return corpus.load(n); };
  EvalReport r = evaluate_rows(model, loader, rows);
  CHECK(r.ccc_arousal == doctest::Approx(ccc_oracle(pred, ref)).epsilon(1e-10));
}

TEST_CASE("evaluation with fewer than two usable rows is a hard error") {
  FakeCorpus corpus;
  corpus.values["only"] = 0.5f;
  std::vector<EvalRow> rows{{"only", AdvTriple{0.5f, 0.5f, 0.5f}},
                            {"gone", AdvTriple{0.5f, 0.5f, 0.5f}}};
  Predictor model = [](const Waveform&) { return AdvTriple{0.5f, 0.5f, 0.5f}; };
  SampleLoader loader = [&](const std::string& n) { return corpus.load(n); };
  CHECK_THROWS_AS(evaluate_rows(model, loader, rows), std::runtime_error);
}
