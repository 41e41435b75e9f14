// Acceptance gate: one PASS/FAIL line per numbered criterion, with the
// measured quantities and the pinned thresholds inline. Returns the number
// of failed criteria. Diagnostics go to stderr, results to stdout.
#include "w2s/augment.hpp"
#include "w2s/corpus.hpp"
#include "w2s/distill.hpp"
#include "w2s/dsp.hpp"
#include "w2s/metrics.hpp"
#include "w2s/model.hpp"
#include "w2s/teacher.hpp"
#include "w2s/weights.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <unistd.h>
#include <vector>

namespace {

using namespace w2s;

std::string g_exe;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int run_criterion(int id, const char* title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s %2d %-18s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title,
              o.detail.c_str(), secs);
  std::fflush(stdout);
  return o.pass ? 0 : 1;
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

const CorpusBuckets& corpus() {
  static const CorpusBuckets b = make_desk_corpus(42);
  return b;
}

const ModelTeacher& synthetic_teacher() {
  static const ModelTeacher t =
      make_synthetic_teacher(101, calibration_excerpts(corpus(), 32, 8000));
  return t;
}

Waveform noise_wave(std::size_t len, std::uint64_t seed, float amp = 0.5f) {
  Waveform w;
  w.samples.resize(len);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-amp, amp);
  for (float& v : w.samples) v = dist(rng);
  return w;
}

Waveform tone_wave(std::size_t len, double hz, float amp) {
  Waveform w;
  w.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i)
    w.samples[i] =
        amp * static_cast<float>(std::sin(2.0 * M_PI * hz * static_cast<double>(i) / 16000.0));
  return w;
}

double energy(const Waveform& w) {
  double e = 0.0;
  for (float v : w.samples) e += static_cast<double>(v) * v;
  return e;
}

// Windowed STFT energy at one bin, framed exactly like band_drop.
double bin_energy(const Waveform& w, int bin) {
  const std::vector<double> window = hann_periodic_window(kBandFft);
  double total = 0.0;
  for (std::size_t start = 0; start + kBandFft <= w.samples.size(); start += kBandHop) {
    double re = 0.0, im = 0.0;
    for (int i = 0; i < kBandFft; ++i) {
      const double v =
          window[static_cast<std::size_t>(i)] * w.samples[start + static_cast<std::size_t>(i)];
      const double ang = 2.0 * M_PI * bin * i / kBandFft;
      re += v * std::cos(ang);
      im -= v * std::sin(ang);
    }
    total += re * re + im * im;
  }
  return total;
}

// ---------------------------------------------------------------- criterion 1

Outcome criterion_params() {
  Wav2Small net;
  const ParamCounts c = net.count_params();
  Outcome o;
  o.pass = c.frontend == 5082 && c.fused_vgg == 9516 && c.lin == 28730 && c.sof == 28730 &&
           c.adv == 510 && c.fused_total == 72568;
  o.detail = fmt("fused total %lld = frontend %lld + vgg %lld + lin %lld + sof %lld + adv %lld"
                 " (want 72568 = 5082 + 9516 + 28730 + 28730 + 510)",
                 static_cast<long long>(c.fused_total), static_cast<long long>(c.frontend),
                 static_cast<long long>(c.fused_vgg), static_cast<long long>(c.lin),
                 static_cast<long long>(c.sof), static_cast<long long>(c.adv));
  return o;
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion_tokens() {
  Wav2Small net;
  net.init_params(1);
  const Waveform w = noise_wave(16000, 5);
  const TokenMatrix tm = net.forward_tokens(w);
  const std::size_t dim =
      tm.tokens > 0 ? tm.values.size() / static_cast<std::size_t>(tm.tokens) : 0;
  Outcome o;
  o.pass = tm.tokens == 251 && dim == 169 && std::abs(tm.tokens - 250) <= 1;
  o.detail = fmt("1 s of audio -> %d tokens of dim %zu (want 251 x 169, 250 +-1)", tm.tokens, dim);
  return o;
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion_fusion() {
  Wav2Small net;
  net.init_params(7);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> mdist(-0.5f, 0.5f), vdist(0.5f, 2.0f);
  for (auto& p : net.params()) {
    if (p.name.find(".running_mean") != std::string::npos)
      for (float& v : *p.value) v = mdist(rng);
    if (p.name.find(".running_var") != std::string::npos)
      for (float& v : *p.value) v = vdist(rng);
  }
  const FusedModel fused(net);
  std::uniform_int_distribution<std::size_t> len(16000, 80000);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Waveform w = noise_wave(len(rng), rng(), 0.7f);
    const AdvTriple a = net.forward(w);
    const AdvTriple b = fused.forward(w);
    worst = std::max({worst, std::abs(static_cast<double>(a.arousal) - b.arousal),
                      std::abs(static_cast<double>(a.dominance) - b.dominance),
                      std::abs(static_cast<double>(a.valence) - b.valence)});
  }
  Outcome o;
  o.pass = worst < 1e-5;
  o.detail = fmt("max |unfused - fused| = %.3g over 20 random 1-5 s inputs (want < 1e-5)", worst);
  return o;
}

// ---------------------------------------------------------------- criterion 4

double batch_loss(Wav2SmallT<double>& net, const std::vector<Waveform>& batch,
                  const std::vector<AdvTripleT<double>>& target) {
  std::vector<AdvTripleT<double>> pred(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Tape<double> tape;
    const Tensor4<double> logmel = net.frontend.compute(batch[i]);
    const Var<double> out = net.forward_train(tape, logmel);
    pred[i] = {out.value.data[0], out.value.data[1], out.value.data[2]};
  }
  return ccc_loss_grad(pred, target).value +
         quadrant_loss_grad(pred, target, 0.5, QuadrantMode::kPerDimension).value;
}

Outcome criterion_gradients() {
  Wav2SmallT<double> net;
  net.init_params(3);
  // Spread the head back out so every prediction sits far from the neutral
  // point and the quadrant masks cannot flip inside a finite-difference step.
  for (double& v : net.adv.weight.data) v *= 100.0;

  // Minimum-length probe inputs: the 1e-4 central-difference window must not
  // cross any relu or pooling kink, and the crossing odds scale with the
  // activation count. Three frames per input still drive every layer.
  std::vector<Waveform> batch;
  for (int i = 0; i < 3; ++i) batch.push_back(noise_wave(64, 20 + static_cast<std::uint64_t>(i), 0.6f));
  const std::vector<AdvTripleT<double>> target = {
      {0.8, 0.2, 0.8}, {0.2, 0.8, 0.2}, {0.7, 0.3, 0.6}};

  net.zero_grad();
  std::deque<Tape<double>> tapes;
  std::vector<Var<double>> outs;
  std::vector<AdvTripleT<double>> pred(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    tapes.emplace_back();
    const Tensor4<double> logmel = net.frontend.compute(batch[i]);
    outs.push_back(net.forward_train(tapes.back(), logmel));
    const Tensor4<double>& v = outs.back().value;
    pred[i] = {v.data[0], v.data[1], v.data[2]};
  }
  const LossGrad<double> ccc = ccc_loss_grad(pred, target);
  const LossGrad<double> quad =
      quadrant_loss_grad(pred, target, 0.5, QuadrantMode::kPerDimension);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Tensor4<double> seed(1, 1, 1, 3);
    seed.data[0] = ccc.grad[i].arousal + quad.grad[i].arousal;
    seed.data[1] = ccc.grad[i].dominance + quad.grad[i].dominance;
    seed.data[2] = ccc.grad[i].valence + quad.grad[i].valence;
    tapes[i].backward(outs[i], seed);
  }

  std::vector<ParamRef<double>> trainables;
  for (auto& p : net.params())
    if (p.trainable) trainables.push_back(p);
  std::mt19937_64 pick(23);
  const double h = 1e-4;
  double worst_rel = 0.0;
  for (int k = 0; k < 50; ++k) {
    auto& p = trainables[std::uniform_int_distribution<std::size_t>(0, trainables.size() - 1)(pick)];
    const std::size_t e =
        std::uniform_int_distribution<std::size_t>(0, p.value->size() - 1)(pick);
    const double analytic = (*p.grad)[e];
    const double saved = (*p.value)[e];
    (*p.value)[e] = saved + h;
    const double lp = batch_loss(net, batch, target);
    (*p.value)[e] = saved - h;
    const double lm = batch_loss(net, batch, target);
    (*p.value)[e] = saved;
    const double fd = (lp - lm) / (2.0 * h);
    const double rel =
        std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-6});
    worst_rel = std::max(worst_rel, rel);
  }
  Outcome o;
  o.pass = worst_rel <= 1e-3;
  o.detail = fmt("max rel error reverse vs central fd (50 params, step 1e-4) = %.3g"
                 " (want <= 1e-3)",
                 worst_rel);
  return o;
}

// ---------------------------------------------------------------- criterion 5

std::vector<double> oracle_stft_power(const std::vector<double>& x,
                                      const std::vector<double>& window) {
  const std::int64_t len = static_cast<std::int64_t>(x.size());
  const int frames = static_cast<int>(len / 32) + 1;
  std::vector<double> out(static_cast<std::size_t>(frames) * 33);
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k < 33; ++k) {
      double re = 0.0, im = 0.0;
      for (int n = 0; n < 64; ++n) {
        std::int64_t j = static_cast<std::int64_t>(t) * 32 - 32 + n;
        if (j < 0) j = -j;
        if (j >= len) j = 2 * len - 2 - j;
        const double v = x[static_cast<std::size_t>(j)] * window[n];
        const double phase = 2.0 * M_PI * k * n / 64.0;
        re += v * std::cos(phase);
        im -= v * std::sin(phase);
      }
      out[static_cast<std::size_t>(t) * 33 + k] = re * re + im * im;
    }
  }
  return out;
}

Outcome criterion_stft() {
  Frontend<double> fe;
  const std::vector<double> window = hann_periodic_window(64);
  int checked = 0;
  double worst = 0.0;
  for (std::uint64_t seed : {31u, 32u}) {
    const std::size_t len = seed == 31u ? 3199 : 2048;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> x(len);
    for (double& v : x) v = dist(rng);
    int frames = 0;
    const std::vector<double> got = fe.stft_power(x, &frames);
    const std::vector<double> want = oracle_stft_power(x, window);
    if (got.size() != want.size()) return {false, "stft size mismatch vs oracle"};
    for (int t = 0; t < frames; ++t) {
      double peak = 0.0;
      for (int k = 0; k < 33; ++k)
        peak = std::max(peak, want[static_cast<std::size_t>(t) * 33 + k]);
      for (int k = 0; k < 33; ++k) {
        const std::size_t i = static_cast<std::size_t>(t) * 33 + k;
        worst = std::max(worst, std::abs(got[i] - want[i]) / std::max(peak, 1e-12));
      }
      ++checked;
    }
  }
  bool law = true;
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<std::size_t> len(64, 50000);
  for (int i = 0; i < 20; ++i) {
    const std::size_t n = len(rng);
    std::vector<double> x(n, 0.25);
    int frames = 0;
    fe.stft_power(x, &frames);
    if (frames != static_cast<int>(n / 32) + 1) law = false;
  }
  Outcome o;
  o.pass = worst <= 1e-4 && checked >= 100 && law;
  o.detail = fmt("max rel error vs O(n^2) DFT = %.3g on %d frames (want <= 1e-4);"
                 " frame law %s on 20 lengths",
                 worst, checked, law ? "held" : "BROKE");
  return o;
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion_ccc() {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto randvec = [&](std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
  };

  const std::vector<double> x = randvec(100);
  const double self_err = std::abs(ccc(x, x) - 1.0);

  std::vector<double> zm = x;
  double mean = 0.0;
  for (double v : zm) mean += v;
  mean /= static_cast<double>(zm.size());
  for (double& v : zm) v -= mean;
  std::vector<double> neg = zm;
  for (double& v : neg) v = -v;
  const double anti_err = std::abs(ccc(zm, neg) + 1.0);

  double shift_err = 0.0;
  for (int i = 0; i < 10; ++i) {
    const std::vector<double> a = randvec(100);
    const double c = dist(rng) * 2.0;
    std::vector<double> b = a;
    for (double& v : b) v += c;
    double sa = 0.0, saa = 0.0;
    for (double v : a) {
      sa += v;
      saa += v * v;
    }
    const double ma = sa / 100.0;
    const double var = saa / 100.0 - ma * ma;
    const double want = 2.0 * var / (2.0 * var + c * c);
    shift_err = std::max(shift_err, std::abs(ccc(a, b) - want));
  }

  bool symmetric = true;
  for (int i = 0; i < 5; ++i) {
    const std::vector<double> a = randvec(50);
    const std::vector<double> b = randvec(50);
    if (ccc(a, b) != ccc(b, a)) symmetric = false;
  }

  Outcome o;
  o.pass = self_err <= 1e-12 && anti_err <= 1e-9 && shift_err <= 1e-9 && symmetric;
  o.detail = fmt("|ccc(x,x)-1| = %.2g; |ccc(x,-x)+1| = %.2g; shift-law err = %.2g"
                 " (want <= 1e-9); symmetry %s",
                 self_err, anti_err, shift_err, symmetric ? "exact" : "BROKE");
  return o;
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion_quadrant() {
  using Triple = AdvTripleT<float>;
  const std::vector<Triple> agree_pred = {
      {0.7f, 0.2f, 0.9f}, {0.6f, 0.1f, 0.8f}, {0.9f, 0.4f, 0.7f}, {0.55f, 0.45f, 0.95f}};
  const std::vector<Triple> agree_target = {
      {0.9f, 0.1f, 0.8f}, {0.7f, 0.3f, 0.6f}, {0.8f, 0.2f, 0.9f}, {0.51f, 0.49f, 0.51f}};
  std::vector<Triple> bad_pred = agree_pred;
  bad_pred[1].dominance = 0.2f;
  std::vector<Triple> bad_target = agree_target;
  bad_target[1].dominance = 0.7f;

  bool pass = true;
  std::string modes;
  for (QuadrantMode mode : {QuadrantMode::kPerDimension, QuadrantMode::kOctant}) {
    const LossGrad<float> zero = quadrant_loss_grad(agree_pred, agree_target, 0.5f, mode);
    const LossGrad<float> pos = quadrant_loss_grad(bad_pred, bad_target, 0.5f, mode);
    const bool zero_ok = zero.value == 0.0;
    bool grad_ok = false;
    for (const Triple& g : pos.grad)
      if (g.arousal != 0.0f || g.dominance != 0.0f || g.valence != 0.0f) grad_ok = true;
    const bool ok = zero_ok && pos.value > 0.0 && grad_ok;
    pass = pass && ok;
    modes += fmt("%s: agree %.1f disagree %.4f grad %s; ",
                 mode == QuadrantMode::kPerDimension ? "per-dim" : "octant", zero.value,
                 pos.value, grad_ok ? "nonzero" : "ZERO");
  }
  Outcome o;
  o.pass = pass;
  o.detail = modes + "(want exactly 0 / positive with nonzero grad)";
  return o;
}

// ---------------------------------------------------------------- criterion 8

Outcome criterion_distillation() {
  const CorpusBuckets& buckets = corpus();
  const ModelTeacher& teacher = synthetic_teacher();

  Wav2Small self_net = teacher.net();
  TrainingConfig self_cfg;
  self_cfg.bn_frozen_stats = true;
  AugmentationConfig self_aug;
  self_aug.seed = 424242;
  self_aug.excerpt_min = 6400;
  self_aug.excerpt_max = 8000;
  std::vector<Waveform> self_batch;
  for (std::uint64_t i = 0; i < 4; ++i)
    self_batch.push_back(make_training_sample(buckets, self_aug, i));
  const double self_loss = distill_step(self_net, teacher, self_batch, self_cfg).total;

  const std::array<std::uint64_t, 3> seeds{201, 202, 203};
  std::array<double, 3> reduction{};
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    Wav2Small student;
    student.init_params(seeds[s]);
    AugmentationConfig aug;
    aug.seed = seeds[s];
    aug.excerpt_min = 6400;
    aug.excerpt_max = 8000;
    TrainingConfig cfg;
    std::vector<double> hist;
    hist.reserve(2000);
    std::uint64_t counter = 0;
    for (int step = 1; step <= 2000; ++step) {
      std::vector<Waveform> batch;
      batch.reserve(16);
      for (int i = 0; i < cfg.batch_size; ++i)
        batch.push_back(make_training_sample(buckets, aug, counter++));
      hist.push_back(distill_step(student, teacher, batch, cfg).ccc_component);
      if (step % 500 == 0)
        std::fprintf(stderr, "  seed %llu: step %d/2000, trailing ccc loss %.4f\n",
                     static_cast<unsigned long long>(seeds[s]), step,
                     std::accumulate(hist.end() - 100, hist.end(), 0.0) / 100.0);
    }
    double base = 0.0, fin = 0.0;
    for (int i = 0; i < 100; ++i) {
      base += hist[static_cast<std::size_t>(i)];
      fin += hist[static_cast<std::size_t>(1900 + i)];
    }
    reduction[s] = 1.0 - fin / base;
    std::fprintf(stderr, "  seed %llu: reduction %.1f%% in %.0f s\n",
                 static_cast<unsigned long long>(seeds[s]), 100.0 * reduction[s],
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::array<double, 3> sorted = reduction;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[1];

  Outcome o;
  o.pass = median >= 0.5 && self_loss < 1e-3;
  o.detail = fmt("median ccc-loss reduction %.1f%% over seeds 201/202/203"
                 " (%.1f%% / %.1f%% / %.1f%%, want >= 50%%); self-distill loss %.2g"
                 " (want < 1e-3)",
                 100.0 * median, 100.0 * reduction[0], 100.0 * reduction[1],
                 100.0 * reduction[2], self_loss);
  return o;
}

// ---------------------------------------------------------------- criterion 9

Outcome criterion_quantization() {
  Wav2Small net = synthetic_teacher().net();
  FusedModel f32(net);
  const WeightFile qf = quantize_weights(f32);
  const std::vector<std::uint8_t> bytes = encode_weight_file(qf);
  const FusedModel qnet = unpack_fused(decode_weight_file(bytes));

  std::vector<const Waveform*> tracks;
  const CorpusBuckets& b = corpus();
  for (const auto* bucket : {&b.primary, &b.general, &b.speech, &b.ambient})
    for (const Waveform& t : *bucket) tracks.push_back(&t);

  std::mt19937_64 rng(999);
  std::uniform_int_distribution<std::size_t> len(4800, 12800);
  std::array<std::vector<double>, 3> pf, pq;
  for (int i = 0; i < 500; ++i) {
    const Waveform& track =
        *tracks[std::uniform_int_distribution<std::size_t>(0, tracks.size() - 1)(rng)];
    const std::size_t n = len(rng);
    const std::size_t off =
        std::uniform_int_distribution<std::size_t>(0, track.samples.size() - 1)(rng);
    Waveform w;
    w.samples.resize(n);
    for (std::size_t j = 0; j < n; ++j)
      w.samples[j] = track.samples[(off + j) % track.samples.size()];
    const AdvTriple a = f32.forward(w);
    const AdvTriple q = qnet.forward(w);
    pf[0].push_back(a.arousal);
    pf[1].push_back(a.dominance);
    pf[2].push_back(a.valence);
    pq[0].push_back(q.arousal);
    pq[1].push_back(q.dominance);
    pq[2].push_back(q.valence);
  }
  double min_ccc = 1.0;
  for (int d = 0; d < 3; ++d)
    min_ccc = std::min(min_ccc, ccc(pf[static_cast<std::size_t>(d)], pq[static_cast<std::size_t>(d)]));

  Outcome o;
  o.pass = bytes.size() <= 128 * 1024 && min_ccc >= 0.98;
  o.detail = fmt("int8 file %zu bytes (want <= 131072); min per-dim ccc f32-vs-int8 = %.4f"
                 " over 500 items (want >= 0.98)",
                 bytes.size(), min_ccc);
  return o;
}

// --------------------------------------------------------------- criterion 10

long vmhwm_kb() {
  FILE* f = std::fopen("/proc/self/status", "r");
  if (!f) return -1;
  char line[256];
  long kb = -1;
  while (std::fgets(line, sizeof line, f))
    if (std::strncmp(line, "VmHWM:", 6) == 0) std::sscanf(line + 6, "%ld", &kb);
  std::fclose(f);
  return kb;
}

int infer_probe() {
  const long base = vmhwm_kb();
  Wav2Small net;
  net.init_params(1);
  const FusedModel fused(net);
  const Waveform w = noise_wave(80000, 5);
  for (int i = 0; i < 2; ++i) fused.forward(w);
  double best = 1e12;
  for (int i = 0; i < 5; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    volatile float sink = fused.forward(w).arousal;
    (void)sink;
    best = std::min(
        best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::printf("ms %.3f delta_kb %ld\n", best, vmhwm_kb() - base);
  return 0;
}

Outcome criterion_performance() {
  const std::string cmd = "OPENBLAS_NUM_THREADS=1 '" + g_exe + "' --infer-probe";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {false, "could not launch probe subprocess"};
  double ms = -1.0;
  long delta_kb = -1;
  char line[256];
  if (std::fgets(line, sizeof line, p))
    std::sscanf(line, "ms %lf delta_kb %ld", &ms, &delta_kb);
  const int status = pclose(p);
  if (status != 0 || ms < 0.0 || delta_kb < 0) return {false, "probe subprocess failed"};

  Outcome o;
  o.pass = ms < 250.0 && delta_kb < 32 * 1024;
  o.detail = fmt("single-thread f32 on 5 s audio: %.0f ms (target 50 ms, enforced at x5"
                 " slack = 250 ms); inference-path peak memory %.1f MB (want < 32 MB)",
                 ms, static_cast<double>(delta_kb) / 1024.0);
  return o;
}

// --------------------------------------------------------------- criterion 11

Outcome criterion_augmentation() {
  AugmentationConfig cfg;

  const Waveform a1 = noise_wave(1000, 51);
  const Waveform a2 = noise_wave(1000, 52);
  std::mt19937_64 mix_rng(1);
  const Waveform mixed = mixup(a1, a2, cfg, mix_rng);
  double mix_err = 0.0;
  for (std::size_t i = 0; i < mixed.samples.size(); ++i)
    mix_err = std::max(mix_err, std::abs(static_cast<double>(mixed.samples[i]) -
                                         (0.64 * a1.samples[i] + 0.41 * a2.samples[i])));

  const Waveform w = noise_wave(1000, 53);
  double rot_err = 0.0;
  for (long long shift : {1LL, 357LL, -500LL})
    rot_err = std::max(rot_err, std::abs(energy(cyclic_rotate(w, shift)) / energy(w) - 1.0));

  Waveform two_tone = tone_wave(16000, 1250.0, 0.4f);
  {
    const Waveform hi = tone_wave(16000, 3750.0, 0.3f);
    for (std::size_t i = 0; i < two_tone.samples.size(); ++i)
      two_tone.samples[i] += hi.samples[i];
  }
  const Waveform dropped = band_drop(two_tone, {2});
  const double energy_err = std::abs(energy(dropped) / energy(two_tone) - 1.0);
  const double atten = bin_energy(dropped, 20) / bin_energy(two_tone, 20);

  AugmentationConfig det_cfg;
  det_cfg.seed = 77;
  det_cfg.excerpt_min = 6400;
  det_cfg.excerpt_max = 16000;
  bool deterministic = true;
  for (std::uint64_t counter = 0; counter < 50; ++counter) {
    const Waveform s1 = make_training_sample(corpus(), det_cfg, counter);
    const Waveform s2 = make_training_sample(corpus(), det_cfg, counter);
    if (s1.samples.size() != s2.samples.size() ||
        std::memcmp(s1.samples.data(), s2.samples.data(), s1.samples.size() * sizeof(float)) != 0)
      deterministic = false;
  }

  Outcome o;
  o.pass = mix_err <= 1e-7 && rot_err <= 1e-6 && energy_err <= 0.01 && atten <= 1e-4 &&
           deterministic;
  o.detail = fmt("mixup dev %.2g (<= 1e-7); rotate energy dev %.2g (<= 1e-6); band-drop"
                 " energy dev %.3f (<= 0.01), attenuation %.2g (<= 1e-4 = 40 dB); stream %s",
                 mix_err, rot_err, energy_err, atten,
                 deterministic ? "deterministic" : "NON-DETERMINISTIC");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1 && std::strcmp(argv[1], "--infer-probe") == 0) return infer_probe();
  setenv("OPENBLAS_NUM_THREADS", "1", 0);

  char exe[4096];
  const ssize_t n = readlink("/proc/self/exe", exe, sizeof exe - 1);
  g_exe = n > 0 ? std::string(exe, static_cast<std::size_t>(n)) : std::string(argv[0]);

  int failures = 0;
  failures += run_criterion(1, "parameter-budget", criterion_params);
  failures += run_criterion(2, "token-rate", criterion_tokens);
  failures += run_criterion(3, "fusion-parity", criterion_fusion);
  failures += run_criterion(4, "gradient-check", criterion_gradients);
  failures += run_criterion(5, "stft-oracle", criterion_stft);
  failures += run_criterion(6, "ccc-laws", criterion_ccc);
  failures += run_criterion(7, "quadrant-contract", criterion_quadrant);
  if (!std::getenv("W2S_SKIP_DISTILL"))
    failures += run_criterion(8, "distillation-run", criterion_distillation);
  failures += run_criterion(9, "quantization", criterion_quantization);
  failures += run_criterion(10, "performance", criterion_performance);
  failures += run_criterion(11, "augmentation", criterion_augmentation);

  std::printf("%d/11 criteria passed\n", 11 - failures);
  return failures;
}
