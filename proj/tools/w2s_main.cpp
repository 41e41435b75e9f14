#include "CLI11.hpp"
#include "w2s/augment.hpp"
#include "w2s/corpus.hpp"
#include "w2s/distill.hpp"
#include "w2s/manifest.hpp"
#include "w2s/metrics.hpp"
#include "w2s/teacher.hpp"
#include "w2s/wav.hpp"
#include "w2s/weights.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace {

using namespace w2s;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, comma - start));
    start = comma + 1;
  }
}

bool is_weight_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && magic[0] == 'W' && magic[1] == '2' && magic[2] == 'S' &&
         magic[3] == '1';
}

std::shared_ptr<TeacherOracle> teacher_from_weights(const std::string& path) {
  LoadedModel m = load_model(path);
  if (m.fused) {
    auto net = std::make_shared<FusedModel>(std::move(m.fused_net));
    return std::make_shared<PredictorTeacher>(
        [net](const Waveform& w) { return net->forward(w); });
  }
  return std::make_shared<ModelTeacher>(std::move(m.student));
}

std::shared_ptr<TeacherOracle> teacher_from_labels(const std::string& path) {
  const ManifestData data = read_manifest(path);
  for (const auto& [line, message] : data.malformed)
    std::fprintf(stderr, "%s:%d: %s\n", path.c_str(), line, message.c_str());
  if (data.rows.empty()) throw ManifestError(path + ": no usable label rows");
  auto lookup = std::make_shared<LookupTeacher>();
  for (const ManifestRow& row : data.rows)
    lookup->add(read_wav(data.resolve(row)), row.label);
  return lookup;
}

// Spec grammar: comma-separated members, each a weight file, a label
// manifest, or synthetic:<seed>; ensembles average member outputs.
std::shared_ptr<TeacherOracle> make_teacher(const std::string& spec, std::uint64_t corpus_seed) {
  std::vector<std::shared_ptr<TeacherOracle>> members;
  for (const std::string& part : split_commas(spec)) {
    if (part.empty()) throw std::invalid_argument("teacher spec has an empty member");
    if (part.rfind("synthetic:", 0) == 0) {
      const std::uint64_t seed = std::stoull(part.substr(10));
      const CorpusBuckets buckets = make_desk_corpus(corpus_seed);
      const auto calib = calibration_excerpts(buckets, 32, 8000);
      members.push_back(std::make_shared<ModelTeacher>(make_synthetic_teacher(seed, calib)));
    } else if (is_weight_file(part)) {
      members.push_back(teacher_from_weights(part));
    } else {
      members.push_back(teacher_from_labels(part));
    }
  }
  if (members.size() == 1) return members.front();
  return std::make_shared<EnsembleTeacher>(members);
}

std::vector<Waveform> wavs_in_dir(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  std::vector<Waveform> out;
  out.reserve(paths.size());
  for (const std::string& p : paths) out.push_back(read_wav(p));
  if (out.empty()) throw std::invalid_argument(dir + ": no .wav files found");
  return out;
}

int run_infer(const std::string& weights, const std::vector<std::string>& audio) {
  const LoadedModel m = load_model(weights);
  for (const std::string& path : audio) {
    const AdvTriple y = m.infer(read_wav(path));
    std::printf("%s\t%.6f\t%.6f\t%.6f\n", path.c_str(), y.arousal, y.dominance, y.valence);
  }
  return kExitOk;
}

int run_tokens(const std::string& weights, const std::string& audio) {
  const LoadedModel m = load_model(weights);
  const TokenMatrix tokens = m.tokens(read_wav(audio));
  const int dim = tokens.tokens > 0 ? static_cast<int>(tokens.values.size()) / tokens.tokens : 0;
  std::printf("tokens\t%d\tdim\t%d\n", tokens.tokens, dim);
  for (int t = 0; t < tokens.tokens; ++t) {
    for (int j = 0; j < dim; ++j)
      std::printf(j ? "\t%.6f" : "%.6f",
                  tokens.values[static_cast<std::size_t>(t) * static_cast<std::size_t>(dim) +
                                static_cast<std::size_t>(j)]);
    std::printf("\n");
  }
  return kExitOk;
}

int run_param_count(const std::string& weights) {
  const LoadedModel m = load_model(weights);
  Wav2Small reference;
  const ParamCounts c = m.fused ? reference.count_params() : m.student.count_params();
  std::printf("frontend\t%lld\n", static_cast<long long>(c.frontend));
  std::printf("vgg\t%lld\n", static_cast<long long>(c.fused_vgg));
  std::printf("lin\t%lld\n", static_cast<long long>(c.lin));
  std::printf("sof\t%lld\n", static_cast<long long>(c.sof));
  std::printf("adv\t%lld\n", static_cast<long long>(c.adv));
  std::printf("fused_total\t%lld\n", static_cast<long long>(c.fused_total));
  std::printf("trainable_unfused\t%lld\n", static_cast<long long>(c.trainable_unfused));
  return kExitOk;
}

int run_export(const std::string& in, const std::string& out, bool quantize) {
  LoadedModel m = load_model(in);
  FusedModel fused = m.fused ? std::move(m.fused_net) : FusedModel(m.student);
  if (quantize) {
    write_weight_file(quantize_weights(fused), out);
  } else {
    save_fused(fused, out);
  }
  std::printf("%s\t%ju bytes\n", out.c_str(),
              static_cast<std::uintmax_t>(std::filesystem::file_size(out)));
  return kExitOk;
}

int run_evaluate(const std::string& weights, const std::string& manifest) {
  const LoadedModel m = load_model(weights);
  const ManifestData data = read_manifest(manifest);
  for (const auto& [line, message] : data.malformed)
    std::fprintf(stderr, "%s:%d: %s\n", manifest.c_str(), line, message.c_str());
  if (data.rows.empty()) throw ManifestError(manifest + ": no usable rows");

  std::vector<EvalRow> rows;
  rows.reserve(data.rows.size());
  for (const ManifestRow& row : data.rows) rows.push_back({data.resolve(row), row.label});
  const EvalReport report =
      evaluate_rows([&m](const Waveform& w) { return m.infer(w); },
                    [](const std::string& path) { return read_wav(path); }, rows);
  for (const std::string& err : report.row_errors) std::fprintf(stderr, "%s\n", err.c_str());

  std::printf("ccc_arousal\t%.6f\n", report.ccc_arousal);
  std::printf("ccc_dominance\t%.6f\n", report.ccc_dominance);
  std::printf("ccc_valence\t%.6f\n", report.ccc_valence);
  std::printf("quadrant_agreement\t%.6f\n", report.quadrant_agreement);
  std::printf("mae\t%.6f\n", report.mae);
  std::printf("n\t%d\n", report.n);
  std::printf("skipped\t%d\n", report.skipped);
  return kExitOk;
}

int run_teacher_label(const std::string& spec, const std::string& manifest_in,
                      const std::string& manifest_out, std::uint64_t corpus_seed) {
  const auto teacher = make_teacher(spec, corpus_seed);
  const ManifestData data = read_manifest(manifest_in);
  for (const auto& [line, message] : data.malformed)
    std::fprintf(stderr, "%s:%d: %s\n", manifest_in.c_str(), line, message.c_str());
  if (data.rows.empty()) throw ManifestError(manifest_in + ": no usable rows");

  std::vector<ManifestRow> labeled;
  labeled.reserve(data.rows.size());
  for (const ManifestRow& row : data.rows) {
    ManifestRow out = row;
    out.label = teacher->label(read_wav(data.resolve(row)));
    labeled.push_back(std::move(out));
  }
  write_manifest(manifest_out, labeled);
  std::printf("%s\t%zu rows\n", manifest_out.c_str(), labeled.size());
  return kExitOk;
}

int run_init(std::uint64_t seed, const std::string& out, bool fused) {
  Wav2Small m;
  m.init_params(seed);
  if (fused) {
    FusedModel f(m);
    save_fused(f, out);
  } else {
    save_student(m, out);
  }
  std::printf("%s\t%ju bytes\n", out.c_str(),
              static_cast<std::uintmax_t>(std::filesystem::file_size(out)));
  return kExitOk;
}

int run_synth_corpus(const std::string& dir, std::uint64_t seed, int excerpts) {
  const CorpusBuckets buckets = make_desk_corpus(seed);
  std::filesystem::create_directories(dir);
  auto dump = [&dir](const std::vector<Waveform>& bucket, const std::string& stem) {
    for (std::size_t i = 0; i < bucket.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%02zu.wav", stem.c_str(), i);
      write_wav_float32(dir + "/" + name, bucket[i]);
    }
  };
  dump(buckets.primary, "primary");
  dump(buckets.general, "general");
  dump(buckets.speech, "speech");
  dump(buckets.ambient, "ambient");

  const auto clips = calibration_excerpts(buckets, excerpts, 8000);
  std::vector<ManifestRow> rows;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "excerpt_%03zu.wav", i);
    write_wav_float32(dir + "/" + name, clips[i]);
    rows.push_back({name, {0.5f, 0.5f, 0.5f}, ""});
  }
  write_manifest(dir + "/excerpts.tsv", rows);
  std::printf("%s\t%zu tracks\t%zu excerpts\n", dir.c_str(),
              buckets.primary.size() + buckets.general.size() + buckets.speech.size() +
                  buckets.ambient.size(),
              clips.size());
  return kExitOk;
}

int run_train(const std::string& config_path) {
  Config cfg = Config::from_file(config_path);

  TrainingConfig train;
  train.batch_size = cfg.get_int("batch", train.batch_size);
  train.learning_rate = cfg.get_float("lr", train.learning_rate);
  train.weight_decay = cfg.get_float("weight_decay", train.weight_decay);
  train.momentum = cfg.get_float("momentum", train.momentum);
  train.total_steps = cfg.get_int("steps", train.total_steps);
  train.lambda_quadrant = cfg.get_float("lambda", train.lambda_quadrant);
  train.neutral = cfg.get_float("neutral", train.neutral);
  train.bn_frozen_stats = cfg.get_bool("bn_frozen_stats", train.bn_frozen_stats);
  train.checkpoint_every = cfg.get_int("checkpoint_every", train.checkpoint_every);
  train.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  const std::string mode = cfg.get_string("quadrant_mode", "per_dimension");
  if (mode == "per_dimension")
    train.quadrant_mode = QuadrantMode::kPerDimension;
  else if (mode == "octant")
    train.quadrant_mode = QuadrantMode::kOctant;
  else
    throw ManifestError("config key quadrant_mode: expected per_dimension or octant");

  AugmentationConfig aug;
  aug.mix_primary = cfg.get_float("mix_primary", aug.mix_primary);
  aug.mix_secondary = cfg.get_float("mix_secondary", aug.mix_secondary);
  aug.excerpt_min = static_cast<int>(cfg.get_float("excerpt_min_s", 0.4f) * kSampleRate);
  aug.excerpt_max = static_cast<int>(cfg.get_float("excerpt_max_s", 12.0f) * kSampleRate);
  aug.p_roll = cfg.get_float("p_roll", aug.p_roll);
  aug.p_band_drop = cfg.get_float("p_band_drop", aug.p_band_drop);
  aug.p_shout = cfg.get_float("p_shout", aug.p_shout);
  aug.band_drop_min = cfg.get_int("band_drop_min", aug.band_drop_min);
  aug.band_drop_max = cfg.get_int("band_drop_max", aug.band_drop_max);
  aug.shout_intensity = cfg.get_float("shout_intensity", aug.shout_intensity);
  aug.bucket_probs[0] = cfg.get_float("bucket_p_general", aug.bucket_probs[0]);
  aug.bucket_probs[1] = cfg.get_float("bucket_p_speech", aug.bucket_probs[1]);
  aug.bucket_probs[2] = cfg.get_float("bucket_p_ambient", aug.bucket_probs[2]);
  aug.seed = static_cast<std::uint64_t>(cfg.get_int("augment_seed", static_cast<int>(train.seed)));

  const std::uint64_t corpus_seed = static_cast<std::uint64_t>(cfg.get_int("corpus_seed", 42));
  CorpusBuckets buckets = make_desk_corpus(corpus_seed);
  const std::string primary_dir = cfg.get_string("primary_dir", "");
  const std::string general_dir = cfg.get_string("general_dir", "");
  const std::string speech_dir = cfg.get_string("speech_dir", "");
  const std::string ambient_dir = cfg.get_string("ambient_dir", "");
  if (!primary_dir.empty()) buckets.primary = wavs_in_dir(primary_dir);
  if (!general_dir.empty()) buckets.general = wavs_in_dir(general_dir);
  if (!speech_dir.empty()) buckets.speech = wavs_in_dir(speech_dir);
  if (!ambient_dir.empty()) buckets.ambient = wavs_in_dir(ambient_dir);

  const std::string teacher_spec = cfg.get_string("teacher", "synthetic:101");
  const int student_seed = cfg.get_int("student_seed", 1);
  const std::string out = cfg.get_string("out", "student.w2s");
  const std::string checkpoint_path = cfg.get_string("checkpoint_path", out + ".ckpt");
  const std::string telemetry_path = cfg.get_string("telemetry", "");
  cfg.reject_unconsumed();

  const auto teacher = make_teacher(teacher_spec, corpus_seed);
  Wav2Small student;
  student.init_params(static_cast<std::uint64_t>(student_seed));

  std::ofstream telemetry;
  TrainCallbacks callbacks;
  if (!telemetry_path.empty()) {
    telemetry.open(telemetry_path, std::ios::trunc);
    if (!telemetry) throw ManifestError(telemetry_path + ": cannot open telemetry file");
    callbacks.telemetry = &telemetry;
  }
  callbacks.checkpoint = [&checkpoint_path](const Wav2Small& net, int step) {
    Wav2Small copy = net;
    save_student(copy, checkpoint_path);
    std::fprintf(stderr, "checkpoint at step %d -> %s\n", step, checkpoint_path.c_str());
  };

  const auto history = train_distill(student, *teacher, buckets, train, aug, callbacks);

  save_student(student, out);
  const StepStats& last = history.empty() ? StepStats{} : history.back();
  std::printf("steps\t%zu\n", history.size());
  std::printf("final_total\t%.6f\n", last.total);
  std::printf("final_ccc\t%.6f\n", last.ccc_component);
  std::printf("final_quadrant\t%.6f\n", last.quadrant_component);
  std::printf("out\t%s\n", out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wav2small speech emotion tool"};
  app.require_subcommand(1);

  std::string weights, audio_one, manifest_in, manifest_out, config_path, spec, in_path, out_path,
      dir;
  std::vector<std::string> audio_many;
  bool quantize = false, fused = false;
  std::uint64_t seed = 1;
  int excerpts = 64;

  CLI::App* infer = app.add_subcommand("infer", "Predict A/D/V for audio files");
  infer->add_option("weights", weights)->required();
  infer->add_option("audio", audio_many)->required();

  CLI::App* tokens = app.add_subcommand("tokens", "Dump the token matrix for one file");
  tokens->add_option("weights", weights)->required();
  tokens->add_option("audio", audio_one)->required();

  CLI::App* train = app.add_subcommand("train-distill", "Run distillation from a config file");
  train->add_option("config", config_path)->required();

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score weights against a labeled manifest");
  evaluate->add_option("weights", weights)->required();
  evaluate->add_option("manifest", manifest_in)->required();

  CLI::App* exp = app.add_subcommand("export", "Write a deployment weight file");
  exp->add_flag("--quantize", quantize, "emit int8 records");
  exp->add_option("in", in_path)->required();
  exp->add_option("out", out_path)->required();

  CLI::App* params = app.add_subcommand("param-count", "Print the parameter breakdown");
  params->add_option("weights", weights)->required();

  CLI::App* label = app.add_subcommand("teacher-label", "Materialize teacher labels");
  label->add_option("teacher-spec", spec)->required();
  label->add_option("manifest-in", manifest_in)->required();
  label->add_option("manifest-out", manifest_out)->required();
  label->add_option("--corpus-seed", seed, "corpus seed for synthetic members");

  CLI::App* init = app.add_subcommand("init", "Write freshly initialized weights");
  init->add_option("--seed", seed);
  init->add_option("--out", out_path)->required();
  init->add_flag("--fused", fused, "save the fused eval form");

  CLI::App* synth = app.add_subcommand("synth-corpus", "Generate the desk corpus as WAV files");
  synth->add_option("dir", dir)->required();
  synth->add_option("--seed", seed);
  synth->add_option("--excerpts", excerpts, "number of excerpt clips");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*infer) return run_infer(weights, audio_many);
    if (*tokens) return run_tokens(weights, audio_one);
    if (*train) return run_train(config_path);
    if (*evaluate) return run_evaluate(weights, manifest_in);
    if (*exp) return run_export(in_path, out_path, quantize);
    if (*params) return run_param_count(weights);
    if (*label) return run_teacher_label(spec, manifest_in, manifest_out, seed);
    if (*init) return run_init(seed, out_path, fused);
    if (*synth) return run_synth_corpus(dir, seed, excerpts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
