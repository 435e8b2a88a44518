/* Copyright 2026 The ragaxai Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "ragaxai/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "ragaxai/checkpoint.hpp"
#include "ragaxai/dsp.hpp"
#include "ragaxai/evalsal.hpp"
#include "ragaxai/feature_cache.hpp"
#include "ragaxai/gradcam.hpp"

namespace ragaxai::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

int argmax(const std::vector<float>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
      throw Error("config: unknown key '" + key + "' in " + where);
    }
  }
}

}  // namespace

json RunConfig::to_json() const {
  json slime = {{"samples", slime_samples}, {"ridge", slime_ridge}, {"mode", to_string(slime_mode)}};
  slime["sigma"] = slime_sigma ? json(*slime_sigma) : json(nullptr);
  return {
      {"seed", seed},
      {"model", config_to_json(model)},
      {"train",
       {{"learning_rate", learning_rate}, {"batch_size", batch_size}, {"max_epochs", max_epochs}, {"patience", patience}}},
      {"split", split_ratios},
      {"slime", slime},
      {"corpus",
       {{"classes", corpus.classes},
        {"songs_per_class", corpus.songs_per_class},
        {"song_seconds", corpus.song_seconds},
        {"randomize_tonic", corpus.randomize_tonic},
        {"pakad_count", corpus.synth.pakad_count},
        {"drone_gain", corpus.synth.drone_gain},
        {"melody_gain", corpus.synth.melody_gain},
        {"pakad_gain", corpus.synth.pakad_gain},
        {"noise_dbfs", corpus.synth.noise_dbfs},
        {"clips_per_class", clips_per_class},
        {"clip_noise_max_dbfs", clip_noise_max_dbfs}}},
  };
}

int RunConfig::worker_count() const {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

RunConfig merge_run_config(RunConfig base, const json& j) {
  if (!j.is_object()) throw Error("config: expected a JSON object");
  try {
    reject_unknown(j, {"seed", "jobs", "model", "train", "split", "slime", "corpus"}, "config");
    take(j, "seed", base.seed);
    take(j, "jobs", base.jobs);
    if (j.contains("model")) {
      const json& m = j.at("model");
      reject_unknown(m, {"variant", "conv_channels", "freq_pools", "kernel_size", "lstm_hidden", "num_classes",
                         "tonic_normalize", "input_frames", "input_bins"},
                     "model");
      if (m.contains("variant")) {
        base.model = make_config(parse_variant(m.at("variant").get<std::string>()), base.model.num_classes);
      }
      take(m, "conv_channels", base.model.conv_channels);
      take(m, "freq_pools", base.model.freq_pools);
      take(m, "kernel_size", base.model.kernel_size);
      take(m, "lstm_hidden", base.model.lstm_hidden);
      take(m, "num_classes", base.model.num_classes);
      take(m, "tonic_normalize", base.model.tonic_normalize);
      take(m, "input_frames", base.model.input_frames);
      take(m, "input_bins", base.model.input_bins);
      base.model.validate();
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      reject_unknown(t, {"learning_rate", "batch_size", "max_epochs", "patience"}, "train");
      take(t, "learning_rate", base.learning_rate);
      take(t, "batch_size", base.batch_size);
      take(t, "max_epochs", base.max_epochs);
      take(t, "patience", base.patience);
    }
    take(j, "split", base.split_ratios);
    if (j.contains("slime")) {
      const json& s = j.at("slime");
      reject_unknown(s, {"samples", "ridge", "sigma", "mode"}, "slime");
      take(s, "samples", base.slime_samples);
      take(s, "ridge", base.slime_ridge);
      if (s.contains("sigma")) {
        base.slime_sigma = s.at("sigma").is_null() ? std::nullopt : std::optional<double>(s.at("sigma").get<double>());
      }
      if (s.contains("mode")) base.slime_mode = parse_slime_target(s.at("mode").get<std::string>());
    }
    if (j.contains("corpus")) {
      const json& c = j.at("corpus");
      reject_unknown(c, {"classes", "songs_per_class", "song_seconds", "randomize_tonic", "pakad_count", "drone_gain",
                         "melody_gain", "pakad_gain", "noise_dbfs", "clips_per_class", "clip_noise_max_dbfs"},
                     "corpus");
      take(c, "classes", base.corpus.classes);
      take(c, "songs_per_class", base.corpus.songs_per_class);
      take(c, "song_seconds", base.corpus.song_seconds);
      take(c, "randomize_tonic", base.corpus.randomize_tonic);
      take(c, "pakad_count", base.corpus.synth.pakad_count);
      take(c, "drone_gain", base.corpus.synth.drone_gain);
      take(c, "melody_gain", base.corpus.synth.melody_gain);
      take(c, "pakad_gain", base.corpus.synth.pakad_gain);
      take(c, "noise_dbfs", base.corpus.synth.noise_dbfs);
      take(c, "clips_per_class", base.clips_per_class);
      take(c, "clip_noise_max_dbfs", base.clip_noise_max_dbfs);
    }
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  return base;
}

RunConfig load_run_config(const fs::path& path, RunConfig base) { return merge_run_config(std::move(base), read_json_file(path)); }

std::string provenance_line(const RunConfig& config) {
  return "# ragaxai seed=" + std::to_string(config.seed) + " config=" + config.to_json().dump() + "\n";
}

std::vector<std::string> parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown error";
      }
    }
  };
  const auto threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (threads <= 1) {
    worker();
    return errors;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return errors;
}

// ---------------------------------------------------------------------------
// extract

int cmd_extract(const RunConfig& config, const ExtractArgs& args, std::ostream& log) {
  const DatasetManifest manifest = read_manifest(args.manifest);
  fs::create_directories(config.out_dir);
  std::vector<std::vector<std::string>> files(manifest.songs.size());
  const auto errors = parallel_for(manifest.songs.size(), config.worker_count(), [&](std::size_t i) {
    const SongEntry& song = manifest.songs[i];
    const AudioClip audio = load_audio(resolve_audio_path(song, args.manifest));
    std::vector<Interval> segments = song.music_segments;
    if (segments.empty()) segments.push_back({0.0, audio.duration()});
    const auto chunks = chunk_song(audio, segments);
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      const std::string name = song.song_id + "_" + std::to_string(c) + ".chrm";
      write_feature_cache(dsp::extract_raw_features(chunks[c]).energy, config.out_dir / name);
      files[i].push_back(name);
    }
  });

  json songs = json::array(), failures = json::array();
  std::size_t chunk_count = 0;
  for (std::size_t i = 0; i < manifest.songs.size(); ++i) {
    const SongEntry& song = manifest.songs[i];
    if (!errors[i].empty()) {
      failures.push_back({{"song_id", song.song_id}, {"error", errors[i]}});
      log << "extract: " << song.song_id << " failed: " << errors[i] << "\n";
      continue;
    }
    chunk_count += files[i].size();
    songs.push_back({{"song_id", song.song_id},
                     {"raga_label", song.raga_label},
                     {"tonic_pitch_class", song.tonic_pitch_class},
                     {"chunks", files[i]}});
  }
  write_json(config.out_dir / "summary.json", {{"run", config.to_json()},
                                              {"song_count", songs.size()},
                                              {"chunk_count", chunk_count},
                                              {"songs", songs},
                                              {"failures", failures}});
  log << "extract: " << chunk_count << " chunks from " << songs.size() << " songs, " << failures.size()
      << " failures\n";
  return failures.empty() ? 0 : 1;
}

ChunkFeatures read_chunk_features(const fs::path& path, std::optional<int> tonic) {
  ChunkFeatures out{read_feature_cache(path), 0};
  if (tonic) {
    out.tonic = *tonic;
  } else {
    const fs::path summary = path.parent_path() / "summary.json";
    if (!fs::exists(summary)) {
      throw Error("no tonic given for " + path.string() + " and no summary.json beside it");
    }
    const json j = read_json_file(summary);
    const std::string name = path.filename().string();
    bool found = false;
    for (const auto& song : j.at("songs")) {
      for (const auto& c : song.at("chunks")) {
        if (c.get<std::string>() == name) {
          out.tonic = song.at("tonic_pitch_class").get<int>();
          found = true;
        }
      }
    }
    if (!found) throw Error("summary.json does not list " + name + "; pass --tonic");
  }
  if (out.tonic < 0 || out.tonic > 11) throw Error("tonic must be a pitch class in [0, 11]");
  return out;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const RunConfig& config, const TrainArgs& args, std::ostream& log) {
  const json summary = read_json_file(args.features / "summary.json");
  DatasetManifest manifest;
  std::map<std::string, std::vector<std::string>> chunk_files;
  for (const auto& s : summary.at("songs")) {
    SongEntry e;
    e.song_id = s.at("song_id").get<std::string>();
    e.raga_label = s.at("raga_label").get<std::string>();
    e.tonic_pitch_class = s.at("tonic_pitch_class").get<int>();
    chunk_files[e.song_id] = s.at("chunks").get<std::vector<std::string>>();
    manifest.songs.push_back(std::move(e));
  }
  manifest.validate();
  const std::vector<std::string> vocabulary = manifest.labels();
  if (vocabulary.size() < 2) throw Error("train: need at least two raga classes, found " + std::to_string(vocabulary.size()));
  const SplitAssignment split = split_dataset(manifest, config.split_ratios, config.seed);

  ModelConfig model_config = config.model;
  model_config.num_classes = static_cast<int>(vocabulary.size());
  model_config.validate();

  auto label_of = [&](const std::string& raga) {
    return static_cast<int>(std::lower_bound(vocabulary.begin(), vocabulary.end(), raga) - vocabulary.begin());
  };
  std::map<std::string, const SongEntry*> by_id;
  for (const auto& s : manifest.songs) by_id[s.song_id] = &s;
  auto load = [&](Split which) {
    std::vector<LabeledChunk> out;
    for (const auto& id : split.songs_in(which)) {
      const SongEntry& song = *by_id.at(id);
      for (const auto& f : chunk_files.at(id)) {
        out.push_back({prepare_input(read_feature_cache(args.features / f), song.tonic_pitch_class, model_config),
                       label_of(song.raga_label), id});
      }
    }
    return out;
  };
  const auto train_set = load(Split::kTrain), val_set = load(Split::kVal), test_set = load(Split::kTest);
  log << "train: " << train_set.size() << " train / " << val_set.size() << " val / " << test_set.size()
      << " test chunks, variant " << to_string(model_config.variant) << "\n";

  Hyperparams hp;
  hp.learning_rate = config.learning_rate;
  hp.batch_size = config.batch_size;
  hp.max_epochs = config.max_epochs;
  hp.patience = config.patience;
  hp.seed = config.seed;
  hp.on_epoch = [&log](const EpochRecord& r) {
    log << "epoch " << r.epoch << " loss " << r.train_loss << " acc " << r.train_accuracy << " val_f1 " << r.val_f1
        << "\n";
  };
  const TrainedModel model = train(build_model(model_config, config.seed, vocabulary), train_set, val_set, hp);

  fs::create_directories(config.out_dir);
  save_checkpoint(model, config.out_dir / "model.rgmd");
  std::ostringstream history;
  history << provenance_line(config) << "epoch,train_loss,train_accuracy,val_loss,val_f1\n";
  char buf[160];
  for (const auto& r : model.history) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss, r.train_accuracy, r.val_loss,
                  r.val_f1);
    history << buf;
  }
  write_text(config.out_dir / "history.csv", history.str());

  // Test-split reports at chunk and song level.
  std::vector<int> chunk_pred, chunk_true, song_pred, song_true;
  for (const auto& id : split.songs_in(Split::kTest)) {
    std::vector<Matrix> chunks;
    for (const auto& c : test_set) {
      if (c.song_id == id) chunks.push_back(c.features);
    }
    if (chunks.empty()) continue;
    const auto probs = predict_batch(model, chunks);
    for (const auto& p : probs) {
      chunk_pred.push_back(argmax(p));
      chunk_true.push_back(label_of(by_id.at(id)->raga_label));
    }
    song_pred.push_back(vote(probs));
    song_true.push_back(label_of(by_id.at(id)->raga_label));
  }
  const auto chunk_report = classification_report(chunk_pred, chunk_true, vocabulary, ReportLevel::kChunk);
  const auto song_report = classification_report(song_pred, song_true, vocabulary, ReportLevel::kSong);
  const std::string prov = provenance_line(config);
  write_text(config.out_dir / "report_chunk.txt", prov + chunk_report.to_text());
  write_text(config.out_dir / "report_chunk.csv", prov + chunk_report.to_csv());
  write_text(config.out_dir / "report_song.txt", prov + song_report.to_text());
  write_text(config.out_dir / "report_song.csv", prov + song_report.to_csv());
  write_text(config.out_dir / "confusion_chunk.csv",
             prov + confusion_csv(confusion_matrix(chunk_pred, chunk_true, model_config.num_classes), vocabulary));
  json split_json = json::object();
  for (const auto& [id, which] : split.assignment) split_json[id] = to_string(which);
  write_json(config.out_dir / "split.json", {{"run", config.to_json()}, {"split", split_json}});
  write_json(config.out_dir / "train_summary.json", {{"run", config.to_json()},
                                                    {"best_epoch", model.best_epoch},
                                                    {"epochs_run", model.history.size()},
                                                    {"chunk_weighted_f1", chunk_report.weighted_avg.f1},
                                                    {"song_weighted_f1", song_report.weighted_avg.f1}});
  log << "train: best epoch " << model.best_epoch << ", test chunk F1 " << chunk_report.weighted_avg.f1
      << ", song F1 " << song_report.weighted_avg.f1 << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// predict

int cmd_predict(const RunConfig& config, const PredictArgs& args, std::ostream& log) {
  if (args.features.empty()) throw Error("predict: no feature files given");
  const TrainedModel model = load_checkpoint(args.checkpoint);
  std::vector<Matrix> inputs;
  for (const auto& f : args.features) {
    const auto cf = read_chunk_features(f, args.tonic);
    inputs.push_back(prepare_input(cf.chroma, cf.tonic, model.config));
  }
  const auto probs = predict_batch(model, inputs);
  json chunks = json::array();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const int c = argmax(probs[i]);
    chunks.push_back({{"features", args.features[i].filename().string()},
                      {"class", model.vocabulary[static_cast<std::size_t>(c)]},
                      {"class_index", c},
                      {"probability", probs[i][static_cast<std::size_t>(c)]},
                      {"probabilities", probs[i]}});
  }
  const int song = vote(probs);
  const json out = {{"run", config.to_json()},
                    {"chunks", chunks},
                    {"song", {{"class", model.vocabulary[static_cast<std::size_t>(song)]}, {"class_index", song}}}};
  write_json(config.out_dir / "prediction.json", out);
  log << "predict: " << model.vocabulary[static_cast<std::size_t>(song)] << " (" << probs.size() << " chunks)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// explain

std::string saliency_overlay_pgm(const Matrix& chroma, const std::vector<double>& frame_scores) {
  constexpr std::size_t kBand = 6;
  const std::size_t w = chroma.rows(), bins = chroma.cols(), h = bins + kBand;
  float cmax = 0.0f;
  for (float v : chroma.data()) cmax = std::max(cmax, v);
  double smin = 0.0, smax = 0.0;
  if (!frame_scores.empty()) {
    smin = *std::min_element(frame_scores.begin(), frame_scores.end());
    smax = *std::max_element(frame_scores.begin(), frame_scores.end());
  }
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double v = 0.0;
      if (y < bins) {
        v = cmax > 0.0f ? chroma(x, bins - 1 - y) / cmax : 0.0;
      } else if (x < frame_scores.size() && smax > smin) {
        v = (frame_scores[x] - smin) / (smax - smin);
      }
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    }
  }
  return out;
}

int cmd_explain(const RunConfig& config, const ExplainArgs& args, std::ostream& log) {
  if (args.method != "gradcampp" && args.method != "slime") {
    throw Error("explain: unknown method '" + args.method + "' (expected gradcampp or slime)");
  }
  if (args.features.empty()) throw Error("explain: no feature files given");
  const TrainedModel model = load_checkpoint(args.checkpoint);
  std::mutex log_mutex;
  const auto errors = parallel_for(args.features.size(), config.worker_count(), [&](std::size_t i) {
    const fs::path& f = args.features[i];
    const auto cf = read_chunk_features(f, args.tonic);
    const Matrix input = prepare_input(cf.chroma, cf.tonic, model.config);
    const auto probs = predict_chunk(model, input);
    const int target = argmax(probs);
    const fs::path dir = config.out_dir / f.stem();
    fs::create_directories(dir);
    const std::string prov = provenance_line(config);
    json pred = {{"run", config.to_json()},
                 {"features", f.filename().string()},
                 {"class", model.vocabulary[static_cast<std::size_t>(target)]},
                 {"class_index", target},
                 {"probability", probs[static_cast<std::size_t>(target)]},
                 {"method", args.method}};
    TimeSaliency ts;
    if (args.method == "gradcampp") {
      ts = time_saliency(gradcampp_map(conv_attribution(model, input, target)));
    } else {
      SlimeConfig sc;
      sc.samples = config.slime_samples;
      sc.seed = config.seed;
      sc.ridge = config.slime_ridge;
      sc.sigma = config.slime_sigma;
      sc.target = config.slime_mode;
      const auto expl = fit_explanation(model, input, target, sc);
      ts = slime_time_saliency(expl, input.rows());
      pred["slime"] = {{"sigma", expl.sigma}, {"r2", expl.r2}, {"intercept", expl.intercept},
                       {"target_class", expl.target_class}, {"mode", to_string(expl.mode)}};
      write_text(dir / "coefficients.csv", prov + slime_coefficients_csv(expl));
    }
    write_text(dir / "frames.csv", prov + frame_saliency_csv(ts));
    write_text(dir / "seconds.csv", prov + second_saliency_csv(ts));
    write_json(dir / "prediction.json", pred);
    write_text(dir / "overlay.pgm", saliency_overlay_pgm(input, ts.frame_scores));
    std::lock_guard lock(log_mutex);
    log << "explain: " << f.filename().string() << " -> " << model.vocabulary[static_cast<std::size_t>(target)] << "\n";
  });
  int failed = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      ++failed;
      log << "explain: " << args.features[i].string() << " failed: " << errors[i] << "\n";
    }
  }
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------------------
// eval-saliency

int cmd_eval_saliency(const RunConfig& config, const EvalSaliencyArgs& args, std::ostream& log) {
  const bool want_gc = args.method == "gc" || args.method == "both";
  const bool want_sl = args.method == "sl" || args.method == "both";
  if (!want_gc && !want_sl) throw Error("eval-saliency: unknown method '" + args.method + "' (expected gc, sl or both)");
  const auto annotations = read_annotations(args.annotations);
  if (annotations.empty()) {
    log << "eval-saliency: " << args.annotations.string() << " contains no annotations\n";
    return 1;
  }
  const TrainedModel model = load_checkpoint(args.checkpoint);
  const json clips = read_json_file(args.clips);
  std::map<std::string, json> clip_by_id;
  for (const auto& c : clips.at("clips")) clip_by_id[c.at("clip_id").get<std::string>()] = c;

  std::vector<const ExpertAnnotation*> todo;
  for (const auto& a : annotations) {
    if (!clip_by_id.count(a.clip_id)) {
      log << "eval-saliency: warning: no clip for annotation " << a.clip_id << ", skipped\n";
      continue;
    }
    todo.push_back(&a);
  }
  std::vector<std::vector<SaliencyEvalRecord>> per_clip(todo.size());
  const auto errors = parallel_for(todo.size(), config.worker_count(), [&](std::size_t i) {
    const ExpertAnnotation& ann = *todo[i];
    const json& c = clip_by_id.at(ann.clip_id);
    fs::path audio = c.at("audio").get<std::string>();
    if (audio.is_relative()) audio = args.clips.parent_path() / audio;
    const Matrix raw = dsp::extract_raw_features(load_audio(audio)).energy;
    const Matrix input = prepare_input(raw, c.at("tonic_pitch_class").get<int>(), model.config);
    const auto probs = predict_chunk(model, input);
    const int target = argmax(probs);
    const bool correct = model.vocabulary[static_cast<std::size_t>(target)] == c.at("raga_label").get<std::string>();
    const double p = probs[static_cast<std::size_t>(target)];
    const auto seconds = annotated_seconds(ann);
    if (seconds.empty()) throw Error("annotation of " + ann.clip_id + " covers no second");
    if (want_gc) {
      const auto ts = time_saliency(gradcampp_map(conv_attribution(model, input, target)));
      per_clip[i].push_back(make_saliency_record(ann.clip_id, "GC", ts.second_scores, seconds, correct, p));
    }
    if (want_sl) {
      SlimeConfig sc;
      sc.samples = config.slime_samples;
      sc.seed = config.seed;
      sc.ridge = config.slime_ridge;
      sc.sigma = config.slime_sigma;
      sc.target = config.slime_mode;
      const auto ts = slime_time_saliency(fit_explanation(model, input, target, sc), input.rows());
      per_clip[i].push_back(make_saliency_record(ann.clip_id, "SL", ts.second_scores, seconds, correct, p));
    }
  });
  std::vector<SaliencyEvalRecord> records;
  int failed = 0;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (!errors[i].empty()) {
      ++failed;
      log << "eval-saliency: " << todo[i]->clip_id << " failed: " << errors[i] << "\n";
    }
    for (auto& r : per_clip[i]) records.push_back(std::move(r));
  }
  if (records.empty()) {
    log << "eval-saliency: no clip could be evaluated\n";
    return 1;
  }
  const std::string prov = provenance_line(config);
  const auto report = saliency_report(records);
  write_text(config.out_dir / "saliency_report.txt", prov + report.to_text());
  write_text(config.out_dir / "saliency_report.csv", prov + report.to_csv());

  std::ostringstream rec_csv, bins_out;
  rec_csv << prov << "clip_id,method,correct,probability";
  for (int t = 1; t <= kMaxTopSeconds; ++t) rec_csv << ",p@" << t;
  rec_csv << '\n';
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), ",%d,%.6f", r.correct ? 1 : 0, r.probability);
    rec_csv << r.clip_id << ',' << r.method << buf;
    for (double v : r.precision) {
      std::snprintf(buf, sizeof(buf), ",%.6f", v);
      rec_csv << buf;
    }
    rec_csv << '\n';
  }
  write_text(config.out_dir / "saliency_records.csv", rec_csv.str());

  bins_out << prov << "method," << bins_csv({}).substr(0, bins_csv({}).find('\n') + 1);
  json rho = json::object();
  auto emit = [&](const std::string& name, const std::vector<SaliencyEvalRecord>& subset) {
    const auto bins = precision_accuracy_bins(subset);
    std::istringstream rows(bins_csv(bins));
    std::string line;
    std::getline(rows, line);
    while (std::getline(rows, line)) bins_out << name << ',' << line << '\n';
    rho[name] = bins_spearman(bins);
  };
  for (const auto& m : report.methods) {
    std::vector<SaliencyEvalRecord> subset;
    for (const auto& r : records) {
      if (r.method == m) subset.push_back(r);
    }
    emit(m, subset);
  }
  emit("all", records);
  write_text(config.out_dir / "precision_accuracy_bins.csv", bins_out.str());
  write_json(config.out_dir / "saliency_summary.json",
             {{"run", config.to_json()}, {"clips", todo.size() - static_cast<std::size_t>(failed)},
              {"failures", failed}, {"spearman", rho}});
  log << report.to_text();
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const RunConfig& config, std::ostream& log) {
  SyntheticCorpusOptions opts = config.corpus;
  opts.seed = config.seed;
  const DatasetManifest manifest = synthetic_manifest(opts);
  const fs::path songs_dir = config.out_dir / "songs", clips_dir = config.out_dir / "clips";
  fs::create_directories(songs_dir);
  fs::create_directories(clips_dir);
  const int jobs = config.worker_count();
  const auto song_errors = parallel_for(manifest.songs.size(), jobs, [&](std::size_t i) {
    const auto song = render_synthetic_song(opts, static_cast<int>(i));
    write_wav(songs_dir / (manifest.songs[i].song_id + ".wav"), song.clip);
  });
  DatasetManifest out_manifest = manifest;
  for (auto& s : out_manifest.songs) s.audio_path = s.song_id + ".wav";
  write_manifest(out_manifest, songs_dir / "manifest.json");

  // Annotated 30 s clips with their own seeds and tonics.
  const auto presets = synthetic_presets();
  const std::size_t n_clips = static_cast<std::size_t>(opts.classes) * static_cast<std::size_t>(config.clips_per_class);
  std::vector<SyntheticClip> rendered(n_clips);
  std::vector<int> tonics(n_clips);
  std::vector<double> noise(n_clips);
  std::vector<std::string> ids(n_clips);
  const auto clip_errors = parallel_for(n_clips, jobs, [&](std::size_t i) {
    const std::size_t cls = i / static_cast<std::size_t>(config.clips_per_class);
    const uint64_t clip_seed = opts.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1));
    tonics[i] = opts.randomize_tonic ? static_cast<int>((clip_seed >> 7) % 12) : kReferencePitchClass;
    char id[96];
    std::snprintf(id, sizeof(id), "%s_clip%03zu", presets.at(cls).raga_id.c_str(),
                  i % static_cast<std::size_t>(config.clips_per_class));
    ids[i] = id;
    SynthOptions so = opts.synth;
    if (config.clips_per_class > 1) {
      const double k = static_cast<double>(i % static_cast<std::size_t>(config.clips_per_class));
      so.noise_dbfs += (config.clip_noise_max_dbfs - so.noise_dbfs) * k / (config.clips_per_class - 1);
    }
    noise[i] = so.noise_dbfs;
    rendered[i] = generate_synthetic_clip(presets[cls], tonics[i], kClipSeconds, clip_seed, so);
    rendered[i].annotation.clip_id = ids[i];
    write_wav(clips_dir / (ids[i] + ".wav"), rendered[i].clip);
  });
  json clips = json::array();
  std::vector<ExpertAnnotation> annotations;
  int failed = 0;
  for (std::size_t i = 0; i < n_clips; ++i) {
    if (!clip_errors[i].empty()) {
      ++failed;
      log << "synth: clip " << i << " failed: " << clip_errors[i] << "\n";
      continue;
    }
    const std::size_t cls = i / static_cast<std::size_t>(config.clips_per_class);
    clips.push_back({{"clip_id", ids[i]},
                     {"raga_label", presets[cls].raga_id},
                     {"tonic_pitch_class", tonics[i]},
                     {"noise_dbfs", noise[i]},
                     {"audio", ids[i] + ".wav"}});
    annotations.push_back(rendered[i].annotation);
  }
  write_json(clips_dir / "clips.json", {{"run", config.to_json()}, {"clips", clips}});
  write_annotations(annotations, clips_dir / "annotations.json");
  for (std::size_t i = 0; i < song_errors.size(); ++i) {
    if (!song_errors[i].empty()) {
      ++failed;
      log << "synth: song " << manifest.songs[i].song_id << " failed: " << song_errors[i] << "\n";
    }
  }
  log << "synth: " << manifest.songs.size() << " songs, " << clips.size() << " annotated clips\n";
  return failed ? 1 : 0;
}

}  // namespace ragaxai::cli
