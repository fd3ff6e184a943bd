#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blockbgs/config.hpp"
#include "blockbgs/error.hpp"
#include "blockbgs/imaging.hpp"
#include "blockbgs/metrics.hpp"
#include "blockbgs/model.hpp"
#include "blockbgs/pipeline.hpp"
#include "blockbgs/synth.hpp"

namespace fs = std::filesystem;
using namespace blockbgs;

namespace {

// Config file plus per-flag overrides; flags win.
struct ConfigOptions {
  std::string file;
  std::map<std::string, std::string> overrides;
  std::optional<double> fps;
  unsigned threads = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", file, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
    cmd->add_option("--fps", fps, "frame rate; sets reinit_window to half a second");
    static const char* const keys[] = {"block_size",   "advance",        "rho",
                                       "c1",           "c2",             "vote_threshold",
                                       "reinit_area",  "reinit_window",  "training_frames",
                                       "variance_floor", "em_max_iterations", "em_tolerance",
                                       "gate",         "min_blob_area"};
    for (const char* key : keys) {
      std::string flag = "--" + std::string(key);
      std::replace(flag.begin(), flag.end(), '_', '-');
      cmd->add_option_function<std::string>(
          flag, [this, key](const std::string& v) { overrides[key] = v; }, "override " + std::string(key));
    }
  }

  Config resolve() const {
    Config cfg = file.empty() ? Config{} : load_config(file);
    if (fps) cfg.reinit_window = reinit_window_for_fps(*fps);
    for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
    cfg.validate();
    return cfg;
  }
};

// Removes files created by a command unless commit() is called.
class OutputGuard {
 public:
  void track(fs::path p) { files_.push_back(std::move(p)); }
  void commit() { files_.clear(); }
  ~OutputGuard() {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
  }

 private:
  std::vector<fs::path> files_;
};

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& glob) {
  auto files = list_sequence(dir, glob);
  if (files.empty()) throw SequenceError("no files matching '" + glob + "' in " + dir.string());
  return files;
}

std::string format(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

void print_stats(const TrainStats& stats) {
  std::printf("anchors: %zu dominant-component, %zu single-gaussian\n", stats.dominant, stats.single);
}

// ---------------------------------------------------------------------------

struct TrainCmd {
  ConfigOptions config;
  std::string frames, glob = "*.ppm", model;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "fit a background model from the head of a sequence");
    cmd->add_option("--frames", frames, "directory of P6/P5 frames")->required();
    cmd->add_option("--glob", glob, "frame filename pattern");
    cmd->add_option("--model", model, "output model file")->required();
    config.attach(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const Config cfg = config.resolve();
    auto seq = load_sequence(frames, glob);
    if (seq.size() > std::size_t(cfg.training_frames)) seq.resize(cfg.training_frames);
    TrainStats stats;
    const BackgroundModel m = train_model(seq, cfg, &stats, config.threads);
    OutputGuard guard;
    guard.track(model);
    save_model(m, model);
    guard.commit();
    std::printf("trained on %zu frames, %zu anchors\n", seq.size(), m.blocks.size());
    print_stats(stats);
  }
};

struct RunCmd {
  ConfigOptions config;
  std::string frames, glob = "*.ppm", model, masks, report;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("run", "segment a sequence and write one mask per frame");
    cmd->add_option("--frames", frames, "directory of P6/P5 frames")->required();
    cmd->add_option("--glob", glob, "frame filename pattern");
    cmd->add_option("--model", model, "pretrained model; without it the first training_frames frames train one")
        ->check(CLI::ExistingFile);
    cmd->add_option("--masks", masks, "output directory for P5 masks")->required();
    cmd->add_option("--report", report, "also write the run report to this file");
    config.attach(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const auto paths = sorted_files(frames, glob);
    const auto seq = load_sequence(frames, glob);
    RunOutput out;
    std::size_t first = 0;
    if (!model.empty()) {
      BackgroundModel m = load_model(model);
      if (!config.file.empty() || !config.overrides.empty() || config.fps) {
        // Engine parameters may be retuned; the grid comes from the model.
        Config cfg = config.resolve();
        cfg.block_size = m.config.block_size;
        cfg.advance = m.config.advance;
        m.config = cfg;
      }
      out = run_with_model(seq, std::move(m), config.threads);
    } else {
      const Config cfg = config.resolve();
      out = run_sequence(seq, cfg, config.threads);
      first = std::size_t(cfg.training_frames);
    }

    OutputGuard guard;
    fs::create_directories(masks);
    for (std::size_t k = 0; k < out.masks.size(); ++k) {
      const fs::path p = fs::path(masks) / (paths[first + k].stem().string() + ".pgm");
      guard.track(p);
      write_mask(out.masks[k], p);
    }

    std::string text;
    char line[256];
    std::snprintf(line, sizeof(line), "frames processed: %zu\n", out.report.frames_processed);
    text += line;
    text += "reinit events:";
    if (out.report.reinit_frames.empty()) text += " none";
    for (std::size_t f : out.report.reinit_frames) text += " " + std::to_string(first + f);
    text += "\n";
    std::snprintf(line, sizeof(line), "mean foreground fraction: %.6f\n", out.report.mean_fg_fraction);
    text += line;
    std::snprintf(line, sizeof(line), "training: %.3f s\nthroughput: %.2f frames/s\n",
                  out.report.train_seconds, out.report.fps());
    text += line;
    std::fputs(text.c_str(), stdout);
    if (!report.empty()) {
      guard.track(report);
      std::ofstream r(report);
      r << text;
      if (!r) throw IoError("write failed: " + report);
    }
    guard.commit();
  }
};

struct EvalMasksCmd {
  std::string masks, truth, frame_list, glob = "*.pgm";

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval-masks", "precision, recall and F-measure against ground truth");
    cmd->add_option("--masks", masks, "directory of predicted masks")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--truth", truth, "directory of ground-truth masks")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--frame-list", frame_list, "file of frame stems to score, one per line")
        ->check(CLI::ExistingFile);
    cmd->add_option("--glob", glob, "ground-truth filename pattern");
    cmd->callback([this] { run(); });
  }

  void run() {
    std::vector<std::string> stems;
    if (!frame_list.empty()) {
      std::ifstream in(frame_list);
      for (std::string s; std::getline(in, s);) {
        if (const auto hash = s.find('#'); hash != std::string::npos) s.resize(hash);
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        if (!s.empty()) stems.push_back(fs::path(s).stem().string());
      }
    } else {
      // Without a list, score every ground-truth frame that has a prediction.
      for (const auto& p : sorted_files(truth, glob))
        if (fs::exists(fs::path(masks) / (p.stem().string() + ".pgm"))) stems.push_back(p.stem().string());
    }

    double sum_f = 0, sum_p = 0, sum_r = 0;
    std::size_t scored = 0, skipped = 0;
    for (const auto& stem : stems) {
      const fs::path pred = fs::path(masks) / (stem + ".pgm");
      fs::path gt = fs::path(truth) / (stem + ".pgm");
      if (!fs::exists(gt)) {
        const auto matches = list_sequence(truth, stem + ".*");
        if (matches.empty()) throw IoError("no ground truth for frame " + stem);
        gt = matches.front();
      }
      if (!fs::exists(pred)) throw IoError("no predicted mask for frame " + stem + " in " + masks);
      const MaskGray t = load_mask(gt);
      const MaskScore s = score_mask(load_mask(pred), t);
      std::printf("%s F=%.4f P=%.4f R=%.4f\n", stem.c_str(), s.f_measure, s.precision, s.recall);
      if (t.count_foreground() == 0) {
        ++skipped;
        continue;
      }
      sum_f += s.f_measure;
      sum_p += s.precision;
      sum_r += s.recall;
      ++scored;
    }
    if (skipped) std::printf("%zu frame(s) with empty ground truth left out of the mean\n", skipped);
    if (scored == 0) throw ValidationError("no frame with foreground in its ground truth");
    std::printf("mean over %zu frame(s)\n", scored);
    std::printf("F=%.6f P=%.6f R=%.6f\n", sum_f / scored, sum_p / scored, sum_r / scored);
  }
};

struct EvalTrackingCmd {
  ConfigOptions config;
  std::vector<std::string> masks, truth;
  std::size_t first_frame = 0;
  std::string hyp_out;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval-tracking", "MOTA/MOTP of blob tracks from masks");
    cmd->add_option("--masks", masks, "mask directory (repeat for several sequences)")->required();
    cmd->add_option("--truth", truth, "ground-truth track file, one per --masks")->required();
    cmd->add_option("--first-frame", first_frame, "truth frame index of the first mask");
    cmd->add_option("--hyp-out", hyp_out, "write hypothesis tracks (single sequence only)");
    config.attach(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    if (masks.size() != truth.size()) throw ParameterError("--masks and --truth must be given in pairs");
    if (!hyp_out.empty() && masks.size() != 1) throw ParameterError("--hyp-out needs a single sequence");
    const Config cfg = config.resolve();
    double sum_mota = 0, sum_motp = 0;
    std::size_t n_mota = 0, n_motp = 0;
    for (std::size_t s = 0; s < masks.size(); ++s) {
      std::vector<std::vector<Point2>> detections;
      for (const auto& p : sorted_files(masks[s], "*.pgm"))
        detections.push_back(blobs_from_mask(load_mask(p), cfg.min_blob_area));
      const TrackSet hyps = track_blobs(detections, cfg.gate);
      const TrackSet all_truth = load_tracks(truth[s]);
      TrackSet gt;
      gt.frames.resize(detections.size());
      for (std::size_t k = 0; k < detections.size(); ++k)
        if (first_frame + k < all_truth.frames.size()) gt.frames[k] = all_truth.frames[first_frame + k];
      const MotScore score = score_tracking(gt, hyps, cfg.gate);
      if (!hyp_out.empty()) write_tracks(hyps, hyp_out, first_frame);

      std::size_t m = 0, fp = 0, mme = 0, g = 0;
      for (std::size_t t = 0; t < score.objects.size(); ++t) {
        m += score.misses[t];
        fp += score.false_positives[t];
        mme += score.mismatches[t];
        g += score.objects[t];
      }
      std::printf("%s: objects %zu, misses %zu, false positives %zu, mismatches %zu\n", masks[s].c_str(), g, m, fp,
                  mme);
      std::printf("%s: MOTA %s, MOTP %s\n", masks[s].c_str(),
                  score.mota_defined ? format("%.2f %%", 100.0 * score.mota).c_str() : "undefined",
                  score.motp_defined ? format("%.3f px", score.motp).c_str() : "undefined");
      if (score.mota_defined) {
        sum_mota += score.mota;
        ++n_mota;
      }
      if (score.motp_defined) {
        sum_motp += score.motp;
        ++n_motp;
      }
    }
    if (masks.size() > 1)
      std::printf("average over %zu sequence(s): MOTA %.2f %%, MOTP %.3f px\n", masks.size(),
                  n_mota ? 100.0 * sum_mota / n_mota : 0.0, n_motp ? sum_motp / n_motp : 0.0);
    std::printf("MOTA=%s MOTP=%s\n", n_mota ? std::to_string(sum_mota / n_mota).c_str() : "undefined",
                n_motp ? std::to_string(sum_motp / n_motp).c_str() : "undefined");
  }
};

struct BenchCmd {
  ConfigOptions config;
  std::string frames, glob = "*.ppm", truth;
  std::vector<int> advances = {1, 2, 4, 8};

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("bench", "F-measure and throughput across block advances");
    cmd->add_option("--frames", frames, "directory of P6/P5 frames")->required();
    cmd->add_option("--glob", glob, "frame filename pattern");
    cmd->add_option("--truth", truth, "directory of ground-truth masks, one per frame, same stems");
    cmd->add_option("--advances", advances, "advances to try")->delimiter(',');
    config.attach(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const Config cfg = config.resolve();
    const auto paths = sorted_files(frames, glob);
    const auto seq = load_sequence(frames, glob);
    std::vector<MaskGray> gt;
    if (!truth.empty()) {
      for (const auto& p : paths) gt.push_back(load_mask(fs::path(truth) / (p.stem().string() + ".pgm")));
    }
    std::printf("%8s %10s %12s %10s %10s\n", "advance", "blocks", "F-measure", "fps", "train s");
    for (const BenchRow& r : benchmark(seq, gt, cfg, advances, config.threads)) {
      const std::string f = r.f_measure ? std::to_string(*r.f_measure) : "-";
      std::printf("%8d %10zu %12s %10.2f %10.2f\n", r.advance, r.blocks, f.c_str(), r.fps, r.train_seconds);
    }
  }
};

struct SynthCmd {
  std::string script, out;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "synthetic sequences with exact ground truth");
    auto* render = cmd->add_subcommand("render", "render a scene script");
    render->add_option("--script", script, "scene script")->required()->check(CLI::ExistingFile);
    render->add_option("--out", out, "output directory")->required();
    render->callback([this] { run(); });
    cmd->require_subcommand(1);
  }

  void run() {
    const synth::Sequence seq = synth::render(synth::load_script(script));
    const bool existed = fs::exists(out);
    try {
      synth::write_sequence(seq, out);
    } catch (...) {
      std::error_code ec;
      if (!existed) fs::remove_all(out, ec);
      throw;
    }
    std::printf("wrote %zu frames to %s\n", seq.frames.size(), out.c_str());
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-based background subtraction"};
  app.require_subcommand(1);
  TrainCmd train_cmd;
  RunCmd run_cmd;
  EvalMasksCmd eval_masks_cmd;
  EvalTrackingCmd eval_tracking_cmd;
  BenchCmd bench_cmd;
  SynthCmd synth_cmd;
  train_cmd.attach(app);
  run_cmd.attach(app);
  eval_masks_cmd.attach(app);
  eval_tracking_cmd.attach(app);
  bench_cmd.attach(app);
  synth_cmd.attach(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::fprintf(stderr, "blockbgs: error: %s\n", msg.c_str());
    return 1;
  }
  return 0;
}
