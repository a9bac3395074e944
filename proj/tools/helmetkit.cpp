// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// helmetkit command-line tool. Exit codes: 0 success, 1 I/O error,
// 2 validation or usage error.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "helmetkit/config.hpp"
#include "helmetkit/helmetkit.hpp"
#include "helmetkit/remote.hpp"
#include "helmetkit/service.hpp"

namespace hk = helmetkit;
namespace fs = std::filesystem;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;

struct Options {
  hk::Config config;
  std::string ratios = "0.7,0.1,0.2";
  std::string bucket;
  std::string site;
  std::string classes = "all";
  std::string exclude;
  std::string endpoint = hk::RemoteOptions{}.endpoint;
  std::string weighting = "rider";
  std::int64_t quota = 1000;
  std::int64_t clip_len = hk::kDefaultClipLength;
  std::int64_t bucket_seconds = hk::kHourly;
  double fps = hk::kReferenceFps;
  double dedupe_iou = 0.5;
  double flag_threshold = 10.0;
  std::size_t batch_size = 10;
  std::size_t max_in_flight = 4;
  hk::NoiseProfile noise;
};

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw hk::ValidationError(hk::Rule::kInvalidConfig, std::string("missing required ") + flag);
  return value;
}

hk::SplitRatios parse_ratios(const std::string& s) {
  const auto parts = hk::text::split_char(s, ',');
  if (parts.size() != 3) throw hk::ValidationError(hk::Rule::kInvalidRatios, "--ratios expects train,val,test");
  return {hk::text::parse_real(parts[0], 0, "ratios"), hk::text::parse_real(parts[1], 0, "ratios"),
          hk::text::parse_real(parts[2], 0, "ratios")};
}

// Writes to <out>/<name>, or to stdout when no output directory is set.
void emit(const Options& o, const std::string& name, const std::string& content) {
  if (o.config.out_dir.empty()) {
    std::cout << content;
    return;
  }
  std::error_code ec;
  fs::create_directories(o.config.out_dir, ec);
  if (ec) throw hk::IoError("cannot create " + o.config.out_dir + ": " + ec.message());
  hk::text::atomic_write(fs::path(o.config.out_dir) / name, content);
}

std::vector<hk::Clip> annotations(const Options& o) {
  return hk::load_annotations(require(o.config.annotations, "--annotations"));
}

std::map<std::string, double> site_hours(const Options& o) {
  std::map<std::string, double> out;
  for (const hk::Site& s : hk::load_sites(require(o.config.sites, "--sites"))) out[s.site_id] = s.recorded_hours;
  return out;
}

std::vector<hk::ClipCandidate> candidates(const Options& o) {
  std::vector<hk::ClipCandidate> out;
  for (const auto& [site, hours] : site_hours(o)) {
    const auto c = hk::segment(hk::frames_for_hours(hours, o.fps), o.clip_len, site);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

void cmd_segment(const Options& o) { emit(o, "candidates.txt", hk::format_manifest(candidates(o))); }

void cmd_sample(const Options& o) {
  const auto hours = site_hours(o);
  auto pool = candidates(o);
  if (!o.config.detections.empty()) pool = hk::score(pool, hk::load_detections(o.config.detections), o.clip_len);
  if (!o.exclude.empty()) {
    std::set<std::pair<std::string, std::int64_t>> done;
    for (const auto& c : hk::parse_manifest(hk::text::read_file(o.exclude))) done.insert({c.site_id, c.start_frame});
    pool = hk::exclude(std::move(pool), done);
  }
  emit(o, "manifest.txt", hk::format_manifest(hk::select(pool, hk::allocate(hours, o.quota))));
}

void cmd_split(const Options& o) {
  const auto clips = annotations(o);
  std::vector<hk::Site> registry;
  if (!o.config.sites.empty()) registry = hk::load_sites(o.config.sites);
  emit(o, "split.txt", hk::format_split(hk::make_split(clips, o.config.ratios, o.config.seed, registry)));
}

void cmd_loso(const Options& o) {
  const auto split = hk::load_split(require(o.config.split, "--split"));
  emit(o, "split.txt", hk::format_split(hk::leave_site_out(split, require(o.site, "--site"))));
}

void cmd_evaluate(const Options& o) {
  const hk::ClassSubset subset = hk::parse_class_subset(o.classes);
  if (!o.config.replay.empty()) {
    const auto entries = hk::parse_replay(hk::text::read_file(o.config.replay));
    emit(o, "ap_report.tsv", hk::format_ap_report(hk::replay_report(entries, subset)));
    return;
  }
  const auto clips = annotations(o);
  const auto dets = hk::load_detections(require(o.config.detections, "--detections"));
  std::optional<hk::DatasetSplit> split;
  std::optional<hk::Bucket> bucket;
  if (!o.config.split.empty()) split = hk::load_split(o.config.split);
  if (!o.bucket.empty()) {
    if (!split) throw hk::ValidationError(hk::Rule::kInvalidConfig, "--bucket needs --split");
    bucket = hk::parse_bucket(o.bucket);
  }
  hk::EvalOptions eval;
  eval.iou_threshold = o.config.iou_threshold;
  eval.subset = subset;
  const hk::ApReport report = hk::evaluate(clips, dets, split ? &*split : nullptr, bucket, eval);
  if (split) {
    const auto counts = hk::bucket_counts(clips, *split);
    emit(o, "ap_report.tsv", hk::format_ap_report(report, &counts));
  } else {
    emit(o, "ap_report.tsv", hk::format_ap_report(report));
  }
}

hk::AggregateOptions aggregate_options(const Options& o) {
  hk::AggregateOptions a;
  a.confidence_threshold = o.config.confidence_threshold;
  a.dedupe_iou = o.dedupe_iou;
  a.bucket_seconds = o.bucket_seconds;
  a.weighting = o.weighting == "motorcycle" ? hk::Weighting::kMotorcycle : hk::Weighting::kRider;
  return a;
}

std::vector<hk::RateSeries> machine_series(const Options& o) {
  const auto clips = annotations(o);
  const auto dets = hk::load_detections(require(o.config.detections, "--detections"));
  return hk::aggregate(clips, dets, aggregate_options(o));
}

void cmd_rates(const Options& o) { emit(o, "rates.tsv", hk::format_series(machine_series(o))); }

void cmd_compare(const Options& o) {
  const auto machine = machine_series(o);
  const auto human = hk::human_series(hk::text::read_file(require(o.config.counts, "--counts")));
  hk::CompareOptions c;
  c.flag_threshold_pp = o.flag_threshold;
  const hk::ComparisonReport report = hk::compare_sites(human, machine, c);
  std::vector<hk::RateSeries> all = human;
  all.insert(all.end(), machine.begin(), machine.end());
  if (o.config.out_dir.empty()) {
    std::cout << hk::format_comparison(report);
    return;
  }
  emit(o, "rates.tsv", hk::format_series(all));
  emit(o, "comparison.tsv", hk::format_comparison(report));
  emit(o, "windows.tsv", hk::format_window_comparison(report));
  emit(o, "chart.svg", hk::render_chart(all));
}

void cmd_synth(const Options& o) {
  emit(o, "detections.txt", hk::format_detections(hk::synth_detect(annotations(o), o.noise)));
}

void cmd_detect(const Options& o) {
  const auto clips = annotations(o);
  const fs::path frames = require(o.config.frames_dir, "--frames");
  std::vector<hk::FrameRef> refs;
  for (const hk::Clip& c : clips) {
    for (int f = 0; f < c.frame_count; ++f) {
      char name[32];
      std::snprintf(name, sizeof name, "%06d", f);
      for (const char* ext : {".jpg", ".png"}) {
        const fs::path p = frames / c.clip_id / (std::string(name) + ext);
        if (fs::is_regular_file(p)) {
          refs.push_back({c.clip_id, f, p});
          break;
        }
      }
    }
  }
  hk::RemoteOptions r;
  r.endpoint = o.endpoint;
  r.batch_size = o.batch_size;
  r.max_in_flight = o.max_in_flight;
  auto dets = hk::remote_detect(std::move(refs), r);
  hk::validate_against_clips(dets, clips);
  emit(o, "detections.txt", hk::format_detections(std::move(dets)));
}

void cmd_stats(const Options& o) {
  const hk::DatasetStats s = hk::dataset_stats(annotations(o));
  std::string out = "clips\t" + std::to_string(s.clips) + "\ntracks\t" + std::to_string(s.tracks) + "\nboxes\t" +
                    std::to_string(s.boxes) + "\n";
  for (const auto& [label, n] : s.tracks_per_class) {
    out += label + "\t" + std::to_string(n) + "\t" + std::to_string(s.boxes_per_class.at(label)) + "\n";
  }
  emit(o, "stats.tsv", out);
}

httplib::Server* g_server = nullptr;

void cmd_serve(const Options& o) {
  const std::string frames = require(o.config.frames_dir, "--frames");
  if (!fs::is_directory(frames)) throw hk::IoError("frames directory not found: " + frames);
  std::optional<fs::path> dets;
  if (!o.config.detections.empty()) dets = o.config.detections;
  hk::AnnotationService service(require(o.config.annotations, "--annotations"), frames, dets,
                                o.config.iou_threshold);
  httplib::Server server;
  service.bind(server);
  if (!o.config.ui_dir.empty() && !server.set_mount_point("/", o.config.ui_dir)) {
    throw hk::IoError("ui directory not found: " + o.config.ui_dir);
  }
  g_server = &server;
  std::signal(SIGINT, [](int) { g_server->stop(); });
  std::signal(SIGTERM, [](int) { g_server->stop(); });
  std::cerr << "serving on http://127.0.0.1:" << o.config.port << "\n";
  if (!server.listen("127.0.0.1", o.config.port)) {
    throw hk::IoError("cannot listen on port " + std::to_string(o.config.port));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"helmetkit: motorcycle helmet-use dataset and evaluation tools"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file mirroring the long flags; flags win");
  app.fallthrough();

  Options o;
  hk::Config& c = o.config;
  app.add_option("--annotations", c.annotations, "Annotation file");
  app.add_option("--detections", c.detections, "Detection file");
  app.add_option("--frames", c.frames_dir, "Frame image directory (<dir>/<clip>/<index:06>.jpg)");
  app.add_option("--sites", c.sites, "Site registry (site city hours)");
  app.add_option("--counts", c.counts, "Human observer counts");
  app.add_option("--split", c.split, "Split file");
  app.add_option("--replay", c.replay, "Per-class AP replay table (label count ap%)");
  app.add_option("--ui", c.ui_dir, "Static annotation UI directory");
  app.add_option("--out", c.out_dir, "Output directory (default: stdout)");
  app.add_option("--seed", c.seed, "Random seed");
  app.add_option("--iou-threshold", c.iou_threshold, "IoU threshold for a true positive");
  app.add_option("--confidence", c.confidence_threshold, "Confidence threshold for rate counting");
  app.add_option("--port", c.port, "Service port");
  app.add_option("--ratios", o.ratios, "Split ratios train,val,test");
  app.add_option("--bucket", o.bucket, "Evaluate one split bucket")->check(CLI::IsMember({"train", "val", "test"}));
  app.add_option("--site", o.site, "Site id");
  app.add_option("--classes", o.classes, "all | max2riders | comma-separated labels");
  app.add_option("--quota", o.quota, "Number of clips to sample");
  app.add_option("--exclude", o.exclude, "Manifest of clips already taken");
  app.add_option("--fps", o.fps, "Recording frame rate");
  app.add_option("--clip-length", o.clip_len, "Frames per candidate clip");
  app.add_option("--bucket-seconds", o.bucket_seconds, "Rate bucket length in seconds");
  app.add_option("--weighting", o.weighting, "Rate weighting")->check(CLI::IsMember({"rider", "motorcycle"}));
  app.add_option("--dedupe-iou", o.dedupe_iou, "IoU above which same-frame detections are duplicates");
  app.add_option("--flag-threshold", o.flag_threshold, "Window disagreement flag threshold (pp)");
  app.add_option("--endpoint", o.endpoint, "Inference service base URL");
  app.add_option("--batch-size", o.batch_size, "Frames per inference request");
  app.add_option("--max-in-flight", o.max_in_flight, "Concurrent inference requests");
  app.add_option("--jitter", o.noise.jitter_sigma, "Synthetic box corner jitter sigma (px)");
  app.add_option("--miss-rate", o.noise.miss_rate, "Synthetic miss probability");
  app.add_option("--fp-rate", o.noise.fp_rate, "Synthetic false positives per frame");
  app.add_option("--confusion", o.noise.class_confusion, "Synthetic class confusion probability");
  app.add_option("--confidence-spread", o.noise.confidence_spread, "Synthetic confidence spread");

  std::function<void(const Options&)> run;
  auto sub = [&](const char* name, const char* help, void (*fn)(const Options&)) {
    app.add_subcommand(name, help)->callback([&run, fn] { run = fn; });
  };
  sub("segment", "Cut each site's recording into candidate clips", cmd_segment);
  sub("sample", "Allocate a clip quota over sites and pick the busiest clips", cmd_sample);
  sub("split", "Stratified train/val/test split", cmd_split);
  sub("loso", "Leave one site out of training", cmd_loso);
  sub("evaluate", "Per-class AP and weighted mAP", cmd_evaluate);
  sub("rates", "Helmet-use rate series from detections", cmd_rates);
  sub("compare", "Compare machine rates with human counts", cmd_compare);
  sub("synth", "Synthesize detections from annotations", cmd_synth);
  sub("detect", "Run frames through an inference service", cmd_detect);
  sub("serve", "Serve the annotation API", cmd_serve);
  sub("stats", "Dataset statistics", cmd_stats);

  try {
    app.parse(argc, argv);
  } catch (const CLI::FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    o.config.ratios = parse_ratios(o.ratios);
    o.noise.rng_seed = o.config.seed;
    o.config.validate();
    hk::validate_profile(o.noise);
    run(o);
  } catch (const hk::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const hk::ValidationError& e) {
    std::cerr << "error [" << hk::rule_id(e.rule()) << "]: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
