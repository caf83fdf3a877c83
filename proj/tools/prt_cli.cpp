// Command-line front end: synthetic data, training, tracking and evaluation.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include "prt/pipeline.hpp"

namespace fs = std::filesystem;
using namespace prt;

namespace {

struct Common {
  std::string config = "default";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration, or 'default'");
  cmd->add_option("--seed", c.seed, "Run seed (falls back to $PRT_SEED, then the config)");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = load_config(c.config);
  if (c.seed) {
    cfg.seed = *c.seed;
  } else if (const char* env = std::getenv("PRT_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(ConfigError::Kind::TypeError, "PRT_SEED", "expected an unsigned integer");
    }
  }
  cfg.train.seed = cfg.seed;
  return cfg;
}

DetectorNoise parse_noise(const std::string& kind, double amount) {
  if (kind == "none") return DetectorNoise::none();
  if (kind == "jitter") return DetectorNoise::jitter(amount);
  if (kind == "dropout") return DetectorNoise::dropout(amount);
  throw CLI::ValidationError("--detector", "expected none, jitter or dropout");
}

std::vector<FrameInput> read_detections(const fs::path& det_path, const fs::path& feat_path) {
  std::vector<std::string> warnings;
  const auto dets = parse_mot(det_path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << det_path.string() << ": " << w << '\n';
  std::map<std::pair<int, int>, FeatureRecord> feats;
  for (auto& r : parse_features(feat_path)) feats.emplace(std::make_pair(r.frame, r.det), std::move(r));

  int last = 0;
  for (const auto& d : dets) last = std::max(last, d.frame);
  std::vector<FrameInput> frames(last);
  for (int f = 0; f < last; ++f) frames[f].frame = f + 1;
  for (const auto& r : dets) {
    auto& fr = frames[r.frame - 1];
    Detection d;
    d.frame = r.frame;
    d.box = r.box();
    d.confidence = r.conf;
    auto it = feats.find({r.frame, static_cast<int>(fr.detections.size())});
    if (it == feats.end()) {
      throw ParseError(0, "no feature record for frame " + std::to_string(r.frame) + " detection " +
                              std::to_string(fr.detections.size()));
    }
    d.features = it->second.features;
    d.role_logits = it->second.role;
    fr.detections.push_back(std::move(d));
  }
  return frames;
}

std::vector<TrackletRecord> records_of(const std::vector<Tracklet>& ts) {
  std::vector<TrackletRecord> out;
  for (const auto& t : ts) out.push_back(to_record(t));
  return out;
}

void print_tracking(const TrackingMetrics& m) { std::cout << tracking_table({m}); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Part-based re-identification, team affiliation, role classification and tracking"};
  app.require_subcommand(1);
  Common common;

  auto* generate_cmd = app.add_subcommand("generate", "Write a synthetic scenario bundle");
  add_common(generate_cmd, common);
  std::string out_dir = "scenario";
  int video = 0;
  std::string detector = "none";
  double amount = 0.0;
  generate_cmd->add_option("--out", out_dir, "Bundle directory");
  generate_cmd->add_option("--video", video, "Game index")->check(CLI::NonNegativeNumber);
  generate_cmd->add_option("--detector", detector, "none | jitter | dropout");
  generate_cmd->add_option("--amount", amount, "Jitter sigma in pixels or dropout probability");

  auto* train_cmd = app.add_subcommand("train", "Train the embedder on synthetic games");
  add_common(train_cmd, common);
  std::string model_path = "model.ckpt";
  train_cmd->add_option("--out", model_path, "Checkpoint path");

  auto* embed_cmd = app.add_subcommand("embed", "Embed the detections of a scenario bundle");
  add_common(embed_cmd, common);
  std::string scenario_dir, features_out = "features.txt";
  embed_cmd->add_option("--scenario", scenario_dir, "Bundle directory")->required();
  embed_cmd->add_option("--model", model_path, "Checkpoint")->required();
  embed_cmd->add_option("--out", features_out, "Feature file");

  auto* track_cmd = app.add_subcommand("track", "Online tracking of detections with features");
  add_common(track_cmd, common);
  std::string det_path, feat_path, tracks_out = "tracks.txt", tracklets_out = "tracklets.jsonl";
  track_cmd->add_option("--det", det_path, "Detections (MOT format)")->required();
  track_cmd->add_option("--features", feat_path, "Feature file")->required();
  track_cmd->add_option("--out", tracks_out, "Track output (MOT format)");
  track_cmd->add_option("--tracklets", tracklets_out, "Tracklet summaries");

  auto* merge_cmd = app.add_subcommand("merge", "Offline appearance merge of tracklets");
  add_common(merge_cmd, common);
  std::string tracks_in, tracklets_in, distance = "part";
  merge_cmd->add_option("--tracks", tracks_in, "Tracks (MOT format)")->required();
  merge_cmd->add_option("--tracklets", tracklets_in, "Tracklet summaries")->required();
  merge_cmd->add_option("--out", tracks_out, "Merged tracks");
  merge_cmd->add_option("--out-tracklets", tracklets_out, "Merged tracklet summaries");
  merge_cmd->add_option("--distance", distance, "part | foreground")->check(CLI::IsMember({"part", "foreground"}));

  auto* cluster_cmd = app.add_subcommand("cluster", "Team clustering and role voting over tracklets");
  add_common(cluster_cmd, common);
  std::string cluster_out = "teams.jsonl";
  cluster_cmd->add_option("--tracklets", tracklets_in, "Tracklet summaries")->required();
  cluster_cmd->add_option("--out", cluster_out, "Per-tracklet role and team cluster");

  auto* eval_reid_cmd = app.add_subcommand("eval-reid", "Retrieval, team and role metrics of a checkpoint");
  add_common(eval_reid_cmd, common);
  std::string report_out;
  eval_reid_cmd->add_option("--model", model_path, "Checkpoint")->required();
  eval_reid_cmd->add_option("--out", report_out, "Optional JSON report");

  auto* eval_track_cmd = app.add_subcommand("eval-track", "HOTA, CLEAR and identity metrics");
  std::string gt_path, pred_path;
  eval_track_cmd->add_option("--gt", gt_path, "Ground truth (MOT format)")->required();
  eval_track_cmd->add_option("--pred", pred_path, "Predictions (MOT format)")->required();
  eval_track_cmd->add_option("--out", report_out, "Optional JSON report");

  auto* pipeline_cmd = app.add_subcommand("pipeline", "generate, train, embed, track, merge, cluster, evaluate");
  add_common(pipeline_cmd, common);
  std::string pipeline_out;
  pipeline_cmd->add_option("--out", pipeline_out, "Run directory (default: output_dir of the config)");

  auto* report_cmd = app.add_subcommand("report", "Print a run report or compare two runs");
  std::string run_dir;
  std::vector<std::string> compare;
  report_cmd->add_option("--run", run_dir, "Run directory");
  report_cmd->add_option("--compare", compare, "Two run directories")->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return 1;
  }

  try {
    if (*generate_cmd) {
      const RunConfig cfg = resolve(common);
      DetectorNoise noise = parse_noise(detector, amount);
      noise.seed = cfg.seed;
      const Scenario sc = generate(video_config(cfg.scenario, cfg.seed, video));
      write_scenario_bundle(out_dir, sc, noise);
      std::cout << "wrote " << out_dir << " (" << sc.agents.size() << " agents, " << sc.frames.size()
                << " frames)\n";
    } else if (*train_cmd) {
      const RunConfig cfg = resolve(common);
      const ReidSplit split = make_reid_split(cfg);
      const TrainResult tr = train(cfg.train, split.train);
      save_checkpoint(model_path, tr.model);
      std::cout << "trained on " << split.train.samples.size() << " samples of " << split.train.num_identities
                << " identities; final loss " << tr.epoch_losses.back() << "\nwrote " << model_path << '\n';
    } else if (*embed_cmd) {
      const EmbedderModel model = load_checkpoint(model_path);
      const Scenario sc = generate(read_manifest(fs::path(scenario_dir) / "manifest.json"));
      const auto dets = parse_mot(fs::path(scenario_dir) / "det.txt");
      std::vector<FeatureRecord> out;
      std::vector<FeatureGrid> grids;
      std::map<int, int> per_frame;
      for (const auto& d : dets) {
        const AgentFrame* obs = sc.find(d.frame, d.id - 1);
        if (!obs) throw ParseError(0, "detection of agent " + std::to_string(d.id) + " absent in frame " +
                                          std::to_string(d.frame));
        grids.push_back(sc.grid(*obs, d.frame));
        FeatureRecord r;
        r.frame = d.frame;
        r.det = per_frame[d.frame]++;
        out.push_back(std::move(r));
      }
      const auto emb = embed_batch(model, grids);
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].features = emb[i].features;
        out[i].features.concat = Vec();
        out[i].features.global.reset();
        out[i].role = emb[i].role_logits;
      }
      write_features(fs::path(features_out), out);
      std::cout << "wrote " << out.size() << " feature records to " << features_out << '\n';
    } else if (*track_cmd) {
      const RunConfig cfg = resolve(common);
      Tracker tracker(cfg.tracker);
      for (const auto& f : read_detections(det_path, feat_path)) tracker.step(f);
      const auto tracklets = tracker.finish();
      write_mot(fs::path(tracks_out), tracklets_to_mot(tracklets));
      write_tracklets(tracklets_out, records_of(tracklets));
      std::cout << "wrote " << tracklets.size() << " tracklets to " << tracks_out << '\n';
    } else if (*merge_cmd) {
      RunConfig cfg = resolve(common);
      cfg.merge.distance = distance == "part" ? DistanceMode::PartBased : DistanceMode::ForegroundOnly;
      const auto tracklets = from_records(parse_tracklets(tracklets_in), parse_mot(fs::path(tracks_in)));
      const MergeResult merged = merge_tracklets(tracklets, cfg.merge);
      write_mot(fs::path(tracks_out), tracklets_to_mot(merged.tracklets));
      write_tracklets(tracklets_out, records_of(merged.tracklets));
      std::cout << tracklets.size() << " tracklets -> " << merged.tracklets.size() << " after "
                << merged.rounds << " merge rounds\n";
    } else if (*cluster_cmd) {
      const RunConfig cfg = resolve(common);
      const auto records = parse_tracklets(tracklets_in);
      auto tracklets = from_records(records, {});
      // One stand-in detection per tracklet carries its mean role logits.
      for (std::size_t i = 0; i < tracklets.size(); ++i) {
        Detection d;
        d.role_logits = records[i].mean_role;
        tracklets[i].detections = {d};
      }
      const auto roles = assign_roles(tracklets);
      const TeamClusters teams = assign_teams(tracklets, roles, cfg.seed);
      std::string text;
      for (std::size_t i = 0; i < tracklets.size(); ++i) {
        nlohmann::json row{{"id", tracklets[i].id}, {"role", std::string(to_string(roles[i]))}};
        row["team_cluster"] = teams.labels[i] ? nlohmann::json(*teams.labels[i]) : nlohmann::json(nullptr);
        text += row.dump() + "\n";
      }
      write_text(cluster_out, text);
      std::cout << "wrote " << tracklets.size() << " tracklet labels to " << cluster_out << '\n';
    } else if (*eval_reid_cmd) {
      const RunConfig cfg = resolve(common);
      const EmbedderModel model = load_checkpoint(model_path);
      const ReidEvaluation ev = evaluate_reid(model, make_reid_split(cfg), cfg.seed);
      PipelineReport r;
      r.reid = ev;
      std::cout << report_text(r).substr(0, report_text(r).find("\nTracking"));
      if (!report_out.empty()) write_text(report_out, report_json(r, cfg));
    } else if (*eval_track_cmd) {
      const auto gt = parse_mot(fs::path(gt_path));
      const auto pred = parse_mot(fs::path(pred_path));
      const TrackingMetrics m = evaluate_sequence(to_sequence(fs::path(pred_path).stem().string(), gt, pred));
      print_tracking(m);
      if (!report_out.empty()) {
        nlohmann::json doc{{"tracking",
                            {{"hota", m.hota}, {"deta", m.deta}, {"assa", m.assa},
                             {"mota", m.mota}, {"idf1", m.idf1}, {"id_switches", m.id_switches}}}};
        write_text(report_out, doc.dump(2) + "\n");
      }
    } else if (*pipeline_cmd) {
      const RunConfig cfg = resolve(common);
      const fs::path dir = pipeline_out.empty() ? fs::path(cfg.output_dir) : fs::path(pipeline_out);
      const PipelineReport r = run_pipeline(cfg, dir);
      std::cout << report_text(r) << "wrote " << dir.string() << '\n';
    } else if (*report_cmd) {
      if (compare.size() == 2) {
        const std::string a = read_text(fs::path(compare[0]) / "report.json");
        const std::string b = read_text(fs::path(compare[1]) / "report.json");
        std::cout << compare_reports(a, fs::path(compare[0]).filename().string(), b,
                                     fs::path(compare[1]).filename().string());
      } else if (!run_dir.empty()) {
        std::cout << read_text(fs::path(run_dir) / "report.txt");
      } else {
        std::cerr << "error: report needs --run DIR or --compare A B\n\n" << report_cmd->help();
        return 1;
      }
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
