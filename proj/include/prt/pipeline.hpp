#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prt/config.hpp"
#include "prt/embedder.hpp"
#include "prt/io.hpp"
#include "prt/merge.hpp"
#include "prt/reid_eval.hpp"
#include "prt/simgen.hpp"
#include "prt/trackeval.hpp"
#include "prt/tracker.hpp"

namespace prt {

/// Scenario config of synthetic game `video` under a run seed.
ScenarioConfig video_config(const ScenarioConfig& base, std::uint64_t seed, int video);
std::vector<Scenario> make_videos(const ScenarioConfig& base, std::uint64_t seed, int first_video, int count);

struct ReidEvaluation {
  RetrievalMetrics reid;
  RetrievalMetrics team;
  RoleMetrics role;
  double cluster_accuracy = 0.0;  // mean over videos of two-cluster team accuracy
};

RetrievalSet embed_retrieval(const EmbedderModel& model, const ReidSplit& split);
ReidEvaluation evaluate_reid(const EmbedderModel& model, const ReidSplit& split, std::uint64_t seed);

/// Per video: two-cluster k-means over the player samples of the test split.
double team_cluster_accuracy(const EmbedderModel& model, const ReidSplit& split, std::uint64_t seed);

struct ReidBenchmark {
  ReidSplit split;
  TrainResult training;
  ReidEvaluation eval;
};

/// Generates cfg.benchmark.videos games, trains on their training identities
/// and evaluates on the held-out identities.
ReidBenchmark run_reid_benchmark(const RunConfig& cfg);
ReidSplit make_reid_split(const RunConfig& cfg);

/// Fills features and role logits of every detection: from the model when
/// given, otherwise the scenario's noise-free appearance and one-hot roles.
void attach_features(TrackingStream& stream, const Scenario& scenario, const EmbedderModel* model);

enum class MergeMode { None, PartBased, ForegroundOnly };

struct TrackingRun {
  std::vector<Tracklet> online;  // tracker output
  std::vector<Tracklet> final;   // after merging
  std::vector<MotRecord> mot;
  TrackingMetrics metrics;
  std::vector<Role> roles;
  double role_accuracy = 0.0;
  double team_accuracy = 0.0;  // 0 when clustering was impossible
};

SequenceResult to_sequence(const std::string& name, const std::vector<GroundTruthRow>& gt,
                           const std::vector<MotRecord>& pred);
SequenceResult to_sequence(const std::string& name, const std::vector<MotRecord>& gt,
                           const std::vector<MotRecord>& pred);

TrackingRun run_tracking(const Scenario& scenario, const TrackingStream& stream, const TrackerConfig& tracker,
                         MergeConfig merge, MergeMode mode, std::uint64_t seed);

struct PipelineReport {
  ReidEvaluation reid;
  TrackingMetrics tracking;
  TrackingMetrics tracking_online;
  double tracking_team_accuracy = 0.0;
  double tracking_role_accuracy = 0.0;
  int tracklets_online = 0;
  int tracklets_final = 0;
};

std::string report_text(const PipelineReport& r);
std::string report_json(const PipelineReport& r, const RunConfig& cfg);

/// generate -> train -> embed -> track -> merge -> cluster -> evaluate.
/// Writes report.txt, report.json, tracks.txt, tracks_online.txt, model.ckpt
/// and config.json into `out_dir`.
PipelineReport run_pipeline(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Side-by-side tracking table of two report.json documents.
std::string compare_reports(const std::string& json_a, const std::string& name_a,
                            const std::string& json_b, const std::string& name_b);

std::string tracking_table(const std::vector<TrackingMetrics>& rows);

}  // namespace prt
