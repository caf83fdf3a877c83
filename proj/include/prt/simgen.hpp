#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "prt/core.hpp"
#include "prt/embedder.hpp"
#include "prt/tracker.hpp"

namespace prt {

struct ScenarioConfig {
  int n_players_per_team = 10;
  int n_goalkeepers = 2;  // one per team
  int n_referees = 2;
  int n_staff = 1;
  int frames = 750;
  double pitch_width = 1920.0;
  double pitch_height = 1080.0;
  double occlusion_rate = 0.1;  // stationary fraction of agent-frames under occlusion
  double exit_rate = 0.002;     // per agent-frame probability of leaving the view
  double feature_noise_sigma = 0.3;
  double team_separation = 3.0;
  double identity_separation = 1.5;
  std::uint64_t seed = 0;
  int video = 0;

  // Observation layout.
  int grid_rows = 8;
  int grid_cols = 4;
  int channels = 16;
  int num_parts = 5;

  int num_agents() const { return 2 * n_players_per_team + n_goalkeepers + n_referees + n_staff; }
  /// Throws ConfigInvalid naming the offending field.
  void validate() const;
  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

inline constexpr int kLatentDim = 10;

struct Agent {
  int identity = 0;  // 1-based, unique within the scenario
  Role role = Role::Player;
  std::optional<Team> team;
  Vec latent;  // kit centroid + identity offset
  double base_height = 100.0;
  friend bool operator==(const Agent&, const Agent&) = default;
};

struct AgentFrame {
  int agent = 0;  // index into Scenario::agents
  BoundingBox box;
  std::vector<std::uint8_t> part_visible;  // K bits
  friend bool operator==(const AgentFrame&, const AgentFrame&) = default;
};

struct ScenarioFrame {
  int frame = 1;
  std::vector<AgentFrame> agents;  // agents in view, by agent index
  friend bool operator==(const ScenarioFrame&, const ScenarioFrame&) = default;
};

struct ScenarioEvent {
  enum class Kind { Occlusion, Exit };
  Kind kind = Kind::Occlusion;
  int agent = 0;
  int first = 0;
  int last = 0;
  std::vector<std::uint8_t> hidden_parts;  // K bits, occlusions only
  friend bool operator==(const ScenarioEvent&, const ScenarioEvent&) = default;
};

/// Fixed rendering model shared by every scenario with the same layout:
/// one signature per label (background, parts) and one latent-to-channel
/// map per part.
struct Camera {
  Mat signatures;           // (K+1) x C
  std::vector<Mat> mixing;  // K entries, C x kLatentDim
  std::vector<int> layout;  // body template labels
  friend bool operator==(const Camera&, const Camera&) = default;
};

Camera make_camera(int rows, int cols, int channels, int num_parts);

struct Scenario {
  ScenarioConfig config;
  Camera camera;
  std::vector<Agent> agents;
  std::vector<ScenarioFrame> frames;  // frames[f - 1] is frame f
  std::vector<ScenarioEvent> events;

  /// Observation grid of one agent in one frame. Rendered on demand from a
  /// seed derived from (scenario seed, agent, frame).
  FeatureGrid grid(const AgentFrame& obs, int frame) const;
  /// Noise-free appearance of one observation (D = channels). Embeddings
  /// describe the agent and ignore occlusion; only the visibility bits follow
  /// the observation.
  PartFeatureSet oracle_features(const AgentFrame& obs) const;
  /// The observation of `agent` (index) in `frame`, or nullptr when absent.
  const AgentFrame* find(int frame, int agent) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

Scenario generate(const ScenarioConfig& cfg);

/// Part label of every cell of the unoccluded body template.
std::vector<int> body_template(int rows, int cols, int num_parts);

struct ReidSplit {
  TrainingSet train;               // contiguous identity labels
  std::vector<LabeledGrid> query;  // identity = scenario-global label
  std::vector<LabeledGrid> gallery;
};

/// Identity label used outside training: video * 1000 + agent identity.
inline int global_identity(int video, int identity) { return video * 1000 + identity; }

/// Keeps every `stride`-th appearance of each identity. Train and test
/// identities are disjoint; every fifth test sample is a query.
ReidSplit to_reid_dataset(const Scenario& scenario, int stride);
/// Concatenates several scenarios; training labels stay contiguous.
ReidSplit to_reid_dataset(const std::vector<Scenario>& scenarios, int stride);

struct DetectorNoise {
  enum class Kind { None, Jitter, Dropout };
  Kind kind = Kind::None;
  double amount = 0.0;  // jitter sigma in pixels or dropout probability
  std::uint64_t seed = 0;

  static DetectorNoise none() { return {}; }
  static DetectorNoise jitter(double sigma, std::uint64_t seed = 0) { return {Kind::Jitter, sigma, seed}; }
  static DetectorNoise dropout(double p, std::uint64_t seed = 0) { return {Kind::Dropout, p, seed}; }
};

struct GroundTruthRow {
  int frame = 0;
  int id = 0;
  BoundingBox box;
};

struct TrackingStream {
  std::vector<FrameInput> frames;
  std::vector<GroundTruthRow> gt;
};

/// Frames 1..F with one detection per agent in view (unless dropped). The
/// truth label's identity is the agent identity, so agent index = identity-1.
TrackingStream to_tracking_input(const Scenario& scenario, const DetectorNoise& noise = {});

BoundingBox jitter_box(const BoundingBox& b, double sigma, Rng& rng);

}  // namespace prt
