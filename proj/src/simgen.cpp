#include "prt/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "prt/rng.hpp"

namespace prt {

namespace {

enum : std::uint64_t {
  kTagCamera = 0xca3e7a,
  kTagKits = 0x4b175,
  kTagAgents = 0xa9e27,
  kTagMotion = 0x307105,
  kTagEvents = 0xe7e275,
  kTagGrid = 0x96d,
  kTagDetector = 0xde7ec7,
};

// Latent layout: kit colours, identity traits, role cue.
constexpr int kKitDims = 4;
constexpr int kIdentityBegin = 4;
constexpr int kIdentityDims = 4;
constexpr int kRoleBegin = 8;
constexpr double kRoleCue = 2.0;
constexpr double kMeanOcclusion = 25.0;
constexpr int kMinStay = 10;

std::vector<int> latent_dims_of_part(int part, int num_parts) {
  if (num_parts == 5) {
    static const std::vector<int> table[5] = {
        {4, 5},        // head: skin, hair
        {0, 1, 8, 9},  // upper torso: shirt, role cue
        {2, 8},        // lower torso: shorts, role cue
        {3, 6},        // legs: socks, skin
        {6, 7},        // feet: shoes
    };
    return table[part - 1];
  }
  const int k = part - 1;
  return {k % kKitDims, kIdentityBegin + k % kIdentityDims, kRoleBegin + k % 2};
}

double clamp_reflect(double x, double lo, double hi, double& v) {
  if (x < lo) {
    x = std::min(hi, 2.0 * lo - x);
    v = -v;
  } else if (x > hi) {
    x = std::max(lo, 2.0 * hi - x);
    v = -v;
  }
  return x;
}

struct Motion {
  double x, y, vx, vy;
  double x_lo, x_hi, y_lo, y_hi;
  double max_speed;
};

double box_height(const Agent& a, double foot_y, double pitch_h) {
  return a.base_height * (0.55 + 0.45 * foot_y / pitch_h);
}

}  // namespace

void ScenarioConfig::validate() const {
  auto need = [](bool ok, const char* field) {
    if (!ok) throw ConfigInvalid(std::string("scenario.") + field + " out of range");
  };
  need(n_players_per_team >= 0, "n_players_per_team");
  need(n_goalkeepers >= 0, "n_goalkeepers");
  need(n_referees >= 0, "n_referees");
  need(n_staff >= 0, "n_staff");
  need(num_agents() >= 1, "n_players_per_team");
  need(frames >= 1, "frames");
  need(pitch_width > 0.0, "pitch_width");
  need(pitch_height > 0.0, "pitch_height");
  need(occlusion_rate >= 0.0 && occlusion_rate <= 1.0, "occlusion_rate");
  need(exit_rate >= 0.0 && exit_rate <= 1.0, "exit_rate");
  need(feature_noise_sigma >= 0.0, "feature_noise_sigma");
  need(team_separation >= 0.0, "team_separation");
  need(identity_separation >= 0.0, "identity_separation");
  need(video >= 0, "video");
  need(num_parts >= 1, "num_parts");
  need(grid_rows >= num_parts, "grid_rows");
  need(grid_cols >= 3, "grid_cols");
  need(channels >= 1, "channels");
}

std::vector<int> body_template(int rows, int cols, int num_parts) {
  std::vector<int> labels(static_cast<std::size_t>(rows * cols), 0);
  if (rows == 8 && cols == 4 && num_parts == 5) {
    static const int fixed[32] = {
        0, 1, 1, 0,  //
        2, 2, 2, 2,  //
        2, 2, 2, 2,  //
        3, 3, 3, 3,  //
        0, 4, 4, 0,  //
        0, 4, 4, 0,  //
        0, 4, 4, 0,  //
        0, 5, 5, 0,
    };
    labels.assign(fixed, fixed + 32);
    return labels;
  }
  for (int r = 0; r < rows; ++r) {
    const int part = 1 + r * num_parts / rows;
    for (int c = 0; c < cols; ++c) {
      const bool side = c == 0 || c == cols - 1;
      labels[r * cols + c] = (side && r % 2 == 0) ? 0 : part;
    }
  }
  return labels;
}

Camera make_camera(int rows, int cols, int channels, int num_parts) {
  Rng rng(derive_seed({kTagCamera, static_cast<std::uint64_t>(channels),
                       static_cast<std::uint64_t>(num_parts)}));
  std::normal_distribution<double> n01(0.0, 1.0);
  Camera cam;
  cam.layout = body_template(rows, cols, num_parts);
  cam.signatures.resize(num_parts + 1, channels);
  for (Eigen::Index i = 0; i < cam.signatures.size(); ++i) cam.signatures.data()[i] = 2.0 * n01(rng);
  const double scale = 1.0 / std::sqrt(static_cast<double>(channels));
  for (int k = 1; k <= num_parts; ++k) {
    Mat a = Mat::Zero(channels, kLatentDim);
    for (int dim : latent_dims_of_part(k, num_parts)) {
      for (int c = 0; c < channels; ++c) a(c, dim) = scale * n01(rng);
    }
    cam.mixing.push_back(std::move(a));
  }
  return cam;
}

const AgentFrame* Scenario::find(int frame, int agent) const {
  if (frame < 1 || frame > static_cast<int>(frames.size())) return nullptr;
  for (const auto& obs : frames[frame - 1].agents) {
    if (obs.agent == agent) return &obs;
  }
  return nullptr;
}

FeatureGrid Scenario::grid(const AgentFrame& obs, int frame) const {
  const auto& cfg = config;
  Rng rng(derive_seed({kTagGrid, cfg.seed, static_cast<std::uint64_t>(cfg.video),
                       static_cast<std::uint64_t>(obs.agent), static_cast<std::uint64_t>(frame)}));
  std::normal_distribution<double> noise(0.0, cfg.feature_noise_sigma);
  Vec latent = agents[obs.agent].latent;
  for (Eigen::Index i = 0; i < latent.size(); ++i) latent(i) += noise(rng);

  FeatureGrid g;
  g.rows = cfg.grid_rows;
  g.cols = cfg.grid_cols;
  g.cells.resize(g.num_cells(), cfg.channels);
  g.part_labels = camera.layout;
  for (int& label : g.part_labels) {
    if (label > 0 && !obs.part_visible[label - 1]) label = 0;
  }
  std::vector<Vec> rendered(cfg.num_parts);
  for (int k = 0; k < cfg.num_parts; ++k) rendered[k] = camera.mixing[k] * latent;
  for (int cell = 0; cell < g.num_cells(); ++cell) {
    const int label = g.part_labels[cell];
    Eigen::RowVectorXd x = camera.signatures.row(label);
    if (label > 0) x += rendered[label - 1].transpose();
    for (int c = 0; c < cfg.channels; ++c) x(c) += noise(rng);
    g.cells.row(cell) = x;
  }
  return g;
}

PartFeatureSet Scenario::oracle_features(const AgentFrame& obs) const {
  const int k_parts = config.num_parts;
  std::vector<Vec> parts;
  std::vector<int> cells(k_parts, 0);
  for (int label : camera.layout) {
    if (label > 0) ++cells[label - 1];
  }
  Vec fg = Vec::Zero(config.channels);
  double weight = 0.0;
  for (int k = 0; k < k_parts; ++k) {
    parts.push_back(camera.mixing[k] * agents[obs.agent].latent);
    fg += cells[k] * parts.back();
    weight += cells[k];
  }
  if (weight > 0.0) fg /= weight;
  return PartFeatureSet::make(fg, std::move(parts), obs.part_visible);
}

Scenario generate(const ScenarioConfig& cfg) {
  cfg.validate();
  Scenario sc;
  sc.config = cfg;
  sc.camera = make_camera(cfg.grid_rows, cfg.grid_cols, cfg.channels, cfg.num_parts);
  const auto video = static_cast<std::uint64_t>(cfg.video);
  const double W = cfg.pitch_width, H = cfg.pitch_height;
  std::normal_distribution<double> n01(0.0, 1.0);

  // Kits: the two outfield kits sit team_separation apart along a random
  // direction; goalkeepers, referees and staff get their own kits.
  Rng kit_rng(derive_seed({kTagKits, cfg.seed, video}));
  auto random_unit = [&](Rng& r) {
    Vec u(kKitDims);
    for (int i = 0; i < kKitDims; ++i) u(i) = n01(r);
    return Vec(u / u.norm());
  };
  Vec base(kKitDims);
  for (int i = 0; i < kKitDims; ++i) base(i) = n01(kit_rng);
  const Vec axis = random_unit(kit_rng);
  const double ts = cfg.team_separation;
  const Vec kit_left = base + 0.5 * ts * axis;
  const Vec kit_right = base - 0.5 * ts * axis;
  const Vec kit_gk_left = base + ts * random_unit(kit_rng);
  const Vec kit_gk_right = base + ts * random_unit(kit_rng);
  const Vec kit_referee = base + ts * random_unit(kit_rng);
  const Vec kit_staff = base + ts * random_unit(kit_rng);

  Rng agent_rng(derive_seed({kTagAgents, cfg.seed, video}));
  std::uniform_real_distribution<double> height(140.0, 180.0);
  auto add_agent = [&](Role role, std::optional<Team> team, const Vec& kit) {
    Agent a;
    a.identity = static_cast<int>(sc.agents.size()) + 1;
    a.role = role;
    a.team = team;
    a.latent = Vec::Zero(kLatentDim);
    a.latent.head(kKitDims) = kit;
    for (int i = 0; i < kIdentityDims; ++i) {
      a.latent(kIdentityBegin + i) = cfg.identity_separation * n01(agent_rng);
    }
    const int r = static_cast<int>(role);
    a.latent(kRoleBegin) = (r == 1 || r == 3) ? kRoleCue : 0.0;
    a.latent(kRoleBegin + 1) = (r == 2 || r == 3) ? kRoleCue : 0.0;
    a.base_height = height(agent_rng);
    sc.agents.push_back(std::move(a));
  };
  for (int i = 0; i < cfg.n_players_per_team; ++i) add_agent(Role::Player, Team::Left, kit_left);
  for (int i = 0; i < cfg.n_players_per_team; ++i) add_agent(Role::Player, Team::Right, kit_right);
  for (int i = 0; i < cfg.n_goalkeepers; ++i) {
    const bool left = i % 2 == 0;
    add_agent(Role::Goalkeeper, left ? Team::Left : Team::Right, left ? kit_gk_left : kit_gk_right);
  }
  for (int i = 0; i < cfg.n_referees; ++i) add_agent(Role::Referee, std::nullopt, kit_referee);
  for (int i = 0; i < cfg.n_staff; ++i) add_agent(Role::Staff, std::nullopt, kit_staff);

  // Motion regions in foot coordinates.
  Rng motion_rng(derive_seed({kTagMotion, cfg.seed, video}));
  std::vector<Motion> motion;
  for (const auto& a : sc.agents) {
    Motion m{};
    m.x_lo = 0.05 * W;
    m.x_hi = 0.95 * W;
    m.y_lo = 0.3 * H;
    m.y_hi = 0.97 * H;
    m.max_speed = 5.0;
    if (a.role == Role::Goalkeeper) {
      const bool left = a.team == Team::Left;
      m.x_lo = left ? 0.03 * W : 0.82 * W;
      m.x_hi = left ? 0.18 * W : 0.97 * W;
      m.max_speed = 2.5;
    } else if (a.role == Role::Referee) {
      m.max_speed = 4.0;
    } else if (a.role == Role::Staff) {
      m.y_lo = 0.9 * H;
      m.max_speed = 1.0;
    }
    std::uniform_real_distribution<double> ux(m.x_lo, m.x_hi), uy(m.y_lo, m.y_hi);
    m.x = ux(motion_rng);
    m.y = uy(motion_rng);
    m.vx = 0.5 * m.max_speed * n01(motion_rng);
    m.vy = 0.5 * m.max_speed * n01(motion_rng);
    motion.push_back(m);
  }

  Rng event_rng(derive_seed({kTagEvents, cfg.seed, video}));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> occ_len(10, 40), exit_len(40, 100);
  const double rate = cfg.occlusion_rate;
  const double p_occlusion = rate >= 1.0 ? 1.0 : rate / (kMeanOcclusion * (1.0 - rate));
  const int n_agents = static_cast<int>(sc.agents.size());
  std::vector<int> exit_until(n_agents, 0), occluded_until(n_agents, 0);
  std::vector<std::vector<std::uint8_t>> hidden(n_agents);
  const int k_parts = cfg.num_parts;

  for (int f = 1; f <= cfg.frames; ++f) {
    ScenarioFrame frame;
    frame.frame = f;
    for (int i = 0; i < n_agents; ++i) {
      Motion& m = motion[i];
      if (f > 1) {
        m.vx = 0.97 * m.vx + 0.4 * n01(motion_rng);
        m.vy = 0.97 * m.vy + 0.4 * n01(motion_rng);
        const double speed = std::hypot(m.vx, m.vy);
        if (speed > m.max_speed) {
          m.vx *= m.max_speed / speed;
          m.vy *= m.max_speed / speed;
        }
        m.x = clamp_reflect(m.x + m.vx, m.x_lo, m.x_hi, m.vx);
        m.y = clamp_reflect(m.y + m.vy, m.y_lo, m.y_hi, m.vy);
      }

      // An agent stays in view for a while between exits, and never re-enters
      // right before the end of the sequence.
      if (f > exit_until[i] + kMinStay && f > kMinStay && u01(event_rng) < cfg.exit_rate) {
        const int last = std::min(cfg.frames, f + exit_len(event_rng) - 1);
        if (last == cfg.frames || last + kMinStay <= cfg.frames) {
          exit_until[i] = last;
          occluded_until[i] = 0;
          sc.events.push_back({ScenarioEvent::Kind::Exit, i, f, last, {}});
        }
      }
      if (f <= exit_until[i]) continue;

      if (f > occluded_until[i] && k_parts > 1 && p_occlusion > 0.0 && u01(event_rng) < p_occlusion) {
        const int last = std::min(cfg.frames, f + occ_len(event_rng) - 1);
        std::vector<std::uint8_t> mask(k_parts, 0);
        // Mostly lower-body occlusions; at least one part always stays visible.
        if (u01(event_rng) < 0.7) {
          std::uniform_int_distribution<int> count(1, std::max(1, std::min(3, k_parts - 1)));
          const int n = count(event_rng);
          for (int k = k_parts - n; k < k_parts; ++k) mask[k] = 1;
        } else {
          std::uniform_int_distribution<int> count(1, std::max(1, std::min(2, k_parts - 1)));
          const int n = count(event_rng);
          for (int k = 0; k < n; ++k) mask[k] = 1;
        }
        occluded_until[i] = last;
        hidden[i] = mask;
        sc.events.push_back({ScenarioEvent::Kind::Occlusion, i, f, last, mask});
      }

      AgentFrame obs;
      obs.agent = i;
      const double h = box_height(sc.agents[i], m.y, H);
      const double w = 0.4 * h;
      obs.box = {m.x - 0.5 * w, m.y - h, w, h};
      obs.part_visible.assign(k_parts, 1);
      if (f <= occluded_until[i]) {
        for (int k = 0; k < k_parts; ++k) obs.part_visible[k] = hidden[i][k] ? 0 : 1;
      }
      frame.agents.push_back(std::move(obs));
    }
    sc.frames.push_back(std::move(frame));
  }
  return sc;
}

ReidSplit to_reid_dataset(const Scenario& scenario, int stride) {
  return to_reid_dataset(std::vector<Scenario>{scenario}, stride);
}

ReidSplit to_reid_dataset(const std::vector<Scenario>& scenarios, int stride) {
  if (stride < 1) throw std::invalid_argument("sampling stride must be >= 1");
  ReidSplit out;
  for (const auto& sc : scenarios) {
    const int video = sc.config.video;
    // Alternate identities into train/test within each group.
    std::vector<bool> is_train(sc.agents.size(), false);
    std::map<int, int> seen;  // group -> count
    for (std::size_t i = 0; i < sc.agents.size(); ++i) {
      const auto& a = sc.agents[i];
      const int group = a.role == Role::Player ? static_cast<int>(*a.team) : 2;
      is_train[i] = seen[group]++ % 2 == 0;
    }
    std::vector<std::vector<int>> present(sc.agents.size());
    for (const auto& fr : sc.frames) {
      for (const auto& obs : fr.agents) present[obs.agent].push_back(fr.frame);
    }
    for (std::size_t i = 0; i < sc.agents.size(); ++i) {
      const auto& a = sc.agents[i];
      const int train_label = is_train[i] ? out.train.num_identities++ : -1;
      int taken = 0;
      const auto& frames = present[i];
      const int n_samples = (static_cast<int>(frames.size()) + stride - 1) / stride;
      for (std::size_t j = 0; j < frames.size(); j += static_cast<std::size_t>(stride)) {
        const AgentFrame* obs = sc.find(frames[j], static_cast<int>(i));
        LabeledGrid s;
        s.grid = sc.grid(*obs, frames[j]);
        s.team = a.team;
        s.role = a.role;
        s.video = video;
        s.frame = frames[j];
        if (is_train[i]) {
          s.identity = train_label;
          out.train.samples.push_back(std::move(s));
        } else {
          s.identity = global_identity(video, a.identity);
          const bool query = n_samples > 1 && taken % 5 == 0;
          (query ? out.query : out.gallery).push_back(std::move(s));
        }
        ++taken;
      }
    }
  }
  return out;
}

BoundingBox jitter_box(const BoundingBox& b, double sigma, Rng& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  BoundingBox j = b;
  j.x += n(rng);
  j.y += n(rng);
  j.w = std::max(1.0, j.w + n(rng));
  j.h = std::max(1.0, j.h + n(rng));
  return j;
}

TrackingStream to_tracking_input(const Scenario& scenario, const DetectorNoise& noise) {
  Rng rng(derive_seed({kTagDetector, noise.seed, scenario.config.seed,
                       static_cast<std::uint64_t>(scenario.config.video)}));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  TrackingStream out;
  for (const auto& fr : scenario.frames) {
    FrameInput in;
    in.frame = fr.frame;
    for (const auto& obs : fr.agents) {
      const Agent& a = scenario.agents[obs.agent];
      out.gt.push_back({fr.frame, a.identity, obs.box});
      if (noise.kind == DetectorNoise::Kind::Dropout && u01(rng) < noise.amount) continue;
      Detection d;
      d.frame = fr.frame;
      d.box = noise.kind == DetectorNoise::Kind::Jitter ? jitter_box(obs.box, noise.amount, rng) : obs.box;
      d.confidence = 1.0;
      d.truth = GroundTruthLabel{a.identity, a.team, a.role};
      in.detections.push_back(std::move(d));
    }
    out.frames.push_back(std::move(in));
  }
  return out;
}

}  // namespace prt
