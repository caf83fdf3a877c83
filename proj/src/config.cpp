#include "prt/config.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <set>

#include "prt/io.hpp"

namespace prt {

namespace {

using json = nlohmann::json;
using Kind = ConfigError::Kind;

// Walks one JSON object, consuming known keys and rejecting the rest.
class Section {
public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(Kind::TypeError, path_.empty() ? "<root>" : path_, "expected an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) throw ConfigError(Kind::UnknownKey, full(key), "unknown key");
    }
  }

  void real(const char* key, double& out, const std::function<bool(double)>& ok) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_number()) throw ConfigError(Kind::TypeError, full(key), "expected a number");
    const double x = v->get<double>();
    if (!ok(x)) throw ConfigError(Kind::RangeError, full(key), "value out of range");
    out = x;
  }
  void integer(const char* key, int& out, const std::function<bool(long long)>& ok) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_number_integer()) throw ConfigError(Kind::TypeError, full(key), "expected an integer");
    const long long x = v->get<long long>();
    if (!ok(x) || x < INT32_MIN || x > INT32_MAX) throw ConfigError(Kind::RangeError, full(key), "value out of range");
    out = static_cast<int>(x);
  }
  void seed(const char* key, std::uint64_t& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_number_integer()) throw ConfigError(Kind::TypeError, full(key), "expected an integer");
    if (v->is_number_unsigned()) {
      out = v->get<std::uint64_t>();
    } else {
      const long long x = v->get<long long>();
      if (x < 0) throw ConfigError(Kind::RangeError, full(key), "seed must be >= 0");
      out = static_cast<std::uint64_t>(x);
    }
  }
  void boolean(const char* key, bool& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_boolean()) throw ConfigError(Kind::TypeError, full(key), "expected a boolean");
    out = v->get<bool>();
  }
  void string(const char* key, std::string& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_string()) throw ConfigError(Kind::TypeError, full(key), "expected a string");
    out = v->get<std::string>();
  }
  template <typename E>
  void choice(const char* key, E& out, const std::map<std::string, E>& options) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_string()) throw ConfigError(Kind::TypeError, full(key), "expected a string");
    auto it = options.find(v->get<std::string>());
    if (it == options.end()) throw ConfigError(Kind::RangeError, full(key), "unknown option");
    out = it->second;
  }
  const json* child(const char* key) { return get(key); }
  std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
  const json* get(const char* key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

auto non_negative = [](double x) { return x >= 0.0; };
auto positive = [](double x) { return x > 0.0; };
auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
auto at_least = [](long long lo) { return [lo](long long x) { return x >= lo; }; };

const std::map<std::string, EmaMode> kEmaModes{{"literal", EmaMode::Literal}, {"normalized", EmaMode::Normalized}};
const std::map<std::string, DistanceMode> kDistances{{"part", DistanceMode::PartBased},
                                                     {"foreground", DistanceMode::ForegroundOnly}};
const std::map<std::string, DetectorNoise::Kind> kNoise{{"none", DetectorNoise::Kind::None},
                                                        {"jitter", DetectorNoise::Kind::Jitter},
                                                        {"dropout", DetectorNoise::Kind::Dropout}};

template <typename E>
std::string name_of(E value, const std::map<std::string, E>& options) {
  for (const auto& [name, v] : options) {
    if (v == value) return name;
  }
  return {};
}

void read_scenario(const json& node, const std::string& path, ScenarioConfig& s) {
  Section sec(node, path);
  sec.integer("n_players_per_team", s.n_players_per_team, at_least(0));
  sec.integer("n_goalkeepers", s.n_goalkeepers, at_least(0));
  sec.integer("n_referees", s.n_referees, at_least(0));
  sec.integer("n_staff", s.n_staff, at_least(0));
  sec.integer("frames", s.frames, at_least(1));
  sec.real("pitch_width", s.pitch_width, positive);
  sec.real("pitch_height", s.pitch_height, positive);
  sec.real("occlusion_rate", s.occlusion_rate, unit);
  sec.real("exit_rate", s.exit_rate, unit);
  sec.real("feature_noise_sigma", s.feature_noise_sigma, non_negative);
  sec.real("team_separation", s.team_separation, non_negative);
  sec.real("identity_separation", s.identity_separation, non_negative);
  sec.seed("seed", s.seed);
  sec.integer("video", s.video, at_least(0));
  sec.integer("grid_rows", s.grid_rows, at_least(1));
  sec.integer("grid_cols", s.grid_cols, at_least(3));
  sec.integer("channels", s.channels, at_least(1));
  sec.integer("num_parts", s.num_parts, at_least(1));
}

json scenario_json(const ScenarioConfig& s) {
  return json{{"n_players_per_team", s.n_players_per_team},
              {"n_goalkeepers", s.n_goalkeepers},
              {"n_referees", s.n_referees},
              {"n_staff", s.n_staff},
              {"frames", s.frames},
              {"pitch_width", s.pitch_width},
              {"pitch_height", s.pitch_height},
              {"occlusion_rate", s.occlusion_rate},
              {"exit_rate", s.exit_rate},
              {"feature_noise_sigma", s.feature_noise_sigma},
              {"team_separation", s.team_separation},
              {"identity_separation", s.identity_separation},
              {"seed", s.seed},
              {"video", s.video},
              {"grid_rows", s.grid_rows},
              {"grid_cols", s.grid_cols},
              {"channels", s.channels},
              {"num_parts", s.num_parts}};
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(Kind::TypeError, "<root>", std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  RunConfig cfg;
  const json doc = json_text.find_first_not_of(" \t\r\n") == std::string::npos ? json::object() : parse_json(json_text);
  Section root(doc, "");
  root.seed("seed", cfg.seed);
  root.string("output_dir", cfg.output_dir);
  if (const json* n = root.child("scenario")) read_scenario(*n, "scenario", cfg.scenario);
  if (const json* n = root.child("benchmark")) {
    Section sec(*n, "benchmark");
    sec.integer("videos", cfg.benchmark.videos, at_least(1));
    sec.integer("stride", cfg.benchmark.stride, at_least(1));
    if (const json* d = sec.child("detector")) {
      Section det(*d, "benchmark.detector");
      det.choice("kind", cfg.benchmark.detector.kind, kNoise);
      det.real("amount", cfg.benchmark.detector.amount, non_negative);
      if (cfg.benchmark.detector.kind == DetectorNoise::Kind::Dropout && cfg.benchmark.detector.amount > 1.0) {
        throw ConfigError(Kind::RangeError, "benchmark.detector.amount", "dropout probability above 1");
      }
    }
  }
  if (const json* n = root.child("train")) {
    Section sec(*n, "train");
    auto& t = cfg.train;
    sec.integer("epochs", t.epochs, at_least(1));
    sec.integer("batches_per_epoch", t.batches_per_epoch, at_least(1));
    sec.integer("samples_per_identity", t.samples_per_identity, at_least(2));
    sec.real("base_lr", t.base_lr, positive);
    sec.integer("warmup_epochs", t.warmup_epochs, at_least(0));
    if (const json* d = sec.child("decay_epochs")) {
      if (!d->is_array() || d->size() != 2 || !(*d)[0].is_number_integer() || !(*d)[1].is_number_integer()) {
        throw ConfigError(Kind::TypeError, "train.decay_epochs", "expected two integers");
      }
      t.decay_epochs = {(*d)[0].get<int>(), (*d)[1].get<int>()};
      if (t.decay_epochs[0] < 0 || t.decay_epochs[1] < t.decay_epochs[0]) {
        throw ConfigError(Kind::RangeError, "train.decay_epochs", "expected 0 <= first <= second");
      }
    }
    sec.integer("embed_dim", t.embed_dim, at_least(1));
    sec.integer("num_parts", t.num_parts, at_least(1));
  }
  if (const json* n = root.child("loss")) {
    Section sec(*n, "loss");
    auto& l = cfg.train.loss;
    sec.real("lambda_pa", l.weights.pa, non_negative);
    sec.real("lambda_reid", l.weights.reid, non_negative);
    sec.real("lambda_team", l.weights.team, non_negative);
    sec.real("lambda_role", l.weights.role, non_negative);
    sec.real("reid_margin", l.reid_triplet.margin, non_negative);
    sec.real("team_margin", l.team_triplet.margin, non_negative);
    sec.real("focal_gamma", l.focal_gamma, non_negative);
  }
  if (const json* n = root.child("tracker")) {
    Section sec(*n, "tracker");
    auto& t = cfg.tracker;
    sec.real("alpha", t.alpha, unit);
    sec.real("appearance_weight", t.appearance_weight, unit);
    sec.real("match_threshold", t.match_threshold, non_negative);
    sec.real("iou_gate", t.iou_gate, unit);
    sec.integer("max_age", t.max_age, at_least(0));
    sec.integer("n_init", t.n_init, at_least(1));
    sec.choice("ema_mode", t.ema_mode, kEmaModes);
  }
  if (const json* n = root.child("merge")) {
    Section sec(*n, "merge");
    auto& m = cfg.merge;
    sec.real("merge_threshold", m.merge_threshold, positive);
    sec.boolean("allow_temporal_overlap", m.allow_temporal_overlap);
    sec.integer("max_rounds", m.max_rounds, at_least(0));
    sec.choice("distance", m.distance, kDistances);
  }
  cfg.train.seed = cfg.seed;
  cfg.train.num_parts = cfg.scenario.num_parts;
  return cfg;
}

RunConfig load_config(const std::string& path_or_default) {
  if (path_or_default == "default") return parse_config("{}");
  return parse_config(read_text(path_or_default));
}

std::string dump_config(const RunConfig& c) {
  const auto& t = c.train;
  const auto& l = t.loss;
  json doc{
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"scenario", scenario_json(c.scenario)},
      {"benchmark",
       {{"videos", c.benchmark.videos},
        {"stride", c.benchmark.stride},
        {"detector", {{"kind", name_of(c.benchmark.detector.kind, kNoise)}, {"amount", c.benchmark.detector.amount}}}}},
      {"train",
       {{"epochs", t.epochs},
        {"batches_per_epoch", t.batches_per_epoch},
        {"samples_per_identity", t.samples_per_identity},
        {"base_lr", t.base_lr},
        {"warmup_epochs", t.warmup_epochs},
        {"decay_epochs", {t.decay_epochs[0], t.decay_epochs[1]}},
        {"embed_dim", t.embed_dim},
        {"num_parts", t.num_parts}}},
      {"loss",
       {{"lambda_pa", l.weights.pa},
        {"lambda_reid", l.weights.reid},
        {"lambda_team", l.weights.team},
        {"lambda_role", l.weights.role},
        {"reid_margin", l.reid_triplet.margin},
        {"team_margin", l.team_triplet.margin},
        {"focal_gamma", l.focal_gamma}}},
      {"tracker",
       {{"alpha", c.tracker.alpha},
        {"appearance_weight", c.tracker.appearance_weight},
        {"match_threshold", c.tracker.match_threshold},
        {"iou_gate", c.tracker.iou_gate},
        {"max_age", c.tracker.max_age},
        {"n_init", c.tracker.n_init},
        {"ema_mode", name_of(c.tracker.ema_mode, kEmaModes)}}},
      {"merge",
       {{"merge_threshold", c.merge.merge_threshold},
        {"allow_temporal_overlap", c.merge.allow_temporal_overlap},
        {"max_rounds", c.merge.max_rounds},
        {"distance", name_of(c.merge.distance, kDistances)}}},
  };
  return doc.dump(2) + "\n";
}

std::string scenario_to_json(const ScenarioConfig& cfg) { return scenario_json(cfg).dump(2) + "\n"; }

ScenarioConfig scenario_from_json(const std::string& json_text) {
  ScenarioConfig cfg;
  read_scenario(parse_json(json_text), "scenario", cfg);
  return cfg;
}

}  // namespace prt
