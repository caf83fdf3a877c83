#include "prt/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "prt/config.hpp"

namespace prt {

namespace {

using json = nlohmann::json;

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* name) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(line, std::string("bad ") + name + " field '" + std::string(field) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ParseError(line, std::string("non-finite ") + name);
  }
  return value;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void append_vector(std::string& s, const Vec& v) {
  s += '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_fixed9(v(i));
  }
  s += ']';
}

Vec read_vector(const json& node, std::size_t dim, std::size_t line, const char* name) {
  if (!node.is_array() || node.size() != dim) {
    throw ParseError(line, std::string(name) + " must hold " + std::to_string(dim) + " numbers");
  }
  Vec v(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    if (!node[i].is_number()) throw ParseError(line, std::string(name) + " holds a non-number");
    v(static_cast<Eigen::Index>(i)) = node[i].get<double>();
  }
  return v;
}

const json& field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  return *it;
}

int int_field(const json& obj, const char* key, std::size_t line) {
  const json& v = field(obj, key, line);
  if (!v.is_number_integer()) throw ParseError(line, std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

void append_appearance(std::string& s, const PartFeatureSet& f) {
  s += "\"K\":" + std::to_string(f.num_parts());
  s += ",\"D\":" + std::to_string(f.dim());
  s += ",\"fg\":";
  append_vector(s, f.foreground);
  s += ",\"parts\":[";
  for (int k = 0; k < f.num_parts(); ++k) {
    if (k) s += ',';
    append_vector(s, f.parts[k]);
  }
  s += "],\"vis\":[";
  for (std::size_t i = 0; i < f.visibility.size(); ++i) {
    if (i) s += ',';
    s += f.visibility[i] ? '1' : '0';
  }
  s += ']';
}

PartFeatureSet read_appearance(const json& obj, std::size_t line) {
  const int k = int_field(obj, "K", line);
  const int d = int_field(obj, "D", line);
  if (k < 1 || d < 1) throw ParseError(line, "K and D must be positive");
  PartFeatureSet f;
  f.foreground = read_vector(field(obj, "fg", line), d, line, "fg");
  const json& parts = field(obj, "parts", line);
  if (!parts.is_array() || parts.size() != static_cast<std::size_t>(k)) {
    throw ParseError(line, "parts must hold K vectors");
  }
  for (const auto& p : parts) f.parts.push_back(read_vector(p, d, line, "parts"));
  const json& vis = field(obj, "vis", line);
  if (!vis.is_array() || vis.size() != static_cast<std::size_t>(k + 1)) {
    throw ParseError(line, "vis must hold K+1 bits");
  }
  for (const auto& b : vis) {
    if (!b.is_number_integer() || (b.get<int>() != 0 && b.get<int>() != 1)) {
      throw ParseError(line, "visibility bits must be 0 or 1");
    }
    f.visibility.push_back(static_cast<std::uint8_t>(b.get<int>()));
  }
  return f;
}

void append_role(std::string& s, const RoleLogits& r) {
  s += "\"role\":[";
  for (int i = 0; i < kNumRoles; ++i) {
    if (i) s += ',';
    s += format_fixed9(r[i]);
  }
  s += ']';
}

RoleLogits read_role(const json& obj, std::size_t line) {
  const Vec v = read_vector(field(obj, "role", line), kNumRoles, line, "role");
  RoleLogits r{};
  for (int i = 0; i < kNumRoles; ++i) r[i] = v(i);
  return r;
}

template <typename F>
void for_each_json_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(number, std::string("malformed record: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(number, "record is not an object");
    f(obj, number);
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_mot_line(const MotRecord& r) {
  std::string s;
  s += std::to_string(r.frame) + ',' + std::to_string(r.id) + ',';
  s += format_double(r.left) + ',' + format_double(r.top) + ',';
  s += format_double(r.width) + ',' + format_double(r.height) + ',';
  s += format_double(r.conf) + ',' + std::to_string(r.class_id) + ',' + format_double(r.visibility);
  return s;
}

void write_mot(std::ostream& out, const std::vector<MotRecord>& records) {
  for (const auto& r : records) out << format_mot_line(r) << '\n';
}

void write_mot(const std::filesystem::path& path, const std::vector<MotRecord>& records) {
  auto out = open_out(path);
  write_mot(out, records);
}

std::vector<MotRecord> parse_mot(std::istream& in, std::vector<std::string>* warnings) {
  std::vector<MotRecord> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto f = split(text, ',');
    if (f.size() != 9) {
      throw ParseError(number, "expected 9 comma-separated fields, got " + std::to_string(f.size()));
    }
    MotRecord r;
    r.frame = parse_number<int>(f[0], number, "frame");
    if (r.frame < 1) throw ParseError(number, "frame must be >= 1");
    r.id = parse_number<int>(f[1], number, "id");
    r.left = parse_number<double>(f[2], number, "bb_left");
    r.top = parse_number<double>(f[3], number, "bb_top");
    r.width = parse_number<double>(f[4], number, "bb_width");
    r.height = parse_number<double>(f[5], number, "bb_height");
    r.conf = parse_number<double>(f[6], number, "conf");
    r.class_id = parse_number<int>(f[7], number, "class");
    r.visibility = parse_number<double>(f[8], number, "visibility");
    if (!out.empty() && r.frame < out.back().frame && warnings) {
      warnings->push_back("line " + std::to_string(number) + ": frame " + std::to_string(r.frame) +
                          " after frame " + std::to_string(out.back().frame));
    }
    out.push_back(r);
  }
  return out;
}

std::vector<MotRecord> parse_mot(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  auto in = open_in(path);
  return parse_mot(in, warnings);
}

std::string format_fixed9(double v) {
  if (v == 0.0) v = 0.0;  // no negative zero
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

std::string format_feature_line(const FeatureRecord& r) {
  std::string s = "{\"frame\":" + std::to_string(r.frame) + ",\"det\":" + std::to_string(r.det) + ',';
  append_appearance(s, r.features);
  s += ',';
  append_role(s, r.role);
  s += '}';
  return s;
}

void write_features(std::ostream& out, const std::vector<FeatureRecord>& records) {
  for (const auto& r : records) out << format_feature_line(r) << '\n';
}

void write_features(const std::filesystem::path& path, const std::vector<FeatureRecord>& records) {
  auto out = open_out(path);
  write_features(out, records);
}

std::vector<FeatureRecord> parse_features(std::istream& in) {
  std::vector<FeatureRecord> out;
  for_each_json_line(in, [&](const json& obj, std::size_t line) {
    FeatureRecord r;
    r.frame = int_field(obj, "frame", line);
    r.det = int_field(obj, "det", line);
    if (r.frame < 1 || r.det < 0) throw ParseError(line, "frame must be >= 1 and det >= 0");
    r.features = read_appearance(obj, line);
    r.role = read_role(obj, line);
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<FeatureRecord> parse_features(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_features(in);
}

TrackletRecord to_record(const Tracklet& t) {
  TrackletRecord r;
  r.id = t.id;
  r.segments = t.segments.empty() ? std::vector<FrameInterval>{t.frames} : t.segments;
  r.detections = static_cast<int>(t.detections.size());
  r.ema = t.ema_features;
  r.ema.concat = Vec();
  r.ema.global.reset();
  int n = 0;
  for (const auto& d : t.detections) {
    if (!d.role_logits) continue;
    for (int i = 0; i < kNumRoles; ++i) r.mean_role[i] += (*d.role_logits)[i];
    ++n;
  }
  if (n > 0) {
    for (auto& x : r.mean_role) x /= n;
  }
  return r;
}

std::vector<Tracklet> from_records(const std::vector<TrackletRecord>& records,
                                   const std::vector<MotRecord>& rows) {
  std::map<int, std::vector<const MotRecord*>> by_id;
  for (const auto& r : rows) by_id[r.id].push_back(&r);
  std::vector<Tracklet> out;
  for (const auto& rec : records) {
    Tracklet t;
    t.id = rec.id;
    t.segments = rec.segments;
    t.ema_features = rec.ema;
    t.status = TrackStatus::Finished;
    if (!rec.segments.empty()) {
      t.frames = rec.segments.front();
      for (const auto& s : rec.segments) {
        t.frames.first = std::min(t.frames.first, s.first);
        t.frames.last = std::max(t.frames.last, s.last);
      }
    }
    auto it = by_id.find(rec.id);
    if (it != by_id.end()) {
      for (const MotRecord* row : it->second) {
        Detection d;
        d.frame = row->frame;
        d.box = row->box();
        d.confidence = row->conf;
        d.role_logits = rec.mean_role;
        t.detections.push_back(std::move(d));
      }
    }
    std::stable_sort(t.detections.begin(), t.detections.end(),
                     [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
    out.push_back(std::move(t));
  }
  return out;
}

void write_tracklets(const std::filesystem::path& path, const std::vector<TrackletRecord>& records) {
  auto out = open_out(path);
  for (const auto& r : records) {
    std::string s = "{\"id\":" + std::to_string(r.id) + ",\"segments\":[";
    for (std::size_t i = 0; i < r.segments.size(); ++i) {
      if (i) s += ',';
      s += '[' + std::to_string(r.segments[i].first) + ',' + std::to_string(r.segments[i].last) + ']';
    }
    s += "],\"detections\":" + std::to_string(r.detections) + ',';
    append_appearance(s, r.ema);
    s += ',';
    append_role(s, r.mean_role);
    s += "}\n";
    out << s;
  }
}

std::vector<TrackletRecord> parse_tracklets(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<TrackletRecord> out;
  for_each_json_line(in, [&](const json& obj, std::size_t line) {
    TrackletRecord r;
    r.id = int_field(obj, "id", line);
    r.detections = int_field(obj, "detections", line);
    const json& segs = field(obj, "segments", line);
    if (!segs.is_array()) throw ParseError(line, "segments must be an array");
    for (const auto& s : segs) {
      if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number_integer()) {
        throw ParseError(line, "segment must be [first, last]");
      }
      r.segments.push_back({s[0].get<int>(), s[1].get<int>()});
    }
    r.ema = read_appearance(obj, line);
    r.mean_role = read_role(obj, line);
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<MotRecord> tracklets_to_mot(const std::vector<Tracklet>& tracklets) {
  std::vector<MotRecord> rows;
  for (const auto& t : tracklets) {
    for (const auto& d : t.detections) {
      MotRecord r;
      r.frame = d.frame;
      r.id = t.id;
      r.left = d.box.x;
      r.top = d.box.y;
      r.width = d.box.w;
      r.height = d.box.h;
      r.conf = d.confidence;
      r.class_id = 1;
      r.visibility = 1.0;
      rows.push_back(r);
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const MotRecord& a, const MotRecord& b) {
    return std::tie(a.frame, a.id) < std::tie(b.frame, b.id);
  });
  return rows;
}

void save_checkpoint(const std::filesystem::path& path, const EmbedderModel& model) {
  EmbedderModel copy = model;
  const EmbedderShape s = copy.shape();
  auto out = open_out(path);
  out << "prt-embedder 1\n";
  out << "shape " << s.channels << ' ' << s.parts << ' ' << s.dim << ' ' << s.identities << '\n';
  char buf[40];
  for (const auto& t : copy.tensors()) {
    out << "tensor " << t.name << ' ' << t.rows << ' ' << t.cols << '\n';
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", t.data[i]);
      out << (i ? " " : "") << buf;
    }
    out << '\n';
  }
}

EmbedderModel load_checkpoint(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "prt-embedder" || version != 1) throw ParseError(1, "not a version-1 embedder checkpoint");
  std::string word;
  EmbedderShape s;
  in >> word >> s.channels >> s.parts >> s.dim >> s.identities;
  if (!in || word != "shape") throw ParseError(2, "missing shape line");
  EmbedderModel model = EmbedderModel::zeros(s);
  std::size_t line = 3;
  for (auto& t : model.tensors()) {
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    in >> word >> name >> rows >> cols;
    if (!in || word != "tensor" || name != t.name || rows != t.rows || cols != t.cols) {
      throw ParseError(line, "expected tensor " + t.name);
    }
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      if (!(in >> t.data[i])) throw ParseError(line + 1, "truncated tensor " + t.name);
    }
    line += 2;
  }
  return model;
}

void write_scenario_bundle(const std::filesystem::path& dir, const Scenario& scenario,
                           const DetectorNoise& noise) {
  std::filesystem::create_directories(dir);
  const TrackingStream stream = to_tracking_input(scenario, noise);
  std::vector<MotRecord> gt, det;
  std::vector<FeatureRecord> feats;
  for (const auto& row : stream.gt) {
    const AgentFrame* obs = scenario.find(row.frame, row.id - 1);
    const int k = scenario.config.num_parts;
    const int visible = static_cast<int>(std::count(obs->part_visible.begin(), obs->part_visible.end(), 1));
    gt.push_back({row.frame, row.id, row.box.x, row.box.y, row.box.w, row.box.h, 1.0,
                  static_cast<int>(scenario.agents[row.id - 1].role) + 1, static_cast<double>(visible) / k});
  }
  for (const auto& fr : stream.frames) {
    for (std::size_t i = 0; i < fr.detections.size(); ++i) {
      const Detection& d = fr.detections[i];
      det.push_back({fr.frame, d.truth->identity, d.box.x, d.box.y, d.box.w, d.box.h, d.confidence, 1, 1.0});
      FeatureRecord r;
      r.frame = fr.frame;
      r.det = static_cast<int>(i);
      r.features = scenario.oracle_features(*scenario.find(fr.frame, d.truth->identity - 1));
      r.role[static_cast<int>(d.truth->role)] = 1.0;
      feats.push_back(std::move(r));
    }
  }
  write_mot(dir / "gt.txt", gt);
  write_mot(dir / "det.txt", det);
  write_features(dir / "features.txt", feats);

  json roster = json::array();
  for (const auto& a : scenario.agents) {
    roster.push_back({{"identity", a.identity},
                      {"role", std::string(to_string(a.role))},
                      {"team", a.team ? std::string(to_string(*a.team)) : std::string("none")}});
  }
  json manifest{{"scenario", json::parse(scenario_to_json(scenario.config))},
                {"roster", roster},
                {"detector",
                 {{"kind", noise.kind == DetectorNoise::Kind::None     ? "none"
                           : noise.kind == DetectorNoise::Kind::Jitter ? "jitter"
                                                                       : "dropout"},
                  {"amount", noise.amount},
                  {"seed", noise.seed}}}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

ScenarioConfig read_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError(1, std::string("malformed manifest: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("scenario")) throw ParseError(1, "manifest lacks a scenario object");
  return scenario_from_json(doc["scenario"].dump());
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

}  // namespace prt
