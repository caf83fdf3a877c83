#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "prt/core.hpp"
#include "prt/embedder.hpp"
#include "prt/simgen.hpp"

namespace prt {

/// One MOT-challenge line: frame,id,bb_left,bb_top,bb_width,bb_height,conf,class,visibility.
struct MotRecord {
  int frame = 1;
  int id = -1;
  double left = 0.0;
  double top = 0.0;
  double width = 1.0;
  double height = 1.0;
  double conf = 1.0;
  int class_id = 1;
  double visibility = 1.0;

  BoundingBox box() const { return {left, top, width, height}; }
  friend bool operator==(const MotRecord&, const MotRecord&) = default;
};

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

std::string format_mot_line(const MotRecord& r);
void write_mot(std::ostream& out, const std::vector<MotRecord>& records);
void write_mot(const std::filesystem::path& path, const std::vector<MotRecord>& records);

/// Throws ParseError(line) on malformed lines. Blank lines are skipped.
/// Decreasing frame numbers are accepted; a note per occurrence is appended
/// to `warnings` when given.
std::vector<MotRecord> parse_mot(std::istream& in, std::vector<std::string>* warnings = nullptr);
std::vector<MotRecord> parse_mot(const std::filesystem::path& path,
                                 std::vector<std::string>* warnings = nullptr);

/// Appearance output of one detection.
struct FeatureRecord {
  int frame = 1;
  int det = 0;  // index of the detection within its frame
  PartFeatureSet features;
  RoleLogits role{};
  friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

/// Fixed 9-significant-digit scientific notation used in feature files.
std::string format_fixed9(double v);

std::string format_feature_line(const FeatureRecord& r);
void write_features(std::ostream& out, const std::vector<FeatureRecord>& records);
void write_features(const std::filesystem::path& path, const std::vector<FeatureRecord>& records);
std::vector<FeatureRecord> parse_features(std::istream& in);
std::vector<FeatureRecord> parse_features(const std::filesystem::path& path);

/// Finished tracklet summary exchanged between the track, merge and
/// cluster commands.
struct TrackletRecord {
  int id = 0;
  std::vector<FrameInterval> segments;
  int detections = 0;
  PartFeatureSet ema;
  RoleLogits mean_role{};
  friend bool operator==(const TrackletRecord&, const TrackletRecord&) = default;
};

TrackletRecord to_record(const Tracklet& t);
/// Rebuilds tracklets from summaries plus their MOT rows (by id). Every
/// rebuilt detection carries the tracklet's mean role logits.
std::vector<Tracklet> from_records(const std::vector<TrackletRecord>& records,
                                   const std::vector<MotRecord>& rows);

void write_tracklets(const std::filesystem::path& path, const std::vector<TrackletRecord>& records);
std::vector<TrackletRecord> parse_tracklets(const std::filesystem::path& path);

/// MOT rows of every detection of every tracklet, sorted by (frame, id).
std::vector<MotRecord> tracklets_to_mot(const std::vector<Tracklet>& tracklets);

/// Text checkpoint: header, shape, then every tensor at full precision.
void save_checkpoint(const std::filesystem::path& path, const EmbedderModel& model);
EmbedderModel load_checkpoint(const std::filesystem::path& path);

/// Scenario bundle: gt.txt, det.txt (id column = source agent), features.txt
/// (noise-free appearance) and manifest.json. Grids are regenerated from
/// the manifest.
void write_scenario_bundle(const std::filesystem::path& dir, const Scenario& scenario,
                           const DetectorNoise& noise);
ScenarioConfig read_manifest(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace prt
