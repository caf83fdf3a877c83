#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "prt/embedder.hpp"
#include "prt/merge.hpp"
#include "prt/simgen.hpp"
#include "prt/tracker.hpp"

namespace prt {

struct BenchmarkConfig {
  int videos = 3;  // synthetic games used for training and retrieval
  int stride = 5;  // frame subsampling of the re-identification split
  DetectorNoise detector;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "prt_out";
  ScenarioConfig scenario;
  BenchmarkConfig benchmark;
  TrainConfig train;  // includes loss weights and margins
  TrackerConfig tracker;
  MergeConfig merge;
};

/// Parses a JSON document; absent keys keep their defaults. Throws
/// ConfigError (UnknownKey, TypeError, RangeError) naming the key.
RunConfig parse_config(const std::string& json_text);

/// "default" yields the built-in defaults; anything else is read as a file.
RunConfig load_config(const std::string& path_or_default);

/// Canonical JSON with every key spelled out.
std::string dump_config(const RunConfig& cfg);

std::string scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json(const std::string& json_text);

}  // namespace prt
