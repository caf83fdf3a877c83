#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prt/core.hpp"

namespace prt {

struct BoxRecord {
  int id = 0;
  BoundingBox box;
};

/// Ground truth and predictions of one sequence, keyed by frame.
struct SequenceResult {
  std::string name;
  std::map<int, std::vector<BoxRecord>> gt;
  std::map<int, std::vector<BoxRecord>> pred;
};

/// Max-IoU-sum matching of one frame restricted to pairs with IoU >= alpha.
/// Returns (gt index, pred index) pairs.
std::vector<std::pair<int, int>> frame_match(std::span<const BoxRecord> gt,
                                             std::span<const BoxRecord> pred, double alpha);

std::vector<double> default_hota_alphas();

struct HotaResult {
  double hota = 0.0;
  double deta = 0.0;
  double assa = 0.0;
  std::vector<double> alphas;
  std::vector<double> hota_per_alpha;
  std::vector<double> deta_per_alpha;
  std::vector<double> assa_per_alpha;
};

/// Throws EmptyGroundTruth. OpenMP-parallel over alphas.
HotaResult hota(const SequenceResult& seq, std::span<const double> alphas = {});

struct ClearResult {
  double mota = 0.0;  // can be negative
  int id_switches = 0;
  int tp = 0;
  int fn = 0;
  int fp = 0;
};

ClearResult mota_ids(const SequenceResult& seq, double threshold = 0.5);

struct IdentityResult {
  double idf1 = 0.0;
  double idtp = 0.0;
  double idfp = 0.0;
  double idfn = 0.0;
};

IdentityResult idf1(const SequenceResult& seq, double threshold = 0.5);

struct TrackingMetrics {
  std::string name;
  double hota = 0.0;
  double deta = 0.0;
  double assa = 0.0;
  double mota = 0.0;
  double idf1 = 0.0;
  int id_switches = 0;
};

struct EvalReport {
  TrackingMetrics combined;  // means over sequences, summed switches
  std::vector<TrackingMetrics> sequences;
};

TrackingMetrics evaluate_sequence(const SequenceResult& seq);
EvalReport evaluate_tracking(std::span<const SequenceResult> sequences);

}  // namespace prt
