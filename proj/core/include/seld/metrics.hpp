#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seld/annotation.hpp"
#include "seld/spatial.hpp"

namespace seld {

struct MetricsConfig {
  double doa_threshold = 20.0;  ///< degrees
  int segment_frames = 10;      ///< label frames per evaluation segment

  bool operator==(const MetricsConfig&) const = default;
  void validate() const;
};

/// Optimal one-to-one pairing of same-class references and predictions.
struct SegmentMatch {
  std::vector<std::pair<int, int>> pairs;  ///< (ref index, pred index)
  std::vector<double> distances;           ///< degrees, per pair
  std::vector<int> unmatched_refs;
  std::vector<int> unmatched_preds;
  double total_distance = 0.0;
};

/// Minimum total angular distance matching; exhaustive up to 6 per side, Hungarian beyond.
SegmentMatch match_class_segment(std::span<const CartesianDOA> refs, std::span<const CartesianDOA> preds);
SegmentMatch match_exhaustive(std::span<const CartesianDOA> refs, std::span<const CartesianDOA> preds);
SegmentMatch match_hungarian(std::span<const CartesianDOA> refs, std::span<const CartesianDOA> preds);

/// Micro-averaged accumulators; merging is associative.
struct MetricCounts {
  std::int64_t tp = 0, fp = 0, fn = 0;
  std::int64_t substitutions = 0, deletions = 0, insertions = 0, references = 0;
  double le_sum = 0.0;
  std::int64_t le_pairs = 0;
  std::int64_t lr_matched = 0, lr_refs = 0;

  MetricCounts& operator+=(const MetricCounts& o);
  bool operator==(const MetricCounts&) const = default;
};

struct MetricsReport {
  double er20 = 0.0;
  double f20 = 0.0;
  double le_cd = 0.0;  ///< degrees; 180 when nothing was matched
  double lr_cd = 0.0;
  double e_seld = 0.0;
  MetricCounts counts;
};

/// Aggregated SELD error: (ER + (1 - F) + LE/180 + (1 - LR)) / 4.
double seld_error(double er20, double f20, double le_cd, double lr_cd) noexcept;

/// Class-wise segment aggregation: every (class, source) present in any frame
/// of the segment becomes one item whose direction is the renormalised mean.
void accumulate_segment(std::span<const AnnotationRecord> refs, std::span<const AnnotationRecord> preds,
                        MetricCounts& counts, const MetricsConfig& config = {});

MetricsReport finalize(const MetricCounts& counts);

/// Splits both sides into segments of config.segment_frames label frames and accumulates them all.
MetricsReport evaluate(std::span<const AnnotationRecord> refs, std::span<const AnnotationRecord> preds,
                       const MetricsConfig& config = {});

/// Aligned human-readable table.
std::string format_report(const MetricsReport& report);
/// `key=value` lines.
std::string format_report_kv(const MetricsReport& report);

}  // namespace seld
