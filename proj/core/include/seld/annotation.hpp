#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seld/decoder.hpp"
#include "seld/scene.hpp"

namespace seld {

/// One row of the `frame,class,source,azimuth,elevation` CSV layout.
struct AnnotationRecord {
  int frame = 0;
  int class_id = 0;
  int source_id = 0;
  double azimuth = 0.0;    ///< degrees, [-180, 180)
  double elevation = 0.0;  ///< degrees, [-90, 90]
  bool operator==(const AnnotationRecord&) const = default;
};

inline constexpr std::string_view kAnnotationHeader = "frame,class,source,azimuth,elevation";

/// Throws parse with the 1-based line number of the first malformed row.
std::vector<AnnotationRecord> parse_annotation_csv(std::string_view text);
std::vector<AnnotationRecord> read_annotation_csv(const std::filesystem::path& path);
std::string format_annotation_csv(std::span<const AnnotationRecord> records);
void write_annotation_csv(const std::filesystem::path& path, std::span<const AnnotationRecord> records);

/// Reference rows of a scene; the source id is the event index.
std::vector<AnnotationRecord> annotation_records(const SceneAnnotation& annotation);

/// Prediction rows; every detection reports source 0.
std::vector<AnnotationRecord> detection_records(std::span<const std::vector<Detection>> frames);

}  // namespace seld
