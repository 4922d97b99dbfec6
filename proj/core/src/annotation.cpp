#include "seld/annotation.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "seld/error.hpp"

namespace seld {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_field(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

std::vector<AnnotationRecord> parse_annotation_csv(std::string_view text) {
  std::vector<AnnotationRecord> rows;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    auto fail_line = [&](const std::string& why) {
      fail(ErrorKind::parse, "annotation line " + std::to_string(line_no) + ": " + why);
    };
    if (!header_seen) {
      header_seen = true;
      if (line == kAnnotationHeader) continue;
      if (!line.empty() && (line.front() < '0' || line.front() > '9') && line.front() != '-') {
        fail_line("unexpected header '" + std::string(line) + "'");
      }
    }
    std::string_view fields[5];
    std::size_t count = 0;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      if (count == 5) fail_line("too many fields");
      fields[count++] = rest.substr(0, comma);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (count != 5) fail_line("expected 5 fields, found " + std::to_string(count));
    AnnotationRecord r;
    if (!parse_field(fields[0], r.frame) || r.frame < 0) fail_line("bad frame index");
    if (!parse_field(fields[1], r.class_id) || r.class_id < 0) fail_line("bad class id");
    if (!parse_field(fields[2], r.source_id)) fail_line("bad source id");
    if (!parse_field(fields[3], r.azimuth) || !(r.azimuth >= -180.0 && r.azimuth <= 180.0)) {
      fail_line("azimuth outside [-180, 180]");
    }
    if (!parse_field(fields[4], r.elevation) || !(r.elevation >= -90.0 && r.elevation <= 90.0)) {
      fail_line("elevation outside [-90, 90]");
    }
    r.azimuth = wrap_azimuth(r.azimuth);
    rows.push_back(r);
  }
  return rows;
}

std::vector<AnnotationRecord> read_annotation_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open annotation file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_annotation_csv(ss.str());
}

std::string format_annotation_csv(std::span<const AnnotationRecord> records) {
  std::string out(kAnnotationHeader);
  out += '\n';
  char buf[128];
  for (const auto& r : records) {
    const int n = std::snprintf(buf, sizeof buf, "%d,%d,%d,%.4f,%.4f\n", r.frame, r.class_id, r.source_id,
                                r.azimuth, r.elevation);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

void write_annotation_csv(const std::filesystem::path& path, std::span<const AnnotationRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write annotation file " + path.string());
  out << format_annotation_csv(records);
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

std::vector<AnnotationRecord> annotation_records(const SceneAnnotation& annotation) {
  std::vector<AnnotationRecord> rows;
  for (int l = 0; l < annotation.num_frames(); ++l) {
    for (const auto& f : annotation.frame_labels[static_cast<std::size_t>(l)]) {
      rows.push_back({l, f.class_id, f.event_index, wrap_azimuth(f.azimuth), f.elevation});
    }
  }
  return rows;
}

std::vector<AnnotationRecord> detection_records(std::span<const std::vector<Detection>> frames) {
  std::vector<AnnotationRecord> rows;
  for (const auto& f : frames) {
    for (const auto& d : f) {
      const auto s = to_spherical(d.doa);
      rows.push_back({d.label_frame, d.class_id, 0, s.azimuth, s.elevation});
    }
  }
  return rows;
}

}  // namespace seld
