#include "seld/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "seld/error.hpp"

namespace seld {

void MetricsConfig::validate() const {
  if (!(doa_threshold >= 0.0 && doa_threshold <= 180.0)) {
    fail(ErrorKind::configuration, "metrics: doa_threshold must be within [0, 180] degrees");
  }
  if (segment_frames < 1) fail(ErrorKind::configuration, "metrics: segment_frames must be >= 1");
}

namespace {

std::vector<double> distance_matrix(std::span<const CartesianDOA> refs, std::span<const CartesianDOA> preds) {
  std::vector<double> d(refs.size() * preds.size());
  for (std::size_t r = 0; r < refs.size(); ++r) {
    for (std::size_t p = 0; p < preds.size(); ++p) d[r * preds.size() + p] = angular_distance(refs[r], preds[p]);
  }
  return d;
}

SegmentMatch build_match(std::span<const CartesianDOA> refs, std::span<const CartesianDOA> preds,
                         const std::vector<double>& dist, const std::vector<int>& pred_of_ref) {
  SegmentMatch m;
  std::vector<bool> pred_used(preds.size(), false);
  for (std::size_t r = 0; r < refs.size(); ++r) {
    const int p = pred_of_ref[r];
    if (p < 0) {
      m.unmatched_refs.push_back(static_cast<int>(r));
      continue;
    }
    pred_used[static_cast<std::size_t>(p)] = true;
    const double d = dist[r * preds.size() + static_cast<std::size_t>(p)];
    m.pairs.emplace_back(static_cast<int>(r), p);
    m.distances.push_back(d);
    m.total_distance += d;
  }
  for (std::size_t p = 0; p < preds.size(); ++p) {
    if (!pred_used[p]) m.unmatched_preds.push_back(static_cast<int>(p));
  }
  return m;
}

}  // namespace

SegmentMatch match_exhaustive(std::span<const CartesianDOA> refs, std::span<const CartesianDOA> preds) {
  const auto dist = distance_matrix(refs, preds);
  const std::size_t nr = refs.size(), np = preds.size();
  const std::size_t pairs = std::min(nr, np);
  std::vector<int> current(nr, -1), best(nr, -1);
  std::vector<bool> used(np, false);
  double best_total = std::numeric_limits<double>::infinity();
  // Depth-first over refs; a ref may stay unmatched only while enough refs remain to fill every pair.
  auto search = [&](auto&& self, std::size_t r, std::size_t matched, double total) -> void {
    if (total >= best_total) return;
    if (r == nr) {
      if (matched == pairs) {
        best_total = total;
        best = current;
      }
      return;
    }
    for (std::size_t p = 0; p < np; ++p) {
      if (used[p]) continue;
      used[p] = true;
      current[r] = static_cast<int>(p);
      self(self, r + 1, matched + 1, total + dist[r * np + p]);
      used[p] = false;
      current[r] = -1;
    }
    if (nr - r - 1 >= pairs - matched) self(self, r + 1, matched, total);
  };
  search(search, 0, 0, 0.0);
  if (pairs == 0) best.assign(nr, -1);
  return build_match(refs, preds, dist, best);
}

SegmentMatch match_hungarian(std::span<const CartesianDOA> refs, std::span<const CartesianDOA> preds) {
  const auto dist = distance_matrix(refs, preds);
  const std::size_t nr = refs.size(), np = preds.size();
  std::vector<int> pred_of_ref(nr, -1);
  if (nr == 0 || np == 0) return build_match(refs, preds, dist, pred_of_ref);
  // Rows are the smaller side so every row is assigned.
  const bool rows_are_refs = nr <= np;
  const std::size_t n = rows_are_refs ? nr : np;
  const std::size_t m = rows_are_refs ? np : nr;
  auto cost = [&](std::size_t i, std::size_t j) {
    return rows_are_refs ? dist[(i - 1) * np + (j - 1)] : dist[(j - 1) * np + (i - 1)];
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> match_col(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match_col[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match_col[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match_col[j0] = match_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= m; ++j) {
    if (match_col[j] == 0) continue;
    if (rows_are_refs) {
      pred_of_ref[match_col[j] - 1] = static_cast<int>(j - 1);
    } else {
      pred_of_ref[j - 1] = static_cast<int>(match_col[j] - 1);
    }
  }
  return build_match(refs, preds, dist, pred_of_ref);
}

SegmentMatch match_class_segment(std::span<const CartesianDOA> refs, std::span<const CartesianDOA> preds) {
  if (refs.size() <= 6 && preds.size() <= 6) return match_exhaustive(refs, preds);
  return match_hungarian(refs, preds);
}

MetricCounts& MetricCounts::operator+=(const MetricCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  references += o.references;
  le_sum += o.le_sum;
  le_pairs += o.le_pairs;
  lr_matched += o.lr_matched;
  lr_refs += o.lr_refs;
  return *this;
}

double seld_error(double er20, double f20, double le_cd, double lr_cd) noexcept {
  return (er20 + (1.0 - f20) + le_cd / 180.0 + (1.0 - lr_cd)) / 4.0;
}

namespace {

/// class -> one mean direction per source present in the segment.
std::map<int, std::vector<CartesianDOA>> segment_items(std::span<const AnnotationRecord> rows) {
  std::map<std::pair<int, int>, std::pair<CartesianDOA, CartesianDOA>> sums;  // (sum, first)
  for (const auto& r : rows) {
    const auto d = to_cartesian({r.azimuth, r.elevation});
    auto [it, fresh] = sums.try_emplace({r.class_id, r.source_id}, CartesianDOA{0, 0, 0}, d);
    it->second.first.x += d.x;
    it->second.first.y += d.y;
    it->second.first.z += d.z;
  }
  std::map<int, std::vector<CartesianDOA>> items;
  for (const auto& [key, acc] : sums) {
    const auto& [sum, first] = acc;
    const double n = sum.norm();
    items[key.first].push_back(n > 1e-12 ? CartesianDOA{sum.x / n, sum.y / n, sum.z / n} : first);
  }
  return items;
}

}  // namespace

void accumulate_segment(std::span<const AnnotationRecord> refs, std::span<const AnnotationRecord> preds,
                        MetricCounts& counts, const MetricsConfig& config) {
  const auto ref_items = segment_items(refs);
  const auto pred_items = segment_items(preds);
  std::int64_t seg_fp = 0, seg_fn = 0, seg_refs = 0;
  auto visit = [&](int cls) {
    static const std::vector<CartesianDOA> none;
    const auto ri = ref_items.find(cls);
    const auto pi = pred_items.find(cls);
    const auto& r = ri == ref_items.end() ? none : ri->second;
    const auto& p = pi == pred_items.end() ? none : pi->second;
    const auto m = match_class_segment(r, p);
    for (double d : m.distances) {
      if (d <= config.doa_threshold) {
        ++counts.tp;
      } else {
        ++seg_fp;
        ++seg_fn;
      }
    }
    seg_fn += static_cast<std::int64_t>(m.unmatched_refs.size());
    seg_fp += static_cast<std::int64_t>(m.unmatched_preds.size());
    counts.le_sum += m.total_distance;
    counts.le_pairs += static_cast<std::int64_t>(m.pairs.size());
    counts.lr_matched += static_cast<std::int64_t>(m.pairs.size());
    counts.lr_refs += static_cast<std::int64_t>(r.size());
    seg_refs += static_cast<std::int64_t>(r.size());
  };
  for (const auto& [cls, _] : ref_items) visit(cls);
  for (const auto& [cls, _] : pred_items) {
    if (!ref_items.contains(cls)) visit(cls);
  }
  counts.fp += seg_fp;
  counts.fn += seg_fn;
  counts.substitutions += std::min(seg_fn, seg_fp);
  counts.deletions += std::max<std::int64_t>(0, seg_fn - seg_fp);
  counts.insertions += std::max<std::int64_t>(0, seg_fp - seg_fn);
  counts.references += seg_refs;
}

MetricsReport finalize(const MetricCounts& c) {
  MetricsReport r;
  r.counts = c;
  const double errors = static_cast<double>(c.substitutions + c.deletions + c.insertions);
  r.er20 = c.references > 0 ? errors / static_cast<double>(c.references) : errors;
  const double f_den = static_cast<double>(2 * c.tp + c.fp + c.fn);
  r.f20 = f_den > 0 ? 2.0 * static_cast<double>(c.tp) / f_den : 1.0;
  r.le_cd = c.le_pairs > 0 ? c.le_sum / static_cast<double>(c.le_pairs) : 180.0;
  r.lr_cd = c.lr_refs > 0 ? static_cast<double>(c.lr_matched) / static_cast<double>(c.lr_refs) : 1.0;
  if (c.le_pairs == 0 && c.lr_refs == 0 && c.fp == 0) r.le_cd = 0.0;
  r.e_seld = seld_error(r.er20, r.f20, r.le_cd, r.lr_cd);
  return r;
}

MetricsReport evaluate(std::span<const AnnotationRecord> refs, std::span<const AnnotationRecord> preds,
                       const MetricsConfig& config) {
  config.validate();
  int last = -1;
  for (const auto& r : refs) last = std::max(last, r.frame);
  for (const auto& p : preds) last = std::max(last, p.frame);
  const int n_segments = last < 0 ? 0 : last / config.segment_frames + 1;
  std::vector<std::vector<AnnotationRecord>> ref_seg(static_cast<std::size_t>(n_segments));
  std::vector<std::vector<AnnotationRecord>> pred_seg(static_cast<std::size_t>(n_segments));
  for (const auto& r : refs) ref_seg[static_cast<std::size_t>(r.frame / config.segment_frames)].push_back(r);
  for (const auto& p : preds) pred_seg[static_cast<std::size_t>(p.frame / config.segment_frames)].push_back(p);
  MetricCounts counts;
  for (int s = 0; s < n_segments; ++s) {
    accumulate_segment(ref_seg[static_cast<std::size_t>(s)], pred_seg[static_cast<std::size_t>(s)], counts, config);
  }
  return finalize(counts);
}

std::string format_report(const MetricsReport& r) {
  char buf[1024];
  const auto& c = r.counts;
  std::snprintf(buf, sizeof buf,
                "SELD metrics (micro-averaged over classes and 1 s segments)\n"
                "  ER20     %8.4f\n"
                "  F20      %8.4f\n"
                "  LE_CD    %8.2f deg\n"
                "  LR_CD    %8.4f\n"
                "  E_SELD   %8.4f\n"
                "  counts   TP %lld  FP %lld  FN %lld  S %lld  D %lld  I %lld  N %lld\n",
                r.er20, r.f20, r.le_cd, r.lr_cd, r.e_seld, static_cast<long long>(c.tp),
                static_cast<long long>(c.fp), static_cast<long long>(c.fn), static_cast<long long>(c.substitutions),
                static_cast<long long>(c.deletions), static_cast<long long>(c.insertions),
                static_cast<long long>(c.references));
  return buf;
}

std::string format_report_kv(const MetricsReport& r) {
  char buf[1024];
  const auto& c = r.counts;
  std::snprintf(buf, sizeof buf,
                "averaging=micro\ner20=%.6f\nf20=%.6f\nle_cd=%.6f\nlr_cd=%.6f\ne_seld=%.6f\n"
                "tp=%lld\nfp=%lld\nfn=%lld\nsubstitutions=%lld\ndeletions=%lld\ninsertions=%lld\nreferences=%lld\n",
                r.er20, r.f20, r.le_cd, r.lr_cd, r.e_seld, static_cast<long long>(c.tp),
                static_cast<long long>(c.fp), static_cast<long long>(c.fn), static_cast<long long>(c.substitutions),
                static_cast<long long>(c.deletions), static_cast<long long>(c.insertions),
                static_cast<long long>(c.references));
  return buf;
}

}  // namespace seld
