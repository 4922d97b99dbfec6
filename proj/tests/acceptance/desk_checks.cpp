#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "criteria.hpp"
#include "desk_scale.hpp"
#include "seld/annotation.hpp"

namespace seld::acceptance {

namespace {

template <typename... Args>
std::string format(const char* pattern, Args... args) {
  char buf[768];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

using testing::HeldOutScene;

std::vector<std::vector<Detection>> decode(const HeldOutScene& h, const SupportSet& support, const DecoderConfig& cfg) {
  return decode_scene(h.outputs, support, cfg, h.segment_embeddings);
}

std::size_t detection_count(const std::vector<HeldOutScene>& scenes, const SupportSet& support,
                            const DecoderConfig& cfg) {
  std::size_t n = 0;
  for (const auto& h : scenes) {
    for (const auto& frame : decode(h, support, cfg)) n += frame.size();
  }
  return n;
}

/// False positives counted only in evaluation segments where the reference has
/// at least two simultaneous events.
struct OverlapCounts {
  std::int64_t false_positives = 0;
  int segments = 0;
};

OverlapCounts overlap_false_positives(const std::vector<HeldOutScene>& scenes, const SupportSet& support,
                                      const DecoderConfig& cfg, const MetricsConfig& metrics) {
  OverlapCounts out;
  for (const auto& h : scenes) {
    const auto preds = detection_records(decode(h, support, cfg));
    const int n_segments = (h.outputs.n_label_frames + metrics.segment_frames - 1) / metrics.segment_frames;
    std::vector<std::vector<AnnotationRecord>> refs_by(static_cast<std::size_t>(n_segments)),
        preds_by(static_cast<std::size_t>(n_segments));
    for (const auto& r : h.references) refs_by[static_cast<std::size_t>(r.frame / metrics.segment_frames)].push_back(r);
    for (const auto& p : preds) preds_by[static_cast<std::size_t>(p.frame / metrics.segment_frames)].push_back(p);
    for (int s = 0; s < n_segments; ++s) {
      std::map<int, int> per_frame;
      bool overlap = false;
      for (const auto& r : refs_by[static_cast<std::size_t>(s)]) overlap = overlap || ++per_frame[r.frame] >= 2;
      if (!overlap) continue;
      MetricCounts c;
      accumulate_segment(refs_by[static_cast<std::size_t>(s)], preds_by[static_cast<std::size_t>(s)], c, metrics);
      out.false_positives += c.fp;
      ++out.segments;
    }
  }
  return out;
}

using Key = std::array<unsigned char, sizeof(double) * 4>;

Key detection_key(const Detection& d) {
  Key k{};
  const double v[4] = {d.doa.x, d.doa.y, d.doa.z, d.activity};
  std::memcpy(k.data(), v, sizeof v);
  return k;
}

}  // namespace

std::vector<Outcome> check_desk_scale() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  const auto cfg = testing::desk_scale_config();
  const auto world = testing::build_desk_world(cfg);
  std::printf("desk-scale: %zu training scenes, %zu held-out scenes, %d iterations\n", world->train_scenes.size(),
              world->test_scenes.size(), cfg.train.iterations);
  std::fflush(stdout);
  const auto net = testing::train_desk_model(*world, [&](int it, double loss) {
    if (it % 500 == 0) {
      std::printf("  iteration %d  mean loss %.4f  (%.0f s)\n", it, loss, elapsed());
      std::fflush(stdout);
    }
  });
  const double train_seconds = elapsed();
  const auto held = testing::run_held_out(*world, net);
  const auto zero = testing::zero_shot_support(*world);
  const auto few = testing::few_shot_support(*world, 5);
  const DecoderConfig dual = cfg.decoder;

  std::vector<Outcome> out;

  const auto zr = testing::score_held_out(held, zero, dual, cfg.metrics);
  const auto fr = testing::score_held_out(held, few, dual, cfg.metrics);
  Outcome e2e{7, "desk-scale zero-shot F >= 0.5 and LE <= 15 deg; few-shot E_SELD <= zero-shot + 0.05", false, ""};
  e2e.pass = zr.f20 >= 0.5 && zr.le_cd <= 15.0 && fr.e_seld <= zr.e_seld + 0.05 && train_seconds < 30 * 60;
  e2e.detail = format("zero-shot ER %.3f F %.3f LE %.2f LR %.3f E %.3f; few-shot (K=5) ER %.3f F %.3f LE %.2f LR %.3f E "
                      "%.3f; training %.0f s",
                      zr.er20, zr.f20, zr.le_cd, zr.lr_cd, zr.e_seld, fr.er20, fr.f20, fr.le_cd, fr.lr_cd, fr.e_seld,
                      train_seconds);
  out.push_back(e2e);

  Outcome thr{8, "lowering sigma_b never removes detections; dual threshold has fewer overlap false positives", false,
              ""};
  bool monotone = true;
  std::size_t previous = 0;
  std::string sweep;
  for (int step = 0;; ++step) {
    DecoderConfig d = dual;
    d.sigma_b = std::max(dual.sigma_a, dual.sigma_b - 0.05 * step);
    const auto n = detection_count(held, zero, d);
    if (step > 0 && n < previous) monotone = false;
    sweep += format("%s%.2f:%zu", step ? " " : "", d.sigma_b, n);
    previous = n;
    if (d.sigma_b <= dual.sigma_a) break;
  }
  DecoderConfig single = dual;
  single.sigma_b = single.sigma_a;
  const auto fp_dual = overlap_false_positives(held, zero, dual, cfg.metrics);
  const auto fp_single = overlap_false_positives(held, zero, single, cfg.metrics);
  thr.pass = monotone && fp_dual.false_positives < fp_single.false_positives;
  thr.detail = format("detections by sigma_b [%s]; overlap-segment false positives %lld (%.2f/%.2f) vs %lld (%.2f/%.2f) "
                      "over %d segments",
                      sweep.c_str(), static_cast<long long>(fp_dual.false_positives), dual.sigma_a, dual.sigma_b,
                      static_cast<long long>(fp_single.false_positives), single.sigma_a, single.sigma_b,
                      fp_dual.segments);
  out.push_back(thr);

  Outcome clap{9, "CLAP override changes only single-source class labels; DOA and activity multisets identical", false,
               ""};
  DecoderConfig with = dual;
  with.use_clap_combination = true;
  DecoderConfig without = dual;
  without.use_clap_combination = false;
  std::vector<Key> keys_with, keys_without;
  std::size_t relabeled = 0, single_frames = 0, contract_violations = 0;
  for (const auto& h : held) {
    const auto a = decode(h, zero, without);
    const auto b = decode(h, zero, with);
    if (a.size() != b.size()) ++contract_violations;
    for (std::size_t l = 0; l < std::min(a.size(), b.size()); ++l) {
      for (const auto& d : a[l]) keys_without.push_back(detection_key(d));
      for (const auto& d : b[l]) keys_with.push_back(detection_key(d));
      if (a[l].size() != b[l].size()) {
        ++contract_violations;
        continue;
      }
      if (a[l].size() == 1) ++single_frames;
      for (std::size_t k = 0; k < a[l].size(); ++k) {
        Detection same = b[l][k];
        same.class_id = a[l][k].class_id;
        if (!(same == a[l][k])) ++contract_violations;
        if (b[l][k].class_id != a[l][k].class_id) {
          ++relabeled;
          if (a[l].size() != 1) ++contract_violations;
        }
      }
    }
  }
  std::sort(keys_with.begin(), keys_with.end());
  std::sort(keys_without.begin(), keys_without.end());
  const bool multisets_equal = keys_with == keys_without;
  clap.pass = multisets_equal && contract_violations == 0;
  clap.detail = format("%zu detections, multisets %s, %zu of %zu single-source frames relabeled, %zu contract violations",
                       keys_with.size(), multisets_equal ? "byte-identical" : "DIFFER", relabeled, single_frames,
                       contract_violations);
  out.push_back(clap);
  return out;
}

}  // namespace seld::acceptance
