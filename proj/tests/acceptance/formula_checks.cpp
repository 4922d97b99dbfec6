#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "criteria.hpp"
#include "gradcheck.hpp"
#include "seld/metrics.hpp"
#include "seld/pit_loss.hpp"
#include "seld/random.hpp"
#include "seld/spatial.hpp"

namespace seld::acceptance {

namespace {

template <typename... Args>
std::string format(const char* pattern, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

CartesianDOA random_direction(Stream& rng) {
  return to_cartesian({rng.uniform(-180.0, 180.0), std::asin(rng.uniform(-1.0, 1.0)) * 180.0 / M_PI});
}

// ---- PIT oracle ------------------------------------------------------------

struct PitInstance {
  int frames = 0, tracks = 0, dim = 0;
  std::vector<double> oe, oa, pe, pa;
};

PitInstance random_pit_instance(Stream& rng, int frames, int tracks, int dim) {
  PitInstance in{frames, tracks, dim, {}, {}, {}, {}};
  const std::size_t slots = static_cast<std::size_t>(frames) * tracks;
  in.oe.assign(slots * dim, 0.0);
  in.oa.assign(slots * 3, 0.0);
  for (std::size_t s = 0; s < slots; ++s) {
    if (rng.uniform() < 0.35) continue;
    for (int i = 0; i < dim; ++i) in.oe[s * dim + i] = rng.gaussian();
    const auto d = random_direction(rng);
    const double a = rng.uniform(0.3, 1.0);
    in.oa[s * 3] = a * d.x;
    in.oa[s * 3 + 1] = a * d.y;
    in.oa[s * 3 + 2] = a * d.z;
  }
  for (std::size_t i = 0; i < slots * dim; ++i) in.pe.push_back(rng.gaussian());
  for (std::size_t i = 0; i < slots * 3; ++i) in.pa.push_back(rng.uniform(-1.0, 1.0));
  return in;
}

/// Exhaustive minimum over all track permutations, written from the loss definition.
double pit_oracle(const PitInstance& in, double beta_embed, double beta_accdoa) {
  const int n = in.tracks, dim = in.dim;
  std::vector<int> perm(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int t = 0; t < in.frames; ++t) {
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
      double sum = 0.0;
      for (int k = 0; k < n; ++k) {
        const double* o = &in.oe[(static_cast<std::size_t>(t) * n + perm[k]) * dim];
        const double* p = &in.pe[(static_cast<std::size_t>(t) * n + k) * dim];
        double dot = 0, oo = 0, pp = 0;
        for (int i = 0; i < dim; ++i) {
          dot += o[i] * p[i];
          oo += o[i] * o[i];
          pp += p[i] * p[i];
        }
        const double embed = oo == 0.0 ? 0.0 : 1.0 - dot / std::max(std::sqrt(oo) * std::sqrt(pp), 1e-8);
        const double* oa = &in.oa[(static_cast<std::size_t>(t) * n + perm[k]) * 3];
        const double* pa = &in.pa[(static_cast<std::size_t>(t) * n + k) * 3];
        double mse = 0;
        for (int i = 0; i < 3; ++i) mse += (pa[i] - oa[i]) * (pa[i] - oa[i]);
        sum += beta_embed * embed + beta_accdoa * mse / 3.0;
      }
      best = std::min(best, sum / n);
    } while (std::next_permutation(perm.begin(), perm.end()));
    total += best;
  }
  return total / in.frames;
}

// ---- assignment oracle -----------------------------------------------------

/// Minimum total distance over every maximum-cardinality one-to-one pairing.
double assignment_oracle(const std::vector<CartesianDOA>& refs, const std::vector<CartesianDOA>& preds,
                         std::size_t& pairs) {
  pairs = std::min(refs.size(), preds.size());
  if (pairs == 0) return 0.0;
  // Enumerate injective maps from the smaller side by permuting the larger side.
  const bool refs_smaller = refs.size() <= preds.size();
  const auto& small = refs_smaller ? refs : preds;
  const auto& large = refs_smaller ? preds : refs;
  std::vector<int> order(large.size());
  std::iota(order.begin(), order.end(), 0);
  double best = INFINITY;
  do {
    double total = 0;
    for (std::size_t i = 0; i < small.size(); ++i) {
      const double c = std::clamp(small[i].dot(large[order[i]]), -1.0, 1.0);
      total += std::acos(c) * 180.0 / M_PI;
    }
    best = std::min(best, total);
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

bool exactly(double a, double b) { return a == b; }

}  // namespace

Outcome check_seld_error() {
  struct Row {
    const char* label;
    double er, f_percent, le, lr_percent, published;
  };
  // Published rows: error rate, F-score (%), localization error (deg), localization recall (%), aggregated error.
  const Row rows[] = {
      {"CLAP+DOAE zero", 0.860, 11.2, 38.4, 40.8, 0.638},      {"CLAP+DOAE few", 0.837, 14.3, 36.2, 46.5, 0.607},
      {"Embed-ACCDOA zero", 0.835, 15.8, 55.2, 29.9, 0.671},   {"Embed-ACCDOA few", 0.777, 19.3, 27.0, 34.1, 0.598},
      {"combination zero", 0.773, 18.7, 51.9, 36.1, 0.628},    {"combination few", 0.756, 19.2, 35.0, 40.2, 0.589},
      {"TNSSE21 combination zero", 1.008, 25.8, 26.2, 46.9, 0.607},
  };
  Outcome o{1, "aggregated SELD error reproduces the 7 published values within 0.001", true, ""};
  double worst = 0.0;
  std::string worst_label;
  for (const auto& r : rows) {
    const double v = seld_error(r.er, r.f_percent / 100.0, r.le, r.lr_percent / 100.0);
    const double dev = std::abs(v - r.published);
    if (dev > worst) {
      worst = dev;
      worst_label = r.label;
    }
    if (!(dev <= 0.001)) o.pass = false;
  }
  o.detail = format("max |deviation| %.5f (%s)", worst, worst_label.c_str());
  return o;
}

Outcome check_accdoa_round_trip() {
  Outcome o{2, "ACCDOA encode/decode round trip over 1e5 pairs below 1e-6", true, ""};
  Stream rng(derive_seed(2, "accdoa"));
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double activity = 1e-6 + (1.0 - 1e-6) * rng.uniform();
    const auto doa = random_direction(rng);
    const auto decoded = decode_accdoa(encode_accdoa(activity, doa));
    double err = std::abs(decoded.activity - activity);
    if (!decoded.doa) {
      err = INFINITY;
    } else {
      err = std::max({err, std::abs(decoded.doa->x - doa.x), std::abs(decoded.doa->y - doa.y),
                      std::abs(decoded.doa->z - doa.z)});
    }
    worst = std::max(worst, err);
  }
  o.pass = worst < 1e-6;
  o.detail = format("max error %.3g", worst);
  return o;
}

Outcome check_pit_oracle() {
  Outcome o{3, "PIT loss equals the exhaustive oracle on 1e3 three-track instances and lower-bounds every fixed permutation",
            true, ""};
  Stream rng(derive_seed(3, "pit"));
  const LossConfig cfg;
  const auto perms = lexicographic_permutations(3);
  double worst = 0.0;
  int min_violations = 0, mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto in = random_pit_instance(rng, 6, 3, 16);
    const TrackFramesView<double> oracle{in.frames, in.tracks, in.dim, in.oe, in.oa};
    const TrackFramesView<double> pred{in.frames, in.tracks, in.dim, in.pe, in.pa};
    const double loss = pit_loss(oracle, pred, cfg).loss;
    const double expected = pit_oracle(in, cfg.beta_embed, cfg.beta_accdoa);
    // Both sides sum the same terms; only floating-point association may differ.
    const double dev = std::abs(loss - expected) / std::max(1.0, std::abs(expected));
    worst = std::max(worst, dev);
    if (dev > 1e-12) ++mismatches;
    for (const auto& p : perms) {
      if (!(loss <= fixed_permutation_loss<double>(oracle, pred, cfg, p))) ++min_violations;
    }
  }
  o.pass = mismatches == 0 && min_violations == 0;
  o.detail = format("max relative deviation %.2g, %d mismatches, %d min-property violations", worst, mismatches,
                    min_violations);
  return o;
}

Outcome check_gradient_gate() {
  Outcome o{4, "finite-difference gradient gate (h=1e-3, 64-bit, relative error < 1e-4)", true, ""};
  const auto cfg = testing::small_network_config();
  const LossConfig weightings[] = {{0.6, 0.4, cfg.n_tracks}, {1.0, 0.0, cfg.n_tracks}, {0.0, 1.0, cfg.n_tracks}};
  std::size_t checked = 0, skipped_tie = 0, skipped_kink = 0, failed = 0, unchecked = 0;
  double worst = 0.0, worst_tensor = 0.0, largest_failing = 0.0, recheck_worst = 0.0;
  std::string worst_name;
  std::uint64_t seed = 40;
  for (const auto& loss : weightings) {
    EmbedAccdoaNet<double> net(cfg, seed);
    testing::randomize_parameters(net, seed + 1);
    const auto input = testing::random_features(cfg.input_channels, cfg.input_bins, 8, seed + 2);
    const auto oracle = testing::random_oracle(net.output_frames(8), cfg.n_tracks, cfg.embed_dim, seed + 3);
    seed += 10;
    const auto report = testing::check_network_gradients(net, input, oracle, loss, 1e-3, 1e-4);
    for (std::size_t ti = 0; ti < report.size(); ++ti) {
      const auto& tc = report[ti];
      checked += tc.checked;
      skipped_tie += tc.skipped_tie;
      skipped_kink += tc.skipped_kink;
      failed += tc.failed;
      // A tensor that is never compared would leave its layer ungated.
      const bool unused = (loss.beta_embed == 0.0 && tc.name.rfind("emb.", 0) == 0) ||
                          (loss.beta_accdoa == 0.0 && tc.name.rfind("doa.", 0) == 0);
      if (tc.checked == 0 && !unused) ++unchecked;
      if (tc.max_rel_error > worst) {
        worst = tc.max_rel_error;
        worst_name = tc.name;
      }
      worst_tensor = std::max(worst_tensor, tc.tensor_rel_error());
      // Diagnostics only: repeat failing entries with a smaller step to separate
      // finite-difference truncation from a wrong analytic gradient.
      for (std::size_t k = 0; k < tc.failed_entries.size(); ++k) {
        const double a = tc.failed_analytic[k];
        largest_failing = std::max(largest_failing, std::abs(a));
        const double n = testing::numeric_gradient(net, input, oracle, loss, ti, tc.failed_entries[k], 1e-5);
        recheck_worst = std::max(recheck_worst, testing::relative_error(a, n));
      }
    }
  }
  o.pass = failed == 0 && unchecked == 0;
  o.detail = format("%zu entries checked, %zu above tolerance, max relative error %.2g (%s), max per-tensor norm-wise "
                    "error %.2g; skipped %zu tie and %zu ReLU-kink points",
                    checked, failed, worst, worst_name.c_str(), worst_tensor, skipped_tie, skipped_kink);
  if (failed > 0) {
    o.detail += format("; failing entries have |gradient| <= %.2g and agree to %.2g at h=1e-5", largest_failing,
                       recheck_worst);
  }
  return o;
}

Outcome check_matcher_oracle() {
  Outcome o{5, "segment matcher equals brute-force assignment up to 4x4 and the hand-evaluated scenarios hold", true,
            ""};
  Stream rng(derive_seed(5, "matcher"));
  int instances = 0, mismatches = 0;
  for (int nr = 0; nr <= 4; ++nr) {
    for (int np = 0; np <= 4; ++np) {
      for (int trial = 0; trial < 400; ++trial) {
        std::vector<CartesianDOA> refs, preds;
        for (int i = 0; i < nr; ++i) refs.push_back(random_direction(rng));
        for (int i = 0; i < np; ++i) preds.push_back(random_direction(rng));
        std::size_t pairs = 0;
        const double best = assignment_oracle(refs, preds, pairs);
        const auto m = match_class_segment(refs, preds);
        const auto h = match_hungarian(refs, preds);
        ++instances;
        const bool ok = m.pairs.size() == pairs && h.pairs.size() == pairs &&
                        std::abs(m.total_distance - best) <= 1e-9 && std::abs(h.total_distance - best) <= 1e-9 &&
                        m.unmatched_refs.size() == refs.size() - pairs &&
                        m.unmatched_preds.size() == preds.size() - pairs;
        if (!ok) ++mismatches;
      }
    }
  }

  const std::vector<AnnotationRecord> ref{{0, 0, 0, 0.0, 0.0}};
  const std::vector<AnnotationRecord> off{{0, 0, 0, 30.0, 0.0}};
  const auto perfect = evaluate(ref, ref);
  const auto deletion = evaluate(ref, {});
  const auto shifted = evaluate(ref, off);
  const bool perfect_ok = exactly(perfect.er20, 0.0) && exactly(perfect.f20, 1.0) && exactly(perfect.le_cd, 0.0) &&
                          exactly(perfect.lr_cd, 1.0);
  const bool deletion_ok = exactly(deletion.er20, 1.0) && exactly(deletion.f20, 0.0) &&
                           exactly(deletion.le_cd, 180.0) && exactly(deletion.lr_cd, 0.0);
  // Azimuths 0 and 30 at zero elevation are exactly 30 degrees apart up to rounding of acos.
  const bool shifted_ok = exactly(shifted.er20, 1.0) && exactly(shifted.f20, 0.0) &&
                          std::abs(shifted.le_cd - 30.0) <= 1e-9 && exactly(shifted.lr_cd, 1.0);
  o.pass = mismatches == 0 && perfect_ok && deletion_ok && shifted_ok;
  o.detail = format("%d/%d random instances match; perfect %s (ER %.3f F %.3f LE %.1f LR %.3f), deletion %s (ER %.3f F %.3f "
                    "LE %.1f LR %.3f), 30-degree %s (ER %.3f F %.3f LE %.6f LR %.3f)",
                    instances - mismatches, instances, perfect_ok ? "ok" : "WRONG", perfect.er20, perfect.f20,
                    perfect.le_cd, perfect.lr_cd, deletion_ok ? "ok" : "WRONG", deletion.er20, deletion.f20,
                    deletion.le_cd, deletion.lr_cd, shifted_ok ? "ok" : "WRONG", shifted.er20, shifted.f20,
                    shifted.le_cd, shifted.lr_cd);
  return o;
}

}  // namespace seld::acceptance
