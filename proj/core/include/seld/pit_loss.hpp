#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "seld/error.hpp"

namespace seld {

struct LossConfig {
  double beta_embed = 0.6;
  double beta_accdoa = 0.4;
  int n_tracks = 3;

  bool operator==(const LossConfig&) const = default;
};

inline constexpr double kNormEps = 1e-8;

/// Track-major frame data: embed is frames × tracks × dim, accdoa frames × tracks × 3.
template <typename T>
struct TrackFramesView {
  int n_frames = 0;
  int n_tracks = 0;
  int dim = 0;
  std::span<const T> embed;
  std::span<const T> accdoa;

  std::span<const T> embedding(int t, int n) const {
    return embed.subspan((static_cast<std::size_t>(t) * n_tracks + n) * dim, dim);
  }
  std::span<const T> accdoa_at(int t, int n) const {
    return accdoa.subspan((static_cast<std::size_t>(t) * n_tracks + n) * 3, 3);
  }
};

template <typename T>
T squared_norm(std::span<const T> v) noexcept {
  T s = 0;
  for (T x : v) s += x * x;
  return s;
}

/// 1 - cos(oracle, predicted); 0 for an all-zero (inactive) oracle. In [0, 2].
template <typename T>
T embed_term(std::span<const T> oracle, std::span<const T> predicted) noexcept {
  const T on = std::sqrt(squared_norm(oracle));
  if (on == T(0)) return T(0);
  T d = 0;
  for (std::size_t i = 0; i < oracle.size(); ++i) d += oracle[i] * predicted[i];
  const T pn = std::sqrt(squared_norm(predicted));
  return T(1) - d / std::max(on * pn, T(kNormEps));
}

/// Gradient of embed_term with respect to `predicted`, scaled by `scale` and added to `out`.
template <typename T>
void embed_term_grad(std::span<const T> oracle, std::span<const T> predicted, T scale, std::span<T> out) noexcept {
  const T on = std::sqrt(squared_norm(oracle));
  if (on == T(0)) return;
  T d = 0;
  for (std::size_t i = 0; i < oracle.size(); ++i) d += oracle[i] * predicted[i];
  const T pn2 = squared_norm(predicted);
  const T pn = std::sqrt(pn2);
  const T denom = on * pn;
  if (denom > T(kNormEps)) {
    const T cos = d / denom;
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      out[i] -= scale * (oracle[i] / denom - cos * predicted[i] / pn2);
    }
  } else {
    for (std::size_t i = 0; i < oracle.size(); ++i) out[i] -= scale * oracle[i] / T(kNormEps);
  }
}

/// Mean over the three components of the squared difference.
template <typename T>
T accdoa_term(std::span<const T> oracle, std::span<const T> predicted) noexcept {
  T s = 0;
  for (int i = 0; i < 3; ++i) {
    const T e = predicted[i] - oracle[i];
    s += e * e;
  }
  return s / T(3);
}

/// All permutations of [0, n) in lexicographic order.
std::vector<std::vector<int>> lexicographic_permutations(int n);

template <typename T>
struct PitResult {
  T loss = 0;
  int n_tracks = 0;
  /// best[t * N + n] is the oracle track routed to predicted track n at frame t.
  std::vector<int> best;
  /// Frames where another permutation came within `tie_margin` of the winner.
  std::vector<bool> near_tie;
};

namespace detail {

template <typename T>
void check_pit_shapes(const TrackFramesView<T>& o, const TrackFramesView<T>& p, const LossConfig& cfg) {
  if (o.n_tracks != p.n_tracks || o.n_tracks != cfg.n_tracks) {
    fail(ErrorKind::shape, "PIT loss: track counts differ (oracle " + std::to_string(o.n_tracks) + ", predicted " +
                               std::to_string(p.n_tracks) + ", config " + std::to_string(cfg.n_tracks) + ")");
  }
  if (o.n_frames != p.n_frames || o.dim != p.dim) {
    fail(ErrorKind::shape, "PIT loss: frame count or embedding size differs");
  }
  if (o.n_tracks < 1 || o.n_tracks > 6) {
    fail(ErrorKind::shape, "PIT loss supports 1 to 6 tracks");
  }
}

}  // namespace detail

/// Frame-level permutation-invariant loss: mean over frames of the minimum over
/// track permutations of (1/N) Σ_n β_E·embed_term + β_A·accdoa_term. Ties keep
/// the lexicographically first permutation.
template <typename T>
PitResult<T> pit_loss(const TrackFramesView<T>& oracle, const TrackFramesView<T>& pred, const LossConfig& cfg,
                      T tie_margin = T(0)) {
  detail::check_pit_shapes(oracle, pred, cfg);
  const int n = cfg.n_tracks;
  const auto perms = lexicographic_permutations(n);
  PitResult<T> r;
  r.n_tracks = n;
  r.best.assign(static_cast<std::size_t>(oracle.n_frames) * n, 0);
  r.near_tie.assign(static_cast<std::size_t>(oracle.n_frames), false);
  std::vector<T> cost(static_cast<std::size_t>(n) * n);
  std::vector<T> vals(perms.size());
  const T be = static_cast<T>(cfg.beta_embed), ba = static_cast<T>(cfg.beta_accdoa);
  T total = 0;
  for (int t = 0; t < oracle.n_frames; ++t) {
    // cost[pred n][oracle m]
    for (int pn = 0; pn < n; ++pn) {
      for (int om = 0; om < n; ++om) {
        T c = 0;
        if (be != T(0)) c += be * embed_term(oracle.embedding(t, om), pred.embedding(t, pn));
        if (ba != T(0)) c += ba * accdoa_term(oracle.accdoa_at(t, om), pred.accdoa_at(t, pn));
        cost[static_cast<std::size_t>(pn) * n + om] = c;
      }
    }
    std::size_t best = 0;
    T best_val = 0;
    for (std::size_t k = 0; k < perms.size(); ++k) {
      T v = 0;
      for (int pn = 0; pn < n; ++pn) v += cost[static_cast<std::size_t>(pn) * n + perms[k][pn]];
      v /= T(n);
      vals[k] = v;
      if (k == 0 || v < best_val) {
        best_val = v;
        best = k;
      }
    }
    for (std::size_t k = 0; k < perms.size(); ++k) {
      if (k != best && vals[k] - best_val <= tie_margin) r.near_tie[static_cast<std::size_t>(t)] = true;
    }
    std::copy(perms[best].begin(), perms[best].end(), r.best.begin() + static_cast<std::ptrdiff_t>(t) * n);
    total += best_val;
  }
  r.loss = oracle.n_frames > 0 ? total / T(oracle.n_frames) : T(0);
  return r;
}

/// Loss under one fixed permutation applied to every frame.
template <typename T>
T fixed_permutation_loss(const TrackFramesView<T>& oracle, const TrackFramesView<T>& pred, const LossConfig& cfg,
                         std::span<const int> perm) {
  detail::check_pit_shapes(oracle, pred, cfg);
  const int n = cfg.n_tracks;
  T total = 0;
  for (int t = 0; t < oracle.n_frames; ++t) {
    T v = 0;
    for (int pn = 0; pn < n; ++pn) {
      v += static_cast<T>(cfg.beta_embed) * embed_term(oracle.embedding(t, perm[pn]), pred.embedding(t, pn)) +
           static_cast<T>(cfg.beta_accdoa) * accdoa_term(oracle.accdoa_at(t, perm[pn]), pred.accdoa_at(t, pn));
    }
    total += v / T(n);
  }
  return oracle.n_frames > 0 ? total / T(oracle.n_frames) : T(0);
}

/// Gradient of pit_loss with respect to the predictions, routed through each
/// frame's winning permutation. `scale` multiplies the result (e.g. 1/batch).
template <typename T>
void pit_loss_grad(const TrackFramesView<T>& oracle, const TrackFramesView<T>& pred, const LossConfig& cfg,
                   const PitResult<T>& result, std::span<T> grad_embed, std::span<T> grad_accdoa, T scale = T(1)) {
  detail::check_pit_shapes(oracle, pred, cfg);
  const int n = cfg.n_tracks;
  if (oracle.n_frames == 0) return;
  const T w = scale / (T(oracle.n_frames) * T(n));
  const T be = static_cast<T>(cfg.beta_embed), ba = static_cast<T>(cfg.beta_accdoa);
  for (int t = 0; t < oracle.n_frames; ++t) {
    for (int pn = 0; pn < n; ++pn) {
      const int om = result.best[static_cast<std::size_t>(t) * n + pn];
      const std::size_t slot = static_cast<std::size_t>(t) * n + pn;
      if (be != T(0)) {
        embed_term_grad(oracle.embedding(t, om), pred.embedding(t, pn), w * be,
                        grad_embed.subspan(slot * oracle.dim, oracle.dim));
      }
      if (ba != T(0)) {
        const auto o = oracle.accdoa_at(t, om);
        const auto p = pred.accdoa_at(t, pn);
        for (int i = 0; i < 3; ++i) grad_accdoa[slot * 3 + i] += w * ba * T(2) * (p[i] - o[i]) / T(3);
      }
    }
  }
}

}  // namespace seld
