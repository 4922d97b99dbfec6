#include "seld/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seld/error.hpp"
#include "seld/random.hpp"

namespace seld {

void NetworkConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::configuration, "network config: " + what); };
  if (n_tracks < 1) bad("n_tracks must be >= 1");
  if (embed_dim < 1) bad("embed_dim must be >= 1");
  if (input_channels < 1 || input_bins < 1) bad("input shape must be positive");
  if (conv_channels.empty()) bad("need at least one convolution block");
  if (time_pool.size() != conv_channels.size() || freq_pool.size() != conv_channels.size()) {
    bad("conv_channels, time_pool and freq_pool must have equal lengths");
  }
  int bins = input_bins;
  for (std::size_t i = 0; i < conv_channels.size(); ++i) {
    if (conv_channels[i] < 1 || time_pool[i] < 1 || freq_pool[i] < 1) bad("widths and pooling factors must be >= 1");
    bins /= freq_pool[i];
  }
  if (bins < 1) bad("frequency pooling leaves no bins");
  if (attention_blocks < 0) bad("attention_blocks must be >= 0");
  if (attention_blocks > 0 && (attention_heads < 1 || hidden_width() % attention_heads != 0)) {
    bad("attention heads must divide the hidden width");
  }
}

int NetworkConfig::time_pooling() const {
  return std::accumulate(time_pool.begin(), time_pool.end(), 1, std::multiplies<>());
}

template <typename T>
std::size_t ParamStore<T>::add(std::string name, std::vector<std::size_t> shape) {
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  tensors_.push_back({std::move(name), std::move(shape), std::vector<T>(n, T(0))});
  return tensors_.size() - 1;
}

template <typename T>
std::size_t ParamStore<T>::index(std::string_view name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return i;
  }
  fail(ErrorKind::shape, "no parameter named '" + std::string(name) + "'");
}

template <typename T>
bool ParamStore<T>::contains(std::string_view name) const {
  return std::any_of(tensors_.begin(), tensors_.end(), [&](const Tensor<T>& t) { return t.name == name; });
}

template <typename T>
std::size_t ParamStore<T>::total_size() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

template <typename T>
ParamStore<T> ParamStore<T>::zeros_like() const {
  ParamStore out;
  for (const auto& t : tensors_) out.add(t.name, t.shape);
  return out;
}

template <typename T>
void ParamStore<T>::set_zero() {
  for (auto& t : tensors_) std::fill(t.data.begin(), t.data.end(), T(0));
}

template <typename T>
bool ParamStore<T>::same_layout(const ParamStore& other) const {
  if (other.count() != count()) return false;
  for (std::size_t i = 0; i < count(); ++i) {
    if (tensors_[i].name != other.tensors_[i].name || tensors_[i].shape != other.tensors_[i].shape) return false;
  }
  return true;
}

template <typename T>
ParamStore<T> convert_params(const ParamStore<float>& src) {
  ParamStore<T> out;
  for (const auto& t : src) {
    const auto i = out.add(t.name, t.shape);
    std::transform(t.data.begin(), t.data.end(), out[i].data.begin(), [](float v) { return static_cast<T>(v); });
  }
  return out;
}

template <typename T>
RowMatrix<T> positional_encoding(int length, int width) {
  RowMatrix<T> pe(length, width);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < width; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / width);
      const double angle = pos * rate;
      pe(pos, i) = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

namespace {

constexpr const char* kBranch[2] = {"emb", "doa"};
constexpr double kLayerNormEps = 1e-5;

template <typename T>
using Map = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMap = Eigen::Map<const RowMatrix<T>>;

std::string conv_name(int b, std::size_t i, const char* what) {
  return std::string(kBranch[b]) + ".conv" + std::to_string(i) + "." + what;
}
std::string att_name(int b, int k, const char* what) {
  return std::string(kBranch[b]) + ".att" + std::to_string(k) + "." + what;
}
std::string head_name(int b, const char* what) { return std::string(kBranch[b]) + ".head." + what; }
std::string stitch_name(std::size_t i) { return "stitch" + std::to_string(i); }

template <typename T>
ConstMap<T> cmat(const Tensor<T>& t, Eigen::Index rows, Eigen::Index cols) {
  return ConstMap<T>(t.data.data(), rows, cols);
}
template <typename T>
Map<T> mat(Tensor<T>& t, Eigen::Index rows, Eigen::Index cols) {
  return Map<T>(t.data.data(), rows, cols);
}
template <typename T>
Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> crow(const Tensor<T>& t) {
  return {t.data.data(), static_cast<Eigen::Index>(t.size())};
}
template <typename T>
Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> row(Tensor<T>& t) {
  return {t.data.data(), static_cast<Eigen::Index>(t.size())};
}

/// Reductions into owned storage keep the summation order independent of
/// where the destination gradient happens to be allocated.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic> column_sums(const Eigen::DenseBase<Derived>& m) {
  return m.colwise().sum();
}
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> row_sums(const Eigen::DenseBase<Derived>& m) {
  return m.rowwise().sum();
}

// 3×3 convolution with zero padding 1, via im2col on a (C, H, W) input stored C × (H·W).
template <typename T>
void im2col(const RowMatrix<T>& x, int c_in, int h, int w, RowMatrix<T>& col) {
  col.resize(static_cast<Eigen::Index>(c_in) * 9, static_cast<Eigen::Index>(h) * w);
  for (int c = 0; c < c_in; ++c) {
    const T* src = x.data() + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = col.data() + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * h * w;
        const int dy = ky - 1, dx = kx - 1;
        for (int yy = 0; yy < h; ++yy) {
          const int sy = yy + dy;
          T* drow = dst + static_cast<std::size_t>(yy) * w;
          if (sy < 0 || sy >= h) {
            std::fill(drow, drow + w, T(0));
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(sy) * w;
          const int lo = std::max(0, -dx), hi = std::min(w, w - dx);
          std::fill(drow, drow + lo, T(0));
          std::copy(srow + lo + dx, srow + hi + dx, drow + lo);
          std::fill(drow + hi, drow + w, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im(const RowMatrix<T>& dcol, int c_in, int h, int w, RowMatrix<T>& dx) {
  dx.setZero(c_in, static_cast<Eigen::Index>(h) * w);
  for (int c = 0; c < c_in; ++c) {
    T* dst = dx.data() + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = dcol.data() + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * h * w;
        const int dy = ky - 1, dxo = kx - 1;
        for (int yy = 0; yy < h; ++yy) {
          const int sy = yy + dy;
          if (sy < 0 || sy >= h) continue;
          const T* srow = src + static_cast<std::size_t>(yy) * w;
          T* drow = dst + static_cast<std::size_t>(sy) * w;
          const int lo = std::max(0, -dxo), hi = std::min(w, w - dxo);
          for (int xx = lo; xx < hi; ++xx) drow[xx + dxo] += srow[xx];
        }
      }
    }
  }
}

template <typename T>
void avg_pool(const RowMatrix<T>& in, int c, int h, int w, int pf, int pt, RowMatrix<T>& out) {
  const int oh = h / pf, ow = w / pt;
  out.setZero(c, static_cast<Eigen::Index>(oh) * ow);
  const T inv = T(1) / static_cast<T>(pf * pt);
  for (int ch = 0; ch < c; ++ch) {
    const T* src = in.data() + static_cast<std::size_t>(ch) * h * w;
    T* dst = out.data() + static_cast<std::size_t>(ch) * oh * ow;
    for (int y = 0; y < oh * pf; ++y) {
      const T* srow = src + static_cast<std::size_t>(y) * w;
      T* drow = dst + static_cast<std::size_t>(y / pf) * ow;
      for (int x = 0; x < ow * pt; ++x) drow[x / pt] += srow[x];
    }
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(oh) * ow; ++i) dst[i] *= inv;
  }
}

template <typename T>
void avg_pool_backward(const RowMatrix<T>& dout, int c, int h, int w, int pf, int pt, RowMatrix<T>& din) {
  const int oh = h / pf, ow = w / pt;
  din.setZero(c, static_cast<Eigen::Index>(h) * w);
  const T inv = T(1) / static_cast<T>(pf * pt);
  for (int ch = 0; ch < c; ++ch) {
    const T* src = dout.data() + static_cast<std::size_t>(ch) * oh * ow;
    T* dst = din.data() + static_cast<std::size_t>(ch) * h * w;
    for (int y = 0; y < oh * pf; ++y) {
      const T* srow = src + static_cast<std::size_t>(y / pf) * ow;
      T* drow = dst + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < ow * pt; ++x) drow[x] = srow[x / pt] * inv;
    }
  }
}

template <typename T>
void fill_uniform(Tensor<T>& t, Stream& rng, double bound) {
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace

template <typename T>
ParamStore<T> EmbedAccdoaNet<T>::make_layout(const NetworkConfig& cfg) {
  cfg.validate();
  ParamStore<T> p;
  const std::size_t h = static_cast<std::size_t>(cfg.hidden_width());
  for (int b = 0; b < 2; ++b) {
    std::size_t c_in = static_cast<std::size_t>(cfg.input_channels);
    for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
      const auto c_out = static_cast<std::size_t>(cfg.conv_channels[i]);
      p.add(conv_name(b, i, "weight"), {c_out, c_in, 3, 3});
      p.add(conv_name(b, i, "bias"), {c_out});
      c_in = c_out;
    }
  }
  if (cfg.cross_stitch) {
    for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
      p.add(stitch_name(i), {static_cast<std::size_t>(cfg.conv_channels[i]), 2, 2});
    }
  }
  for (int b = 0; b < 2; ++b) {
    for (int k = 0; k < cfg.attention_blocks; ++k) {
      for (const char* w : {"wq", "wk", "wv", "wo"}) {
        p.add(att_name(b, k, w), {h, h});
        p.add(att_name(b, k, (std::string("b") + (w + 1)).c_str()), {h});
      }
      p.add(att_name(b, k, "ln_gamma"), {h});
      p.add(att_name(b, k, "ln_beta"), {h});
    }
  }
  const std::size_t out_e = static_cast<std::size_t>(cfg.n_tracks) * cfg.embed_dim;
  const std::size_t out_a = static_cast<std::size_t>(cfg.n_tracks) * 3;
  p.add(head_name(0, "weight"), {h, out_e});
  p.add(head_name(0, "bias"), {out_e});
  p.add(head_name(1, "weight"), {h, out_a});
  p.add(head_name(1, "bias"), {out_a});
  return p;
}

template <typename T>
EmbedAccdoaNet<T>::EmbedAccdoaNet(NetworkConfig config, std::uint64_t init_seed)
    : config_(std::move(config)), params_(make_layout(config_)) {
  Stream rng(derive_seed(init_seed, "init"));
  for (auto& t : params_) {
    const auto& n = t.name;
    const bool is_bias = n.ends_with(".bias") || n.ends_with(".bq") || n.ends_with(".bk") || n.ends_with(".bv") ||
                         n.ends_with(".bo") || n.ends_with(".ln_beta");
    if (is_bias) continue;
    if (n.starts_with("stitch")) {
      for (std::size_t c = 0; c < t.shape[0]; ++c) {
        t.data[c * 4 + 0] = T(1);
        t.data[c * 4 + 3] = T(1);
      }
    } else if (n.ends_with(".ln_gamma")) {
      std::fill(t.data.begin(), t.data.end(), T(1));
    } else if (n.find(".conv") != std::string::npos) {
      const double fan_in = static_cast<double>(t.shape[1] * 9);
      fill_uniform(t, rng, std::sqrt(6.0 / fan_in));
    } else {
      const double fan = static_cast<double>(t.shape[0] + t.shape[1]);
      fill_uniform(t, rng, std::sqrt(6.0 / fan));
    }
  }
}

template <typename T>
EmbedAccdoaNet<T>::EmbedAccdoaNet(NetworkConfig config, ParamStore<T> params)
    : config_(std::move(config)), params_(std::move(params)) {
  if (!params_.same_layout(make_layout(config_))) {
    fail(ErrorKind::compatibility, "parameter set does not match the network configuration");
  }
}

template <typename T>
int EmbedAccdoaNet<T>::output_frames(int input_frames) const {
  const int pool = config_.time_pooling();
  if (input_frames < pool || input_frames % pool != 0) {
    fail(ErrorKind::configuration, "input of " + std::to_string(input_frames) +
                                       " frames is not a positive multiple of the time pooling " +
                                       std::to_string(pool));
  }
  return input_frames / pool;
}

template <typename T>
TrackFrameOutput<T> EmbedAccdoaNet<T>::forward(const FeatureTensor& features, ForwardCache<T>* cache) const {
  const auto& cfg = config_;
  if (features.channels != cfg.input_channels || features.bins != cfg.input_bins) {
    fail(ErrorKind::configuration, "feature shape " + std::to_string(features.channels) + "x" +
                                       std::to_string(features.bins) + " does not match the network input " +
                                       std::to_string(cfg.input_channels) + "x" + std::to_string(cfg.input_bins));
  }
  const int frames_out = output_frames(features.frames);
  ForwardCache<T> local;
  ForwardCache<T>& c = cache ? *cache : local;
  const bool record = c.record_relu;
  c.relu_active.clear();
  c.valid = false;

  RowMatrix<T> x0 = ConstMap<float>(features.values.data(), features.channels,
                                    static_cast<Eigen::Index>(features.bins) * features.frames)
                        .template cast<T>();
  const RowMatrix<T>* input[2] = {&x0, &x0};
  int h = features.bins, w = features.frames, c_in = features.channels;
  const std::size_t n_blocks = cfg.conv_channels.size();
  for (int b = 0; b < 2; ++b) c.branch[b].blocks.assign(n_blocks, {});

  for (std::size_t i = 0; i < n_blocks; ++i) {
    const int c_out = cfg.conv_channels[i];
    const int oh = h / cfg.freq_pool[i], ow = w / cfg.time_pool[i];
    for (int b = 0; b < 2; ++b) {
      auto& blk = c.branch[b].blocks[i];
      blk.in_c = c_in, blk.in_h = h, blk.in_w = w, blk.out_c = c_out, blk.out_h = oh, blk.out_w = ow;
      im2col(*input[b], c_in, h, w, blk.col);
      const auto& wt = params_[conv_name(b, i, "weight")];
      const auto& bias = params_[conv_name(b, i, "bias")];
      blk.act.noalias() = cmat(wt, c_out, static_cast<Eigen::Index>(c_in) * 9) * blk.col;
      blk.act.colwise() += Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(bias.data.data(), c_out);
      if (record) {
        for (Eigen::Index k = 0; k < blk.act.size(); ++k) c.relu_active.push_back(blk.act.data()[k] > T(0));
      }
      blk.act = blk.act.cwiseMax(T(0));
      avg_pool(blk.act, c_out, h, w, cfg.freq_pool[i], cfg.time_pool[i], blk.pooled);
    }
    auto& a = c.branch[0].blocks[i];
    auto& bb = c.branch[1].blocks[i];
    if (cfg.cross_stitch) {
      const auto& s = params_[stitch_name(i)].data;
      a.out.resizeLike(a.pooled);
      bb.out.resizeLike(bb.pooled);
      for (int ch = 0; ch < c_out; ++ch) {
        const T* m = &s[static_cast<std::size_t>(ch) * 4];
        a.out.row(ch) = m[0] * a.pooled.row(ch) + m[1] * bb.pooled.row(ch);
        bb.out.row(ch) = m[2] * a.pooled.row(ch) + m[3] * bb.pooled.row(ch);
      }
    } else {
      a.out = a.pooled;
      bb.out = bb.pooled;
    }
    input[0] = &a.out;
    input[1] = &bb.out;
    h = oh, w = ow, c_in = c_out;
  }

  const int hidden = cfg.hidden_width();
  const int heads = cfg.attention_heads;
  for (int b = 0; b < 2; ++b) {
    auto& br = c.branch[b];
    const auto& last = br.blocks.back().out;
    br.trunk.setZero(w, hidden);
    for (int ch = 0; ch < hidden; ++ch) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) br.trunk(x, ch) += last(ch, static_cast<Eigen::Index>(y) * w + x);
      }
    }
    br.trunk /= static_cast<T>(h);

    RowMatrix<T> seq = br.trunk;
    br.attention.assign(static_cast<std::size_t>(cfg.attention_blocks), {});
    for (int k = 0; k < cfg.attention_blocks; ++k) {
      auto& at = br.attention[static_cast<std::size_t>(k)];
      at.z = seq;
      if (k == 0) at.z += positional_encoding<T>(w, hidden);
      auto proj = [&](const char* wn, const char* bn, RowMatrix<T>& out) {
        out.noalias() = at.z * cmat(params_[att_name(b, k, wn)], hidden, hidden);
        out.rowwise() += crow(params_[att_name(b, k, bn)]);
      };
      proj("wq", "bq", at.q);
      proj("wk", "bk", at.k);
      proj("wv", "bv", at.v);
      const int dh = hidden / heads;
      const T scale = T(1) / std::sqrt(static_cast<T>(dh));
      at.o.setZero(w, hidden);
      at.probs.assign(static_cast<std::size_t>(heads), {});
      for (int j = 0; j < heads; ++j) {
        RowMatrix<T> s = (at.q.middleCols(j * dh, dh) * at.k.middleCols(j * dh, dh).transpose()) * scale;
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
          const T mx = s.row(r).maxCoeff();
          s.row(r) = (s.row(r).array() - mx).exp();
          s.row(r) /= s.row(r).sum();
        }
        at.o.middleCols(j * dh, dh).noalias() = s * at.v.middleCols(j * dh, dh);
        at.probs[static_cast<std::size_t>(j)] = std::move(s);
      }
      RowMatrix<T> attn = at.o * cmat(params_[att_name(b, k, "wo")], hidden, hidden);
      attn.rowwise() += crow(params_[att_name(b, k, "bo")]);
      at.r = at.z + attn;
      at.rhat.resizeLike(at.r);
      at.rstd.assign(static_cast<std::size_t>(w), T(0));
      for (Eigen::Index r = 0; r < at.r.rows(); ++r) {
        const T mean = at.r.row(r).mean();
        const T var = (at.r.row(r).array() - mean).square().mean();
        const T rstd = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
        at.rstd[static_cast<std::size_t>(r)] = rstd;
        at.rhat.row(r) = (at.r.row(r).array() - mean) * rstd;
      }
      seq = (at.rhat.array().rowwise() * crow(params_[att_name(b, k, "ln_gamma")]).array()).matrix();
      seq.rowwise() += crow(params_[att_name(b, k, "ln_beta")]);
    }
    br.y = std::move(seq);
  }

  TrackFrameOutput<T> out;
  out.n_frames = frames_out;
  out.n_tracks = cfg.n_tracks;
  out.dim = cfg.embed_dim;
  const Eigen::Index out_e = static_cast<Eigen::Index>(cfg.n_tracks) * cfg.embed_dim;
  const Eigen::Index out_a = static_cast<Eigen::Index>(cfg.n_tracks) * 3;
  RowMatrix<T> e = c.branch[0].y * cmat(params_[head_name(0, "weight")], hidden, out_e);
  e.rowwise() += crow(params_[head_name(0, "bias")]);
  RowMatrix<T> p = c.branch[1].y * cmat(params_[head_name(1, "weight")], hidden, out_a);
  p.rowwise() += crow(params_[head_name(1, "bias")]);
  p = p.array().tanh().matrix();
  out.embed.assign(e.data(), e.data() + e.size());
  out.accdoa.assign(p.data(), p.data() + p.size());
  c.accdoa_out = std::move(p);
  c.valid = true;
  return out;
}

template <typename T>
void EmbedAccdoaNet<T>::backward(std::span<const T> grad_embed, std::span<const T> grad_accdoa,
                                 const ForwardCache<T>& c, ParamStore<T>& grads) const {
  if (!c.valid) {
    fail(ErrorKind::usage, "backward() needs the cache from a preceding forward()");
  }
  const auto& cfg = config_;
  const int hidden = cfg.hidden_width();
  const int heads = cfg.attention_heads;
  const Eigen::Index frames = c.branch[0].y.rows();
  const Eigen::Index out_e = static_cast<Eigen::Index>(cfg.n_tracks) * cfg.embed_dim;
  const Eigen::Index out_a = static_cast<Eigen::Index>(cfg.n_tracks) * 3;
  if (static_cast<Eigen::Index>(grad_embed.size()) != frames * out_e ||
      static_cast<Eigen::Index>(grad_accdoa.size()) != frames * out_a) {
    fail(ErrorKind::shape, "output gradient size does not match the cached forward pass");
  }

  RowMatrix<T> dy[2];
  {
    const ConstMap<T> ge(grad_embed.data(), frames, out_e);
    mat(grads[head_name(0, "weight")], hidden, out_e).noalias() += c.branch[0].y.transpose() * ge;
    row(grads[head_name(0, "bias")]) += column_sums(ge);
    dy[0].noalias() = ge * cmat(params_[head_name(0, "weight")], hidden, out_e).transpose();

    const ConstMap<T> ga(grad_accdoa.data(), frames, out_a);
    RowMatrix<T> dpre = ga.array() * (T(1) - c.accdoa_out.array().square());
    mat(grads[head_name(1, "weight")], hidden, out_a).noalias() += c.branch[1].y.transpose() * dpre;
    row(grads[head_name(1, "bias")]) += column_sums(dpre);
    dy[1].noalias() = dpre * cmat(params_[head_name(1, "weight")], hidden, out_a).transpose();
  }

  // Attention stacks, last block first.
  for (int b = 0; b < 2; ++b) {
    const auto& br = c.branch[b];
    RowMatrix<T> d = std::move(dy[b]);
    for (int k = cfg.attention_blocks - 1; k >= 0; --k) {
      const auto& at = br.attention[static_cast<std::size_t>(k)];
      const auto gamma = crow(params_[att_name(b, k, "ln_gamma")]);
      row(grads[att_name(b, k, "ln_gamma")]) += column_sums((d.array() * at.rhat.array()).matrix());
      row(grads[att_name(b, k, "ln_beta")]) += column_sums(d);
      RowMatrix<T> drhat = (d.array().rowwise() * gamma.array()).matrix();
      RowMatrix<T> dr(drhat.rows(), drhat.cols());
      const T inv_h = T(1) / static_cast<T>(hidden);
      for (Eigen::Index r = 0; r < drhat.rows(); ++r) {
        const T s1 = drhat.row(r).sum();
        const T s2 = drhat.row(r).dot(at.rhat.row(r));
        dr.row(r) = (at.rstd[static_cast<std::size_t>(r)] * inv_h) *
                    (static_cast<T>(hidden) * drhat.row(r).array() - s1 - at.rhat.row(r).array() * s2).matrix();
      }
      RowMatrix<T> dz = dr;
      mat(grads[att_name(b, k, "wo")], hidden, hidden).noalias() += at.o.transpose() * dr;
      row(grads[att_name(b, k, "bo")]) += column_sums(dr);
      const RowMatrix<T> d_o = dr * cmat(params_[att_name(b, k, "wo")], hidden, hidden).transpose();
      const int dh = hidden / heads;
      const T scale = T(1) / std::sqrt(static_cast<T>(dh));
      RowMatrix<T> dq(at.q.rows(), hidden), dk(at.k.rows(), hidden), dv(at.v.rows(), hidden);
      for (int j = 0; j < heads; ++j) {
        const auto& a = at.probs[static_cast<std::size_t>(j)];
        const auto doj = d_o.middleCols(j * dh, dh);
        RowMatrix<T> da = doj * at.v.middleCols(j * dh, dh).transpose();
        dv.middleCols(j * dh, dh).noalias() = a.transpose() * doj;
        RowMatrix<T> ds = a.array() * (da.array().colwise() - (da.array() * a.array()).rowwise().sum());
        ds *= scale;
        dq.middleCols(j * dh, dh).noalias() = ds * at.k.middleCols(j * dh, dh);
        dk.middleCols(j * dh, dh).noalias() = ds.transpose() * at.q.middleCols(j * dh, dh);
      }
      auto proj_back = [&](const char* wn, const char* bn, const RowMatrix<T>& g) {
        mat(grads[att_name(b, k, wn)], hidden, hidden).noalias() += at.z.transpose() * g;
        row(grads[att_name(b, k, bn)]) += column_sums(g);
        dz.noalias() += g * cmat(params_[att_name(b, k, wn)], hidden, hidden).transpose();
      };
      proj_back("wq", "bq", dq);
      proj_back("wk", "bk", dk);
      proj_back("wv", "bv", dv);
      d = std::move(dz);
    }
    dy[b] = std::move(d);
  }

  // Frequency mean back into the last convolution block.
  const std::size_t n_blocks = cfg.conv_channels.size();
  RowMatrix<T> dout[2];
  for (int b = 0; b < 2; ++b) {
    const auto& blk = c.branch[b].blocks.back();
    const int h = blk.out_h, w = blk.out_w;
    dout[b].resize(blk.out_c, static_cast<Eigen::Index>(h) * w);
    const T inv = T(1) / static_cast<T>(h);
    for (int ch = 0; ch < blk.out_c; ++ch) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) dout[b](ch, static_cast<Eigen::Index>(y) * w + x) = dy[b](x, ch) * inv;
      }
    }
  }

  for (std::size_t ii = n_blocks; ii-- > 0;) {
    const auto& a = c.branch[0].blocks[ii];
    const auto& bb = c.branch[1].blocks[ii];
    RowMatrix<T> dpooled[2];
    if (cfg.cross_stitch) {
      const auto& s = params_[stitch_name(ii)].data;
      auto& gs = grads[stitch_name(ii)].data;
      dpooled[0].resizeLike(a.pooled);
      dpooled[1].resizeLike(bb.pooled);
      for (int ch = 0; ch < a.out_c; ++ch) {
        const T* m = &s[static_cast<std::size_t>(ch) * 4];
        T* g = &gs[static_cast<std::size_t>(ch) * 4];
        g[0] += dout[0].row(ch).dot(a.pooled.row(ch));
        g[1] += dout[0].row(ch).dot(bb.pooled.row(ch));
        g[2] += dout[1].row(ch).dot(a.pooled.row(ch));
        g[3] += dout[1].row(ch).dot(bb.pooled.row(ch));
        dpooled[0].row(ch) = m[0] * dout[0].row(ch) + m[2] * dout[1].row(ch);
        dpooled[1].row(ch) = m[1] * dout[0].row(ch) + m[3] * dout[1].row(ch);
      }
    } else {
      dpooled[0] = std::move(dout[0]);
      dpooled[1] = std::move(dout[1]);
    }
    for (int b = 0; b < 2; ++b) {
      const auto& blk = c.branch[b].blocks[ii];
      RowMatrix<T> dact;
      avg_pool_backward(dpooled[b], blk.out_c, blk.in_h, blk.in_w, cfg.freq_pool[ii], cfg.time_pool[ii], dact);
      dact = (blk.act.array() > T(0)).select(dact, T(0));
      const Eigen::Index k = static_cast<Eigen::Index>(blk.in_c) * 9;
      mat(grads[conv_name(b, ii, "weight")], blk.out_c, k).noalias() += dact * blk.col.transpose();
      Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(grads[conv_name(b, ii, "bias")].data.data(), blk.out_c) +=
          row_sums(dact);
      if (ii > 0) {
        RowMatrix<T> dcol = cmat(params_[conv_name(b, ii, "weight")], blk.out_c, k).transpose() * dact;
        col2im(dcol, blk.in_c, blk.in_h, blk.in_w, dout[b]);
      }
    }
  }
}

template class ParamStore<float>;
template class ParamStore<double>;
template class EmbedAccdoaNet<float>;
template class EmbedAccdoaNet<double>;
template ParamStore<float> convert_params<float>(const ParamStore<float>&);
template ParamStore<double> convert_params<double>(const ParamStore<float>&);
template RowMatrix<float> positional_encoding<float>(int, int);
template RowMatrix<double> positional_encoding<double>(int, int);

}  // namespace seld
