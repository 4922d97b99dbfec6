#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "seld/features.hpp"
#include "seld/pit_loss.hpp"

namespace seld {

/// Two-branch track-wise network settings. Branch hidden widths are equal;
/// the attention width is the last convolution width.
struct NetworkConfig {
  int input_channels = kFeatureChannels;
  int input_bins = 257;
  int n_tracks = 3;
  int embed_dim = 512;
  std::vector<int> conv_channels{16, 32, 64};
  std::vector<int> time_pool{2, 2, 2};
  std::vector<int> freq_pool{4, 4, 4};
  int attention_blocks = 1;
  int attention_heads = 2;
  bool cross_stitch = true;

  bool operator==(const NetworkConfig&) const = default;
  /// Throws configuration on inconsistent settings.
  void validate() const;
  int time_pooling() const;
  int hidden_width() const { return conv_channels.back(); }
};

/// A named dense parameter (row-major).
template <typename T>
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<T> data;

  std::size_t size() const noexcept { return data.size(); }
};

/// Ordered list of named tensors; gradients and optimizer moments share the layout.
template <typename T>
class ParamStore {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape);
  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const;

  Tensor<T>& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor<T>& operator[](std::size_t i) const { return tensors_[i]; }
  Tensor<T>& operator[](std::string_view name) { return tensors_[index(name)]; }
  const Tensor<T>& operator[](std::string_view name) const { return tensors_[index(name)]; }

  std::size_t count() const noexcept { return tensors_.size(); }
  std::size_t total_size() const noexcept;
  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  /// Same names and shapes, all zeros.
  ParamStore zeros_like() const;
  void set_zero();
  bool same_layout(const ParamStore& other) const;

 private:
  std::vector<Tensor<T>> tensors_;
};

/// Network outputs for one segment. embed is frames × tracks × dim (raw, not
/// normalized); accdoa is frames × tracks × 3.
template <typename T>
struct TrackFrameOutput {
  int n_frames = 0;
  int n_tracks = 0;
  int dim = 0;
  std::vector<T> embed;
  std::vector<T> accdoa;

  TrackFramesView<T> view() const { return {n_frames, n_tracks, dim, embed, accdoa}; }
};

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Intermediate values kept by forward() for backward().
template <typename T>
struct ForwardCache {
  struct ConvBlock {
    int in_c = 0, in_h = 0, in_w = 0, out_c = 0, out_h = 0, out_w = 0;
    RowMatrix<T> col;     ///< im2col of the block input
    RowMatrix<T> act;     ///< ReLU output, out_c × (in_h·in_w)
    RowMatrix<T> pooled;  ///< before cross-stitch, out_c × (out_h·out_w)
    RowMatrix<T> out;     ///< after cross-stitch
  };
  struct Attention {
    RowMatrix<T> z, q, k, v, o, r, rhat;
    std::vector<RowMatrix<T>> probs;  ///< per head, L × L
    std::vector<T> rstd;
  };
  struct Branch {
    std::vector<ConvBlock> blocks;
    std::vector<Attention> attention;
    RowMatrix<T> trunk;  ///< L × H sequence entering attention
    RowMatrix<T> y;      ///< L × H after attention
  };
  bool valid = false;
  Branch branch[2];  ///< 0 = embedding branch, 1 = ACCDOA branch
  RowMatrix<T> accdoa_out;  ///< tanh output, L × 3N
  bool record_relu = false;
  std::vector<bool> relu_active;  ///< sign pattern of every ReLU input when record_relu is set
};

/// Embedding + ACCDOA network with cross-stitch sharing between the two
/// convolution stacks, one self-attention stack per branch and a linear head
/// per branch (tanh on ACCDOA).
template <typename T>
class EmbedAccdoaNet {
 public:
  EmbedAccdoaNet(NetworkConfig config, std::uint64_t init_seed);
  EmbedAccdoaNet(NetworkConfig config, ParamStore<T> params);

  const NetworkConfig& config() const noexcept { return config_; }
  ParamStore<T>& params() noexcept { return params_; }
  const ParamStore<T>& params() const noexcept { return params_; }

  /// Output frames for a segment of `input_frames` (must divide evenly).
  int output_frames(int input_frames) const;

  /// Deterministic; safe to call concurrently on a const network.
  TrackFrameOutput<T> forward(const FeatureTensor& features, ForwardCache<T>* cache = nullptr) const;

  /// Accumulates parameter gradients for the given output gradients into `grads`.
  void backward(std::span<const T> grad_embed, std::span<const T> grad_accdoa, const ForwardCache<T>& cache,
                ParamStore<T>& grads) const;

  /// Builds an empty store with this configuration's parameter layout.
  static ParamStore<T> make_layout(const NetworkConfig& config);

 private:
  NetworkConfig config_;
  ParamStore<T> params_;
};

/// Fixed sinusoidal positional encoding, L × H.
template <typename T>
RowMatrix<T> positional_encoding(int length, int width);

template <typename T>
ParamStore<T> convert_params(const ParamStore<float>& src);

extern template class ParamStore<float>;
extern template class ParamStore<double>;
extern template class EmbedAccdoaNet<float>;
extern template class EmbedAccdoaNet<double>;

}  // namespace seld
