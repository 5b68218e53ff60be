#pragma once

// Spatial-channel attention over C x H x W feature maps, the per-channel
// importance distribution derived from the attended map, and the top-k
// local/remote channel split.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "edgesim/rng.hpp"

namespace edgesim {

/// Row-major (c, h, w) feature map.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0);
  Tensor3(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> data);

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t plane() const { return height_ * width_; }
  std::size_t size() const { return data_.size(); }

  double& at(std::size_t c, std::size_t h, std::size_t w) {
    return data_[(c * height_ + h) * width_ + w];
  }
  double at(std::size_t c, std::size_t h, std::size_t w) const {
    return data_[(c * height_ + h) * width_ + w];
  }

  double* channel(std::size_t c) { return data_.data() + c * plane(); }
  const double* channel(std::size_t c) const { return data_.data() + c * plane(); }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Shared two-layer MLP of the channel branch: C -> C/r -> C, ReLU between,
/// no biases. w1 is hidden x C, w2 is C x hidden, both row-major.
struct ChannelAttnParams {
  std::size_t channels = 0;
  std::size_t hidden = 0;
  std::vector<double> w1;
  std::vector<double> w2;

  std::size_t reduction() const { return hidden == 0 ? 0 : channels / hidden; }
  void validate() const;

  static ChannelAttnParams zeros(std::size_t channels, std::size_t reduction = 4);
  /// Seeded uniform(-0.1, 0.1) weights.
  static ChannelAttnParams random(std::size_t channels, std::size_t reduction, Rng& rng);
};

/// 3x3 convolution over the [avg; max] channel-pooled maps, stride 1, zero
/// padding 1. kernel is indexed [input map][ky][kx].
struct SpatialAttnParams {
  double kernel[2][3][3] = {};
  double bias = 0.0;

  static SpatialAttnParams random(Rng& rng);
};

/// Per-channel weights summing to one.
struct ImportanceDist {
  std::vector<double> weights;
};

/// Per-channel attention map, length C, entries in (0, 1).
std::vector<double> channel_attention(const Tensor3& f, const ChannelAttnParams& p);

/// Spatial attention map, row-major H x W, entries in (0, 1).
std::vector<double> spatial_attention(const Tensor3& f, const SpatialAttnParams& p);

/// Channel map first, then spatial map of the intermediate result.
Tensor3 apply_scam(const Tensor3& f, const ChannelAttnParams& cp, const SpatialAttnParams& sp);

/// Normalized per-channel L1 mass; uniform when the map is all zeros.
ImportanceDist importance_distribution(const Tensor3& f_out);

struct ChannelSplit {
  std::vector<std::size_t> local;   // ascending channel indices
  std::vector<std::size_t> remote;  // ascending channel indices
};

/// round((1 - xi) * C) most important channels stay local; ties favour the
/// lower index.
ChannelSplit split_topk(const ImportanceDist& d, double xi);

/// Number of channels kept local for a given offload proportion.
std::size_t local_channel_count(std::size_t channels, double xi);

/// Zipf(skew) channel-energy profile, largest first, normalized to sum 1.
std::vector<double> zipf_profile(std::size_t channels, double skew);

/// Skew at which the top-3 share of zipf_profile(channels, .) equals target.
double calibrate_skew(std::size_t channels, double top3_target = 0.6);

/// Seeded synthetic feature map. Channel energies follow a Zipf(skew)
/// profile assigned to channels in a seeded random order; every element
/// carries independent multiplicative noise.
Tensor3 synth_feature_map(std::uint64_t seed, double skew, std::size_t channels,
                          std::size_t height, std::size_t width);
Tensor3 synth_feature_map(Rng& rng, double skew, std::size_t channels, std::size_t height,
                          std::size_t width);

/// Fixture format: header line "C H W", then C*H*W decimals.
Tensor3 read_tensor(std::istream& in);
void write_tensor(std::ostream& out, const Tensor3& t);

}  // namespace edgesim
