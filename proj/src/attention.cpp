#include "edgesim/attention.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "edgesim/errors.hpp"
#include "edgesim/kernels.hpp"

namespace edgesim {
namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require_nonempty(const Tensor3& f, const char* op) {
  if (f.size() == 0) throw DomainError(std::string(op) + ": empty feature map");
}

// MLP(v) = w2 * relu(w1 * v)
std::vector<double> channel_mlp(const ChannelAttnParams& p, const std::vector<double>& v) {
  const auto& k = kernels::active();
  std::vector<double> hidden(p.hidden);
  for (std::size_t j = 0; j < p.hidden; ++j) {
    hidden[j] = k.dot(p.w1.data() + j * p.channels, v.data(), p.channels);
  }
  k.relu(hidden.data(), hidden.size());
  std::vector<double> out(p.channels);
  for (std::size_t c = 0; c < p.channels; ++c) {
    out[c] = k.dot(p.w2.data() + c * p.hidden, hidden.data(), p.hidden);
  }
  return out;
}

}  // namespace

Tensor3::Tensor3(std::size_t channels, std::size_t height, std::size_t width, double fill)
    : channels_(channels), height_(height), width_(width), data_(channels * height * width, fill) {}

Tensor3::Tensor3(std::size_t channels, std::size_t height, std::size_t width,
                 std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  if (data_.size() != channels * height * width) {
    throw DomainError("Tensor3: data length does not match C*H*W");
  }
}

bool Tensor3::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void ChannelAttnParams::validate() const {
  if (channels == 0 || hidden == 0) throw DomainError("channel attention: empty MLP");
  if (w1.size() != hidden * channels || w2.size() != channels * hidden) {
    throw DomainError("channel attention: weight shapes do not match C and C/r");
  }
}

ChannelAttnParams ChannelAttnParams::zeros(std::size_t channels, std::size_t reduction) {
  if (reduction == 0) throw DomainError("channel attention: reduction must be positive");
  const std::size_t hidden = std::max<std::size_t>(1, channels / reduction);
  return {channels, hidden, std::vector<double>(hidden * channels, 0.0),
          std::vector<double>(channels * hidden, 0.0)};
}

ChannelAttnParams ChannelAttnParams::random(std::size_t channels, std::size_t reduction, Rng& rng) {
  ChannelAttnParams p = zeros(channels, reduction);
  for (double& w : p.w1) w = rng.uniform(-0.1, 0.1);
  for (double& w : p.w2) w = rng.uniform(-0.1, 0.1);
  return p;
}

SpatialAttnParams SpatialAttnParams::random(Rng& rng) {
  SpatialAttnParams p;
  for (auto& map : p.kernel) {
    for (auto& row : map) {
      for (double& w : row) w = rng.uniform(-0.1, 0.1);
    }
  }
  p.bias = rng.uniform(-0.1, 0.1);
  return p;
}

std::vector<double> channel_attention(const Tensor3& f, const ChannelAttnParams& p) {
  require_nonempty(f, "channel_attention");
  p.validate();
  if (p.channels != f.channels()) throw DomainError("channel_attention: channel count mismatch");
  const auto& k = kernels::active();
  const std::size_t plane = f.plane();
  std::vector<double> avg(f.channels());
  std::vector<double> mx(f.channels());
  for (std::size_t c = 0; c < f.channels(); ++c) {
    avg[c] = k.sum(f.channel(c), plane) / static_cast<double>(plane);
    mx[c] = k.max(f.channel(c), plane);
  }
  std::vector<double> out = channel_mlp(p, avg);
  const std::vector<double> from_max = channel_mlp(p, mx);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = sigmoid(out[c] + from_max[c]);
  return out;
}

std::vector<double> spatial_attention(const Tensor3& f, const SpatialAttnParams& p) {
  require_nonempty(f, "spatial_attention");
  const std::size_t height = f.height();
  const std::size_t width = f.width();
  const std::size_t plane = f.plane();
  const auto& k = kernels::active();

  // Channel-axis pooling: pooled[0] = mean, pooled[1] = max.
  std::vector<double> avg(f.channel(0), f.channel(0) + plane);
  std::vector<double> mx = avg;
  for (std::size_t c = 1; c < f.channels(); ++c) {
    const double* src = f.channel(c);
    k.axpy(1.0, src, avg.data(), plane);
    for (std::size_t i = 0; i < plane; ++i) mx[i] = src[i] > mx[i] ? src[i] : mx[i];
  }
  k.scale(1.0 / static_cast<double>(f.channels()), avg.data(), plane);
  const std::vector<double>* pooled[2] = {&avg, &mx};

  std::vector<double> out(plane);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double acc = p.bias;
      for (std::size_t m = 0; m < 2; ++m) {
        for (int dy = -1; dy <= 1; ++dy) {
          const auto yy = static_cast<std::ptrdiff_t>(y) + dy;
          if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(height)) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const auto xx = static_cast<std::ptrdiff_t>(x) + dx;
            if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(width)) continue;
            acc += p.kernel[m][dy + 1][dx + 1] *
                   (*pooled[m])[static_cast<std::size_t>(yy) * width + static_cast<std::size_t>(xx)];
          }
        }
      }
      out[y * width + x] = sigmoid(acc);
    }
  }
  return out;
}

Tensor3 apply_scam(const Tensor3& f, const ChannelAttnParams& cp, const SpatialAttnParams& sp) {
  const auto& k = kernels::active();
  const std::vector<double> mc = channel_attention(f, cp);
  Tensor3 out = f;
  for (std::size_t c = 0; c < out.channels(); ++c) k.scale(mc[c], out.channel(c), out.plane());
  const std::vector<double> ms = spatial_attention(out, sp);
  for (std::size_t c = 0; c < out.channels(); ++c) k.mul(ms.data(), out.channel(c), out.plane());
  return out;
}

ImportanceDist importance_distribution(const Tensor3& f_out) {
  require_nonempty(f_out, "importance_distribution");
  const std::size_t channels = f_out.channels();
  ImportanceDist d;
  d.weights.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const double* src = f_out.channel(c);
    double mass = 0.0;
    for (std::size_t i = 0; i < f_out.plane(); ++i) mass += std::abs(src[i]);
    d.weights[c] = mass;
  }
  const double total = std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
  if (total <= 0.0) {
    std::fill(d.weights.begin(), d.weights.end(), 1.0 / static_cast<double>(channels));
  } else {
    for (double& w : d.weights) w /= total;
  }
  return d;
}

std::size_t local_channel_count(std::size_t channels, double xi) {
  if (!(xi >= 0.0 && xi <= 1.0)) throw DomainError("split_topk: offload proportion outside [0, 1]");
  // std::round rounds half away from zero.
  const double k = std::round((1.0 - xi) * static_cast<double>(channels));
  return std::min(channels, static_cast<std::size_t>(k));
}

ChannelSplit split_topk(const ImportanceDist& d, double xi) {
  const std::size_t channels = d.weights.size();
  const std::size_t k_local = local_channel_count(channels, xi);
  std::vector<std::size_t> order(channels);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d.weights[a] > d.weights[b]; });
  ChannelSplit split;
  split.local.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_local));
  split.remote.assign(order.begin() + static_cast<std::ptrdiff_t>(k_local), order.end());
  std::sort(split.local.begin(), split.local.end());
  std::sort(split.remote.begin(), split.remote.end());
  return split;
}

std::vector<double> zipf_profile(std::size_t channels, double skew) {
  if (channels == 0) throw DomainError("zipf_profile: no channels");
  std::vector<double> p(channels);
  for (std::size_t r = 0; r < channels; ++r) p[r] = std::pow(static_cast<double>(r + 1), -skew);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= total;
  return p;
}

double calibrate_skew(std::size_t channels, double top3_target) {
  if (channels <= 3) throw DomainError("calibrate_skew: need more than three channels");
  const double uniform_share = 3.0 / static_cast<double>(channels);
  if (!(top3_target > uniform_share && top3_target < 1.0)) {
    throw DomainError("calibrate_skew: target must lie between the uniform share and 1");
  }
  auto top3 = [&](double s) {
    const auto p = zipf_profile(channels, s);
    return p[0] + p[1] + p[2];
  };
  double lo = 0.0;
  double hi = 1.0;
  while (top3(hi) < top3_target) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (top3(mid) < top3_target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Tensor3 synth_feature_map(Rng& rng, double skew, std::size_t channels, std::size_t height,
                          std::size_t width) {
  if (channels == 0 || height == 0 || width == 0) {
    throw DomainError("synth_feature_map: empty geometry");
  }
  if (!(skew >= 0.0) || !std::isfinite(skew)) throw DomainError("synth_feature_map: bad skew");
  const std::vector<double> profile = zipf_profile(channels, skew);

  // Seeded Fisher-Yates: which channel receives which Zipf rank.
  std::vector<std::size_t> rank_of(channels);
  std::iota(rank_of.begin(), rank_of.end(), std::size_t{0});
  for (std::size_t i = channels - 1; i > 0; --i) {
    std::swap(rank_of[i], rank_of[rng.below(i + 1)]);
  }

  Tensor3 t(channels, height, width);
  for (std::size_t c = 0; c < channels; ++c) {
    const double amplitude = profile[rank_of[c]];
    double* dst = t.channel(c);
    for (std::size_t i = 0; i < t.plane(); ++i) dst[i] = amplitude * rng.uniform(0.5, 1.5);
  }
  return t;
}

Tensor3 synth_feature_map(std::uint64_t seed, double skew, std::size_t channels,
                          std::size_t height, std::size_t width) {
  Rng rng(seed);
  return synth_feature_map(rng, skew, channels, height, width);
}

Tensor3 read_tensor(std::istream& in) {
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  if (!(in >> c >> h >> w) || c == 0 || h == 0 || w == 0) {
    throw DomainError("tensor fixture: bad \"C H W\" header");
  }
  std::vector<double> data(c * h * w);
  for (double& x : data) {
    if (!(in >> x)) throw DomainError("tensor fixture: expected C*H*W values");
  }
  Tensor3 t(c, h, w, std::move(data));
  if (!t.all_finite()) throw DomainError("tensor fixture: non-finite value");
  return t;
}

void write_tensor(std::ostream& out, const Tensor3& t) {
  const auto old_precision = out.precision(17);
  out << t.channels() << ' ' << t.height() << ' ' << t.width() << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << t.data()[i] << ((i + 1) % t.width() == 0 ? '\n' : ' ');
  }
  out.precision(old_precision);
}

}  // namespace edgesim
