#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include "screenprune/rng.hpp"
#include "screenprune/tensor.hpp"

namespace screenprune {

inline void check(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Fully connected layer: out[s][o] = bias[o] + sum_i in[s][i] * weights[o][i].
/// Individual weights are prunable through weight_mask (same shape as weights).
struct DenseLayer {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  Tensor weights;      // [out x in]
  Tensor bias;         // [out]
  Tensor weight_mask;  // [out x in], entries 0 or 1

  struct Cache {
    Tensor input;  // [k x in]
  };

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out)
      : in_features(in),
        out_features(out),
        weights({out, in}),
        bias({out}),
        weight_mask(Tensor::full({out, in}, 1.0f)) {}

  void init_kaiming(Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in_features));
    for (std::size_t i = 0; i < weights.size(); ++i)
      weights[i] = static_cast<float>(rng.uniform(-bound, bound));
    bias.fill(0.0f);
  }

  Tensor forward(const Tensor& x, Cache* cache) const {
    check(x.rank() == 2 && x.dim(1) == in_features, "DenseLayer: input shape mismatch");
    const std::size_t k = x.dim(0);
    Tensor out({k, out_features});
#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(k); ++s) {
      const float* xs = x.data() + s * in_features;
      float* os = out.data() + s * out_features;
      for (std::size_t o = 0; o < out_features; ++o) {
        const float* w = weights.data() + o * in_features;
        double acc = bias[o];
        for (std::size_t i = 0; i < in_features; ++i) acc += double(w[i]) * double(xs[i]);
        os[o] = static_cast<float>(acc);
      }
    }
    if (cache) cache->input = x;
    return out;
  }

  /// Returns dx; writes dweights/dbias. Gradients at masked positions are zeroed.
  Tensor backward(const Tensor& dy, const Cache& cache, Tensor& dweights, Tensor& dbias) const {
    const std::size_t k = dy.dim(0);
    check(dy.rank() == 2 && dy.dim(1) == out_features, "DenseLayer: grad shape mismatch");
    check(cache.input.dim(0) == k, "DenseLayer: stale cache");
    dweights = Tensor({out_features, in_features});
    dbias = Tensor({out_features});
    // Parallel over output units: each (o, i) cell is reduced sequentially,
    // so results do not depend on the thread count.
#pragma omp parallel for schedule(static)
    for (std::int64_t o = 0; o < static_cast<std::int64_t>(out_features); ++o) {
      float* dwo = dweights.data() + o * in_features;
      double db = 0.0;
      for (std::size_t s = 0; s < k; ++s) {
        const float g = dy[s * out_features + o];
        db += g;
        const float* xs = cache.input.data() + s * in_features;
        for (std::size_t i = 0; i < in_features; ++i) dwo[i] += g * xs[i];
      }
      dbias[o] = static_cast<float>(db);
      const float* m = weight_mask.data() + o * in_features;
      for (std::size_t i = 0; i < in_features; ++i) dwo[i] *= m[i];
    }
    Tensor dx({k, in_features});
#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(k); ++s) {
      float* dxs = dx.data() + s * in_features;
      for (std::size_t o = 0; o < out_features; ++o) {
        const float g = dy[s * out_features + o];
        const float* w = weights.data() + o * in_features;
        for (std::size_t i = 0; i < in_features; ++i) dxs[i] += g * w[i];
      }
    }
    return dx;
  }

  void apply_mask() {
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] *= weight_mask[i];
  }

  std::size_t prunable_count() const { return weights.size(); }
  std::size_t kept_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < weight_mask.size(); ++i) n += weight_mask[i] != 0.0f;
    return n;
  }
};

/// 2-D convolution, NCHW, zero padding, direct evaluation.
/// Prunable per channel: out_channel_mask kills whole filters (kernels + bias),
/// in_channel_mask kills the kernel slices reading a pruned upstream channel.
struct Conv2dLayer {
  std::size_t in_channels = 0, out_channels = 0;
  std::size_t kernel_h = 0, kernel_w = 0;
  std::size_t stride = 1, padding = 0;
  Tensor kernels;           // [out_ch x in_ch x kh x kw]
  Tensor bias;              // [out_ch]
  Tensor out_channel_mask;  // [out_ch]
  Tensor in_channel_mask;   // [in_ch]

  struct Cache {
    Tensor input;  // [k x in_ch x h x w]
  };

  Conv2dLayer() = default;
  Conv2dLayer(std::size_t in_ch, std::size_t out_ch, std::size_t kh, std::size_t kw,
              std::size_t stride_ = 1, std::size_t padding_ = 0)
      : in_channels(in_ch),
        out_channels(out_ch),
        kernel_h(kh),
        kernel_w(kw),
        stride(stride_),
        padding(padding_),
        kernels({out_ch, in_ch, kh, kw}),
        bias({out_ch}),
        out_channel_mask(Tensor::full({out_ch}, 1.0f)),
        in_channel_mask(Tensor::full({in_ch}, 1.0f)) {
    check(stride >= 1, "Conv2dLayer: stride must be >= 1");
  }

  void init_kaiming(Rng& rng) {
    const double fan_in = static_cast<double>(in_channels * kernel_h * kernel_w);
    const double bound = std::sqrt(6.0 / fan_in);
    for (std::size_t i = 0; i < kernels.size(); ++i)
      kernels[i] = static_cast<float>(rng.uniform(-bound, bound));
    bias.fill(0.0f);
  }

  std::size_t out_h(std::size_t h) const { return (h + 2 * padding - kernel_h) / stride + 1; }
  std::size_t out_w(std::size_t w) const { return (w + 2 * padding - kernel_w) / stride + 1; }

  Tensor forward(const Tensor& x, Cache* cache) const {
    check(x.rank() == 4 && x.dim(1) == in_channels, "Conv2dLayer: input shape mismatch");
    const std::size_t k = x.dim(0), h = x.dim(2), w = x.dim(3);
    check(h + 2 * padding >= kernel_h && w + 2 * padding >= kernel_w,
          "Conv2dLayer: input smaller than kernel");
    const std::size_t oh = out_h(h), ow = out_w(w);
    Tensor out({k, out_channels, oh, ow});
#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(k); ++s) {
      for (std::size_t oc = 0; oc < out_channels; ++oc) {
        float* om = out.data() + ((s * out_channels + oc) * oh) * ow;
        const float b = bias[oc];
        for (std::size_t i = 0; i < oh * ow; ++i) om[i] = b;
        for (std::size_t ic = 0; ic < in_channels; ++ic) {
          const float* im = x.data() + ((s * in_channels + ic) * h) * w;
          const float* kr = kernels.data() + ((oc * in_channels + ic) * kernel_h) * kernel_w;
          for (std::size_t ky = 0; ky < kernel_h; ++ky) {
            for (std::size_t kx = 0; kx < kernel_w; ++kx) {
              const float kv = kr[ky * kernel_w + kx];
              if (kv == 0.0f) continue;
              for (std::size_t oy = 0; oy < oh; ++oy) {
                const std::int64_t iy =
                    std::int64_t(oy * stride) + std::int64_t(ky) - std::int64_t(padding);
                if (iy < 0 || iy >= std::int64_t(h)) continue;
                const float* irow = im + iy * w;
                float* orow = om + oy * ow;
                for (std::size_t ox = 0; ox < ow; ++ox) {
                  const std::int64_t ix =
                      std::int64_t(ox * stride) + std::int64_t(kx) - std::int64_t(padding);
                  if (ix < 0 || ix >= std::int64_t(w)) continue;
                  orow[ox] += kv * irow[ix];
                }
              }
            }
          }
        }
      }
    }
    if (cache) cache->input = x;
    return out;
  }

  Tensor backward(const Tensor& dy, const Cache& cache, Tensor& dkernels, Tensor& dbias) const {
    const Tensor& x = cache.input;
    const std::size_t k = x.dim(0), h = x.dim(2), w = x.dim(3);
    const std::size_t oh = out_h(h), ow = out_w(w);
    check(dy.rank() == 4 && dy.dim(0) == k && dy.dim(1) == out_channels && dy.dim(2) == oh &&
              dy.dim(3) == ow,
          "Conv2dLayer: grad shape mismatch");
    dkernels = Tensor({out_channels, in_channels, kernel_h, kernel_w});
    dbias = Tensor({out_channels});
    // Kernel/bias gradients: parallel over out channels, sequential reduction inside.
#pragma omp parallel for schedule(static)
    for (std::int64_t oc = 0; oc < static_cast<std::int64_t>(out_channels); ++oc) {
      double db = 0.0;
      for (std::size_t s = 0; s < k; ++s) {
        const float* gm = dy.data() + ((s * out_channels + oc) * oh) * ow;
        for (std::size_t i = 0; i < oh * ow; ++i) db += gm[i];
        for (std::size_t ic = 0; ic < in_channels; ++ic) {
          const float* im = x.data() + ((s * in_channels + ic) * h) * w;
          float* dk = dkernels.data() + ((oc * in_channels + ic) * kernel_h) * kernel_w;
          for (std::size_t ky = 0; ky < kernel_h; ++ky) {
            for (std::size_t kx = 0; kx < kernel_w; ++kx) {
              float acc = 0.0f;
              for (std::size_t oy = 0; oy < oh; ++oy) {
                const std::int64_t iy =
                    std::int64_t(oy * stride) + std::int64_t(ky) - std::int64_t(padding);
                if (iy < 0 || iy >= std::int64_t(h)) continue;
                const float* irow = im + iy * w;
                const float* grow = gm + oy * ow;
                for (std::size_t ox = 0; ox < ow; ++ox) {
                  const std::int64_t ix =
                      std::int64_t(ox * stride) + std::int64_t(kx) - std::int64_t(padding);
                  if (ix < 0 || ix >= std::int64_t(w)) continue;
                  acc += grow[ox] * irow[ix];
                }
              }
              dk[ky * kernel_w + kx] += acc;
            }
          }
        }
      }
      dbias[oc] = static_cast<float>(db);
    }
    zero_masked_kernel_grads(dkernels, dbias);
    // Input gradient: parallel over samples.
    Tensor dx({k, in_channels, h, w});
#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(k); ++s) {
      for (std::size_t oc = 0; oc < out_channels; ++oc) {
        const float* gm = dy.data() + ((s * out_channels + oc) * oh) * ow;
        for (std::size_t ic = 0; ic < in_channels; ++ic) {
          float* dm = dx.data() + ((s * in_channels + ic) * h) * w;
          const float* kr = kernels.data() + ((oc * in_channels + ic) * kernel_h) * kernel_w;
          for (std::size_t ky = 0; ky < kernel_h; ++ky) {
            for (std::size_t kx = 0; kx < kernel_w; ++kx) {
              const float kv = kr[ky * kernel_w + kx];
              if (kv == 0.0f) continue;
              for (std::size_t oy = 0; oy < oh; ++oy) {
                const std::int64_t iy =
                    std::int64_t(oy * stride) + std::int64_t(ky) - std::int64_t(padding);
                if (iy < 0 || iy >= std::int64_t(h)) continue;
                float* drow = dm + iy * w;
                const float* grow = gm + oy * ow;
                for (std::size_t ox = 0; ox < ow; ++ox) {
                  const std::int64_t ix =
                      std::int64_t(ox * stride) + std::int64_t(kx) - std::int64_t(padding);
                  if (ix < 0 || ix >= std::int64_t(w)) continue;
                  drow[ix] += kv * grow[ox];
                }
              }
            }
          }
        }
      }
    }
    return dx;
  }

  void zero_masked_kernel_grads(Tensor& dkernels, Tensor& dbias) const {
    const std::size_t per_oc = in_channels * kernel_h * kernel_w;
    const std::size_t per_ic = kernel_h * kernel_w;
    for (std::size_t oc = 0; oc < out_channels; ++oc) {
      if (out_channel_mask[oc] == 0.0f) {
        float* dk = dkernels.data() + oc * per_oc;
        for (std::size_t i = 0; i < per_oc; ++i) dk[i] = 0.0f;
        dbias[oc] = 0.0f;
        continue;
      }
      for (std::size_t ic = 0; ic < in_channels; ++ic) {
        if (in_channel_mask[ic] != 0.0f) continue;
        float* dk = dkernels.data() + oc * per_oc + ic * per_ic;
        for (std::size_t i = 0; i < per_ic; ++i) dk[i] = 0.0f;
      }
    }
  }

  void apply_mask() {
    const std::size_t per_oc = in_channels * kernel_h * kernel_w;
    const std::size_t per_ic = kernel_h * kernel_w;
    for (std::size_t oc = 0; oc < out_channels; ++oc) {
      if (out_channel_mask[oc] == 0.0f) {
        float* kr = kernels.data() + oc * per_oc;
        for (std::size_t i = 0; i < per_oc; ++i) kr[i] = 0.0f;
        bias[oc] = 0.0f;
        continue;
      }
      for (std::size_t ic = 0; ic < in_channels; ++ic) {
        if (in_channel_mask[ic] != 0.0f) continue;
        float* kr = kernels.data() + oc * per_oc + ic * per_ic;
        for (std::size_t i = 0; i < per_ic; ++i) kr[i] = 0.0f;
      }
    }
  }

  std::size_t prunable_count() const { return kernels.size(); }
  std::size_t kept_count() const {
    std::size_t kept_oc = 0, kept_ic = 0;
    for (std::size_t oc = 0; oc < out_channels; ++oc) kept_oc += out_channel_mask[oc] != 0.0f;
    for (std::size_t ic = 0; ic < in_channels; ++ic) kept_ic += in_channel_mask[ic] != 0.0f;
    return kept_oc * kept_ic * kernel_h * kernel_w;
  }
};

/// Batch normalization over NCHW channels with trainable scale/shift.
/// Train mode normalizes by mini-batch statistics and updates running
/// estimates; eval mode is a fixed per-channel affine transform.
struct BatchNorm2dLayer {
  std::size_t channels = 0;
  float epsilon = 1e-5f;
  float momentum = 0.1f;
  Tensor gamma;         // [ch]
  Tensor beta;          // [ch]
  Tensor running_mean;  // [ch]
  Tensor running_var;   // [ch]
  Tensor channel_mask;  // [ch]

  struct Cache {
    Tensor x_hat;                 // normalized input, [k x ch x h x w]
    std::vector<float> inv_std;   // per channel
    Tensor output;                // post-affine output (kept for channel screening)
  };

  BatchNorm2dLayer() = default;
  explicit BatchNorm2dLayer(std::size_t ch)
      : channels(ch),
        gamma(Tensor::full({ch}, 1.0f)),
        beta({ch}),
        running_mean({ch}),
        running_var(Tensor::full({ch}, 1.0f)),
        channel_mask(Tensor::full({ch}, 1.0f)) {}

  Tensor forward(const Tensor& x, bool train, Cache* cache) {
    check(x.rank() == 4 && x.dim(1) == channels, "BatchNorm2dLayer: input shape mismatch");
    const std::size_t k = x.dim(0), h = x.dim(2), w = x.dim(3);
    const std::size_t plane = h * w;
    const std::size_t m = k * plane;
    Tensor out({k, channels, h, w});
    if (train) {
      check(k >= 2, "BatchNorm2dLayer: train mode needs batch size >= 2");
      if (cache) {
        cache->x_hat = Tensor({k, channels, h, w});
        cache->inv_std.assign(channels, 0.0f);
      }
#pragma omp parallel for schedule(static)
      for (std::int64_t c = 0; c < static_cast<std::int64_t>(channels); ++c) {
        double sum = 0.0;
        for (std::size_t s = 0; s < k; ++s) {
          const float* p = x.data() + ((s * channels + c) * plane);
          for (std::size_t i = 0; i < plane; ++i) sum += p[i];
        }
        const double mean = sum / double(m);
        double var_sum = 0.0;
        for (std::size_t s = 0; s < k; ++s) {
          const float* p = x.data() + ((s * channels + c) * plane);
          for (std::size_t i = 0; i < plane; ++i) {
            const double d = p[i] - mean;
            var_sum += d * d;
          }
        }
        const double var = var_sum / double(m);
        const double inv_std = 1.0 / std::sqrt(var + double(epsilon));
        const float g = gamma[c], b = beta[c];
        for (std::size_t s = 0; s < k; ++s) {
          const float* p = x.data() + ((s * channels + c) * plane);
          float* q = out.data() + ((s * channels + c) * plane);
          float* xh = cache ? cache->x_hat.data() + ((s * channels + c) * plane) : nullptr;
          for (std::size_t i = 0; i < plane; ++i) {
            const float xhat = static_cast<float>((p[i] - mean) * inv_std);
            if (xh) xh[i] = xhat;
            q[i] = g * xhat + b;
          }
        }
        if (cache) cache->inv_std[c] = static_cast<float>(inv_std);
        // Running variance uses the unbiased estimate, as is conventional.
        const double unbiased = m > 1 ? var * double(m) / double(m - 1) : var;
        running_mean[c] = static_cast<float>((1.0 - momentum) * running_mean[c] + momentum * mean);
        running_var[c] =
            static_cast<float>((1.0 - momentum) * running_var[c] + momentum * unbiased);
      }
    } else {
#pragma omp parallel for schedule(static)
      for (std::int64_t c = 0; c < static_cast<std::int64_t>(channels); ++c) {
        const float scale =
            gamma[c] / std::sqrt(running_var[c] + epsilon);
        const float shift = beta[c] - scale * running_mean[c];
        for (std::size_t s = 0; s < k; ++s) {
          const float* p = x.data() + ((s * channels + c) * plane);
          float* q = out.data() + ((s * channels + c) * plane);
          for (std::size_t i = 0; i < plane; ++i) q[i] = scale * p[i] + shift;
        }
      }
    }
    if (cache) cache->output = out;
    return out;
  }

  Tensor backward(const Tensor& dy, const Cache& cache, Tensor& dgamma, Tensor& dbeta) const {
    const std::size_t k = dy.dim(0), h = dy.dim(2), w = dy.dim(3);
    check(dy.dim(1) == channels && cache.x_hat.same_shape(dy), "BatchNorm2dLayer: stale cache");
    const std::size_t plane = h * w;
    const std::size_t m = k * plane;
    dgamma = Tensor({channels});
    dbeta = Tensor({channels});
    Tensor dx({k, channels, h, w});
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(channels); ++c) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t s = 0; s < k; ++s) {
        const float* g = dy.data() + ((s * channels + c) * plane);
        const float* xh = cache.x_hat.data() + ((s * channels + c) * plane);
        for (std::size_t i = 0; i < plane; ++i) {
          sum_dy += g[i];
          sum_dy_xhat += double(g[i]) * double(xh[i]);
        }
      }
      dgamma[c] = static_cast<float>(sum_dy_xhat);
      dbeta[c] = static_cast<float>(sum_dy);
      if (channel_mask[c] == 0.0f) {
        dgamma[c] = 0.0f;
        dbeta[c] = 0.0f;
      }
      const double scale = double(gamma[c]) * double(cache.inv_std[c]) / double(m);
      for (std::size_t s = 0; s < k; ++s) {
        const float* g = dy.data() + ((s * channels + c) * plane);
        const float* xh = cache.x_hat.data() + ((s * channels + c) * plane);
        float* d = dx.data() + ((s * channels + c) * plane);
        for (std::size_t i = 0; i < plane; ++i)
          d[i] = static_cast<float>(scale * (double(m) * g[i] - sum_dy - xh[i] * sum_dy_xhat));
      }
    }
    return dx;
  }

  void apply_mask() {
    for (std::size_t c = 0; c < channels; ++c) {
      if (channel_mask[c] == 0.0f) {
        gamma[c] = 0.0f;
        beta[c] = 0.0f;
      }
    }
  }

  std::size_t kept_channels() const {
    std::size_t n = 0;
    for (std::size_t c = 0; c < channels; ++c) n += channel_mask[c] != 0.0f;
    return n;
  }
};

struct ReluLayer {
  struct Cache {
    Tensor input;
  };

  Tensor forward(const Tensor& x, Cache* cache) const {
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0f ? out[i] : 0.0f;
    if (cache) cache->input = x;
    return out;
  }

  Tensor backward(const Tensor& dy, const Cache& cache) const {
    check(dy.same_shape(cache.input), "ReluLayer: stale cache");
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (cache.input[i] <= 0.0f) dx[i] = 0.0f;
    return dx;
  }
};

/// Max pooling, NCHW. Ties resolve to the first (row-major) maximum.
struct MaxPool2dLayer {
  std::size_t window = 2;
  std::size_t stride = 2;

  struct Cache {
    std::vector<std::uint32_t> argmax;  // flat input index per output cell, per (s, c) plane
    std::vector<std::size_t> in_shape;
  };

  MaxPool2dLayer() = default;
  MaxPool2dLayer(std::size_t window_, std::size_t stride_) : window(window_), stride(stride_) {}

  Tensor forward(const Tensor& x, Cache* cache) const {
    check(x.rank() == 4, "MaxPool2dLayer: input must be 4-d");
    const std::size_t k = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
    check(h >= window && w >= window, "MaxPool2dLayer: input smaller than window");
    const std::size_t oh = (h - window) / stride + 1;
    const std::size_t ow = (w - window) / stride + 1;
    Tensor out({k, ch, oh, ow});
    if (cache) {
      cache->argmax.assign(k * ch * oh * ow, 0);
      cache->in_shape = x.shape();
    }
    const std::size_t planes = k * ch;
#pragma omp parallel for schedule(static)
    for (std::int64_t pc = 0; pc < static_cast<std::int64_t>(planes); ++pc) {
      const float* im = x.data() + pc * h * w;
      float* om = out.data() + pc * oh * ow;
      std::uint32_t* am = cache ? cache->argmax.data() + pc * oh * ow : nullptr;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          std::size_t best = (oy * stride) * w + ox * stride;
          float bv = im[best];
          for (std::size_t wy = 0; wy < window; ++wy) {
            for (std::size_t wx = 0; wx < window; ++wx) {
              const std::size_t idx = (oy * stride + wy) * w + ox * stride + wx;
              if (im[idx] > bv) {
                bv = im[idx];
                best = idx;
              }
            }
          }
          om[oy * ow + ox] = bv;
          if (am) am[oy * ow + ox] = static_cast<std::uint32_t>(best);
        }
      }
    }
    return out;
  }

  Tensor backward(const Tensor& dy, const Cache& cache) const {
    const auto& ishape = cache.in_shape;
    check(ishape.size() == 4, "MaxPool2dLayer: stale cache");
    Tensor dx(ishape);
    const std::size_t h = ishape[2], w = ishape[3];
    const std::size_t oh = dy.dim(2), ow = dy.dim(3);
    const std::size_t planes = ishape[0] * ishape[1];
    check(cache.argmax.size() == planes * oh * ow, "MaxPool2dLayer: cache size mismatch");
#pragma omp parallel for schedule(static)
    for (std::int64_t pc = 0; pc < static_cast<std::int64_t>(planes); ++pc) {
      float* dm = dx.data() + pc * h * w;
      const float* gm = dy.data() + pc * oh * ow;
      const std::uint32_t* am = cache.argmax.data() + pc * oh * ow;
      for (std::size_t i = 0; i < oh * ow; ++i) dm[am[i]] += gm[i];
    }
    return dx;
  }
};

/// Collapses [k x ...] to [k x prod(...)].
struct FlattenLayer {
  struct Cache {
    std::vector<std::size_t> in_shape;
  };

  Tensor forward(const Tensor& x, Cache* cache) const {
    check(x.rank() >= 2, "FlattenLayer: input must have a batch dimension");
    if (cache) cache->in_shape = x.shape();
    Tensor out = x;
    out.reshape({x.dim(0), x.size() / x.dim(0)});
    return out;
  }

  Tensor backward(const Tensor& dy, const Cache& cache) const {
    Tensor dx = dy;
    dx.reshape(cache.in_shape);
    return dx;
  }
};

using Layer = std::variant<DenseLayer, Conv2dLayer, BatchNorm2dLayer, ReluLayer, MaxPool2dLayer,
                           FlattenLayer>;

using LayerCache = std::variant<DenseLayer::Cache, Conv2dLayer::Cache, BatchNorm2dLayer::Cache,
                                ReluLayer::Cache, MaxPool2dLayer::Cache, FlattenLayer::Cache>;

inline const char* layer_kind_name(const Layer& layer) {
  switch (layer.index()) {
    case 0: return "dense";
    case 1: return "conv2d";
    case 2: return "batchnorm2d";
    case 3: return "relu";
    case 4: return "maxpool2d";
    case 5: return "flatten";
  }
  return "?";
}

}  // namespace screenprune
