/* Copyright 2026 The LWA Toolkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lwa/error.hpp"
#include "lwa/lwa.hpp"
#include "lwa/raster.hpp"

namespace lwa {

enum class LatentSource { kNoise, kCondition, kInjected, kTarget };

/// h x w grid of c-channel latent vectors, stored one row per cell in
/// row-major cell order.
template <typename Scalar>
class LatentGrid {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  LatentGrid(Eigen::Index height, Eigen::Index width, Matrix data,
             LatentSource source = LatentSource::kCondition)
      : height_(height), width_(width), data_(std::move(data)), source_(source) {
    if (height_ < 1 || width_ < 1) {
      throw Error(ErrorCode::kInvalidArgument, "latent grid must be at least 1x1");
    }
    if (data_.rows() != height_ * width_ || data_.cols() < 1) {
      throw Error(ErrorCode::kDimensionMismatch, "latent data does not match its grid");
    }
    if (!data_.allFinite()) {
      throw Error(ErrorCode::kNumerical, "latent grid has non-finite entries");
    }
  }

  Eigen::Index height() const { return height_; }
  Eigen::Index width() const { return width_; }
  Eigen::Index cells() const { return data_.rows(); }
  Eigen::Index channels() const { return data_.cols(); }
  const Matrix& data() const { return data_; }
  LatentSource source() const { return source_; }

  Scalar at(Eigen::Index y, Eigen::Index x, Eigen::Index c) const {
    return data_(y * width_ + x, c);
  }

  bool same_grid(const LatentGrid& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

 private:
  Eigen::Index height_;
  Eigen::Index width_;
  Matrix data_;
  LatentSource source_;
};

enum class Reduction { kMean, kFlatten };

/// Deterministic patch-pooling encoder. `kMean` averages each
/// non-overlapping patch per channel; `kFlatten` stacks the patch's pixels
/// into channels ((dy * patch + dx) * C + c).
struct EncoderStub {
  int patch = 1;
  Reduction reduction = Reduction::kMean;
};

template <typename Scalar>
LatentGrid<Scalar> encode_condition(const ConditionMap& cond, const EncoderStub& enc) {
  const PixelDomain& d = cond.domain();
  const int p = enc.patch;
  if (p < 1 || d.height % p != 0 || d.width % p != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "patch " + std::to_string(p) + " does not divide " +
                    std::to_string(d.height) + "x" + std::to_string(d.width));
  }
  const Eigen::Index h = d.height / p;
  const Eigen::Index w = d.width / p;
  const Eigen::Index c = cond.channels();
  const Eigen::Index out_c = enc.reduction == Reduction::kMean ? c : c * p * p;
  typename LatentGrid<Scalar>::Matrix out =
      LatentGrid<Scalar>::Matrix::Zero(h * w, out_c);
  for (Eigen::Index gy = 0; gy < h; ++gy) {
    for (Eigen::Index gx = 0; gx < w; ++gx) {
      const Eigen::Index cell = gy * w + gx;
      for (int dy = 0; dy < p; ++dy) {
        for (int dx = 0; dx < p; ++dx) {
          const auto row = cond.values().row(d.index(gy * p + dy, gx * p + dx));
          if (enc.reduction == Reduction::kMean) {
            out.row(cell) += row.matrix().template cast<Scalar>();
          } else {
            out.row(cell).segment((dy * p + dx) * c, c) = row.matrix().template cast<Scalar>();
          }
        }
      }
      if (enc.reduction == Reduction::kMean) out.row(cell) /= static_cast<Scalar>(p * p);
    }
  }
  return LatentGrid<Scalar>(h, w, std::move(out), LatentSource::kCondition);
}

/// Channel concatenation in the given order.
template <typename Scalar>
LatentGrid<Scalar> concat_latents(std::span<const LatentGrid<Scalar>> latents) {
  if (latents.empty()) throw Error(ErrorCode::kEmptyInput, "nothing to concatenate");
  Eigen::Index channels = 0;
  for (const auto& l : latents) {
    if (!l.same_grid(latents.front())) {
      throw Error(ErrorCode::kDimensionMismatch, "latent grids differ in spatial size");
    }
    channels += l.channels();
  }
  typename LatentGrid<Scalar>::Matrix out(latents.front().cells(), channels);
  Eigen::Index col = 0;
  for (const auto& l : latents) {
    out.middleCols(col, l.channels()) = l.data();
    col += l.channels();
  }
  return LatentGrid<Scalar>(latents.front().height(), latents.front().width(),
                            std::move(out), LatentSource::kCondition);
}

/// Encodes every map of a stack in canonical modality order and
/// concatenates the results.
template <typename Scalar>
LatentGrid<Scalar> encode_stack(const ConditionStack& stack, const EncoderStub& enc) {
  std::vector<LatentGrid<Scalar>> parts;
  for (const auto& m : stack.maps()) parts.push_back(encode_condition<Scalar>(m, enc));
  return concat_latents<Scalar>(parts);
}

/// Trainable per-cell linear map from condition channels to latent channels.
template <typename Scalar>
struct ProjectionLayer {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix weight;  // c_in x c_out
  Vector bias;    // c_out

  static ProjectionLayer zero(Eigen::Index c_in, Eigen::Index c_out) {
    return ProjectionLayer{Matrix::Zero(c_in, c_out), Vector::Zero(c_out)};
  }
  Eigen::Index c_in() const { return weight.rows(); }
  Eigen::Index c_out() const { return weight.cols(); }
};

/// x' = x + W^T v + b per cell.
template <typename Scalar>
LatentGrid<Scalar> project_and_inject(const LatentGrid<Scalar>& x,
                                      const LatentGrid<Scalar>& cond,
                                      const ProjectionLayer<Scalar>& xi) {
  if (!x.same_grid(cond)) {
    throw Error(ErrorCode::kDimensionMismatch, "noise and condition latents differ in size");
  }
  if (xi.c_in() != cond.channels() || xi.c_out() != x.channels() ||
      xi.bias.size() != xi.c_out()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "projection is " + std::to_string(xi.c_in()) + "->" +
                    std::to_string(xi.c_out()) + " but latents are " +
                    std::to_string(cond.channels()) + "->" + std::to_string(x.channels()));
  }
  typename LatentGrid<Scalar>::Matrix out = x.data() + cond.data() * xi.weight;
  out.rowwise() += xi.bias.transpose();
  return LatentGrid<Scalar>(x.height(), x.width(), std::move(out), LatentSource::kInjected);
}

template <typename Scalar>
using Denoiser = std::function<LatentGrid<Scalar>(const LatentGrid<Scalar>&)>;

template <typename Scalar>
Denoiser<Scalar> identity_denoiser() {
  return [](const LatentGrid<Scalar>& x) { return x; };
}

/// Mean over cells and channels of (denoiser(x') - x0)^2.
template <typename Scalar>
Scalar adapt_loss(const LatentGrid<Scalar>& x_prime, const LatentGrid<Scalar>& x0,
                  const Denoiser<Scalar>& denoiser = identity_denoiser<Scalar>()) {
  const LatentGrid<Scalar> out = denoiser(x_prime);
  if (!out.same_grid(x0) || out.channels() != x0.channels()) {
    throw Error(ErrorCode::kDimensionMismatch, "denoised latent and target differ in shape");
  }
  return (out.data() - x0.data()).squaredNorm() / static_cast<Scalar>(x0.data().size());
}

template <typename Scalar>
struct TrainingSample {
  LatentGrid<Scalar> x;
  LatentGrid<Scalar> cond;
  LatentGrid<Scalar> x0;
};

template <typename Scalar>
struct ProjectionGradient {
  typename ProjectionLayer<Scalar>::Matrix d_weight;
  typename ProjectionLayer<Scalar>::Vector d_bias;
  Scalar loss;
};

/// Closed-form gradient of the identity-denoiser adaptation loss, averaged
/// over every cell and channel of the batch: with r = x + W^T v + b - x0,
/// dW = (2/N) sum v r^T and db = (2/N) sum r.
template <typename Scalar>
ProjectionGradient<Scalar> grad_xi(std::span<const TrainingSample<Scalar>> batch,
                                   const ProjectionLayer<Scalar>& xi) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyInput, "gradient of an empty batch");
  ProjectionGradient<Scalar> g{ProjectionLayer<Scalar>::Matrix::Zero(xi.c_in(), xi.c_out()),
                               ProjectionLayer<Scalar>::Vector::Zero(xi.c_out()), Scalar(0)};
  Eigen::Index n = 0;
  for (const auto& s : batch) {
    if (!s.x0.same_grid(s.x) || s.x0.channels() != s.x.channels()) {
      throw Error(ErrorCode::kDimensionMismatch, "target latent differs from noise latent");
    }
    const typename LatentGrid<Scalar>::Matrix r =
        project_and_inject(s.x, s.cond, xi).data() - s.x0.data();
    g.d_weight.noalias() += s.cond.data().transpose() * r;
    g.d_bias += r.colwise().sum().transpose();
    g.loss += r.squaredNorm();
    n += r.size();
  }
  const Scalar scale = Scalar(2) / static_cast<Scalar>(n);
  g.d_weight *= scale;
  g.d_bias *= scale;
  g.loss /= static_cast<Scalar>(n);
  return g;
}

template <typename Scalar>
Scalar batch_loss(std::span<const TrainingSample<Scalar>> batch,
                  const ProjectionLayer<Scalar>& xi) {
  Scalar sum(0);
  Eigen::Index n = 0;
  for (const auto& s : batch) {
    sum += (project_and_inject(s.x, s.cond, xi).data() - s.x0.data()).squaredNorm();
    n += s.x0.data().size();
  }
  return sum / static_cast<Scalar>(n);
}

template <typename Scalar>
struct TrainResult {
  ProjectionLayer<Scalar> xi;
  /// Loss before each update.
  std::vector<Scalar> trace;
  Scalar final_loss;
};

struct TrainOptions {
  int steps = 500;
  double lr = 1e-2;
  std::uint64_t seed = 0;
};

/// Full-batch gradient descent from a zero projection, so step 0 is the
/// identity injection. Throws kDivergence on a non-finite loss.
template <typename Scalar>
TrainResult<Scalar> train_xi(std::span<const TrainingSample<Scalar>> dataset,
                             const TrainOptions& options) {
  if (dataset.empty()) throw Error(ErrorCode::kEmptyInput, "training set is empty");
  if (options.steps < 0) throw Error(ErrorCode::kInvalidArgument, "steps must be >= 0");
  const auto& first = dataset.front();
  TrainResult<Scalar> result{
      ProjectionLayer<Scalar>::zero(first.cond.channels(), first.x.channels()), {}, Scalar(0)};
  result.trace.reserve(static_cast<std::size_t>(options.steps));
  const auto lr = static_cast<Scalar>(options.lr);
  for (int step = 0; step < options.steps; ++step) {
    const ProjectionGradient<Scalar> g = grad_xi(dataset, result.xi);
    if (!std::isfinite(static_cast<double>(g.loss))) {
      throw Error(ErrorCode::kDivergence,
                  "loss became non-finite at step " + std::to_string(step));
    }
    result.trace.push_back(g.loss);
    result.xi.weight -= lr * g.d_weight;
    result.xi.bias -= lr * g.d_bias;
  }
  result.final_loss = batch_loss(dataset, result.xi);
  if (!std::isfinite(static_cast<double>(result.final_loss))) {
    throw Error(ErrorCode::kDivergence,
                "loss became non-finite at step " + std::to_string(options.steps));
  }
  return result;
}

/// Largest element-wise relative gap between the analytic gradient and a
/// central difference with step `epsilon`, over every weight and bias.
template <typename Scalar>
Scalar fd_check(const ProjectionLayer<Scalar>& xi, const TrainingSample<Scalar>& sample,
                Scalar epsilon) {
  if (!(epsilon > Scalar(0))) throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0");
  const std::span<const TrainingSample<Scalar>> batch(&sample, 1);
  const ProjectionGradient<Scalar> g = grad_xi(batch, xi);
  ProjectionLayer<Scalar> probe = xi;
  Scalar worst(0);
  auto compare = [&](Scalar analytic, Scalar& param) {
    const Scalar saved = param;
    param = saved + epsilon;
    const Scalar up = batch_loss(batch, probe);
    param = saved - epsilon;
    const Scalar down = batch_loss(batch, probe);
    param = saved;
    const Scalar numeric = (up - down) / (Scalar(2) * epsilon);
    const Scalar denom =
        std::max({std::abs(analytic), std::abs(numeric), static_cast<Scalar>(1e-12)});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  for (Eigen::Index i = 0; i < probe.weight.rows(); ++i) {
    for (Eigen::Index j = 0; j < probe.weight.cols(); ++j) compare(g.d_weight(i, j), probe.weight(i, j));
  }
  for (Eigen::Index j = 0; j < probe.bias.size(); ++j) compare(g.d_bias(j), probe.bias(j));
  return worst;
}

/// Linear injection task with a known answer: x0 = x + W* v + b* + noise,
/// with x, v standard normal, W* ~ N(0, 1/c_in) and b* ~ N(0, 0.01).
struct SyntheticTask {
  std::vector<TrainingSample<double>> samples;
  ProjectionLayer<double> truth;
};

SyntheticTask make_linear_task(Eigen::Index c_in, Eigen::Index c_out, Eigen::Index cells,
                               double noise_sigma, std::uint64_t seed, int num_samples = 1);

/// Minimizer of batch_loss by the normal equations of the affine
/// regression from condition channels to (x0 - x).
ProjectionLayer<double> least_squares_projection(
    std::span<const TrainingSample<double>> dataset);

struct ProjectionHeader {
  Eigen::Index c_in = 0;
  Eigen::Index c_out = 0;
  std::uint64_t seed = 0;
  int steps = 0;
  double lr = 0.0;
};

/// Writes `projection.json` plus `weight.lwa1` (c_in rows, c_out channels)
/// and `bias.lwa1` (1 row) into `dir`.
void save_projection(const std::filesystem::path& dir, const ProjectionLayer<double>& xi,
                     const ProjectionHeader& header);
ProjectionLayer<double> load_projection(const std::filesystem::path& dir,
                                        ProjectionHeader* header = nullptr);

}  // namespace lwa
