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

#include "lwa/mixcond.hpp"

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include "lwa/raster_io.hpp"
#include "lwa/rng.hpp"

namespace lwa {

namespace fs = std::filesystem;

void save_projection(const fs::path& dir, const ProjectionLayer<double>& xi,
                     const ProjectionHeader& header) {
  fs::create_directories(dir);
  save_tensor(dir / "weight.lwa1", xi.weight);
  save_tensor(dir / "bias.lwa1", xi.bias.transpose());
  nlohmann::json j = {{"c_in", xi.c_in()},     {"c_out", xi.c_out()},
                      {"seed", header.seed},   {"steps", header.steps},
                      {"lr", header.lr},       {"weight", "weight.lwa1"},
                      {"bias", "bias.lwa1"}};
  write_text_atomic(dir / "projection.json", j.dump(2) + "\n");
}

ProjectionLayer<double> load_projection(const fs::path& dir, ProjectionHeader* header) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(dir / "projection.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, e.what());
  }
  ProjectionLayer<double> xi;
  xi.weight = load_tensor(dir / j.at("weight").get<std::string>());
  const Eigen::MatrixXd bias = load_tensor(dir / j.at("bias").get<std::string>());
  xi.bias = bias.row(0).transpose();
  if (xi.c_in() != j.at("c_in").get<Eigen::Index>() ||
      xi.c_out() != j.at("c_out").get<Eigen::Index>() || bias.rows() != 1 ||
      xi.bias.size() != xi.c_out()) {
    throw Error(ErrorCode::kFormat, "projection tensors disagree with projection.json");
  }
  if (header) {
    header->c_in = xi.c_in();
    header->c_out = xi.c_out();
    header->seed = j.at("seed").get<std::uint64_t>();
    header->steps = j.at("steps").get<int>();
    header->lr = j.at("lr").get<double>();
  }
  return xi;
}

SyntheticTask make_linear_task(Eigen::Index c_in, Eigen::Index c_out, Eigen::Index cells,
                               double noise_sigma, std::uint64_t seed, int num_samples) {
  if (c_in < 1 || c_out < 1 || cells < 1 || num_samples < 1 || noise_sigma < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic task sizes must be positive");
  }
  Rng rng(seed);
  auto normal = [&](Eigen::Index rows, Eigen::Index cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * standard_normal(rng);
    }
    return m;
  };
  SyntheticTask task{{}, ProjectionLayer<double>::zero(c_in, c_out)};
  task.truth.weight = normal(c_in, c_out, 1.0 / std::sqrt(static_cast<double>(c_in)));
  task.truth.bias = normal(c_out, 1, 0.1);
  for (int s = 0; s < num_samples; ++s) {
    LatentGrid<double> x(cells, 1, normal(cells, c_out, 1.0), LatentSource::kNoise);
    LatentGrid<double> v(cells, 1, normal(cells, c_in, 1.0), LatentSource::kCondition);
    Eigen::MatrixXd target = project_and_inject(x, v, task.truth).data() +
                             normal(cells, c_out, noise_sigma);
    task.samples.push_back(
        {std::move(x), std::move(v), LatentGrid<double>(cells, 1, std::move(target),
                                                         LatentSource::kTarget)});
  }
  return task;
}

ProjectionLayer<double> least_squares_projection(
    std::span<const TrainingSample<double>> dataset) {
  if (dataset.empty()) throw Error(ErrorCode::kEmptyInput, "regression on an empty set");
  const Eigen::Index c_in = dataset.front().cond.channels();
  const Eigen::Index c_out = dataset.front().x.channels();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(c_in + 1, c_in + 1);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(c_in + 1, c_out);
  for (const auto& s : dataset) {
    Eigen::MatrixXd a(s.cond.cells(), c_in + 1);
    a.leftCols(c_in) = s.cond.data();
    a.col(c_in).setOnes();
    gram.noalias() += a.transpose() * a;
    rhs.noalias() += a.transpose() * (s.x0.data() - s.x.data());
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumerical, "normal equations are singular");
  }
  const Eigen::MatrixXd solution = ldlt.solve(rhs);
  return ProjectionLayer<double>{solution.topRows(c_in), solution.row(c_in).transpose()};
}

}  // namespace lwa
