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

#include "lwa/metrics.hpp"

namespace lwa {

namespace {

void require_same_domain(const ConditionMap& a, const ConditionMap& b,
                         const VisibilityMask* region) {
  if (!(a.domain() == b.domain()) || (region && !(region->domain() == a.domain()))) {
    throw Error(ErrorCode::kDimensionMismatch, "metric inputs span different domains");
  }
}

}  // namespace

double si_rmse(const ConditionMap& pred, const ConditionMap& gt, const VisibilityMask* region) {
  if (pred.modality() != Modality::kDepth || gt.modality() != Modality::kDepth) {
    throw Error(ErrorCode::kInvalidArgument, "si-RMSE compares depth maps");
  }
  require_same_domain(pred, gt, region);
  std::vector<double> diffs;
  for (Eigen::Index p = 0; p < pred.domain().pixels(); ++p) {
    if (region && !region->at_pixel(p)) continue;
    const double a = pred.values()(p, 0);
    const double b = gt.values()(p, 0);
    if (!pred.valid()(p) || !gt.valid()(p) || !(a > 0.0) || !(b > 0.0)) continue;
    diffs.push_back(std::log(a) - std::log(b));
  }
  if (diffs.empty()) {
    throw Error(ErrorCode::kEmptyRegion, "si-RMSE has no valid pixel to evaluate");
  }
  const Eigen::Map<const Eigen::ArrayXd> d(diffs.data(), static_cast<Eigen::Index>(diffs.size()));
  // Two-pass form of sqrt(mean(d^2) - mean(d)^2); avoids cancellation.
  return std::sqrt((d - d.mean()).square().mean());
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::uint32_t> classes)
    : classes_(std::move(classes)) {
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    if (!slot_.emplace(classes_[k], k).second) {
      throw Error(ErrorCode::kInvalidArgument, "class list has duplicates");
    }
  }
  const auto k = static_cast<Eigen::Index>(classes_.size());
  counts_ = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(k, k + 1);
}

void ConfusionMatrix::add(std::uint32_t gt, std::uint32_t pred) {
  auto row = slot_.find(gt);
  if (row == slot_.end()) return;
  auto col = slot_.find(pred);
  const auto c = col == slot_.end() ? static_cast<Eigen::Index>(classes_.size())
                                    : static_cast<Eigen::Index>(col->second);
  ++counts_(static_cast<Eigen::Index>(row->second), c);
}

std::int64_t ConfusionMatrix::true_positives(std::size_t k) const {
  const auto i = static_cast<Eigen::Index>(k);
  return counts_(i, i);
}

std::int64_t ConfusionMatrix::false_positives(std::size_t k) const {
  const auto i = static_cast<Eigen::Index>(k);
  return counts_.col(i).sum() - counts_(i, i);
}

std::int64_t ConfusionMatrix::false_negatives(std::size_t k) const {
  const auto i = static_cast<Eigen::Index>(k);
  return counts_.row(i).sum() - counts_(i, i);
}

MiouResult miou(const ConditionMap& pred, const ConditionMap& gt,
                std::span<const std::uint32_t> classes, const VisibilityMask* region) {
  if (pred.modality() != Modality::kSemantic || gt.modality() != Modality::kSemantic) {
    throw Error(ErrorCode::kInvalidArgument, "mIoU compares semantic maps");
  }
  require_same_domain(pred, gt, region);
  if (region && region->empty()) {
    throw Error(ErrorCode::kEmptyRegion, "mIoU over an empty region");
  }
  ConfusionMatrix cm(std::vector<std::uint32_t>(classes.begin(), classes.end()));
  for (Eigen::Index p = 0; p < pred.domain().pixels(); ++p) {
    if (region && !region->at_pixel(p)) continue;
    cm.add(static_cast<std::uint32_t>(gt.values()(p, 0)),
           static_cast<std::uint32_t>(pred.values()(p, 0)));
  }
  MiouResult result;
  result.evaluated_pixels = cm.total();
  double sum = 0.0;
  for (std::size_t k = 0; k < cm.classes().size(); ++k) {
    const std::int64_t tp = cm.true_positives(k);
    const std::int64_t denom = tp + cm.false_positives(k) + cm.false_negatives(k);
    if (denom == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(denom);
    result.per_class.emplace(cm.classes()[k], iou);
    sum += iou;
  }
  if (result.per_class.empty()) {
    throw Error(ErrorCode::kEmptyRegion, "no active class appears in either map");
  }
  result.miou = sum / static_cast<double>(result.per_class.size());
  return result;
}

std::string_view to_string(RegionRestriction r) {
  return r == RegionRestriction::kFull ? "full" : "preserved";
}

RegionRestriction region_restriction_from_string(std::string_view name) {
  if (name == "full") return RegionRestriction::kFull;
  if (name == "preserved") return RegionRestriction::kPreserved;
  throw Error(ErrorCode::kInvalidArgument, "region must be 'full' or 'preserved'");
}

ControllabilityReport controllability_report(const ConditionStack& predicted, const Lwa& sim,
                                             RegionRestriction restrict,
                                             std::span<const std::uint32_t> classes) {
  const ConditionStack reference = compose(sim);
  std::optional<VisibilityMask> region;
  if (restrict == RegionRestriction::kPreserved) {
    region = sim.at(Role::kTrafficParticipants).mask | sim.at(Role::kMapLayout).mask;
  }
  const VisibilityMask* r = region ? &*region : nullptr;
  ControllabilityReport report;
  report.region = restrict;
  report.si_rmse = si_rmse(predicted.at(Modality::kDepth), reference.at(Modality::kDepth), r);
  report.miou = miou(predicted.at(Modality::kSemantic), reference.at(Modality::kSemantic),
                     classes, r);
  return report;
}

}  // namespace lwa
