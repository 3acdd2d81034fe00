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

#include "lwa/error.hpp"

namespace lwa {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kMissingRole: return "missing_role";
    case ErrorCode::kMissingModality: return "missing_modality";
    case ErrorCode::kNotSubset: return "not_subset";
    case ErrorCode::kEmptyRegion: return "empty_region";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kOffPalette: return "off_palette";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kNumerical: return "numerical";
  }
  return "unknown";
}

}  // namespace lwa
