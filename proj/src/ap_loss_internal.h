/*
 * Copyright 2026 The apdesc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef APDESC_SRC_AP_LOSS_INTERNAL_H_
#define APDESC_SRC_AP_LOSS_INTERNAL_H_

#include "apdesc/ap_relax.h"

namespace apdesc::internal {

// Builds the default relations when `relations` is null and checks every
// precondition of the batch loss.
RelationMatrix ResolveAndValidate(const EmbeddingBatch& batch,
                                  const BinningConfig& cfg,
                                  const RelationMatrix* relations);

// Clamped below so coincident descriptors keep a bounded gradient.
inline constexpr double kMinEuclideanDistance = 1e-6;

}  // namespace apdesc::internal

#endif  // APDESC_SRC_AP_LOSS_INTERNAL_H_
