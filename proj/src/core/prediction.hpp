// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "types.hpp"

namespace vaur::metrics {

/// One model output to be scored against the annotation with the same id.
struct PredictionRecord {
  std::string sample_id;
  TaskKind task = TaskKind::MultiChoiceQA;
  std::string raw_response;
  /// Whether the inference prompt asked the model to think first.
  bool think_mode = false;
};

}  // namespace vaur::metrics
