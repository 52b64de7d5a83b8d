// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace awm {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define AWM_DEFINE_ERROR(NAME)                                \
  class NAME : public Error {                                 \
   public:                                                    \
    explicit NAME(const std::string& what) : Error(what) {}   \
  }

AWM_DEFINE_ERROR(IoError);
AWM_DEFINE_ERROR(UnsupportedFormat);
AWM_DEFINE_ERROR(ShapeMismatch);
AWM_DEFINE_ERROR(CropTooLarge);
AWM_DEFINE_ERROR(OddChannelCount);
AWM_DEFINE_ERROR(DimMismatch);
AWM_DEFINE_ERROR(IndivisibleSpatialSize);
AWM_DEFINE_ERROR(BadReduction);
AWM_DEFINE_ERROR(SchemaError);
AWM_DEFINE_ERROR(TokenBudgetExceeded);
AWM_DEFINE_ERROR(ProviderError);
AWM_DEFINE_ERROR(MissingCounterpart);
AWM_DEFINE_ERROR(EmptyDataset);
AWM_DEFINE_ERROR(DivergedLoss);

#undef AWM_DEFINE_ERROR

}  // namespace awm
