// Copyright 2026 The fairprep Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef FAIRPREP_STATUS_MACROS_H_
#define FAIRPREP_STATUS_MACROS_H_

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define FAIRPREP_RETURN_IF_ERROR(expr)       \
  do {                                       \
    const absl::Status _fp_status = (expr);  \
    if (!_fp_status.ok()) return _fp_status; \
  } while (0)

#define FAIRPREP_CONCAT_INNER_(a, b) a##b
#define FAIRPREP_CONCAT_(a, b) FAIRPREP_CONCAT_INNER_(a, b)

#define FAIRPREP_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, rexpr) \
  auto tmp = (rexpr);                                    \
  if (!tmp.ok()) return tmp.status();                    \
  lhs = std::move(tmp).value()

// Evaluates an expression returning absl::StatusOr<T>; on error returns the
// status from the enclosing function, otherwise assigns the value to `lhs`.
#define FAIRPREP_ASSIGN_OR_RETURN(lhs, rexpr)                                \
  FAIRPREP_ASSIGN_OR_RETURN_IMPL_(FAIRPREP_CONCAT_(_fp_statusor_, __LINE__), \
                                  lhs, rexpr)

#endif  // FAIRPREP_STATUS_MACROS_H_
