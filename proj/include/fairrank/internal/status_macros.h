// Copyright 2026 The Fairrank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FAIRRANK_INTERNAL_STATUS_MACROS_H_
#define FAIRRANK_INTERNAL_STATUS_MACROS_H_

#include <utility>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define FAIRRANK_CONCAT_INNER_(a, b) a##b
#define FAIRRANK_CONCAT_(a, b) FAIRRANK_CONCAT_INNER_(a, b)

#define FAIRRANK_RETURN_IF_ERROR(expr)           \
  do {                                           \
    const ::absl::Status fairrank_status_ = (expr); \
    if (!fairrank_status_.ok()) return fairrank_status_; \
  } while (0)

#define FAIRRANK_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, expr) \
  auto tmp = (expr);                                    \
  if (!tmp.ok()) return std::move(tmp).status();        \
  lhs = std::move(tmp).value()

#define FAIRRANK_ASSIGN_OR_RETURN(lhs, expr) \
  FAIRRANK_ASSIGN_OR_RETURN_IMPL_(           \
      FAIRRANK_CONCAT_(fairrank_statusor_, __LINE__), lhs, expr)

#endif  // FAIRRANK_INTERNAL_STATUS_MACROS_H_
