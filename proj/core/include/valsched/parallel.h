// Copyright (c) 2026 valsched Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>

namespace valsched {

/// Runs fn(0) .. fn(n-1) on up to `jobs` threads. Callers write results into
/// per-index slots and reduce them in index order afterwards, so the outcome
/// does not depend on `jobs`. The exception of the lowest failing index is
/// rethrown.
void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn);

}  // namespace valsched
