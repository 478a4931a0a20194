// Copyright 2026 The bearing-dx Authors
// SPDX-License-Identifier: Apache-2.0
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

#pragma once

namespace bdx {

// Batch kernels come in two flavours. Serial is the reference implementation
// the tests compare against; Parallel distributes independent items over
// OpenMP threads and must produce bitwise-identical results.
enum class Exec { Serial, Parallel };

void set_num_threads(int n);
int max_threads();

// Model forward/backward passes allocate and free multi-megabyte temporaries
// per window. With glibc defaults those pages go back to the kernel on every
// free and fault in again on the next window; this raises the mmap and trim
// thresholds so they are recycled. Process-wide, meant for main(); a no-op
// on other C libraries.
void tune_allocator();

}  // namespace bdx
