// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <span>

#include "psdalign/types.hpp"

namespace psdalign::fft {

// Unnormalized in-place transforms backed by FFTW. Plans are cached per
// size and safe to use from several threads at once.

/// X(p) = sum_n x(n) exp(-j 2 pi p n / N)
void forward(std::span<cd> data);

/// x(n) = sum_p X(p) exp(+j 2 pi p n / N), no 1/N factor
void backward(std::span<cd> data);

} // namespace psdalign::fft
