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

#include "psdalign/toeplitz.hpp"

#include <bit>
#include <stdexcept>

#include "psdalign/fft.hpp"

namespace psdalign {

ToeplitzOperator::ToeplitzOperator(const AutocorrelationSequence& autocorrelation,
                                   std::size_t length)
    : length_(length) {
    if (length == 0 || length > autocorrelation.size()) {
        throw std::invalid_argument("Toeplitz length must be within the autocorrelation length");
    }
    const std::size_t embed = std::bit_ceil(2 * length);
    spectrum_.assign(embed, cd{});
    for (std::size_t v = 0; v < length; ++v) {
        spectrum_[v] = autocorrelation(static_cast<long>(v));
    }
    for (std::size_t v = 1; v < length; ++v) {
        spectrum_[embed - v] = autocorrelation(-static_cast<long>(v));
    }
    fft::forward(spectrum_);
    const double scale = 1.0 / static_cast<double>(embed);
    for (auto& s : spectrum_) {
        s *= scale;
    }
}

void ToeplitzOperator::apply(std::span<const cd> x, std::span<cd> y) const {
    if (x.size() != length_ || y.size() != length_) {
        throw std::invalid_argument("Toeplitz operand length mismatch");
    }
    std::vector<cd> work(spectrum_.size(), cd{});
    std::copy(x.begin(), x.end(), work.begin());
    fft::forward(work);
    for (std::size_t i = 0; i < work.size(); ++i) {
        work[i] *= spectrum_[i];
    }
    fft::backward(work);
    std::copy(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(length_), y.begin());
}

CVector ToeplitzOperator::apply(const CVector& x) const {
    CVector y(x.size());
    apply(std::span<const cd>(x.data(), static_cast<std::size_t>(x.size())),
          std::span<cd>(y.data(), static_cast<std::size_t>(y.size())));
    return y;
}

} // namespace psdalign
