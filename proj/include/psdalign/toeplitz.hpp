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
#include <vector>

#include "psdalign/fading.hpp"
#include "psdalign/types.hpp"

namespace psdalign {

// y = R x for the Hermitian Toeplitz R(l, l') = r(l - l'), applied through a
// circulant embedding of length >= 2P.
class ToeplitzOperator {
  public:
    ToeplitzOperator(const AutocorrelationSequence& autocorrelation, std::size_t length);
    explicit ToeplitzOperator(const ChannelCovariance& covariance)
        : ToeplitzOperator(covariance.autocorrelation(), covariance.size()) {}

    std::size_t size() const { return length_; }

    void apply(std::span<const cd> x, std::span<cd> y) const;
    CVector apply(const CVector& x) const;

  private:
    std::size_t length_ = 0;
    std::vector<cd> spectrum_;
};

} // namespace psdalign
