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

#include <cstddef>
#include <cstdint>
#include <initializer_list>

namespace psdalign::stats {

/// Two-sided 95% normal quantile.
inline constexpr double z95 = 1.959963984540054;

struct Summary {
    double mean = 0.0;
    double std_dev = 0.0;
    double half_width = 0.0; ///< z95 * std_dev / sqrt(count)
    std::size_t count = 0;
};

// Welford running moments. Feed values in a fixed order for reproducible output.
class Accumulator {
  public:
    void add(double value);
    std::size_t count() const { return count_; }
    double mean() const { return mean_; }
    double variance() const;
    Summary summary() const;

  private:
    std::size_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Child seed of `parent` along `path`, mixed through std::seed_seq.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path);

} // namespace psdalign::stats
