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

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "psdalign/fading.hpp"
#include "psdalign/types.hpp"

namespace psdalign {

// Unit-modulus pilot x(0), ..., x(P-1). FFT pilots also carry their cyclic shift.
class PilotSequence {
  public:
    PilotSequence() = default;
    explicit PilotSequence(std::vector<cd> entries, std::optional<std::size_t> shift = std::nullopt);

    std::size_t size() const { return entries_.size(); }
    std::span<const cd> entries() const { return entries_; }
    std::optional<std::size_t> shift() const { return shift_; }

    /// max_n | |x(n)| - 1 |
    double modulus_deviation() const;

  private:
    std::vector<cd> entries_;
    std::optional<std::size_t> shift_;
};

/// x(n) = exp(j 2 pi shift n / P) s0(n), P = base.size().
PilotSequence fft_pilot(std::size_t shift, std::span<const cd> base);

/// FFT pilot over the all-ones base.
PilotSequence fft_pilot(std::size_t shift, std::size_t length);

/// Rows of the K x K Sylvester Hadamard matrix; K must be a power of two.
std::vector<PilotSequence> hadamard_pilots(std::size_t count);

/// Periodic extension of a pilot to `length` slots.
PilotSequence repeat_pilot(const PilotSequence& pilot, std::size_t length);

// P_{a,b} = X_a^H X_b (diagonal) and Theta = F P_{a,b} F^H (circulant).
struct CrossMatrix {
    std::vector<cd> diagonal;
    std::vector<cd> theta_column;

    CMatrix matrix() const;
    CMatrix theta() const;
};

CrossMatrix cross_matrix(const PilotSequence& a, const PilotSequence& b);

/// || R_k P R_g P^H ||_F / P from explicit matrices (dense reference).
double orthogonality_residual(const CMatrix& rk, const CMatrix& rg, std::span<const cd> cross_diagonal);

/// Same quantity using FFT Toeplitz products, parallel over columns.
double orthogonality_residual(const ChannelCovariance& k, const ChannelCovariance& g,
                              const CrossMatrix& cross);

/// Relative eigenvalue floor below which a bin counts as empty.
inline constexpr double support_floor = 1e-10;

/// True iff lambda_k(p) * lambda_g((p - shift) mod P) vanishes for every p.
bool shift_orthogonal(std::span<const double> lambda_k, std::span<const double> lambda_g, long shift);

struct AlignmentPlan {
    std::size_t length = 0;
    std::vector<std::size_t> shifts;
    std::vector<double> max_dopplers;
    std::vector<Band> forbidden;

    double guard() const { return 1.0 / static_cast<double>(length); }
};

struct PlanCheck {
    bool valid = true;
    std::vector<std::string> violations;
    /// Smallest separation between two user supports minus the guard.
    double user_margin = 0.0;
    /// Smallest separation between a user support and a forbidden band.
    double forbidden_margin = 0.0;
};

PlanCheck check_plan(const AlignmentPlan& plan);

class InfeasiblePlan : public std::runtime_error {
  public:
    InfeasiblePlan(const std::string& what, double deficit, std::size_t placed)
        : std::runtime_error(what), deficit_(deficit), placed_(placed) {}

    /// Normalized bandwidth missing to fit every user.
    double deficit() const { return deficit_; }
    std::size_t placed() const { return placed_; }

  private:
    double deficit_;
    std::size_t placed_;
};

/// First-fit packing of the supports [tau/P - F, tau/P + F] on the circle.
AlignmentPlan plan_alignment(std::span<const double> max_dopplers, std::span<const Band> forbidden,
                             std::size_t length);

/// Number of users with common Doppler `max_doppler` the packer can place.
std::size_t alignment_capacity(double max_doppler, std::size_t length);

} // namespace psdalign
