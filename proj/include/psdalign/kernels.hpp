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
#include <functional>
#include <span>

#include "psdalign/fading.hpp"
#include "psdalign/toeplitz.hpp"
#include "psdalign/types.hpp"

// Data-parallel kernels. Every OpenMP path has a serial reference that is
// kept for tests and for the benchmark; both produce identical results.
namespace psdalign::kernels {

enum class Execution { serial, parallel };

/// Runs body(i) for i in [0, count). Iterations must be independent.
void for_each_index(std::size_t count, Execution execution,
                    const std::function<void(std::size_t)>& body);

/// Y = R X, column by column.
CMatrix apply_toeplitz(const ToeplitzOperator& op, const CMatrix& x, Execution execution);

/// One rho * X R X^H term of the received covariance.
struct ModulatedTerm {
    double power = 0.0;
    std::span<const cd> pilot;
    const AutocorrelationSequence* autocorrelation = nullptr;
};

/// Q = noise * I + sum_g power_g X_g R_g X_g^H, filled entrywise.
CMatrix assemble_system_matrix(std::span<const ModulatedTerm> terms, double noise,
                               std::size_t length, Execution execution);

/// Same matrix from explicit dense products.
CMatrix assemble_system_matrix_reference(std::span<const ModulatedTerm> terms, double noise,
                                         std::size_t length);

/// || R_k D R_g D^H ||_F with D = Diag(d), using FFT Toeplitz products.
double modulated_product_norm(const ToeplitzOperator& rk, const AutocorrelationSequence& rg,
                              std::span<const cd> d, Execution execution);

/// Same norm from dense matrices.
double modulated_product_norm_reference(const CMatrix& rk, const CMatrix& rg,
                                        std::span<const cd> d);

} // namespace psdalign::kernels
