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

#include "psdalign/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace psdalign::kernels {
namespace {

void check_terms(std::span<const ModulatedTerm> terms, std::size_t length) {
    for (const auto& t : terms) {
        if (t.pilot.size() != length || t.autocorrelation == nullptr ||
            t.autocorrelation->size() < length) {
            throw std::invalid_argument("system matrix term does not match length P");
        }
    }
}

} // namespace

void for_each_index(std::size_t count, Execution execution,
                    const std::function<void(std::size_t)>& body) {
    const auto n = static_cast<long>(count);
    if (execution == Execution::serial) {
        for (long i = 0; i < n; ++i) {
            body(static_cast<std::size_t>(i));
        }
        return;
    }
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) {
        body(static_cast<std::size_t>(i));
    }
}

CMatrix apply_toeplitz(const ToeplitzOperator& op, const CMatrix& x, Execution execution) {
    const auto rows = static_cast<std::size_t>(x.rows());
    if (rows != op.size()) {
        throw std::invalid_argument("Toeplitz operand has wrong row count");
    }
    CMatrix y(x.rows(), x.cols());
    for_each_index(static_cast<std::size_t>(x.cols()), execution, [&](std::size_t j) {
        const auto col = static_cast<Eigen::Index>(j);
        op.apply(std::span<const cd>(x.col(col).data(), rows), std::span<cd>(y.col(col).data(), rows));
    });
    return y;
}

CMatrix assemble_system_matrix(std::span<const ModulatedTerm> terms, double noise,
                               std::size_t length, Execution execution) {
    check_terms(terms, length);
    const auto n = static_cast<Eigen::Index>(length);
    CMatrix q(n, n);
    for_each_index(length, execution, [&](std::size_t jj) {
        const auto j = static_cast<Eigen::Index>(jj);
        for (Eigen::Index i = 0; i < n; ++i) {
            q(i, j) = (i == j) ? cd(noise) : cd{};
        }
        for (const auto& t : terms) {
            const cd right = t.power * std::conj(t.pilot[jj]);
            const auto& r = *t.autocorrelation;
            for (Eigen::Index i = 0; i < n; ++i) {
                q(i, j) += t.pilot[static_cast<std::size_t>(i)] * r(static_cast<long>(i - j)) * right;
            }
        }
    });
    return q;
}

CMatrix assemble_system_matrix_reference(std::span<const ModulatedTerm> terms, double noise,
                                         std::size_t length) {
    check_terms(terms, length);
    const auto n = static_cast<Eigen::Index>(length);
    CMatrix q = noise * CMatrix::Identity(n, n);
    for (const auto& t : terms) {
        CMatrix r(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) {
                r(i, j) = (*t.autocorrelation)(static_cast<long>(i - j));
            }
        }
        const Eigen::Map<const CVector> x(t.pilot.data(), n);
        q += t.power * (x.asDiagonal() * r * x.conjugate().asDiagonal());
    }
    return q;
}

double modulated_product_norm(const ToeplitzOperator& rk, const AutocorrelationSequence& rg,
                              std::span<const cd> d, Execution execution) {
    const std::size_t length = rk.size();
    if (d.size() != length || rg.size() < length) {
        throw std::invalid_argument("modulated product operands do not match");
    }
    std::vector<double> column_norms(length, 0.0);
    for_each_index(length, execution, [&](std::size_t j) {
        std::vector<cd> b(length);
        std::vector<cd> y(length);
        const cd right = std::conj(d[j]);
        for (std::size_t i = 0; i < length; ++i) {
            b[i] = d[i] * rg(static_cast<long>(i) - static_cast<long>(j)) * right;
        }
        rk.apply(b, y);
        double acc = 0.0;
        for (const auto& v : y) {
            acc += std::norm(v);
        }
        column_norms[j] = acc;
    });
    double total = 0.0;
    for (double v : column_norms) {
        total += v;
    }
    return std::sqrt(total);
}

double modulated_product_norm_reference(const CMatrix& rk, const CMatrix& rg,
                                        std::span<const cd> d) {
    const auto n = rk.rows();
    if (rk.cols() != n || rg.rows() != n || rg.cols() != n ||
        static_cast<Eigen::Index>(d.size()) != n) {
        throw std::invalid_argument("modulated product operands do not match");
    }
    const Eigen::Map<const CVector> dv(d.data(), n);
    const CMatrix product = rk * dv.asDiagonal() * rg * dv.conjugate().asDiagonal();
    return product.norm();
}

} // namespace psdalign::kernels
