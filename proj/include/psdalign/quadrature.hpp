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

#include <functional>
#include <span>

namespace psdalign::quadrature {

inline constexpr double default_tolerance = 1e-12;

/// Adaptive Gauss-Kronrod integral of f over [a, b]. f is never evaluated at
/// the end points, so integrable end-point singularities are allowed.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tolerance = default_tolerance);

/// Sum of integrals over consecutive intervals [points[i], points[i + 1]].
double integrate_piecewise(const std::function<double(double)>& f, std::span<const double> points,
                           double tolerance = default_tolerance);

} // namespace psdalign::quadrature
