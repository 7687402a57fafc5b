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

#include "psdalign/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace psdalign::quadrature {

double integrate(const std::function<double(double)>& f, double a, double b, double tolerance) {
    if (!(b > a)) {
        return 0.0;
    }
    using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
    return Rule::integrate(f, a, b, 20, tolerance);
}

double integrate_piecewise(const std::function<double(double)>& f, std::span<const double> points,
                           double tolerance) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        total += integrate(f, points[i], points[i + 1], tolerance);
    }
    return total;
}

} // namespace psdalign::quadrature
