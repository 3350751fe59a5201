#pragma once

// Fourth-order central finite differences used by the residual checks.

namespace qshje::stencil {

template <class F>
double first_derivative(F&& f, double x, double h) {
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}

template <class F>
double second_derivative(F&& f, double x, double h) {
    return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) /
           (12 * h * h);
}

}  // namespace qshje::stencil
