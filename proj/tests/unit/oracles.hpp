#pragma once

// Independent reference computations shared by the unit tests.

#include <array>
#include <cmath>
#include <functional>

#include <boost/numeric/odeint.hpp>

namespace oracle {

/// Integrate X'' = f(x) X from (x0, X, X') to x1 with a Bulirsch-Stoer stepper.
inline std::array<double, 2> integrate_linear(const std::function<double(double)>& f, double x0,
                                              double y0, double dy0, double x1) {
    namespace ode = boost::numeric::odeint;
    using State = std::array<double, 2>;
    State s{y0, dy0};
    if (x1 == x0) return s;
    auto sys = [&](const State& y, State& dy, double x) {
        dy[0] = y[1];
        dy[1] = f(x) * y[0];
    };
    ode::bulirsch_stoer<State> stepper(1e-14, 1e-14);
    ode::integrate_adaptive(stepper, sys, s, x0, x1, (x1 - x0) * 1e-3);
    return s;
}

/// Five-point first and second derivatives.
inline double d1(const std::function<double(double)>& f, double x, double h) {
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}
inline double d2(const std::function<double(double)>& f, double x, double h) {
    return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) / (12 * h * h);
}
/// Seven-point third derivative.
inline double d3(const std::function<double(double)>& f, double x, double h) {
    return (f(x - 3 * h) - 8 * f(x - 2 * h) + 13 * f(x - h) - 13 * f(x + h) + 8 * f(x + 2 * h) -
            f(x + 3 * h)) /
           (8 * h * h * h);
}

/// Schwarzian of f from finite differences of f itself.
inline double schwarzian_fd(const std::function<double(double)>& f, double x, double h) {
    const double a = d1(f, x, h), b = d2(f, x, h), c = d3(f, x, h);
    return c / a - 1.5 * (b / a) * (b / a);
}

}  // namespace oracle
