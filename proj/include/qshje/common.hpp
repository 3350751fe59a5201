#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "qshje/errors.hpp"

namespace qshje {

enum class Axis { X = 0, Y = 1, Z = 2 };

inline constexpr std::array<Axis, 3> kAxes{Axis::X, Axis::Y, Axis::Z};

inline constexpr std::size_t index(Axis a) { return static_cast<std::size_t>(a); }

inline std::string_view axis_name(Axis a) {
    switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
    }
    return "?";
}

inline Axis parse_axis(std::string_view s) {
    if (s == "x") return Axis::X;
    if (s == "y") return Axis::Y;
    if (s == "z") return Axis::Z;
    throw InvalidArgument("unknown axis label '" + std::string(s) + "'");
}

using Point3 = std::array<double, 3>;

/// Closed interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const { return x >= lo && x <= hi; }
    double length() const { return hi - lo; }
};

/// Value of a real function together with its first three derivatives at a point.
struct Jet {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double d3 = 0.0;
};

/// Reduce `diff` modulo `period` into (-period/2, period/2].
inline double wrap_symmetric(double diff, double period) {
    double r = std::remainder(diff, period);
    if (r <= -0.5 * period) r += period;
    return r;
}

inline int sign_of(double v) { return v < 0.0 ? -1 : 1; }

}  // namespace qshje
