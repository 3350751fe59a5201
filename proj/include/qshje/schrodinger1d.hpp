#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "qshje/common.hpp"

namespace boost::math {
template <class Real>
class barycentric_rational;
}

namespace qshje {

/// Units of action and mass. Natural units (hbar = m = 1) by default.
struct PhysicalConstants {
    double hbar = 1.0;
    double mass = 1.0;

    void validate() const;
};

/// One-dimensional potential V(x) along a single cartesian axis.
class Potential1D {
public:
    struct Zero {};
    struct Constant {
        double v0 = 0.0;
    };
    /// V = m*omega^2*(x - center)^2 / 2.
    struct Harmonic {
        double omega = 1.0;
        double mass = 1.0;
        double center = 0.0;
    };
    /// Linear interpolation through (x, V) breakpoints, flat beyond the ends.
    struct PiecewiseLinear {
        std::vector<std::pair<double, double>> breakpoints;
    };
    /// Smooth (barycentric rational) interpolation of tabulated values.
    struct Tabulated {
        std::vector<double> grid;
        std::vector<double> values;
    };
    using Kind = std::variant<Zero, Constant, Harmonic, PiecewiseLinear, Tabulated>;

    explicit Potential1D(Kind kind = Zero{}, Axis axis = Axis::X);

    static Potential1D zero(Axis axis = Axis::X) { return Potential1D(Zero{}, axis); }
    static Potential1D constant(double v0, Axis axis = Axis::X) {
        return Potential1D(Constant{v0}, axis);
    }
    static Potential1D harmonic(double omega, double mass = 1.0, Axis axis = Axis::X) {
        return Potential1D(Harmonic{omega, mass, 0.0}, axis);
    }

    double value(double x) const;
    double derivative(double x) const;

    /// Set for kinds whose potential is constant in x (closed-form solutions exist).
    std::optional<double> constant_value() const;

    /// Range over which the potential is defined; infinite for analytic kinds.
    Interval support() const;

    const Kind& kind() const { return kind_; }
    Axis axis() const { return axis_; }
    Potential1D with_axis(Axis axis) const;
    std::string_view kind_name() const;

private:
    Kind kind_;
    Axis axis_;
    std::shared_ptr<const boost::math::barycentric_rational<double>> interp_;
};

/// Per-axis separation energies; the total is fixed at construction.
class EnergySplit {
public:
    EnergySplit(double ex, double ey, double ez) : e_{ex, ey, ez}, total_(ex + ey + ez) {}

    double operator[](Axis a) const { return e_[index(a)]; }
    double ex() const { return e_[0]; }
    double ey() const { return e_[1]; }
    double ez() const { return e_[2]; }
    double total() const { return total_; }

private:
    std::array<double, 3> e_;
    double total_;
};

/// Values and first derivatives of X1 and X2 at the anchor.
struct InitialConditions {
    double x1 = 1.0;
    double dx1 = 0.0;
    double x2 = 0.0;
    double dx2 = 1.0;
};

struct SolverOptions {
    /// Upper bound on the Numerov step.
    double max_step = 1e-3;
    /// Use Numerov even when a closed form exists.
    bool force_numerical = false;
};

/// Two independent real solutions X1, X2 of -hbar^2/2m X'' + (V - E) X = 0.
///
/// Immutable; copies share the underlying table.
class SolutionPair {
public:
    struct Jets {
        Jet x1;
        Jet x2;
    };

    double x1(double x) const { return jets(x).x1.v; }
    double x2(double x) const { return jets(x).x2.v; }

    /// X1, X2 and their first three derivatives at x. Second and third
    /// derivatives are taken from the differential equation itself.
    Jets jets(double x) const;

    /// f(x) = 2m(V(x) - E)/hbar^2, so that X'' = f X.
    double ode_coefficient(double x) const;

    double wronskian_at_anchor() const { return wronskian_anchor_; }
    const Interval& domain() const { return domain_; }
    double energy() const { return energy_; }
    double anchor() const { return anchor_; }
    const Potential1D& potential() const { return potential_; }
    const PhysicalConstants& constants() const { return constants_; }
    Axis axis() const { return potential_.axis(); }
    bool is_analytic() const { return std::holds_alternative<Analytic>(impl_); }
    /// Numerov step, or 0 for closed-form pairs.
    double grid_step() const;

private:
    friend SolutionPair solve_pair(const Potential1D&, double, Interval, double,
                                   const PhysicalConstants&, const InitialConditions&,
                                   const SolverOptions&);

    struct Analytic {
        double kappa;  // constant ODE coefficient f
    };
    struct Table {
        double lo;
        double h;
        std::vector<double> f;
        std::vector<double> y1, dy1, y2, dy2;
    };

    SolutionPair(Potential1D potential, double energy, Interval domain, double anchor,
                 PhysicalConstants constants, InitialConditions ic);

    Potential1D potential_;
    double energy_;
    Interval domain_;
    double anchor_;
    PhysicalConstants constants_;
    InitialConditions ic_;
    double wronskian_anchor_;
    std::variant<Analytic, std::shared_ptr<const Table>> impl_;
};

/// Solve the 1D stationary Schrödinger equation on `domain` with initial data
/// imposed at `anchor`. Constant potentials use closed forms, everything else a
/// fixed-step Numerov scheme with quintic Hermite dense output.
SolutionPair solve_pair(const Potential1D& potential, double energy, Interval domain, double anchor,
                        const PhysicalConstants& constants = {},
                        const InitialConditions& ic = {}, const SolverOptions& options = {});

/// X1(x) X2'(x) - X2(x) X1'(x).
double wronskian(const SolutionPair& pair, double x);

/// Max over `samples` uniformly spaced points of |W(x) - W(anchor)| / |W(anchor)|.
double max_wronskian_drift(const SolutionPair& pair, int samples);

}  // namespace qshje
