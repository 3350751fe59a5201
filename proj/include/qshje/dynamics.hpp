#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "qshje/reduced_action.hpp"

namespace qshje {

enum class TurningPolicy { Reflect, Transmit };
enum class Integrator { RK4, RK45 };
/// What happens when a trajectory reaches the edge of the solution domain.
enum class BoundaryPolicy { Error, Stop };
enum class Region { Allowed, Forbidden, TurningPoint };
enum class EventKind { TurningPointCrossing, Reflection, LeftDomain };

std::string_view to_string(TurningPolicy p);
std::string_view to_string(Integrator i);
std::string_view to_string(BoundaryPolicy b);
std::string_view to_string(Region r);
std::string_view to_string(EventKind k);

struct MotionConfig {
    /// Turning-point tolerance on |E_i - V_i|; a value <= 0 selects 1e-6 |E_i| per axis.
    double tp_epsilon = 0.0;
    std::array<TurningPolicy, 3> tp_policy{TurningPolicy::Reflect, TurningPolicy::Reflect,
                                           TurningPolicy::Reflect};
    /// Output interval; also the initial (and, for RK4, the largest) step.
    double step = 1e-3;
    double t_max = 10.0;
    Integrator integrator = Integrator::RK4;
    BoundaryPolicy boundary = BoundaryPolicy::Error;
    double min_step = 1e-12;
    /// Absolute and relative error tolerance of the adaptive stepper.
    double tolerance = 1e-10;

    void validate() const;
    double epsilon_for(double energy) const;
};

struct TrajectoryState {
    double t = 0.0;
    Point3 pos{};
    Point3 momenta{};
    Point3 velocities{};
    Point3 metric{};
    std::array<Region, 3> region{};
};

struct TrajectoryEvent {
    double t = 0.0;
    Axis axis = Axis::X;
    EventKind kind = EventKind::TurningPointCrossing;
    /// Position along the axis where the event was resolved.
    double position = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryState> states;
    std::vector<TrajectoryEvent> events;
    /// Time spent with E_i < V_i, per axis.
    Point3 dwell_time{};
    /// Momentum sign multipliers at the end of the run.
    std::array<int, 3> orientation{1, 1, 1};
    bool stopped_at_boundary = false;
};

/// g = 1 + (hbar^2/2) P^-2 {S0; x}; equal to 2m(E - V)/P^2 on solutions.
double metric_g(const ReducedAction1D& action, double x);

/// dx/dt = 2(E - V(x)) / P(x).
double velocity(const ReducedAction1D& action, double energy, const Potential1D& potential,
                double x);

/// (P g + (P^2/2) dg/dP) / m with dg/dP = g'(x)/P'(x). Not used for integration.
double velocity_alt(const ReducedAction1D& action, double energy, const Potential1D& potential,
                    double x, double h = 1e-4);

Trajectory integrate(const SeparableAction3D& action, const EnergySplit& energies,
                     const std::array<Potential1D, 3>& potentials, const Point3& start,
                     const MotionConfig& cfg);

/// sum_i P_i^2 g_ii / 2m + V(pos) - E.
double total_energy_check(const TrajectoryState& state, const std::array<Potential1D, 3>& potentials,
                          const EnergySplit& energies, const PhysicalConstants& constants);

}  // namespace qshje
