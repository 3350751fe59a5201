#include "qshje/dynamics.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "qshje/stencil.hpp"

namespace qshje {

std::string_view to_string(TurningPolicy p) {
    return p == TurningPolicy::Reflect ? "reflect" : "transmit";
}

std::string_view to_string(Integrator i) { return i == Integrator::RK4 ? "rk4" : "rk45"; }

std::string_view to_string(BoundaryPolicy b) { return b == BoundaryPolicy::Error ? "error" : "stop"; }

std::string_view to_string(Region r) {
    switch (r) {
    case Region::Allowed: return "allowed";
    case Region::Forbidden: return "forbidden";
    case Region::TurningPoint: return "turning_point";
    }
    return "?";
}

std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::TurningPointCrossing: return "TurningPointCrossing";
    case EventKind::Reflection: return "Reflection";
    case EventKind::LeftDomain: return "LeftDomain";
    }
    return "?";
}

void MotionConfig::validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("step must be > 0");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InvalidArgument("t_max must be > 0");
    if (!(min_step > 0.0) || min_step > step)
        throw InvalidArgument("min_step must be in (0, step]");
    if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be > 0");
    if (std::isnan(tp_epsilon)) throw InvalidArgument("tp_epsilon must be a number");
}

double MotionConfig::epsilon_for(double energy) const {
    if (tp_epsilon > 0.0) return tp_epsilon;
    return energy != 0.0 ? 1e-6 * std::abs(energy) : 1e-12;
}

double metric_g(const ReducedAction1D& action, double x) {
    const MomentumJet m = momentum_jet(action, x);
    const double hbar = action.pair().constants().hbar;
    return 1.0 + 0.5 * hbar * hbar * m.schwarzian() / (m.p * m.p);
}

double velocity(const ReducedAction1D& action, double energy, const Potential1D& potential,
                double x) {
    return 2.0 * (energy - potential.value(x)) / momentum_1d(action, x);
}

double velocity_alt(const ReducedAction1D& action, double, const Potential1D&, double x, double h) {
    const Interval d = action.pair().domain();
    if (x - 2 * h < d.lo || x + 2 * h > d.hi)
        throw StencilOutOfDomain("metric derivative stencil leaves the domain at x = " +
                                 std::to_string(x));
    const double mass = action.pair().constants().mass;
    const MomentumJet m = momentum_jet(action, x);
    const double g = metric_g(action, x);
    const double dg = stencil::first_derivative([&](double s) { return metric_g(action, s); }, x, h);
    double correction = 0.0;
    const double tiny = 1e-13;
    if (std::abs(m.dp) > tiny * std::abs(m.p)) {
        correction = 0.5 * m.p * m.p * dg / m.dp;
    } else if (std::abs(dg) > 1e-9) {
        throw NumericalError("dg/dP is undefined: P' vanishes while g' does not");
    }
    return (m.p * g + correction) / mass;
}

double total_energy_check(const TrajectoryState& state, const std::array<Potential1D, 3>& potentials,
                          const EnergySplit& energies, const PhysicalConstants& constants) {
    double sum = -energies.total();
    for (Axis a : kAxes) {
        const std::size_t i = index(a);
        sum += state.momenta[i] * state.momenta[i] * state.metric[i] / (2.0 * constants.mass);
        sum += potentials[i].value(state.pos[i]);
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Integration

namespace {

using State = std::array<double, 3>;

class Integration {
public:
    Integration(const SeparableAction3D& action, const EnergySplit& energies,
                const std::array<Potential1D, 3>& potentials, const MotionConfig& cfg)
        : action_(action), energies_(energies), potentials_(potentials), cfg_(cfg) {
        for (Axis a : kAxes) eps_[index(a)] = cfg.epsilon_for(energies[a]);
    }

    Trajectory run(const Point3& start);

private:
    double gap(std::size_t i, double x) const { return energies_[kAxes[i]] - potentials_[i].value(x); }

    double momentum(std::size_t i, double x) const {
        return orientation_[i] * momentum_1d(action_[kAxes[i]], x);
    }

    void rhs(const State& x, State& dx) const {
        for (std::size_t i = 0; i < 3; ++i) {
            if (!action_[kAxes[i]].pair().domain().contains(x[i]))
                throw OutOfDomain("stage left the domain");
            const double g = gap(i, x[i]);
            if ((reference_[i] > 0 && g < 0.0) || (reference_[i] < 0 && g > 0.0)) stage_crossed_ = true;
            dx[i] = 2.0 * g / momentum(i, x[i]);
        }
    }

    bool inside(const State& x) const {
        for (std::size_t i = 0; i < 3; ++i)
            if (!action_[kAxes[i]].pair().domain().contains(x[i])) return false;
        return true;
    }

    Region region(std::size_t i, double x) const {
        const double g = gap(i, x);
        if (g > eps_[i]) return Region::Allowed;
        if (g < -eps_[i]) return Region::Forbidden;
        return Region::TurningPoint;
    }

    TrajectoryState snapshot(double t, const State& x) const {
        TrajectoryState s;
        s.t = t;
        s.pos = x;
        for (std::size_t i = 0; i < 3; ++i) {
            s.momenta[i] = momentum(i, x[i]);
            s.velocities[i] = 2.0 * gap(i, x[i]) / s.momenta[i];
            s.metric[i] = metric_g(action_[kAxes[i]], x[i]);
            s.region[i] = region(i, x[i]);
        }
        return s;
    }

    /// One trial step of size dt. Returns the new state and the step actually
    /// taken, or nothing if the stepper could not produce an admissible state.
    std::optional<std::pair<State, double>> attempt(const State& x, double t, double dt);

    /// Mirror image of x across the turning point next to it, if one can be bracketed.
    double mirror(std::size_t i, double x, double direction) const;

    const SeparableAction3D& action_;
    const EnergySplit& energies_;
    const std::array<Potential1D, 3>& potentials_;
    const MotionConfig& cfg_;
    Point3 eps_{};
    std::array<int, 3> orientation_{1, 1, 1};
    std::array<bool, 3> armed_{true, true, true};
    std::array<int, 3> reference_{0, 0, 0};
    mutable bool stage_crossed_ = false;
};

std::optional<std::pair<State, double>> Integration::attempt(const State& x, double t, double dt) {
    namespace ode = boost::numeric::odeint;
    auto sys = [this](const State& s, State& ds, double) { rhs(s, ds); };
    for (std::size_t i = 0; i < 3; ++i) reference_[i] = sign_of(gap(i, x[i]));
    stage_crossed_ = false;
    try {
        if (cfg_.integrator == Integrator::RK4) {
            ode::runge_kutta4<State> stepper;
            State out = x;
            stepper.do_step(sys, out, t, dt);
            if (!inside(out)) return std::nullopt;
            return std::make_pair(out, dt);
        }
        auto stepper = ode::make_controlled(cfg_.tolerance, cfg_.tolerance,
                                            ode::runge_kutta_dopri5<State>());
        State out = x;
        double tt = t, h = dt;
        for (int tries = 0; tries < 200; ++tries) {
            stage_crossed_ = false;
            if (stepper.try_step(sys, out, tt, h) == ode::success) {
                if (!inside(out)) return std::nullopt;
                return std::make_pair(out, tt - t);
            }
            if (h < cfg_.min_step) break;
        }
        return std::nullopt;
    } catch (const OutOfDomain&) {
        return std::nullopt;
    }
}

double Integration::mirror(std::size_t i, double x, double direction) const {
    const double g0 = gap(i, x);
    if (g0 == 0.0) return x;
    const Interval d = action_[kAxes[i]].pair().domain();
    const double slope = std::abs(potentials_[i].derivative(x));
    double delta = slope > 0.0 ? 4.0 * std::abs(g0) / slope : 1e-8 * std::max(1.0, std::abs(x));
    delta = std::max(delta, 1e-14 * std::max(1.0, std::abs(x)));
    for (int n = 0; n < 80; ++n, delta *= 2.0) {
        const double far = x + direction * delta;
        if (!d.contains(far)) break;
        const double gf = gap(i, far);
        if (gf == 0.0 || (gf < 0.0) != (g0 < 0.0)) {
            auto f = [&](double s) { return gap(i, s); };
            std::uintmax_t iters = 200;
            const auto [lo, hi] = boost::math::tools::toms748_solve(
                f, std::min(x, far), std::max(x, far), boost::math::tools::eps_tolerance<double>(52),
                iters);
            const double tp = 0.5 * (lo + hi);
            const double image = 2.0 * tp - x;
            return d.contains(image) ? image : x;
        }
    }
    return x;
}

Trajectory Integration::run(const Point3& start) {
    Trajectory traj;
    State x = start;
    if (!inside(x)) throw OutOfDomain("start point lies outside the solution domains");
    for (std::size_t i = 0; i < 3; ++i)
        if (std::abs(gap(i, x[i])) <= eps_[i])
            throw InvalidArgument("start point sits on a turning point along " +
                                  std::string(axis_name(kAxes[i])));

    const long long n_steps = std::llround(cfg_.t_max / cfg_.step);
    traj.states.reserve(static_cast<std::size_t>(n_steps + 1));
    traj.states.push_back(snapshot(0.0, x));
    double t = 0.0;

    for (long long n = 1; n <= n_steps; ++n) {
        const double t_grid = n == n_steps ? cfg_.t_max : static_cast<double>(n) * cfg_.step;
        double dt = t_grid - t;
        bool domain_failure = false;
        while (t < t_grid) {
            dt = std::min(dt, t_grid - t);
            if (dt < cfg_.min_step && dt < t_grid - t) {
                // The step collapsed: either the domain edge is reached or an
                // event could not be resolved.
                if (domain_failure) {
                    if (cfg_.boundary == BoundaryPolicy::Error)
                        throw LeftDomain("trajectory reached the edge of the domain", t);
                    std::size_t edge = 0;
                    double closest = std::numeric_limits<double>::infinity();
                    for (std::size_t i = 0; i < 3; ++i) {
                        const Interval d = action_[kAxes[i]].pair().domain();
                        const double rel = std::min(x[i] - d.lo, d.hi - x[i]) / d.length();
                        if (rel < closest) {
                            closest = rel;
                            edge = i;
                        }
                    }
                    traj.events.push_back({t, kAxes[edge], EventKind::LeftDomain, x[edge]});
                    if (traj.states.back().t < t) traj.states.push_back(snapshot(t, x));
                    traj.stopped_at_boundary = true;
                    traj.orientation = orientation_;
                    return traj;
                }
                throw StepUnderflow("turning-point event could not be resolved", t);
            }
            const auto trial = attempt(x, t, dt);
            if (!trial) {
                domain_failure = true;
                dt *= 0.5;
                continue;
            }
            const auto& [next, taken] = *trial;
            bool overshoot = stage_crossed_;
            for (std::size_t i = 0; i < 3; ++i) {
                const double g0 = gap(i, x[i]), g1 = gap(i, next[i]);
                if ((g0 > 0.0 && g1 < 0.0) || (g0 < 0.0 && g1 > 0.0)) overshoot = true;
            }
            if (overshoot) {
                domain_failure = false;
                dt = 0.5 * taken;
                continue;
            }
            for (std::size_t i = 0; i < 3; ++i)
                if (gap(i, x[i]) < 0.0) traj.dwell_time[i] += taken;
            x = next;
            t = t + taken >= t_grid - 1e-15 * std::max(1.0, t_grid) ? t_grid : t + taken;

            bool fired = false;
            for (std::size_t i = 0; i < 3; ++i) {
                const double g = std::abs(gap(i, x[i]));
                if (!armed_[i]) {
                    if (g > 2.0 * eps_[i]) armed_[i] = true;
                    continue;
                }
                if (g >= eps_[i]) continue;
                const double direction = sign_of(2.0 * gap(i, x[i]) / momentum(i, x[i]));
                orientation_[i] = -orientation_[i];
                armed_[i] = false;
                fired = true;
                if (cfg_.tp_policy[i] == TurningPolicy::Reflect) {
                    traj.events.push_back({t, kAxes[i], EventKind::Reflection, x[i]});
                } else {
                    traj.events.push_back({t, kAxes[i], EventKind::TurningPointCrossing, x[i]});
                    x[i] = mirror(i, x[i], direction);
                }
            }
            if (fired && t < t_grid) traj.states.push_back(snapshot(t, x));
            dt = t_grid - t;
        }
        traj.states.push_back(snapshot(t, x));
    }
    traj.orientation = orientation_;
    return traj;
}

}  // namespace

Trajectory integrate(const SeparableAction3D& action, const EnergySplit& energies,
                     const std::array<Potential1D, 3>& potentials, const Point3& start,
                     const MotionConfig& cfg) {
    cfg.validate();
    for (Axis a : kAxes)
        if (potentials[index(a)].axis() != a)
            throw InvalidArgument("potentials must be given in x, y, z order");
    Integration integration(action, energies, potentials, cfg);
    return integration.run(start);
}

}  // namespace qshje
