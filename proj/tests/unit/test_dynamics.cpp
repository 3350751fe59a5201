#include <doctest.h>

#include <cmath>

#include "qshje/dynamics.hpp"

using namespace qshje;

namespace {

SolutionPair plane_pair(Axis axis) {
    return solve_pair(Potential1D::zero(axis), 0.5, {-20.0, 20.0}, 0.0, {}, {0.0, 1.0, 1.0, 0.0});
}

SolutionPair harmonic_pair(Axis axis, double energy, Interval domain = {-4.0, 4.0}) {
    return solve_pair(Potential1D::harmonic(1.0, 1.0, axis), energy, domain, 0.0);
}

/// Traveling-wave basis at x0: X1 + i X2 starts as e^{i p0 (x - x0)/hbar}.
SolutionPair wkb_pair(double hbar, double energy, Interval domain, double x0) {
    const auto v = Potential1D::harmonic(1.0);
    const double p0 = std::sqrt(2.0 * (energy - v.value(x0)));
    SolverOptions opts;
    opts.max_step = 1e-4;
    return solve_pair(v, energy, domain, x0, {hbar, 1.0}, {1.0, 0.0, 0.0, p0 / hbar}, opts);
}

std::array<Potential1D, 3> free_potentials() {
    return {Potential1D::zero(Axis::X), Potential1D::zero(Axis::Y), Potential1D::zero(Axis::Z)};
}

Potential1D barrier(Axis axis) {
    return Potential1D(Potential1D::PiecewiseLinear{{{-1.5, 0.0}, {-1.0, 1.0}, {1.0, 1.0}, {1.5, 0.0}}},
                       axis);
}

void check_sign_law(const Trajectory& traj, const std::array<Potential1D, 3>& v, const EnergySplit& e,
                    const MotionConfig& cfg) {
    double last_t = -1.0;
    for (const auto& s : traj.states) {
        CHECK(s.t > last_t);
        last_t = s.t;
        for (Axis a : kAxes) {
            const std::size_t i = index(a);
            CHECK(s.momenta[i] != 0.0);
            const double gap = e[a] - v[i].value(s.pos[i]);
            if (std::abs(gap) > cfg.epsilon_for(e[a]))
                CHECK(sign_of(s.velocities[i]) * sign_of(s.momenta[i]) == sign_of(gap));
        }
    }
}

}  // namespace

TEST_CASE("metric equals one for plane waves and 2m(E-V)/P^2 in general") {
    const ReducedAction1D plane(plane_pair(Axis::X), 0, 0);
    CHECK(metric_g(plane, 1.3) == doctest::Approx(1.0).epsilon(1e-14));

    const PhysicalConstants k{0.7, 1.6};
    const auto v = Potential1D::harmonic(0.9, 1.6);
    const auto pair = solve_pair(v, 0.8, {-3.0, 3.0}, 0.0, k);
    for (int o : {1, -1}) {
        const ReducedAction1D a(pair, 0.4, -0.9, o);
        for (double x = -2.9; x <= 2.9; x += 0.1) {
            const double p = momentum_1d(a, x);
            const double expected = 2.0 * k.mass * (0.8 - v.value(x)) / (p * p);
            CHECK(std::abs(metric_g(a, x) - expected) < 1e-6 * std::max(1.0, std::abs(expected)));
        }
    }
}

TEST_CASE("metric tends to the classical value as hbar shrinks") {
    const double energy = 2.0;
    const auto pair = wkb_pair(0.01, energy, {-1.5, 1.5}, 0.0);
    const ReducedAction1D a(pair, 0.0, 0.0);
    for (double x = -1.4; x <= 1.4; x += 0.2) {
        const double pcl = std::sqrt(2.0 * (energy - 0.5 * x * x));
        CHECK(std::abs(std::abs(momentum_1d(a, x)) - pcl) < 1e-2 * pcl);
        CHECK(std::abs(metric_g(a, x) - 1.0) < 1e-2);
    }
}

TEST_CASE("velocity follows 2(E - V)/P") {
    const ReducedAction1D plane(plane_pair(Axis::X), 0, 0);
    CHECK(velocity(plane, 0.5, Potential1D::zero(), 2.0) == doctest::Approx(1.0));

    const auto v = Potential1D::harmonic(1.0);
    const ReducedAction1D a(harmonic_pair(Axis::X, 0.5), 0.2, 0.3);
    CHECK(velocity(a, 0.5, v, 1.0) == 0.0);
    const double forbidden = velocity(a, 0.5, v, 2.0);
    CHECK(sign_of(forbidden) == -sign_of(momentum_1d(a, 2.0)));
}

TEST_CASE("alternative velocity differs quantum mechanically and agrees classically") {
    const ReducedAction1D plane(plane_pair(Axis::X), 0, 0);
    CHECK(velocity_alt(plane, 0.5, Potential1D::zero(), 1.0) == doctest::Approx(1.0));

    const auto v = Potential1D::harmonic(1.0);
    const ReducedAction1D a(harmonic_pair(Axis::X, 0.5), 0.2, 0.3);
    const double x = 0.37;
    CHECK(std::abs(velocity_alt(a, 0.5, v, x) - velocity(a, 0.5, v, x)) > 1e-3);

    auto gap = [&](double hbar) {
        const ReducedAction1D w(wkb_pair(hbar, 2.0, {-1.5, 1.5}, 0.0), 0.0, 0.0);
        return std::abs(velocity_alt(w, 2.0, v, x) - velocity(w, 2.0, v, x));
    };
    const double coarse = gap(0.2);
    const double fine = gap(0.01);
    CHECK(coarse > 0.1);
    CHECK(fine < 1e-2);
    CHECK_THROWS_AS(velocity_alt(a, 0.5, v, 3.9999), StencilOutOfDomain);
}

TEST_CASE("free particle moves on a straight line") {
    const auto action = assemble_separable(ReducedAction1D(plane_pair(Axis::X), 0, 0),
                                           ReducedAction1D(plane_pair(Axis::Y), 0, 0),
                                           ReducedAction1D(plane_pair(Axis::Z), 0, 0));
    const EnergySplit e(0.5, 0.5, 0.5);
    for (Integrator integrator : {Integrator::RK4, Integrator::RK45}) {
        MotionConfig cfg;
        cfg.integrator = integrator;
        const auto traj = integrate(action, e, free_potentials(), {0.0, 0.0, 0.0}, cfg);
        REQUIRE(traj.states.size() == 10001);
        const auto& last = traj.states.back();
        CHECK(last.t == 10.0);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(std::abs(last.pos[i] - 10.0) < 1e-8);
            CHECK(last.momenta[i] == doctest::Approx(1.0));
            CHECK(last.metric[i] == doctest::Approx(1.0));
        }
        CHECK(traj.events.empty());
        for (const auto& s : traj.states)
            CHECK(std::abs(total_energy_check(s, free_potentials(), e, {})) < 1e-10);
        check_sign_law(traj, free_potentials(), e, cfg);
    }
}

TEST_CASE("reflection keeps the motion inside the allowed region") {
    const double ex = 0.8;
    const auto action = assemble_separable(ReducedAction1D(harmonic_pair(Axis::X, ex), 0.1, 0.2),
                                           ReducedAction1D(plane_pair(Axis::Y), 0, 0),
                                           ReducedAction1D(plane_pair(Axis::Z), 0, 0));
    const std::array<Potential1D, 3> v{Potential1D::harmonic(1.0, 1.0, Axis::X), Potential1D::zero(Axis::Y),
                                       Potential1D::zero(Axis::Z)};
    const EnergySplit e(ex, 0.5, 0.5);
    MotionConfig cfg;
    cfg.t_max = 8.0;
    const auto traj = integrate(action, e, v, {0.0, 0.0, 0.0}, cfg);
    REQUIRE(!traj.events.empty());
    const double tp = std::sqrt(2.0 * ex);
    for (const auto& s : traj.states) CHECK(std::abs(s.pos[0]) < tp);
    CHECK(traj.dwell_time[0] == 0.0);
    for (const auto& ev : traj.events) {
        CHECK(ev.kind == EventKind::Reflection);
        CHECK(ev.axis == Axis::X);
        // Velocity reverses across the event.
        double before = 0, after = 0;
        for (const auto& s : traj.states) {
            if (s.t < ev.t - 0.05 && s.t > ev.t - 0.2) before = s.velocities[0];
            if (s.t > ev.t + 0.05 && s.t < ev.t + 0.2) after = s.velocities[0];
        }
        if (before != 0 && after != 0) CHECK(sign_of(before) == -sign_of(after));
    }
    check_sign_law(traj, v, e, cfg);
    for (const auto& s : traj.states) CHECK(std::abs(total_energy_check(s, v, e, {})) < 1e-5);
}

TEST_CASE("transmission into the harmonic forbidden region has a finite dwell time") {
    const double ex = 0.8;
    const auto action = assemble_separable(ReducedAction1D(harmonic_pair(Axis::X, ex), 0.1, 0.2),
                                           ReducedAction1D(plane_pair(Axis::Y), 0, 0),
                                           ReducedAction1D(plane_pair(Axis::Z), 0, 0));
    const std::array<Potential1D, 3> v{Potential1D::harmonic(1.0, 1.0, Axis::X), Potential1D::zero(Axis::Y),
                                       Potential1D::zero(Axis::Z)};
    const EnergySplit e(ex, 0.5, 0.5);
    MotionConfig cfg;
    cfg.t_max = 40.0;
    cfg.tp_policy = {TurningPolicy::Transmit, TurningPolicy::Transmit, TurningPolicy::Transmit};
    cfg.boundary = BoundaryPolicy::Stop;
    const auto traj = integrate(action, e, v, {0.0, 0.0, 0.0}, cfg);
    REQUIRE(!traj.events.empty());
    CHECK(traj.events.front().kind == EventKind::TurningPointCrossing);
    CHECK(traj.stopped_at_boundary);
    CHECK(traj.events.back().kind == EventKind::LeftDomain);
    CHECK(traj.dwell_time[0] > 0.0);
    CHECK(std::isfinite(traj.dwell_time[0]));
    CHECK(traj.dwell_time[0] < traj.states.back().t);
    CHECK(traj.orientation[0] == -1);
    bool forbidden = false;
    for (const auto& s : traj.states) forbidden |= s.region[0] == Region::Forbidden;
    CHECK(forbidden);
    check_sign_law(traj, v, e, cfg);

    cfg.boundary = BoundaryPolicy::Error;
    CHECK_THROWS_AS(integrate(action, e, v, {0.0, 0.0, 0.0}, cfg), LeftDomain);
}

TEST_CASE("a barrier is crossed in finite time") {
    const double ex = 0.5;
    const auto bx = barrier(Axis::X);
    const auto pair = solve_pair(bx, ex, {-5.0, 5.0}, -4.0);
    const auto action = assemble_separable(ReducedAction1D(pair, 0.0, 0.0),
                                           ReducedAction1D(plane_pair(Axis::Y), 0, 0),
                                           ReducedAction1D(plane_pair(Axis::Z), 0, 0));
    const std::array<Potential1D, 3> v{bx, Potential1D::zero(Axis::Y), Potential1D::zero(Axis::Z)};
    const EnergySplit e(ex, 0.5, 0.5);
    for (Integrator integrator : {Integrator::RK4, Integrator::RK45}) {
        MotionConfig cfg;
        cfg.t_max = 15.0;
        cfg.integrator = integrator;
        cfg.tp_policy[0] = TurningPolicy::Transmit;
        cfg.boundary = BoundaryPolicy::Stop;
        const auto traj = integrate(action, e, v, {-4.0, 0.0, 0.0}, cfg);
        int crossings = 0;
        for (const auto& ev : traj.events) crossings += ev.kind == EventKind::TurningPointCrossing;
        CHECK(crossings == 2);
        CHECK(traj.dwell_time[0] > 0.0);
        CHECK(traj.dwell_time[0] < 15.0);
        CHECK(traj.states.back().pos[0] > 1.25);
        check_sign_law(traj, v, e, cfg);
    }
}

TEST_CASE("energy partition holds along a harmonic trajectory and detects wrong energies") {
    const auto action = assemble_separable(ReducedAction1D(harmonic_pair(Axis::X, 1.5), 0.3, 0.1),
                                           ReducedAction1D(harmonic_pair(Axis::Y, 0.9), -0.2, 0.4),
                                           ReducedAction1D(harmonic_pair(Axis::Z, 2.5), 0.0, 0.0));
    const std::array<Potential1D, 3> v{Potential1D::harmonic(1.0, 1.0, Axis::X),
                                       Potential1D::harmonic(1.0, 1.0, Axis::Y),
                                       Potential1D::harmonic(1.0, 1.0, Axis::Z)};
    const EnergySplit e(1.5, 0.9, 2.5);
    MotionConfig cfg;
    cfg.t_max = 1.0;
    const auto traj = integrate(action, e, v, {0.1, -0.2, 0.3}, cfg);
    CHECK(traj.states.size() >= 1001);
    const EnergySplit wrong(1.8, 0.9, 2.5);
    for (const auto& s : traj.states) {
        CHECK(std::abs(total_energy_check(s, v, e, {})) < 1e-5);
        CHECK(total_energy_check(s, v, wrong, {}) == doctest::Approx(-0.3).epsilon(1e-4));
    }
}

TEST_CASE("RK4 converges at fourth order on a smooth segment") {
    const auto action = assemble_separable(ReducedAction1D(harmonic_pair(Axis::X, 1.5), 0.3, 0.1),
                                           ReducedAction1D(plane_pair(Axis::Y), 0, 0),
                                           ReducedAction1D(plane_pair(Axis::Z), 0, 0));
    const std::array<Potential1D, 3> v{Potential1D::harmonic(1.0, 1.0, Axis::X), Potential1D::zero(Axis::Y),
                                       Potential1D::zero(Axis::Z)};
    const EnergySplit e(1.5, 0.5, 0.5);
    std::vector<double> finals;
    for (double step : {0.1, 0.05, 0.025}) {
        MotionConfig cfg;
        cfg.step = step;
        cfg.t_max = 0.4;
        finals.push_back(integrate(action, e, v, {0.0, 0.0, 0.0}, cfg).states.back().pos[0]);
    }
    const double order = std::log2(std::abs(finals[0] - finals[1]) / std::abs(finals[1] - finals[2]));
    CHECK(order >= 3.5);
}

TEST_CASE("trajectories do not depend on the additive constant") {
    auto build = [](double lambda0) {
        return assemble_separable(ReducedAction1D(harmonic_pair(Axis::X, 1.5), 0.3, 0.1),
                                  ReducedAction1D(plane_pair(Axis::Y), 0, 0),
                                  ReducedAction1D(plane_pair(Axis::Z), 0, 0), lambda0);
    };
    const std::array<Potential1D, 3> v{Potential1D::harmonic(1.0, 1.0, Axis::X), Potential1D::zero(Axis::Y),
                                       Potential1D::zero(Axis::Z)};
    const EnergySplit e(1.5, 0.5, 0.5);
    MotionConfig cfg;
    cfg.t_max = 2.0;
    const auto a = integrate(build(0.0), e, v, {0.0, 0.0, 0.0}, cfg);
    const auto b = integrate(build(5.0), e, v, {0.0, 0.0, 0.0}, cfg);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t n = 0; n < a.states.size(); ++n) CHECK(a.states[n].pos == b.states[n].pos);
}

TEST_CASE("invalid configurations and unresolved events raise errors") {
    const auto action = assemble_separable(ReducedAction1D(harmonic_pair(Axis::X, 0.5), 0.0, 0.0),
                                           ReducedAction1D(plane_pair(Axis::Y), 0, 0),
                                           ReducedAction1D(plane_pair(Axis::Z), 0, 0));
    const std::array<Potential1D, 3> v{Potential1D::harmonic(1.0, 1.0, Axis::X), Potential1D::zero(Axis::Y),
                                       Potential1D::zero(Axis::Z)};
    const EnergySplit e(0.5, 0.5, 0.5);
    MotionConfig cfg;
    cfg.step = -1.0;
    CHECK_THROWS_AS(integrate(action, e, v, {0, 0, 0}, cfg), InvalidArgument);
    cfg = {};
    CHECK_THROWS_AS(integrate(action, e, v, {1.0, 0, 0}, cfg), InvalidArgument);
    CHECK_THROWS_AS(integrate(action, e, v, {0, 30.0, 0}, cfg), OutOfDomain);

    // A cliff is jumped over by a coarse step, and halving is not allowed.
    const Potential1D cliff(Potential1D::PiecewiseLinear{{{0.9, 0.0}, {0.901, 1.0}}}, Axis::X);
    const auto cliff_action = assemble_separable(
        ReducedAction1D(solve_pair(cliff, 0.5, {-4.0, 4.0}, 0.0), 0.0, 0.0),
        ReducedAction1D(plane_pair(Axis::Y), 0, 0), ReducedAction1D(plane_pair(Axis::Z), 0, 0));
    const std::array<Potential1D, 3> cv{cliff, Potential1D::zero(Axis::Y), Potential1D::zero(Axis::Z)};
    cfg.step = 0.5;
    cfg.min_step = 0.5;
    CHECK_THROWS_AS(integrate(cliff_action, e, cv, {0, 0, 0}, cfg), StepUnderflow);
}
