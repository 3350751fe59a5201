#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "qshje/cli.hpp"

namespace qshje::cli {

using json = nlohmann::ordered_json;

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

void configure_logging() {
    static const std::map<std::string, spdlog::level::level_enum> levels{
        {"trace", spdlog::level::trace}, {"debug", spdlog::level::debug}, {"info", spdlog::level::info},
        {"warn", spdlog::level::warn},   {"error", spdlog::level::err},   {"off", spdlog::level::off},
    };
    if (!spdlog::get("qshje")) spdlog::set_default_logger(spdlog::stderr_logger_st("qshje"));
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("QSHJE_LOG")) {
        const auto it = levels.find(env);
        if (it != levels.end())
            spdlog::set_level(it->second);
        else
            spdlog::warn("ignoring unknown QSHJE_LOG level '{}'", env);
    }
}

bool VerificationReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

namespace {

CheckResult below(std::string name, double value, double tolerance) {
    return {std::move(name), value, tolerance, true, std::isfinite(value) && value < tolerance};
}

CheckResult above(std::string name, double value, double floor) {
    return {std::move(name), value, floor, false, std::isfinite(value) && value > floor};
}

/// Random points inside every axis domain, kept clear of the edges for stencils.
std::vector<Point3> interior_points(const std::array<Interval, 3>& domains, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Point3> out(static_cast<std::size_t>(n));
    for (auto& p : out) {
        for (std::size_t i = 0; i < 3; ++i) {
            const double margin = 0.05 * domains[i].length();
            std::uniform_real_distribution<double> u(domains[i].lo + margin, domains[i].hi - margin);
            p[i] = u(rng);
        }
    }
    return out;
}

std::array<Interval, 3> domains_of(const SeparableAction3D& action) {
    return {action[Axis::X].pair().domain(), action[Axis::Y].pair().domain(), action[Axis::Z].pair().domain()};
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(path.string(), "cannot open output file for writing");
    spdlog::info("writing {}", path.string());
    return out;
}

void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

json to_json(const std::array<double, 3>& v) { return json::array({v[0], v[1], v[2]}); }

template <std::size_t N>
json to_json(const std::array<double, N>& v) {
    json out = json::array();
    for (double x : v) out.push_back(x);
    return out;
}

json report_json(const Scenario& s, const VerificationReport& r) {
    json j;
    j["scenario"] = s.name;
    j["seed"] = s.seed;
    j["form"] = s.action.form == ActionSpec::Form::Gammas ? "gammas" : "tensor";
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name},
                          {"value", c.value},
                          {"tolerance", c.tolerance},
                          {"relation", c.upper_bound ? "below" : "above"},
                          {"pass", c.pass}});
    j["checks"] = checks;
    if (r.fit) {
        j["fit"] = {{"separable", r.fit->separable},
                    {"gammas", to_json(r.fit->gammas)},
                    {"phase", r.fit->phase},
                    {"residual", r.fit->residual},
                    {"best_restart", r.fit->best_restart}};
    }
    j["pass"] = r.pass();
    return j;
}

SeparableAction3D scenario_action(const Scenario& s, const std::array<SolutionPair, 3>& pairs) {
    if (s.action.form == ActionSpec::Form::Gammas) return separable_action(s, pairs);
    const FitResult fit = fit_gammas(s.action.tensor, [&] {
        FitOptions o = s.fit;
        o.seed = s.seed;
        return o;
    }());
    if (!fit.separable)
        throw ConfigError("[action]", fmt::format("tensor is not separable (best residual {}); trajectories "
                                                  "need a separable action",
                                                  format_number(fit.residual)));
    return action_from_fit(fit.gammas, pairs, s.action.lambda0 + fit.phase);
}

}  // namespace

SeparableAction3D separable_action(const Scenario& s, const std::array<SolutionPair, 3>& pairs) {
    const Gammas& g = s.action.gammas;
    return assemble_separable(ReducedAction1D(pairs[0], g[0], g[1], s.action.orientation[0]),
                              ReducedAction1D(pairs[1], g[2], g[3], s.action.orientation[1]),
                              ReducedAction1D(pairs[2], g[4], g[5], s.action.orientation[2]), s.action.lambda0);
}

SeparableAction3D action_from_fit(const Gammas& g, const std::array<SolutionPair, 3>& pairs, double lambda0) {
    auto axis = [&](std::size_t i) {
        const double c = (1.0 - g[2 * i] * g[2 * i + 1]) * pairs[i].wronskian_at_anchor();
        return ReducedAction1D(pairs[i], g[2 * i], g[2 * i + 1], -sign_of(c));
    };
    return assemble_separable(axis(0), axis(1), axis(2), lambda0);
}

VerificationReport verify_separable(const SeparableAction3D& action, const std::array<Potential1D, 3>& potentials,
                                    const EnergySplit& energies, const VerifySpec& limits, std::uint64_t seed) {
    VerificationReport r;
    for (Axis a : kAxes)
        r.checks.push_back(below(fmt::format("wronskian_{}", axis_name(a)),
                                 max_wronskian_drift(action[a].pair(), limits.grid), limits.wronskian_tolerance));

    double min_p = std::numeric_limits<double>::infinity();
    for (Axis a : kAxes) {
        const Interval d = action[a].pair().domain();
        double worst = 0.0;
        for (int n = 0; n < limits.grid; ++n) {
            const double x = d.lo + d.length() * n / (limits.grid - 1);
            worst = std::max(worst, qshje_residual_scaled(action[a], potentials[index(a)], energies[a], x));
            min_p = std::min(min_p, std::abs(momentum_1d(action[a], x)));
        }
        r.checks.push_back(below(fmt::format("qshje_{}", axis_name(a)), worst, limits.qshje_tolerance));
    }
    r.checks.push_back(above("momentum_nonzero", min_p, limits.momentum_floor));

    const auto pts = interior_points(domains_of(action), limits.points, seed);
    const Amplitude3D amp(action);
    for (Axis a : kAxes) {
        double worst = 0.0;
        for (const Point3& p : pts) worst = std::max(worst, current_residual_scaled(amp, a, p));
        r.checks.push_back(below(fmt::format("current_{}", axis_name(a)), worst, limits.current_tolerance));
    }

    double worst_energy = 0.0;
    for (const Point3& p : pts) {
        TrajectoryState st;
        st.pos = p;
        for (Axis a : kAxes) {
            st.momenta[index(a)] = momentum_1d(action[a], p[index(a)]);
            st.metric[index(a)] = metric_g(action[a], p[index(a)]);
        }
        const double scale = std::max(1.0, std::abs(energies.total()));
        worst_energy = std::max(worst_energy,
                                std::abs(total_energy_check(st, potentials, energies, action.constants())) / scale);
    }
    r.checks.push_back(below("energy_partition", worst_energy, limits.energy_tolerance));
    return r;
}

VerificationReport verify(const Scenario& s) {
    const auto pairs = s.solve();
    const auto potentials = s.potentials();
    const EnergySplit energies = s.energies();
    if (s.action.form == ActionSpec::Form::Gammas)
        return verify_separable(separable_action(s, pairs), potentials, energies, s.verify, s.seed);

    VerificationReport r;
    for (Axis a : kAxes)
        r.checks.push_back(below(fmt::format("wronskian_{}", axis_name(a)),
                                 max_wronskian_drift(pairs[index(a)], s.verify.grid), s.verify.wronskian_tolerance));

    const TensorAction t(s.action.tensor, pairs, s.action.lambda0);
    const std::array<Interval, 3> domains{pairs[0].domain(), pairs[1].domain(), pairs[2].domain()};
    const auto pts = interior_points(domains, s.verify.points, s.seed);
    for (Axis a : kAxes) {
        double worst = 0.0;
        for (const Point3& p : pts) worst = std::max(worst, tensor_qshje_residual_scaled(t, a, p));
        r.checks.push_back(below(fmt::format("qshje_{}", axis_name(a)), worst, s.verify.qshje_tolerance));
    }

    FitOptions opts = s.fit;
    opts.seed = s.seed;
    const FitResult fit = fit_gammas(s.action.tensor, opts);
    spdlog::info("separability fit residual {} (restart {})", fit.residual, fit.best_restart);
    r.fit = fit;
    r.checks.push_back(below("separability", fit.residual, opts.threshold));
    if (fit.separable) {
        const auto sep = action_from_fit(fit.gammas, pairs, s.action.lambda0);
        const auto rest = verify_separable(sep, potentials, energies, s.verify, s.seed);
        for (const auto& c : rest.checks)
            if (c.name.rfind("wronskian", 0) != 0 && c.name.rfind("qshje", 0) != 0) r.checks.push_back(c);
    }
    return r;
}

VerificationReport run_verify(const Scenario& s) {
    require_output_dir(s);
    const VerificationReport r = verify(s);
    for (const auto& c : r.checks)
        spdlog::info("{:<18} {} {} {} -> {}", c.name, format_number(c.value), c.upper_bound ? "<" : ">",
                     format_number(c.tolerance), c.pass ? "pass" : "FAIL");
    if (s.format == Format::Json) {
        write_json(s.out_dir / "verify_report.json", report_json(s, r));
    } else {
        auto out = open_output(s.out_dir / "verify_report.csv");
        out << "check,value,tolerance,relation,pass\n";
        for (const auto& c : r.checks)
            out << c.name << ',' << format_number(c.value) << ',' << format_number(c.tolerance) << ','
                << (c.upper_bound ? "below" : "above") << ',' << (c.pass ? "true" : "false") << '\n';
        out << "overall,,,," << (r.pass() ? "true" : "false") << '\n';
    }
    return r;
}

TrajectorySummary run_trajectory(const Scenario& s) {
    require_output_dir(s);
    const auto pairs = s.solve();
    const auto action = scenario_action(s, pairs);
    const auto potentials = s.potentials();
    const EnergySplit energies = s.energies();

    TrajectorySummary summary;
    summary.trajectory = integrate(action, energies, potentials, s.start, s.motion);
    const Trajectory& traj = summary.trajectory;

    std::vector<double> energy_residual;
    energy_residual.reserve(traj.states.size());
    for (const auto& st : traj.states) {
        const double e = total_energy_check(st, potentials, energies, s.constants);
        energy_residual.push_back(e);
        summary.max_energy_residual = std::max(summary.max_energy_residual, std::abs(e));
        for (Axis a : kAxes) {
            const std::size_t i = index(a);
            const double gap = energies[a] - potentials[i].value(st.pos[i]);
            if (std::abs(gap) > s.motion.epsilon_for(energies[a]) &&
                sign_of(st.velocities[i]) * sign_of(st.momenta[i]) != sign_of(gap))
                ++summary.sign_law_violations;
        }
    }

    static const char* columns[] = {"t",         "x",         "y",         "z",        "px",       "py",
                                    "pz",        "vx",        "vy",        "vz",       "gx",       "gy",
                                    "gz",        "region_x",  "region_y",  "region_z", "energy_residual"};
    if (s.format == Format::Csv) {
        auto out = open_output(s.out_dir / "trajectory.csv");
        for (std::size_t c = 0; c < std::size(columns); ++c) out << (c ? "," : "") << columns[c];
        out << '\n';
        for (std::size_t n = 0; n < traj.states.size(); ++n) {
            const auto& st = traj.states[n];
            out << format_number(st.t);
            for (const Point3* v : {&st.pos, &st.momenta, &st.velocities, &st.metric})
                for (double x : *v) out << ',' << format_number(x);
            for (Region r : st.region) out << ',' << to_string(r);
            out << ',' << format_number(energy_residual[n]) << '\n';
        }
        auto ev = open_output(s.out_dir / "events.csv");
        ev << "t,axis,kind,position\n";
        for (const auto& e : traj.events)
            ev << format_number(e.t) << ',' << axis_name(e.axis) << ',' << to_string(e.kind) << ','
               << format_number(e.position) << '\n';
    } else {
        json rows = json::array();
        for (std::size_t n = 0; n < traj.states.size(); ++n) {
            const auto& st = traj.states[n];
            json row = json::array({st.t});
            for (const Point3* v : {&st.pos, &st.momenta, &st.velocities, &st.metric})
                for (double x : *v) row.push_back(x);
            for (Region r : st.region) row.push_back(std::string(to_string(r)));
            row.push_back(energy_residual[n]);
            rows.push_back(std::move(row));
        }
        json cols = json::array();
        for (const char* c : columns) cols.push_back(c);
        write_json(s.out_dir / "trajectory.json", {{"columns", cols}, {"rows", rows}});
        json events = json::array();
        for (const auto& e : traj.events)
            events.push_back({{"t", e.t},
                              {"axis", std::string(axis_name(e.axis))},
                              {"kind", std::string(to_string(e.kind))},
                              {"position", e.position}});
        write_json(s.out_dir / "events.json", events);
    }

    for (Axis a : kAxes) {
        const std::size_t i = index(a);
        auto time = open_output(s.out_dir / fmt::format("plot_{}_time.dat", axis_name(a)));
        auto phase = open_output(s.out_dir / fmt::format("plot_{}_phase.dat", axis_name(a)));
        time << "# t " << axis_name(a) << '\n';
        phase << "# " << axis_name(a) << " p" << axis_name(a) << '\n';
        for (const auto& st : traj.states) {
            time << format_number(st.t) << ' ' << format_number(st.pos[i]) << '\n';
            phase << format_number(st.pos[i]) << ' ' << format_number(st.momenta[i]) << '\n';
        }
    }

    std::map<std::string, int> counts{{"TurningPointCrossing", 0}, {"Reflection", 0}, {"LeftDomain", 0}};
    for (const auto& e : traj.events) ++counts[std::string(to_string(e.kind))];
    json j;
    j["scenario"] = s.name;
    j["seed"] = s.seed;
    j["rows"] = traj.states.size();
    j["t_final"] = traj.states.back().t;
    j["final_position"] = to_json(traj.states.back().pos);
    j["events"] = {{"TurningPointCrossing", counts["TurningPointCrossing"]},
                   {"Reflection", counts["Reflection"]},
                   {"LeftDomain", counts["LeftDomain"]}};
    j["dwell_time"] = to_json(traj.dwell_time);
    j["orientation"] = json::array({traj.orientation[0], traj.orientation[1], traj.orientation[2]});
    j["stopped_at_boundary"] = traj.stopped_at_boundary;
    j["max_energy_residual"] = summary.max_energy_residual;
    j["sign_law_violations"] = summary.sign_law_violations;
    write_json(s.out_dir / "summary.json", j);
    return summary;
}

ReduceOutcome run_reduce(const Scenario& s) {
    if (s.action.form != ActionSpec::Form::Tensor)
        throw ConfigError("[action] form", "reduce needs a tensor action (a, b or random_tensor)");
    require_output_dir(s);
    ReduceOutcome out;
    out.normalized = normalize_tensor(s.action.tensor);
    FitOptions opts = s.fit;
    opts.seed = s.seed;
    out.fit = fit_gammas(s.action.tensor, opts);
    out.monomials = count_monomials(s.action.tensor);
    const FitResult& f = out.fit;
    spdlog::info("reduction {} with residual {}", f.separable ? "succeeded" : "found no separable form",
                 format_number(f.residual));

    if (s.format == Format::Json) {
        json j;
        j["scenario"] = s.name;
        j["seed"] = s.seed;
        j["status"] = f.separable ? "separable" : "NotSeparable";
        j["residual"] = f.residual;
        j["threshold"] = opts.threshold;
        j[f.separable ? "gammas" : "best_gammas"] = to_json(f.gammas);
        j["phase"] = f.phase;
        j["best_restart"] = f.best_restart;
        j["restart_residuals"] = f.restart_residuals;
        const auto [mn, mx] = std::minmax_element(f.restart_residuals.begin(), f.restart_residuals.end());
        j["restart_residual_range"] = json::array({*mn, *mx});
        j["monomials"] = {{"numerator", out.monomials.numerator}, {"denominator", out.monomials.denominator}};
        j["normalized"] = {{"a", to_json(out.normalized.a)}, {"b", to_json(out.normalized.b)}};
        write_json(s.out_dir / "reduce.json", j);
    } else {
        auto o = open_output(s.out_dir / "reduce.csv");
        o << "key,value\n";
        o << "status," << (f.separable ? "separable" : "NotSeparable") << '\n';
        o << "residual," << format_number(f.residual) << '\n';
        o << "threshold," << format_number(opts.threshold) << '\n';
        for (std::size_t i = 0; i < 6; ++i) o << "gamma" << i + 1 << ',' << format_number(f.gammas[i]) << '\n';
        o << "phase," << format_number(f.phase) << '\n';
        o << "best_restart," << f.best_restart << '\n';
        for (std::size_t i = 0; i < f.restart_residuals.size(); ++i)
            o << "restart" << i << ',' << format_number(f.restart_residuals[i]) << '\n';
        o << "monomials_numerator," << out.monomials.numerator << '\n';
        o << "monomials_denominator," << out.monomials.denominator << '\n';
    }
    return out;
}

std::vector<SweepItem> run_sweep(const Scenario& s) {
    require_output_dir(s);
    const auto pairs = s.solve();
    const auto potentials = s.potentials();
    const EnergySplit energies = s.energies();

    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> u(-s.sweep.range, s.sweep.range);
    std::vector<SweepItem> items(static_cast<std::size_t>(s.sweep.count));
    std::vector<std::uint64_t> seeds(items.size());
    for (std::size_t k = 0; k < items.size(); ++k) {
        Gammas& g = items[k].gammas;
        for (;;) {
            for (double& v : g) v = u(rng);
            bool ok = true;
            for (std::size_t i = 0; i < 3; ++i) ok &= std::abs(1.0 - g[2 * i] * g[2 * i + 1]) > 1e-3;
            if (ok) break;
        }
        seeds[k] = rng();
    }

    auto work = [&](std::size_t k) {
        const Gammas& g = items[k].gammas;
        const auto action = assemble_separable(
            ReducedAction1D(pairs[0], g[0], g[1], s.action.orientation[0]),
            ReducedAction1D(pairs[1], g[2], g[3], s.action.orientation[1]),
            ReducedAction1D(pairs[2], g[4], g[5], s.action.orientation[2]), s.action.lambda0);
        items[k].report = verify_separable(action, potentials, energies, s.verify, seeds[k]);
    };
    const auto threads = static_cast<std::size_t>(std::min<int>(s.sweep.threads, s.sweep.count));
    if (threads <= 1) {
        for (std::size_t k = 0; k < items.size(); ++k) work(k);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < threads; ++w)
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t k = w; k < items.size(); k += threads) work(k);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    auto family = [](const VerificationReport& r, std::string_view prefix) {
        double worst = 0.0;
        bool any = false;
        for (const auto& c : r.checks) {
            if (c.name.rfind(prefix, 0) != 0) continue;
            worst = any ? (c.upper_bound ? std::max(worst, c.value) : std::min(worst, c.value)) : c.value;
            any = true;
        }
        return worst;
    };
    static const char* families[] = {"wronskian", "qshje", "current", "momentum_nonzero", "energy_partition"};

    if (s.format == Format::Csv) {
        auto out = open_output(s.out_dir / "sweep_summary.csv");
        out << "index,g1,g2,g3,g4,g5,g6";
        for (const char* f : families) out << ',' << f;
        out << ",pass\n";
        for (std::size_t k = 0; k < items.size(); ++k) {
            out << k;
            for (double g : items[k].gammas) out << ',' << format_number(g);
            for (const char* f : families) out << ',' << format_number(family(items[k].report, f));
            out << ',' << (items[k].report.pass() ? "true" : "false") << '\n';
        }
    } else {
        json rows = json::array();
        for (std::size_t k = 0; k < items.size(); ++k) {
            json row{{"index", k}, {"gammas", to_json(items[k].gammas)}};
            for (const char* f : families) row[f] = family(items[k].report, f);
            row["pass"] = items[k].report.pass();
            rows.push_back(std::move(row));
        }
        write_json(s.out_dir / "sweep_summary.json", {{"scenario", s.name}, {"seed", s.seed}, {"items", rows}});
    }
    return items;
}

}  // namespace qshje::cli
