#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "qshje/cli.hpp"

namespace {

enum Exit { kPass = 0, kCheckFailure = 1, kConfigError = 2, kNumericalFailure = 3 };

}  // namespace

int main(int argc, char** argv) {
    using namespace qshje;
    cli::configure_logging();

    CLI::App app{"Quantum trajectories from separable reduced actions"};
    app.require_subcommand(1);

    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format;
    std::string tp_policy;

    auto* verify = app.add_subcommand("verify", "Run the residual checks of a scenario");
    auto* trajectory = app.add_subcommand("trajectory", "Integrate a trajectory and write its data");
    auto* reduce = app.add_subcommand("reduce", "Reduce a tensor action to six gammas");
    auto* sweep = app.add_subcommand("sweep", "Verify many seeded random gamma sextuples");
    for (auto* sub : {verify, trajectory, reduce, sweep}) {
        sub->add_option("--config", config, "Scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Seed for randomized sampling");
        sub->add_option("--out", out, "Output directory (must exist)");
        sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--tp-policy", tp_policy, "Turning-point policy for every axis")
            ->check(CLI::IsMember({"reflect", "transmit"}));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        cli::Scenario scenario = cli::load_scenario(config);
        cli::Overrides o;
        o.seed = seed;
        if (!out.empty()) o.out_dir = out;
        if (!format.empty()) o.format = format == "csv" ? cli::Format::Csv : cli::Format::Json;
        if (!tp_policy.empty())
            o.tp_policy = tp_policy == "reflect" ? TurningPolicy::Reflect : TurningPolicy::Transmit;
        cli::apply_overrides(scenario, o);

        if (verify->parsed()) {
            const auto report = cli::run_verify(scenario);
            for (const auto& c : report.checks)
                std::cout << c.name << ' ' << cli::format_number(c.value) << ' ' << (c.pass ? "pass" : "FAIL")
                          << '\n';
            std::cout << (report.pass() ? "PASS" : "FAIL") << '\n';
            return report.pass() ? kPass : kCheckFailure;
        }
        if (trajectory->parsed()) {
            const auto summary = cli::run_trajectory(scenario);
            std::cout << "rows " << summary.trajectory.states.size() << " events "
                      << summary.trajectory.events.size() << " max_energy_residual "
                      << cli::format_number(summary.max_energy_residual) << '\n';
            return summary.sign_law_violations == 0 ? kPass : kCheckFailure;
        }
        if (reduce->parsed()) {
            const auto r = cli::run_reduce(scenario);
            std::cout << (r.fit.separable ? "separable" : "NotSeparable") << " residual "
                      << cli::format_number(r.fit.residual) << '\n';
            return kPass;
        }
        const auto items = cli::run_sweep(scenario);
        int failed = 0;
        for (const auto& item : items) failed += !item.report.pass();
        std::cout << "items " << items.size() << " failed " << failed << '\n';
        return failed == 0 ? kPass : kCheckFailure;
    } catch (const ConfigError& e) {
        spdlog::error("configuration error: {}", e.what());
        return kConfigError;
    } catch (const DegenerateTensor& e) {
        spdlog::error("configuration error: {}", e.what());
        return kConfigError;
    } catch (const StepUnderflow& e) {
        spdlog::error("numerical failure at t = {}: {}", cli::format_number(e.time()), e.what());
        return kNumericalFailure;
    } catch (const LeftDomain& e) {
        spdlog::error("numerical failure at t = {}: {}", cli::format_number(e.time()), e.what());
        return kNumericalFailure;
    } catch (const Error& e) {
        spdlog::error("numerical failure: {}", e.what());
        return kNumericalFailure;
    }
}
