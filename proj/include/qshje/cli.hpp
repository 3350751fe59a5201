#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qshje/amplitude.hpp"
#include "qshje/dynamics.hpp"
#include "qshje/tensor_reduction.hpp"

namespace qshje::cli {

enum class Format { Csv, Json };

std::string_view to_string(Format f);

/// One axis of a scenario: potential, separation energy and how to solve for the pair.
struct AxisSpec {
    Potential1D potential;
    double energy = 0.5;
    Interval domain{-5.0, 5.0};
    double anchor = 0.0;
    InitialConditions ic;
    SolverOptions solver;
};

struct ActionSpec {
    enum class Form { Gammas, Tensor };
    Form form = Form::Gammas;
    Gammas gammas{};
    std::array<int, 3> orientation{1, 1, 1};
    TensorCoefficients tensor;
    /// Set when the tensor was drawn from the scenario seed rather than given.
    bool random_tensor = false;
    double lambda0 = 0.0;
};

struct VerifySpec {
    /// Points per axis for grid-based checks.
    int grid = 200;
    /// Random points for the three-dimensional checks.
    int points = 100;
    double wronskian_tolerance = 1e-8;
    double qshje_tolerance = 1e-6;
    double current_tolerance = 1e-6;
    double energy_tolerance = 1e-5;
    double momentum_floor = 1e-12;
};

struct SweepSpec {
    int count = 10;
    /// gammas are drawn uniformly from [-range, range].
    double range = 2.0;
    int threads = 1;
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    PhysicalConstants constants;
    std::array<AxisSpec, 3> axes;
    ActionSpec action;
    MotionConfig motion;
    Point3 start{};
    std::filesystem::path out_dir;
    Format format = Format::Csv;
    VerifySpec verify;
    FitOptions fit;
    SweepSpec sweep;

    EnergySplit energies() const;
    std::array<Potential1D, 3> potentials() const;
    std::array<SolutionPair, 3> solve() const;
};

/// Parses the key/value scenario text. `name` is used in diagnostics.
/// Throws ConfigError naming the offending field and line.
Scenario parse_scenario(std::istream& in, const std::string& name);
Scenario load_scenario(const std::filesystem::path& path);

/// Command-line values that take precedence over the file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out_dir;
    std::optional<Format> format;
    std::optional<TurningPolicy> tp_policy;
};

void apply_overrides(Scenario& s, const Overrides& o);

/// Throws ConfigError unless the output directory is set and exists.
void require_output_dir(const Scenario& s);

struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    /// True when the check passes for value < tolerance, false for value > tolerance.
    bool upper_bound = true;
    bool pass = false;
};

struct VerificationReport {
    std::vector<CheckResult> checks;
    std::optional<FitResult> fit;
    bool pass() const;
};

/// Separable action built from the scenario gammas and pairs.
SeparableAction3D separable_action(const Scenario& s, const std::array<SolutionPair, 3>& pairs);

/// Separable action with the given gammas, oriented so that its tensor form is
/// expand_gammas(gammas).
SeparableAction3D action_from_fit(const Gammas& g, const std::array<SolutionPair, 3>& pairs,
                                  double lambda0);

/// Residual checks of a separable action. Random points are drawn from `seed`.
VerificationReport verify_separable(const SeparableAction3D& action, const std::array<Potential1D, 3>& potentials,
                                    const EnergySplit& energies, const VerifySpec& limits, std::uint64_t seed);

/// All checks for the scenario; nothing is written.
VerificationReport verify(const Scenario& s);

/// verify() followed by writing verify_report.{json,csv} to the output directory.
VerificationReport run_verify(const Scenario& s);

struct TrajectorySummary {
    Trajectory trajectory;
    double max_energy_residual = 0.0;
    int sign_law_violations = 0;
};

/// Integrates the scenario and writes trajectory, events, plot data and summary files.
TrajectorySummary run_trajectory(const Scenario& s);

struct ReduceOutcome {
    TensorCoefficients normalized;
    FitResult fit;
    MonomialCount monomials;
};

/// Reduces the scenario tensor to six gammas and writes reduce.{json,csv}.
ReduceOutcome run_reduce(const Scenario& s);

struct SweepItem {
    Gammas gammas{};
    VerificationReport report;
};

/// Verifies `sweep.count` seeded random gamma sextuples on the scenario's pairs and
/// writes sweep_summary.{csv,json}.
std::vector<SweepItem> run_sweep(const Scenario& s);

/// Sets the global log level from QSHJE_LOG (trace, debug, info, warn, error, off).
void configure_logging();

/// Decimal text with 17 significant digits.
std::string format_number(double v);

}  // namespace qshje::cli
