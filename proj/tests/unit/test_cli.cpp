#include <doctest.h>

#include <fstream>
#include <sstream>

#include "qshje/cli.hpp"

using namespace qshje;
using namespace qshje::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = QSHJE_SCENARIO_DIR;
const bool kLogging = (configure_logging(), true);

fs::path fresh_dir(const std::string& tag) {
    const fs::path d = fs::temp_directory_path() / ("qshje_cli_test_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

Scenario scenario(const std::string& file, const fs::path& out) {
    Scenario s = load_scenario(kScenarios / file);
    s.out_dir = out;
    return s;
}

Scenario parse(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in, "inline");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const std::string kAxes3 = "[x]\nenergy = 0.5\n[y]\nenergy = 0.5\n[z]\nenergy = 0.5\n";

}  // namespace

TEST_CASE("numbers are written with 17 significant digits") {
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(1.0 / 3.0) == "0.33333333333333331");
    CHECK(format_number(-2.5e-20) == "-2.4999999999999999e-20");
}

TEST_CASE("scenario files are parsed into typed fields") {
    const Scenario s = load_scenario(kScenarios / "harmonic_verify.ini");
    CHECK(s.name == "harmonic_verify");
    CHECK(s.seed == 3);
    CHECK(s.axes[0].potential.kind_name() == "harmonic");
    CHECK(s.axes[2].potential.kind_name() == "constant");
    CHECK(s.axes[1].energy == 0.9);
    CHECK(s.action.form == ActionSpec::Form::Gammas);
    CHECK(s.action.gammas[2] == 1.2);
    CHECK(s.action.orientation[1] == -1);
    CHECK(s.start == Point3{0.1, -0.2, 0.3});
    CHECK(s.sweep.count == 5);

    const Scenario b = load_scenario(kScenarios / "barrier.ini");
    CHECK(b.axes[0].potential.kind_name() == "piecewise_linear");
    CHECK(b.axes[0].potential.value(0.0) == 1.0);
    CHECK(b.motion.tp_policy[0] == TurningPolicy::Transmit);
    CHECK(b.motion.boundary == BoundaryPolicy::Stop);
}

TEST_CASE("configuration errors name the field and line") {
    CHECK(config_error(kAxes3 + "[action]\ngammas = 2, 0.5, 0, 0, 0, 0\n").find("gamma1 * gamma2") !=
          std::string::npos);
    CHECK(config_error(kAxes3 + "[action]\ngammas = 2, 0.5, 0, 0, 0, 0\n").find("inline:8 [action] gammas") !=
          std::string::npos);
    CHECK(config_error("[x]\nenergy = abc\n").find("[x] energy") != std::string::npos);
    CHECK(config_error(kAxes3 + "[action]\ngammas = 1, 2\n").find("expected 6") != std::string::npos);
    CHECK(config_error(kAxes3 + "[action]\ngammas = 0,0,0,0,0,0\na = 1,0,0,0,0,0,0,0\nb = 1,0,0,0,0,0,0,0\n")
              .find("not both") != std::string::npos);
    CHECK(config_error(kAxes3 + "[action]\n").find("gammas") != std::string::npos);
    CHECK(config_error(kAxes3 + "[actoin]\ngammas = 0,0,0,0,0,0\n").find("unknown section") != std::string::npos);
    CHECK(config_error(kAxes3 + "[action]\ngammas = 0,0,0,0,0,0\n[motion]\nstep = -1\n").find("[motion]") !=
          std::string::npos);
    CHECK(config_error(kAxes3 + "[action]\ngammas = 0,0,0,0,0,0\n[motion]\ntp_policy = bounce\n")
              .find("reflect or transmit") != std::string::npos);
    CHECK(config_error("[x]\npotential = harmonic\nenergy = 1\n").find("omega") != std::string::npos);
    CHECK(config_error("[x]\nenergy = 1\nic = 1, 0, 1, 0\n").find("Wronskian") != std::string::npos);
    CHECK(config_error("[x]\nenergy = 1\ndomain = 3, 1\n").find("domain") != std::string::npos);
    CHECK(config_error("[x\nenergy = 1\n").find("inline:1") != std::string::npos);
}

TEST_CASE("command-line overrides take precedence") {
    Scenario s = load_scenario(kScenarios / "random_tensor.ini");
    const auto before = s.action.tensor.flat();
    Overrides o;
    o.seed = 99;
    o.out_dir = "elsewhere";
    o.format = Format::Json;
    o.tp_policy = TurningPolicy::Transmit;
    apply_overrides(s, o);
    CHECK(s.seed == 99);
    CHECK(s.out_dir == "elsewhere");
    CHECK(s.format == Format::Json);
    CHECK(s.motion.tp_policy[2] == TurningPolicy::Transmit);
    CHECK(s.action.tensor.flat() != before);
}

TEST_CASE("plane-wave scenario passes every check") {
    const auto dir = fresh_dir("verify_plane");
    const auto r = run_verify(scenario("free_particle.ini", dir));
    CHECK(r.pass());
    CHECK(r.checks.size() == 11);
    CHECK(fs::exists(dir / "verify_report.csv"));
    const std::string text = slurp(dir / "verify_report.csv");
    CHECK(text.rfind("check,value,tolerance,relation,pass\n", 0) == 0);
    CHECK(text.find("overall,,,,true") != std::string::npos);
}

TEST_CASE("tensor scenarios report the recovered gammas") {
    const auto dir = fresh_dir("verify_tensor");
    Scenario s = scenario("separable_tensor.ini", dir);
    s.format = Format::Json;
    const auto r = run_verify(s);
    CHECK(r.pass());
    REQUIRE(r.fit);
    const Gammas planted{0.3, -0.2, 1.5, 0.1, -0.4, 0.7};
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(r.fit->gammas[i] - planted[i]) < 1e-6);
    CHECK(slurp(dir / "verify_report.json").find("\"separable\": true") != std::string::npos);

    const auto random = verify(scenario("random_tensor.ini", dir));
    CHECK_FALSE(random.pass());
}

TEST_CASE("trajectory outputs") {
    const auto dir = fresh_dir("trajectory");
    const auto summary = run_trajectory(scenario("free_particle.ini", dir));
    CHECK(summary.trajectory.states.size() == 10001);
    CHECK(summary.sign_law_violations == 0);
    const std::string csv = slurp(dir / "trajectory.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10002);
    CHECK(csv.find('\r') == std::string::npos);
    for (const char* f : {"events.csv", "summary.json", "plot_x_time.dat", "plot_y_phase.dat", "plot_z_time.dat"})
        CHECK(fs::exists(dir / f));
    const auto& last = summary.trajectory.states.back();
    for (double x : last.pos) CHECK(std::abs(x - 10.0) < 1e-8);

    const auto tdir = fresh_dir("transmit");
    const auto t = run_trajectory(scenario("harmonic_transmit.ini", tdir));
    CHECK(slurp(tdir / "events.csv").find(",x,TurningPointCrossing,") != std::string::npos);
    CHECK(t.trajectory.dwell_time[0] > 0.0);
    CHECK(t.max_energy_residual < 1e-5);
}

TEST_CASE("a missing output directory is rejected before any computation") {
    Scenario s = load_scenario(kScenarios / "free_particle.ini");
    s.out_dir = fs::temp_directory_path() / "qshje_cli_test_does_not_exist";
    fs::remove_all(s.out_dir);
    CHECK_THROWS_AS(run_trajectory(s), ConfigError);
    s.out_dir.clear();
    CHECK_THROWS_AS(run_verify(s), ConfigError);
}

TEST_CASE("reductions") {
    const auto dir = fresh_dir("reduce");
    Scenario sep = scenario("separable_tensor.ini", dir);
    sep.format = Format::Json;
    const auto good = run_reduce(sep);
    CHECK(good.fit.separable);
    CHECK(good.monomials.numerator == 8);
    CHECK(slurp(dir / "reduce.json").find("\"status\": \"separable\"") != std::string::npos);

    const auto bad = run_reduce(scenario("random_tensor.ini", dir));
    CHECK_FALSE(bad.fit.separable);
    CHECK(bad.fit.restart_residuals.size() == 20);
    CHECK(slurp(dir / "reduce.csv").find("status,NotSeparable") != std::string::npos);

    // A lone numerator entry with a zero denominator tensor cannot be normalized.
    Scenario lone = parse(kAxes3 + "[action]\na = 1,0,0,0,0,0,0,0\nb = 0,0,0,0,0,0,0,0\n");
    lone.out_dir = dir;
    CHECK_THROWS_AS(run_reduce(lone), DegenerateTensor);

    Scenario gam = scenario("free_particle.ini", dir);
    CHECK_THROWS_AS(run_reduce(gam), ConfigError);
}

TEST_CASE("sweeps verify every drawn sextuple") {
    const auto dir = fresh_dir("sweep");
    Scenario s = scenario("harmonic_verify.ini", dir);
    const auto items = run_sweep(s);
    CHECK(items.size() == 5);
    for (const auto& item : items) CHECK(item.report.pass());
    const std::string one = slurp(dir / "sweep_summary.csv");
    s.sweep.threads = 3;
    run_sweep(s);
    CHECK(slurp(dir / "sweep_summary.csv") == one);
}

TEST_CASE("seeded runs are byte-identical") {
    const auto a = fresh_dir("det_a");
    const auto b = fresh_dir("det_b");
    for (const auto& dir : {a, b}) {
        Scenario t = scenario("barrier.ini", dir);
        run_trajectory(t);
        Scenario r = scenario("random_tensor.ini", dir);
        r.format = Format::Json;
        run_reduce(r);
        Scenario v = scenario("harmonic_verify.ini", dir);
        v.format = Format::Json;
        run_verify(v);
        run_sweep(v);
    }
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
        ++compared;
    }
    CHECK(compared >= 12);
}
