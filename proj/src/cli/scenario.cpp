#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qshje/cli.hpp"

namespace qshje::cli {

namespace pt = boost::property_tree;

std::string_view to_string(Format f) { return f == Format::Csv ? "csv" : "json"; }

EnergySplit Scenario::energies() const { return {axes[0].energy, axes[1].energy, axes[2].energy}; }

std::array<Potential1D, 3> Scenario::potentials() const {
    return {axes[0].potential, axes[1].potential, axes[2].potential};
}

std::array<SolutionPair, 3> Scenario::solve() const {
    auto one = [&](std::size_t i) {
        const AxisSpec& a = axes[i];
        return solve_pair(a.potential, a.energy, a.domain, a.anchor, constants, a.ic, a.solver);
    };
    return {one(0), one(1), one(2)};
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

/// Field access with diagnostics that point back into the source text.
class Reader {
public:
    Reader(const pt::ptree& tree, std::vector<std::string> lines, std::string name)
        : tree_(tree), lines_(std::move(lines)), name_(std::move(name)) {}

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
        std::string where = name_;
        const int line = locate(section, key);
        if (line > 0) where += ":" + std::to_string(line);
        where += " [" + section + "]";
        if (!key.empty()) where += " " + key;
        throw ConfigError(where, what);
    }

    bool has_section(const std::string& section) const { return tree_.get_child_optional(section).has_value(); }

    bool has(const std::string& section, const std::string& key) const {
        const auto sec = tree_.get_child_optional(section);
        return sec && sec->get_child_optional(pt::ptree::path_type(key, '\0')).has_value();
    }

    std::optional<std::string> text(const std::string& section, const std::string& key) const {
        const auto sec = tree_.get_child_optional(section);
        if (!sec) return std::nullopt;
        const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        return trim(*v);
    }

    double number(const std::string& section, const std::string& key, std::string_view raw) const {
        const std::string s = trim(raw);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
            fail(section, key, "expected a finite number, got '" + s + "'");
        return v;
    }

    double real(const std::string& section, const std::string& key, double fallback) const {
        const auto t = text(section, key);
        return t ? number(section, key, *t) : fallback;
    }

    double required_real(const std::string& section, const std::string& key) const {
        const auto t = text(section, key);
        if (!t) fail(section, key, "missing required value");
        return number(section, key, *t);
    }

    long long integer(const std::string& section, const std::string& key, long long fallback) const {
        const auto t = text(section, key);
        if (!t) return fallback;
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(t->data(), t->data() + t->size(), v);
        if (t->empty() || ec != std::errc() || ptr != t->data() + t->size())
            fail(section, key, "expected an integer, got '" + *t + "'");
        return v;
    }

    std::vector<double> list(const std::string& section, const std::string& key) const {
        const auto t = text(section, key);
        if (!t) return {};
        std::vector<double> out;
        std::stringstream ss(*t);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(number(section, key, item));
        return out;
    }

    template <std::size_t N>
    std::optional<std::array<double, N>> fixed(const std::string& section, const std::string& key) const {
        if (!has(section, key)) return std::nullopt;
        const auto v = list(section, key);
        if (v.size() != N)
            fail(section, key, "expected " + std::to_string(N) + " comma-separated values, got " +
                                   std::to_string(v.size()));
        std::array<double, N> out{};
        std::copy(v.begin(), v.end(), out.begin());
        return out;
    }

    void check_keys(const std::map<std::string, std::set<std::string>>& allowed) const {
        for (const auto& [section, body] : tree_) {
            const auto it = allowed.find(section);
            if (it == allowed.end()) {
                if (body.data().empty()) fail(section, "", "unknown section");
                fail(section, "", "entries must belong to a section");
            }
            for (const auto& [key, value] : body)
                if (!it->second.count(key)) fail(section, key, "unknown key");
        }
    }

private:
    int locate(const std::string& section, const std::string& key) const {
        std::string current;
        for (std::size_t n = 0; n < lines_.size(); ++n) {
            const std::string line = trim(lines_[n]);
            if (line.empty() || line[0] == ';' || line[0] == '#') continue;
            if (line.front() == '[' && line.back() == ']') {
                current = trim(std::string_view(line).substr(1, line.size() - 2));
                if (current == section && key.empty()) return static_cast<int>(n + 1);
                continue;
            }
            const auto eq = line.find('=');
            if (current == section && eq != std::string::npos && trim(line.substr(0, eq)) == key)
                return static_cast<int>(n + 1);
        }
        return 0;
    }

    const pt::ptree& tree_;
    std::vector<std::string> lines_;
    std::string name_;
};

const std::map<std::string, std::set<std::string>>& allowed_keys() {
    static const std::set<std::string> axis{"potential", "v0",     "omega",  "mass", "center",
                                            "points",    "grid",   "values", "energy", "domain",
                                            "anchor",    "ic",     "max_step", "numerical"};
    static const std::map<std::string, std::set<std::string>> keys{
        {"general", {"name", "seed"}},
        {"constants", {"hbar", "mass"}},
        {"x", axis},
        {"y", axis},
        {"z", axis},
        {"action", {"form", "gammas", "orientation", "lambda0", "a", "b"}},
        {"motion",
         {"start", "step", "t_max", "integrator", "tp_policy", "tp_epsilon", "boundary", "min_step", "tolerance"}},
        {"output", {"dir", "format"}},
        {"verify",
         {"grid", "points", "wronskian_tolerance", "qshje_tolerance", "current_tolerance", "energy_tolerance",
          "momentum_floor"}},
        {"fit", {"restarts", "threshold", "threads", "start_range"}},
        {"sweep", {"count", "range", "threads"}},
    };
    return keys;
}

Potential1D read_potential(const Reader& r, const std::string& sec, Axis axis, double mass) {
    const std::string kind = lower(r.text(sec, "potential").value_or("zero"));
    if (kind == "zero") return Potential1D::zero(axis);
    if (kind == "constant") return Potential1D::constant(r.required_real(sec, "v0"), axis);
    if (kind == "harmonic") {
        const double omega = r.required_real(sec, "omega");
        const double m = r.real(sec, "mass", mass);
        if (!(omega > 0.0)) r.fail(sec, "omega", "must be positive");
        if (!(m > 0.0)) r.fail(sec, "mass", "must be positive");
        return Potential1D(Potential1D::Harmonic{omega, m, r.real(sec, "center", 0.0)}, axis);
    }
    if (kind == "piecewise_linear") {
        if (!r.has(sec, "points")) r.fail(sec, "points", "missing required value");
        const auto v = r.list(sec, "points");
        if (v.size() < 4 || v.size() % 2 != 0)
            r.fail(sec, "points", "expected at least two x, V pairs as a flat comma-separated list");
        Potential1D::PiecewiseLinear pl;
        for (std::size_t i = 0; i < v.size(); i += 2) pl.breakpoints.emplace_back(v[i], v[i + 1]);
        try {
            return Potential1D(pl, axis);
        } catch (const InvalidArgument& e) {
            r.fail(sec, "points", e.what());
        }
    }
    if (kind == "tabulated") {
        Potential1D::Tabulated tab{r.list(sec, "grid"), r.list(sec, "values")};
        if (tab.grid.size() != tab.values.size()) r.fail(sec, "values", "must have as many entries as grid");
        try {
            return Potential1D(tab, axis);
        } catch (const InvalidArgument& e) {
            r.fail(sec, "grid", e.what());
        }
    }
    r.fail(sec, "potential",
           "unknown kind '" + kind + "' (zero, constant, harmonic, piecewise_linear, tabulated)");
}

AxisSpec read_axis(const Reader& r, Axis axis, double mass) {
    const std::string sec(axis_name(axis));
    AxisSpec a;
    a.potential = read_potential(r, sec, axis, mass);
    a.energy = r.required_real(sec, "energy");
    if (const auto d = r.fixed<2>(sec, "domain")) {
        if (!((*d)[0] < (*d)[1])) r.fail(sec, "domain", "lower end must be below upper end");
        a.domain = {(*d)[0], (*d)[1]};
    }
    const Interval support = a.potential.support();
    if (a.domain.lo < support.lo || a.domain.hi > support.hi)
        r.fail(sec, "domain", "extends beyond the range where the potential is defined");
    a.anchor = r.real(sec, "anchor", std::clamp(0.0, a.domain.lo, a.domain.hi));
    if (!a.domain.contains(a.anchor)) r.fail(sec, "anchor", "must lie inside the domain");
    if (const auto ic = r.fixed<4>(sec, "ic")) {
        a.ic = {(*ic)[0], (*ic)[1], (*ic)[2], (*ic)[3]};
        if (a.ic.x1 * a.ic.dx2 - a.ic.x2 * a.ic.dx1 == 0.0)
            r.fail(sec, "ic", "initial data give dependent solutions (zero Wronskian)");
    }
    a.solver.max_step = r.real(sec, "max_step", a.solver.max_step);
    if (!(a.solver.max_step > 0.0)) r.fail(sec, "max_step", "must be positive");
    if (const auto t = r.text(sec, "numerical")) {
        const std::string v = lower(*t);
        if (v != "true" && v != "false") r.fail(sec, "numerical", "expected true or false");
        a.solver.force_numerical = v == "true";
    }
    return a;
}

TurningPolicy parse_policy(const Reader& r, const std::string& sec, const std::string& key, const std::string& v) {
    const std::string s = lower(trim(v));
    if (s == "reflect") return TurningPolicy::Reflect;
    if (s == "transmit") return TurningPolicy::Transmit;
    r.fail(sec, key, "expected reflect or transmit, got '" + s + "'");
}

void read_action(const Reader& r, Scenario& s) {
    const std::string sec = "action";
    ActionSpec& a = s.action;
    const bool has_gammas = r.has(sec, "gammas");
    const bool has_tensor = r.has(sec, "a") || r.has(sec, "b");
    std::string form = lower(r.text(sec, "form").value_or(""));
    if (has_gammas && has_tensor) r.fail(sec, "", "give either gammas or tensor coefficients a, b, not both");
    if (form.empty()) form = has_tensor ? "tensor" : "gammas";

    a.lambda0 = r.real(sec, "lambda0", 0.0);
    if (const auto o = r.fixed<3>(sec, "orientation")) {
        for (std::size_t i = 0; i < 3; ++i) {
            if ((*o)[i] != 1.0 && (*o)[i] != -1.0) r.fail(sec, "orientation", "entries must be 1 or -1");
            a.orientation[i] = static_cast<int>((*o)[i]);
        }
    }

    if (form == "gammas") {
        if (has_tensor) r.fail(sec, "form", "form is gammas but tensor coefficients are given");
        const auto g = r.fixed<6>(sec, "gammas");
        if (!g) r.fail(sec, "gammas", "missing required value");
        a.form = ActionSpec::Form::Gammas;
        a.gammas = *g;
        for (std::size_t i = 0; i < 3; ++i) {
            if (std::abs(1.0 - a.gammas[2 * i] * a.gammas[2 * i + 1]) < 1e-12)
                r.fail(sec, "gammas",
                       "gamma" + std::to_string(2 * i + 1) + " * gamma" + std::to_string(2 * i + 2) + " = 1 on the " +
                           std::string(axis_name(kAxes[i])) + " axis makes the action constant");
        }
        return;
    }
    if (form == "tensor") {
        if (has_gammas) r.fail(sec, "form", "form is tensor but gammas are given");
        const auto ta = r.fixed<8>(sec, "a");
        const auto tb = r.fixed<8>(sec, "b");
        if (!ta) r.fail(sec, "a", "missing required value");
        if (!tb) r.fail(sec, "b", "missing required value");
        a.form = ActionSpec::Form::Tensor;
        a.tensor.a = *ta;
        a.tensor.b = *tb;
        if (a.tensor.is_zero()) r.fail(sec, "a", "numerator and denominator tensors are both zero");
        return;
    }
    if (form == "random_tensor") {
        if (has_gammas || has_tensor) r.fail(sec, "form", "random_tensor takes no coefficients");
        a.form = ActionSpec::Form::Tensor;
        a.random_tensor = true;
        return;
    }
    r.fail(sec, "form", "unknown form '" + form + "' (gammas, tensor, random_tensor)");
}

void read_motion(const Reader& r, Scenario& s) {
    const std::string sec = "motion";
    MotionConfig& m = s.motion;
    if (const auto p = r.fixed<3>(sec, "start")) s.start = *p;
    m.step = r.real(sec, "step", m.step);
    m.t_max = r.real(sec, "t_max", m.t_max);
    m.tp_epsilon = r.real(sec, "tp_epsilon", m.tp_epsilon);
    m.min_step = r.real(sec, "min_step", m.min_step);
    m.tolerance = r.real(sec, "tolerance", m.tolerance);
    if (const auto t = r.text(sec, "integrator")) {
        const std::string v = lower(*t);
        if (v == "rk4")
            m.integrator = Integrator::RK4;
        else if (v == "rk45")
            m.integrator = Integrator::RK45;
        else
            r.fail(sec, "integrator", "expected rk4 or rk45, got '" + v + "'");
    }
    if (const auto t = r.text(sec, "boundary")) {
        const std::string v = lower(*t);
        if (v == "error")
            m.boundary = BoundaryPolicy::Error;
        else if (v == "stop")
            m.boundary = BoundaryPolicy::Stop;
        else
            r.fail(sec, "boundary", "expected error or stop, got '" + v + "'");
    }
    if (const auto t = r.text(sec, "tp_policy")) {
        std::vector<std::string> items;
        std::stringstream ss(*t);
        std::string item;
        while (std::getline(ss, item, ',')) items.push_back(item);
        if (items.size() == 1) items.assign(3, items[0]);
        if (items.size() != 3) r.fail(sec, "tp_policy", "expected one policy or one per axis");
        for (std::size_t i = 0; i < 3; ++i) m.tp_policy[i] = parse_policy(r, sec, "tp_policy", items[i]);
    }
    try {
        m.validate();
    } catch (const InvalidArgument& e) {
        r.fail(sec, "", e.what());
    }
}

Scenario build(const Reader& r, const std::string& name) {
    Scenario s;
    s.name = r.text("general", "name").value_or(name);
    const long long seed = r.integer("general", "seed", 0);
    if (seed < 0) r.fail("general", "seed", "must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);

    s.constants.hbar = r.real("constants", "hbar", 1.0);
    s.constants.mass = r.real("constants", "mass", 1.0);
    if (!(s.constants.hbar > 0.0)) r.fail("constants", "hbar", "must be positive");
    if (!(s.constants.mass > 0.0)) r.fail("constants", "mass", "must be positive");

    for (Axis a : kAxes) {
        if (!r.has_section(std::string(axis_name(a))))
            r.fail(std::string(axis_name(a)), "", "missing section");
        s.axes[index(a)] = read_axis(r, a, s.constants.mass);
    }
    read_action(r, s);
    read_motion(r, s);

    if (const auto d = r.text("output", "dir")) s.out_dir = *d;
    if (const auto f = r.text("output", "format")) {
        const std::string v = lower(*f);
        if (v == "csv")
            s.format = Format::Csv;
        else if (v == "json")
            s.format = Format::Json;
        else
            r.fail("output", "format", "expected csv or json, got '" + v + "'");
    }

    VerifySpec& v = s.verify;
    v.grid = static_cast<int>(r.integer("verify", "grid", v.grid));
    v.points = static_cast<int>(r.integer("verify", "points", v.points));
    if (v.grid < 2) r.fail("verify", "grid", "must be at least 2");
    if (v.points < 1) r.fail("verify", "points", "must be at least 1");
    v.wronskian_tolerance = r.real("verify", "wronskian_tolerance", v.wronskian_tolerance);
    v.qshje_tolerance = r.real("verify", "qshje_tolerance", v.qshje_tolerance);
    v.current_tolerance = r.real("verify", "current_tolerance", v.current_tolerance);
    v.energy_tolerance = r.real("verify", "energy_tolerance", v.energy_tolerance);
    v.momentum_floor = r.real("verify", "momentum_floor", v.momentum_floor);

    FitOptions& f = s.fit;
    f.restarts = static_cast<int>(r.integer("fit", "restarts", f.restarts));
    f.threshold = r.real("fit", "threshold", f.threshold);
    f.threads = static_cast<int>(r.integer("fit", "threads", f.threads));
    f.start_range = r.real("fit", "start_range", f.start_range);
    if (f.restarts < 1) r.fail("fit", "restarts", "must be at least 1");
    if (f.threads < 1) r.fail("fit", "threads", "must be at least 1");
    if (!(f.threshold > 0.0)) r.fail("fit", "threshold", "must be positive");
    if (!(f.start_range > 0.0)) r.fail("fit", "start_range", "must be positive");

    SweepSpec& w = s.sweep;
    w.count = static_cast<int>(r.integer("sweep", "count", w.count));
    w.range = r.real("sweep", "range", w.range);
    w.threads = static_cast<int>(r.integer("sweep", "threads", w.threads));
    if (w.count < 1) r.fail("sweep", "count", "must be at least 1");
    if (!(w.range > 0.0)) r.fail("sweep", "range", "must be positive");
    if (w.threads < 1) r.fail("sweep", "threads", "must be at least 1");
    return s;
}

void draw_random_tensor(Scenario& s) {
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : s.action.tensor.a) v = u(rng);
    for (double& v : s.action.tensor.b) v = u(rng);
}

}  // namespace

Scenario parse_scenario(std::istream& in, const std::string& name) {
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    std::vector<std::string> lines;
    {
        std::stringstream ls(text);
        std::string line;
        while (std::getline(ls, line)) lines.push_back(line);
    }
    pt::ptree tree;
    try {
        std::stringstream src(text);
        pt::read_ini(src, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(name + ":" + std::to_string(e.line()), e.message());
    }
    const Reader r(tree, std::move(lines), name);
    r.check_keys(allowed_keys());
    Scenario s = build(r, name);
    if (s.action.random_tensor) draw_random_tensor(s);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open scenario file");
    return parse_scenario(in, path.string());
}

void apply_overrides(Scenario& s, const Overrides& o) {
    if (o.seed) {
        s.seed = *o.seed;
        if (s.action.random_tensor) draw_random_tensor(s);
    }
    if (o.out_dir) s.out_dir = *o.out_dir;
    if (o.format) s.format = *o.format;
    if (o.tp_policy) s.motion.tp_policy = {*o.tp_policy, *o.tp_policy, *o.tp_policy};
}

void require_output_dir(const Scenario& s) {
    if (s.out_dir.empty()) throw ConfigError("[output] dir", "no output directory given (use --out or [output] dir)");
    std::error_code ec;
    if (!std::filesystem::is_directory(s.out_dir, ec))
        throw ConfigError("[output] dir", "output directory '" + s.out_dir.string() + "' does not exist");
}

}  // namespace qshje::cli
