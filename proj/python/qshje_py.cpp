#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "qshje/cli.hpp"

namespace py = pybind11;
using namespace qshje;

namespace {

template <class E>
py::object register_error(py::module_& m, const char* name, py::handle base) {
    return py::register_exception<E>(m, name, base);
}

/// Applies a scalar function of x elementwise; scalars in, scalar out.
template <class T, class F>
auto elementwise(F f) {
    return [f](const T& obj, py::array_t<double, py::array::forcecast> x) -> py::object {
        if (x.ndim() == 0) return py::float_(f(obj, *x.data()));
        py::array_t<double> out(x.request().shape);
        const double* in = x.data();
        double* dst = out.mutable_data();
        for (py::ssize_t i = 0; i < x.size(); ++i) dst[i] = f(obj, in[i]);
        return std::move(out);
    };
}

void bind_errors(py::module_& m) {
    const py::object base = register_error<Error>(m, "Error", PyExc_RuntimeError);
    register_error<InvalidArgument>(m, "InvalidArgument", base);
    register_error<EmptyDomain>(m, "EmptyDomain", base);
    register_error<OutOfDomain>(m, "OutOfDomain", base);
    register_error<NonFiniteSolution>(m, "NonFiniteSolution", base);
    register_error<DegenerateAction>(m, "DegenerateAction", base);
    register_error<StencilOutOfDomain>(m, "StencilOutOfDomain", base);
    register_error<DuplicateAxis>(m, "DuplicateAxis", base);
    register_error<DegeneratePoint>(m, "DegeneratePoint", base);
    register_error<DenominatorZero>(m, "DenominatorZero", base);
    register_error<DegenerateGammas>(m, "DegenerateGammas", base);
    register_error<DegenerateTensor>(m, "DegenerateTensor", base);
    register_error<IllConditionedFit>(m, "IllConditionedFit", base);
    register_error<NumericalError>(m, "NumericalError", base);
    register_error<StepUnderflow>(m, "StepUnderflow", base);
    register_error<LeftDomain>(m, "LeftDomain", base);
    register_error<ConfigError>(m, "ConfigError", base);
}

void bind_schrodinger(py::module_& m) {
    py::enum_<Axis>(m, "Axis").value("X", Axis::X).value("Y", Axis::Y).value("Z", Axis::Z);

    py::class_<PhysicalConstants>(m, "PhysicalConstants")
        .def(py::init([](double hbar, double mass) {
                 PhysicalConstants c{hbar, mass};
                 c.validate();
                 return c;
             }),
             py::arg("hbar") = 1.0, py::arg("mass") = 1.0)
        .def_readonly("hbar", &PhysicalConstants::hbar)
        .def_readonly("mass", &PhysicalConstants::mass);

    py::class_<Interval>(m, "Interval")
        .def(py::init([](double lo, double hi) { return Interval{lo, hi}; }), py::arg("lo"), py::arg("hi"))
        .def(py::init([](const py::tuple& t) {
            if (t.size() != 2) throw InvalidArgument("an interval needs two bounds");
            return Interval{t[0].cast<double>(), t[1].cast<double>()};
        }))
        .def_readonly("lo", &Interval::lo)
        .def_readonly("hi", &Interval::hi);
    py::implicitly_convertible<py::tuple, Interval>();

    py::class_<Potential1D>(m, "Potential1D")
        .def_static("zero", &Potential1D::zero, py::arg("axis") = Axis::X)
        .def_static("constant", &Potential1D::constant, py::arg("v0"), py::arg("axis") = Axis::X)
        .def_static("harmonic", &Potential1D::harmonic, py::arg("omega"), py::arg("mass") = 1.0,
                    py::arg("axis") = Axis::X)
        .def_static(
            "piecewise_linear",
            [](std::vector<std::pair<double, double>> points, Axis axis) {
                return Potential1D(Potential1D::PiecewiseLinear{std::move(points)}, axis);
            },
            py::arg("breakpoints"), py::arg("axis") = Axis::X)
        .def_static(
            "tabulated",
            [](std::vector<double> grid, std::vector<double> values, Axis axis) {
                return Potential1D(Potential1D::Tabulated{std::move(grid), std::move(values)}, axis);
            },
            py::arg("grid"), py::arg("values"), py::arg("axis") = Axis::X)
        .def("__call__", elementwise<Potential1D>([](const Potential1D& v, double x) { return v.value(x); }))
        .def("derivative", &Potential1D::derivative)
        .def_property_readonly("axis", &Potential1D::axis)
        .def_property_readonly("kind", [](const Potential1D& v) { return std::string(v.kind_name()); });

    py::class_<EnergySplit>(m, "EnergySplit")
        .def(py::init<double, double, double>(), py::arg("ex"), py::arg("ey"), py::arg("ez"))
        .def("__getitem__", &EnergySplit::operator[])
        .def_property_readonly("total", &EnergySplit::total);

    py::class_<InitialConditions>(m, "InitialConditions")
        .def(py::init([](double x1, double dx1, double x2, double dx2) {
                 return InitialConditions{x1, dx1, x2, dx2};
             }),
             py::arg("x1") = 1.0, py::arg("dx1") = 0.0, py::arg("x2") = 0.0, py::arg("dx2") = 1.0);

    py::class_<SolverOptions>(m, "SolverOptions")
        .def(py::init([](double max_step, bool force_numerical) { return SolverOptions{max_step, force_numerical}; }),
             py::arg("max_step") = 1e-3, py::arg("force_numerical") = false);

    py::class_<SolutionPair>(m, "SolutionPair")
        .def("x1", elementwise<SolutionPair>([](const SolutionPair& p, double x) { return p.x1(x); }))
        .def("x2", elementwise<SolutionPair>([](const SolutionPair& p, double x) { return p.x2(x); }))
        .def("wronskian", elementwise<SolutionPair>([](const SolutionPair& p, double x) { return wronskian(p, x); }))
        .def_property_readonly("wronskian_at_anchor", &SolutionPair::wronskian_at_anchor)
        .def_property_readonly("domain", &SolutionPair::domain)
        .def_property_readonly("energy", &SolutionPair::energy)
        .def_property_readonly("anchor", &SolutionPair::anchor)
        .def_property_readonly("axis", &SolutionPair::axis)
        .def_property_readonly("is_analytic", &SolutionPair::is_analytic);

    m.def("solve_pair", &solve_pair, py::arg("potential"), py::arg("energy"), py::arg("domain"),
          py::arg("anchor") = 0.0, py::arg("constants") = PhysicalConstants{},
          py::arg("ic") = InitialConditions{}, py::arg("options") = SolverOptions{});
    m.def("max_wronskian_drift", &max_wronskian_drift, py::arg("pair"), py::arg("samples") = 1000);
}

void bind_action(py::module_& m) {
    py::class_<ReducedAction1D>(m, "ReducedAction1D")
        .def(py::init<SolutionPair, double, double, int>(), py::arg("pair"), py::arg("gamma_num"),
             py::arg("gamma_den"), py::arg("orientation") = 1)
        .def_property_readonly("pair", &ReducedAction1D::pair)
        .def_property_readonly("gamma_num", &ReducedAction1D::gamma_num)
        .def_property_readonly("gamma_den", &ReducedAction1D::gamma_den)
        .def_property_readonly("orientation", &ReducedAction1D::orientation)
        .def("value", elementwise<ReducedAction1D>([](const ReducedAction1D& a, double x) { return action_1d(a, x); }))
        .def("momentum", elementwise<ReducedAction1D>([](const ReducedAction1D& a, double x) { return momentum_1d(a, x); }))
        .def("schwarzian", elementwise<ReducedAction1D>([](const ReducedAction1D& a, double x) { return schwarzian(a, x); }))
        .def("quantum_potential",
             elementwise<ReducedAction1D>([](const ReducedAction1D& a, double x) { return quantum_potential(a, x); }))
        .def("metric", elementwise<ReducedAction1D>([](const ReducedAction1D& a, double x) { return metric_g(a, x); }));

    m.def("qshje_residual", &qshje_residual_1d, py::arg("action"), py::arg("potential"), py::arg("energy"),
          py::arg("x"));
    m.def("qshje_residual_scaled", &qshje_residual_scaled, py::arg("action"), py::arg("potential"),
          py::arg("energy"), py::arg("x"));
    m.def("momentum_lower_bound", &momentum_lower_bound, py::arg("action"), py::arg("samples") = 1000);

    py::class_<SeparableAction3D>(m, "SeparableAction3D")
        .def("__getitem__", &SeparableAction3D::operator[])
        .def("__call__", &SeparableAction3D::value)
        .def("gradient", &SeparableAction3D::gradient)
        .def_property_readonly("lambda0", &SeparableAction3D::lambda0)
        .def_property_readonly("hbar", &SeparableAction3D::hbar);
    m.def("assemble_separable", &assemble_separable, py::arg("a"), py::arg("b"), py::arg("c"),
          py::arg("lambda0") = 0.0);

    py::class_<WaveParameters>(m, "WaveParameters")
        .def(py::init([](cplx alpha, cplx beta) {
                 WaveParameters w{alpha, beta};
                 w.validate();
                 return w;
             }),
             py::arg("alpha") = cplx(1.0), py::arg("beta") = cplx(0.0));

    py::class_<RecoveryConstants>(m, "RecoveryConstants")
        .def(py::init([](cplx a, cplx b, cplx c, cplx d) {
                 RecoveryConstants r{a, b, c, d};
                 r.validate();
                 return r;
             }),
             py::arg("a") = cplx(1.0), py::arg("b") = cplx(0.0), py::arg("c") = cplx(0.0),
             py::arg("d") = cplx(1.0));

    py::class_<PolarWavefunction>(m, "PolarWavefunction")
        .def("__call__", &PolarWavefunction::operator())
        .def("amplitude", &PolarWavefunction::amplitude)
        .def("se_residual_scaled", &PolarWavefunction::se_residual_scaled);
    m.def("fm_wavefunctions", &fm_wavefunctions, py::arg("action"), py::arg("constants"), py::arg("k_norm") = 1.0);
    m.def("recover_action", &recover_action, py::arg("psi1"), py::arg("psi2"), py::arg("constants"),
          py::arg("point"));
}

void bind_tensor(py::module_& m) {
    py::class_<TensorCoefficients>(m, "TensorCoefficients")
        .def(py::init([](const Tensor222& a, const Tensor222& b) { return TensorCoefficients{a, b}; }),
             py::arg("a"), py::arg("b"))
        .def_static("from_flat", &TensorCoefficients::from_flat)
        .def_readonly("a", &TensorCoefficients::a)
        .def_readonly("b", &TensorCoefficients::b)
        .def("flat", &TensorCoefficients::flat);

    py::class_<TensorAction>(m, "TensorAction")
        .def(py::init<TensorCoefficients, std::array<SolutionPair, 3>, double>(), py::arg("coefficients"),
             py::arg("pairs"), py::arg("additive") = 0.0)
        .def_property_readonly("coefficients", &TensorAction::coefficients)
        .def("__call__", &eval_tensor_action)
        .def("qshje_residual_scaled", &tensor_qshje_residual_scaled, py::arg("axis"), py::arg("point"));

    m.def("expand_gammas", &expand_gammas, py::arg("gammas"), py::arg("signs") = std::array<int, 3>{1, 1, 1});
    m.def("expand_separable", &expand_separable);
    m.def("normalize_tensor", &normalize_tensor);

    py::class_<FitOptions>(m, "FitOptions")
        .def(py::init([](int restarts, double threshold, std::uint64_t seed, int threads, double start_range) {
                 return FitOptions{restarts, threshold, seed, threads, start_range};
             }),
             py::arg("restarts") = 20, py::arg("threshold") = 1e-7, py::arg("seed") = 0, py::arg("threads") = 1,
             py::arg("start_range") = 2.0);

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("separable", &FitResult::separable)
        .def_readonly("gammas", &FitResult::gammas)
        .def_readonly("phase", &FitResult::phase)
        .def_readonly("residual", &FitResult::residual)
        .def_readonly("restart_residuals", &FitResult::restart_residuals)
        .def_readonly("best_restart", &FitResult::best_restart);
    m.def("fit_gammas", &fit_gammas, py::arg("tensor"), py::arg("options") = FitOptions{},
          py::call_guard<py::gil_scoped_release>());

    py::class_<MonomialCount>(m, "MonomialCount")
        .def_readonly("numerator", &MonomialCount::numerator)
        .def_readonly("denominator", &MonomialCount::denominator)
        .def("__iter__", [](const MonomialCount& c) {
            return py::iter(py::make_tuple(c.numerator, c.denominator));
        });
    m.def("count_monomials", py::overload_cast<const TensorCoefficients&>(&count_monomials));
}

void bind_amplitude(py::module_& m) {
    py::class_<Amplitude3D>(m, "Amplitude3D")
        .def(py::init<SeparableAction3D, double>(), py::arg("action"), py::arg("k_norm") = 1.0)
        .def("__call__", &amplitude_at)
        .def("current_residual", py::overload_cast<const Amplitude3D&, Axis, const Point3&, double>(&current_residual),
             py::arg("axis"), py::arg("point"), py::arg("h") = 1e-3)
        .def("current_residual_scaled", &current_residual_scaled, py::arg("axis"), py::arg("point"),
             py::arg("h") = 1e-3)
        .def("log_mixed_difference", &log_amplitude_mixed_difference, py::arg("a"), py::arg("b"), py::arg("point"),
             py::arg("h") = 1e-2)
        .def("wavefunction", &polar_wavefunction, py::arg("parameters"));

    py::class_<ProductComparison>(m, "ProductComparison")
        .def_readonly("fit_residual", &ProductComparison::fit_residual)
        .def_readonly("fixed_residual", &ProductComparison::fixed_residual)
        .def_readonly("coefficients", &ProductComparison::coefficients)
        .def_readonly("condition", &ProductComparison::condition);
    m.def(
        "compare_to_product",
        [](const Amplitude3D& amp, const WaveParameters& wp, const Tensor222& coefficients,
           const std::array<SolutionPair, 3>& pairs, const std::vector<Point3>& samples) {
            return compare_to_product(amp, wp, WavefunctionProduct{coefficients, pairs}, samples);
        },
        py::arg("amplitude"), py::arg("parameters"), py::arg("coefficients"), py::arg("pairs"), py::arg("samples"));
}

void bind_dynamics(py::module_& m) {
    py::enum_<TurningPolicy>(m, "TurningPolicy")
        .value("Reflect", TurningPolicy::Reflect)
        .value("Transmit", TurningPolicy::Transmit);
    py::enum_<Integrator>(m, "Integrator").value("RK4", Integrator::RK4).value("RK45", Integrator::RK45);
    py::enum_<BoundaryPolicy>(m, "BoundaryPolicy")
        .value("Error", BoundaryPolicy::Error)
        .value("Stop", BoundaryPolicy::Stop);
    py::enum_<EventKind>(m, "EventKind")
        .value("TurningPointCrossing", EventKind::TurningPointCrossing)
        .value("Reflection", EventKind::Reflection)
        .value("LeftDomain", EventKind::LeftDomain);

    py::class_<MotionConfig>(m, "MotionConfig")
        .def(py::init<>())
        .def_readwrite("tp_epsilon", &MotionConfig::tp_epsilon)
        .def_readwrite("tp_policy", &MotionConfig::tp_policy)
        .def_readwrite("step", &MotionConfig::step)
        .def_readwrite("t_max", &MotionConfig::t_max)
        .def_readwrite("integrator", &MotionConfig::integrator)
        .def_readwrite("boundary", &MotionConfig::boundary)
        .def_readwrite("min_step", &MotionConfig::min_step)
        .def_readwrite("tolerance", &MotionConfig::tolerance);

    py::class_<TrajectoryEvent>(m, "TrajectoryEvent")
        .def_readonly("t", &TrajectoryEvent::t)
        .def_readonly("axis", &TrajectoryEvent::axis)
        .def_readonly("kind", &TrajectoryEvent::kind)
        .def_readonly("position", &TrajectoryEvent::position);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("events", &Trajectory::events)
        .def_readonly("dwell_time", &Trajectory::dwell_time)
        .def_readonly("orientation", &Trajectory::orientation)
        .def_readonly("stopped_at_boundary", &Trajectory::stopped_at_boundary)
        .def("__len__", [](const Trajectory& t) { return t.states.size(); })
        .def_property_readonly("t",
                               [](const Trajectory& t) {
                                   py::array_t<double> out(static_cast<py::ssize_t>(t.states.size()));
                                   auto v = out.mutable_unchecked<1>();
                                   for (std::size_t i = 0; i < t.states.size(); ++i)
                                       v(static_cast<py::ssize_t>(i)) = t.states[i].t;
                                   return out;
                               })
        .def_property_readonly("positions", [](const Trajectory& t) {
            py::array_t<double> out({static_cast<py::ssize_t>(t.states.size()), py::ssize_t{3}});
            auto v = out.mutable_unchecked<2>();
            for (std::size_t i = 0; i < t.states.size(); ++i)
                for (py::ssize_t k = 0; k < 3; ++k) v(static_cast<py::ssize_t>(i), k) = t.states[i].pos[k];
            return out;
        });

    m.def("velocity", &velocity, py::arg("action"), py::arg("energy"), py::arg("potential"), py::arg("x"));
    m.def("velocity_alt", &velocity_alt, py::arg("action"), py::arg("energy"), py::arg("potential"), py::arg("x"),
          py::arg("h") = 1e-4);
    m.def("integrate", &integrate, py::arg("action"), py::arg("energies"), py::arg("potentials"), py::arg("start"),
          py::arg("config") = MotionConfig{}, py::call_guard<py::gil_scoped_release>());
}

void bind_cli(py::module_& m) {
    using namespace qshje::cli;
    py::module_ c = m.def_submodule("cli", "Scenario files and the commands of the qshje tool");
    py::enum_<Format>(c, "Format").value("Csv", Format::Csv).value("Json", Format::Json);

    py::class_<Scenario>(c, "Scenario")
        .def_readonly("name", &Scenario::name)
        .def_readwrite("seed", &Scenario::seed)
        .def_readwrite("out_dir", &Scenario::out_dir)
        .def_readwrite("format", &Scenario::format)
        .def_readwrite("motion", &Scenario::motion)
        .def_readwrite("start", &Scenario::start);
    c.def("load_scenario", &load_scenario, py::arg("path"));
    c.def(
        "parse_scenario",
        [](const std::string& text, const std::string& name) {
            std::istringstream in(text);
            return parse_scenario(in, name);
        },
        py::arg("text"), py::arg("name") = "<string>");

    py::class_<CheckResult>(c, "CheckResult")
        .def_readonly("name", &CheckResult::name)
        .def_readonly("value", &CheckResult::value)
        .def_readonly("tolerance", &CheckResult::tolerance)
        .def_readonly("passed", &CheckResult::pass);
    py::class_<VerificationReport>(c, "VerificationReport")
        .def_readonly("checks", &VerificationReport::checks)
        .def_readonly("fit", &VerificationReport::fit)
        .def_property_readonly("passed", &VerificationReport::pass);
    py::class_<TrajectorySummary>(c, "TrajectorySummary")
        .def_readonly("trajectory", &TrajectorySummary::trajectory)
        .def_readonly("max_energy_residual", &TrajectorySummary::max_energy_residual)
        .def_readonly("sign_law_violations", &TrajectorySummary::sign_law_violations);
    py::class_<ReduceOutcome>(c, "ReduceOutcome")
        .def_readonly("normalized", &ReduceOutcome::normalized)
        .def_readonly("fit", &ReduceOutcome::fit)
        .def_readonly("monomials", &ReduceOutcome::monomials);

    c.def("verify", &verify, py::arg("scenario"));
    c.def("run_verify", &run_verify, py::arg("scenario"));
    c.def("run_trajectory", &run_trajectory, py::arg("scenario"));
    c.def("run_reduce", &run_reduce, py::arg("scenario"));
}

}  // namespace

PYBIND11_MODULE(_qshje, m) {
    m.doc() = "Separable reduced actions of the three-dimensional quantum stationary Hamilton-Jacobi equation";
    bind_errors(m);
    bind_schrodinger(m);
    bind_action(m);
    bind_tensor(m);
    bind_amplitude(m);
    bind_dynamics(m);
    bind_cli(m);
}
