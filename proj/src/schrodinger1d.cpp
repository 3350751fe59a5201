#include "qshje/schrodinger1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/interpolators/barycentric_rational.hpp>
#include <boost/numeric/odeint.hpp>

namespace qshje {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Magnitude beyond which products of solutions would overflow.
constexpr double kOverflow = 1e150;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be finite");
}

// Quintic Hermite basis on [0,1] and its derivative.
struct Hermite5 {
    double h0, h1, h2, h3, h4, h5;
};

Hermite5 hermite5(double t) {
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    return {1 - 10 * t3 + 15 * t4 - 6 * t5,  t - 6 * t3 + 8 * t4 - 3 * t5,
            0.5 * (t2 - 3 * t3 + 3 * t4 - t5), 0.5 * (t3 - 2 * t4 + t5),
            -4 * t3 + 7 * t4 - 3 * t5,        10 * t3 - 15 * t4 + 6 * t5};
}

Hermite5 hermite5_prime(double t) {
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    return {-30 * t2 + 60 * t3 - 30 * t4,     1 - 18 * t2 + 32 * t3 - 15 * t4,
            0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4), 0.5 * (3 * t2 - 8 * t3 + 5 * t4),
            -12 * t2 + 28 * t3 - 15 * t4,     30 * t2 - 60 * t3 + 30 * t4};
}

// Canonical closed-form basis for X'' = kappa X: c(0)=1, c'(0)=0, s(0)=0, s'(0)=1.
struct Canonical {
    double c, dc, s, ds;
};

Canonical canonical(double kappa, double t) {
    if (kappa < 0.0) {
        const double k = std::sqrt(-kappa);
        const double sn = std::sin(k * t), cs = std::cos(k * t);
        return {cs, -k * sn, sn / k, cs};
    }
    if (kappa > 0.0) {
        const double k = std::sqrt(kappa);
        const double sh = std::sinh(k * t), ch = std::cosh(k * t);
        return {ch, k * sh, sh / k, ch};
    }
    return {1.0, 0.0, t, 1.0};
}

}  // namespace

void PhysicalConstants::validate() const {
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw InvalidArgument("hbar must be > 0");
    if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("mass must be > 0");
}

// ---------------------------------------------------------------------------
// Potential1D

Potential1D::Potential1D(Kind kind, Axis axis) : kind_(std::move(kind)), axis_(axis) {
    std::visit(Overloaded{
                   [](const Zero&) {},
                   [](const Constant& c) { check_finite(c.v0, "constant potential"); },
                   [](const Harmonic& h) {
                       check_finite(h.omega, "omega");
                       check_finite(h.center, "harmonic center");
                       if (!(h.mass > 0.0)) throw InvalidArgument("harmonic mass must be > 0");
                   },
                   [](PiecewiseLinear& p) {
                       if (p.breakpoints.empty())
                           throw InvalidArgument("piecewise-linear potential needs breakpoints");
                       for (std::size_t i = 0; i < p.breakpoints.size(); ++i) {
                           check_finite(p.breakpoints[i].first, "breakpoint position");
                           check_finite(p.breakpoints[i].second, "breakpoint value");
                           if (i > 0 && !(p.breakpoints[i].first > p.breakpoints[i - 1].first))
                               throw InvalidArgument("breakpoints must be strictly increasing");
                       }
                   },
                   [this](const Tabulated& t) {
                       if (t.grid.size() != t.values.size())
                           throw InvalidArgument("tabulated grid and values differ in length");
                       if (t.grid.size() < 2)
                           throw InvalidArgument("tabulated potential needs >= 2 points");
                       for (std::size_t i = 0; i < t.grid.size(); ++i) {
                           check_finite(t.grid[i], "tabulated grid");
                           check_finite(t.values[i], "tabulated value");
                           if (i > 0 && !(t.grid[i] > t.grid[i - 1]))
                               throw InvalidArgument("tabulated grid must be strictly increasing");
                       }
                       const std::size_t order = std::min<std::size_t>(3, t.grid.size() - 1);
                       interp_ = std::make_shared<const boost::math::barycentric_rational<double>>(
                           t.grid.data(), t.values.data(), t.grid.size(), order);
                   },
               },
               kind_);
}

double Potential1D::value(double x) const {
    return std::visit(
        Overloaded{
            [](const Zero&) { return 0.0; },
            [](const Constant& c) { return c.v0; },
            [x](const Harmonic& h) {
                const double d = x - h.center;
                return 0.5 * h.mass * h.omega * h.omega * d * d;
            },
            [x](const PiecewiseLinear& p) {
                const auto& bp = p.breakpoints;
                if (x <= bp.front().first) return bp.front().second;
                if (x >= bp.back().first) return bp.back().second;
                auto it = std::upper_bound(bp.begin(), bp.end(), x,
                                           [](double v, const auto& e) { return v < e.first; });
                const auto& [x1, v1] = *it;
                const auto& [x0, v0] = *(it - 1);
                return v0 + (v1 - v0) * (x - x0) / (x1 - x0);
            },
            [this, x](const Tabulated&) { return (*interp_)(x); },
        },
        kind_);
}

double Potential1D::derivative(double x) const {
    return std::visit(
        Overloaded{
            [](const Zero&) { return 0.0; },
            [](const Constant&) { return 0.0; },
            [x](const Harmonic& h) { return h.mass * h.omega * h.omega * (x - h.center); },
            [x](const PiecewiseLinear& p) {
                const auto& bp = p.breakpoints;
                if (x < bp.front().first || x >= bp.back().first) return 0.0;
                auto it = std::upper_bound(bp.begin(), bp.end(), x,
                                           [](double v, const auto& e) { return v < e.first; });
                const auto& [x1, v1] = *it;
                const auto& [x0, v0] = *(it - 1);
                return (v1 - v0) / (x1 - x0);
            },
            [this, x](const Tabulated&) { return interp_->prime(x); },
        },
        kind_);
}

std::optional<double> Potential1D::constant_value() const {
    if (std::holds_alternative<Zero>(kind_)) return 0.0;
    if (const auto* c = std::get_if<Constant>(&kind_)) return c->v0;
    return std::nullopt;
}

Interval Potential1D::support() const {
    if (const auto* t = std::get_if<Tabulated>(&kind_)) return {t->grid.front(), t->grid.back()};
    return {-kInf, kInf};
}

Potential1D Potential1D::with_axis(Axis axis) const {
    Potential1D copy = *this;
    copy.axis_ = axis;
    return copy;
}

std::string_view Potential1D::kind_name() const {
    return std::visit(Overloaded{
                          [](const Zero&) { return std::string_view("zero"); },
                          [](const Constant&) { return std::string_view("constant"); },
                          [](const Harmonic&) { return std::string_view("harmonic"); },
                          [](const PiecewiseLinear&) { return std::string_view("piecewise_linear"); },
                          [](const Tabulated&) { return std::string_view("tabulated"); },
                      },
                      kind_);
}

// ---------------------------------------------------------------------------
// SolutionPair

SolutionPair::SolutionPair(Potential1D potential, double energy, Interval domain, double anchor,
                           PhysicalConstants constants, InitialConditions ic)
    : potential_(std::move(potential)),
      energy_(energy),
      domain_(domain),
      anchor_(anchor),
      constants_(constants),
      ic_(ic),
      wronskian_anchor_(ic.x1 * ic.dx2 - ic.x2 * ic.dx1),
      impl_(Analytic{0.0}) {}

double SolutionPair::ode_coefficient(double x) const {
    return 2.0 * constants_.mass * (potential_.value(x) - energy_) /
           (constants_.hbar * constants_.hbar);
}

double SolutionPair::grid_step() const {
    if (const auto* t = std::get_if<std::shared_ptr<const Table>>(&impl_)) return (*t)->h;
    return 0.0;
}

SolutionPair::Jets SolutionPair::jets(double x) const {
    if (!domain_.contains(x))
        throw OutOfDomain("point " + std::to_string(x) + " outside solution domain [" +
                          std::to_string(domain_.lo) + ", " + std::to_string(domain_.hi) + "]");
    Jets out;
    double f;
    if (const auto* a = std::get_if<Analytic>(&impl_)) {
        const Canonical b = canonical(a->kappa, x - anchor_);
        out.x1 = {ic_.x1 * b.c + ic_.dx1 * b.s, ic_.x1 * b.dc + ic_.dx1 * b.ds, 0, 0};
        out.x2 = {ic_.x2 * b.c + ic_.dx2 * b.s, ic_.x2 * b.dc + ic_.dx2 * b.ds, 0, 0};
        f = a->kappa;
    } else {
        const Table& t = *std::get<std::shared_ptr<const Table>>(impl_);
        const std::size_t n_nodes = t.f.size();
        const double pos = (x - t.lo) / t.h;
        std::size_t j = pos <= 0 ? 0 : static_cast<std::size_t>(pos);
        if (j > n_nodes - 2) j = n_nodes - 2;
        const double s = pos - static_cast<double>(j);
        const Hermite5 b = hermite5(s);
        const Hermite5 db = hermite5_prime(s);
        const double h = t.h, h2 = h * h;
        auto eval = [&](const std::vector<double>& y, const std::vector<double>& dy) {
            const double y0 = y[j], y1 = y[j + 1];
            const double d0 = dy[j], d1 = dy[j + 1];
            const double s0 = t.f[j] * y0, s1 = t.f[j + 1] * y1;
            const double v = y0 * b.h0 + h * d0 * b.h1 + h2 * s0 * b.h2 + h2 * s1 * b.h3 +
                             h * d1 * b.h4 + y1 * b.h5;
            const double dv = (y0 * db.h0 + h * d0 * db.h1 + h2 * s0 * db.h2 + h2 * s1 * db.h3 +
                               h * d1 * db.h4 + y1 * db.h5) /
                              h;
            return Jet{v, dv, 0, 0};
        };
        out.x1 = eval(t.y1, t.dy1);
        out.x2 = eval(t.y2, t.dy2);
        f = ode_coefficient(x);
    }
    const double fp = 2.0 * constants_.mass * potential_.derivative(x) /
                      (constants_.hbar * constants_.hbar);
    for (Jet* jt : {&out.x1, &out.x2}) {
        jt->d2 = f * jt->v;
        jt->d3 = fp * jt->v + f * jt->d1;
    }
    return out;
}

SolutionPair solve_pair(const Potential1D& potential, double energy, Interval domain, double anchor,
                        const PhysicalConstants& constants, const InitialConditions& ic,
                        const SolverOptions& options) {
    constants.validate();
    check_finite(energy, "energy");
    if (!std::isfinite(domain.lo) || !std::isfinite(domain.hi) || !(domain.hi > domain.lo))
        throw EmptyDomain("solution domain must be a finite interval with lo < hi");
    if (!domain.contains(anchor)) throw OutOfDomain("anchor must lie inside the domain");
    const Interval sup = potential.support();
    if (domain.lo < sup.lo || domain.hi > sup.hi)
        throw OutOfDomain("domain exceeds the range where the potential is tabulated");
    if (!(options.max_step > 0.0)) throw InvalidArgument("max_step must be > 0");

    SolutionPair pair(potential, energy, domain, anchor, constants, ic);
    if (pair.wronskian_anchor_ == 0.0 || !std::isfinite(pair.wronskian_anchor_))
        throw DegenerateAction("initial conditions give linearly dependent solutions");

    if (auto v0 = potential.constant_value(); v0 && !options.force_numerical) {
        pair.impl_ = SolutionPair::Analytic{pair.ode_coefficient(anchor)};
        for (double x : {domain.lo, domain.hi}) {
            const auto j = pair.jets(x);
            for (double v : {j.x1.v, j.x1.d1, j.x2.v, j.x2.d1})
                if (!std::isfinite(v) || std::abs(v) > kOverflow)
                    throw NonFiniteSolution("closed-form solution overflows on the domain");
        }
        return pair;
    }

    // Fixed-step Numerov on nodes lo + j*h.
    const auto n_steps = static_cast<std::size_t>(
        std::max(8.0, std::ceil(domain.length() / options.max_step)));
    auto table = std::make_shared<SolutionPair::Table>();
    table->lo = domain.lo;
    table->h = domain.length() / static_cast<double>(n_steps);
    const double h = table->h, h2 = h * h;
    const std::size_t n_nodes = n_steps + 1;
    auto node = [&](std::size_t j) {
        return j == n_steps ? domain.hi : domain.lo + static_cast<double>(j) * h;
    };
    table->f.resize(n_nodes);
    for (std::size_t j = 0; j < n_nodes; ++j) {
        table->f[j] = pair.ode_coefficient(node(j));
        if (!std::isfinite(table->f[j])) throw NonFiniteSolution("potential is not finite on the domain");
    }
    std::vector<double> w(n_nodes);
    for (std::size_t j = 0; j < n_nodes; ++j) {
        w[j] = 1.0 - h2 * table->f[j] / 12.0;
        if (w[j] <= 0.0)
            throw InvalidArgument("Numerov step too large for the local wavenumber; reduce max_step");
    }

    // Start values on the two nodes bracketing the anchor from a tight adaptive integration.
    std::size_t j0 = static_cast<std::size_t>(std::clamp((anchor - domain.lo) / h, 0.0,
                                                         static_cast<double>(n_steps - 1)));
    using State = std::array<double, 4>;
    auto rhs = [&pair](const State& s, State& ds, double x) {
        const double f = pair.ode_coefficient(x);
        ds = {s[1], f * s[0], s[3], f * s[2]};
    };
    auto shoot = [&](double target) {
        State s{ic.x1, ic.dx1, ic.x2, ic.dx2};
        if (target != anchor) {
            namespace odeint = boost::numeric::odeint;
            auto stepper = odeint::make_controlled(1e-14, 1e-14, odeint::runge_kutta_dopri5<State>());
            odeint::integrate_adaptive(stepper, rhs, s, anchor, target, (target - anchor) / 16);
        }
        return s;
    };
    std::vector<double> y1(n_nodes), y2(n_nodes);
    {
        const State a = shoot(node(j0)), b = shoot(node(j0 + 1));
        y1[j0] = a[0];
        y2[j0] = a[2];
        y1[j0 + 1] = b[0];
        y2[j0 + 1] = b[2];
    }
    for (std::size_t n = j0 + 1; n + 1 < n_nodes; ++n) {
        y1[n + 1] = ((12.0 - 10.0 * w[n]) * y1[n] - w[n - 1] * y1[n - 1]) / w[n + 1];
        y2[n + 1] = ((12.0 - 10.0 * w[n]) * y2[n] - w[n - 1] * y2[n - 1]) / w[n + 1];
    }
    for (std::size_t n = j0; n >= 1; --n) {
        y1[n - 1] = ((12.0 - 10.0 * w[n]) * y1[n] - w[n + 1] * y1[n + 1]) / w[n - 1];
        y2[n - 1] = ((12.0 - 10.0 * w[n]) * y2[n] - w[n + 1] * y2[n + 1]) / w[n - 1];
    }
    for (std::size_t j = 0; j < n_nodes; ++j) {
        for (double v : {y1[j], y2[j]})
            if (!std::isfinite(v) || std::abs(v) > kOverflow)
                throw NonFiniteSolution("Numerov integration overflowed near x = " +
                                        std::to_string(node(j)));
    }

    // Nodal derivatives: Numerov-consistent central formula, one-sided 6-point at the ends.
    auto derivatives = [&](const std::vector<double>& y) {
        std::vector<double> d(n_nodes);
        for (std::size_t n = 1; n + 1 < n_nodes; ++n) {
            const double up = (1.0 - h2 * table->f[n + 1] / 6.0) * y[n + 1];
            const double dn = (1.0 - h2 * table->f[n - 1] / 6.0) * y[n - 1];
            d[n] = (up - dn) / (2.0 * h);
        }
        constexpr std::array<double, 6> c{-137.0 / 60.0, 5.0, -5.0, 10.0 / 3.0, -5.0 / 4.0, 1.0 / 5.0};
        double front = 0.0, back = 0.0;
        for (std::size_t k = 0; k < 6; ++k) {
            front += c[k] * y[k];
            back -= c[k] * y[n_nodes - 1 - k];
        }
        d.front() = front / h;
        d.back() = back / h;
        return d;
    };
    table->dy1 = derivatives(y1);
    table->dy2 = derivatives(y2);
    table->y1 = std::move(y1);
    table->y2 = std::move(y2);
    pair.impl_ = std::shared_ptr<const SolutionPair::Table>(std::move(table));
    return pair;
}

double wronskian(const SolutionPair& pair, double x) {
    const auto j = pair.jets(x);
    return j.x1.v * j.x2.d1 - j.x2.v * j.x1.d1;
}

double max_wronskian_drift(const SolutionPair& pair, int samples) {
    if (samples < 2) throw InvalidArgument("need at least two samples");
    const double w0 = pair.wronskian_at_anchor();
    const Interval d = pair.domain();
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double x = i == samples - 1 ? d.hi : d.lo + d.length() * i / (samples - 1);
        worst = std::max(worst, std::abs(wronskian(pair, x) - w0) / std::abs(w0));
    }
    return worst;
}

}  // namespace qshje
