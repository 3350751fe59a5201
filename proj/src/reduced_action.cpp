#include "qshje/reduced_action.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace qshje {

MomentumJet arctan_momentum(const Jet& u, const Jet& v, double hbar) {
    const double n0 = u.d1 * v.v - u.v * v.d1;
    const double n1 = u.d2 * v.v - u.v * v.d2;
    const double n2 = u.d3 * v.v + u.d2 * v.d1 - u.d1 * v.d2 - u.v * v.d3;
    const double d0 = u.v * u.v + v.v * v.v;
    const double d1 = 2.0 * (u.v * u.d1 + v.v * v.d1);
    const double d2 = 2.0 * (u.d1 * u.d1 + u.v * u.d2 + v.d1 * v.d1 + v.v * v.d2);
    const double r = d1 / d0;
    MomentumJet m;
    m.p = hbar * n0 / d0;
    m.dp = hbar * (n1 - n0 * r) / d0;
    m.ddp = hbar * (n2 - 2.0 * n1 * r - n0 * d2 / d0 + 2.0 * n0 * r * r) / d0;
    return m;
}

MomentumJet wronskian_momentum(const Jet& u, const Jet& v, double n, double hbar) {
    const double d0 = u.v * u.v + v.v * v.v;
    const double r1 = 2.0 * (u.v * u.d1 + v.v * v.d1) / d0;
    const double r2 = 2.0 * (u.d1 * u.d1 + u.v * u.d2 + v.d1 * v.d1 + v.v * v.d2) / d0;
    MomentumJet m;
    m.p = hbar * n / d0;
    m.dp = -m.p * r1;
    m.ddp = m.p * (2.0 * r1 * r1 - r2);
    return m;
}

// ---------------------------------------------------------------------------
// ReducedAction1D

ReducedAction1D::ReducedAction1D(SolutionPair pair, double gamma_num, double gamma_den,
                                 int orientation)
    : pair_(std::move(pair)),
      gamma_num_(gamma_num),
      gamma_den_(gamma_den),
      orientation_(orientation),
      momentum_constant_(0.0),
      anchor_angle_(0.0) {
    if (!std::isfinite(gamma_num) || !std::isfinite(gamma_den))
        throw InvalidArgument("integration constants must be finite");
    if (orientation != 1 && orientation != -1)
        throw InvalidArgument("orientation must be +1 or -1");
    const double det = 1.0 - gamma_num * gamma_den;
    if (std::abs(det) < 1e-12)
        throw DegenerateAction("1 - gamma_num*gamma_den vanishes for the " +
                               std::string(axis_name(axis())) +
                               " axis: the reduced action would be constant");
    momentum_constant_ = det * pair_.wronskian_at_anchor();
    const auto [u, v] = ratio_jets(pair_.anchor());
    anchor_angle_ = std::atan(u.v / v.v);
}

ReducedAction1D ReducedAction1D::with_orientation(int orientation) const {
    ReducedAction1D copy = *this;
    if (orientation != 1 && orientation != -1)
        throw InvalidArgument("orientation must be +1 or -1");
    copy.orientation_ = orientation;
    return copy;
}

std::pair<Jet, Jet> ReducedAction1D::ratio_jets(double x) const {
    const auto j = pair_.jets(x);
    const double g = gamma_num_, gp = gamma_den_;
    Jet u{j.x1.v + g * j.x2.v, j.x1.d1 + g * j.x2.d1, j.x1.d2 + g * j.x2.d2,
          j.x1.d3 + g * j.x2.d3};
    Jet v{gp * j.x1.v + j.x2.v, gp * j.x1.d1 + j.x2.d1, gp * j.x1.d2 + j.x2.d2,
          gp * j.x1.d3 + j.x2.d3};
    return {u, v};
}

double momentum_1d(const ReducedAction1D& action, double x) {
    const auto [u, v] = action.ratio_jets(x);
    const double hbar = action.pair().constants().hbar;
    return action.orientation() * hbar * std::abs(action.momentum_constant()) /
           (u.v * u.v + v.v * v.v);
}

double action_1d(const ReducedAction1D& action, double x) {
    const auto [u, v] = action.ratio_jets(x);
    const double hbar = action.pair().constants().hbar;
    const int s = action.arctan_sign();
    const double anchor = action.pair().anchor();
    const double principal = std::atan(u.v / v.v);
    const double anchor_principal = [&] {
        const auto [ua, va] = action.ratio_jets(anchor);
        return std::atan(ua.v / va.v);
    }();
    if (x == anchor) return s * hbar * anchor_principal;

    // The winding is fixed by a modest-accuracy quadrature of the momentum;
    // the value itself comes from the principal branch.
    auto integrand = [&](double t) { return momentum_1d(action, t) / hbar; };
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, anchor, x, 15, 1e-9);
    const double estimate = anchor_principal + s * integral;
    const double winding = std::round((estimate - principal) / std::numbers::pi);
    return s * hbar * (principal + winding * std::numbers::pi);
}

MomentumJet momentum_jet(const ReducedAction1D& action, double x) {
    const auto [u, v] = action.ratio_jets(x);
    const double hbar = action.pair().constants().hbar;
    return wronskian_momentum(u, v, action.orientation() * std::abs(action.momentum_constant()),
                              hbar);
}

double schwarzian(const ReducedAction1D& action, double x) {
    return momentum_jet(action, x).schwarzian();
}

double quantum_potential(const ReducedAction1D& action, double x) {
    const auto& c = action.pair().constants();
    return c.hbar * c.hbar / (4.0 * c.mass) * schwarzian(action, x);
}

namespace {

struct ResidualParts {
    double kinetic, quantum, potential, energy;
    double sum() const { return kinetic + quantum + potential - energy; }
    double scale() const {
        return std::max({std::abs(kinetic), std::abs(quantum), std::abs(potential),
                         std::abs(energy), 1e-300});
    }
};

ResidualParts residual_parts(const ReducedAction1D& action, const Potential1D& potential,
                             double energy, double x) {
    const auto& c = action.pair().constants();
    const MomentumJet m = momentum_jet(action, x);
    return {m.p * m.p / (2.0 * c.mass), c.hbar * c.hbar / (4.0 * c.mass) * m.schwarzian(),
            potential.value(x), energy};
}

}  // namespace

double qshje_residual_1d(const ReducedAction1D& action, const Potential1D& potential,
                         double energy, double x) {
    return residual_parts(action, potential, energy, x).sum();
}

double qshje_residual_scaled(const ReducedAction1D& action, const Potential1D& potential,
                             double energy, double x) {
    const ResidualParts r = residual_parts(action, potential, energy, x);
    return std::abs(r.sum()) / r.scale();
}

double momentum_lower_bound(const ReducedAction1D& action, int samples) {
    if (samples < 2) throw InvalidArgument("need at least two samples");
    const Interval d = action.pair().domain();
    double max_den = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double x = i == samples - 1 ? d.hi : d.lo + d.length() * i / (samples - 1);
        const auto [u, v] = action.ratio_jets(x);
        max_den = std::max(max_den, u.v * u.v + v.v * v.v);
    }
    return action.pair().constants().hbar * std::abs(action.momentum_constant()) / max_den;
}

// ---------------------------------------------------------------------------
// SeparableAction3D

double SeparableAction3D::value(const Point3& p) const {
    double s = hbar() * lambda0_;
    for (Axis a : kAxes) s += action_1d(axes_[index(a)], p[index(a)]);
    return s;
}

Point3 SeparableAction3D::gradient(const Point3& p) const {
    Point3 g{};
    for (Axis a : kAxes) g[index(a)] = momentum_1d(axes_[index(a)], p[index(a)]);
    return g;
}

bool SeparableAction3D::contains(const Point3& p) const {
    for (Axis a : kAxes)
        if (!axes_[index(a)].pair().domain().contains(p[index(a)])) return false;
    return true;
}

SeparableAction3D SeparableAction3D::with_orientation(Axis a, int orientation) const {
    SeparableAction3D copy = *this;
    copy.axes_[index(a)] = axes_[index(a)].with_orientation(orientation);
    return copy;
}

SeparableAction3D assemble_separable(const ReducedAction1D& a, const ReducedAction1D& b,
                                     const ReducedAction1D& c, double lambda0) {
    if (a.axis() == b.axis() || a.axis() == c.axis() || b.axis() == c.axis())
        throw DuplicateAxis("the three reduced actions must carry distinct axis labels");
    const auto& k = a.pair().constants();
    for (const ReducedAction1D* r : {&b, &c}) {
        const auto& o = r->pair().constants();
        if (o.hbar != k.hbar || o.mass != k.mass)
            throw InvalidArgument("reduced actions use different physical constants");
    }
    if (!std::isfinite(lambda0)) throw InvalidArgument("lambda0 must be finite");
    auto pick = [&](Axis ax) -> const ReducedAction1D& {
        if (a.axis() == ax) return a;
        if (b.axis() == ax) return b;
        return c;
    };
    return SeparableAction3D({pick(Axis::X), pick(Axis::Y), pick(Axis::Z)}, lambda0);
}

// ---------------------------------------------------------------------------
// Wavefunctions

void WaveParameters::validate() const {
    if (alpha == cplx{} && beta == cplx{})
        throw InvalidArgument("alpha and beta cannot both vanish");
}

void RecoveryConstants::validate() const {
    if (std::abs(a * d - b * c) == 0.0)
        throw InvalidArgument("recovery constants must satisfy a'd' - b'c' != 0");
}

PolarWavefunction::PolarWavefunction(SeparableAction3D action, cplx plus, cplx minus,
                                     double k_norm, cplx prefactor)
    : action_(std::move(action)), plus_(plus), minus_(minus), k_norm_(k_norm), prefactor_(prefactor) {
    if (!(k_norm > 0.0)) throw InvalidArgument("k_norm must be > 0");
}

double PolarWavefunction::amplitude(const Point3& p) const {
    double r = k_norm_;
    for (Axis a : kAxes) r /= std::sqrt(std::abs(momentum_1d(action_[a], p[index(a)])));
    return r;
}

cplx PolarWavefunction::operator()(const Point3& p) const {
    const double phase = action_.value(p) / action_.hbar();
    const cplx e = std::polar(1.0, phase);
    return prefactor_ * amplitude(p) * (plus_ * e + minus_ * std::conj(e));
}

cplx PolarWavefunction::second_derivative(Axis axis, const Point3& p) const {
    const double hbar = action_.hbar();
    double rest = k_norm_;
    for (Axis a : kAxes)
        if (a != axis) rest /= std::sqrt(std::abs(momentum_1d(action_[a], p[index(a)])));
    const MomentumJet m = momentum_jet(action_[axis], p[index(axis)]);
    const double phi = 1.0 / std::sqrt(std::abs(m.p));
    const double r1 = m.dp / m.p, r2 = m.ddp / m.p;
    const double dphi = -0.5 * phi * r1;
    const double ddphi = phi * (0.75 * r1 * r1 - 0.5 * r2);
    const double transport = (2.0 * dphi * m.p + phi * m.dp) / hbar;
    const double real_part = ddphi - phi * m.p * m.p / (hbar * hbar);
    const cplx e = std::polar(1.0, action_.value(p) / hbar);
    const cplx up = cplx(real_part, transport) * e;
    const cplx down = cplx(real_part, -transport) * std::conj(e);
    return prefactor_ * rest * (plus_ * up + minus_ * down);
}

cplx PolarWavefunction::se_residual(Axis axis, const Point3& p) const {
    const auto& pair = action_[axis].pair();
    const auto& c = pair.constants();
    const double x = p[index(axis)];
    return -c.hbar * c.hbar / (2.0 * c.mass) * second_derivative(axis, p) +
           (pair.potential().value(x) - pair.energy()) * (*this)(p);
}

double PolarWavefunction::se_residual_scaled(Axis axis, const Point3& p) const {
    const auto& pair = action_[axis].pair();
    const auto& c = pair.constants();
    const double x = p[index(axis)];
    const double scale =
        c.hbar * c.hbar / (2.0 * c.mass) * std::abs(second_derivative(axis, p)) +
        (std::abs(pair.potential().value(x)) + std::abs(pair.energy())) * std::abs((*this)(p));
    return std::abs(se_residual(axis, p)) / std::max(scale, 1e-300);
}

std::pair<PolarWavefunction, PolarWavefunction> fm_wavefunctions(const SeparableAction3D& action,
                                                                  const RecoveryConstants& rec,
                                                                  double k_norm) {
    rec.validate();
    const double h2 = action.hbar() * action.hbar();
    return {PolarWavefunction(action, rec.a, rec.b, k_norm, -h2),
            PolarWavefunction(action, rec.c, rec.d, k_norm, -h2)};
}

double recover_action(const PolarWavefunction& psi1, const PolarWavefunction& psi2,
                      const RecoveryConstants& rec, const Point3& p) {
    rec.validate();
    const cplx v1 = psi1(p), v2 = psi2(p);
    const cplx num = -rec.d * v1 + rec.b * v2;
    const cplx den = rec.c * v1 - rec.a * v2;
    const double scale = std::abs(rec.c * v1) + std::abs(rec.a * v2);
    if (std::abs(den) == 0.0 || std::abs(den) < 1e-12 * scale)
        throw DegeneratePoint("c'Psi1 - a'Psi2 vanishes at the requested point");
    return 0.5 * psi1.action().hbar() * std::arg(num / den);
}

}  // namespace qshje
