#pragma once

#include <complex>
#include <utility>

#include "qshje/schrodinger1d.hpp"

namespace qshje {

using cplx = std::complex<double>;

/// Momentum P = dS0/dx and its first two derivatives at a point.
struct MomentumJet {
    double p = 0.0;
    double dp = 0.0;
    double ddp = 0.0;

    /// {S0; x} = P''/P - 3/2 (P'/P)^2.
    double schwarzian() const {
        const double r1 = dp / p;
        return ddp / p - 1.5 * r1 * r1;
    }
};

/// Momentum jet of S0 = hbar * arctan(u/v), with u and v solutions of the same
/// Schrödinger equation given as jets. P = hbar (u'v - uv') / (u^2 + v^2).
MomentumJet arctan_momentum(const Jet& u, const Jet& v, double hbar);

/// Same jet when u and v solve one linear second-order equation without a
/// first-derivative term, so that n = u'v - uv' is a known constant:
/// P = hbar n / D, P' = -P D'/D, P'' = P (2 (D'/D)^2 - D''/D), D = u^2 + v^2.
/// Avoids the cancellation in u''v - uv'' where the solutions grow quickly.
MomentumJet wronskian_momentum(const Jet& u, const Jet& v, double n, double hbar);

/// One-dimensional reduced action
///
///     S0(x) = +/- hbar * arctan((X1 + g X2) / (g' X1 + X2))
///
/// built from a SolutionPair and the two integration constants g = gamma_num,
/// g' = gamma_den. `orientation` is the sign of the momentum, which never
/// vanishes on the domain.
class ReducedAction1D {
public:
    ReducedAction1D(SolutionPair pair, double gamma_num, double gamma_den, int orientation = +1);

    const SolutionPair& pair() const { return pair_; }
    double gamma_num() const { return gamma_num_; }
    double gamma_den() const { return gamma_den_; }
    int orientation() const { return orientation_; }
    Axis axis() const { return pair_.axis(); }

    /// (1 - gamma_num*gamma_den) * W(anchor).
    double momentum_constant() const { return momentum_constant_; }

    /// s in S0 = s * hbar * arctan(u/v) (continuous branch).
    int arctan_sign() const { return orientation_ * sign_of(-momentum_constant_); }

    ReducedAction1D with_orientation(int orientation) const;

    /// u = X1 + g X2 and v = g' X1 + X2 as jets.
    std::pair<Jet, Jet> ratio_jets(double x) const;

private:
    SolutionPair pair_;
    double gamma_num_;
    double gamma_den_;
    int orientation_;
    double momentum_constant_;
    double anchor_angle_;  // principal arctan(u/v) at the anchor
};

/// Continuous (branch-unwrapped) value of the reduced action at x.
double action_1d(const ReducedAction1D& action, double x);

/// orientation * hbar * |(1 - g g') W| / [(X1 + g X2)^2 + (g' X1 + X2)^2].
double momentum_1d(const ReducedAction1D& action, double x);

MomentumJet momentum_jet(const ReducedAction1D& action, double x);

/// Schwarzian derivative {S0; x}, computed from momentum derivatives.
double schwarzian(const ReducedAction1D& action, double x);

/// Quantum potential Q = (hbar^2/4m) {S0; x}.
double quantum_potential(const ReducedAction1D& action, double x);

/// P^2/2m + (hbar^2/4m){S0; x} + V(x) - E. Vanishes when the pair solves the
/// Schrödinger equation at (V, E).
double qshje_residual_1d(const ReducedAction1D& action, const Potential1D& potential,
                         double energy, double x);

/// Residual divided by max(P^2/2m, |Q|, |V|, |E|) at x.
double qshje_residual_scaled(const ReducedAction1D& action, const Potential1D& potential,
                             double energy, double x);

/// hbar |(1 - g g') W| / max D over `samples` points: a lower bound for |P|.
double momentum_lower_bound(const ReducedAction1D& action, int samples);

/// Sum of three one-dimensional actions plus hbar * lambda0.
class SeparableAction3D {
public:
    const ReducedAction1D& operator[](Axis a) const { return axes_[index(a)]; }
    double lambda0() const { return lambda0_; }
    double hbar() const { return axes_[0].pair().constants().hbar; }
    const PhysicalConstants& constants() const { return axes_[0].pair().constants(); }

    double value(const Point3& p) const;
    Point3 gradient(const Point3& p) const;
    bool contains(const Point3& p) const;

    /// Six gammas plus the additive constant.
    static constexpr int kConstantCount = 7;

    SeparableAction3D with_orientation(Axis a, int orientation) const;

private:
    friend SeparableAction3D assemble_separable(const ReducedAction1D&, const ReducedAction1D&,
                                                const ReducedAction1D&, double);
    SeparableAction3D(std::array<ReducedAction1D, 3> axes, double lambda0)
        : axes_(std::move(axes)), lambda0_(lambda0) {}

    std::array<ReducedAction1D, 3> axes_;
    double lambda0_;
};

/// Orders the actions by their axis label. Throws DuplicateAxis when two
/// actions share a label.
SeparableAction3D assemble_separable(const ReducedAction1D& a, const ReducedAction1D& b,
                                     const ReducedAction1D& c, double lambda0 = 0.0);

/// Coefficients of the two progressive waves exp(+iS0/hbar), exp(-iS0/hbar).
struct WaveParameters {
    cplx alpha{1.0, 0.0};
    cplx beta{0.0, 0.0};

    void validate() const;
};

/// Constants a', b', c', d' relating two wavefunctions to the action.
struct RecoveryConstants {
    cplx a{1.0, 0.0};
    cplx b{0.0, 0.0};
    cplx c{0.0, 0.0};
    cplx d{1.0, 0.0};

    void validate() const;
};

/// Psi = prefactor * k * prod_i |P_i|^(-1/2) * (plus e^{iS0/hbar} + minus e^{-iS0/hbar}).
///
/// Second derivatives along each axis are analytic, so Schrödinger residuals
/// are free of finite-difference error.
class PolarWavefunction {
public:
    PolarWavefunction(SeparableAction3D action, cplx plus, cplx minus, double k_norm = 1.0,
                      cplx prefactor = 1.0);

    cplx operator()(const Point3& p) const;
    double amplitude(const Point3& p) const;
    cplx second_derivative(Axis axis, const Point3& p) const;

    /// -hbar^2/2m d^2Psi/dx_i^2 + (V_i - E_i) Psi, using the pair's own potential and energy.
    cplx se_residual(Axis axis, const Point3& p) const;
    /// |se_residual| / (hbar^2/2m |Psi''| + (|V_i| + |E_i|) |Psi|).
    double se_residual_scaled(Axis axis, const Point3& p) const;

    const SeparableAction3D& action() const { return action_; }
    cplx plus() const { return plus_; }
    cplx minus() const { return minus_; }

private:
    SeparableAction3D action_;
    cplx plus_;
    cplx minus_;
    double k_norm_;
    cplx prefactor_;
};

/// The two wavefunctions of the Faraggi-Matone construction,
/// Psi1 = -hbar^2 f(y,z) (dS0/dx)^(-1/2) (a' e^{iS0/hbar} + b' e^{-iS0/hbar}) and
/// Psi2 likewise with (c', d'); f(y,z) = k (|P_y| |P_z|)^(-1/2).
std::pair<PolarWavefunction, PolarWavefunction> fm_wavefunctions(const SeparableAction3D& action,
                                                                  const RecoveryConstants& rec,
                                                                  double k_norm = 1.0);

/// S0 = (hbar/2i) log[(-d' Psi1 + b' Psi2) / (c' Psi1 - a' Psi2)], principal branch,
/// i.e. S0 modulo pi*hbar.
double recover_action(const PolarWavefunction& psi1, const PolarWavefunction& psi2,
                      const RecoveryConstants& rec, const Point3& p);

}  // namespace qshje
