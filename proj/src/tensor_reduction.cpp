#include "qshje/tensor_reduction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <thread>

#include <Eigen/Core>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

namespace qshje {

namespace {

using Complex8 = std::array<cplx, 8>;

Complex8 to_complex(const TensorCoefficients& t) {
    Complex8 c;
    for (std::size_t n = 0; n < 8; ++n) c[n] = {t.b[n], t.a[n]};
    return c;
}

TensorCoefficients from_complex(const Complex8& c) {
    TensorCoefficients t;
    for (std::size_t n = 0; n < 8; ++n) {
        t.b[n] = c[n].real();
        t.a[n] = c[n].imag();
    }
    return t;
}

/// Per-axis factor (g' + i s) U1 + (1 + i s g) U2, i.e. v + i s u.
std::array<cplx, 2> axis_factor(double g, double gp, int s) {
    return {cplx(gp, s), cplx(1.0, s * g)};
}

Complex8 rank_one(const std::array<std::array<cplx, 2>, 3>& f) {
    Complex8 c;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) c[4 * i + 2 * j + k] = f[0][i] * f[1][j] * f[2][k];
    return c;
}

Complex8 expand_complex(const Gammas& g, const std::array<int, 3>& signs) {
    return rank_one({axis_factor(g[0], g[1], signs[0]), axis_factor(g[2], g[3], signs[1]),
                     axis_factor(g[4], g[5], signs[2])});
}

}  // namespace

// ---------------------------------------------------------------------------
// TensorCoefficients / TensorAction

std::array<double, 16> TensorCoefficients::flat() const {
    std::array<double, 16> v{};
    std::copy(a.begin(), a.end(), v.begin());
    std::copy(b.begin(), b.end(), v.begin() + 8);
    return v;
}

TensorCoefficients TensorCoefficients::from_flat(const std::array<double, 16>& v) {
    TensorCoefficients t;
    std::copy(v.begin(), v.begin() + 8, t.a.begin());
    std::copy(v.begin() + 8, v.end(), t.b.begin());
    return t;
}

bool TensorCoefficients::is_zero() const {
    auto zero = [](const Tensor222& x) {
        return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
    };
    return zero(a) && zero(b);
}

TensorAction::TensorAction(TensorCoefficients coeffs, std::array<SolutionPair, 3> pairs,
                           double additive)
    : coeffs_(coeffs), pairs_(std::move(pairs)), additive_(additive) {
    if (coeffs_.is_zero()) throw InvalidArgument("tensor action needs a nonzero coefficient");
    for (double v : coeffs_.flat())
        if (!std::isfinite(v)) throw InvalidArgument("tensor coefficients must be finite");
    for (Axis a : kAxes)
        if (pairs_[index(a)].axis() != a)
            throw InvalidArgument("solution pairs must be given in x, y, z order");
}

Point3 TensorAction::base_point() const {
    return {pairs_[0].anchor(), pairs_[1].anchor(), pairs_[2].anchor()};
}

cplx TensorAction::phase_sum(const Point3& p) const {
    const auto c = to_complex(coeffs_);
    std::array<std::array<double, 2>, 3> s;
    for (std::size_t d = 0; d < 3; ++d) {
        const auto j = pairs_[d].jets(p[d]);
        s[d] = {j.x1.v, j.x2.v};
    }
    cplx sum{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) sum += c[4 * i + 2 * j + k] * (s[0][i] * s[1][j] * s[2][k]);
    return sum;
}

TensorAction TensorAction::scaled(double s) const {
    if (s == 0.0 || !std::isfinite(s)) throw InvalidArgument("scale must be finite and nonzero");
    TensorCoefficients c = coeffs_;
    for (auto& v : c.a) v *= s;
    for (auto& v : c.b) v *= s;
    return TensorAction(c, pairs_, additive_);
}

namespace {

/// Largest coefficient times prod_d (|U1| + |U2|): the size the phase sum
/// would have without cancellation.
double phase_scale(const TensorAction& t, const Point3& p) {
    const auto& c = t.coefficients();
    double largest = 0.0;
    for (std::size_t n = 0; n < 8; ++n) largest = std::max({largest, std::abs(c.a[n]), std::abs(c.b[n])});
    for (Axis ax : kAxes) {
        const auto j = t.pair(ax).jets(p[index(ax)]);
        largest *= std::abs(j.x1.v) + std::abs(j.x2.v);
    }
    return largest;
}

cplx checked_phase_sum(const TensorAction& t, const Point3& p) {
    const cplx c = t.phase_sum(p);
    if (std::abs(c) <= 1e-14 * phase_scale(t, p))
        throw DenominatorZero("numerator and denominator of the tensor action vanish together");
    return c;
}

Point3 lerp(const Point3& a, const Point3& b, double s) {
    return {a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2])};
}

double continue_phase(const TensorAction& t, const Point3& a, const Point3& b, double s0,
                      double arg0, double s1, int depth) {
    const double arg1 = std::arg(checked_phase_sum(t, lerp(a, b, s1)));
    const double d = wrap_symmetric(arg1 - arg0, 2.0 * std::numbers::pi);
    if (std::abs(d) <= 0.25 || depth >= 40) return d;
    const double sm = 0.5 * (s0 + s1);
    const double dm = continue_phase(t, a, b, s0, arg0, sm, depth + 1);
    return dm + continue_phase(t, a, b, sm, arg0 + dm, s1, depth + 1);
}

}  // namespace

double eval_tensor_action(const TensorAction& t, const Point3& p) {
    for (Axis ax : kAxes)
        if (!t.pair(ax).domain().contains(p[index(ax)]))
            throw OutOfDomain("point outside the tensor action domain along " +
                              std::string(axis_name(ax)));
    const Point3 base = t.base_point();
    const cplx c0 = checked_phase_sum(t, base);
    const double principal = std::atan(c0.imag() / c0.real());
    double arg = std::arg(c0);
    double unwrapped = 0.0;
    constexpr int kSegments = 16;
    for (int n = 0; n < kSegments; ++n) {
        const double s0 = static_cast<double>(n) / kSegments;
        const double s1 = static_cast<double>(n + 1) / kSegments;
        const double d = continue_phase(t, base, p, s0, arg, s1, 0);
        unwrapped += d;
        arg += d;
    }
    return t.hbar() * (principal + unwrapped + t.additive());
}

MomentumJet tensor_momentum_jet(const TensorAction& t, Axis axis, const Point3& p) {
    const auto& c = t.coefficients();
    const std::size_t ax = index(axis);
    // Collapse the two other axes into coefficients of U1 and U2.
    std::array<double, 2> alpha{}, beta{};
    std::array<std::array<double, 2>, 3> s;
    for (Axis o : kAxes) {
        const auto j = t.pair(o).jets(p[index(o)]);
        s[index(o)] = {j.x1.v, j.x2.v};
    }
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                const std::array<int, 3> ijk{i, j, k};
                double w = 1.0;
                for (std::size_t d = 0; d < 3; ++d)
                    if (d != ax) w *= s[d][ijk[d]];
                const std::size_t n = 4 * i + 2 * j + k;
                alpha[ijk[ax]] += c.a[n] * w;
                beta[ijk[ax]] += c.b[n] * w;
            }
    const auto j = t.pair(axis).jets(p[ax]);
    auto combine = [&](const std::array<double, 2>& w) {
        return Jet{w[0] * j.x1.v + w[1] * j.x2.v, w[0] * j.x1.d1 + w[1] * j.x2.d1,
                   w[0] * j.x1.d2 + w[1] * j.x2.d2, w[0] * j.x1.d3 + w[1] * j.x2.d3};
    };
    // A'B - AB' = -(alpha1 beta2 - alpha2 beta1) W for A = alpha.U, B = beta.U.
    const double n = -(alpha[0] * beta[1] - alpha[1] * beta[0]) * t.pair(axis).wronskian_at_anchor();
    return wronskian_momentum(combine(alpha), combine(beta), n, t.hbar());
}

double tensor_qshje_residual_scaled(const TensorAction& t, Axis axis, const Point3& p) {
    const auto& pair = t.pair(axis);
    const auto& k = pair.constants();
    const MomentumJet m = tensor_momentum_jet(t, axis, p);
    const double kinetic = m.p * m.p / (2.0 * k.mass);
    const double quantum = k.hbar * k.hbar / (4.0 * k.mass) * m.schwarzian();
    const double v = pair.potential().value(p[index(axis)]);
    const double e = pair.energy();
    const double scale =
        std::max({std::abs(kinetic), std::abs(quantum), std::abs(v), std::abs(e), 1e-300});
    return std::abs(kinetic + quantum + v - e) / scale;
}

// ---------------------------------------------------------------------------
// Expansion

TensorCoefficients expand_gammas(const Gammas& g, const std::array<int, 3>& signs) {
    for (std::size_t d = 0; d < 3; ++d) {
        if (!std::isfinite(g[2 * d]) || !std::isfinite(g[2 * d + 1]))
            throw InvalidArgument("gammas must be finite");
        if (std::abs(1.0 - g[2 * d] * g[2 * d + 1]) < 1e-12)
            throw DegenerateGammas("1 - g" + std::to_string(2 * d + 1) + "*g" +
                                   std::to_string(2 * d + 2) + " vanishes");
        if (signs[d] != 1 && signs[d] != -1) throw InvalidArgument("signs must be +1 or -1");
    }
    return from_complex(expand_complex(g, signs));
}

TensorAction expand_separable(const SeparableAction3D& action) {
    Gammas g;
    std::array<int, 3> signs;
    for (Axis a : kAxes) {
        const auto& r = action[a];
        g[2 * index(a)] = r.gamma_num();
        g[2 * index(a) + 1] = r.gamma_den();
        signs[index(a)] = r.arctan_sign();
    }
    return TensorAction(expand_gammas(g, signs),
                        {action[Axis::X].pair(), action[Axis::Y].pair(), action[Axis::Z].pair()},
                        action.lambda0());
}

// ---------------------------------------------------------------------------
// Fit

TensorCoefficients normalize_tensor(const TensorCoefficients& t) {
    auto largest = [](const Tensor222& x) {
        return *std::max_element(x.begin(), x.end(),
                                 [](double p, double q) { return std::abs(p) < std::abs(q); });
    };
    const double lb = largest(t.b);
    const double la = largest(t.a);
    if (lb == 0.0 || la == 0.0)
        throw DegenerateTensor(lb == 0.0 ? "denominator tensor b is identically zero"
                                         : "numerator tensor a is identically zero");
    TensorCoefficients n = t;
    for (auto& v : n.a) v /= lb;
    for (auto& v : n.b) v /= lb;
    return n;
}

namespace {

struct SeparableResidual {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    Complex8 target;

    int inputs() const { return 6; }
    int values() const { return 16; }

    /// Best complex scale z for the model tensor, and z*model - target.
    std::pair<cplx, Complex8> project(const Gammas& g) const {
        const Complex8 m = expand_complex(g, {1, 1, 1});
        cplx num{};
        double den = 0.0;
        for (std::size_t n = 0; n < 8; ++n) {
            num += std::conj(m[n]) * target[n];
            den += std::norm(m[n]);
        }
        const cplx z = den > 0.0 ? num / den : cplx{};
        Complex8 r;
        for (std::size_t n = 0; n < 8; ++n) r[n] = z * m[n] - target[n];
        return {z, r};
    }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
        Gammas g;
        for (int n = 0; n < 6; ++n) g[n] = x[n];
        const auto r = project(g).second;
        for (std::size_t n = 0; n < 8; ++n) {
            f[2 * n] = r[n].real();
            f[2 * n + 1] = r[n].imag();
        }
        return 0;
    }
};

struct RestartOutcome {
    Gammas gammas{};
    double residual = std::numeric_limits<double>::infinity();
    double phase = 0.0;
};

double sup_residual(const Complex8& r) {
    double m = 0.0;
    for (const cplx& v : r) m = std::max({m, std::abs(v.real()), std::abs(v.imag())});
    return m;
}

RestartOutcome run_restart(const SeparableResidual& functor, const Gammas& start) {
    Eigen::VectorXd x(6);
    for (int n = 0; n < 6; ++n) x[n] = start[n];
    Eigen::NumericalDiff<SeparableResidual> numdiff(functor);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<SeparableResidual>> lm(numdiff);
    lm.parameters.ftol = 1e-15;
    lm.parameters.xtol = 1e-15;
    lm.parameters.maxfev = 4000;
    lm.minimize(x);

    RestartOutcome out;
    for (int n = 0; n < 6; ++n) out.gammas[n] = x[n];
    for (std::size_t d = 0; d < 3; ++d)
        if (!std::isfinite(out.gammas[2 * d]) || !std::isfinite(out.gammas[2 * d + 1]) ||
            std::abs(1.0 - out.gammas[2 * d] * out.gammas[2 * d + 1]) < 1e-12)
            return out;
    const auto [z, r] = functor.project(out.gammas);
    out.residual = sup_residual(r);
    double phase = std::arg(z);
    if (phase > 0.5 * std::numbers::pi) phase -= std::numbers::pi;
    if (phase <= -0.5 * std::numbers::pi) phase += std::numbers::pi;
    out.phase = phase;
    return out;
}

}  // namespace

FitResult fit_gammas(const TensorCoefficients& t, const FitOptions& options) {
    if (options.restarts < 1) throw InvalidArgument("restarts must be >= 1");
    if (!(options.threshold > 0.0)) throw InvalidArgument("threshold must be > 0");
    const TensorCoefficients normalized = normalize_tensor(t);
    const SeparableResidual functor{to_complex(normalized)};

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> dist(-options.start_range, options.start_range);
    std::vector<Gammas> starts(static_cast<std::size_t>(options.restarts));
    for (auto& s : starts)
        for (auto& v : s) v = dist(rng);

    std::vector<RestartOutcome> outcomes(starts.size());
    const int threads = std::clamp(options.threads, 1, options.restarts);
    if (threads == 1) {
        for (std::size_t n = 0; n < starts.size(); ++n) outcomes[n] = run_restart(functor, starts[n]);
    } else {
        std::vector<std::jthread> workers;
        for (int w = 0; w < threads; ++w)
            workers.emplace_back([&, w] {
                for (std::size_t n = w; n < starts.size(); n += threads)
                    outcomes[n] = run_restart(functor, starts[n]);
            });
    }

    FitResult result;
    result.residual = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < outcomes.size(); ++n) {
        result.restart_residuals.push_back(outcomes[n].residual);
        if (outcomes[n].residual < result.residual) {
            result.residual = outcomes[n].residual;
            result.best_restart = static_cast<int>(n);
        }
    }
    if (result.best_restart >= 0) {
        const auto& best = outcomes[result.best_restart];
        result.gammas = best.gammas;
        result.phase = best.phase;
    }
    result.separable = result.residual < options.threshold;
    return result;
}

// ---------------------------------------------------------------------------
// Monomial counting

namespace {

/// Exponents of (U1, U2, V1, V2, W1, W2) in axis order x, y, z.
using Monomial = std::array<int, 6>;
using Polynomial = std::map<Monomial, double>;

void add_term(Polynomial& poly, const Monomial& m, double c) {
    if (c == 0.0) return;
    double& slot = poly[m];
    slot += c;
    if (slot == 0.0) poly.erase(m);
}

Monomial unit(std::size_t axis, int which) {
    Monomial m{};
    m[2 * axis + static_cast<std::size_t>(which)] = 1;
    return m;
}

Monomial times(const Monomial& a, const Monomial& b) {
    Monomial m{};
    for (std::size_t n = 0; n < 6; ++n) m[n] = a[n] + b[n];
    return m;
}

/// Polynomial of G(v, w) * U_own, with G = sum G^{jk} V_j W_k.
void add_bilinear(Polynomial& poly, const std::array<double, 4>& g, std::size_t own, int which,
                  std::size_t v, std::size_t w) {
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
            add_term(poly, times(unit(own, which), times(unit(v, j), unit(w, k))), g[2 * j + k]);
}

}  // namespace

MonomialCount count_monomials(const GammaExpansion& g) {
    const std::size_t own = index(g.axis);
    std::array<std::size_t, 2> others{};
    std::size_t n = 0;
    for (std::size_t d = 0; d < 3; ++d)
        if (d != own) others[n++] = d;
    Polynomial num, den;
    add_term(num, unit(own, 0), 1.0);
    add_bilinear(num, g.g1, own, 1, others[0], others[1]);
    add_bilinear(den, g.g2, own, 0, others[0], others[1]);
    add_term(den, unit(own, 1), 1.0);
    return {static_cast<int>(num.size()), static_cast<int>(den.size())};
}

MonomialCount count_monomials(const TensorCoefficients& t) {
    Polynomial num, den;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                const Monomial m = times(unit(0, i), times(unit(1, j), unit(2, k)));
                add_term(num, m, t.a[4 * i + 2 * j + k]);
                add_term(den, m, t.b[4 * i + 2 * j + k]);
            }
    return {static_cast<int>(num.size()), static_cast<int>(den.size())};
}

}  // namespace qshje
