#include "qshje/amplitude.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "qshje/stencil.hpp"

namespace qshje {

Amplitude3D::Amplitude3D(SeparableAction3D action, double k_norm)
    : action_(std::move(action)), k_norm_(k_norm) {
    if (!(k_norm > 0.0) || !std::isfinite(k_norm)) throw InvalidArgument("k_norm must be > 0");
}

double Amplitude3D::factor(Axis axis, double xi) const {
    return 1.0 / std::sqrt(std::abs(momentum_1d(action_[axis], xi)));
}

double amplitude_at(const Amplitude3D& amp, const Point3& p) {
    double r = amp.k_norm();
    for (Axis a : kAxes) r *= amp.factor(a, p[index(a)]);
    return r;
}

namespace {

void require_stencil(const SeparableAction3D& action, Axis axis, double x, double span) {
    const Interval d = action[axis].pair().domain();
    if (x - span < d.lo || x + span > d.hi)
        throw StencilOutOfDomain("stencil around " + std::string(axis_name(axis)) + " = " +
                                 std::to_string(x) + " leaves the domain");
}

Point3 moved(Point3 p, Axis axis, double x) {
    p[index(axis)] = x;
    return p;
}

}  // namespace

double current_residual(const std::function<double(const Point3&)>& amplitude,
                        const SeparableAction3D& action, Axis axis, const Point3& p, double h) {
    if (!(h > 0.0)) throw InvalidArgument("stencil step must be > 0");
    require_stencil(action, axis, p[index(axis)], 2.0 * h);
    auto flux = [&](double x) {
        const double r = amplitude(moved(p, axis, x));
        return r * r * momentum_1d(action[axis], x);
    };
    return stencil::first_derivative(flux, p[index(axis)], h);
}

double current_residual(const Amplitude3D& amp, Axis axis, const Point3& p, double h) {
    return current_residual([&](const Point3& q) { return amplitude_at(amp, q); }, amp.action(),
                            axis, p, h);
}

double current_residual_scaled(const Amplitude3D& amp, Axis axis, const Point3& p, double h) {
    const double r = amplitude_at(amp, p);
    const double flux = r * r * momentum_1d(amp.action()[axis], p[index(axis)]);
    return std::abs(current_residual(amp, axis, p, h)) / std::abs(flux);
}

double log_amplitude_mixed_difference(const Amplitude3D& amp, Axis a, Axis b, const Point3& p,
                                      double h) {
    if (a == b) throw InvalidArgument("mixed difference needs two distinct axes");
    require_stencil(amp.action(), a, p[index(a)], h);
    require_stencil(amp.action(), b, p[index(b)], h);
    auto log_r = [&](double da, double db) {
        Point3 q = p;
        q[index(a)] += da;
        q[index(b)] += db;
        return std::log(amplitude_at(amp, q));
    };
    return (log_r(h, h) - log_r(h, -h) - log_r(-h, h) + log_r(-h, -h)) / (4.0 * h * h);
}

cplx build_wavefunction(const Amplitude3D& amp, const WaveParameters& wp, const Point3& p) {
    wp.validate();
    const double phase = amp.action().value(p) / amp.action().hbar();
    const cplx e = std::polar(1.0, phase);
    return amplitude_at(amp, p) * (wp.alpha * e + wp.beta * std::conj(e));
}

PolarWavefunction polar_wavefunction(const Amplitude3D& amp, const WaveParameters& wp) {
    wp.validate();
    return PolarWavefunction(amp.action(), wp.alpha, wp.beta, amp.k_norm());
}

cplx build_wavefunction(const TensorAction& t, const WaveParameters& wp, double k_norm,
                        const Point3& p) {
    wp.validate();
    double r = k_norm;
    for (Axis a : kAxes) r /= std::sqrt(std::abs(tensor_momentum_jet(t, a, p).p));
    const cplx e = std::polar(1.0, eval_tensor_action(t, p) / t.hbar());
    return r * (wp.alpha * e + wp.beta * std::conj(e));
}

double WavefunctionProduct::operator()(const Point3& p) const {
    double sum = 0.0;
    std::array<std::array<double, 2>, 3> s;
    for (std::size_t d = 0; d < 3; ++d) s[d] = {pairs[d].x1(p[d]), pairs[d].x2(p[d])};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                sum += coefficients[4 * i + 2 * j + k] * s[0][i] * s[1][j] * s[2][k];
    return sum;
}

ProductComparison compare_to_product(const std::function<cplx(const Point3&)>& psi,
                                     const WavefunctionProduct& prod,
                                     const std::vector<Point3>& samples) {
    if (samples.size() < 16)
        throw IllConditionedFit("at least 16 sample points are required, got " +
                                std::to_string(samples.size()));
    const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd basis(n, 8);
    Eigen::VectorXcd target(n);
    Eigen::VectorXd fixed(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Point3& p = samples[static_cast<std::size_t>(r)];
        std::array<std::array<double, 2>, 3> s;
        for (std::size_t d = 0; d < 3; ++d)
            s[d] = {prod.pairs[d].x1(p[d]), prod.pairs[d].x2(p[d])};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) basis(r, 4 * i + 2 * j + k) = s[0][i] * s[1][j] * s[2][k];
        target[r] = psi(p);
        fixed[r] = prod(p);
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double condition = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1]
                                                     : std::numeric_limits<double>::infinity();
    if (!(condition <= 1e12))
        throw IllConditionedFit("product basis is ill-conditioned on the samples (cond = " +
                                std::to_string(condition) + ")");

    const Eigen::VectorXd re = svd.solve(target.real());
    const Eigen::VectorXd im = svd.solve(target.imag());
    const double norm = target.norm();
    if (norm == 0.0) throw IllConditionedFit("wavefunction vanishes on every sample");

    ProductComparison out;
    out.condition = condition;
    for (int c = 0; c < 8; ++c) out.coefficients[static_cast<std::size_t>(c)] = {re[c], im[c]};
    const Eigen::VectorXcd fitted =
        (basis * re).cast<cplx>() + cplx(0.0, 1.0) * (basis * im).cast<cplx>();
    out.fit_residual = (fitted - target).norm() / norm;

    const double fn = fixed.squaredNorm();
    if (fn == 0.0) {
        out.fixed_residual = 1.0;
    } else {
        const cplx z = fixed.cast<cplx>().dot(target) / fn;
        out.fixed_residual = (z * fixed.cast<cplx>() - target).norm() / norm;
    }
    return out;
}

ProductComparison compare_to_product(const Amplitude3D& amp, const WaveParameters& wp,
                                     const WavefunctionProduct& prod,
                                     const std::vector<Point3>& samples) {
    return compare_to_product([&](const Point3& p) { return build_wavefunction(amp, wp, p); }, prod,
                              samples);
}

}  // namespace qshje
