#pragma once

#include <functional>
#include <vector>

#include "qshje/reduced_action.hpp"
#include "qshje/tensor_reduction.hpp"

namespace qshje {

/// R(x,y,z) = k_norm * prod_i |dS0/dx_i|^(-1/2).
class Amplitude3D {
public:
    explicit Amplitude3D(SeparableAction3D action, double k_norm = 1.0);

    const SeparableAction3D& action() const { return action_; }
    double k_norm() const { return k_norm_; }

    /// Single-axis factor R_i = |P_i|^(-1/2); R = k_norm * R_x * R_y * R_z.
    double factor(Axis axis, double xi) const;

private:
    SeparableAction3D action_;
    double k_norm_;
};

double amplitude_at(const Amplitude3D& amp, const Point3& p);

/// d/dx_i (R^2 dS0/dx_i) by a five-point stencil of width h. Throws
/// StencilOutOfDomain when the stencil leaves the domain.
double current_residual(const Amplitude3D& amp, Axis axis, const Point3& p, double h = 1e-3);

/// Same derivative for an arbitrary amplitude function, using the action's momentum.
double current_residual(const std::function<double(const Point3&)>& amplitude,
                        const SeparableAction3D& action, Axis axis, const Point3& p,
                        double h = 1e-3);

/// current_residual divided by |R^2 P_i| at p (a relative rate per unit length).
double current_residual_scaled(const Amplitude3D& amp, Axis axis, const Point3& p,
                               double h = 1e-3);

/// Mixed second difference of log R across two distinct axes, divided by (2h)^2.
double log_amplitude_mixed_difference(const Amplitude3D& amp, Axis a, Axis b, const Point3& p,
                                      double h = 1e-2);

/// R * (alpha e^{iS0/hbar} + beta e^{-iS0/hbar}).
cplx build_wavefunction(const Amplitude3D& amp, const WaveParameters& wp, const Point3& p);

/// The same wavefunction as an object with analytic second derivatives.
PolarWavefunction polar_wavefunction(const Amplitude3D& amp, const WaveParameters& wp);

/// Wavefunction in polar form built from a tensor action: the amplitude uses
/// the momenta of the tensor action along each axis.
cplx build_wavefunction(const TensorAction& t, const WaveParameters& wp, double k_norm,
                        const Point3& p);

/// Product-sum wavefunction sum c_ijk Xi(x) Yj(y) Zk(z) with real coefficients.
struct WavefunctionProduct {
    Tensor222 coefficients{};
    std::array<SolutionPair, 3> pairs;

    double operator()(const Point3& p) const;
};

struct ProductComparison {
    /// Relative least-squares residual of the best complex coefficients c_ijk.
    double fit_residual = 0.0;
    /// Relative residual of the given coefficients after the best complex scale.
    double fixed_residual = 0.0;
    std::array<cplx, 8> coefficients{};
    double condition = 0.0;
};

/// Fit the product basis of `prod.pairs` to `psi` on the sample points.
/// Throws IllConditionedFit with fewer than 16 samples or a basis matrix with
/// condition number above 1e12.
ProductComparison compare_to_product(const std::function<cplx(const Point3&)>& psi,
                                     const WavefunctionProduct& prod,
                                     const std::vector<Point3>& samples);

ProductComparison compare_to_product(const Amplitude3D& amp, const WaveParameters& wp,
                                     const WavefunctionProduct& prod,
                                     const std::vector<Point3>& samples);

}  // namespace qshje
