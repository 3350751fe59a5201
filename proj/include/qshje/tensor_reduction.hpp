#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "qshje/reduced_action.hpp"

namespace qshje {

/// Real 2x2x2 tensor stored row-major: entry (i,j,k), i,j,k in {1,2}, lives at
/// 4(i-1) + 2(j-1) + (k-1).
using Tensor222 = std::array<double, 8>;

inline constexpr std::size_t tensor_index(int i, int j, int k) {
    return static_cast<std::size_t>(4 * (i - 1) + 2 * (j - 1) + (k - 1));
}

/// Numerator and denominator coefficient tensors of
///     S0 = hbar arctan( sum a_ijk Xi Yj Zk / sum b_ijk Xi Yj Zk ) + hbar * additive.
struct TensorCoefficients {
    Tensor222 a{};
    Tensor222 b{};

    /// a followed by b, 16 values.
    std::array<double, 16> flat() const;
    static TensorCoefficients from_flat(const std::array<double, 16>& v);
    bool is_zero() const;
};

/// The non-separable sixteen-coefficient action over three solution pairs.
class TensorAction {
public:
    TensorAction(TensorCoefficients coeffs, std::array<SolutionPair, 3> pairs, double additive = 0.0);

    const TensorCoefficients& coefficients() const { return coeffs_; }
    const SolutionPair& pair(Axis a) const { return pairs_[index(a)]; }
    double additive() const { return additive_; }
    double hbar() const { return pairs_[0].constants().hbar; }

    /// Point at which the principal arctan value fixes the branch (the anchors).
    Point3 base_point() const;

    /// Complex sums B + iA and their x/y/z jets are built from these.
    cplx phase_sum(const Point3& p) const;

    TensorAction scaled(double s) const;

private:
    TensorCoefficients coeffs_;
    std::array<SolutionPair, 3> pairs_;
    double additive_;
};

/// Value of the tensor action at p, continued along the straight segment from
/// the base point. Throws DenominatorZero when the numerator and denominator
/// sums vanish together on the path.
double eval_tensor_action(const TensorAction& t, const Point3& p);

/// Momentum dS0/dx_axis and its first two derivatives along that axis.
MomentumJet tensor_momentum_jet(const TensorAction& t, Axis axis, const Point3& p);

/// P^2/2m + (hbar^2/4m){S0; x_axis} + V_axis - E_axis for the tensor action at p.
double tensor_qshje_residual_scaled(const TensorAction& t, Axis axis, const Point3& p);

/// Six integration constants in axis order (g1, g2 | g3, g4 | g5, g6).
using Gammas = std::array<double, 6>;

/// Tensors of the separable action sum_i s_i hbar arctan(u_i/v_i), s_i = `signs`,
/// obtained from the three-angle tangent addition formula.
TensorCoefficients expand_gammas(const Gammas& g, const std::array<int, 3>& signs = {1, 1, 1});

/// Tensor form of a separable action (same pairs, same additive constant).
TensorAction expand_separable(const SeparableAction3D& action);

struct FitOptions {
    int restarts = 20;
    double threshold = 1e-7;
    std::uint64_t seed = 0;
    /// Restarts evaluated concurrently; results do not depend on this value.
    int threads = 1;
    /// Starting gammas are drawn uniformly from [-start_range, start_range].
    double start_range = 2.0;
};

struct FitResult {
    bool separable = false;
    Gammas gammas{};
    /// Phase offset (radians) between the fitted separable tensors and the input.
    double phase = 0.0;
    double residual = 0.0;
    /// Best residual of every restart, in restart order.
    std::vector<double> restart_residuals;
    int best_restart = -1;
};

/// Normalized copy: joint scaling so that the largest-magnitude entry of b (or
/// of a when b vanishes) equals 1. Throws DegenerateTensor when a or b is zero.
TensorCoefficients normalize_tensor(const TensorCoefficients& t);

/// Inverse of expand_gammas by multi-start Levenberg-Marquardt over the six
/// gammas. The fitted tensors may differ from the input by a joint complex
/// phase, which becomes an additive constant of the action.
FitResult fit_gammas(const TensorCoefficients& t, const FitOptions& options = {});

/// Bilinear coefficient functions of one axis quotient,
///     (U1 + G1 U2) / (G2 U1 + U2),  G = sum G^{jk} V_j W_k,
/// where U is the axis's own pair and V, W the other two in axis order.
struct GammaExpansion {
    Axis axis = Axis::X;
    std::array<double, 4> g1{};  // G1^{11}, G1^{12}, G1^{21}, G1^{22}
    std::array<double, 4> g2{};
};

struct MonomialCount {
    int numerator = 0;
    int denominator = 0;
    int total() const { return numerator + denominator; }
};

MonomialCount count_monomials(const GammaExpansion& g);
MonomialCount count_monomials(const TensorCoefficients& t);

}  // namespace qshje
