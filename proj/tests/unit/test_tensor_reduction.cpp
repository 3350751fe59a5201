#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "qshje/tensor_reduction.hpp"

using namespace qshje;

namespace {

constexpr double kPi = std::numbers::pi;

SolutionPair free_pair(Axis axis) {
    return solve_pair(Potential1D::zero(axis), 0.5, {-4.0, 4.0}, 0.0);
}

SolutionPair harmonic_pair(Axis axis, double energy) {
    return solve_pair(Potential1D::harmonic(1.0, 1.0, axis), energy, {-3.0, 3.0}, 0.0);
}

std::array<SolutionPair, 3> free_pairs() {
    return {free_pair(Axis::X), free_pair(Axis::Y), free_pair(Axis::Z)};
}

/// Rank-one route: every axis factor of b + ia is proportional to
/// (g' + i, 1 + i g), so the ratio of its two entries fixes (g, g').
Gammas algebraic_gammas(const TensorCoefficients& t) {
    std::array<std::complex<double>, 8> c;
    std::size_t big = 0;
    for (std::size_t n = 0; n < 8; ++n) {
        c[n] = {t.b[n], t.a[n]};
        if (std::abs(c[n]) > std::abs(c[big])) big = n;
    }
    const int bi = static_cast<int>(big) / 4, bj = (static_cast<int>(big) / 2) % 2,
              bk = static_cast<int>(big) % 2;
    Gammas g{};
    for (int axis = 0; axis < 3; ++axis) {
        std::array<int, 3> first{bi, bj, bk}, second{bi, bj, bk};
        first[axis] = 0;
        second[axis] = 1;
        const auto rho = c[4 * first[0] + 2 * first[1] + first[2]] /
                         c[4 * second[0] + 2 * second[1] + second[2]];
        const double r = rho.real(), q = rho.imag();
        g[2 * axis] = (1.0 - q) / r;
        g[2 * axis + 1] = r - q * g[2 * axis];
    }
    return g;
}

Gammas random_gammas(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Gammas g;
    do {
        for (auto& v : g) v = u(rng);
    } while (std::abs(1 - g[0] * g[1]) < 0.05 || std::abs(1 - g[2] * g[3]) < 0.05 ||
             std::abs(1 - g[4] * g[5]) < 0.05);
    return g;
}

TensorCoefficients random_tensor(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TensorCoefficients t;
    for (auto& v : t.a) v = u(rng);
    for (auto& v : t.b) v = u(rng);
    return t;
}

}  // namespace

TEST_CASE("zero gammas expand to the hand-derived tensors") {
    const auto t = expand_gammas({0, 0, 0, 0, 0, 0});
    Tensor222 a{}, b{};
    a[tensor_index(1, 2, 2)] = a[tensor_index(2, 1, 2)] = a[tensor_index(2, 2, 1)] = 1;
    a[tensor_index(1, 1, 1)] = -1;
    b[tensor_index(2, 2, 2)] = 1;
    b[tensor_index(1, 1, 2)] = b[tensor_index(1, 2, 1)] = b[tensor_index(2, 1, 1)] = -1;
    CHECK(t.a == a);
    CHECK(t.b == b);
}

TEST_CASE("expanded tensors follow the three-angle tangent addition formula") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 10; ++trial) {
        const Gammas g = random_gammas(rng);
        const auto t = expand_gammas(g);
        for (int n = 0; n < 20; ++n) {
            const std::array<double, 6> s{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
            const double A = (s[0] + g[0] * s[1]) / (g[1] * s[0] + s[1]);
            const double B = (s[2] + g[2] * s[3]) / (g[3] * s[2] + s[3]);
            const double C = (s[4] + g[4] * s[5]) / (g[5] * s[4] + s[5]);
            const double expected = (A + B + C - A * B * C) / (1 - A * B - B * C - C * A);
            double num = 0, den = 0;
            for (int i = 1; i <= 2; ++i)
                for (int j = 1; j <= 2; ++j)
                    for (int k = 1; k <= 2; ++k) {
                        const double m = s[i - 1] * s[2 + j - 1] * s[4 + k - 1];
                        num += t.a[tensor_index(i, j, k)] * m;
                        den += t.b[tensor_index(i, j, k)] * m;
                    }
            CHECK(num / den == doctest::Approx(expected).epsilon(1e-9));
        }
    }
}

TEST_CASE("single-term tensors reduce to one arctan") {
    TensorCoefficients c;
    c.a[tensor_index(1, 1, 1)] = 1;
    c.b[tensor_index(2, 2, 2)] = 1;
    const TensorAction t(c, free_pairs());
    for (const Point3& p : {Point3{0.3, 0.2, -0.4}, Point3{1.0, -0.7, 0.5}}) {
        const double ref = std::atan(std::cos(p[0]) * std::cos(p[1]) * std::cos(p[2]) /
                                     (std::sin(p[0]) * std::sin(p[1]) * std::sin(p[2])));
        CHECK(std::abs(wrap_symmetric(eval_tensor_action(t, p) - ref, kPi)) < 1e-12);
    }
    CHECK(eval_tensor_action(t, {0.3, 0.2, -0.4}) ==
          doctest::Approx(eval_tensor_action(t.scaled(7.0), {0.3, 0.2, -0.4})).epsilon(1e-14));
}

TEST_CASE("tensor action equals the separable action modulo pi hbar") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2.9, 2.9);
    for (int trial = 0; trial < 10; ++trial) {
        const Gammas g = random_gammas(rng);
        const int o = trial % 2 ? -1 : 1;
        const auto s = assemble_separable(
            ReducedAction1D(harmonic_pair(Axis::X, 0.7), g[0], g[1], o),
            ReducedAction1D(free_pair(Axis::Y), g[2], g[3]),
            ReducedAction1D(harmonic_pair(Axis::Z, 1.9), g[4], g[5], -o), 0.25);
        const TensorAction t = expand_separable(s);
        for (int n = 0; n < 100; ++n) {
            const Point3 p{u(rng), u(rng), u(rng)};
            CHECK(std::abs(wrap_symmetric(eval_tensor_action(t, p) - s.value(p), kPi)) < 1e-9);
        }
        CHECK(std::abs(wrap_symmetric(eval_tensor_action(t.scaled(-7.0), {0.5, 0.5, 0.5}) -
                                          s.value({0.5, 0.5, 0.5}),
                                      kPi)) < 1e-9);
    }
}

TEST_CASE("continuation along the path is continuous") {
    const auto t = TensorAction(expand_gammas({0.3, -0.2, 1.5, 0.1, 0.0, 0.7}), free_pairs());
    double prev = eval_tensor_action(t, {0, 0, 0});
    for (int n = 1; n <= 200; ++n) {
        const double s = 3.5 * n / 200.0;
        const double cur = eval_tensor_action(t, {s, s, s});
        CHECK(std::abs(cur - prev) < 0.2);
        prev = cur;
    }
}

TEST_CASE("tensor actions satisfy the axis QSHJEs, separable or not") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-2.5, 2.5);
    const std::array<SolutionPair, 3> pairs{harmonic_pair(Axis::X, 0.5), free_pair(Axis::Y),
                                            harmonic_pair(Axis::Z, 2.0)};
    for (int trial = 0; trial < 3; ++trial) {
        const TensorAction t(random_tensor(rng), pairs);
        for (int n = 0; n < 30; ++n) {
            const Point3 p{u(rng), u(rng), u(rng)};
            for (Axis a : kAxes) CHECK(tensor_qshje_residual_scaled(t, a, p) < 1e-6);
        }
    }
}

TEST_CASE("fit recovers planted gammas and agrees with the rank-one route") {
    const Gammas planted{0.3, -0.2, 1.5, 0.1, 0.0, 0.7};
    const auto t = expand_gammas(planted);
    const auto fit = fit_gammas(t);
    REQUIRE(fit.separable);
    CHECK(fit.residual < 1e-7);
    CHECK(fit.restart_residuals.size() == 20);
    const Gammas oracle = algebraic_gammas(t);
    for (int n = 0; n < 6; ++n) {
        CHECK(std::abs(fit.gammas[n] - planted[n]) < 1e-6);
        CHECK(std::abs(oracle[n] - planted[n]) < 1e-10);
    }
    CHECK(std::abs(fit.phase) < 1e-6);

    TensorCoefficients scaled = t;
    for (auto& v : scaled.a) v *= -3.5;
    for (auto& v : scaled.b) v *= -3.5;
    const auto fit2 = fit_gammas(scaled);
    REQUIRE(fit2.separable);
    for (int n = 0; n < 6; ++n) CHECK(std::abs(fit2.gammas[n] - planted[n]) < 1e-6);
}

TEST_CASE("a phase-rotated separable tensor is still separable") {
    const Gammas planted{0.9, 0.4, -1.2, 0.3, 0.5, -0.6};
    auto t = expand_gammas(planted);
    const double phi = 0.4;
    TensorCoefficients r;
    for (std::size_t n = 0; n < 8; ++n) {
        const auto c = std::polar(1.0, phi) * std::complex<double>(t.b[n], t.a[n]);
        r.b[n] = c.real();
        r.a[n] = c.imag();
    }
    const auto fit = fit_gammas(r);
    REQUIRE(fit.separable);
    CHECK(fit.phase == doctest::Approx(phi).epsilon(1e-7));
    for (int n = 0; n < 6; ++n) CHECK(std::abs(fit.gammas[n] - planted[n]) < 1e-6);
}

TEST_CASE("generic tensors are not separable and verdicts do not depend on scale or threads") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 5; ++trial) {
        const auto t = random_tensor(rng);
        FitOptions opts;
        opts.seed = 100 + trial;
        const auto fit = fit_gammas(t, opts);
        CHECK_FALSE(fit.separable);
        CHECK(fit.residual > 1e-3);

        TensorCoefficients scaled = t;
        for (auto& v : scaled.a) v *= 4.0;
        for (auto& v : scaled.b) v *= 4.0;
        CHECK_FALSE(fit_gammas(scaled, opts).separable);

        opts.threads = 4;
        const auto threaded = fit_gammas(t, opts);
        CHECK(threaded.residual == fit.residual);
        CHECK(threaded.best_restart == fit.best_restart);
    }
}

TEST_CASE("degenerate inputs raise errors") {
    CHECK_THROWS_AS(expand_gammas({2.0, 0.5, 0, 0, 0, 0}), DegenerateGammas);
    TensorCoefficients only_a;
    only_a.a[0] = 1.0;
    CHECK_THROWS_AS(fit_gammas(only_a), DegenerateTensor);
    TensorCoefficients only_b;
    only_b.b[3] = 2.0;
    CHECK_THROWS_AS(normalize_tensor(only_b), DegenerateTensor);
    CHECK_THROWS_AS(TensorAction(TensorCoefficients{}, free_pairs()), InvalidArgument);

    TensorCoefficients c;
    c.a[tensor_index(1, 1, 1)] = 1;
    c.b[tensor_index(2, 2, 2)] = 1;
    const TensorAction t(c, free_pairs());
    // cos x = 0 and sin y = 0 make both sums vanish.
    CHECK_THROWS_AS(eval_tensor_action(t, {kPi / 2, 0.0, 0.3}), DenominatorZero);
}

TEST_CASE("normalization sets the largest denominator entry to one") {
    TensorCoefficients t;
    t.b = {0.1, -4.0, 2.0, 0, 0, 0, 0, 1};
    t.a = {2, 0, 0, 0, 0, 0, 0, 0};
    const auto n = normalize_tensor(t);
    CHECK(n.b[1] == 1.0);
    CHECK(n.a[0] == -0.5);
}

TEST_CASE("monomial counts reproduce the ten-versus-sixteen argument") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (Axis axis : kAxes) {
        GammaExpansion g;
        g.axis = axis;
        for (auto& v : g.g1) v = u(rng);
        for (auto& v : g.g2) v = -u(rng);
        const auto count = count_monomials(g);
        CHECK(count.numerator == 5);
        CHECK(count.denominator == 5);
        CHECK(count.total() == 10);
        g.g1 = {};
        CHECK(count_monomials(g).numerator == 1);
        CHECK(count_monomials(g).denominator == 5);
    }
    const auto general = count_monomials(random_tensor(rng));
    CHECK(general.numerator == 8);
    CHECK(general.denominator == 8);
    CHECK(general.total() == 16);
    const auto sep = count_monomials(expand_gammas({0, 0, 0, 0, 0, 0}));
    CHECK(sep.numerator == 4);
    CHECK(sep.denominator == 4);
}

TEST_CASE("flat layout is a followed by b") {
    const auto t = expand_gammas({0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
    const auto flat = t.flat();
    CHECK(flat[0] == t.a[0]);
    CHECK(flat[8] == t.b[0]);
    const auto back = TensorCoefficients::from_flat(flat);
    CHECK(back.a == t.a);
    CHECK(back.b == t.b);
}
