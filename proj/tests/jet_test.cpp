#include <aoi/jet.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using aoi::Jet;

namespace {

Jet random_jet(std::mt19937_64& g, int order, double min_abs_constant = 0.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> c(static_cast<std::size_t>(order) + 1);
    for (auto& x : c) x = u(g);
    if (min_abs_constant > 0.0 && std::abs(c[0]) < min_abs_constant)
        c[0] = std::copysign(min_abs_constant + std::abs(c[0]), c[0] == 0.0 ? 1.0 : c[0]);
    return Jet(0.0, std::move(c));
}

void expect_close(const Jet& a, const Jet& b, double rel) {
    ASSERT_EQ(a.order(), b.order());
    for (int k = 0; k <= a.order(); ++k) {
        const double x = a[static_cast<std::size_t>(k)], y = b[static_cast<std::size_t>(k)];
        EXPECT_NEAR(x, y, rel * std::max({1.0, std::abs(x), std::abs(y)})) << "coefficient " << k;
    }
}

} // namespace

TEST(Jet, LinearOperations) {
    EXPECT_EQ(aoi::add(Jet(0.0, {1, 2}), Jet(0.0, {3, 4})), Jet(0.0, {4, 6}));
    const Jet a(0.5, {1.5, -2.0, 3.25});
    EXPECT_EQ(aoi::sub(a, a), Jet::zero(0.5, 2));
    EXPECT_EQ(aoi::scale(Jet(0.0, {1, 1, 1}), 2.0), Jet(0.0, {2, 2, 2}));
}

TEST(Jet, Products) {
    EXPECT_EQ(aoi::mul(Jet(0.0, {1, 1, 0}), Jet(0.0, {1, -1, 0})), Jet(0.0, {1, 0, -1}));
    const Jet a(0.0, {0.3, -1.2, 4.0, 2.5});
    EXPECT_EQ(aoi::mul(a, Jet::constant(0.0, 3, 1.0)), a);
    EXPECT_EQ(aoi::mul(Jet(0.0, {0, 1, 0}), Jet(0.0, {0, 1, 0})), Jet(0.0, {0, 0, 1}));
}

TEST(Jet, Quotients) {
    const Jet geometric = aoi::div(Jet::constant(0.0, 6, 1.0), Jet(0.0, {1, -1, 0, 0, 0, 0, 0}));
    for (int k = 0; k <= 6; ++k) EXPECT_DOUBLE_EQ(geometric[static_cast<std::size_t>(k)], 1.0);

    const Jet a(0.0, {2.0, 0.5, -1.0, 3.0});
    expect_close(a / a, Jet::constant(0.0, 3, 1.0), 1e-15);

    EXPECT_THROW(a / Jet(0.0, {1e-14, 1, 0, 0}), aoi::DivisionBySingularJet);
    EXPECT_THROW(a / Jet::zero(0.0, 3), aoi::DivisionBySingularJet);
}

TEST(Jet, DeflateRemovesFactorOfS) {
    EXPECT_EQ(aoi::deflate(Jet(0.0, {0, 2, 3})), Jet(0.0, {2, 3}));

    const Jet a(0.0, {0.7, -0.2, 1.1, 0.4});
    const Jet shifted = aoi::mul(Jet(0.0, {0, 1, 0, 0}), a);
    EXPECT_EQ(aoi::deflate(shifted), a.truncated(2));

    // (e^s - 1)/s has coefficients 1/(k+1)!.
    std::vector<double> c(9);
    double f = 1.0;
    for (int k = 1; k <= 8; ++k) {
        f *= k;
        c[static_cast<std::size_t>(k)] = 1.0 / f;
    }
    const Jet d = aoi::deflate(Jet(0.0, c));
    double fact = 1.0;
    for (int k = 0; k < 8; ++k) {
        fact *= k + 1;
        EXPECT_DOUBLE_EQ(d[static_cast<std::size_t>(k)], 1.0 / fact);
    }

    EXPECT_THROW(aoi::deflate(Jet(0.0, {1e-3, 1, 2})), aoi::NonVanishingConstantTerm);
    EXPECT_NO_THROW(aoi::deflate(Jet(0.0, {1e-12, 1, 2})));
    EXPECT_THROW(aoi::deflate(Jet(1.0, {0, 1, 2})), aoi::JetMismatch);
}

TEST(Jet, DerivativeValue) {
    EXPECT_DOUBLE_EQ(aoi::derivative_value(Jet(0.0, {1, 1, 0.5}), 2), 1.0);
    const Jet a(0.0, {3.5, 1, 2});
    EXPECT_DOUBLE_EQ(aoi::derivative_value(a, 0), 3.5);
    const Jet geometric = 1.0 / Jet(0.0, {1, -1, 0, 0});
    EXPECT_DOUBLE_EQ(aoi::derivative_value(geometric, 3), 6.0);
    EXPECT_THROW(aoi::derivative_value(a, 3), std::out_of_range);
    EXPECT_THROW(aoi::derivative_value(a, -1), std::out_of_range);
}

TEST(Jet, MismatchIsRejected) {
    EXPECT_THROW(Jet(0.0, {1, 2}) + Jet(0.0, {1, 2, 3}), aoi::JetMismatch);
    EXPECT_THROW(Jet(0.0, {1, 2}) * Jet(1.0, {1, 2}), aoi::JetMismatch);
    EXPECT_THROW(Jet(0.0, {1, 2}) / Jet(0.5, {1, 2}), aoi::JetMismatch);
}

TEST(JetProperty, RingLaws) {
    std::mt19937_64 g(20240611);
    for (int order : {1, 2, 4, 8}) {
        for (int trial = 0; trial < 200; ++trial) {
            const Jet a = random_jet(g, order), b = random_jet(g, order), c = random_jet(g, order);
            expect_close(a + b, b + a, 1e-12);
            expect_close(a * b, b * a, 1e-12);
            expect_close((a + b) + c, a + (b + c), 1e-12);
            expect_close((a * b) * c, a * (b * c), 1e-12);
            expect_close(a * (b + c), a * b + a * c, 1e-12);
        }
    }
}

TEST(JetProperty, DivisionUndoesMultiplication) {
    std::mt19937_64 g(7);
    for (int trial = 0; trial < 500; ++trial) {
        const Jet a = random_jet(g, 8);
        const Jet b = random_jet(g, 8, 1.0);
        expect_close((a * b) / b, a, 1e-11);
        expect_close(((a / b) * b), a, 1e-11);
    }
}

TEST(JetProperty, DeflateInvertsMultiplicationByS) {
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 100; ++trial) {
        const Jet a = random_jet(g, 8);
        EXPECT_EQ((Jet::variable(0.0, 8) * a).deflate(), a.truncated(7));
    }
}
