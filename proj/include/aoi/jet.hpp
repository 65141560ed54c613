#pragma once

#include <aoi/errors.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace aoi {

/// Truncated Taylor expansion of a scalar function about a fixed point.
///
/// Coefficients are stored normalized, `coeffs[k] = f^(k)(center) / k!`, so the
/// Cauchy product and quotient never see factorial growth. Conversion back to a
/// raw derivative happens only in derivative_value().
///
/// Binary operations require both operands to share center and order; anything
/// else is a programming error and throws JetMismatch.
class Jet {
public:
    static constexpr int default_order = 8;
    /// |b0| below this makes b non-invertible.
    static constexpr double division_floor = 1e-13;
    /// Relative slack on the constant term accepted by deflate().
    static constexpr double deflate_tolerance = 1e-9;

    Jet() : Jet(0.0, std::vector<double>(default_order + 1, 0.0)) {}

    Jet(double center, std::vector<double> coeffs) : center_(center), coeffs_(std::move(coeffs)) {
        if (coeffs_.empty()) throw JetMismatch("jet needs at least one coefficient");
    }

    Jet(double center, std::initializer_list<double> coeffs)
        : Jet(center, std::vector<double>(coeffs)) {}

    static Jet zero(double center, int order) {
        return Jet(center, std::vector<double>(static_cast<std::size_t>(order) + 1, 0.0));
    }

    static Jet constant(double center, int order, double value) {
        Jet j = zero(center, order);
        j.coeffs_[0] = value;
        return j;
    }

    /// The identity map s -> s expanded about `center`.
    static Jet variable(double center, int order) {
        Jet j = constant(center, order, center);
        if (order >= 1) j.coeffs_[1] = 1.0;
        return j;
    }

    double center() const noexcept { return center_; }
    int order() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
    std::span<const double> coeffs() const noexcept { return coeffs_; }
    double operator[](std::size_t k) const { return coeffs_.at(k); }
    double& operator[](std::size_t k) { return coeffs_.at(k); }

    double max_abs() const noexcept {
        double m = 0.0;
        for (double c : coeffs_) m = std::max(m, std::abs(c));
        return m;
    }

    bool all_finite() const noexcept {
        return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return std::isfinite(c); });
    }

    /// Drops every coefficient above `order`.
    Jet truncated(int order) const {
        if (order < 0 || order > this->order()) throw JetMismatch("cannot truncate to order " + std::to_string(order));
        return Jet(center_, std::vector<double>(coeffs_.begin(), coeffs_.begin() + order + 1));
    }

    /// Same coefficients, reinterpreted about a different point (composition with a shift).
    Jet recentered(double center) const { return Jet(center, coeffs_); }

    /// f^(k)(center).
    double derivative_value(int k) const {
        if (k < 0 || k > order())
            throw std::out_of_range("derivative order " + std::to_string(k) + " outside jet of order " +
                                    std::to_string(order()));
        double factorial = 1.0;
        for (int i = 2; i <= k; ++i) factorial *= i;
        return factorial * coeffs_[static_cast<std::size_t>(k)];
    }

    /// Series of f(s)/s for a jet about 0 whose constant term vanishes.
    Jet deflate() const {
        if (center_ != 0.0) throw JetMismatch("deflate requires a jet centered at 0");
        if (order() < 1) throw JetMismatch("deflate requires order >= 1");
        if (std::abs(coeffs_[0]) > deflate_tolerance * std::max(1.0, max_abs()))
            throw NonVanishingConstantTerm("constant term " + std::to_string(coeffs_[0]) +
                                           " does not vanish; cannot divide by s");
        return Jet(center_, std::vector<double>(coeffs_.begin() + 1, coeffs_.end()));
    }

    Jet& operator+=(const Jet& o) {
        check_compatible(o);
        for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += o.coeffs_[k];
        return *this;
    }

    Jet& operator-=(const Jet& o) {
        check_compatible(o);
        for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= o.coeffs_[k];
        return *this;
    }

    Jet& operator*=(double v) noexcept {
        for (double& c : coeffs_) c *= v;
        return *this;
    }

    Jet& operator/=(double v) noexcept {
        for (double& c : coeffs_) c /= v;
        return *this;
    }

    Jet& operator+=(double v) noexcept {
        coeffs_[0] += v;
        return *this;
    }

    Jet& operator-=(double v) noexcept {
        coeffs_[0] -= v;
        return *this;
    }

    Jet& operator*=(const Jet& o) { return *this = *this * o; }
    Jet& operator/=(const Jet& o) { return *this = *this / o; }

    friend Jet operator-(Jet a) noexcept {
        a *= -1.0;
        return a;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator+(Jet a, double v) noexcept { return a += v; }
    friend Jet operator+(double v, Jet a) noexcept { return a += v; }
    friend Jet operator-(Jet a, double v) noexcept { return a -= v; }
    friend Jet operator-(double v, Jet a) noexcept { return (-std::move(a)) += v; }
    friend Jet operator*(Jet a, double v) noexcept { return a *= v; }
    friend Jet operator*(double v, Jet a) noexcept { return a *= v; }
    friend Jet operator/(Jet a, double v) noexcept { return a /= v; }

    /// Cauchy product truncated at the common order.
    friend Jet operator*(const Jet& a, const Jet& b) {
        a.check_compatible(b);
        const std::size_t n = a.coeffs_.size();
        std::vector<double> out(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i <= k; ++i) acc += a.coeffs_[i] * b.coeffs_[k - i];
            out[k] = acc;
        }
        return Jet(a.center_, std::move(out));
    }

    /// Cauchy quotient: q_k = (a_k - sum_{i<k} q_i b_{k-i}) / b_0.
    friend Jet operator/(const Jet& a, const Jet& b) {
        a.check_compatible(b);
        const double b0 = b.coeffs_[0];
        if (!(std::abs(b0) >= division_floor))
            throw DivisionBySingularJet("divisor constant term " + std::to_string(b0) + " is below the floor");
        const std::size_t n = a.coeffs_.size();
        std::vector<double> q(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            double acc = a.coeffs_[k];
            for (std::size_t i = 0; i < k; ++i) acc -= q[i] * b.coeffs_[k - i];
            q[k] = acc / b0;
        }
        return Jet(a.center_, std::move(q));
    }

    friend Jet operator/(double v, const Jet& b) { return constant(b.center_, b.order(), v) / b; }

    friend bool operator==(const Jet&, const Jet&) = default;

private:
    void check_compatible(const Jet& o) const {
        if (center_ != o.center_ || coeffs_.size() != o.coeffs_.size())
            throw JetMismatch("jets differ in center or order (" + std::to_string(center_) + "/" +
                              std::to_string(order()) + " vs " + std::to_string(o.center_) + "/" +
                              std::to_string(o.order()) + ")");
    }

    double center_;
    std::vector<double> coeffs_;
};

inline Jet add(const Jet& a, const Jet& b) { return a + b; }
inline Jet sub(const Jet& a, const Jet& b) { return a - b; }
inline Jet scale(const Jet& a, double k) { return a * k; }
inline Jet mul(const Jet& a, const Jet& b) { return a * b; }
inline Jet div(const Jet& a, const Jet& b) { return a / b; }
inline Jet deflate(const Jet& a) { return a.deflate(); }
inline double derivative_value(const Jet& a, int k) { return a.derivative_value(k); }

/// Largest per-coefficient relative discrepancy, each coefficient scaled by its own magnitude.
inline double max_relative_difference(const Jet& a, const Jet& b) {
    if (a.order() != b.order()) throw JetMismatch("order mismatch in comparison");
    double worst = 0.0;
    for (int k = 0; k <= a.order(); ++k) {
        const double x = a[static_cast<std::size_t>(k)];
        const double y = b[static_cast<std::size_t>(k)];
        const double scale = std::max(std::abs(x), std::abs(y));
        if (scale == 0.0) continue;
        worst = std::max(worst, std::abs(x - y) / scale);
    }
    return worst;
}

inline double max_absolute_difference(const Jet& a, const Jet& b) {
    if (a.order() != b.order()) throw JetMismatch("order mismatch in comparison");
    double worst = 0.0;
    for (int k = 0; k <= a.order(); ++k)
        worst = std::max(worst, std::abs(a[static_cast<std::size_t>(k)] - b[static_cast<std::size_t>(k)]));
    return worst;
}

} // namespace aoi
