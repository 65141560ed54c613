#pragma once

#include <aoi/errors.hpp>
#include <aoi/jet.hpp>
#include <aoi/quadrature.hpp>

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace aoi {

struct Exponential {
    double rate;
    friend bool operator==(const Exponential&, const Exponential&) = default;
};

struct Gamma {
    double shape;
    double rate;
    friend bool operator==(const Gamma&, const Gamma&) = default;
};

struct Deterministic {
    double value;
    friend bool operator==(const Deterministic&, const Deterministic&) = default;
};

/// ln U ~ Normal(location, scale^2).
struct LogNormal {
    double location;
    double scale;
    friend bool operator==(const LogNormal&, const LogNormal&) = default;
};

namespace detail {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

inline double log_factorial(int k) { return std::lgamma(static_cast<double>(k) + 1.0); }

/// (1/k!) * integral_0^u v^k e^{t v} dv for t <= 0.
inline double tilted_partial_moment(int k, double t, double u) {
    if (u <= 0.0) return 0.0;
    const double x = -t * u;
    if (x == 0.0) return std::exp((k + 1) * std::log(u) - log_factorial(k + 1));
    // P(k+1, x) / (-t)^{k+1}; the regularized gamma keeps full relative accuracy for tiny x.
    const double p = boost::math::gamma_p(static_cast<double>(k) + 1.0, x);
    return std::exp(std::log(p) - (k + 1) * std::log(-t));
}

} // namespace detail

/// Service-time law shared by every source.
///
/// Beyond sampling and densities, the distribution exposes Taylor expansions of its
/// MGF M_U(t) = E[e^{tU}] about non-positive points. Closed forms are used for the
/// exponential, gamma and deterministic laws; the log-normal law goes through
/// Gauss-Hermite quadrature in z = (ln U - location) / scale.
class ServiceDistribution {
public:
    using Law = std::variant<Exponential, Gamma, Deterministic, LogNormal>;

    explicit ServiceDistribution(Law law) : law_(law) { validate(); }

    static ServiceDistribution exponential(double rate) { return ServiceDistribution(Exponential{rate}); }
    static ServiceDistribution gamma(double shape, double rate) { return ServiceDistribution(Gamma{shape, rate}); }
    static ServiceDistribution deterministic(double value) { return ServiceDistribution(Deterministic{value}); }
    static ServiceDistribution lognormal(double location, double scale) {
        return ServiceDistribution(LogNormal{location, scale});
    }

    const Law& law() const noexcept { return law_; }

    std::string name() const {
        return std::visit(detail::Overloaded{[](const Exponential&) { return std::string("exponential"); },
                                     [](const Gamma&) { return std::string("gamma"); },
                                     [](const Deterministic&) { return std::string("deterministic"); },
                                     [](const LogNormal&) { return std::string("lognormal"); }},
                          law_);
    }

    /// Round-trippable textual form, e.g. "lognormal(alpha=-1, omega=1)".
    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        std::visit(detail::Overloaded{[&](const Exponential& d) { os << "exponential(rate=" << d.rate << ")"; },
                              [&](const Gamma& d) { os << "gamma(shape=" << d.shape << ", rate=" << d.rate << ")"; },
                              [&](const Deterministic& d) { os << "deterministic(value=" << d.value << ")"; },
                              [&](const LogNormal& d) {
                                  os << "lognormal(alpha=" << d.location << ", omega=" << d.scale << ")";
                              }},
                   law_);
        return os.str();
    }

    double mean() const {
        return std::visit(detail::Overloaded{[](const Exponential& d) { return 1.0 / d.rate; },
                                     [](const Gamma& d) { return d.shape / d.rate; },
                                     [](const Deterministic& d) { return d.value; },
                                     [](const LogNormal& d) { return std::exp(d.location + 0.5 * d.scale * d.scale); }},
                          law_);
    }

    template <std::uniform_random_bit_generator G>
    double sample(G& g) const {
        return std::visit(detail::Overloaded{[&](const Exponential& d) { return positive([&] {
                                         return std::exponential_distribution<double>(d.rate)(g);
                                     }); },
                                     [&](const Gamma& d) { return positive([&] {
                                         return std::gamma_distribution<double>(d.shape, 1.0 / d.rate)(g);
                                     }); },
                                     [&](const Deterministic& d) { return d.value; },
                                     [&](const LogNormal& d) {
                                         return std::lognormal_distribution<double>(d.location, d.scale)(g);
                                     }},
                          law_);
    }

    double pdf(double t) const {
        return std::visit(
            detail::Overloaded{[&](const Exponential& d) { return t < 0.0 ? 0.0 : d.rate * std::exp(-d.rate * t); },
                       [&](const Gamma& d) {
                           if (t < 0.0) return 0.0;
                           if (t == 0.0) return d.shape < 1.0 ? std::numeric_limits<double>::infinity()
                                                              : (d.shape == 1.0 ? d.rate : 0.0);
                           return std::exp(d.shape * std::log(d.rate) + (d.shape - 1.0) * std::log(t) - d.rate * t -
                                           std::lgamma(d.shape));
                       },
                       [&](const Deterministic&) -> double {
                           throw UnsupportedDensity("a deterministic service time has no density");
                       },
                       [&](const LogNormal& d) {
                           if (t <= 0.0) return 0.0;
                           const double z = (std::log(t) - d.location) / d.scale;
                           return std::exp(-0.5 * z * z) / (t * d.scale * std::sqrt(2.0 * std::numbers::pi));
                       }},
            law_);
    }

    double cdf(double t) const {
        if (t <= 0.0) return 0.0;
        if (std::isinf(t)) return 1.0;
        return std::visit(detail::Overloaded{[&](const Exponential& d) { return -std::expm1(-d.rate * t); },
                                     [&](const Gamma& d) { return boost::math::gamma_p(d.shape, d.rate * t); },
                                     [&](const Deterministic& d) { return t >= d.value ? 1.0 : 0.0; },
                                     [&](const LogNormal& d) {
                                         const double z = (std::log(t) - d.location) / d.scale;
                                         return 0.5 * std::erfc(-z / std::numbers::sqrt2);
                                     }},
                          law_);
    }

    /// Whether t lies inside the MGF domain, with a relative margin before any pole.
    bool in_mgf_domain(double t) const {
        if (!std::isfinite(t)) return false;
        return std::visit(detail::Overloaded{[&](const Exponential& d) { return t + pole_margin * d.rate < d.rate; },
                                     [&](const Gamma& d) { return t + pole_margin * d.rate < d.rate; },
                                     [&](const Deterministic&) { return true; },
                                     [&](const LogNormal&) { return t <= 0.0; }},
                          law_);
    }

    /// E[e^{tU}].
    double mgf_point(double t) const {
        check_domain(t);
        if (t == 0.0) return 1.0;
        return std::visit(detail::Overloaded{[&](const Exponential& d) { return d.rate / (d.rate - t); },
                                     [&](const Gamma& d) { return std::pow(d.rate / (d.rate - t), d.shape); },
                                     [&](const Deterministic& d) { return std::exp(t * d.value); },
                                     [&](const LogNormal& d) { return lognormal_tilted_moments(d, t, 0)[0]; }},
                          law_);
    }

    /// Taylor jet of M_U about t0: coeffs[k] = E[U^k e^{t0 U}] / k!.
    ///
    /// For the log-normal law the series has zero radius of convergence at t0 = 0; the
    /// coefficients are still finite and the jet is used purely as a formal object.
    Jet mgf_jet(double t0, int order) const {
        check_domain(t0);
        std::vector<double> c(static_cast<std::size_t>(order) + 1);
        std::visit(detail::Overloaded{[&](const Exponential& d) {
                                  const double r = d.rate - t0;
                                  double v = d.rate / r;
                                  for (auto& ck : c) {
                                      ck = v;
                                      v /= r;
                                  }
                              },
                              [&](const Gamma& d) {
                                  const double r = d.rate - t0;
                                  double v = std::pow(d.rate / r, d.shape);
                                  for (std::size_t k = 0; k < c.size(); ++k) {
                                      c[k] = v;
                                      v *= (d.shape + static_cast<double>(k)) / (static_cast<double>(k + 1) * r);
                                  }
                              },
                              [&](const Deterministic& d) {
                                  double v = std::exp(t0 * d.value);
                                  for (std::size_t k = 0; k < c.size(); ++k) {
                                      c[k] = v;
                                      v *= d.value / static_cast<double>(k + 1);
                                  }
                              },
                              [&](const LogNormal& d) {
                                  if (t0 == 0.0) {
                                      for (std::size_t k = 0; k < c.size(); ++k) {
                                          const double kk = static_cast<double>(k);
                                          c[k] = std::exp(kk * d.location + 0.5 * kk * kk * d.scale * d.scale -
                                                          detail::log_factorial(static_cast<int>(k)));
                                      }
                                  } else {
                                      c = lognormal_tilted_moments(d, t0, order);
                                  }
                              }},
                   law_);
        if (t0 == 0.0) c[0] = 1.0;
        return Jet(t0, std::move(c));
    }

    /// Taylor jet about t0 of the divided difference (M_U(t) - 1) / t, which equals
    /// E[integral_0^U e^{t v} dv]: coeffs[k] = E[integral_0^U v^k e^{t0 v} dv] / k!.
    ///
    /// Expanding this quantity directly avoids dividing by (t - 0) in jet arithmetic,
    /// which loses all precision once |t0| is small.
    Jet mgf_slope_jet(double t0, int order) const {
        check_domain(t0);
        if (t0 > 0.0) throw MgfDomainError("slope jet is only provided for t0 <= 0");
        std::vector<double> c(static_cast<std::size_t>(order) + 1);
        std::visit(detail::Overloaded{[&](const Exponential& d) {
                                  const double r = d.rate - t0;
                                  double v = 1.0 / r;
                                  for (auto& ck : c) {
                                      ck = v;
                                      v /= r;
                                  }
                              },
                              [&](const Gamma& d) {
                                  if (t0 == 0.0) {
                                      // E[U^{k+1}] / (k+1)!
                                      double v = d.shape / d.rate;
                                      for (std::size_t k = 0; k < c.size(); ++k) {
                                          c[k] = v;
                                          v *= (d.shape + static_cast<double>(k + 1)) /
                                               (static_cast<double>(k + 2) * d.rate);
                                      }
                                      return;
                                  }
                                  c = quadrature::converged_expectation(
                                      c.size(), [&](int n) -> const quadrature::Rule& {
                                          return quadrature::unit_gamma(n, d.shape);
                                      },
                                      [&](double x, std::vector<double>& out) {
                                          const double u = x / d.rate;
                                          for (std::size_t k = 0; k < out.size(); ++k)
                                              out[k] = detail::tilted_partial_moment(static_cast<int>(k), t0, u);
                                      });
                              },
                              [&](const Deterministic& d) {
                                  for (std::size_t k = 0; k < c.size(); ++k)
                                      c[k] = detail::tilted_partial_moment(static_cast<int>(k), t0, d.value);
                              },
                              [&](const LogNormal& d) {
                                  if (t0 == 0.0) {
                                      for (std::size_t k = 0; k < c.size(); ++k) {
                                          const double kk = static_cast<double>(k + 1);
                                          c[k] = std::exp(kk * d.location + 0.5 * kk * kk * d.scale * d.scale -
                                                          detail::log_factorial(static_cast<int>(k + 1)));
                                      }
                                      return;
                                  }
                                  c = quadrature::converged_expectation(
                                      c.size(), quadrature::standard_normal, [&](double z, std::vector<double>& out) {
                                          const double u = std::exp(d.location + d.scale * z);
                                          for (std::size_t k = 0; k < out.size(); ++k)
                                              out[k] = detail::tilted_partial_moment(static_cast<int>(k), t0, u);
                                      });
                              }},
                   law_);
        return Jet(t0, std::move(c));
    }

    /// 1 - M_U(t) for t <= 0 without cancellation near t = 0.
    double mgf_complement(double t) const {
        if (t == 0.0) return 0.0;
        return -t * mgf_slope_jet(t, 0)[0];
    }

    friend bool operator==(const ServiceDistribution&, const ServiceDistribution&) = default;

    static constexpr double pole_margin = 1e-9;

private:
    template <class Draw>
    static double positive(Draw draw) {
        double x = draw();
        while (!(x > 0.0)) x = draw();
        return x;
    }

    void validate() const {
        auto positive_finite = [](double v) { return std::isfinite(v) && v > 0.0; };
        const bool ok = std::visit(
            detail::Overloaded{[&](const Exponential& d) { return positive_finite(d.rate); },
                       [&](const Gamma& d) { return positive_finite(d.shape) && positive_finite(d.rate); },
                       [&](const Deterministic& d) { return positive_finite(d.value); },
                       [&](const LogNormal& d) { return std::isfinite(d.location) && positive_finite(d.scale); }},
            law_);
        if (!ok) throw InvalidConfig("service distribution parameters must be finite and positive: " + describe());
    }

    void check_domain(double t) const {
        if (!in_mgf_domain(t))
            throw MgfDomainError("t = " + std::to_string(t) + " is outside the MGF domain of " + describe());
    }

    /// E[U^k e^{tU}] / k! for k = 0..order, t < 0.
    static std::vector<double> lognormal_tilted_moments(const LogNormal& d, double t, int order) {
        return quadrature::converged_expectation(
            static_cast<std::size_t>(order) + 1, quadrature::standard_normal,
            [&](double z, std::vector<double>& out) {
                const double log_u = d.location + d.scale * z;
                const double tilt = t * std::exp(log_u);
                for (std::size_t k = 0; k < out.size(); ++k)
                    out[k] = std::exp(tilt + static_cast<double>(k) * log_u - detail::log_factorial(static_cast<int>(k)));
            });
    }

    Law law_;
};

} // namespace aoi
