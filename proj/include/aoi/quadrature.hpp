#pragma once

#include <aoi/errors.hpp>

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace aoi::quadrature {

/// Nodes and probability weights: E[f(X)] ~= sum_i weights[i] * f(nodes[i]).
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

struct FixedWorkspaceDeleter {
    void operator()(gsl_integration_fixed_workspace* w) const noexcept { gsl_integration_fixed_free(w); }
};

inline Rule build_rule(const gsl_integration_fixed_type* type, int n, double alpha, double node_scale,
                       double weight_scale) {
    std::unique_ptr<gsl_integration_fixed_workspace, FixedWorkspaceDeleter> ws(
        gsl_integration_fixed_alloc(type, static_cast<std::size_t>(n), 0.0, 1.0, alpha, 0.0));
    if (!ws) throw ConvergenceError("cannot build a quadrature rule with " + std::to_string(n) + " nodes");
    const double* x = gsl_integration_fixed_nodes(ws.get());
    const double* w = gsl_integration_fixed_weights(ws.get());
    Rule rule;
    rule.nodes.reserve(static_cast<std::size_t>(n));
    rule.weights.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // Far-tail weights underflow to zero; keeping them would turn inf * 0 into NaN.
        if (!(w[i] > 0.0)) continue;
        rule.nodes.push_back(node_scale * x[i]);
        rule.weights.push_back(weight_scale * w[i]);
    }
    return rule;
}

template <class Key, class Make>
const Rule& cached(Key key, Make make) {
    static std::mutex mutex;
    static std::map<Key, Rule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, make()).first;
    return it->second;
}

} // namespace detail

/// n-point Gauss-Hermite rule for expectations over a standard normal variable.
inline const Rule& standard_normal(int n) {
    return detail::cached(n, [n] {
        return detail::build_rule(gsl_integration_fixed_hermite, n, 0.0, std::numbers::sqrt2,
                                  1.0 / std::sqrt(std::numbers::pi));
    });
}

/// n-point generalized Gauss-Laguerre rule for expectations over Gamma(shape, 1).
inline const Rule& unit_gamma(int n, double shape) {
    return detail::cached(std::pair{n, shape}, [n, shape] {
        return detail::build_rule(gsl_integration_fixed_laguerre, n, shape - 1.0, 1.0,
                                  1.0 / std::tgamma(shape));
    });
}

inline constexpr int initial_nodes = 64;
inline constexpr int max_nodes = 4096;
inline constexpr double relative_tolerance = 1e-9;

/// Vector-valued expectation with node doubling until every component settles.
///
/// `integrand(x, out)` writes the unweighted integrand components at node x into `out`.
/// Throws ConvergenceError if the rule reaches max_nodes without settling.
template <class RuleFor, class Integrand>
std::vector<double> converged_expectation(std::size_t components, RuleFor rule_for, Integrand integrand) {
    std::vector<double> previous;
    std::vector<double> values(components);
    std::vector<double> point(components);
    for (int n = initial_nodes; n <= max_nodes; n *= 2) {
        const Rule& rule = rule_for(n);
        std::fill(values.begin(), values.end(), 0.0);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            std::fill(point.begin(), point.end(), 0.0);
            integrand(rule.nodes[i], point);
            for (std::size_t k = 0; k < components; ++k) values[k] += rule.weights[i] * point[k];
        }
        if (!previous.empty()) {
            bool settled = true;
            for (std::size_t k = 0; k < components && settled; ++k) {
                const double scale = std::max(std::abs(values[k]), std::abs(previous[k]));
                if (!std::isfinite(values[k])) settled = false;
                else if (scale > 0.0 && std::abs(values[k] - previous[k]) > relative_tolerance * scale)
                    settled = false;
            }
            if (settled) return values;
        }
        previous = values;
    }
    throw ConvergenceError("quadrature did not settle to " + std::to_string(relative_tolerance) + " within " +
                           std::to_string(max_nodes) + " nodes");
}

} // namespace aoi::quadrature
