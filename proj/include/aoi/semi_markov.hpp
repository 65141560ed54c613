#pragma once

#include <aoi/analytic.hpp>
#include <aoi/errors.hpp>
#include <aoi/jet.hpp>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace aoi {

/// Directed graph with jet-valued edge labels and a designated start node.
///
/// The transfer function H(v) is the sum over all paths start -> v of the product of
/// edge labels along the path.
class LabeledDigraph {
public:
    struct Edge {
        std::size_t from;
        std::size_t to;
        Jet label;
    };

    std::size_t add_node(std::string name) {
        names_.push_back(std::move(name));
        return names_.size() - 1;
    }

    void add_edge(std::size_t from, std::size_t to, Jet label) {
        if (from >= names_.size() || to >= names_.size()) throw std::out_of_range("edge endpoint out of range");
        if (!edges_.empty() && (label.center() != edges_.front().label.center() ||
                                label.order() != edges_.front().label.order()))
            throw JetMismatch("edge labels must share center and order");
        if (!label.all_finite()) throw std::invalid_argument("edge label is not finite");
        edges_.push_back({from, to, std::move(label)});
    }

    void set_start(std::size_t node) {
        if (node >= names_.size()) throw std::out_of_range("start node out of range");
        start_ = node;
    }

    std::size_t start() const noexcept { return start_; }
    std::size_t node_count() const noexcept { return names_.size(); }
    const std::string& name(std::size_t v) const { return names_.at(v); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    std::size_t find(const std::string& name) const {
        for (std::size_t v = 0; v < names_.size(); ++v)
            if (names_[v] == name) return v;
        throw std::out_of_range("no node named '" + name + "'");
    }

    /// Throws std::invalid_argument if the start node has incoming edges or the graph is empty.
    void validate() const {
        if (names_.empty()) throw std::invalid_argument("graph has no nodes");
        if (edges_.empty()) throw std::invalid_argument("graph has no edges");
        for (const Edge& e : edges_)
            if (e.to == start_) throw std::invalid_argument("start node '" + names_[start_] + "' has an incoming edge");
    }

private:
    std::vector<std::string> names_;
    std::vector<Edge> edges_;
    std::size_t start_ = 0;
};

/// Solves H(start) = 1, H(v) = sum_{v'} label(v' -> v) H(v') for every node.
///
/// Dense Gaussian elimination carried out in jet arithmetic, pivoting on the largest
/// constant term in each column. A column whose best constant term is below the jet
/// division floor means some loop has unit gain at s = center, and SingularSystem is raised.
inline std::vector<Jet> transfer_functions(const LabeledDigraph& g) {
    g.validate();
    const Jet& proto = g.edges().front().label;
    const double center = proto.center();
    const int order = proto.order();
    const std::size_t n = g.node_count();
    const std::size_t u = g.start();

    // Unknown index for every node except the start.
    std::vector<std::size_t> slot(n, n);
    std::vector<std::size_t> node_of;
    for (std::size_t v = 0; v < n; ++v)
        if (v != u) {
            slot[v] = node_of.size();
            node_of.push_back(v);
        }
    const std::size_t m = node_of.size();

    std::vector<std::vector<Jet>> a(m, std::vector<Jet>(m, Jet::zero(center, order)));
    std::vector<Jet> rhs(m, Jet::zero(center, order));
    for (std::size_t i = 0; i < m; ++i) a[i][i] = Jet::constant(center, order, 1.0);
    for (const auto& e : g.edges()) {
        const std::size_t row = slot[e.to];
        if (e.from == u) rhs[row] += e.label;
        else a[row][slot[e.from]] -= e.label;
    }

    for (std::size_t col = 0; col < m; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(a[r][col][0]) > std::abs(a[pivot][col][0])) pivot = r;
        if (!(std::abs(a[pivot][col][0]) >= Jet::division_floor))
            throw SingularSystem("transfer-function system is singular at node '" + g.name(node_of[col]) + "'");
        std::swap(a[col], a[pivot]);
        std::swap(rhs[col], rhs[pivot]);
        for (std::size_t r = col + 1; r < m; ++r) {
            if (a[r][col].max_abs() == 0.0) continue;
            const Jet factor = a[r][col] / a[col][col];
            for (std::size_t k = col; k < m; ++k) a[r][k] -= factor * a[col][k];
            rhs[r] -= factor * rhs[col];
        }
    }

    std::vector<Jet> x(m, Jet::zero(center, order));
    for (std::size_t i = m; i-- > 0;) {
        Jet acc = rhs[i];
        for (std::size_t k = i + 1; k < m; ++k) acc -= a[i][k] * x[k];
        x[i] = acc / a[i][i];
    }

    std::vector<Jet> h(n, Jet::zero(center, order));
    h[u] = Jet::constant(center, order, 1.0);
    for (std::size_t i = 0; i < m; ++i) h[node_of[i]] = std::move(x[i]);
    return h;
}

/// Largest violation of h_v = sum_u label(u->v) h_u, relative to max(1, |h_v|) coefficient-wise.
inline double transfer_residual(const LabeledDigraph& g, const std::vector<Jet>& h) {
    const Jet& proto = g.edges().front().label;
    std::vector<Jet> lhs(g.node_count(), Jet::zero(proto.center(), proto.order()));
    for (const auto& e : g.edges()) lhs[e.to] += e.label * h[e.from];
    double worst = 0.0;
    for (std::size_t v = 0; v < g.node_count(); ++v)
        if (v != g.start())
            worst = std::max(worst, max_absolute_difference(lhs[v], h[v]) / std::max(1.0, h[v].max_abs()));
    return worst;
}

/// Transition probabilities and sojourn-time MGF jets of the delivery-cycle chain.
struct SojournKit {
    struct Source {
        double race = 0.0;       ///< p: this source wins the arrival race from an idle server
        double delivered = 0.0;  ///< p-bar: a packet entering service is delivered
        double preempted = 0.0;  ///< p': a packet entering service is preempted
        Jet idle;                ///< E[e^{s eta}]: idle period ending with this source's arrival
        Jet service;             ///< E[e^{s eta-bar}]: service given delivery
        Jet preemption;          ///< E[e^{s eta'}]: time to preemption given preemption
    };
    std::vector<Source> sources;
};

inline SojournKit sojourn_kit(const SystemConfig& cfg, int order) {
    cfg.validate();
    const double lambda = cfg.total_rate();
    const Jet s = Jet::variable(0.0, order);
    SojournKit kit;
    for (double rate : cfg.arrival_rates) {
        const double shift = cfg.theta * rate;
        SojournKit::Source src;
        src.race = rate / lambda;
        src.delivered = cfg.service.mgf_point(-shift);
        src.preempted = cfg.service.mgf_complement(-shift);
        src.idle = lambda / (lambda - s);
        src.service = cfg.service.mgf_jet(-shift, order).recentered(0.0) / src.delivered;
        if (shift == 0.0) {
            // Unreachable state (p' = 0); the limit convention is the unit jet.
            src.preemption = Jet::constant(0.0, order, 1.0);
        } else {
            // theta lambda (1 - M_U(s - theta lambda)) / ((theta lambda - s)(1 - M_U(-theta lambda)))
            src.preemption = shift * cfg.service.mgf_slope_jet(-shift, order).recentered(0.0) / src.preempted;
        }
        kit.sources.push_back(std::move(src));
    }
    return kit;
}

/// Node names used by build_interdeparture_graph.
inline std::string busy_node_name(std::size_t c) { return "q" + std::to_string(c + 1); }
inline constexpr const char* idle_node_name = "q0";
inline constexpr const char* other_idle_node_name = "q0'";
inline constexpr const char* delivered_node_name = "q0-bar";

/// Delivery-cycle graph for source c: start q0, busy states q1..qC, idle-after-other-delivery
/// q0', and the virtual sink q0-bar reached when a source-c packet is delivered.
inline LabeledDigraph build_interdeparture_graph(const SystemConfig& cfg, std::size_t c, int order) {
    if (c >= cfg.sources()) throw std::out_of_range("source index out of range");
    const SojournKit kit = sojourn_kit(cfg, order);
    LabeledDigraph g;
    const std::size_t q0 = g.add_node(idle_node_name);
    std::vector<std::size_t> busy;
    for (std::size_t k = 0; k < cfg.sources(); ++k) busy.push_back(g.add_node(busy_node_name(k)));
    const std::size_t q0_other = g.add_node(other_idle_node_name);
    const std::size_t q0_bar = g.add_node(delivered_node_name);
    g.set_start(q0);

    for (std::size_t k = 0; k < cfg.sources(); ++k) {
        const auto& src = kit.sources[k];
        const Jet arrive = src.race * src.idle;
        g.add_edge(q0, busy[k], arrive);
        g.add_edge(q0_other, busy[k], arrive);
        g.add_edge(busy[k], busy[k], src.preempted * src.preemption);
        g.add_edge(busy[k], k == c ? q0_bar : q0_other, src.delivered * src.service);
    }
    return g;
}

/// M_Y(s) of source c obtained by solving the delivery-cycle graph.
inline Jet interdeparture_mgf_jet_via_graph(const SystemConfig& cfg, std::size_t c, int order = Jet::default_order) {
    const LabeledDigraph g = build_interdeparture_graph(cfg, c, order);
    return transfer_functions(g)[g.find(delivered_node_name)];
}

} // namespace aoi
