#pragma once
// Radial feeder model: graph, per-unit system, network file ingestion.

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tem {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Base quantities for per-unit conversion.
struct PuBase {
    double s_kva = 0.0;   // power base, kVA
    double v_volts = 0.0; // line voltage base, V

    double power_to_pu(double kw) const;
    double power_to_kw(double pu) const;
    double impedance_to_pu(double ohm) const;
    double impedance_to_ohm(double pu) const;
};

struct Edge {
    int from = -1;  // upstream node index
    int to = -1;    // downstream node index
    double r = 0.0;      // resistance, p.u.
    double x = 0.0;      // reactance, p.u.
    double s_max = 0.0;  // apparent-power limit, p.u.
};

// Per-node generation/load injection boxes, p.u.
struct InjectionLimits {
    std::vector<double> pg_min, pg_max, qg_min, qg_max;
    std::vector<double> pl_min, pl_max, ql_min, ql_max;

    void resize(std::size_t n);
};

// Immutable after construction; voltages are squared magnitudes (v = |V|^2).
struct NetworkModel {
    std::vector<std::string> node_names;
    std::vector<Edge> edges;
    int slack = -1;
    std::vector<double> v_min, v_max;  // squared-magnitude bounds, p.u.
    double base_power_kva = 0.0;
    std::vector<std::pair<std::string, double>> base_voltage_v;
    std::vector<bool> is_smo;
    InjectionLimits limits;

    // Derived orientation, rooted at the slack: parent_edge[i] is the index
    // into edges of node i's upstream edge (-1 for the slack); edges are
    // re-oriented so that `from` is always the upstream endpoint.
    std::vector<int> parent_edge;
    std::vector<std::vector<int>> child_edges;

    std::size_t node_count() const { return node_names.size(); }
    std::size_t edge_count() const { return edges.size(); }
    int node_index(const std::string& name) const;  // -1 if unknown

    // Checks all structural invariants; throws ValidationError naming the
    // first violated one. Called by load_network and make_network.
    void validate_and_orient();
};

// Parse and validate a network file (schema in docs/formats.md).
NetworkModel load_network(const std::string& path);
NetworkModel parse_network(const std::string& text, const std::string& origin);

// Programmatic construction used by tests and fixture generators.
// Edges given as (from,to,R,X,Smax) in p.u.; limits default to all-zero boxes.
NetworkModel make_network(int n_nodes, const std::vector<Edge>& edges, int slack,
                          double v_min_pu_sq = 0.9025, double v_max_pu_sq = 1.1025,
                          double base_power_kva = 10000.0);

}  // namespace tem
