#include "tem/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace tem {

double PuBase::power_to_pu(double kw) const {
    if (s_kva <= 0.0) throw ValidationError("nonpositive power base");
    return kw / s_kva;
}
double PuBase::power_to_kw(double pu) const {
    if (s_kva <= 0.0) throw ValidationError("nonpositive power base");
    return pu * s_kva;
}
double PuBase::impedance_to_pu(double ohm) const {
    if (s_kva <= 0.0 || v_volts <= 0.0) throw ValidationError("nonpositive base");
    const double z_base = v_volts * v_volts / (s_kva * 1000.0);
    return ohm / z_base;
}
double PuBase::impedance_to_ohm(double pu) const {
    if (s_kva <= 0.0 || v_volts <= 0.0) throw ValidationError("nonpositive base");
    const double z_base = v_volts * v_volts / (s_kva * 1000.0);
    return pu * z_base;
}

void InjectionLimits::resize(std::size_t n) {
    for (auto* v : {&pg_min, &pg_max, &qg_min, &qg_max, &pl_min, &pl_max, &ql_min, &ql_max})
        v->assign(n, 0.0);
}

int NetworkModel::node_index(const std::string& name) const {
    auto it = std::find(node_names.begin(), node_names.end(), name);
    return it == node_names.end() ? -1 : static_cast<int>(it - node_names.begin());
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    // false if already joined (cycle)
    bool join(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

}  // namespace

void NetworkModel::validate_and_orient() {
    const int n = static_cast<int>(node_names.size());
    if (n == 0) throw ValidationError("network has no nodes");
    if (slack < 0 || slack >= n) throw ValidationError("no slack node designated");
    if (static_cast<int>(edges.size()) != n - 1)
        throw ValidationError("not radial: |edges| != |nodes| - 1");

    UnionFind uf(n);
    for (const auto& e : edges) {
        if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n)
            throw ValidationError("edge references unknown node");
        if (e.from == e.to) throw ValidationError("not radial: self-loop");
        if (!uf.join(e.from, e.to)) throw ValidationError("not radial: cycle detected");
        if (e.r < 0.0) throw ValidationError("negative resistance");
        if (!std::isfinite(e.x)) throw ValidationError("non-finite reactance");
        if (!(e.s_max > 0.0)) throw ValidationError("nonpositive line limit");
    }
    // |E| = n-1 and acyclic implies connected, but check explicitly so the
    // error message distinguishes a forest from a tree.
    for (int i = 0; i < n; ++i)
        if (uf.find(i) != uf.find(slack)) throw ValidationError("graph not connected");

    if (v_min.size() != static_cast<std::size_t>(n) || v_max.size() != static_cast<std::size_t>(n))
        throw ValidationError("voltage bounds missing for some node");
    for (int i = 0; i < n; ++i)
        if (!(v_min[i] > 0.0) || v_min[i] > v_max[i])
            throw ValidationError("invalid voltage bounds at node " + node_names[i]);

    auto check_pair = [&](const std::vector<double>& lo, const std::vector<double>& hi,
                          const char* what) {
        if (lo.size() != static_cast<std::size_t>(n) || hi.size() != static_cast<std::size_t>(n))
            throw ValidationError(std::string(what) + " limits missing for some node");
        for (int i = 0; i < n; ++i)
            if (lo[i] > hi[i] + 1e-15)
                throw ValidationError(std::string(what) + " limit min > max at node " + node_names[i]);
    };
    check_pair(limits.pg_min, limits.pg_max, "P_G");
    check_pair(limits.qg_min, limits.qg_max, "Q_G");
    check_pair(limits.pl_min, limits.pl_max, "P_L");
    check_pair(limits.ql_min, limits.ql_max, "Q_L");
    if (is_smo.size() != static_cast<std::size_t>(n)) is_smo.assign(n, false);

    // Orient the tree away from the slack.
    std::vector<std::vector<int>> adj(n);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        adj[edges[k].from].push_back(static_cast<int>(k));
        adj[edges[k].to].push_back(static_cast<int>(k));
    }
    parent_edge.assign(n, -1);
    child_edges.assign(n, {});
    std::vector<char> seen(n, 0);
    std::deque<int> queue{slack};
    seen[slack] = 1;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int k : adj[u]) {
            Edge& e = edges[k];
            const int w = (e.from == u) ? e.to : e.from;
            if (seen[w]) continue;
            seen[w] = 1;
            if (e.from != u) std::swap(e.from, e.to);  // upstream first
            parent_edge[w] = k;
            child_edges[u].push_back(k);
            queue.push_back(w);
        }
    }
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

double parse_num(const std::string& tok, const std::string& origin, int lineno) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError(origin + ":" + std::to_string(lineno) + ": expected number, got '" + tok + "'");
    }
}

}  // namespace

NetworkModel parse_network(const std::string& text, const std::string& origin) {
    NetworkModel net;
    PuBase base;
    enum class Section { None, Nodes, Edges, Limits, Smo };
    Section section = Section::None;
    std::unordered_map<std::string, int> index;
    struct RawEdge {
        std::string from, to;
        double r_ohm, x_ohm, smax_kva;
        int lineno;
    };
    std::vector<RawEdge> raw_edges;
    std::vector<std::string> smo_names;
    struct RawLimit {
        std::string node;
        double v[8];
        int lineno;
    };
    std::vector<RawLimit> raw_limits;
    bool saw_version = false;

    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        const std::string& head = toks[0];
        if (head == "[nodes]") { section = Section::Nodes; continue; }
        if (head == "[edges]") { section = Section::Edges; continue; }
        if (head == "[limits]") { section = Section::Limits; continue; }
        if (head == "[smo]") { section = Section::Smo; continue; }
        if (head.front() == '[')
            throw ParseError(origin + ":" + std::to_string(lineno) + ": unknown section " + head);

        if (section == Section::None) {
            if (head == "format_version") {
                if (toks.size() != 2 || toks[1] != "1")
                    throw ParseError(origin + ":" + std::to_string(lineno) + ": unsupported format_version");
                saw_version = true;
            } else if (head == "base_power_kva") {
                if (toks.size() != 2) throw ParseError(origin + ": malformed base_power_kva");
                base.s_kva = parse_num(toks[1], origin, lineno);
            } else if (head == "base_voltage_v") {
                if (toks.size() != 3) throw ParseError(origin + ": base_voltage_v wants <level> <volts>");
                net.base_voltage_v.emplace_back(toks[1], parse_num(toks[2], origin, lineno));
            } else {
                throw ParseError(origin + ":" + std::to_string(lineno) + ": unexpected '" + head + "' before first section");
            }
            continue;
        }

        switch (section) {
            case Section::Nodes: {
                // name vmin_pu vmax_pu [slack]
                if (toks.size() != 3 && !(toks.size() == 4 && toks[3] == "slack"))
                    throw ParseError(origin + ":" + std::to_string(lineno) + ": malformed node line");
                if (index.count(head))
                    throw ParseError(origin + ":" + std::to_string(lineno) + ": duplicate node " + head);
                const int id = static_cast<int>(net.node_names.size());
                index[head] = id;
                net.node_names.push_back(head);
                const double vmin = parse_num(toks[1], origin, lineno);
                const double vmax = parse_num(toks[2], origin, lineno);
                net.v_min.push_back(vmin * vmin);  // file carries magnitudes
                net.v_max.push_back(vmax * vmax);
                if (toks.size() == 4) {
                    if (net.slack >= 0)
                        throw ValidationError(origin + ": more than one slack node");
                    net.slack = id;
                }
                break;
            }
            case Section::Edges: {
                if (toks.size() != 5)
                    throw ParseError(origin + ":" + std::to_string(lineno) + ": malformed edge line");
                raw_edges.push_back({toks[0], toks[1], parse_num(toks[2], origin, lineno),
                                     parse_num(toks[3], origin, lineno),
                                     parse_num(toks[4], origin, lineno), lineno});
                break;
            }
            case Section::Limits: {
                if (toks.size() != 9)
                    throw ParseError(origin + ":" + std::to_string(lineno) + ": limits line wants node + 8 values");
                RawLimit rl;
                rl.node = toks[0];
                rl.lineno = lineno;
                for (int k = 0; k < 8; ++k) rl.v[k] = parse_num(toks[k + 1], origin, lineno);
                raw_limits.push_back(rl);
                break;
            }
            case Section::Smo:
                if (toks.size() != 1)
                    throw ParseError(origin + ":" + std::to_string(lineno) + ": malformed smo line");
                smo_names.push_back(head);
                break;
            case Section::None:
                break;
        }
    }

    if (!saw_version) throw ParseError(origin + ": missing format_version header");
    if (base.s_kva <= 0.0) throw ValidationError(origin + ": missing or nonpositive base_power_kva");
    if (net.base_voltage_v.empty()) throw ValidationError(origin + ": missing base_voltage_v header");
    base.v_volts = net.base_voltage_v.front().second;
    net.base_power_kva = base.s_kva;

    const int n = static_cast<int>(net.node_names.size());
    net.limits.resize(n);
    net.is_smo.assign(n, false);

    auto lookup = [&](const std::string& name, int ln) {
        auto it = index.find(name);
        if (it == index.end())
            throw ParseError(origin + ":" + std::to_string(ln) + ": unknown node " + name);
        return it->second;
    };

    for (const auto& re : raw_edges) {
        Edge e;
        e.from = lookup(re.from, re.lineno);
        e.to = lookup(re.to, re.lineno);
        e.r = base.impedance_to_pu(re.r_ohm);
        e.x = base.impedance_to_pu(re.x_ohm);
        e.s_max = base.power_to_pu(re.smax_kva);
        net.edges.push_back(e);
    }
    for (const auto& rl : raw_limits) {
        const int i = lookup(rl.node, rl.lineno);
        net.limits.pg_min[i] = base.power_to_pu(rl.v[0]);
        net.limits.pg_max[i] = base.power_to_pu(rl.v[1]);
        net.limits.qg_min[i] = base.power_to_pu(rl.v[2]);
        net.limits.qg_max[i] = base.power_to_pu(rl.v[3]);
        net.limits.pl_min[i] = base.power_to_pu(rl.v[4]);
        net.limits.pl_max[i] = base.power_to_pu(rl.v[5]);
        net.limits.ql_min[i] = base.power_to_pu(rl.v[6]);
        net.limits.ql_max[i] = base.power_to_pu(rl.v[7]);
    }
    for (const auto& s : smo_names) net.is_smo[lookup(s, 0)] = true;

    net.validate_and_orient();
    return net;
}

NetworkModel load_network(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open network file: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_network(buf.str(), path);
}

NetworkModel make_network(int n_nodes, const std::vector<Edge>& edges, int slack,
                          double v_min_pu_sq, double v_max_pu_sq, double base_power_kva) {
    NetworkModel net;
    net.node_names.reserve(n_nodes);
    for (int i = 0; i < n_nodes; ++i) net.node_names.push_back("n" + std::to_string(i));
    net.edges = edges;
    net.slack = slack;
    net.v_min.assign(n_nodes, v_min_pu_sq);
    net.v_max.assign(n_nodes, v_max_pu_sq);
    net.base_power_kva = base_power_kva;
    net.base_voltage_v.emplace_back("primary", 4160.0);
    net.is_smo.assign(n_nodes, false);
    net.limits.resize(n_nodes);
    net.validate_and_orient();
    return net;
}

}  // namespace tem
