#include "gfmr/graph.hpp"

#include "gfmr/tensor.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace gfmr {

IncidenceGraph::IncidenceGraph(Index num_nodes, std::vector<Edge> edges)
    : num_nodes_(num_nodes), edges_(std::move(edges)) {
    if (num_nodes_ < 0) {
        throw GraphError("negative node count");
    }
    for (Edge& e : edges_) {
        if (e.u == e.v) {
            throw GraphError("self loop at node " + std::to_string(e.u));
        }
        if (e.u > e.v) std::swap(e.u, e.v);
        if (e.u < 0 || e.v >= num_nodes_) {
            std::ostringstream os;
            os << "edge (" << e.u << ", " << e.v << ") references a node outside [0, " << num_nodes_ << ")";
            throw GraphError(os.str());
        }
    }
    std::vector<Edge> sorted = edges_;
    std::sort(sorted.begin(), sorted.end(),
              [](const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
    auto dup = std::adjacent_find(sorted.begin(), sorted.end());
    if (dup != sorted.end()) {
        std::ostringstream os;
        os << "duplicate edge (" << dup->u << ", " << dup->v << ")";
        throw GraphError(os.str());
    }
    build_adjacency();
}

void IncidenceGraph::build_adjacency() {
    adj_start_.assign(static_cast<std::size_t>(num_nodes_) + 1, 0);
    for (const Edge& e : edges_) {
        ++adj_start_[e.u + 1];
        ++adj_start_[e.v + 1];
    }
    std::partial_sum(adj_start_.begin(), adj_start_.end(), adj_start_.begin());
    adj_.assign(2 * edges_.size(), Incident{0, 0});
    std::vector<Index> fill(adj_start_.begin(), adj_start_.end() - 1);
    for (Index j = 0; j < num_edges(); ++j) {
        adj_[fill[edges_[j].u]++] = {edges_[j].v, j};
        adj_[fill[edges_[j].v]++] = {edges_[j].u, j};
    }
    for (Index i = 0; i < num_nodes_; ++i) {
        std::sort(adj_.begin() + adj_start_[i], adj_.begin() + adj_start_[i + 1],
                  [](const Incident& a, const Incident& b) { return a.neighbor < b.neighbor; });
    }
}

std::vector<IncidenceGraph::Incident> IncidenceGraph::incident(Index node) const {
    return {adj_.begin() + adj_start_[node], adj_.begin() + adj_start_[node + 1]};
}

IncidenceGraph IncidenceGraph::with_flipped(const std::vector<Index>& edges_to_flip) const {
    IncidenceGraph out = *this;
    if (out.flipped_.empty()) out.flipped_.assign(edges_.size(), false);
    for (Index j : edges_to_flip) {
        if (j < 0 || j >= num_edges()) throw GraphError("edge id out of range");
        out.flipped_[j] = !out.flipped_[j];
    }
    return out;
}

IncidenceGraph grid_graph(const std::vector<Index>& dims) {
    TensorShape shape(dims);  // rejects empty or non-positive dims
    std::vector<Edge> edges;
    Index count = 0;
    for (Index k = 0; k < shape.order(); ++k) {
        count += (dims[k] - 1) * (shape.size() / dims[k]);
    }
    edges.reserve(static_cast<std::size_t>(count));
    for (Index j = 0; j < shape.size(); ++j) {
        std::vector<Index> idx = shape.multi_index(j);
        for (Index k = 0; k < shape.order(); ++k) {
            if (idx[k] + 1 < dims[k]) {
                edges.push_back({j, j + shape.stride(k)});
            }
        }
    }
    return IncidenceGraph(shape.size(), std::move(edges));
}

IncidenceGraph add_lag_edges(const IncidenceGraph& g, Index lag, Index count) {
    if (lag < 1 || count < 1) {
        throw GraphError("lag and count must be positive");
    }
    std::vector<Edge> edges = g.edges();
    for (Index i = 0; i < count; ++i) {
        edges.push_back({i, i + lag});
    }
    IncidenceGraph out(g.num_nodes(), std::move(edges));
    std::vector<Index> flips;
    for (Index j = 0; j < g.num_edges(); ++j) {
        if (g.orientation(j) < 0) flips.push_back(j);
    }
    return flips.empty() ? out : out.with_flipped(flips);
}

Vector incidence_apply(const IncidenceGraph& g, const Vector& v) {
    if (v.size() != g.num_nodes()) {
        throw ShapeError("signal length differs from node count");
    }
    Vector d(g.num_edges());
    const auto& edges = g.edges();
    for (Index j = 0; j < g.num_edges(); ++j) {
        d[j] = g.orientation(j) * (v[edges[j].u] - v[edges[j].v]);
    }
    return d;
}

Vector incidence_adjoint(const IncidenceGraph& g, const Vector& z) {
    if (z.size() != g.num_edges()) {
        throw ShapeError("edge vector length differs from edge count");
    }
    Vector out = Vector::Zero(g.num_nodes());
    const auto& edges = g.edges();
    for (Index j = 0; j < g.num_edges(); ++j) {
        const double s = g.orientation(j) * z[j];
        out[edges[j].u] += s;
        out[edges[j].v] -= s;
    }
    return out;
}

double total_variation(const IncidenceGraph& g, const Vector& v) {
    if (v.size() != g.num_nodes()) {
        throw ShapeError("signal length differs from node count");
    }
    double tv = 0.0;
    for (const Edge& e : g.edges()) tv += std::abs(v[e.u] - v[e.v]);
    return tv;
}

Index TrailDecomposition::num_positions() const {
    Index total = 0;
    for (const auto& t : trails) total += static_cast<Index>(t.size());
    return total;
}

std::vector<std::vector<Index>> connected_components(const IncidenceGraph& g) {
    std::vector<Index> label(static_cast<std::size_t>(g.num_nodes()), -1);
    std::vector<std::vector<Index>> parts;
    std::vector<Index> stack;
    for (Index s = 0; s < g.num_nodes(); ++s) {
        if (label[s] >= 0) continue;
        const Index id = static_cast<Index>(parts.size());
        parts.emplace_back();
        label[s] = id;
        stack.push_back(s);
        while (!stack.empty()) {
            Index v = stack.back();
            stack.pop_back();
            parts[id].push_back(v);
            for (const auto& inc : g.incident(v)) {
                if (label[inc.neighbor] < 0) {
                    label[inc.neighbor] = id;
                    stack.push_back(inc.neighbor);
                }
            }
        }
        std::sort(parts[id].begin(), parts[id].end());
    }
    return parts;
}

Index max_degree(const IncidenceGraph& g) {
    Index d = 0;
    for (Index i = 0; i < g.num_nodes(); ++i) d = std::max(d, g.degree(i));
    return d;
}

// Odd-degree vertices of each component are paired in ascending order by
// virtual edges, making every component Eulerian. Hierholzer's algorithm
// (smallest neighbour first) then walks each component, and the circuit is
// cut at the virtual edges.
TrailDecomposition decompose_trails(const IncidenceGraph& g) {
    const Index m = g.num_edges();
    std::vector<Edge> all = g.edges();
    for (const auto& part : connected_components(g)) {
        Index pending = -1;
        for (Index v : part) {
            if (g.degree(v) % 2 == 0) continue;
            if (pending < 0) {
                pending = v;
            } else {
                all.push_back({pending, v});
                pending = -1;
            }
        }
    }
    const Index total = static_cast<Index>(all.size());

    struct Arc {
        Index to;
        Index edge;
    };
    std::vector<std::vector<Arc>> adj(static_cast<std::size_t>(g.num_nodes()));
    for (Index e = 0; e < total; ++e) {
        adj[all[e].u].push_back({all[e].v, e});
        adj[all[e].v].push_back({all[e].u, e});
    }
    for (auto& list : adj) {
        std::sort(list.begin(), list.end(), [](const Arc& a, const Arc& b) {
            return a.to != b.to ? a.to < b.to : a.edge < b.edge;
        });
    }

    TrailDecomposition out;
    out.edge_cover.assign(static_cast<std::size_t>(m), {-1, -1});
    std::vector<char> used(static_cast<std::size_t>(total), 0);
    std::vector<std::size_t> cursor(adj.size(), 0);

    auto emit = [&](const std::vector<Index>& nodes, const std::vector<Index>& edges) {
        const Index t = static_cast<Index>(out.trails.size());
        for (std::size_t k = 0; k < edges.size(); ++k) {
            out.edge_cover[edges[k]] = {t, static_cast<Index>(k)};
        }
        out.trails.push_back(nodes);
    };

    for (const auto& part : connected_components(g)) {
        Index start = -1;
        for (Index v : part) {
            if (g.degree(v) % 2 == 1) {
                start = v;
                break;
            }
        }
        if (start < 0) {
            for (Index v : part) {
                if (g.degree(v) > 0) {
                    start = v;
                    break;
                }
            }
        }
        if (start < 0) continue;  // isolated node

        // Iterative Hierholzer. circuit_nodes[k] and circuit_edges[k] give the
        // walk in reverse; circuit_edges[k] arrives at circuit_nodes[k].
        std::vector<Index> circuit_nodes;
        std::vector<Index> circuit_edges;
        std::vector<std::pair<Index, Index>> stack{{start, -1}};
        while (!stack.empty()) {
            const Index v = stack.back().first;
            auto& list = adj[v];
            while (cursor[v] < list.size() && used[list[cursor[v]].edge]) ++cursor[v];
            if (cursor[v] < list.size()) {
                const Arc a = list[cursor[v]];
                used[a.edge] = 1;
                stack.push_back({a.to, a.edge});
            } else {
                circuit_nodes.push_back(v);
                circuit_edges.push_back(stack.back().second);
                stack.pop_back();
            }
        }
        std::reverse(circuit_nodes.begin(), circuit_nodes.end());
        std::reverse(circuit_edges.begin(), circuit_edges.end());
        // Now circuit_edges[k] (k >= 1) joins circuit_nodes[k-1] -> circuit_nodes[k].
        const std::size_t len = circuit_nodes.size() - 1;  // number of edges
        std::vector<Index> walk_edges(circuit_edges.begin() + 1, circuit_edges.end());

        std::size_t first_virtual = len;
        for (std::size_t k = 0; k < len; ++k) {
            if (walk_edges[k] >= m) {
                first_virtual = k;
                break;
            }
        }
        if (first_virtual == len) {
            emit(circuit_nodes, walk_edges);
            continue;
        }
        // Walk once around the circuit starting just after a virtual edge.
        std::vector<Index> nodes;
        std::vector<Index> edges;
        for (std::size_t step = 1; step <= len; ++step) {
            const std::size_t k = (first_virtual + step) % len;
            const Index e = walk_edges[k];
            const Index from = circuit_nodes[k];
            const Index to = circuit_nodes[k + 1];
            if (e >= m) {
                if (!edges.empty()) emit(nodes, edges);
                nodes.clear();
                edges.clear();
                continue;
            }
            if (nodes.empty()) nodes.push_back(from);
            nodes.push_back(to);
            edges.push_back(e);
        }
        if (!edges.empty()) emit(nodes, edges);
    }
    return out;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

IncidenceGraph read_edge_list(std::istream& in, std::optional<Index> num_nodes) {
    std::vector<Edge> edges;
    std::optional<Index> declared;
    Index largest = -1;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string key;
            Index value = 0;
            if (hs >> key >> value && key == "nodes") declared = value;
            continue;
        }
        std::istringstream ls(line);
        long long u = 0;
        long long v = 0;
        std::string extra;
        if (!(ls >> u >> v) || (ls >> extra)) {
            throw IoError("malformed edge on line " + std::to_string(lineno) + ": '" + line + "'");
        }
        edges.push_back({static_cast<Index>(u), static_cast<Index>(v)});
        largest = std::max<Index>(largest, std::max<Index>(u, v));
    }
    Index nodes = declared ? *declared : (num_nodes ? *num_nodes : largest + 1);
    if (declared && num_nodes && *declared != *num_nodes) {
        throw ShapeError("edge list declares " + std::to_string(*declared) + " nodes, expected " +
                         std::to_string(*num_nodes));
    }
    return IncidenceGraph(nodes, std::move(edges));
}

IncidenceGraph read_edge_list(const std::string& path, std::optional<Index> num_nodes) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open graph file " + path);
    return read_edge_list(in, num_nodes);
}

void write_edge_list(std::ostream& out, const IncidenceGraph& g) {
    out << "# nodes " << g.num_nodes() << '\n';
    for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

void write_edge_list(const std::string& path, const IncidenceGraph& g) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write graph file " + path);
    write_edge_list(out, g);
    if (!out) throw IoError("failed writing graph file " + path);
}

}  // namespace gfmr
