#pragma once

#include "gfmr/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gfmr {

struct Edge {
    Index u = 0;  // smaller endpoint, carries +1 in D (or -1 when flipped)
    Index v = 0;
    bool operator==(const Edge&) const = default;
};

// Undirected, unweighted penalty graph. Column j of the M x m incidence
// matrix D has +1 at edges()[j].u and -1 at edges()[j].v; a per-edge
// orientation flag may swap the signs, which never changes |D^T x|.
class IncidenceGraph {
public:
    IncidenceGraph() = default;
    // Edges may be given in either orientation; they are stored with u < v.
    // Throws GraphError on self loops, duplicates or out-of-range nodes.
    IncidenceGraph(Index num_nodes, std::vector<Edge> edges);

    Index num_nodes() const { return num_nodes_; }
    Index num_edges() const { return static_cast<Index>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }
    // +1.0 for the canonical orientation, -1.0 when flipped.
    double orientation(Index j) const { return flipped_.empty() || !flipped_[j] ? 1.0 : -1.0; }
    Index degree(Index node) const { return adj_start_[node + 1] - adj_start_[node]; }

    // Neighbours of `node` in ascending order, with the id of the connecting edge.
    struct Incident {
        Index neighbor;
        Index edge;
    };
    std::vector<Incident> incident(Index node) const;

    // Copy with the sign of every edge in `edges_to_flip` reversed.
    IncidenceGraph with_flipped(const std::vector<Index>& edges_to_flip) const;

private:
    void build_adjacency();

    Index num_nodes_ = 0;
    std::vector<Edge> edges_;
    std::vector<bool> flipped_;
    std::vector<Index> adj_start_;
    std::vector<Incident> adj_;
};

// Axis-adjacent voxels of an r_1 x ... x r_m grid, nodes in vec() order.
IncidenceGraph grid_graph(const std::vector<Index>& dims);

// Adds edges (i, i + lag) for i = 0, ..., count - 1.
IncidenceGraph add_lag_edges(const IncidenceGraph& g, Index lag, Index count);

// D^T v: entry j is v[u_j] - v[v_j] (sign reversed on flipped edges).
Vector incidence_apply(const IncidenceGraph& g, const Vector& v);
// D z for z of length m.
Vector incidence_adjoint(const IncidenceGraph& g, const Vector& z);
// ||D^T v||_1
double total_variation(const IncidenceGraph& g, const Vector& v);

// Edge-disjoint trails covering every edge exactly once. A closed trail
// repeats its first node at the end.
struct TrailDecomposition {
    struct Position {
        Index trail;
        Index offset;  // edge joins trails[trail][offset] and trails[trail][offset + 1]
    };
    std::vector<std::vector<Index>> trails;
    std::vector<Position> edge_cover;  // indexed by edge id

    Index num_positions() const;
};

TrailDecomposition decompose_trails(const IncidenceGraph& g);

// Parts ordered by their smallest node; nodes ascending within a part.
std::vector<std::vector<Index>> connected_components(const IncidenceGraph& g);

Index max_degree(const IncidenceGraph& g);

// Edge-list text format: "u v" per line (0-based), '#' starts a comment.
// A "# nodes N" comment fixes the node count; otherwise `num_nodes` is
// used, falling back to 1 + the largest index seen.
IncidenceGraph read_edge_list(std::istream& in, std::optional<Index> num_nodes = std::nullopt);
IncidenceGraph read_edge_list(const std::string& path, std::optional<Index> num_nodes = std::nullopt);
void write_edge_list(std::ostream& out, const IncidenceGraph& g);
void write_edge_list(const std::string& path, const IncidenceGraph& g);

}  // namespace gfmr
