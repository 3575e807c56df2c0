#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridmesh/case_table.hpp"
#include "gridmesh/core.hpp"
#include "gridmesh/lattice.hpp"
#include "gridmesh/mesh.hpp"
#include "gridmesh/predictor.hpp"
#include "gridmesh/spatial.hpp"

namespace gridmesh {

// Vertex placement keeps alpha strictly inside (0,1) so no marching-cubes
// vertex ever coincides with a lattice corner.
constexpr double kAlphaClamp = 1e-7;

// ---------------------------------------------------------------------------
// Edge solving: every unique lattice edge of the active cubes is evaluated
// once, in canonical endpoint order. An edge crosses when the same-side
// probability is below 0.5 (a tie counts as non-crossing); alpha is queried
// only for crossing edges, all others default to the midpoint.
// ---------------------------------------------------------------------------

struct EdgeSolveResult {
    std::vector<EdgeId> ids;      // ascending
    std::vector<double> prob;     // same-side probability
    std::vector<char> crossing;
    std::vector<double> alpha;    // canonical orientation; 0.5 where not crossing

    int find(EdgeId id) const {
        auto it = std::lower_bound(ids.begin(), ids.end(), id);
        if (it == ids.end() || *it != id) return -1;
        return static_cast<int>(it - ids.begin());
    }
    size_t size() const { return ids.size(); }
};

inline EdgeSolveResult solve_edges(const CubeLattice& lattice,
                                   const std::vector<LatticeCoord>& cubes,
                                   PairPredictor& predictor) {
    EdgeSolveResult result;
    result.ids.reserve(cubes.size() * 12);
    for (const LatticeCoord& cube : cubes)
        for (int e = 0; e < 12; ++e) result.ids.push_back(lattice.cube_edge_id(cube, e));
    std::sort(result.ids.begin(), result.ids.end());
    result.ids.erase(std::unique(result.ids.begin(), result.ids.end()), result.ids.end());

    const size_t n = result.ids.size();
    std::vector<PointPair> pairs(n);
    for (size_t i = 0; i < n; ++i) {
        auto [a, b] = lattice.edge_endpoints(result.ids[i]);
        pairs[i] = {a, b};
    }
    std::vector<double> probs = predictor.same_side_prob(pairs);

    result.prob = std::move(probs);
    result.crossing.resize(n);
    result.alpha.assign(n, 0.5);
    std::vector<PointPair> crossing_pairs;
    std::vector<size_t> crossing_idx;
    for (size_t i = 0; i < n; ++i) {
        result.crossing[i] = result.prob[i] < 0.5 ? 1 : 0;
        if (result.crossing[i]) {
            crossing_pairs.push_back(pairs[i]);
            crossing_idx.push_back(i);
        }
    }
    std::vector<double> alphas = predictor.alpha(crossing_pairs);
    for (size_t j = 0; j < crossing_idx.size(); ++j) result.alpha[crossing_idx[j]] = alphas[j];
    return result;
}

// ---------------------------------------------------------------------------
// Corner configuration: relative signs are propagated from the anchor corner
// (the cube's reference corner, bit 0) along a fixed spanning tree of cube
// edges. Redundant edges never influence the configuration, which makes
// cyclically inconsistent predictions yield a usable labeling; their alphas
// are still honored where the configuration references them.
// ---------------------------------------------------------------------------

inline std::uint8_t corner_config(const CubeLattice& lattice, const LatticeCoord& cube,
                                  const EdgeSolveResult& solved) {
    int bits[8] = {0};
    for (const auto& row : CubeLattice::kSignTree) {
        int idx = solved.find(lattice.cube_edge_id(cube, row[2]));
        if (idx < 0) throw Error("incoherent solve");
        bits[row[0]] = bits[row[1]] ^ (solved.crossing[idx] ? 1 : 0);
    }
    std::uint8_t config = 0;
    for (int c = 0; c < 8; ++c)
        if (bits[c]) config |= std::uint8_t(1) << c;
    return config;
}

// ---------------------------------------------------------------------------
// Mesh extraction. One vertex per referenced lattice edge, placed at
// a + alpha (b - a) in canonical order and shared by every incident triangle,
// so matching per-edge predictions can never produce a crack.
// ---------------------------------------------------------------------------

inline TriangleMesh extract_mesh(const CubeLattice& lattice, const std::vector<LatticeCoord>& cubes,
                                 const EdgeSolveResult& solved) {
    TriangleMesh mesh;
    std::unordered_map<EdgeId, int> vertex_of_edge;
    vertex_of_edge.reserve(solved.size());

    auto vertex_for = [&](EdgeId id) {
        auto it = vertex_of_edge.find(id);
        if (it != vertex_of_edge.end()) return it->second;
        int idx = solved.find(id);
        if (idx < 0) throw Error("incoherent solve");
        auto [a, b] = lattice.edge_endpoints(id);
        double alpha = solved.crossing[idx]
                           ? std::clamp(solved.alpha[idx], kAlphaClamp, 1.0 - kAlphaClamp)
                           : 0.5;
        int v = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(a + alpha * (b - a));
        vertex_of_edge.emplace(id, v);
        return v;
    };

    for (const LatticeCoord& cube : cubes) {
        std::uint8_t config = corner_config(lattice, cube, solved);
        const auto& row = case_table()[config];
        for (int t = 0; t < 16 && row[t] >= 0; t += 3) {
            int v0 = vertex_for(lattice.cube_edge_id(cube, row[t]));
            int v1 = vertex_for(lattice.cube_edge_id(cube, row[t + 1]));
            int v2 = vertex_for(lattice.cube_edge_id(cube, row[t + 2]));
            mesh.triangles.push_back({v0, v1, v2});
        }
    }
    mesh.finalize();
    return mesh;
}

// ---------------------------------------------------------------------------
// Triangle filter: a triangle is kept when the mean absolute cosine between
// its normal and the normals of its k nearest triangles (by centroid) stays
// at or above the threshold. Computed in a single pass against the input
// mesh; removals do not cascade. Degenerate triangles have no normal and are
// dropped.
// ---------------------------------------------------------------------------

inline TriangleMesh postprocess(const TriangleMesh& mesh, int k = 10, double threshold = 0.65) {
    if (mesh.empty()) throw DataError("empty mesh");
    std::vector<int> solid;  // non-degenerate triangle indices
    std::vector<Vec3> centroids;
    for (size_t t = 0; t < mesh.triangle_count(); ++t) {
        if (mesh.tri_degenerate[t]) continue;
        solid.push_back(static_cast<int>(t));
        centroids.push_back(mesh.tri_centroid(t));
    }

    std::vector<char> keep(mesh.triangle_count(), 0);
    if (!solid.empty()) {
        PointKdTree tree(centroids);
        int k_eff = std::min<int>(k, static_cast<int>(solid.size()) - 1);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(solid.size()); ++s) {
            if (k_eff <= 0) {
                keep[solid[s]] = 1;
                continue;
            }
            std::vector<int> idx;
            std::vector<double> dist;
            tree.knn(centroids[s], k_eff + 1, idx, dist);
            const Vec3& n = mesh.tri_normals[solid[s]];
            double indicator = 0.0;
            int used = 0;
            for (int j = 0; j < static_cast<int>(idx.size()) && used < k_eff; ++j) {
                if (idx[j] == static_cast<int>(s)) continue;
                indicator += std::abs(n.dot(mesh.tri_normals[solid[idx[j]]]));
                ++used;
            }
            indicator /= used;
            keep[solid[s]] = indicator >= threshold ? 1 : 0;
        }
    }

    TriangleMesh out;
    std::vector<int> remap(mesh.vertices.size(), -1);
    for (size_t t = 0; t < mesh.triangle_count(); ++t) {
        if (!keep[t]) continue;
        std::array<int, 3> tri;
        for (int c = 0; c < 3; ++c) {
            int v = mesh.triangles[t][c];
            if (remap[v] < 0) {
                remap[v] = static_cast<int>(out.vertices.size());
                out.vertices.push_back(mesh.vertices[v]);
            }
            tri[c] = remap[v];
        }
        out.triangles.push_back(tri);
    }
    out.finalize();
    return out;
}

// ---------------------------------------------------------------------------
// Topology audit
// ---------------------------------------------------------------------------

struct TopologyReport {
    long vertices = 0;
    long triangles = 0;
    long edges = 0;
    long boundary_edges = 0;     // incident to exactly one triangle
    long interior_edges = 0;     // exactly two
    long nonmanifold_edges = 0;  // more than two
    long boundary_loops = 0;     // connected components of the boundary graph
    long euler_characteristic = 0;

    bool closed_manifold() const { return boundary_edges == 0 && nonmanifold_edges == 0; }

    nlohmann::json to_json() const {
        return {{"vertices", vertices},
                {"triangles", triangles},
                {"edges", edges},
                {"boundary_edges", boundary_edges},
                {"interior_edges", interior_edges},
                {"nonmanifold_edges", nonmanifold_edges},
                {"boundary_loops", boundary_loops},
                {"euler_characteristic", euler_characteristic},
                {"closed_manifold", closed_manifold()}};
    }
};

inline TopologyReport audit_topology(const TriangleMesh& mesh) {
    TopologyReport report;
    report.vertices = static_cast<long>(mesh.vertices.size());
    report.triangles = static_cast<long>(mesh.triangle_count());
    std::map<std::pair<int, int>, int> edge_use;
    for (const auto& tri : mesh.triangles)
        for (int c = 0; c < 3; ++c) {
            int a = tri[c], b = tri[(c + 1) % 3];
            edge_use[{std::min(a, b), std::max(a, b)}]++;
        }
    report.edges = static_cast<long>(edge_use.size());
    std::vector<std::pair<int, int>> boundary;
    for (const auto& [edge, count] : edge_use) {
        if (count == 1) {
            ++report.boundary_edges;
            boundary.push_back(edge);
        } else if (count == 2) {
            ++report.interior_edges;
        } else {
            ++report.nonmanifold_edges;
        }
    }
    report.euler_characteristic = report.vertices - report.edges + report.triangles;

    // union-find over boundary edges
    std::unordered_map<int, int> parent;
    std::function<int(int)> find = [&](int v) {
        auto it = parent.find(v);
        if (it == parent.end()) {
            parent[v] = v;
            return v;
        }
        if (it->second != v) it->second = find(it->second);
        return parent[v];
    };
    for (const auto& [a, b] : boundary) parent[find(a)] = find(b);
    std::set<int> roots;
    for (const auto& [v, p] : parent) roots.insert(find(v));
    report.boundary_loops = static_cast<long>(roots.size());
    return report;
}

// debug dump: one row per solved edge
inline void write_edge_csv(const std::string& path, const CubeLattice& lattice,
                           const EdgeSolveResult& solved) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write " + path);
    f << "edge_id,ax,ay,az,bx,by,bz,crossing,alpha\n";
    char buf[256];
    for (size_t i = 0; i < solved.size(); ++i) {
        auto [a, b] = lattice.edge_endpoints(solved.ids[i]);
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n",
                      static_cast<long long>(solved.ids[i]), a.x(), a.y(), a.z(), b.x(), b.y(),
                      b.z(), solved.crossing[i] ? 1 : 0, solved.alpha[i]);
        f << buf;
    }
}

}  // namespace gridmesh
