#pragma once

#include <chrono>
#include <optional>

#include <nlohmann/json.hpp>

#include "gridmesh/core.hpp"
#include "gridmesh/lattice.hpp"
#include "gridmesh/mesh.hpp"
#include "gridmesh/mesher.hpp"
#include "gridmesh/oracle.hpp"
#include "gridmesh/spatial.hpp"

namespace gridmesh {

// Nearest neighbors are selected under the Euclidean metric; the reported
// summand is the L1 norm of the displacement. Exposed for the record.
inline constexpr const char* kNnMetric = "euclidean";

namespace detail {

// per-point L1 displacement to the Euclidean-nearest neighbor in `other`
inline std::vector<double> nn_l1(const PointCloud& from, const PointKdTree& other) {
    std::vector<double> out(from.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(from.size()); ++i) {
        auto [idx, dist] = other.nearest(from.points[i]);
        out[i] = (from.points[i] - other.point(idx)).cwiseAbs().sum();
    }
    return out;
}

inline std::vector<double> nn_normal_dot(const PointCloud& from, const PointCloud& to,
                                         const PointKdTree& to_tree) {
    std::vector<double> out(from.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(from.size()); ++i) {
        auto [idx, dist] = to_tree.nearest(from.points[i]);
        out[i] = std::abs(from.normals[i].dot(to.normals[idx]));
    }
    return out;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Chamfer-L1: symmetric mean of L1 displacements between nearest-neighbor
// pairs, each direction weighted 1/(2N).
// ---------------------------------------------------------------------------

inline double chamfer_l1(const PointCloud& x, const PointCloud& y) {
    if (x.points.empty() || y.points.empty()) throw DataError("empty point cloud");
    PointKdTree tx(x.points), ty(y.points);
    return 0.5 * detail::mean(detail::nn_l1(x, ty)) + 0.5 * detail::mean(detail::nn_l1(y, tx));
}

// ---------------------------------------------------------------------------
// Normal consistency: symmetric mean absolute cosine between the normals of
// nearest-neighbor pairs. Absolute value because meshes are unoriented.
// ---------------------------------------------------------------------------

inline double normal_consistency(const PointCloud& x, const PointCloud& y) {
    if (x.points.empty() || y.points.empty()) throw DataError("empty point cloud");
    if (!x.has_normals() || !y.has_normals()) throw DataError("normals required");
    PointKdTree tx(x.points), ty(y.points);
    return 0.5 * detail::mean(detail::nn_normal_dot(x, y, ty)) +
           0.5 * detail::mean(detail::nn_normal_dot(y, x, tx));
}

// brute-force references for tests
inline double chamfer_l1_brute(const PointCloud& x, const PointCloud& y) {
    auto one_way = [](const PointCloud& from, const PointCloud& to) {
        double s = 0.0;
        for (const Vec3& p : from.points) {
            auto [idx, dist] = brute_force_nearest(to.points, p);
            s += (p - to.points[idx]).cwiseAbs().sum();
        }
        return s / static_cast<double>(from.size());
    };
    return 0.5 * one_way(x, y) + 0.5 * one_way(y, x);
}

inline double normal_consistency_brute(const PointCloud& x, const PointCloud& y) {
    auto one_way = [](const PointCloud& from, const PointCloud& to) {
        double s = 0.0;
        for (size_t i = 0; i < from.size(); ++i) {
            auto [idx, dist] = brute_force_nearest(to.points, from.points[i]);
            s += std::abs(from.normals[i].dot(to.normals[idx]));
        }
        return s / static_cast<double>(from.size());
    };
    return 0.5 * one_way(x, y) + 0.5 * one_way(y, x);
}

// ---------------------------------------------------------------------------
// Intersection distance: over edges where both solutions report a crossing,
// the mean |alpha difference| scaled to lattice units, i.e. multiplied by the
// edge length and by the lattice resolution.
// ---------------------------------------------------------------------------

inline double intersection_distance(const EdgeSolveResult& predicted, const EdgeSolveResult& truth,
                                    const CubeLattice& lattice, int resolution) {
    double sum = 0.0;
    long common = 0;
    for (size_t i = 0; i < predicted.size(); ++i) {
        if (!predicted.crossing[i]) continue;
        int j = truth.find(predicted.ids[i]);
        if (j < 0 || !truth.crossing[j]) continue;
        sum += std::abs(predicted.alpha[i] - truth.alpha[j]) * lattice.cell() * resolution;
        ++common;
    }
    if (common == 0) throw DataError("no comparable edges");
    return sum / static_cast<double>(common);
}

// ---------------------------------------------------------------------------
// EvalReport
// ---------------------------------------------------------------------------

struct EvalReport {
    double cd1 = 0.0;
    double nc = 0.0;
    std::optional<double> intersection_distance;
    int samples = 0;
    std::uint64_t seed = 0;
    double seconds = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json j{{"cd1", cd1},         {"nc", nc},           {"samples", samples},
                         {"seed", seed},       {"seconds", seconds}, {"nn_metric", kNnMetric}};
        if (intersection_distance) j["intersection_distance"] = *intersection_distance;
        return j;
    }
};

inline EvalReport evaluate(const TriangleMesh& reconstructed, const ImplicitShape& ground_truth,
                           int n_samples = 20000, std::uint64_t seed = 0) {
    if (reconstructed.empty()) throw DataError("empty mesh");
    auto t0 = std::chrono::steady_clock::now();
    // one derived seed for both samplings: evaluating a mesh against itself
    // then draws identical clouds and scores exactly (0, 1)
    std::uint64_t sample_seed = Rng(seed).raw();
    PointCloud rec = sample_surface_points(reconstructed, n_samples, sample_seed);
    PointCloud gt = ground_truth.sample_surface(n_samples, sample_seed);
    EvalReport report;
    report.cd1 = chamfer_l1(gt, rec);
    report.nc = normal_consistency(gt, rec);
    report.samples = n_samples;
    report.seed = seed;
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

inline EvalReport evaluate(const TriangleMesh& reconstructed, const TriangleMesh& ground_truth,
                           int n_samples = 20000, std::uint64_t seed = 0) {
    return evaluate(reconstructed, ImplicitShape::triangle_soup(ground_truth), n_samples, seed);
}

}  // namespace gridmesh
