#pragma once

#include <optional>
#include <vector>

#include "gridmesh/core.hpp"
#include "gridmesh/lattice.hpp"
#include "gridmesh/mesh.hpp"
#include "gridmesh/oracle.hpp"

namespace gridmesh {

// ---------------------------------------------------------------------------
// PairSample: one labeled point pair. edge_id is set for lattice-derived
// pairs only.
// ---------------------------------------------------------------------------

struct PairSample {
    Vec3 a, b;
    PairLabel label;
    EdgeId edge_id = -1;
};

struct TrainSampleOptions {
    // cube edge length as a fraction of the cloud's bounding-box long side
    int resolution = 64;
    // perturbation scales and their draw probabilities, in long-side units
    std::array<double, 3> scales{0.005, 0.01, 0.02};
    std::array<double, 3> scale_probs{0.6, 0.3, 0.1};
    int max_retries = 100;
};

// ---------------------------------------------------------------------------
// Training pairs: pick a cloud point, perturb it to q, span a cube with q as
// its reference corner, emit the cube's 12 edges labeled by the oracle.
// Cubes whose labeling hits an on-surface endpoint are redrawn.
// ---------------------------------------------------------------------------

inline std::vector<PairSample> sample_training_pairs(const PointCloud& cloud,
                                                     const ImplicitShape& shape, int count,
                                                     std::uint64_t seed,
                                                     const TrainSampleOptions& opt = {}) {
    if (count <= 0) throw UsageError("pair count must be positive");
    if (cloud.points.empty()) throw DataError("empty point cloud");

    const double long_side = cloud.bounds().longest_extent();
    if (long_side <= 0.0) throw DataError("degenerate bounding box");
    const double edge = long_side / opt.resolution;

    Rng rng(seed);
    std::vector<double> probs(opt.scale_probs.begin(), opt.scale_probs.end());
    const int cubes_needed = (count + 11) / 12;

    std::vector<PairSample> samples;
    samples.reserve(cubes_needed * 12);
    for (int c = 0; c < cubes_needed; ++c) {
        int attempt = 0;
        while (true) {
            if (attempt++ > opt.max_retries) throw Error("on-surface endpoint");
            const Vec3& p = cloud.points[rng.uniform_int(cloud.points.size())];
            double s = opt.scales[rng.pick(probs)] * long_side;
            Vec3 q = p + Vec3(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)) * s;
            std::array<PairSample, 12> cube;
            bool ok = true;
            for (int e = 0; e < 12 && ok; ++e) {
                const int* ca = CubeLattice::kCornerOffset[CubeLattice::kEdgeCorner[e][0]];
                const int* cb = CubeLattice::kCornerOffset[CubeLattice::kEdgeCorner[e][1]];
                Vec3 a = q + edge * Vec3(ca[0], ca[1], ca[2]);
                Vec3 b = q + edge * Vec3(cb[0], cb[1], cb[2]);
                try {
                    cube[e] = PairSample{a, b, shape.label_pair(a, b), -1};
                } catch (const OnSurfaceError&) {
                    ok = false;
                }
            }
            if (!ok) continue;
            for (const PairSample& s12 : cube) samples.push_back(s12);
            break;
        }
    }
    samples.resize(count);
    return samples;
}

}  // namespace gridmesh
