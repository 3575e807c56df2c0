#pragma once

#include "gridmesh/lattice.hpp"
#include "gridmesh/mesher.hpp"
#include "gridmesh/predictor.hpp"

namespace gridmesh {

// ---------------------------------------------------------------------------
// End-to-end reconstruction: lattice over the cloud bounds, sparse cube
// activation around the points, per-edge solve, marching-cubes extraction,
// optional triangle filter.
// ---------------------------------------------------------------------------

struct ReconstructOptions {
    int resolution = 64;
    int dilation = 3;
    bool postprocess = true;
    int postprocess_k = 10;
    double postprocess_threshold = 0.65;
};

struct ReconstructOutput {
    TriangleMesh mesh;  // final
    CubeLattice lattice;
    EdgeSolveResult solved;
    long raw_triangles = 0;  // before the filter
};

inline ReconstructOutput reconstruct(const PointCloud& cloud, PairPredictor& predictor,
                                     const ReconstructOptions& opt = {}) {
    CubeLattice lattice = enumerate_lattice(cloud.bounds(), opt.resolution);
    std::vector<LatticeCoord> cubes = active_cubes(lattice, cloud, opt.dilation);
    EdgeSolveResult solved = solve_edges(lattice, cubes, predictor);
    TriangleMesh mesh = extract_mesh(lattice, cubes, solved);
    long raw = static_cast<long>(mesh.triangle_count());
    if (opt.postprocess && !mesh.empty())
        mesh = postprocess(mesh, opt.postprocess_k, opt.postprocess_threshold);
    return {std::move(mesh), lattice, std::move(solved), raw};
}

}  // namespace gridmesh
