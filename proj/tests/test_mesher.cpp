#include <gtest/gtest.h>

#include "gridmesh/case_table.hpp"
#include "gridmesh/mesher.hpp"
#include "gridmesh/metrics.hpp"
#include "gridmesh/reconstruct.hpp"

using namespace gridmesh;

namespace {

// swap-consistent hash predictor: signs and alphas both pseudo-random but
// symmetric under endpoint exchange
class HashPredictor : public PairPredictor {
  public:
    explicit HashPredictor(std::uint64_t seed) : seed_(seed) {}

    std::vector<double> same_side_prob(const std::vector<PointPair>& pairs) override {
        std::vector<double> out(pairs.size());
        for (size_t i = 0; i < pairs.size(); ++i)
            out[i] = (pair_hash(pairs[i]) & 1) ? 0.9 : 0.1;
        return out;
    }
    std::vector<double> alpha(const std::vector<PointPair>& pairs) override {
        std::vector<double> out(pairs.size());
        for (size_t i = 0; i < pairs.size(); ++i) {
            double u = static_cast<double>(pair_hash(pairs[i]) >> 11) * 0x1.0p-53;
            out[i] = canonical(pairs[i]) ? u : 1.0 - u;
        }
        return out;
    }

  private:
    static bool canonical(const PointPair& p) {
        return std::lexicographical_compare(p.a.data(), p.a.data() + 3, p.b.data(), p.b.data() + 3);
    }
    std::uint64_t pair_hash(const PointPair& p) const {
        const Vec3& lo = canonical(p) ? p.a : p.b;
        const Vec3& hi = canonical(p) ? p.b : p.a;
        std::uint64_t h = seed_;
        for (const Vec3* v : {&lo, &hi})
            for (int c = 0; c < 3; ++c) {
                std::uint64_t bits;
                std::memcpy(&bits, &(*v)[c], 8);
                h = hash_mix(h ^ bits);
            }
        return h;
    }
    std::uint64_t seed_;
};

// marks exactly one cube edge as crossing; cyclically inconsistent on purpose
class OneEdgePredictor : public PairPredictor {
  public:
    OneEdgePredictor(Vec3 a, Vec3 b) : a_(a), b_(b) {}
    std::vector<double> same_side_prob(const std::vector<PointPair>& pairs) override {
        std::vector<double> out(pairs.size(), 1.0);
        for (size_t i = 0; i < pairs.size(); ++i) {
            bool match = ((pairs[i].a - a_).norm() < 1e-12 && (pairs[i].b - b_).norm() < 1e-12) ||
                         ((pairs[i].a - b_).norm() < 1e-12 && (pairs[i].b - a_).norm() < 1e-12);
            if (match) out[i] = 0.0;
        }
        return out;
    }
    std::vector<double> alpha(const std::vector<PointPair>& pairs) override {
        return std::vector<double>(pairs.size(), 0.25);
    }

  private:
    Vec3 a_, b_;
};

class ConstantProbPredictor : public PairPredictor {
  public:
    explicit ConstantProbPredictor(double p) : p_(p) {}
    std::vector<double> same_side_prob(const std::vector<PointPair>& pairs) override {
        return std::vector<double>(pairs.size(), p_);
    }
    std::vector<double> alpha(const std::vector<PointPair>& pairs) override {
        return std::vector<double>(pairs.size(), 0.5);
    }

  private:
    double p_;
};

}  // namespace

TEST(CaseTable, ValidatesStructurally) {
    EXPECT_NO_THROW(validate_case_table());
    EXPECT_EQ(case_table_checksum(), kCaseTableChecksum);
    // entry 0 and 255 empty
    EXPECT_EQ(case_table()[0][0], -1);
    EXPECT_EQ(case_table()[255][0], -1);
    // complementary configurations triangulate the same edge set
    for (int c = 0; c < 256; ++c) {
        std::set<int> e1, e2;
        for (int i = 0; i < 16; ++i) {
            if (case_table()[c][i] >= 0) e1.insert(case_table()[c][i]);
            if (case_table()[255 - c][i] >= 0) e2.insert(case_table()[255 - c][i]);
        }
        EXPECT_EQ(e1, e2) << "config " << c;
    }
}

TEST(SolveEdges, OracleMatchesDirectLabels) {
    ImplicitShape sphere = ImplicitShape::sphere(Vec3::Zero(), 0.4);
    PointCloud cloud = sphere.sample_surface(1500, 5);
    CubeLattice lattice = enumerate_lattice(cloud.bounds(), 24);
    std::vector<LatticeCoord> cubes = active_cubes(lattice, cloud, 2);
    OraclePredictor predictor(sphere);
    EdgeSolveResult solved = solve_edges(lattice, cubes, predictor);

    for (size_t i = 0; i < solved.size(); ++i) {
        auto [a, b] = lattice.edge_endpoints(solved.ids[i]);
        PairLabel label = predictor.robust_label({a, b});
        EXPECT_EQ(static_cast<bool>(solved.crossing[i]), !label.same_side);
        if (label.alpha) EXPECT_NEAR(solved.alpha[i], *label.alpha, 1e-12);
    }
}

TEST(SolveEdges, SharedEdgesSolvedOnce) {
    Aabb box;
    box.expand(Vec3(-0.5, -0.5, -0.5));
    box.expand(Vec3(0.5, 0.5, 0.5));
    CubeLattice lattice = enumerate_lattice(box, 4);
    std::vector<LatticeCoord> cubes = {{2, 2, 2}, {3, 2, 2}};
    ConstantProbPredictor predictor(0.9);
    EdgeSolveResult solved = solve_edges(lattice, cubes, predictor);
    EXPECT_EQ(solved.size(), 20u);  // 24 - 4 shared
}

TEST(SolveEdges, TieCountsAsNonCrossing) {
    Aabb box;
    box.expand(Vec3(-0.5, -0.5, -0.5));
    box.expand(Vec3(0.5, 0.5, 0.5));
    CubeLattice lattice = enumerate_lattice(box, 4);
    ConstantProbPredictor predictor(0.5);
    EdgeSolveResult solved = solve_edges(lattice, {{2, 2, 2}}, predictor);
    for (size_t i = 0; i < solved.size(); ++i) EXPECT_FALSE(solved.crossing[i]);
    TriangleMesh mesh = extract_mesh(lattice, {{2, 2, 2}}, solved);
    EXPECT_TRUE(mesh.empty());
}

TEST(CornerConfig, UniformSignsEmpty) {
    Aabb box;
    box.expand(Vec3(-0.5, -0.5, -0.5));
    box.expand(Vec3(0.5, 0.5, 0.5));
    CubeLattice lattice = enumerate_lattice(box, 4);
    ConstantProbPredictor same(1.0);
    EdgeSolveResult solved = solve_edges(lattice, {{1, 1, 1}}, same);
    EXPECT_EQ(corner_config(lattice, {1, 1, 1}, solved), 0);
}

TEST(CornerConfig, SphereCubeMatchesAnalyticSigns) {
    ImplicitShape sphere = ImplicitShape::sphere(Vec3::Zero(), 0.4);
    PointCloud cloud = sphere.sample_surface(2000, 7);
    CubeLattice lattice = enumerate_lattice(cloud.bounds(), 16);
    std::vector<LatticeCoord> cubes = active_cubes(lattice, cloud, 3);
    OraclePredictor predictor(sphere);
    EdgeSolveResult solved = solve_edges(lattice, cubes, predictor);

    int nonzero = 0;
    for (const LatticeCoord& cube : cubes) {
        std::uint8_t config = corner_config(lattice, cube, solved);
        // analytic signs, expressed relative to corner 0
        int anchor = sphere.sdf(lattice.corner_position(cube, 0)) < 0 ? 1 : 0;
        std::uint8_t expect = 0;
        for (int c = 0; c < 8; ++c) {
            int s = sphere.sdf(lattice.corner_position(cube, c)) < 0 ? 1 : 0;
            if (s != anchor) expect |= std::uint8_t(1) << c;
        }
        EXPECT_EQ(config, expect);
        if (config) ++nonzero;
    }
    EXPECT_GT(nonzero, 0);
}

TEST(ExtractMesh, SphereClosedManifold) {
    ImplicitShape sphere = ImplicitShape::sphere(Vec3::Zero(), 0.4);
    PointCloud cloud = sphere.sample_surface(2000, 9);
    OraclePredictor predictor(sphere);
    ReconstructOptions opt;
    opt.resolution = 32;
    opt.postprocess = false;
    ReconstructOutput out = reconstruct(cloud, predictor, opt);
    TopologyReport topo = audit_topology(out.mesh);
    EXPECT_TRUE(topo.closed_manifold());
    EXPECT_EQ(topo.euler_characteristic, 2);

    // vertices carry no error beyond the bisection tolerance
    for (const Vec3& v : out.mesh.vertices) EXPECT_LT(std::abs(sphere.sdf(v)), 1e-6);
}

TEST(ExtractMesh, TorusEulerCharacteristic) {
    ImplicitShape torus = ImplicitShape::torus(Vec3::Zero(), 0.3, 0.12);
    PointCloud cloud = torus.sample_surface(3000, 11);
    OraclePredictor predictor(torus);
    ReconstructOptions opt;
    opt.resolution = 32;
    opt.postprocess = false;
    ReconstructOutput out = reconstruct(cloud, predictor, opt);
    TopologyReport topo = audit_topology(out.mesh);
    EXPECT_TRUE(topo.closed_manifold());
    EXPECT_EQ(topo.euler_characteristic, 0);
}

TEST(ExtractMesh, OpenDiskSingleBoundaryLoop) {
    ImplicitShape disk = ImplicitShape::open_disk(Vec3::Zero(), 0.8);
    PointCloud cloud = disk.sample_surface(2000, 13);
    OraclePredictor predictor(disk);
    ReconstructOptions opt;
    opt.resolution = 32;
    opt.postprocess = false;
    ReconstructOutput out = reconstruct(cloud, predictor, opt);
    TopologyReport topo = audit_topology(out.mesh);
    EXPECT_EQ(topo.nonmanifold_edges, 0);
    EXPECT_GT(topo.boundary_edges, 0);
    EXPECT_EQ(topo.boundary_loops, 1);
}

TEST(ExtractMesh, MidAlphaPlaneIsFlat) {
    // constant alpha 0.5 with signs from a z-plane: all vertices on midplane
    class PlanePredictor : public PairPredictor {
      public:
        std::vector<double> same_side_prob(const std::vector<PointPair>& pairs) override {
            std::vector<double> out(pairs.size());
            for (size_t i = 0; i < pairs.size(); ++i) {
                bool same = (pairs[i].a.z() > 0) == (pairs[i].b.z() > 0);
                out[i] = same ? 1.0 : 0.0;
            }
            return out;
        }
        std::vector<double> alpha(const std::vector<PointPair>& pairs) override {
            return std::vector<double>(pairs.size(), 0.5);
        }
    };
    Aabb box;
    box.expand(Vec3(-0.5, -0.5, -0.5));
    box.expand(Vec3(0.5, 0.5, 0.5));
    CubeLattice lattice = enumerate_lattice(box, 8);
    std::vector<LatticeCoord> all;
    for (int k = 0; k < lattice.dims()[2]; ++k)
        for (int j = 0; j < lattice.dims()[1]; ++j)
            for (int i = 0; i < lattice.dims()[0]; ++i) all.push_back({i, j, k});
    PlanePredictor predictor;
    EdgeSolveResult solved = solve_edges(lattice, all, predictor);
    TriangleMesh mesh = extract_mesh(lattice, all, solved);
    ASSERT_FALSE(mesh.empty());
    double z0 = mesh.vertices[0].z();
    for (const Vec3& v : mesh.vertices) {
        EXPECT_DOUBLE_EQ(v.z(), z0);  // lattice-edge midpoints on the crossing layer
    }
}

TEST(ExtractMesh, CrackFreeUnderSymmetricNoise) {
    // ground-truth signs with random but swap-consistent alphas must still
    // weld every lattice edge to a single vertex
    ImplicitShape sphere = ImplicitShape::sphere(Vec3::Zero(), 0.4);
    PointCloud cloud = sphere.sample_surface(1500, 15);
    auto signs = std::make_shared<OraclePredictor>(sphere);
    RandomAlphaPredictor predictor(signs, 123);
    ReconstructOptions opt;
    opt.resolution = 24;
    opt.postprocess = false;
    ReconstructOutput out = reconstruct(cloud, predictor, opt);
    TopologyReport topo = audit_topology(out.mesh);
    EXPECT_TRUE(topo.closed_manifold());

    // no two distinct vertices within 1e-9
    std::vector<Vec3> sorted = out.mesh.vertices;
    std::sort(sorted.begin(), sorted.end(), [](const Vec3& x, const Vec3& y) {
        return std::lexicographical_compare(x.data(), x.data() + 3, y.data(), y.data() + 3);
    });
    for (size_t i = 1; i < sorted.size(); ++i)
        EXPECT_GT((sorted[i] - sorted[i - 1]).norm(), 1e-9);
}

TEST(ExtractMesh, InconsistentLabelsRepairedToManifoldPatch) {
    Aabb box;
    box.expand(Vec3(-0.5, -0.5, -0.5));
    box.expand(Vec3(0.5, 0.5, 0.5));
    CubeLattice lattice = enumerate_lattice(box, 4);
    LatticeCoord cube{2, 2, 2};
    // exactly one edge (a tree edge) crossing: a face cycle with an odd number
    // of crossings cannot come from any corner labeling
    EdgeId e0 = lattice.cube_edge_id(cube, 0);
    auto [a, b] = lattice.edge_endpoints(e0);
    OneEdgePredictor predictor(a, b);
    EdgeSolveResult solved = solve_edges(lattice, {cube}, predictor);
    TriangleMesh mesh = extract_mesh(lattice, {cube}, solved);
    ASSERT_FALSE(mesh.empty());
    TopologyReport topo = audit_topology(mesh);
    EXPECT_EQ(topo.nonmanifold_edges, 0);
    EXPECT_EQ(topo.boundary_loops, 1);  // an open patch through the cube
}

TEST(ExtractMesh, MissingEdgeSolutionThrows) {
    Aabb box;
    box.expand(Vec3(-0.5, -0.5, -0.5));
    box.expand(Vec3(0.5, 0.5, 0.5));
    CubeLattice lattice = enumerate_lattice(box, 4);
    ConstantProbPredictor predictor(0.2);
    EdgeSolveResult solved = solve_edges(lattice, {{1, 1, 1}}, predictor);
    EXPECT_THROW(extract_mesh(lattice, {{1, 1, 1}, {3, 3, 3}}, solved), Error);
}

TEST(Postprocess, FlatGridUntouched) {
    TriangleMesh grid = make_grid_plane(1.0, 8);
    TriangleMesh filtered = postprocess(grid, 10, 0.65);
    EXPECT_EQ(filtered.triangle_count(), grid.triangle_count());
}

TEST(Postprocess, FlapRemovedExactly) {
    TriangleMesh mesh = make_grid_plane(1.0, 8);
    // one perpendicular flap jutting out of the plane near the center
    int base = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(Vec3(0.01, 0.0, 0.0));
    mesh.vertices.push_back(Vec3(0.01, 0.0, 0.25));
    mesh.vertices.push_back(Vec3(0.01, 0.2, 0.12));
    mesh.triangles.push_back({base, base + 1, base + 2});
    mesh.finalize();
    const size_t flap = mesh.triangle_count() - 1;

    // hand oracle: indicator of each triangle against its 10 nearest
    PointKdTree centroids([&] {
        std::vector<Vec3> c;
        for (size_t t = 0; t < mesh.triangle_count(); ++t) c.push_back(mesh.tri_centroid(t));
        return c;
    }());
    std::vector<double> indicator(mesh.triangle_count());
    for (size_t t = 0; t < mesh.triangle_count(); ++t) {
        std::vector<int> idx;
        std::vector<double> dist;
        centroids.knn(mesh.tri_centroid(t), 11, idx, dist);
        double sum = 0;
        int used = 0;
        for (int j : idx) {
            if (j == static_cast<int>(t)) continue;
            if (used == 10) break;
            sum += std::abs(mesh.tri_normals[t].dot(mesh.tri_normals[j]));
            ++used;
        }
        indicator[t] = sum / used;
    }
    for (size_t t = 0; t < mesh.triangle_count(); ++t) {
        if (t == flap)
            EXPECT_LT(indicator[t], 0.65);
        else
            EXPECT_GE(indicator[t], 0.65);
    }

    TriangleMesh filtered = postprocess(mesh, 10, 0.65);
    EXPECT_EQ(filtered.triangle_count(), mesh.triangle_count() - 1);
    for (const Vec3& v : filtered.vertices) EXPECT_DOUBLE_EQ(v.z(), 0.0);

    // threshold 0 removes nothing
    TriangleMesh keep_all = postprocess(mesh, 10, 0.0);
    EXPECT_EQ(keep_all.triangle_count(), mesh.triangle_count());
}

TEST(Postprocess, TinyMeshClampsNeighborhood) {
    TriangleMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0.1}};
    mesh.triangles = {{0, 1, 2}, {1, 3, 2}};
    mesh.finalize();
    TriangleMesh filtered = postprocess(mesh, 10, 0.65);
    EXPECT_EQ(filtered.triangle_count(), 2u);
}

TEST(EdgeCsv, WritesAllSolvedEdges) {
    Aabb box;
    box.expand(Vec3(-0.5, -0.5, -0.5));
    box.expand(Vec3(0.5, 0.5, 0.5));
    CubeLattice lattice = enumerate_lattice(box, 4);
    ConstantProbPredictor predictor(0.9);
    EdgeSolveResult solved = solve_edges(lattice, {{1, 1, 1}}, predictor);
    auto path = std::filesystem::temp_directory_path() / "gridmesh_edges.csv";
    write_edge_csv(path.string(), lattice, solved);
    std::ifstream f(path);
    std::string line;
    int lines = 0;
    while (std::getline(f, line)) ++lines;
    EXPECT_EQ(lines, 13);  // header + 12 edges
    std::filesystem::remove(path);
}
