// Acceptance criteria gate. Each test prints one [A#] PASS/FAIL line.

#include <gtest/gtest.h>

#include <chrono>

#include "gridmesh/metrics.hpp"
#include "gridmesh/reconstruct.hpp"
#include "gridmesh/toy2d.hpp"
#include "gridmesh/trainer.hpp"
#include "support.hpp"

using namespace gridmesh;

namespace {

struct Criterion {
    const char* id;
    const char* what;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    ~Criterion() {
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %s: %s (%.1fs)\n", id,
                    ::testing::Test::HasFailure() ? "FAIL" : "PASS", what, secs);
        std::fflush(stdout);
    }
};

ReconstructOutput oracle_recon(const ImplicitShape& shape, int res, int cloud_n,
                               std::uint64_t seed) {
    PointCloud cloud = shape.sample_surface(cloud_n, seed);
    OraclePredictor predictor(shape);
    ReconstructOptions opt;
    opt.resolution = res;
    opt.postprocess = false;
    return reconstruct(cloud, predictor, opt);
}

}  // namespace

TEST(Acceptance, A1_SymmetrySuite) {
    Criterion c{"A1", "pair-head symmetry: |G(a,b)-G(b,a)| and |H(a,b)+H(b,a)-1| below 1e-6"};
    Rng rng(2024);
    int draws = 0;
    for (int m = 0; m < 25; ++m) {
        ModelConfig cfg;
        cfg.feature_dim = 32;
        PairModel model(cfg, rng.raw());
        for (int i = 0; i < 40; ++i) {
            VectorXd fa = VectorXd::NullaryExpr(32, [&](int) { return rng.uniform(-3, 3); });
            VectorXd fb = VectorXd::NullaryExpr(32, [&](int) { return rng.uniform(-3, 3); });
            Vec3 a(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
            Vec3 b(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
            ASSERT_LT(std::abs(model.predict_same_side(fa, fb, a, b) -
                               model.predict_same_side(fb, fa, b, a)),
                      1e-6);
            ASSERT_LT(std::abs(model.predict_alpha(fa, fb, a, b) +
                               model.predict_alpha(fb, fa, b, a) - 1.0),
                      1e-6);
            ++draws;
        }
    }
    ASSERT_EQ(draws, 1000);
}

TEST(Acceptance, A2_ContinuityCrackFreeness) {
    Criterion c{"A2", "ground-truth reconstructions: closed sphere/torus, one disk boundary loop"};
    {
        ImplicitShape sphere = ImplicitShape::sphere(Vec3::Zero(), 0.4);
        TopologyReport topo = audit_topology(oracle_recon(sphere, 64, 3000, 11).mesh);
        EXPECT_TRUE(topo.closed_manifold());
        EXPECT_EQ(topo.euler_characteristic, 2);
    }
    {
        ImplicitShape torus = ImplicitShape::torus(Vec3::Zero(), 0.3, 0.12);
        TopologyReport topo = audit_topology(oracle_recon(torus, 64, 3000, 13).mesh);
        EXPECT_TRUE(topo.closed_manifold());
        EXPECT_EQ(topo.euler_characteristic, 0);
    }
    {
        ImplicitShape disk = ImplicitShape::open_disk(Vec3::Zero(), 0.8);
        TopologyReport topo = audit_topology(oracle_recon(disk, 64, 3000, 17).mesh);
        EXPECT_EQ(topo.nonmanifold_edges, 0);
        EXPECT_EQ(topo.boundary_loops, 1);
    }
}

TEST(Acceptance, A3_GtPipelineFidelity) {
    Criterion c{"A3", "oracle sphere at res 64: NC >= 0.99, CD1 <= 1.5 cells, vertices on surface"};
    ImplicitShape sphere = ImplicitShape::sphere(Vec3::Zero(), 0.4);
    ReconstructOutput out = oracle_recon(sphere, 64, 3000, 19);
    for (const Vec3& v : out.mesh.vertices) ASSERT_LT(std::abs(sphere.sdf(v)), 1e-6);
    EvalReport report = evaluate(out.mesh, sphere, 20000, 23);
    EXPECT_GE(report.nc, 0.99);
    EXPECT_LE(report.cd1, 1.5 * out.lattice.cell());
}

TEST(Acceptance, A4_GradientCorrectness) {
    Criterion c{"A4", "central finite differences match analytic gradients on every segment"};
    ImplicitShape sphere = ImplicitShape::sphere(Vec3::Zero(), 0.4);
    PointCloud cloud = sphere.sample_surface(16, 29);
    PointKdTree tree(cloud.points);
    ModelConfig cfg;
    cfg.feature_dim = 8;
    cfg.attn_neighbors = 4;
    cfg.interp_neighbors = 4;
    PairModel model(cfg, 31);
    TrainSampleOptions opt;
    opt.resolution = 16;
    std::vector<PairSample> pairs = sample_training_pairs(cloud, sphere, 5, 37, opt);
    auto report = gradient_check(model, tree, pairs, 1.0, 1.0, 1e-4);
    for (const auto& entry : report) EXPECT_LE(entry.max_err, 1e-3) << entry.segment;
}

TEST(Acceptance, A5_EndToEndDeskTraining) {
    Criterion c{"A5", "desk training: sign acc >= 0.95, alpha err <= 0.1, held-out sphere NC >= 0.90"};
    TrainConfig cfg;
    cfg.model.feature_dim = 64;
    cfg.epochs = 20;
    cfg.pairs_per_iter = 4000;
    cfg.seed = 41;
    std::vector<ImplicitShape> shapes = {ImplicitShape::sphere(Vec3::Zero(), 0.4),
                                         ImplicitShape::torus(Vec3::Zero(), 0.3, 0.12)};
    TrainResult result = train(shapes, cfg);
    ASSERT_FALSE(result.logs.empty());
    const EpochLog& last = result.logs.back();
    EXPECT_GE(last.holdout_sign_accuracy, 0.95);
    EXPECT_LE(last.holdout_mean_alpha_err, 0.1);

    // held-out sphere with a different radius
    ImplicitShape test_sphere = ImplicitShape::sphere(Vec3::Zero(), 0.3);
    PointCloud cloud = test_sphere.sample_surface(3000, 43);
    ModelPredictor predictor(result.model, cloud);
    ReconstructOptions opt;
    opt.resolution = 64;
    ReconstructOutput out = reconstruct(cloud, predictor, opt);
    ASSERT_FALSE(out.mesh.empty());
    EvalReport report = evaluate(out.mesh, test_sphere, 20000, 47);
    EXPECT_GE(report.nc, 0.90);
}

TEST(Acceptance, A6_ArtifactStudyOrdering) {
    Criterion c{"A6", "ground-truth alphas beat corrupted alphas: NC gap >= 0.02 and ordering holds"};
    ImplicitShape sphere = ImplicitShape::sphere(Vec3::Zero(), 0.4);
    PointCloud cloud = sphere.sample_surface(3000, 51);
    ReconstructOptions opt;
    opt.resolution = 64;
    opt.postprocess = false;
    auto signs = std::make_shared<OraclePredictor>(sphere);
    CubeLattice lattice = enumerate_lattice(cloud.bounds(), opt.resolution);
    std::vector<LatticeCoord> cubes = active_cubes(lattice, cloud, opt.dilation);
    auto nc_with = [&](PairPredictor& p) {
        ReconstructOutput out = reconstruct(cloud, p, opt);
        return evaluate(out.mesh, sphere, 20000, 53).nc;
    };
    OraclePredictor gt(sphere);
    RandomAlphaPredictor random_alpha(signs, 55);
    UdfRatioAlphaPredictor ratio_alpha(signs, sphere);
    double nc_gt = nc_with(gt);
    double nc_random = nc_with(random_alpha);
    double nc_ratio = nc_with(ratio_alpha);
    EXPECT_GE(nc_gt - nc_random, 0.02);
    // on a smooth sphere the distance-ratio alpha is nearly exact and both
    // saturate NC at the faceting limit; the ordering is asserted up to the
    // NC estimator's resolution, and strictly in alpha space below
    EXPECT_GE(nc_gt, nc_ratio - 1e-4);
    EXPECT_GE(nc_ratio, nc_random);

    EdgeSolveResult truth = solve_edges(lattice, cubes, gt);
    EdgeSolveResult ratio_solved = solve_edges(lattice, cubes, ratio_alpha);
    EdgeSolveResult random_solved = solve_edges(lattice, cubes, random_alpha);
    double d_ratio = intersection_distance(ratio_solved, truth, lattice, opt.resolution);
    double d_random = intersection_distance(random_solved, truth, lattice, opt.resolution);
    EXPECT_GT(d_ratio, 0.0);
    EXPECT_GT(d_random, 10.0 * d_ratio);
}

TEST(Acceptance, A7_Toy2dLearnabilityGap) {
    Criterion c{"A7", "near the circle the unsigned fit errs >= 2x the signed fit (5 seeds)"};
    double sdf_sum = 0.0, udf_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Toy2dConfig cfg;
        cfg.seed = seed;
        Toy2dProfile sdf = fit_toy2d_field(false, cfg);
        Toy2dProfile udf = fit_toy2d_field(true, cfg);
        sdf_sum += sdf.band_error(0.0, 0.9, 1.1);
        udf_sum += udf.band_error(0.0, 0.9, 1.1);
    }
    EXPECT_GE(udf_sum / 5.0, 2.0 * (sdf_sum / 5.0))
        << "udf band error " << udf_sum / 5.0 << " vs sdf " << sdf_sum / 5.0;
}

TEST(Acceptance, A8_MetricOracles) {
    Criterion c{"A8", "metrics match brute force exactly; identical meshes score (0, 1)"};
    Rng rng(61);
    for (int trial = 0; trial < 3; ++trial) {
        PointCloud a, b;
        int na = 50 + trial * 50, nb = 200 - trial * 40;
        for (int i = 0; i < na; ++i) {
            a.points.push_back(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
            a.normals.push_back(rng.unit_vector());
        }
        for (int i = 0; i < nb; ++i) {
            b.points.push_back(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
            b.normals.push_back(rng.unit_vector());
        }
        ASSERT_DOUBLE_EQ(chamfer_l1(a, b), chamfer_l1_brute(a, b));
        ASSERT_DOUBLE_EQ(normal_consistency(a, b), normal_consistency_brute(a, b));
    }
    TriangleMesh mesh = make_icosphere(0.4, 3);
    EvalReport report = evaluate(mesh, mesh, 10000, 63);
    EXPECT_DOUBLE_EQ(report.cd1, 0.0);
    EXPECT_DOUBLE_EQ(report.nc, 1.0);
}

TEST(Acceptance, A9_LossClipping) {
    Criterion c{"A9", "pairs without a valid crossing contribute zero loss and zero gradient"};
    Eigen::RowVectorXd pred(4);
    pred << 0.1, 0.4, 0.6, 0.9;
    std::vector<std::optional<double>> gt = {std::nullopt, std::optional<double>(1.7),
                                             std::optional<double>(-0.3), std::nullopt};
    LossValue l = loss_alpha(pred, gt);
    EXPECT_DOUBLE_EQ(l.value, 0.0);
    EXPECT_DOUBLE_EQ(l.grad.cwiseAbs().sum(), 0.0);

    // through the full pipeline: a batch with no crossing pairs leaves every
    // H-path parameter with exactly zero gradient
    ImplicitShape sphere = ImplicitShape::sphere(Vec3::Zero(), 0.4);
    PointCloud cloud = sphere.sample_surface(24, 65);
    PointKdTree tree(cloud.points);
    ModelConfig mc;
    mc.feature_dim = 8;
    mc.attn_neighbors = 4;
    mc.interp_neighbors = 4;
    PairModel model(mc, 67);
    std::vector<PairSample> pairs;
    Rng rng(69);
    while (pairs.size() < 16) {
        Vec3 p(rng.uniform(0.6, 0.9), rng.uniform(0.6, 0.9), rng.uniform(0.6, 0.9));
        Vec3 q = p + Vec3(0.01, 0, 0);
        PairLabel label = sphere.label_pair(p, q);  // far outside: never crossing
        ASSERT_TRUE(label.same_side);
        pairs.push_back({p, q, label, -1});
    }
    PipelineCaches caches;
    pipeline_forward(model, tree, pairs, 1.0, 1.0, caches);
    VectorXd grad = VectorXd::Zero(model.params().size());
    pipeline_backward(model, caches, 1.0, 1.0, grad);
    for (const auto& seg : model.params().segments()) {
        if (!seg.h_path) continue;
        for (int i = 0; i < seg.rows * seg.cols; ++i)
            ASSERT_DOUBLE_EQ(grad[seg.offset + i], 0.0) << seg.name;
    }
}

TEST(Acceptance, A10_PostprocessFlap) {
    Criterion c{"A10", "triangle filter removes exactly the perpendicular flap at threshold 0.65"};
    TriangleMesh mesh = make_grid_plane(1.0, 8);
    int base = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(Vec3(0.01, 0.0, 0.0));
    mesh.vertices.push_back(Vec3(0.01, 0.0, 0.25));
    mesh.vertices.push_back(Vec3(0.01, 0.2, 0.12));
    mesh.triangles.push_back({base, base + 1, base + 2});
    mesh.finalize();
    TriangleMesh filtered = postprocess(mesh, 10, 0.65);
    EXPECT_EQ(filtered.triangle_count(), mesh.triangle_count() - 1);
    for (const Vec3& v : filtered.vertices) EXPECT_DOUBLE_EQ(v.z(), 0.0);
}
