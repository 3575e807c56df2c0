#include <gtest/gtest.h>

#include "gridmesh/encoding.hpp"
#include "gridmesh/model.hpp"
#include "gridmesh/oracle.hpp"

using namespace gridmesh;

namespace {

PointCloud random_cloud(int n, std::uint64_t seed) {
    Rng rng(seed);
    PointCloud cloud;
    for (int i = 0; i < n; ++i)
        cloud.points.push_back(Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)));
    return cloud;
}

}  // namespace

TEST(Encoding, CosineEvenSineOddExact) {
    Rng rng(3);
    double cpe_ab[kPeDim], cpe_ba[kPeDim], spe_ab[kPeDim], spe_ba[kPeDim];
    for (int i = 0; i < 1000; ++i) {
        Vec3 d(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
        cosine_encoding(d, cpe_ab);
        cosine_encoding(-d, cpe_ba);
        sine_encoding(d, spe_ab);
        sine_encoding(-d, spe_ba);
        for (int c = 0; c < kPeDim; ++c) {
            ASSERT_EQ(cpe_ab[c], cpe_ba[c]);
            ASSERT_EQ(spe_ab[c], -spe_ba[c]);
        }
    }
    // frequency layout: 20 bands per axis, halving scale
    Vec3 d(1.0, 0.0, 0.0);
    double pe[kPeDim];
    sine_encoding(d, pe);
    EXPECT_DOUBLE_EQ(pe[0], std::sin(1.0));
    EXPECT_DOUBLE_EQ(pe[1], std::sin(0.5));
    EXPECT_DOUBLE_EQ(pe[19], std::sin(1.0 / (1 << 19)));
    EXPECT_DOUBLE_EQ(pe[20], 0.0);
}

TEST(Model, GSymmetryUnderSwap) {
    Rng rng(11);
    for (int draw = 0; draw < 50; ++draw) {
        ModelConfig cfg;
        cfg.feature_dim = 16;
        PairModel model(cfg, rng.raw());
        for (int i = 0; i < 20; ++i) {
            VectorXd fa = VectorXd::NullaryExpr(16, [&](int) { return rng.uniform(-2, 2); });
            VectorXd fb = VectorXd::NullaryExpr(16, [&](int) { return rng.uniform(-2, 2); });
            Vec3 a(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
            Vec3 b(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
            double p1 = model.predict_same_side(fa, fb, a, b);
            double p2 = model.predict_same_side(fb, fa, b, a);
            EXPECT_LT(std::abs(p1 - p2), 1e-6);
            EXPECT_GT(p1, 0.0);
            EXPECT_LT(p1, 1.0);
        }
    }
}

TEST(Model, HAntisymmetryUnderSwap) {
    Rng rng(13);
    for (int draw = 0; draw < 50; ++draw) {
        ModelConfig cfg;
        cfg.feature_dim = 16;
        PairModel model(cfg, rng.raw());
        for (int i = 0; i < 20; ++i) {
            VectorXd fa = VectorXd::NullaryExpr(16, [&](int) { return rng.uniform(-2, 2); });
            VectorXd fb = VectorXd::NullaryExpr(16, [&](int) { return rng.uniform(-2, 2); });
            Vec3 a(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
            Vec3 b(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
            double h1 = model.predict_alpha(fa, fb, a, b);
            double h2 = model.predict_alpha(fb, fa, b, a);
            EXPECT_LT(std::abs(h1 + h2 - 1.0), 1e-6);
        }
    }
}

TEST(Model, DegeneratePairWellDefined) {
    PairModel model(ModelConfig{.feature_dim = 16}, 5);
    VectorXd f = VectorXd::Constant(16, 0.3);
    Vec3 p(0.1, 0.2, 0.3);
    double prob = model.predict_same_side(f, f, p, p);
    EXPECT_TRUE(std::isfinite(prob));
    // alpha must sit at exactly 1/2: zero displacement, equal features
    EXPECT_DOUBLE_EQ(model.predict_alpha(f, f, p, p), 0.5);
}

TEST(Model, OddnessAuditNoBiasOnHPath) {
    // structural: no h.* segment is a bias, and alpha(0) == 0.5 for any seed
    Rng rng(17);
    for (int draw = 0; draw < 20; ++draw) {
        PairModel model(ModelConfig{.feature_dim = 8}, rng.raw());
        for (const auto& seg : model.params().segments()) {
            if (seg.h_path) EXPECT_FALSE(seg.is_bias) << seg.name;
        }
        VectorXd f = VectorXd::NullaryExpr(8, [&](int) { return rng.uniform(-1, 1); });
        Vec3 p(rng.uniform(-1, 1), 0, 0);
        EXPECT_DOUBLE_EQ(model.predict_alpha(f, f, p, p), 0.5);
    }
}

TEST(Model, EncoderDeterministic) {
    PointCloud cloud = random_cloud(64, 7);
    PairModel model(ModelConfig{.feature_dim = 16}, 9);
    FeatureField f1 = model.encode(cloud);
    FeatureField f2 = model.encode(cloud);
    EXPECT_EQ(f1.features, f2.features);
}

TEST(Model, AttentionLayersTranslationEquivariant) {
    ModelConfig cfg;
    cfg.feature_dim = 16;
    PairModel model(cfg, 21);
    PointCloud cloud = random_cloud(80, 23);
    PointCloud moved = cloud;
    Vec3 t(0.37, -1.2, 0.55);
    for (Vec3& p : moved.points) p += t;

    Rng rng(29);
    MatrixXd x = MatrixXd::NullaryExpr(16, 80, [&](int, int) { return rng.uniform(-1, 1); });
    PointKdTree tree0(cloud.points), tree1(moved.points);
    MatrixXd y0 = model.attention_only(tree0, x);
    MatrixXd y1 = model.attention_only(tree1, x);
    EXPECT_LT((y0 - y1).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Model, SinglePointCloudValidField) {
    PointCloud cloud;
    cloud.points.push_back(Vec3(0.1, 0.2, 0.3));
    PairModel model(ModelConfig{.feature_dim = 16}, 3);
    FeatureField field = model.encode(cloud);
    EXPECT_EQ(field.features.cols(), 1);
    EXPECT_TRUE(field.features.allFinite());
    VectorXd f = PairModel::interpolate(field, Vec3(0.5, 0.5, 0.5));
    EXPECT_EQ(f, field.features.col(0));
}

TEST(Interpolate, ExactHitReturnsPointFeature) {
    PointCloud cloud = random_cloud(32, 31);
    PairModel model(ModelConfig{.feature_dim = 16}, 33);
    FeatureField field = model.encode(cloud);
    for (int i : {0, 5, 31}) {
        VectorXd f = PairModel::interpolate(field, cloud.points[i]);
        EXPECT_EQ(f, field.features.col(i));
    }
}

TEST(Interpolate, MidpointOfTwoIsMean) {
    PointCloud cloud;
    cloud.points.push_back(Vec3(0, 0, 0));
    cloud.points.push_back(Vec3(1, 0, 0));
    ModelConfig cfg;
    cfg.feature_dim = 8;
    cfg.interp_neighbors = 2;
    PairModel model(cfg, 35);
    FeatureField field = model.encode(cloud);
    VectorXd mid = PairModel::interpolate(field, Vec3(0.5, 0, 0));
    VectorXd mean = 0.5 * (field.features.col(0) + field.features.col(1));
    EXPECT_LT((mid - mean).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Interpolate, MatchesBruteForceWeights) {
    PointCloud cloud = random_cloud(200, 37);
    ModelConfig cfg;
    cfg.feature_dim = 8;
    cfg.interp_neighbors = 8;
    PairModel model(cfg, 39);
    FeatureField field = model.encode(cloud);
    Rng rng(41);
    for (int t = 0; t < 50; ++t) {
        Vec3 q(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6));
        VectorXd fast = PairModel::interpolate(field, q);
        // brute force: sort by (distance, index), take 8, inverse-square weights
        std::vector<std::pair<double, int>> order;
        for (int i = 0; i < 200; ++i) order.push_back({(cloud.points[i] - q).norm(), i});
        std::sort(order.begin(), order.end());
        VectorXd expect = VectorXd::Zero(8);
        double wsum = 0;
        for (int j = 0; j < 8; ++j) wsum += 1.0 / (order[j].first * order[j].first);
        for (int j = 0; j < 8; ++j)
            expect += (1.0 / (order[j].first * order[j].first) / wsum) * field.features.col(order[j].second);
        EXPECT_LT((fast - expect).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Checkpoint, RoundTripExact) {
    PairModel model(ModelConfig{.feature_dim = 16}, 43);
    nlohmann::json j = checkpoint_json(model);
    PairModel loaded = model_from_checkpoint_json(j);
    EXPECT_EQ(loaded.params().values(), model.params().values());
    EXPECT_EQ(loaded.config().feature_dim, 16);
}

TEST(Checkpoint, IncompatibleDimsRejected) {
    PairModel small(ModelConfig{.feature_dim = 8}, 1);
    nlohmann::json j = checkpoint_json(small);
    j["model"]["feature_dim"] = 16;
    EXPECT_THROW(model_from_checkpoint_json(j), DataError);
    nlohmann::json bad = {{"format", "something"}};
    EXPECT_THROW(model_from_checkpoint_json(bad), DataError);
}

TEST(ParamStore, HBiasRefused) {
    ParamStore store;
    store.register_matrix("h.test", 4, 4, true);
    EXPECT_THROW(store.register_bias("h.test_bias", 4), Error);
}
