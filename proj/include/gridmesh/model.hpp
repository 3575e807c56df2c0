#pragma once

#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridmesh/core.hpp"
#include "gridmesh/encoding.hpp"
#include "gridmesh/mesh.hpp"
#include "gridmesh/params.hpp"
#include "gridmesh/spatial.hpp"

namespace gridmesh {

// ---------------------------------------------------------------------------
// Configuration of the learnable pipeline. feature_dim is the width D used
// everywhere; the paper-scale encoder is wider but structurally identical.
// ---------------------------------------------------------------------------

struct ModelConfig {
    int feature_dim = 64;
    int attn_neighbors = 16;
    int attn_hidden = 16;   // width of the positional and attention MLPs
    int lift_bands = 8;     // sin/cos frequency bands in the lift input
    int interp_neighbors = 8;
    double interp_power = 2.0;

    int head_hidden() const { return feature_dim; }
    int head_hidden2() const { return std::max(feature_dim / 2, 4); }

    nlohmann::json to_json() const {
        return {{"feature_dim", feature_dim},
                {"attn_neighbors", attn_neighbors},
                {"attn_hidden", attn_hidden},
                {"lift_bands", lift_bands},
                {"interp_neighbors", interp_neighbors},
                {"interp_power", interp_power},
                {"pe_frequencies", kPeFrequencies}};
    }
    static ModelConfig from_json(const nlohmann::json& j) {
        ModelConfig cfg;
        cfg.feature_dim = j.at("feature_dim").get<int>();
        cfg.attn_neighbors = j.at("attn_neighbors").get<int>();
        cfg.attn_hidden = j.at("attn_hidden").get<int>();
        cfg.lift_bands = j.at("lift_bands").get<int>();
        cfg.interp_neighbors = j.at("interp_neighbors").get<int>();
        cfg.interp_power = j.at("interp_power").get<double>();
        if (j.at("pe_frequencies").get<int>() != kPeFrequencies)
            throw DataError("incompatible checkpoint: pe_frequencies");
        return cfg;
    }
};

// ---------------------------------------------------------------------------
// FeatureField: per-point features over an input cloud plus the rule for
// interpolating them to arbitrary query points.
// ---------------------------------------------------------------------------

struct FeatureField {
    std::shared_ptr<const PointKdTree> tree;  // source cloud
    MatrixXd features;                        // D x N
    int interp_neighbors = 8;
    double interp_power = 2.0;
};

// Initialization scales for the pair heads. At cube-edge length scales the
// cosine encoding is a near-constant 1-vector, so a standard-width projection
// would add O(1) random channel offsets that swamp the feature pathway: the
// symmetric head's projection starts at zero and acts as an adaptive bias.
// The sine encoding and the interpolated feature differences are O(1e-2) and
// O(1e-3); the antisymmetric path scales both up so its sigmoid starts in the
// responsive regime instead of pinned at 1/2.
constexpr double kGPeInitScale = 0.0;
constexpr double kHPeInitScale = 64.0;
constexpr double kHFeatureGainInit = 4.0;
// Lift init scale: large weights on the multiband input decorrelate per-point
// features from the start, so interpolated features vary at the point-spacing
// scale and pair differences are visible to the heads.
#ifndef GRIDMESH_LIFT_INIT
#define GRIDMESH_LIFT_INIT 4.0
#endif
constexpr double kLiftInitScale = GRIDMESH_LIFT_INIT;

// ---------------------------------------------------------------------------
// PairModel
//
// encoder: per-point MLP lift (3 -> D), two kNN vector-attention layers that
// consume only relative neighbor offsets, then a per-point MLP.
//
// G head (same-side probability): symmetric combinations of the pair
// features, each shifted by a projected cosine encoding of a-b, through a
// biased MLP and a sigmoid. Swapping the pair leaves the output unchanged.
//
// H head (crossing position): feature difference plus a bias-free projected
// sine encoding of a-b, through bias-free odd layers and a sigmoid, so that
// alpha(a,b) + alpha(b,a) == 1.
// ---------------------------------------------------------------------------

class PairModel {
  public:
    explicit PairModel(const ModelConfig& cfg = {}, std::uint64_t seed = 0) : cfg_(cfg) {
        const int d = cfg_.feature_dim;
        const int h1 = cfg_.head_hidden(), h2 = cfg_.head_hidden2();

        lift_w1_ = store_.register_matrix("enc.lift.w1", d, lift_encoding_dim(cfg_.lift_bands),
                                          false, kLiftInitScale);
        lift_b1_ = store_.register_bias("enc.lift.b1", d);
        lift_w2_ = store_.register_matrix("enc.lift.w2", d, d);
        lift_b2_ = store_.register_bias("enc.lift.b2", d);
        const int ah = cfg_.attn_hidden;
        for (int l = 0; l < 2; ++l) {
            std::string p = "enc.attn" + std::to_string(l + 1) + ".";
            auto& a = attn_[l];
            a.pos_w1 = store_.register_matrix(p + "pos_w1", ah, 3);
            a.pos_b1 = store_.register_bias(p + "pos_b1", ah);
            a.pos_w2 = store_.register_matrix(p + "pos_w2", d, ah);
            a.pos_b2 = store_.register_bias(p + "pos_b2", d);
            a.wq = store_.register_matrix(p + "wq", d, d);
            a.bq = store_.register_bias(p + "bq", d);
            a.wk = store_.register_matrix(p + "wk", d, d);
            a.bk = store_.register_bias(p + "bk", d);
            a.wv = store_.register_matrix(p + "wv", d, d);
            a.bv = store_.register_bias(p + "bv", d);
            a.att_w1 = store_.register_matrix(p + "att_w1", ah, d);
            a.att_b1 = store_.register_bias(p + "att_b1", ah);
            a.att_w2 = store_.register_matrix(p + "att_w2", d, ah);
            a.att_b2 = store_.register_bias(p + "att_b2", d);
            a.out_w = store_.register_matrix(p + "out_w", d, d);
            a.out_b = store_.register_bias(p + "out_b", d);
        }
        out_w1_ = store_.register_matrix("enc.out.w1", d, d);
        out_b1_ = store_.register_bias("enc.out.b1", d);
        out_w2_ = store_.register_matrix("enc.out.w2", d, d);
        out_b2_ = store_.register_bias("enc.out.b2", d);

        g_pe_w_ = store_.register_matrix("g.pe_w", d, kPeDim, false, kGPeInitScale);
        g_pe_b_ = store_.register_bias("g.pe_b", d);
        g_w1_ = store_.register_matrix("g.head.w1", h1, 3 * d);
        g_b1_ = store_.register_bias("g.head.b1", h1);
        g_w2_ = store_.register_matrix("g.head.w2", h2, h1);
        g_b2_ = store_.register_bias("g.head.b2", h2);
        g_w3_ = store_.register_matrix("g.head.w3", 1, h2);
        g_b3_ = store_.register_bias("g.head.b3", 1);

        h_pe_w_ = store_.register_matrix("h.pe_w", d, kPeDim, true, kHPeInitScale);
        h_gain_ = store_.register_matrix("h.gain", d, 1, true, 1.0, kHFeatureGainInit);
        h_w1_ = store_.register_matrix("h.head.w1", h1, d, true);
        h_w2_ = store_.register_matrix("h.head.w2", h2, h1, true);
        h_w3_ = store_.register_matrix("h.head.w3", 1, h2, true);

        store_.finalize();
        store_.init_weights(seed);
    }

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }

    // ------------------------------------------------------------------
    // Encoder
    // ------------------------------------------------------------------

    struct AttnCache {
        MatrixXd x_in;    // D x N
        MatrixXd pos_h;   // D x Nk
        MatrixXd delta;   // D x Nk
        MatrixXd u;       // D x Nk
        MatrixXd att_h;   // D x Nk
        MatrixXd wgt;     // D x Nk (softmax over each point's k columns)
        MatrixXd s;       // D x Nk
        MatrixXd y;       // D x N
    };

    struct EncoderCache {
        MatrixXd pts;          // 3 x N
        MatrixXd lifted;       // multiband embedding of pts
        std::vector<int> nbr;  // N*k neighbor indices
        MatrixXd offs;         // 3 x Nk relative offsets
        int k = 0;
        MatrixXd lift_h;       // D x N
        AttnCache attn[2];
        MatrixXd x2;           // attention output, D x N
        MatrixXd out_h;        // D x N
        MatrixXd features;     // D x N
    };

    MatrixXd encoder_features(const PointKdTree& tree, EncoderCache* cache = nullptr) const {
        EncoderCache local;
        EncoderCache& c = cache ? *cache : local;
        setup_neighbors(tree, c);

        c.lift_h =
            ((store_.mat(lift_w1_) * c.lifted).colwise() + store_.vec(lift_b1_)).array().tanh();
        MatrixXd x = (store_.mat(lift_w2_) * c.lift_h).colwise() + store_.vec(lift_b2_);

        for (int l = 0; l < 2; ++l) x = attn_forward(l, x, c);

        c.x2 = x;
        c.out_h = ((store_.mat(out_w1_) * x).colwise() + store_.vec(out_b1_)).array().tanh();
        c.features = (store_.mat(out_w2_) * c.out_h).colwise() + store_.vec(out_b2_);
        return c.features;
    }

    FeatureField encode(const PointCloud& cloud) const {
        if (cloud.points.empty()) throw DataError("empty point cloud");
        FeatureField field;
        field.tree = std::make_shared<PointKdTree>(cloud.points);
        field.features = encoder_features(*field.tree);
        field.interp_neighbors = cfg_.interp_neighbors;
        field.interp_power = cfg_.interp_power;
        return field;
    }

    // The attention stack alone, on externally supplied per-point features.
    // Consumes only relative neighbor offsets, so it commutes with rigid
    // translation of the positions.
    MatrixXd attention_only(const PointKdTree& tree, const MatrixXd& x_in) const {
        EncoderCache c;
        setup_neighbors(tree, c);
        MatrixXd x = x_in;
        for (int l = 0; l < 2; ++l) x = attn_forward(l, x, c);
        return x;
    }

    // dL/d(params) from dL/d(features); returns dL/d(input positions) nowhere:
    // positions are not trainable.
    void encoder_backward(const EncoderCache& c, const MatrixXd& dfeat, VectorXd& grad) const {
        store_.mat_in(grad, out_w2_) += dfeat * c.out_h.transpose();
        store_.vec_in(grad, out_b2_) += dfeat.rowwise().sum();
        MatrixXd dh = store_.mat(out_w2_).transpose() * dfeat;
        dh.array() *= (1.0 - c.out_h.array().square());
        store_.mat_in(grad, out_w1_) += dh * c.x2.transpose();
        store_.vec_in(grad, out_b1_) += dh.rowwise().sum();
        MatrixXd dx = store_.mat(out_w1_).transpose() * dh;

        for (int l = 1; l >= 0; --l) dx = attn_backward(l, dx, c, grad);

        MatrixXd dlift = dx;
        store_.mat_in(grad, lift_w2_) += dlift * c.lift_h.transpose();
        store_.vec_in(grad, lift_b2_) += dlift.rowwise().sum();
        MatrixXd dh1 = store_.mat(lift_w2_).transpose() * dlift;
        dh1.array() *= (1.0 - c.lift_h.array().square());
        store_.mat_in(grad, lift_w1_) += dh1 * c.lifted.transpose();
        store_.vec_in(grad, lift_b1_) += dh1.rowwise().sum();
    }

    // ------------------------------------------------------------------
    // Interpolation to query points (inverse-distance over k neighbors)
    // ------------------------------------------------------------------

    struct InterpCache {
        std::vector<int> idx;  // Mq * k
        MatrixXd weights;      // k x Mq
        int k = 0;
    };

    static MatrixXd interpolate_batch(const PointKdTree& tree, const MatrixXd& features,
                                      int neighbors, double power, const std::vector<Vec3>& queries,
                                      InterpCache* cache = nullptr) {
        InterpCache local;
        InterpCache& c = cache ? *cache : local;
        const int mq = static_cast<int>(queries.size());
        const int k = std::min<int>(neighbors, static_cast<int>(tree.size()));
        c.k = k;
        c.idx.assign(std::size_t(mq) * k, 0);
        c.weights.setZero(k, mq);
        MatrixXd out(features.rows(), mq);

        std::vector<int> idx;
        std::vector<double> dist;
        for (int q = 0; q < mq; ++q) {
            tree.knn(queries[q], k, idx, dist);
            double wsum = 0.0;
            if (dist[0] < 1e-12) {
                c.weights(0, q) = 1.0;
                wsum = 1.0;
            } else {
                for (int j = 0; j < k; ++j) {
                    double w = 1.0 / std::pow(dist[j], power);
                    c.weights(j, q) = w;
                    wsum += w;
                }
            }
            out.col(q).setZero();
            for (int j = 0; j < k; ++j) {
                c.idx[std::size_t(q) * k + j] = idx[j];
                double w = c.weights(j, q) / wsum;
                c.weights(j, q) = w;
                if (w != 0.0) out.col(q) += w * features.col(idx[j]);
            }
        }
        return out;
    }

    static MatrixXd interpolate_batch(const FeatureField& field, const std::vector<Vec3>& queries,
                                      InterpCache* cache = nullptr) {
        return interpolate_batch(*field.tree, field.features, field.interp_neighbors,
                                 field.interp_power, queries, cache);
    }

    static VectorXd interpolate(const FeatureField& field, const Vec3& q) {
        return interpolate_batch(field, {q}).col(0);
    }

    static void interpolate_backward(const InterpCache& c, const MatrixXd& dout, MatrixXd& dfeatures) {
        const int mq = static_cast<int>(dout.cols());
        for (int q = 0; q < mq; ++q)
            for (int j = 0; j < c.k; ++j) {
                double w = c.weights(j, q);
                if (w != 0.0) dfeatures.col(c.idx[std::size_t(q) * c.k + j]) += w * dout.col(q);
            }
    }

    // ------------------------------------------------------------------
    // Pair heads. Batched over M pairs; fa/fb are D x M feature matrices.
    // ------------------------------------------------------------------

    struct PairBatch {
        MatrixXd fa, fb;      // D x M
        MatrixXd pe_cos;      // 60 x M, even encoding of a-b
        MatrixXd pe_sin;      // 60 x M, odd encoding of a-b
    };

    static void fill_encodings(PairBatch& batch, const std::vector<Vec3>& a,
                               const std::vector<Vec3>& b) {
        const int m = static_cast<int>(a.size());
        batch.pe_cos.resize(kPeDim, m);
        batch.pe_sin.resize(kPeDim, m);
        for (int i = 0; i < m; ++i) {
            Vec3 d = a[i] - b[i];
            cosine_encoding(d, batch.pe_cos.col(i).data());
            sine_encoding(d, batch.pe_sin.col(i).data());
        }
    }

    struct GCache {
        MatrixXd pos, u, h1, h2;
        Eigen::RowVectorXd logit;
        Eigen::RowVectorXd prob;
        Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> a_max;  // argmax mask for max branch
    };

    Eigen::RowVectorXd same_side_prob_batch(const PairBatch& batch, GCache* cache = nullptr) const {
        GCache local;
        GCache& c = cache ? *cache : local;
        const int d = cfg_.feature_dim;
        const int m = static_cast<int>(batch.fa.cols());
        c.pos = (store_.mat(g_pe_w_) * batch.pe_cos).colwise() + store_.vec(g_pe_b_);
        c.u.resize(3 * d, m);
        c.a_max = batch.fa.array() >= batch.fb.array();
        c.u.topRows(d) = batch.fa + batch.fb + c.pos;
        c.u.middleRows(d, d) = (batch.fa.array() * batch.fb.array()).matrix() + c.pos;
        c.u.bottomRows(d) = batch.fa.cwiseMax(batch.fb) + c.pos;
        c.h1 = ((store_.mat(g_w1_) * c.u).colwise() + store_.vec(g_b1_)).array().tanh();
        c.h2 = ((store_.mat(g_w2_) * c.h1).colwise() + store_.vec(g_b2_)).array().tanh();
        c.logit = store_.mat(g_w3_) * c.h2 + Eigen::RowVectorXd::Constant(m, store_.vec(g_b3_)(0));
        c.prob = c.logit.unaryExpr([](double z) { return stable_sigmoid(z); });
        return c.prob;
    }

    void g_backward(const PairBatch& batch, const GCache& c, const Eigen::RowVectorXd& dlogit,
                    VectorXd& grad, MatrixXd& dfa, MatrixXd& dfb) const {
        const int d = cfg_.feature_dim;
        store_.mat_in(grad, g_w3_) += dlogit * c.h2.transpose();
        store_.vec_in(grad, g_b3_)(0) += dlogit.sum();
        MatrixXd dh2 = store_.mat(g_w3_).transpose() * dlogit;
        dh2.array() *= (1.0 - c.h2.array().square());
        store_.mat_in(grad, g_w2_) += dh2 * c.h1.transpose();
        store_.vec_in(grad, g_b2_) += dh2.rowwise().sum();
        MatrixXd dh1 = store_.mat(g_w2_).transpose() * dh2;
        dh1.array() *= (1.0 - c.h1.array().square());
        store_.mat_in(grad, g_w1_) += dh1 * c.u.transpose();
        store_.vec_in(grad, g_b1_) += dh1.rowwise().sum();
        MatrixXd du = store_.mat(g_w1_).transpose() * dh1;

        auto du1 = du.topRows(d), du2 = du.middleRows(d, d), du3 = du.bottomRows(d);
        dfa += du1;
        dfb += du1;
        dfa += (du2.array() * batch.fb.array()).matrix();
        dfb += (du2.array() * batch.fa.array()).matrix();
        dfa += (du3.array() * c.a_max.cast<double>()).matrix();
        dfb += (du3.array() * (1.0 - c.a_max.cast<double>())).matrix();
        MatrixXd dpos = du1 + du2 + du3;
        store_.mat_in(grad, g_pe_w_) += dpos * batch.pe_cos.transpose();
        store_.vec_in(grad, g_pe_b_) += dpos.rowwise().sum();
    }

    struct HCache {
        MatrixXd diff, t1, t2;
        Eigen::RowVectorXd z;
        Eigen::RowVectorXd alpha;
    };

    Eigen::RowVectorXd alpha_batch(const PairBatch& batch, HCache* cache = nullptr) const {
        HCache local;
        HCache& c = cache ? *cache : local;
        c.diff = store_.vec(h_gain_).asDiagonal() * (batch.fa - batch.fb) +
                 store_.mat(h_pe_w_) * batch.pe_sin;
        c.t1 = (store_.mat(h_w1_) * c.diff).unaryExpr([](double x) { return odd_tanh(x); });
        c.t2 = (store_.mat(h_w2_) * c.t1).unaryExpr([](double x) { return odd_tanh(x); });
        c.z = store_.mat(h_w3_) * c.t2;
        c.alpha = c.z.unaryExpr([](double z) { return stable_sigmoid(z); });
        return c.alpha;
    }

    void h_backward(const PairBatch& batch, const HCache& c, const Eigen::RowVectorXd& dz,
                    VectorXd& grad, MatrixXd& dfa, MatrixXd& dfb) const {
        store_.mat_in(grad, h_w3_) += dz * c.t2.transpose();
        MatrixXd dt2 = store_.mat(h_w3_).transpose() * dz;
        dt2.array() *= (1.0 - c.t2.array().square());
        store_.mat_in(grad, h_w2_) += dt2 * c.t1.transpose();
        MatrixXd dt1 = store_.mat(h_w2_).transpose() * dt2;
        dt1.array() *= (1.0 - c.t1.array().square());
        store_.mat_in(grad, h_w1_) += dt1 * c.diff.transpose();
        MatrixXd dd = store_.mat(h_w1_).transpose() * dt1;
        MatrixXd df = batch.fa - batch.fb;
        store_.mat_in(grad, h_gain_) += (dd.array() * df.array()).rowwise().sum().matrix();
        MatrixXd gained = store_.vec(h_gain_).asDiagonal() * dd;
        dfa += gained;
        dfb -= gained;
        store_.mat_in(grad, h_pe_w_) += dd * batch.pe_sin.transpose();
    }

    // single-pair conveniences
    double predict_same_side(const VectorXd& fa, const VectorXd& fb, const Vec3& a,
                             const Vec3& b) const {
        PairBatch batch;
        batch.fa = fa;
        batch.fb = fb;
        fill_encodings(batch, {a}, {b});
        return same_side_prob_batch(batch)(0);
    }

    double predict_alpha(const VectorXd& fa, const VectorXd& fb, const Vec3& a, const Vec3& b) const {
        PairBatch batch;
        batch.fa = fa;
        batch.fb = fb;
        fill_encodings(batch, {a}, {b});
        return alpha_batch(batch)(0);
    }

  private:
    struct AttnSegs {
        int pos_w1, pos_b1, pos_w2, pos_b2;
        int wq, bq, wk, bk, wv, bv;
        int att_w1, att_b1, att_w2, att_b2;
        int out_w, out_b;
    };

    void setup_neighbors(const PointKdTree& tree, EncoderCache& c) const {
        const int n = static_cast<int>(tree.size());
        const int k = std::min(cfg_.attn_neighbors, n);
        // reused caches (same cloud across optimizer steps) skip the kNN pass
        if (c.k == k && c.pts.cols() == n && c.nbr.size() == std::size_t(n) * k) return;
        c.k = k;
        c.pts.resize(3, n);
        for (int i = 0; i < n; ++i) c.pts.col(i) = tree.point(i);
        c.lifted.resize(lift_encoding_dim(cfg_.lift_bands), n);
        for (int i = 0; i < n; ++i)
            lift_encoding(tree.point(i), cfg_.lift_bands, c.lifted.col(i).data());
        c.nbr.assign(std::size_t(n) * k, 0);
        c.offs.resize(3, std::int64_t(n) * k);
        std::vector<int> idx;
        std::vector<double> dist;
        for (int i = 0; i < n; ++i) {
            tree.knn(tree.point(i), k, idx, dist);
            for (int j = 0; j < k; ++j) {
                c.nbr[std::size_t(i) * k + j] = idx[j];
                c.offs.col(std::int64_t(i) * k + j) = tree.point(idx[j]) - tree.point(i);
            }
        }
    }

    MatrixXd attn_forward(int layer, const MatrixXd& x, EncoderCache& c) const {
        const AttnSegs& sg = attn_[layer];
        AttnCache& a = c.attn[layer];
        const int n = static_cast<int>(x.cols());
        const int k = c.k;
        const std::int64_t nk = std::int64_t(n) * k;

        a.x_in = x;
        a.pos_h = ((store_.mat(sg.pos_w1) * c.offs).colwise() + store_.vec(sg.pos_b1)).array().tanh();
        a.delta = (store_.mat(sg.pos_w2) * a.pos_h).colwise() + store_.vec(sg.pos_b2);

        MatrixXd q = (store_.mat(sg.wq) * x).colwise() + store_.vec(sg.bq);
        MatrixXd key = (store_.mat(sg.wk) * x).colwise() + store_.vec(sg.bk);
        MatrixXd val = (store_.mat(sg.wv) * x).colwise() + store_.vec(sg.bv);

        a.u.resize(x.rows(), nk);
        a.s.resize(x.rows(), nk);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < k; ++j) {
                std::int64_t col = std::int64_t(i) * k + j;
                int nb = c.nbr[col];
                a.u.col(col) = q.col(i) - key.col(nb) + a.delta.col(col);
                a.s.col(col) = val.col(nb) + a.delta.col(col);
            }
        }

        a.att_h = ((store_.mat(sg.att_w1) * a.u).colwise() + store_.vec(sg.att_b1)).array().tanh();
        MatrixXd logits = (store_.mat(sg.att_w2) * a.att_h).colwise() + store_.vec(sg.att_b2);

        // per-channel softmax over each point's k neighbor columns
        a.wgt.resize(x.rows(), nk);
        for (int i = 0; i < n; ++i) {
            auto block = logits.middleCols(std::int64_t(i) * k, k);
            Eigen::ArrayXd mx = block.rowwise().maxCoeff();
            Eigen::ArrayXXd e = (block.array().colwise() - mx).exp();
            Eigen::ArrayXd denom = e.rowwise().sum();
            a.wgt.middleCols(std::int64_t(i) * k, k) = (e.colwise() / denom).matrix();
        }

        a.y.setZero(x.rows(), n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < k; ++j) {
                std::int64_t col = std::int64_t(i) * k + j;
                a.y.col(i) += (a.wgt.col(col).array() * a.s.col(col).array()).matrix();
            }

        return x + ((store_.mat(sg.out_w) * a.y).colwise() + store_.vec(sg.out_b));
    }

    MatrixXd attn_backward(int layer, const MatrixXd& dx_out, const EncoderCache& c,
                           VectorXd& grad) const {
        const AttnSegs& sg = attn_[layer];
        const AttnCache& a = c.attn[layer];
        const int n = static_cast<int>(a.x_in.cols());
        const int k = c.k;
        const std::int64_t nk = std::int64_t(n) * k;
        const int d = static_cast<int>(a.x_in.rows());

        MatrixXd dx = dx_out;  // residual branch
        store_.mat_in(grad, sg.out_w) += dx_out * a.y.transpose();
        store_.vec_in(grad, sg.out_b) += dx_out.rowwise().sum();
        MatrixXd dy = store_.mat(sg.out_w).transpose() * dx_out;

        MatrixXd dwgt(d, nk), ds(d, nk);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < k; ++j) {
                std::int64_t col = std::int64_t(i) * k + j;
                dwgt.col(col) = (dy.col(i).array() * a.s.col(col).array()).matrix();
                ds.col(col) = (dy.col(i).array() * a.wgt.col(col).array()).matrix();
            }

        // softmax backward per point block
        MatrixXd dlogits(d, nk);
        for (int i = 0; i < n; ++i) {
            auto w = a.wgt.middleCols(std::int64_t(i) * k, k).array();
            auto dw = dwgt.middleCols(std::int64_t(i) * k, k).array();
            Eigen::ArrayXd inner = (w * dw).rowwise().sum();
            dlogits.middleCols(std::int64_t(i) * k, k) = (w * (dw.colwise() - inner)).matrix();
        }

        store_.mat_in(grad, sg.att_w2) += dlogits * a.att_h.transpose();
        store_.vec_in(grad, sg.att_b2) += dlogits.rowwise().sum();
        MatrixXd datt = store_.mat(sg.att_w2).transpose() * dlogits;
        datt.array() *= (1.0 - a.att_h.array().square());
        store_.mat_in(grad, sg.att_w1) += datt * a.u.transpose();
        store_.vec_in(grad, sg.att_b1) += datt.rowwise().sum();
        MatrixXd du = store_.mat(sg.att_w1).transpose() * datt;

        MatrixXd dq = MatrixXd::Zero(d, n), dkey = MatrixXd::Zero(d, n), dval = MatrixXd::Zero(d, n);
        MatrixXd ddelta = du + ds;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < k; ++j) {
                std::int64_t col = std::int64_t(i) * k + j;
                int nb = c.nbr[col];
                dq.col(i) += du.col(col);
                dkey.col(nb) -= du.col(col);
                dval.col(nb) += ds.col(col);
            }

        store_.mat_in(grad, sg.wq) += dq * a.x_in.transpose();
        store_.vec_in(grad, sg.bq) += dq.rowwise().sum();
        store_.mat_in(grad, sg.wk) += dkey * a.x_in.transpose();
        store_.vec_in(grad, sg.bk) += dkey.rowwise().sum();
        store_.mat_in(grad, sg.wv) += dval * a.x_in.transpose();
        store_.vec_in(grad, sg.bv) += dval.rowwise().sum();
        dx += store_.mat(sg.wq).transpose() * dq;
        dx += store_.mat(sg.wk).transpose() * dkey;
        dx += store_.mat(sg.wv).transpose() * dval;

        store_.mat_in(grad, sg.pos_w2) += ddelta * a.pos_h.transpose();
        store_.vec_in(grad, sg.pos_b2) += ddelta.rowwise().sum();
        MatrixXd dpos = store_.mat(sg.pos_w2).transpose() * ddelta;
        dpos.array() *= (1.0 - a.pos_h.array().square());
        store_.mat_in(grad, sg.pos_w1) += dpos * c.offs.transpose();
        store_.vec_in(grad, sg.pos_b1) += dpos.rowwise().sum();

        return dx;
    }

    ModelConfig cfg_;
    ParamStore store_;
    int lift_w1_, lift_b1_, lift_w2_, lift_b2_;
    AttnSegs attn_[2];
    int out_w1_, out_b1_, out_w2_, out_b2_;
    int g_pe_w_, g_pe_b_, g_w1_, g_b1_, g_w2_, g_b2_, g_w3_, g_b3_;
    int h_pe_w_, h_gain_, h_w1_, h_w2_, h_w3_;
};

// ---------------------------------------------------------------------------
// Checkpoints: versioned JSON container with config + parameter segments.
// ---------------------------------------------------------------------------

inline nlohmann::json checkpoint_json(const PairModel& model,
                                      const nlohmann::json& extra = nlohmann::json::object()) {
    nlohmann::json j{{"format", "gridmesh-checkpoint"},
                     {"version", 1},
                     {"model", model.config().to_json()},
                     {"params", model.params().to_json()}};
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    return j;
}

inline PairModel model_from_checkpoint_json(const nlohmann::json& j) {
    if (!j.contains("format") || j.at("format") != "gridmesh-checkpoint")
        throw DataError("not a checkpoint file");
    if (j.at("version").get<int>() != 1) throw DataError("unsupported checkpoint version");
    PairModel model(ModelConfig::from_json(j.at("model")), 0);
    model.params().from_json(j.at("params"));
    return model;
}

}  // namespace gridmesh
