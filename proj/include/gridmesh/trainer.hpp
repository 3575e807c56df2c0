#pragma once

#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridmesh/losses.hpp"
#include "gridmesh/model.hpp"
#include "gridmesh/optimizer.hpp"
#include "gridmesh/oracle.hpp"
#include "gridmesh/sampler.hpp"

namespace gridmesh {

// ---------------------------------------------------------------------------
// Full pipeline (encoder -> interpolation -> heads -> losses) on one shape's
// batch of labeled pairs, with reverse-mode gradients for every parameter.
// ---------------------------------------------------------------------------

struct PipelineCaches {
    PairModel::EncoderCache enc;
    PairModel::InterpCache interp;
    PairModel::PairBatch batch;
    PairModel::GCache g;
    PairModel::HCache h;
    LossValue sign_loss, alpha_loss;
};

struct PipelineStats {
    double loss_sign = 0.0;
    double loss_alpha = 0.0;
    double loss_total = 0.0;
    double sign_accuracy = 0.0;
    double mean_alpha_err = 0.0;  // over crossing pairs; 0 when none
    int crossing_pairs = 0;
};

inline PipelineStats pipeline_forward(const PairModel& model, const PointKdTree& tree,
                                      const std::vector<PairSample>& pairs, double sign_weight,
                                      double alpha_weight, PipelineCaches& c) {
    const int m = static_cast<int>(pairs.size());
    if (m == 0) throw Error("empty batch");
    const int d = model.config().feature_dim;

    MatrixXd features = model.encoder_features(tree, &c.enc);

    std::vector<Vec3> queries(2 * m);
    std::vector<Vec3> pa(m), pb(m);
    for (int i = 0; i < m; ++i) {
        queries[2 * i] = pairs[i].a;
        queries[2 * i + 1] = pairs[i].b;
        pa[i] = pairs[i].a;
        pb[i] = pairs[i].b;
    }
    MatrixXd q_feat = PairModel::interpolate_batch(tree, features, model.config().interp_neighbors,
                                                   model.config().interp_power, queries, &c.interp);
    c.batch.fa.resize(d, m);
    c.batch.fb.resize(d, m);
    for (int i = 0; i < m; ++i) {
        c.batch.fa.col(i) = q_feat.col(2 * i);
        c.batch.fb.col(i) = q_feat.col(2 * i + 1);
    }
    PairModel::fill_encodings(c.batch, pa, pb);

    Eigen::RowVectorXd probs = model.same_side_prob_batch(c.batch, &c.g);
    Eigen::RowVectorXd alphas = model.alpha_batch(c.batch, &c.h);

    std::vector<char> same(m);
    std::vector<std::optional<double>> alpha_gt(m);
    for (int i = 0; i < m; ++i) {
        same[i] = pairs[i].label.same_side ? 1 : 0;
        alpha_gt[i] = pairs[i].label.alpha;
    }
    c.sign_loss = loss_sign(probs, same);
    c.alpha_loss = loss_alpha(alphas, alpha_gt);

    PipelineStats stats;
    stats.loss_sign = c.sign_loss.value;
    stats.loss_alpha = c.alpha_loss.value;
    stats.loss_total = sign_weight * c.sign_loss.value + alpha_weight * c.alpha_loss.value;
    int correct = 0;
    double alpha_err = 0.0;
    for (int i = 0; i < m; ++i) {
        bool pred_same = !(probs(i) < 0.5);
        if (pred_same == static_cast<bool>(same[i])) ++correct;
        if (alpha_gt[i]) {
            alpha_err += std::abs(alphas(i) - *alpha_gt[i]);
            ++stats.crossing_pairs;
        }
    }
    stats.sign_accuracy = static_cast<double>(correct) / m;
    stats.mean_alpha_err = stats.crossing_pairs ? alpha_err / stats.crossing_pairs : 0.0;
    return stats;
}

// Accumulates d(total loss)/d(params) into grad (same layout as the store).
inline void pipeline_backward(const PairModel& model, const PipelineCaches& c, double sign_weight,
                              double alpha_weight, VectorXd& grad) {
    const int d = model.config().feature_dim;
    const int m = static_cast<int>(c.batch.fa.cols());

    // chain through the sigmoids
    Eigen::RowVectorXd dlogit =
        (sign_weight * c.sign_loss.grad.array() * c.g.prob.array() * (1.0 - c.g.prob.array()))
            .matrix();
    Eigen::RowVectorXd dz =
        (alpha_weight * c.alpha_loss.grad.array() * c.h.alpha.array() * (1.0 - c.h.alpha.array()))
            .matrix();

    MatrixXd dfa = MatrixXd::Zero(d, m), dfb = MatrixXd::Zero(d, m);
    model.g_backward(c.batch, c.g, dlogit, grad, dfa, dfb);
    model.h_backward(c.batch, c.h, dz, grad, dfa, dfb);

    MatrixXd dq(d, 2 * m);
    for (int i = 0; i < m; ++i) {
        dq.col(2 * i) = dfa.col(i);
        dq.col(2 * i + 1) = dfb.col(i);
    }
    MatrixXd dfeatures = MatrixXd::Zero(d, c.enc.features.cols());
    PairModel::interpolate_backward(c.interp, dq, dfeatures);
    model.encoder_backward(c.enc, dfeatures, grad);
}

// ---------------------------------------------------------------------------
// Central finite-difference check of the analytic gradient, per segment.
// err = max_i |fd_i - an_i| / max(1, |fd_i|, |an_i|)
// ---------------------------------------------------------------------------

struct GradCheckEntry {
    std::string segment;
    double max_err = 0.0;
};

inline std::vector<GradCheckEntry> gradient_check(PairModel& model, const PointKdTree& tree,
                                                  const std::vector<PairSample>& pairs,
                                                  double sign_weight, double alpha_weight,
                                                  double h = 1e-4) {
    VectorXd analytic = VectorXd::Zero(model.params().size());
    {
        PipelineCaches caches;
        pipeline_forward(model, tree, pairs, sign_weight, alpha_weight, caches);
        pipeline_backward(model, caches, sign_weight, alpha_weight, analytic);
    }
    auto loss_at = [&]() {
        PipelineCaches caches;
        PipelineStats s = pipeline_forward(model, tree, pairs, sign_weight, alpha_weight, caches);
        return s.loss_total;
    };
    VectorXd& theta = model.params().values();
    std::vector<GradCheckEntry> report;
    for (const auto& seg : model.params().segments()) {
        GradCheckEntry entry{seg.name, 0.0};
        for (int n = 0; n < seg.rows * seg.cols; ++n) {
            std::ptrdiff_t i = seg.offset + n;
            double saved = theta[i];
            theta[i] = saved + h;
            double lp = loss_at();
            theta[i] = saved - h;
            double lm = loss_at();
            theta[i] = saved;
            double fd = (lp - lm) / (2.0 * h);
            double an = analytic[i];
            double err = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
            entry.max_err = std::max(entry.max_err, err);
        }
        report.push_back(entry);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainConfig {
    int pairs_per_iter = 4000;  // paper-scale: 16000
    int epochs = 20;            // paper-scale: 100
    int iters_per_shape = 10;   // optimizer steps per shape per epoch
    double lr0 = 0.001;
    double sign_weight = 1.0;
    double alpha_weight = 1.0;
    std::uint64_t seed = 0;
    int cloud_points = 1000;    // input cloud size per training shape
    int train_resolution = 64;  // training cube edge = long side / this
    int holdout_pairs = 2000;   // per shape, for epoch metrics
    ModelConfig model;

    nlohmann::json to_json() const {
        return {{"pairs_per_iter", pairs_per_iter},
                {"epochs", epochs},
                {"iters_per_shape", iters_per_shape},
                {"lr0", lr0},
                {"sign_weight", sign_weight},
                {"alpha_weight", alpha_weight},
                {"seed", seed},
                {"cloud_points", cloud_points},
                {"train_resolution", train_resolution},
                {"holdout_pairs", holdout_pairs},
                {"model", model.to_json()}};
    }
};

struct EpochLog {
    int epoch = 0;
    long step = 0;
    double lr = 0.0;
    double train_loss_sign = 0.0;
    double train_loss_alpha = 0.0;
    double train_loss_total = 0.0;
    double holdout_sign_accuracy = 0.0;
    double holdout_mean_alpha_err = 0.0;

    nlohmann::json to_json() const {
        return {{"epoch", epoch},
                {"step", step},
                {"lr", lr},
                {"train_loss_sign", train_loss_sign},
                {"train_loss_alpha", train_loss_alpha},
                {"train_loss_total", train_loss_total},
                {"holdout_sign_accuracy", holdout_sign_accuracy},
                {"holdout_mean_alpha_err", holdout_mean_alpha_err}};
    }
};

struct TrainResult {
    PairModel model;
    std::vector<EpochLog> logs;
};

using EpochCallback = std::function<void(const EpochLog&, const PairModel&)>;

inline TrainResult train(const std::vector<ImplicitShape>& shapes, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
    if (shapes.empty()) throw UsageError("at least one training shape required");

    Rng master(cfg.seed);
    const std::uint64_t model_seed = master.raw();

    struct ShapeData {
        const ImplicitShape* shape;
        PointCloud cloud;
        std::shared_ptr<PointKdTree> tree;
        std::vector<PairSample> holdout;
        PipelineCaches caches;  // reused across steps; neighbor setup memoized
    };
    std::vector<ShapeData> data;
    TrainSampleOptions sample_opt;
    sample_opt.resolution = cfg.train_resolution;
    for (const ImplicitShape& s : shapes) {
        ShapeData sd;
        sd.shape = &s;
        sd.cloud = s.sample_surface(cfg.cloud_points, master.raw());
        sd.tree = std::make_shared<PointKdTree>(sd.cloud.points);
        sd.holdout = sample_training_pairs(sd.cloud, s, cfg.holdout_pairs, master.raw(), sample_opt);
        data.push_back(std::move(sd));
    }

    PairModel model(cfg.model, model_seed);
    AdamState adam(model.params().size());
    const long total_steps = static_cast<long>(cfg.epochs) * static_cast<long>(shapes.size()) *
                             cfg.iters_per_shape;
    long step = 0;
    VectorXd grad(model.params().size());

    TrainResult result{std::move(model), {}};
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double ep_sign = 0.0, ep_alpha = 0.0, ep_total = 0.0;
        double last_lr = 0.0;
        int iters = 0;
        for (ShapeData& sd : data) {
            for (int it = 0; it < cfg.iters_per_shape; ++it) {
                std::vector<PairSample> pairs = sample_training_pairs(
                    sd.cloud, *sd.shape, cfg.pairs_per_iter, master.raw(), sample_opt);
                double lr = cosine_lr(cfg.lr0, step, total_steps);
                last_lr = lr;
                PipelineStats stats = pipeline_forward(result.model, *sd.tree, pairs,
                                                       cfg.sign_weight, cfg.alpha_weight, sd.caches);
                grad.setZero();
                pipeline_backward(result.model, sd.caches, cfg.sign_weight, cfg.alpha_weight, grad);
                double gnorm = grad.norm();
                if (!std::isfinite(stats.loss_total) || !std::isfinite(gnorm))
                    throw NumericalError("non-finite loss at step " + std::to_string(step) +
                                         ", lr=" + std::to_string(lr) +
                                         ", grad_norm=" + std::to_string(gnorm));
                adam.apply(result.model.params().values(), grad, lr);
                ++step;
                ep_sign += stats.loss_sign;
                ep_alpha += stats.loss_alpha;
                ep_total += stats.loss_total;
                ++iters;
            }
        }

        EpochLog log;
        log.epoch = epoch;
        log.step = step;
        log.lr = last_lr;
        log.train_loss_sign = ep_sign / iters;
        log.train_loss_alpha = ep_alpha / iters;
        log.train_loss_total = ep_total / iters;
        double acc = 0.0, aerr = 0.0;
        int acc_n = 0, aerr_n = 0;
        for (ShapeData& sd : data) {
            PipelineStats stats = pipeline_forward(result.model, *sd.tree, sd.holdout,
                                                   cfg.sign_weight, cfg.alpha_weight, sd.caches);
            int m = static_cast<int>(sd.holdout.size());
            acc += stats.sign_accuracy * m;
            acc_n += m;
            aerr += stats.mean_alpha_err * stats.crossing_pairs;
            aerr_n += stats.crossing_pairs;
        }
        log.holdout_sign_accuracy = acc_n ? acc / acc_n : 0.0;
        log.holdout_mean_alpha_err = aerr_n ? aerr / aerr_n : 0.0;
        result.logs.push_back(log);
        if (on_epoch) on_epoch(log, result.model);
    }
    return result;
}

}  // namespace gridmesh
