#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridmesh/core.hpp"
#include "gridmesh/optimizer.hpp"

namespace gridmesh {

// ---------------------------------------------------------------------------
// 2D distance-field regression: fit the signed and unsigned distance fields
// of a circle with a small MLP and record the error profile along y = 0. The
// unsigned variant squares-off its output through |.| so it maps to R+.
// ---------------------------------------------------------------------------

// How the unsigned variant maps its raw output to R+.
enum class UdfHead { Abs, Softplus };

struct Toy2dConfig {
    std::array<int, 3> dims{32, 64, 1};  // layer output sizes
    int n_points = 20000;
    double lr = 0.001;
    int steps = 2000;
    int batch = 2048;
    double circle_radius = 1.0;
    double center_x = 0.0, center_y = 0.0;
    double domain_half = 2.0;  // training samples uniform in [-h, h]^2
    int profile_points = 401;
    std::uint64_t seed = 0;
    UdfHead udf_head = UdfHead::Softplus;
};

struct Toy2dProfile {
    std::string field;  // "sdf" or "udf"
    std::vector<double> x, fitted, gt, abs_err;
    double final_train_loss = 0.0;

    nlohmann::json to_json() const {
        return {{"field", field},       {"x", x},
                {"fitted", fitted},     {"gt", gt},
                {"abs_err", abs_err},   {"final_train_loss", final_train_loss}};
    }

    // mean absolute fitting error over |x - cx| in [lo, hi]
    double band_error(double cx, double lo, double hi) const {
        double sum = 0.0;
        int n = 0;
        for (size_t i = 0; i < x.size(); ++i) {
            double r = std::abs(x[i] - cx);
            if (r < lo || r > hi) continue;
            sum += abs_err[i];
            ++n;
        }
        return n ? sum / n : 0.0;
    }
};

namespace detail {

struct ToyMlp {
    MatrixXd w1, w2, w3;
    VectorXd b1, b2, b3;

    // flat views for Adam
    VectorXd flatten() const {
        VectorXd v(size());
        std::ptrdiff_t o = 0;
        for (const MatrixXd* m : {&w1, &w2, &w3}) {
            std::copy(m->data(), m->data() + m->size(), v.data() + o);
            o += m->size();
        }
        for (const VectorXd* b : {&b1, &b2, &b3}) {
            std::copy(b->data(), b->data() + b->size(), v.data() + o);
            o += b->size();
        }
        return v;
    }
    void unflatten(const VectorXd& v) {
        std::ptrdiff_t o = 0;
        for (MatrixXd* m : {&w1, &w2, &w3}) {
            std::copy(v.data() + o, v.data() + o + m->size(), m->data());
            o += m->size();
        }
        for (VectorXd* b : {&b1, &b2, &b3}) {
            std::copy(v.data() + o, v.data() + o + b->size(), b->data());
            o += b->size();
        }
    }
    std::ptrdiff_t size() const {
        return w1.size() + w2.size() + w3.size() + b1.size() + b2.size() + b3.size();
    }
};

}  // namespace detail

inline Toy2dProfile fit_toy2d_field(bool unsigned_field, const Toy2dConfig& cfg) {
    if (cfg.dims[0] <= 0 || cfg.dims[1] <= 0 || cfg.dims[2] != 1)
        throw UsageError("toy2d layer dims must be positive with scalar output");

    auto sdf = [&](double x, double y) {
        double dx = x - cfg.center_x, dy = y - cfg.center_y;
        return std::sqrt(dx * dx + dy * dy) - cfg.circle_radius;
    };
    auto target = [&](double x, double y) {
        double s = sdf(x, y);
        return unsigned_field ? std::abs(s) : s;
    };

    Rng rng(cfg.seed);
    MatrixXd pts(2, cfg.n_points);
    VectorXd labels(cfg.n_points);
    for (int i = 0; i < cfg.n_points; ++i) {
        double x = rng.uniform(-cfg.domain_half, cfg.domain_half);
        double y = rng.uniform(-cfg.domain_half, cfg.domain_half);
        pts.col(i) = Eigen::Vector2d(x, y);
        labels(i) = target(x, y);
    }

    detail::ToyMlp net;
    auto init = [&](MatrixXd& m, int rows, int cols) {
        double bound = std::sqrt(6.0 / (rows + cols));
        m.resize(rows, cols);
        for (int c = 0; c < cols; ++c)
            for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-bound, bound);
    };
    init(net.w1, cfg.dims[0], 2);
    init(net.w2, cfg.dims[1], cfg.dims[0]);
    init(net.w3, cfg.dims[2], cfg.dims[1]);
    net.b1 = VectorXd::Zero(cfg.dims[0]);
    net.b2 = VectorXd::Zero(cfg.dims[1]);
    net.b3 = VectorXd::Zero(cfg.dims[2]);

    auto head = [&](double z) {
        if (!unsigned_field) return z;
        return cfg.udf_head == UdfHead::Abs ? std::abs(z) : std::log1p(std::exp(-std::abs(z))) +
                                                                std::max(z, 0.0);
    };
    auto head_grad = [&](double z) {
        if (!unsigned_field) return 1.0;
        if (cfg.udf_head == UdfHead::Abs) return z < 0.0 ? -1.0 : 1.0;
        return 1.0 / (1.0 + std::exp(-z));  // d softplus
    };
    auto forward = [&](const MatrixXd& x, MatrixXd* h1 = nullptr, MatrixXd* h2 = nullptr,
                       Eigen::RowVectorXd* raw = nullptr) {
        MatrixXd a1 = ((net.w1 * x).colwise() + net.b1).array().tanh();
        MatrixXd a2 = ((net.w2 * a1).colwise() + net.b2).array().tanh();
        Eigen::RowVectorXd out = ((net.w3 * a2).colwise() + net.b3).row(0);
        if (h1) *h1 = std::move(a1);
        if (h2) *h2 = std::move(a2);
        if (raw) *raw = out;
        return Eigen::RowVectorXd(out.unaryExpr(head));
    };

    VectorXd theta = net.flatten();
    AdamState adam(theta.size());
    double last_loss = 0.0;
    for (int step = 0; step < cfg.steps; ++step) {
        int b = std::min(cfg.batch, cfg.n_points);
        MatrixXd x(2, b);
        VectorXd y(b);
        for (int i = 0; i < b; ++i) {
            int idx = static_cast<int>(rng.uniform_int(cfg.n_points));
            x.col(i) = pts.col(idx);
            y(i) = labels(idx);
        }
        MatrixXd h1, h2;
        Eigen::RowVectorXd raw;
        Eigen::RowVectorXd pred = forward(x, &h1, &h2, &raw);
        Eigen::RowVectorXd err = pred - y.transpose();
        last_loss = err.squaredNorm() / b;
        if (!std::isfinite(last_loss)) throw NumericalError("toy2d loss diverged at step " +
                                                            std::to_string(step));

        Eigen::RowVectorXd dout = 2.0 * err / b;
        if (unsigned_field) dout = dout.cwiseProduct(raw.unaryExpr(head_grad));
        MatrixXd dw3 = dout * h2.transpose();  // 1 x dims[1]
        double db3 = dout.sum();
        MatrixXd dh2 = net.w3.transpose() * dout;
        dh2.array() *= (1.0 - h2.array().square());
        MatrixXd dw2 = dh2 * h1.transpose();
        VectorXd db2 = dh2.rowwise().sum();
        MatrixXd dh1 = net.w2.transpose() * dh2;
        dh1.array() *= (1.0 - h1.array().square());
        MatrixXd dw1 = dh1 * x.transpose();
        VectorXd db1 = dh1.rowwise().sum();

        VectorXd grad(theta.size());
        std::ptrdiff_t o = 0;
        for (const MatrixXd* g : {&dw1, &dw2, &dw3}) {
            std::copy(g->data(), g->data() + g->size(), grad.data() + o);
            o += g->size();
        }
        std::copy(db1.data(), db1.data() + db1.size(), grad.data() + o);
        o += db1.size();
        std::copy(db2.data(), db2.data() + db2.size(), grad.data() + o);
        o += db2.size();
        grad(o) = db3;

        adam.apply(theta, grad, cosine_lr(cfg.lr, step, cfg.steps));
        net.unflatten(theta);
    }

    Toy2dProfile profile;
    profile.field = unsigned_field ? "udf" : "sdf";
    profile.final_train_loss = last_loss;
    MatrixXd px(2, cfg.profile_points);
    for (int i = 0; i < cfg.profile_points; ++i) {
        double x = -cfg.domain_half + 2.0 * cfg.domain_half * i / (cfg.profile_points - 1);
        px.col(i) = Eigen::Vector2d(x, 0.0);
        profile.x.push_back(x);
        profile.gt.push_back(target(x, 0.0));
    }
    Eigen::RowVectorXd fit = forward(px);
    for (int i = 0; i < cfg.profile_points; ++i) {
        profile.fitted.push_back(fit(i));
        profile.abs_err.push_back(std::abs(fit(i) - profile.gt[i]));
    }
    return profile;
}

}  // namespace gridmesh
