#pragma once

#include <optional>
#include <vector>

#include "gridmesh/core.hpp"

namespace gridmesh {

constexpr double kProbClamp = 1e-7;

struct LossValue {
    double value = 0.0;
    Eigen::RowVectorXd grad;  // d(value)/d(prediction), one entry per pair
};

// Sum over pairs of |alpha_pred - alpha_gt| where the ground truth lies in
// [0,1]; pairs without a crossing contribute exactly zero loss and gradient.
// Subgradient 0 at the kink.
inline LossValue loss_alpha(const Eigen::RowVectorXd& alpha_pred,
                            const std::vector<std::optional<double>>& alpha_gt) {
    if (static_cast<size_t>(alpha_pred.cols()) != alpha_gt.size())
        throw Error("loss_alpha: length mismatch");
    LossValue out;
    out.grad.setZero(alpha_pred.cols());
    for (int i = 0; i < alpha_pred.cols(); ++i) {
        if (!alpha_gt[i] || *alpha_gt[i] < 0.0 || *alpha_gt[i] > 1.0) continue;
        double diff = alpha_pred(i) - *alpha_gt[i];
        out.value += std::abs(diff);
        out.grad(i) = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    }
    return out;
}

// Mean binary cross-entropy over same-side probabilities, clamped to
// [1e-7, 1-1e-7]. Clamped entries carry zero gradient.
inline LossValue loss_sign(const Eigen::RowVectorXd& prob, const std::vector<char>& same_side) {
    if (static_cast<size_t>(prob.cols()) != same_side.size())
        throw Error("loss_sign: length mismatch");
    const int m = static_cast<int>(prob.cols());
    LossValue out;
    out.grad.setZero(m);
    for (int i = 0; i < m; ++i) {
        double p = prob(i);
        bool clamped = p < kProbClamp || p > 1.0 - kProbClamp;
        double ph = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
        double y = same_side[i] ? 1.0 : 0.0;
        out.value += -(y * std::log(ph) + (1.0 - y) * std::log(1.0 - ph));
        if (!clamped) out.grad(i) = (-y / ph + (1.0 - y) / (1.0 - ph)) / m;
    }
    out.value /= m;
    return out;
}

}  // namespace gridmesh
