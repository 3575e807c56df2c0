#pragma once

#include "gridmesh/core.hpp"

namespace gridmesh {

// lr(t) = lr0 * 0.5 * (1 + cos(pi t / T)), per optimizer step, no restarts
inline double cosine_lr(double lr0, long step, long total_steps) {
    if (total_steps <= 0) return lr0;
    double t = std::min<double>(static_cast<double>(step), static_cast<double>(total_steps));
    return lr0 * 0.5 * (1.0 + std::cos(M_PI * t / static_cast<double>(total_steps)));
}

// ---------------------------------------------------------------------------
// Adam with bias correction. Accumulators mirror the flat parameter vector.
// ---------------------------------------------------------------------------

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    VectorXd m, v;

    explicit AdamState(std::size_t n) : m(VectorXd::Zero(n)), v(VectorXd::Zero(n)) {}

    void apply(VectorXd& params, const VectorXd& grad, double lr) {
        ++step;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
        double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        params.array() -=
            lr * (m.array() / c1) / ((v.array() / c2).sqrt() + epsilon);
    }
};

}  // namespace gridmesh
