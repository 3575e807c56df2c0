#pragma once

#include <memory>
#include <unordered_map>
#include <vector>

#include "gridmesh/core.hpp"
#include "gridmesh/model.hpp"
#include "gridmesh/oracle.hpp"

namespace gridmesh {

struct PointPair {
    Vec3 a, b;
};

// ---------------------------------------------------------------------------
// PairPredictor: pluggable source of per-pair same-side probabilities and
// crossing positions. Backed by the ground-truth oracle, by a trained model,
// or by deliberately corrupted variants for ablations.
// ---------------------------------------------------------------------------

class PairPredictor {
  public:
    virtual ~PairPredictor() = default;
    virtual std::vector<double> same_side_prob(const std::vector<PointPair>& pairs) = 0;
    virtual std::vector<double> alpha(const std::vector<PointPair>& pairs) = 0;
};

// ---------------------------------------------------------------------------
// Ground truth. Endpoints that land exactly on the surface are nudged along
// the segment by 1e-7 of its length, which perturbs alpha by at most that.
// ---------------------------------------------------------------------------

class OraclePredictor : public PairPredictor {
  public:
    explicit OraclePredictor(const ImplicitShape& shape) : shape_(&shape) {}

    std::vector<double> same_side_prob(const std::vector<PointPair>& pairs) override {
        std::vector<double> out(pairs.size());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pairs.size()); ++i)
            out[i] = robust_label(pairs[i]).same_side ? 1.0 : 0.0;
        return out;
    }

    std::vector<double> alpha(const std::vector<PointPair>& pairs) override {
        std::vector<double> out(pairs.size());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pairs.size()); ++i) {
            PairLabel label = robust_label(pairs[i]);
            out[i] = label.alpha ? *label.alpha : 0.5;
        }
        return out;
    }

    PairLabel robust_label(const PointPair& p) const {
        Vec3 a = p.a, b = p.b;
        for (int attempt = 0; attempt < 4; ++attempt) {
            try {
                return shape_->label_pair(a, b);
            } catch (const OnSurfaceError&) {
                Vec3 d = 1e-7 * (b - a);
                a += d;
                b -= d;
            }
        }
        return shape_->label_pair(a, b);
    }

  private:
    const ImplicitShape* shape_;
};

// ---------------------------------------------------------------------------
// Trained model: encodes the input cloud once, then interpolates features at
// query vertices on demand. Vertex features are cached by exact coordinate
// bits, so lattice vertices shared across edges are interpolated once.
// ---------------------------------------------------------------------------

class ModelPredictor : public PairPredictor {
  public:
    ModelPredictor(const PairModel& model, const PointCloud& cloud)
        : model_(&model), field_(model.encode(cloud)) {}

    std::vector<double> same_side_prob(const std::vector<PointPair>& pairs) override {
        PairModel::PairBatch batch = assemble(pairs);
        Eigen::RowVectorXd p = model_->same_side_prob_batch(batch);
        return {p.data(), p.data() + p.cols()};
    }

    std::vector<double> alpha(const std::vector<PointPair>& pairs) override {
        PairModel::PairBatch batch = assemble(pairs);
        Eigen::RowVectorXd a = model_->alpha_batch(batch);
        return {a.data(), a.data() + a.cols()};
    }

    const FeatureField& field() const { return field_; }

  private:
    struct VertexKey {
        std::uint64_t x, y, z;
        bool operator==(const VertexKey&) const = default;
    };
    struct VertexKeyHash {
        std::size_t operator()(const VertexKey& k) const {
            return hash_mix(k.x ^ hash_mix(k.y ^ hash_mix(k.z)));
        }
    };

    static VertexKey key_of(const Vec3& p) {
        VertexKey k;
        std::memcpy(&k.x, &p.x(), 8);
        std::memcpy(&k.y, &p.y(), 8);
        std::memcpy(&k.z, &p.z(), 8);
        return k;
    }

    // index into features_, scheduling an interpolation for unseen vertices
    int feature_index(const Vec3& p, std::vector<Vec3>& missing) {
        auto [it, inserted] = cache_.try_emplace(key_of(p), -1);
        if (inserted) {
            missing.push_back(p);
            it->second = static_cast<int>(features_.size() + missing.size() - 1);
        }
        return it->second;
    }

    PairModel::PairBatch assemble(const std::vector<PointPair>& pairs) {
        const int m = static_cast<int>(pairs.size());
        std::vector<int> ia(m), ib(m);
        std::vector<Vec3> missing;
        for (int i = 0; i < m; ++i) {
            ia[i] = feature_index(pairs[i].a, missing);
            ib[i] = feature_index(pairs[i].b, missing);
        }
        if (!missing.empty()) {
            MatrixXd fresh = PairModel::interpolate_batch(field_, missing);
            for (int c = 0; c < fresh.cols(); ++c) features_.push_back(fresh.col(c));
        }
        const int d = model_->config().feature_dim;
        PairModel::PairBatch batch;
        batch.fa.resize(d, m);
        batch.fb.resize(d, m);
        std::vector<Vec3> pa(m), pb(m);
        for (int i = 0; i < m; ++i) {
            batch.fa.col(i) = features_[ia[i]];
            batch.fb.col(i) = features_[ib[i]];
            pa[i] = pairs[i].a;
            pb[i] = pairs[i].b;
        }
        PairModel::fill_encodings(batch, pa, pb);
        return batch;
    }

    const PairModel* model_;
    FeatureField field_;
    std::unordered_map<VertexKey, int, VertexKeyHash> cache_;
    std::vector<VectorXd> features_;
};

// ---------------------------------------------------------------------------
// Ablation predictors. Signs come from a wrapped source; alphas are replaced.
// ---------------------------------------------------------------------------

// Uniform random alpha drawn once per canonical pair, so swapped queries see
// complementary values and the mesher's continuity guarantee is preserved.
class RandomAlphaPredictor : public PairPredictor {
  public:
    RandomAlphaPredictor(std::shared_ptr<PairPredictor> signs, std::uint64_t seed)
        : signs_(std::move(signs)), seed_(seed) {}

    std::vector<double> same_side_prob(const std::vector<PointPair>& pairs) override {
        return signs_->same_side_prob(pairs);
    }

    std::vector<double> alpha(const std::vector<PointPair>& pairs) override {
        std::vector<double> out(pairs.size());
        for (size_t i = 0; i < pairs.size(); ++i) {
            const Vec3 &a = pairs[i].a, &b = pairs[i].b;
            bool canonical = std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
            const Vec3& lo = canonical ? a : b;
            const Vec3& hi = canonical ? b : a;
            std::uint64_t h = seed_;
            for (const Vec3* v : {&lo, &hi})
                for (int c = 0; c < 3; ++c) {
                    std::uint64_t bits;
                    std::memcpy(&bits, &(*v)[c], 8);
                    h = hash_mix(h ^ bits);
                }
            double u = static_cast<double>(h >> 11) * 0x1.0p-53;
            out[i] = canonical ? u : 1.0 - u;
        }
        return out;
    }

  private:
    std::shared_ptr<PairPredictor> signs_;
    std::uint64_t seed_;
};

// alpha from the unsigned distance ratio udf(a) / (udf(a) + udf(b))
class UdfRatioAlphaPredictor : public PairPredictor {
  public:
    UdfRatioAlphaPredictor(std::shared_ptr<PairPredictor> signs, const ImplicitShape& shape)
        : signs_(std::move(signs)), shape_(&shape) {}

    std::vector<double> same_side_prob(const std::vector<PointPair>& pairs) override {
        return signs_->same_side_prob(pairs);
    }

    std::vector<double> alpha(const std::vector<PointPair>& pairs) override {
        std::vector<double> out(pairs.size());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pairs.size()); ++i) {
            double ua = shape_->udf(pairs[i].a);
            double ub = shape_->udf(pairs[i].b);
            out[i] = (ua + ub) > 0.0 ? ua / (ua + ub) : 0.5;
        }
        return out;
    }

  private:
    std::shared_ptr<PairPredictor> signs_;
    const ImplicitShape* shape_;
};

}  // namespace gridmesh
