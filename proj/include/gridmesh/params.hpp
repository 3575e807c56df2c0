#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridmesh/core.hpp"

namespace gridmesh {

// ---------------------------------------------------------------------------
// ParamStore: every trainable weight in one flat vector, addressable both by
// scalar index (for finite-difference checks) and by named matrix segment.
// Segments tagged `h_path` belong to the antisymmetric branch and must never
// carry a bias; register_bias refuses to create one there.
// ---------------------------------------------------------------------------

class ParamStore {
  public:
    struct Segment {
        std::string name;
        int rows = 0, cols = 0;  // cols == 1 for vectors
        std::ptrdiff_t offset = 0;
        bool is_bias = false;
        bool h_path = false;
        double init_scale = 1.0;         // multiplier on the uniform bound
        std::optional<double> init_value;  // constant init instead
    };

    int register_matrix(const std::string& name, int rows, int cols, bool h_path = false,
                        double init_scale = 1.0, std::optional<double> init_value = std::nullopt) {
        return add(name, rows, cols, false, h_path, init_scale, init_value);
    }
    int register_bias(const std::string& name, int rows) {
        if (name.rfind("h.", 0) == 0) throw Error("bias registered on the antisymmetric path");
        return add(name, rows, 1, true, false, 1.0, std::nullopt);
    }

    void finalize() { data_ = VectorXd::Zero(total_); }

    std::size_t size() const { return static_cast<std::size_t>(total_); }
    const std::vector<Segment>& segments() const { return segments_; }

    VectorXd& values() { return data_; }
    const VectorXd& values() const { return data_; }

    Eigen::Map<MatrixXd> mat(int seg) {
        const Segment& s = segments_[seg];
        return Eigen::Map<MatrixXd>(data_.data() + s.offset, s.rows, s.cols);
    }
    Eigen::Map<const MatrixXd> mat(int seg) const {
        const Segment& s = segments_[seg];
        return Eigen::Map<const MatrixXd>(data_.data() + s.offset, s.rows, s.cols);
    }
    Eigen::Map<VectorXd> vec(int seg) {
        const Segment& s = segments_[seg];
        return Eigen::Map<VectorXd>(data_.data() + s.offset, s.rows);
    }
    Eigen::Map<const VectorXd> vec(int seg) const {
        const Segment& s = segments_[seg];
        return Eigen::Map<const VectorXd>(data_.data() + s.offset, s.rows);
    }

    // gradient views over an external flat vector with identical layout
    Eigen::Map<MatrixXd> mat_in(VectorXd& buf, int seg) const {
        const Segment& s = segments_[seg];
        return Eigen::Map<MatrixXd>(buf.data() + s.offset, s.rows, s.cols);
    }
    Eigen::Map<VectorXd> vec_in(VectorXd& buf, int seg) const {
        const Segment& s = segments_[seg];
        return Eigen::Map<VectorXd>(buf.data() + s.offset, s.rows);
    }

    int find(const std::string& name) const {
        for (size_t i = 0; i < segments_.size(); ++i)
            if (segments_[i].name == name) return static_cast<int>(i);
        throw Error("unknown parameter segment: " + name);
    }

    // uniform in ±sqrt(6 / (fan_in + fan_out)) by default; biases start at
    // zero. Segments may override with a bound multiplier or a constant.
    void init_weights(std::uint64_t seed) {
        Rng rng(seed);
        for (size_t i = 0; i < segments_.size(); ++i) {
            const Segment& s = segments_[i];
            if (s.is_bias) {
                vec(static_cast<int>(i)).setZero();
                continue;
            }
            if (s.init_value) {
                mat(static_cast<int>(i)).setConstant(*s.init_value);
                continue;
            }
            double bound = s.init_scale * std::sqrt(6.0 / (s.rows + s.cols));
            auto m = mat(static_cast<int>(i));
            for (int c = 0; c < s.cols; ++c)
                for (int r = 0; r < s.rows; ++r) m(r, c) = rng.uniform(-bound, bound);
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json segs = nlohmann::json::array();
        for (size_t i = 0; i < segments_.size(); ++i) {
            const Segment& s = segments_[i];
            std::vector<double> values(data_.data() + s.offset, data_.data() + s.offset + s.rows * s.cols);
            segs.push_back({{"name", s.name},
                            {"rows", s.rows},
                            {"cols", s.cols},
                            {"bias", s.is_bias},
                            {"data", values}});
        }
        return segs;
    }

    void from_json(const nlohmann::json& segs) {
        if (segs.size() != segments_.size()) throw DataError("incompatible checkpoint: segment count");
        for (size_t i = 0; i < segments_.size(); ++i) {
            const Segment& s = segments_[i];
            const auto& j = segs[i];
            if (j.at("name") != s.name || j.at("rows") != s.rows || j.at("cols") != s.cols)
                throw DataError("incompatible checkpoint: segment " + s.name);
            const auto& values = j.at("data");
            if (static_cast<int>(values.size()) != s.rows * s.cols)
                throw DataError("incompatible checkpoint: data size of " + s.name);
            for (int n = 0; n < s.rows * s.cols; ++n) data_[s.offset + n] = values[n].get<double>();
        }
    }

  private:
    int add(const std::string& name, int rows, int cols, bool is_bias, bool h_path,
            double init_scale, std::optional<double> init_value) {
        if (data_.size() != 0) throw Error("parameter store already finalized");
        Segment s;
        s.name = name;
        s.rows = rows;
        s.cols = cols;
        s.offset = total_;
        s.is_bias = is_bias;
        s.h_path = h_path || name.rfind("h.", 0) == 0;
        s.init_scale = init_scale;
        s.init_value = init_value;
        segments_.push_back(s);
        total_ += std::ptrdiff_t(rows) * cols;
        return static_cast<int>(segments_.size()) - 1;
    }

    std::vector<Segment> segments_;
    std::ptrdiff_t total_ = 0;
    VectorXd data_;
};

}  // namespace gridmesh
