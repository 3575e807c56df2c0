#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gridmesh {

using Vec3 = Eigen::Vector3d;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto exit codes (usage=1, data=2, numeric=3).
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : Error {
    using Error::Error;
};
struct DataError : Error {
    using Error::Error;
};
struct NumericalError : Error {
    using Error::Error;
};
// Raised when a sampled pair endpoint lands exactly on the surface; callers
// resample.
struct OnSurfaceError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Axis-aligned bounding box
// ---------------------------------------------------------------------------

struct Aabb {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());

    bool valid() const { return (lo.array() <= hi.array()).all(); }

    void expand(const Vec3& p) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    void expand(const Aabb& b) {
        lo = lo.cwiseMin(b.lo);
        hi = hi.cwiseMax(b.hi);
    }
    Vec3 extent() const { return hi - lo; }
    Vec3 center() const { return 0.5 * (lo + hi); }
    double longest_extent() const { return extent().maxCoeff(); }
    double diagonal() const { return extent().norm(); }
    bool contains(const Vec3& p) const {
        return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
    }
    // Squared distance from a point to the box (0 inside).
    double sq_distance(const Vec3& p) const {
        Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
        return d.squaredNorm();
    }
};

// ---------------------------------------------------------------------------
// Deterministic RNG. std::mt19937_64 raw draws only; the distribution helpers
// avoid std::* distributions so streams are identical across standard
// libraries.
// ---------------------------------------------------------------------------

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n) { return raw() % n; }

    // index drawn from unnormalized weights
    int pick(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        for (size_t i = 0; i + 1 < weights.size(); ++i) {
            if (u < weights[i]) return static_cast<int>(i);
            u -= weights[i];
        }
        return static_cast<int>(weights.size()) - 1;
    }

    // standard normal via Box-Muller (cached second value)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    Vec3 unit_vector() {
        Vec3 v(normal(), normal(), normal());
        double n = v.norm();
        while (n < 1e-12) {
            v = Vec3(normal(), normal(), normal());
            n = v.norm();
        }
        return v / n;
    }

    // Derive an independent stream (e.g. per-worker or per-stage seeds).
    std::uint64_t fork() { return raw() ^ 0x9e3779b97f4a7c15ull; }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// splitmix64; used where a value must be derived from a key without an engine
inline std::uint64_t hash_mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// ---------------------------------------------------------------------------
// Worker count: min(hardware, GRIDMESH_THREADS when set)
// ---------------------------------------------------------------------------

inline int worker_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    if (const char* env = std::getenv("GRIDMESH_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0) n = std::min(n, static_cast<int>(cap));
    }
    return n;
}

// Apply the cap to OpenMP/Eigen. Call once at program start.
inline void apply_thread_cap() {
    int n = worker_count();
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
    Eigen::setNbThreads(n);
}

}  // namespace gridmesh
