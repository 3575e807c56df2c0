#pragma once

#include <memory>
#include <optional>
#include <string>

#include "gridmesh/core.hpp"
#include "gridmesh/intersect.hpp"
#include "gridmesh/mesh.hpp"
#include "gridmesh/mesh_io.hpp"

namespace gridmesh {

// ---------------------------------------------------------------------------
// PairLabel: ground truth for one point pair. alpha is present exactly when
// the pair straddles the surface.
// ---------------------------------------------------------------------------

struct PairLabel {
    bool same_side = true;
    std::optional<double> alpha;  // in [0,1] when same_side == false
};

enum class ShapeKind { Sphere, Torus, Box, OpenDisk, TriangleSoup };

// ---------------------------------------------------------------------------
// ImplicitShape: analytic implicit shapes plus triangle soups. Watertight
// kinds (sphere/torus/box) answer in sign semantics via their SDF; open kinds
// (disk, soup) answer in crossing-parity semantics. Immutable; all queries
// are safe in parallel.
// ---------------------------------------------------------------------------

class ImplicitShape {
  public:
    static ImplicitShape sphere(const Vec3& center, double radius) {
        ImplicitShape s(ShapeKind::Sphere);
        s.center_ = center;
        s.radius_ = radius;
        return s;
    }
    static ImplicitShape torus(const Vec3& center, double major, double minor) {
        ImplicitShape s(ShapeKind::Torus);
        s.center_ = center;
        s.major_ = major;
        s.minor_ = minor;
        return s;
    }
    static ImplicitShape box(const Vec3& center, const Vec3& half_extent) {
        ImplicitShape s(ShapeKind::Box);
        s.center_ = center;
        s.half_ = half_extent;
        return s;
    }
    // flat disk of given radius in the z = center.z plane
    static ImplicitShape open_disk(const Vec3& center, double radius) {
        ImplicitShape s(ShapeKind::OpenDisk);
        s.center_ = center;
        s.radius_ = radius;
        return s;
    }
    static ImplicitShape triangle_soup(TriangleMesh mesh) {
        ImplicitShape s(ShapeKind::TriangleSoup);
        s.mesh_ = std::make_shared<TriangleMesh>(std::move(mesh));
        s.bvh_ = std::make_shared<TriangleBvh>(*s.mesh_);
        return s;
    }

    ShapeKind kind() const { return kind_; }
    bool watertight() const {
        return kind_ == ShapeKind::Sphere || kind_ == ShapeKind::Torus || kind_ == ShapeKind::Box;
    }
    const TriangleMesh& mesh() const {
        if (!mesh_) throw Error("shape has no mesh");
        return *mesh_;
    }

    // ------------------------------------------------------------------
    // Distance fields
    // ------------------------------------------------------------------

    double sdf(const Vec3& p) const {
        switch (kind_) {
            case ShapeKind::Sphere:
                return (p - center_).norm() - radius_;
            case ShapeKind::Torus: {
                Vec3 q = p - center_;
                double ring = std::sqrt(q.x() * q.x() + q.y() * q.y()) - major_;
                return std::sqrt(ring * ring + q.z() * q.z()) - minor_;
            }
            case ShapeKind::Box: {
                Vec3 q = (p - center_).cwiseAbs() - half_;
                double outside = q.cwiseMax(0.0).norm();
                double inside = std::min(q.maxCoeff(), 0.0);
                return outside + inside;
            }
            default:
                throw DataError("no sign available");
        }
    }

    double udf(const Vec3& p) const {
        switch (kind_) {
            case ShapeKind::OpenDisk: {
                Vec3 q = p - center_;
                double rho = std::sqrt(q.x() * q.x() + q.y() * q.y());
                double dr = std::max(rho - radius_, 0.0);
                return std::sqrt(dr * dr + q.z() * q.z());
            }
            case ShapeKind::TriangleSoup:
                return bvh_->closest_point(p).distance;
            default:
                return std::abs(sdf(p));
        }
    }

    // ------------------------------------------------------------------
    // Pair labeling
    // ------------------------------------------------------------------

    PairLabel label_pair(const Vec3& a, const Vec3& b) const {
        if ((a - b).squaredNorm() == 0.0) throw Error("degenerate pair");
        if (watertight()) return label_by_sign(a, b);
        return label_by_parity(a, b);
    }

    // ------------------------------------------------------------------
    // Surface sampling (analytic where possible), uniform in area
    // ------------------------------------------------------------------

    PointCloud sample_surface(int count, std::uint64_t seed) const {
        Rng rng(seed);
        PointCloud cloud;
        cloud.points.reserve(count);
        cloud.normals.reserve(count);
        switch (kind_) {
            case ShapeKind::Sphere:
                for (int i = 0; i < count; ++i) {
                    Vec3 n = rng.unit_vector();
                    cloud.points.push_back(center_ + radius_ * n);
                    cloud.normals.push_back(n);
                }
                break;
            case ShapeKind::Torus:
                for (int i = 0; i < count; ++i) {
                    double u = rng.uniform(0.0, 2.0 * M_PI);
                    // rejection on the tube angle: area density ∝ R + r cos v
                    double v;
                    do {
                        v = rng.uniform(0.0, 2.0 * M_PI);
                    } while (rng.uniform() > (major_ + minor_ * std::cos(v)) / (major_ + minor_));
                    Vec3 ring_dir(std::cos(u), std::sin(u), 0.0);
                    Vec3 n = std::cos(v) * ring_dir + std::sin(v) * Vec3(0, 0, 1);
                    cloud.points.push_back(center_ + major_ * ring_dir + minor_ * n);
                    cloud.normals.push_back(n);
                }
                break;
            case ShapeKind::Box: {
                // face areas: two of each (y*z, x*z, x*y)
                Vec3 e = 2.0 * half_;
                std::vector<double> areas = {e.y() * e.z(), e.y() * e.z(), e.x() * e.z(),
                                             e.x() * e.z(), e.x() * e.y(), e.x() * e.y()};
                for (int i = 0; i < count; ++i) {
                    int f = rng.pick(areas);
                    int axis = f / 2;
                    double side = (f % 2) ? 1.0 : -1.0;
                    Vec3 p = center_;
                    p[axis] += side * half_[axis];
                    int u = (axis + 1) % 3, v = (axis + 2) % 3;
                    p[u] += rng.uniform(-half_[u], half_[u]);
                    p[v] += rng.uniform(-half_[v], half_[v]);
                    Vec3 n = Vec3::Zero();
                    n[axis] = side;
                    cloud.points.push_back(p);
                    cloud.normals.push_back(n);
                }
                break;
            }
            case ShapeKind::OpenDisk:
                for (int i = 0; i < count; ++i) {
                    double rho = radius_ * std::sqrt(rng.uniform());
                    double theta = rng.uniform(0.0, 2.0 * M_PI);
                    cloud.points.push_back(center_ +
                                           Vec3(rho * std::cos(theta), rho * std::sin(theta), 0.0));
                    cloud.normals.push_back(Vec3(0, 0, 1));
                }
                break;
            case ShapeKind::TriangleSoup:
                return sample_surface_points(*mesh_, count, seed);
        }
        return cloud;
    }

    Aabb bounds() const {
        Aabb box;
        switch (kind_) {
            case ShapeKind::Sphere:
                box.expand(center_ - Vec3::Constant(radius_));
                box.expand(center_ + Vec3::Constant(radius_));
                break;
            case ShapeKind::Torus: {
                Vec3 e(major_ + minor_, major_ + minor_, minor_);
                box.expand(center_ - e);
                box.expand(center_ + e);
                break;
            }
            case ShapeKind::Box:
                box.expand(center_ - half_);
                box.expand(center_ + half_);
                break;
            case ShapeKind::OpenDisk:
                box.expand(center_ - Vec3(radius_, radius_, 0.0));
                box.expand(center_ + Vec3(radius_, radius_, 0.0));
                break;
            case ShapeKind::TriangleSoup:
                return mesh_->bounds();
        }
        return box;
    }

  private:
    explicit ImplicitShape(ShapeKind kind) : kind_(kind) {}

    PairLabel label_by_sign(const Vec3& a, const Vec3& b) const {
        double fa = sdf(a), fb = sdf(b);
        if (fa == 0.0 || fb == 0.0) throw OnSurfaceError("on-surface endpoint");
        PairLabel label;
        label.same_side = (fa < 0.0) == (fb < 0.0);
        if (!label.same_side) label.alpha = bisect(a, b, fa);
        return label;
    }

    // bisection of f along ab; endpoints have strictly opposite signs
    double bisect(const Vec3& a, const Vec3& b, double fa) const {
        double lo = 0.0, hi = 1.0;
        for (int iter = 0; iter < 60; ++iter) {
            double mid = 0.5 * (lo + hi);
            double fm = sdf(a + mid * (b - a));
            if (std::abs(fm) < 1e-10) return mid;
            if ((fm < 0.0) == (fa < 0.0))
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }

    PairLabel label_by_parity(const Vec3& a, const Vec3& b) const {
        std::vector<SegmentHit> hits;
        if (kind_ == ShapeKind::OpenDisk) {
            double za = a.z() - center_.z(), zb = b.z() - center_.z();
            if (za != zb) {
                double t = za / (za - zb);
                if (t >= 0.0 && t <= 1.0) {
                    Vec3 p = a + t * (b - a) - center_;
                    if (p.x() * p.x() + p.y() * p.y() <= radius_ * radius_) hits.push_back({t, 0});
                }
            }
        } else {
            hits = bvh_->segment_hits(a, b);
        }
        for (const SegmentHit& h : hits)
            if (h.alpha < 1e-12 || h.alpha > 1.0 - 1e-12) throw OnSurfaceError("on-surface endpoint");
        PairLabel label;
        label.same_side = hits.size() % 2 == 0;
        if (!label.same_side) label.alpha = hits.front().alpha;
        return label;
    }

    ShapeKind kind_;
    Vec3 center_ = Vec3::Zero();
    double radius_ = 0.0;
    double major_ = 0.0, minor_ = 0.0;
    Vec3 half_ = Vec3::Zero();
    std::shared_ptr<TriangleMesh> mesh_;
    std::shared_ptr<TriangleBvh> bvh_;
};

// ---------------------------------------------------------------------------
// Shape specs: "sphere", "sphere:r=0.4", "torus:R=0.3,r=0.12",
// "box:hx=0.4,hy=0.3,hz=0.25", "disk:r=0.8", "soup:path=mesh.obj",
// with optional cx/cy/cz on every kind.
// ---------------------------------------------------------------------------

inline ImplicitShape parse_shape_spec(const std::string& spec) {
    std::string kind = spec;
    std::string args;
    if (auto colon = spec.find(':'); colon != std::string::npos) {
        kind = spec.substr(0, colon);
        args = spec.substr(colon + 1);
    }
    std::map<std::string, std::string> kv;
    std::istringstream as(args);
    std::string item;
    while (std::getline(as, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("bad shape parameter: " + item);
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    auto num = [&](const std::string& key, double dflt) {
        auto it = kv.find(key);
        return it == kv.end() ? dflt : std::stod(it->second);
    };
    Vec3 center(num("cx", 0.0), num("cy", 0.0), num("cz", 0.0));
    if (kind == "sphere") return ImplicitShape::sphere(center, num("r", 0.4));
    if (kind == "torus") return ImplicitShape::torus(center, num("R", 0.3), num("r", 0.12));
    if (kind == "box")
        return ImplicitShape::box(center, Vec3(num("hx", 0.4), num("hy", 0.3), num("hz", 0.25)));
    if (kind == "disk") return ImplicitShape::open_disk(center, num("r", 0.8));
    if (kind == "soup") {
        auto it = kv.find("path");
        if (it == kv.end()) throw UsageError("soup shape needs path=<mesh file>");
        TriangleMesh mesh = read_mesh(it->second);
        // normalize so the bounding-box long side spans [-0.5, 0.5]
        Aabb box = mesh.bounds();
        double scale = 1.0 / box.longest_extent();
        Vec3 mid = box.center();
        for (Vec3& v : mesh.vertices) v = (v - mid) * scale;
        mesh.finalize();
        return ImplicitShape::triangle_soup(std::move(mesh));
    }
    throw UsageError("unknown shape kind: " + kind);
}

}  // namespace gridmesh
