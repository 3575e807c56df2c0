#pragma once

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "gridmesh/core.hpp"

namespace gridmesh {

constexpr double kDegenerateArea = 1e-12;

// ---------------------------------------------------------------------------
// PointCloud
// ---------------------------------------------------------------------------

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // empty or same size as points, unit length

    bool has_normals() const { return !normals.empty(); }
    size_t size() const { return points.size(); }

    Aabb bounds() const {
        Aabb box;
        for (const Vec3& p : points) box.expand(p);
        return box;
    }
};

// ---------------------------------------------------------------------------
// TriangleMesh: indexed triangle soup with a per-triangle normal/area cache.
// Degenerate triangles (area < 1e-12) are kept in the index buffer but
// excluded from the normal cache and from area-weighted sampling.
// ---------------------------------------------------------------------------

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    // caches, filled by finalize()
    std::vector<Vec3> tri_normals;   // unit; zero vector for degenerate
    std::vector<double> tri_areas;   // exact, including degenerate
    std::vector<char> tri_degenerate;

    size_t triangle_count() const { return triangles.size(); }
    bool empty() const { return triangles.empty(); }

    Vec3 tri_vertex(int t, int corner) const { return vertices[triangles[t][corner]]; }

    Vec3 tri_centroid(int t) const {
        return (tri_vertex(t, 0) + tri_vertex(t, 1) + tri_vertex(t, 2)) / 3.0;
    }

    void finalize() {
        const size_t n = triangles.size();
        tri_normals.assign(n, Vec3::Zero());
        tri_areas.assign(n, 0.0);
        tri_degenerate.assign(n, 0);
        for (size_t t = 0; t < n; ++t) {
            for (int c = 0; c < 3; ++c) {
                int idx = triangles[t][c];
                if (idx < 0 || idx >= static_cast<int>(vertices.size()))
                    throw DataError("triangle index out of range");
            }
            Vec3 e1 = tri_vertex(t, 1) - tri_vertex(t, 0);
            Vec3 e2 = tri_vertex(t, 2) - tri_vertex(t, 0);
            Vec3 cr = e1.cross(e2);
            double area = 0.5 * cr.norm();
            tri_areas[t] = area;
            if (area < kDegenerateArea) {
                tri_degenerate[t] = 1;
            } else {
                tri_normals[t] = cr / cr.norm();
            }
        }
    }

    double total_area() const {
        double a = 0.0;
        for (size_t t = 0; t < tri_areas.size(); ++t)
            if (!tri_degenerate[t]) a += tri_areas[t];
        return a;
    }

    Aabb bounds() const {
        Aabb box;
        for (const Vec3& v : vertices) box.expand(v);
        return box;
    }

    // V - E + F with undirected edge counting
    long euler_characteristic() const {
        std::map<std::pair<int, int>, int> edges;
        for (const auto& tri : triangles) {
            for (int c = 0; c < 3; ++c) {
                int a = tri[c], b = tri[(c + 1) % 3];
                edges[{std::min(a, b), std::max(a, b)}]++;
            }
        }
        return static_cast<long>(vertices.size()) - static_cast<long>(edges.size()) +
               static_cast<long>(triangles.size());
    }
};

// ---------------------------------------------------------------------------
// Surface sampling, area-proportional, deterministic per seed. Each sample
// carries the normal of its source triangle.
// ---------------------------------------------------------------------------

inline PointCloud sample_surface_points(const TriangleMesh& mesh, int count, std::uint64_t seed) {
    if (mesh.tri_areas.size() != mesh.triangles.size())
        throw Error("mesh not finalized");
    std::vector<double> cumulative;
    std::vector<int> tri_of;
    cumulative.reserve(mesh.triangle_count());
    double total = 0.0;
    for (size_t t = 0; t < mesh.triangle_count(); ++t) {
        if (mesh.tri_degenerate[t]) continue;
        total += mesh.tri_areas[t];
        cumulative.push_back(total);
        tri_of.push_back(static_cast<int>(t));
    }
    if (cumulative.empty() || total <= 0.0) throw DataError("no samplable area");

    Rng rng(seed);
    PointCloud cloud;
    cloud.points.reserve(count);
    cloud.normals.reserve(count);
    for (int i = 0; i < count; ++i) {
        double u = rng.uniform() * total;
        size_t k = std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
        if (k >= cumulative.size()) k = cumulative.size() - 1;
        int t = tri_of[k];
        // uniform barycentric
        double r1 = std::sqrt(rng.uniform());
        double r2 = rng.uniform();
        Vec3 p = (1.0 - r1) * mesh.tri_vertex(t, 0) + r1 * (1.0 - r2) * mesh.tri_vertex(t, 1) +
                 r1 * r2 * mesh.tri_vertex(t, 2);
        cloud.points.push_back(p);
        cloud.normals.push_back(mesh.tri_normals[t]);
    }
    return cloud;
}

// ---------------------------------------------------------------------------
// Primitive meshes (mostly for tests and demos)
// ---------------------------------------------------------------------------

inline TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero()) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    };
    for (Vec3& v : verts) v.normalize();
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    };
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::make_pair(std::min(a, b), std::max(a, b));
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 m = (verts[a] + verts[b]).normalized();
            verts.push_back(m);
            int idx = static_cast<int>(verts.size()) - 1;
            midpoint[key] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    TriangleMesh mesh;
    mesh.vertices.reserve(verts.size());
    for (const Vec3& v : verts) mesh.vertices.push_back(center + radius * v);
    mesh.triangles = std::move(faces);
    mesh.finalize();
    return mesh;
}

inline TriangleMesh make_box_mesh(const Vec3& center, const Vec3& half_extent) {
    TriangleMesh mesh;
    for (int i = 0; i < 8; ++i) {
        Vec3 corner(((i & 1) ? 1 : -1) * half_extent.x(), ((i & 2) ? 1 : -1) * half_extent.y(),
                    ((i & 4) ? 1 : -1) * half_extent.z());
        mesh.vertices.push_back(center + corner);
    }
    // 12 triangles, outward winding
    const int quads[6][4] = {
        {0, 2, 3, 1},  // z-
        {4, 5, 7, 6},  // z+
        {0, 1, 5, 4},  // y-
        {2, 6, 7, 3},  // y+
        {0, 4, 6, 2},  // x-
        {1, 3, 7, 5},  // x+
    };
    for (const auto& q : quads) {
        mesh.triangles.push_back({q[0], q[1], q[2]});
        mesh.triangles.push_back({q[0], q[2], q[3]});
    }
    mesh.finalize();
    return mesh;
}

// Flat triangulated grid in the z=0 plane covering [-half, half]^2
inline TriangleMesh make_grid_plane(double half, int cells) {
    TriangleMesh mesh;
    int n = cells + 1;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            mesh.vertices.push_back(
                Vec3(-half + 2.0 * half * i / cells, -half + 2.0 * half * j / cells, 0.0));
    for (int j = 0; j < cells; ++j) {
        for (int i = 0; i < cells; ++i) {
            int v00 = j * n + i, v10 = v00 + 1, v01 = v00 + n, v11 = v01 + 1;
            mesh.triangles.push_back({v00, v10, v11});
            mesh.triangles.push_back({v00, v11, v01});
        }
    }
    mesh.finalize();
    return mesh;
}

inline TriangleMesh make_disk_mesh(double radius, int segments, const Vec3& center = Vec3::Zero()) {
    TriangleMesh mesh;
    mesh.vertices.push_back(center);
    for (int i = 0; i < segments; ++i) {
        double a = 2.0 * M_PI * i / segments;
        mesh.vertices.push_back(center + Vec3(radius * std::cos(a), radius * std::sin(a), 0.0));
    }
    for (int i = 0; i < segments; ++i)
        mesh.triangles.push_back({0, 1 + i, 1 + (i + 1) % segments});
    mesh.finalize();
    return mesh;
}

inline TriangleMesh make_torus_mesh(double major, double minor, int nu, int nv,
                                    const Vec3& center = Vec3::Zero()) {
    TriangleMesh mesh;
    for (int i = 0; i < nu; ++i) {
        double u = 2.0 * M_PI * i / nu;
        for (int j = 0; j < nv; ++j) {
            double v = 2.0 * M_PI * j / nv;
            double rr = major + minor * std::cos(v);
            mesh.vertices.push_back(center + Vec3(rr * std::cos(u), rr * std::sin(u), minor * std::sin(v)));
        }
    }
    auto at = [&](int i, int j) { return (i % nu) * nv + (j % nv); };
    for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nv; ++j) {
            int a = at(i, j), b = at(i + 1, j), c = at(i + 1, j + 1), d = at(i, j + 1);
            mesh.triangles.push_back({a, b, c});
            mesh.triangles.push_back({a, c, d});
        }
    }
    mesh.finalize();
    return mesh;
}

}  // namespace gridmesh
