#pragma once

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gridmesh/core.hpp"
#include "gridmesh/mesh.hpp"

namespace gridmesh {

namespace detail {

inline std::string lower_ext(const std::string& path) {
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(c));
    return ext;
}

inline void append_double(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

struct PlyProperty {
    std::string name;
    std::string type;       // scalar type, or value type for lists
    std::string count_type; // list count type, empty for scalars
    bool is_list = false;
};

struct PlyElement {
    std::string name;
    size_t count = 0;
    std::vector<PlyProperty> props;
};

inline size_t ply_type_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32")
        return 4;
    if (t == "double" || t == "float64") return 8;
    throw DataError("unknown ply type: " + t);
}

inline double ply_read_scalar(std::istream& in, const std::string& t, bool binary) {
    if (!binary) {
        double v;
        in >> v;
        return v;
    }
    unsigned char buf[8];
    size_t n = ply_type_size(t);
    in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
    if (!in) throw DataError("truncated ply payload");
    if (t == "char" || t == "int8") return static_cast<double>(static_cast<signed char>(buf[0]));
    if (t == "uchar" || t == "uint8") return static_cast<double>(buf[0]);
    auto le = [&](int k) {
        std::uint64_t v = 0;
        for (int i = k - 1; i >= 0; --i) v = (v << 8) | buf[i];
        return v;
    };
    if (t == "short" || t == "int16") return static_cast<double>(static_cast<std::int16_t>(le(2)));
    if (t == "ushort" || t == "uint16") return static_cast<double>(static_cast<std::uint16_t>(le(2)));
    if (t == "int" || t == "int32") return static_cast<double>(static_cast<std::int32_t>(le(4)));
    if (t == "uint" || t == "uint32") return static_cast<double>(static_cast<std::uint32_t>(le(4)));
    if (t == "float" || t == "float32") {
        float f;
        std::uint32_t v = static_cast<std::uint32_t>(le(4));
        std::memcpy(&f, &v, 4);
        return f;
    }
    double d;
    std::uint64_t v = le(8);
    std::memcpy(&d, &v, 8);
    return d;
}

struct PlyContent {
    std::vector<Vec3> positions;
    std::vector<Vec3> normals;
    bool has_normals = false;
    std::vector<std::array<int, 3>> faces;
};

inline PlyContent read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw DataError("not a ply file: " + path);
    bool binary = false;
    std::vector<PlyElement> elements;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment" || tok == "obj_info") continue;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii")
                binary = false;
            else if (fmt == "binary_little_endian")
                binary = true;
            else
                throw DataError("unsupported ply format: " + fmt);
        } else if (tok == "element") {
            PlyElement el;
            ls >> el.name >> el.count;
            elements.push_back(el);
        } else if (tok == "property") {
            if (elements.empty()) throw DataError("ply property before element");
            PlyProperty p;
            std::string t;
            ls >> t;
            if (t == "list") {
                p.is_list = true;
                ls >> p.count_type >> p.type >> p.name;
            } else {
                p.type = t;
                ls >> p.name;
            }
            elements.back().props.push_back(p);
        } else if (tok == "end_header") {
            break;
        }
    }

    PlyContent content;
    for (const PlyElement& el : elements) {
        if (el.name == "vertex") {
            int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
            for (size_t i = 0; i < el.props.size(); ++i) {
                const std::string& n = el.props[i].name;
                if (n == "x") ix = static_cast<int>(i);
                if (n == "y") iy = static_cast<int>(i);
                if (n == "z") iz = static_cast<int>(i);
                if (n == "nx") inx = static_cast<int>(i);
                if (n == "ny") iny = static_cast<int>(i);
                if (n == "nz") inz = static_cast<int>(i);
            }
            if (ix < 0 || iy < 0 || iz < 0) throw DataError("ply vertex element lacks x/y/z");
            content.has_normals = inx >= 0 && iny >= 0 && inz >= 0;
            std::vector<double> row(el.props.size());
            for (size_t v = 0; v < el.count; ++v) {
                for (size_t i = 0; i < el.props.size(); ++i) {
                    if (el.props[i].is_list) throw DataError("list property on ply vertex");
                    row[i] = ply_read_scalar(in, el.props[i].type, binary);
                }
                content.positions.emplace_back(row[ix], row[iy], row[iz]);
                if (content.has_normals) content.normals.emplace_back(row[inx], row[iny], row[inz]);
            }
        } else if (el.name == "face") {
            for (size_t f = 0; f < el.count; ++f) {
                for (const PlyProperty& p : el.props) {
                    if (!p.is_list) {
                        ply_read_scalar(in, p.type, binary);
                        continue;
                    }
                    int n = static_cast<int>(ply_read_scalar(in, p.count_type, binary));
                    std::vector<int> poly(n);
                    for (int i = 0; i < n; ++i)
                        poly[i] = static_cast<int>(ply_read_scalar(in, p.type, binary));
                    for (int i = 2; i < n; ++i) content.faces.push_back({poly[0], poly[i - 1], poly[i]});
                }
            }
        } else {
            if (binary) throw DataError("unsupported ply element in binary file: " + el.name);
            for (size_t i = 0; i < el.count; ++i) std::getline(in, line);
        }
    }
    return content;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Meshes: ASCII OBJ and PLY (ascii / binary little-endian)
// ---------------------------------------------------------------------------

inline TriangleMesh read_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    TriangleMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("v ", 0) == 0) {
            std::istringstream ls(line.substr(2));
            Vec3 p;
            ls >> p.x() >> p.y() >> p.z();
            mesh.vertices.push_back(p);
        } else if (line.rfind("f ", 0) == 0) {
            std::istringstream ls(line.substr(2));
            std::vector<int> poly;
            std::string tok;
            while (ls >> tok) {
                // "idx", "idx/..", "idx//.."
                int idx = std::stoi(tok.substr(0, tok.find('/')));
                if (idx < 0) idx = static_cast<int>(mesh.vertices.size()) + idx + 1;
                poly.push_back(idx - 1);
            }
            for (size_t i = 2; i < poly.size(); ++i)
                mesh.triangles.push_back({poly[0], static_cast<int>(poly[i - 1]), static_cast<int>(poly[i])});
        }
    }
    if (mesh.vertices.empty()) throw DataError("no vertices in " + path);
    mesh.finalize();
    return mesh;
}

inline void write_obj(const TriangleMesh& mesh, const std::string& path) {
    std::string out;
    out.reserve(mesh.vertices.size() * 40 + mesh.triangles.size() * 24);
    for (const Vec3& v : mesh.vertices) {
        out += "v ";
        detail::append_double(out, v.x());
        out += ' ';
        detail::append_double(out, v.y());
        out += ' ';
        detail::append_double(out, v.z());
        out += '\n';
    }
    for (const auto& t : mesh.triangles) {
        out += "f " + std::to_string(t[0] + 1) + ' ' + std::to_string(t[1] + 1) + ' ' +
               std::to_string(t[2] + 1) + '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << out;
}

inline TriangleMesh read_ply_mesh(const std::string& path) {
    detail::PlyContent content = detail::read_ply(path);
    TriangleMesh mesh;
    mesh.vertices = std::move(content.positions);
    mesh.triangles = std::move(content.faces);
    if (mesh.vertices.empty()) throw DataError("no vertices in " + path);
    mesh.finalize();
    return mesh;
}

inline void write_ply_mesh(const TriangleMesh& mesh, const std::string& path, bool binary = true) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
    f << "element vertex " << mesh.vertices.size() << "\n";
    f << "property double x\nproperty double y\nproperty double z\n";
    f << "element face " << mesh.triangles.size() << "\n";
    f << "property list uchar int vertex_indices\nend_header\n";
    if (binary) {
        for (const Vec3& v : mesh.vertices) {
            double xyz[3] = {v.x(), v.y(), v.z()};
            f.write(reinterpret_cast<const char*>(xyz), 24);
        }
        for (const auto& t : mesh.triangles) {
            unsigned char n = 3;
            std::int32_t idx[3] = {t[0], t[1], t[2]};
            f.write(reinterpret_cast<const char*>(&n), 1);
            f.write(reinterpret_cast<const char*>(idx), 12);
        }
    } else {
        std::string out;
        for (const Vec3& v : mesh.vertices) {
            detail::append_double(out, v.x());
            out += ' ';
            detail::append_double(out, v.y());
            out += ' ';
            detail::append_double(out, v.z());
            out += '\n';
        }
        for (const auto& t : mesh.triangles)
            out += "3 " + std::to_string(t[0]) + ' ' + std::to_string(t[1]) + ' ' +
                   std::to_string(t[2]) + '\n';
        f << out;
    }
}

inline TriangleMesh read_mesh(const std::string& path) {
    std::string ext = detail::lower_ext(path);
    if (ext == "obj") return read_obj(path);
    if (ext == "ply") return read_ply_mesh(path);
    throw DataError("unsupported mesh format: " + path);
}

inline void write_mesh(const TriangleMesh& mesh, const std::string& path) {
    std::string ext = detail::lower_ext(path);
    if (ext == "obj")
        write_obj(mesh, path);
    else if (ext == "ply")
        write_ply_mesh(mesh, path);
    else
        throw DataError("unsupported mesh format: " + path);
}

// ---------------------------------------------------------------------------
// Point clouds: XYZ ("x y z [nx ny nz]" per line) and PLY
// ---------------------------------------------------------------------------

inline PointCloud read_xyz(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    PointCloud cloud;
    std::string line;
    bool first = true, with_normals = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        Vec3 p;
        if (!(ls >> p.x() >> p.y() >> p.z())) continue;
        Vec3 n;
        bool got_n = static_cast<bool>(ls >> n.x() >> n.y() >> n.z());
        if (first) {
            with_normals = got_n;
            first = false;
        } else if (got_n != with_normals) {
            throw DataError("inconsistent normal columns in " + path);
        }
        cloud.points.push_back(p);
        if (with_normals) cloud.normals.push_back(n);
    }
    if (cloud.points.empty()) throw DataError("no points in " + path);
    return cloud;
}

inline void write_xyz(const PointCloud& cloud, const std::string& path) {
    std::string out;
    out.reserve(cloud.points.size() * 60);
    for (size_t i = 0; i < cloud.points.size(); ++i) {
        detail::append_double(out, cloud.points[i].x());
        out += ' ';
        detail::append_double(out, cloud.points[i].y());
        out += ' ';
        detail::append_double(out, cloud.points[i].z());
        if (cloud.has_normals()) {
            for (int c = 0; c < 3; ++c) {
                out += ' ';
                detail::append_double(out, cloud.normals[i][c]);
            }
        }
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << out;
}

inline PointCloud read_ply_cloud(const std::string& path) {
    detail::PlyContent content = detail::read_ply(path);
    PointCloud cloud;
    cloud.points = std::move(content.positions);
    if (content.has_normals) cloud.normals = std::move(content.normals);
    if (cloud.points.empty()) throw DataError("no points in " + path);
    return cloud;
}

inline void write_ply_cloud(const PointCloud& cloud, const std::string& path, bool binary = true) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
    f << "element vertex " << cloud.points.size() << "\n";
    f << "property double x\nproperty double y\nproperty double z\n";
    if (cloud.has_normals()) f << "property double nx\nproperty double ny\nproperty double nz\n";
    f << "end_header\n";
    if (binary) {
        for (size_t i = 0; i < cloud.points.size(); ++i) {
            double row[6] = {cloud.points[i].x(), cloud.points[i].y(), cloud.points[i].z(), 0, 0, 0};
            int n = 3;
            if (cloud.has_normals()) {
                row[3] = cloud.normals[i].x();
                row[4] = cloud.normals[i].y();
                row[5] = cloud.normals[i].z();
                n = 6;
            }
            f.write(reinterpret_cast<const char*>(row), 8 * n);
        }
    } else {
        std::string out;
        for (size_t i = 0; i < cloud.points.size(); ++i) {
            detail::append_double(out, cloud.points[i].x());
            out += ' ';
            detail::append_double(out, cloud.points[i].y());
            out += ' ';
            detail::append_double(out, cloud.points[i].z());
            if (cloud.has_normals()) {
                for (int c = 0; c < 3; ++c) {
                    out += ' ';
                    detail::append_double(out, cloud.normals[i][c]);
                }
            }
            out += '\n';
        }
        f << out;
    }
}

inline PointCloud read_cloud(const std::string& path) {
    std::string ext = detail::lower_ext(path);
    if (ext == "xyz") return read_xyz(path);
    if (ext == "ply") return read_ply_cloud(path);
    throw DataError("unsupported cloud format: " + path);
}

inline void write_cloud(const PointCloud& cloud, const std::string& path) {
    std::string ext = detail::lower_ext(path);
    if (ext == "xyz")
        write_xyz(cloud, path);
    else if (ext == "ply")
        write_ply_cloud(cloud, path);
    else
        throw DataError("unsupported cloud format: " + path);
}

}  // namespace gridmesh
