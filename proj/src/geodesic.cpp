#include "sphenc/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "sphenc/error.hpp"

namespace sphenc {

std::uint64_t vertex_count(int level) {
    if (level < 0 || level > 15) throw config_error("vertex_count: level out of range");
    return 10ull * (1ull << (2 * level)) + 2ull;
}

std::uint64_t face_count(int level) {
    if (level < 0 || level > 15) throw config_error("face_count: level out of range");
    return 20ull * (1ull << (2 * level));
}

std::vector<int> GeodesicTriangle::face_path() const {
    std::vector<int> path(std::size_t(level) + 1);
    std::uint64_t id = face_id;
    for (int l = level; l >= 1; --l) {
        path[std::size_t(l)] = int(id & 3u);
        id >>= 2;
    }
    path[0] = int(id);
    return path;
}

namespace {

IcosahedronBase make_base_icosahedron() {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;

    std::vector<Vec3> verts;
    for (double a : {-1.0, 1.0})
        for (double b : {-phi, phi}) {
            verts.push_back({0.0, a, b});
            verts.push_back({a, b, 0.0});
            verts.push_back({b, 0.0, a});
        }
    for (auto& v : verts) v = normalized(v);
    std::sort(verts.begin(), verts.end(), [](const Vec3& p, const Vec3& q) {
        if (p.x != q.x) return p.x < q.x;
        if (p.y != q.y) return p.y < q.y;
        return p.z < q.z;
    });

    IcosahedronBase base;
    std::copy(verts.begin(), verts.end(), base.vertices.begin());

    // Pairwise dots of distinct icosahedron vertices are +-1/sqrt(5) or -1;
    // the five nearest neighbours are exactly the pairs with positive dot.
    auto adjacent = [&](int i, int j) { return dot(verts[std::size_t(i)], verts[std::size_t(j)]) > 0.2; };

    std::vector<std::array<std::uint32_t, 3>> faces;
    for (int i = 0; i < 12; ++i)
        for (int j = i + 1; j < 12; ++j) {
            if (!adjacent(i, j)) continue;
            for (int k = j + 1; k < 12; ++k) {
                if (!adjacent(i, k) || !adjacent(j, k)) continue;
                Vec3 n = cross(verts[std::size_t(j)] - verts[std::size_t(i)],
                               verts[std::size_t(k)] - verts[std::size_t(i)]);
                bool outward = dot(n, verts[std::size_t(i)]) > 0.0;
                faces.push_back({std::uint32_t(i), std::uint32_t(outward ? j : k),
                                 std::uint32_t(outward ? k : j)});
            }
        }
    if (faces.size() != 20) throw geometry_error("icosahedron face enumeration failed");
    std::sort(faces.begin(), faces.end());
    std::copy(faces.begin(), faces.end(), base.faces.begin());

    for (int f = 0; f < 20; ++f) {
        const auto& tri = base.faces[std::size_t(f)];
        Vec3 a = base.vertices[tri[0]], b = base.vertices[tri[1]], c = base.vertices[tri[2]];
        base.centroids[std::size_t(f)] = normalized(a + b + c);
        base.edge_normals[std::size_t(f)] = {cross(a, b), cross(b, c), cross(c, a)};
    }
    return base;
}

bool inside_base_face(const IcosahedronBase& base, int f, Vec3 d, double eps) {
    const auto& n = base.edge_normals[std::size_t(f)];
    return dot(d, n[0]) >= -eps && dot(d, n[1]) >= -eps && dot(d, n[2]) >= -eps;
}

}  // namespace

const IcosahedronBase& base_icosahedron() {
    static const IcosahedronBase base = make_base_icosahedron();
    return base;
}

Vec3 sanitize_direction(Vec3 d) {
    double n = norm(d);
    if (std::abs(n - 1.0) > 1e-3)
        throw std::invalid_argument("direction norm " + std::to_string(n) + " is not within 1e-3 of 1");
    return {d.x / n, d.y / n, d.z / n};
}

Barycentric chord_barycentric(Vec3 d, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Moeller-Trumbore with the ray origin at the sphere center.
    Vec3 e1 = b - a, e2 = c - a;
    Vec3 p = cross(d, e2);
    double det = dot(e1, p);
    if (det == 0.0) throw geometry_error("degenerate chord triangle");
    Vec3 t = -a;  // origin - a
    double u = dot(t, p) / det;
    Vec3 q = cross(t, e1);
    double v = dot(d, q) / det;

    Barycentric bary;
    bary[0] = 1.0 - u - v;
    bary[1] = u;
    bary[2] = v;
    for (int i = 0; i < 3; ++i) bary[i] = std::max(bary[i], 0.0);
    double s = bary.sum();
    if (s <= 0.0) throw geometry_error("barycentric clamp collapsed to zero");
    for (int i = 0; i < 3; ++i) bary[i] /= s;
    return bary;
}

Located icosahedron_intersection(Vec3 d) {
    d = sanitize_direction(d);
    const IcosahedronBase& base = base_icosahedron();

    int best = 0;
    double best_dot = -2.0;
    for (int f = 0; f < 20; ++f) {
        double c = dot(d, base.centroids[std::size_t(f)]);
        if (c > best_dot) {
            best_dot = c;
            best = f;
        }
    }

    int face = -1;
    const auto& bn = base.edge_normals[std::size_t(best)];
    if (dot(d, bn[0]) > kContainEps && dot(d, bn[1]) > kContainEps && dot(d, bn[2]) > kContainEps) {
        face = best;  // strictly interior: no other face can contain d
    } else {
        for (int f = 0; f < 20; ++f) {
            if (inside_base_face(base, f, d, kContainEps)) {
                face = f;
                break;
            }
        }
        if (face < 0) {
            // Boundary-of-boundary numerics; retry with a relaxed epsilon.
            for (int f = 0; f < 20; ++f) {
                if (inside_base_face(base, f, d, 1e-6)) {
                    face = f;
                    break;
                }
            }
        }
        if (face < 0) throw geometry_error("no base face contains direction");
    }

    Located out;
    out.tri.level = 0;
    out.tri.face_id = std::uint64_t(face);
    const auto& idx = base.faces[std::size_t(face)];
    for (int i = 0; i < 3; ++i) out.tri.v[i] = base.vertices[idx[std::size_t(i)]];
    out.bary = chord_barycentric(d, out.tri.v[0], out.tri.v[1], out.tri.v[2]);
    return out;
}

Refined refine_triangle(const GeodesicTriangle& tri, Vec3 d) {
    if (tri.level >= kMaxTraversalLevel) throw config_error("refine_triangle: traversal depth guard");

    Vec3 m12 = normalized(tri.v[0] + tri.v[1]);
    Vec3 m23 = normalized(tri.v[1] + tri.v[2]);
    Vec3 m31 = normalized(tri.v[2] + tri.v[0]);

    // Children share the parent's outer edge planes, so containment reduces to
    // the three interior great-circle planes.
    double s0 = dot(d, cross(m12, m31));
    double s1 = dot(d, cross(m23, m12));
    double s2 = dot(d, cross(m31, m23));

    int child = -1;
    for (double eps : {kContainEps, 1e-6}) {
        if (s0 >= -eps)
            child = 0;
        else if (s1 >= -eps)
            child = 1;
        else if (s2 >= -eps)
            child = 2;
        else if (s0 <= eps && s1 <= eps && s2 <= eps)
            child = 3;
        if (child >= 0) break;
    }
    if (child < 0) throw geometry_error("refine_triangle: no child contains direction");

    Refined out;
    out.child_index = child;
    out.tri.level = tri.level + 1;
    out.tri.face_id = tri.face_id * 4 + std::uint64_t(child);
    switch (child) {
        case 0: out.tri.v[0] = tri.v[0]; out.tri.v[1] = m12; out.tri.v[2] = m31; break;
        case 1: out.tri.v[0] = tri.v[1]; out.tri.v[1] = m23; out.tri.v[2] = m12; break;
        case 2: out.tri.v[0] = tri.v[2]; out.tri.v[1] = m31; out.tri.v[2] = m23; break;
        default: out.tri.v[0] = m12; out.tri.v[1] = m23; out.tri.v[2] = m31; break;
    }
    out.bary = chord_barycentric(d, out.tri.v[0], out.tri.v[1], out.tri.v[2]);
    return out;
}

DenseVertexTables build_dense_tables(int max_level) {
    if (max_level < -1 || max_level > GeodesicGrid::kMaxDenseLevel)
        throw config_error("build_dense_tables: level out of range");

    DenseVertexTables t;
    t.max_level = max_level;
    if (max_level < 0) return t;

    const IcosahedronBase& base = base_icosahedron();
    t.vertices.assign(base.vertices.begin(), base.vertices.end());
    t.faces.emplace_back(base.faces.begin(), base.faces.end());

    for (int l = 1; l <= max_level; ++l) {
        const auto& prev = t.faces[std::size_t(l) - 1];
        std::vector<std::array<std::uint32_t, 3>> next(prev.size() * 4);
        std::unordered_map<std::uint64_t, std::uint32_t> midpoint;
        midpoint.reserve(t.vertices.size() * 2);

        auto mid = [&](std::uint32_t a, std::uint32_t b) -> std::uint32_t {
            std::uint64_t key = (std::uint64_t(std::min(a, b)) << 32) | std::max(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            auto idx = std::uint32_t(t.vertices.size());
            t.vertices.push_back(normalized(t.vertices[a] + t.vertices[b]));
            midpoint.emplace(key, idx);
            return idx;
        };

        for (std::size_t f = 0; f < prev.size(); ++f) {
            std::uint32_t i1 = prev[f][0], i2 = prev[f][1], i3 = prev[f][2];
            std::uint32_t i12 = mid(i1, i2), i23 = mid(i2, i3), i31 = mid(i3, i1);
            next[4 * f + 0] = {i1, i12, i31};
            next[4 * f + 1] = {i2, i23, i12};
            next[4 * f + 2] = {i3, i31, i23};
            next[4 * f + 3] = {i12, i23, i31};
        }
        if (t.vertices.size() != vertex_count(l))
            throw geometry_error("subdivision vertex dedup mismatch");
        t.faces.push_back(std::move(next));
    }
    return t;
}

GeodesicGrid::GeodesicGrid(int max_dense_level) : tables_(build_dense_tables(max_dense_level)) {}

const std::array<std::uint32_t, 3>& GeodesicGrid::face_vertices(int level, std::uint64_t face_id) const {
    if (level < 0 || level > tables_.max_level)
        throw config_error("face_vertices: level has no stored table");
    const auto& faces = tables_.faces[std::size_t(level)];
    if (face_id >= faces.size()) throw config_error("face_vertices: face id out of range");
    return faces[face_id];
}

std::uint64_t GeodesicGrid::index_table_bytes() const {
    std::uint64_t bytes = 0;
    for (const auto& level : tables_.faces) bytes += std::uint64_t(level.size()) * 3 * sizeof(std::uint32_t);
    return bytes;
}

void write_obj(std::ostream& os, const GeodesicGrid& grid, int level) {
    if (level < 0 || level > grid.max_dense_level())
        throw config_error("write_obj: level has no stored table");
    std::uint64_t nverts = vertex_count(level);
    char buf[128];
    for (std::uint64_t i = 0; i < nverts; ++i) {
        const Vec3& v = grid.vertices()[i];
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        os << buf;
    }
    for (std::uint64_t f = 0; f < face_count(level); ++f) {
        const auto& tri = grid.face_vertices(level, f);
        std::snprintf(buf, sizeof buf, "f %u %u %u\n", tri[0] + 1, tri[1] + 1, tri[2] + 1);
        os << buf;
    }
}

}  // namespace sphenc
