#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphenc/error.hpp"

#include "sphenc/geodesic.hpp"
#include "sphenc/rng.hpp"
#include "sphenc/sampling.hpp"

using namespace sphenc;

namespace {

// Reference containment: scan every base face in id order and return the first
// whose three edge functions are all >= -kContainEps. Deliberately has no
// prefilter or fast path so it can arbitrate the production routine.
int reference_base_face(Vec3 d) {
    const IcosahedronBase& base = base_icosahedron();
    for (int f = 0; f < 20; ++f) {
        const auto& tri = base.faces[std::size_t(f)];
        Vec3 a = base.vertices[tri[0]];
        Vec3 b = base.vertices[tri[1]];
        Vec3 c = base.vertices[tri[2]];
        if (dot(d, cross(a, b)) >= -kContainEps && dot(d, cross(b, c)) >= -kContainEps &&
            dot(d, cross(c, a)) >= -kContainEps)
            return f;
    }
    return -1;
}

bool inside_triangle(Vec3 d, const Vec3& a, const Vec3& b, const Vec3& c, double eps) {
    return dot(d, cross(a, b)) >= -eps && dot(d, cross(b, c)) >= -eps &&
           dot(d, cross(c, a)) >= -eps;
}

std::uint64_t pow4(int l) { return std::uint64_t(1) << (2 * l); }

}  // namespace

TEST_CASE("subdivision counts match the closed forms") {
    for (int l = 0; l <= 6; ++l) {
        CHECK(vertex_count(l) == 10 * pow4(l) + 2);
        CHECK(face_count(l) == 20 * pow4(l));
    }
    DenseVertexTables tables = build_dense_tables(6);
    CHECK(tables.vertices.size() == vertex_count(6));
    REQUIRE(tables.faces.size() == 7);
    for (int l = 0; l <= 6; ++l) CHECK(tables.faces[std::size_t(l)].size() == face_count(l));
}

TEST_CASE("base icosahedron is canonical") {
    const IcosahedronBase& base = base_icosahedron();

    for (const Vec3& v : base.vertices) CHECK(std::abs(norm(v) - 1.0) < 1e-12);
    CHECK(std::is_sorted(base.vertices.begin(), base.vertices.end(), [](Vec3 a, Vec3 b) {
        if (a.x != b.x) return a.x < b.x;
        if (a.y != b.y) return a.y < b.y;
        return a.z < b.z;
    }));
    CHECK(std::is_sorted(base.faces.begin(), base.faces.end()));

    // Adjacent icosahedron vertices subtend acos(1/sqrt(5)).
    const double adj = 1.0 / std::sqrt(5.0);
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::map<std::uint32_t, int> degree;
    for (const auto& f : base.faces) {
        CHECK(f[0] < f[1]);
        CHECK(f[0] < f[2]);
        CHECK(f[1] != f[2]);
        for (int i = 0; i < 3; ++i) {
            Vec3 a = base.vertices[f[i]];
            Vec3 b = base.vertices[f[(i + 1) % 3]];
            CHECK(dot(a, b) == doctest::Approx(adj).epsilon(1e-9));
            std::uint32_t lo = std::min(f[i], f[(i + 1) % 3]);
            std::uint32_t hi = std::max(f[i], f[(i + 1) % 3]);
            edges.insert({lo, hi});
            degree[f[i]] += 1;
        }
        // Outward winding: the face normal points away from the origin.
        Vec3 a = base.vertices[f[0]], b = base.vertices[f[1]], c = base.vertices[f[2]];
        CHECK(dot(cross(b - a, c - a), a) > 0.0);
    }
    CHECK(edges.size() == 30);
    CHECK(degree.size() == 12);
    for (const auto& [v, deg] : degree) {
        (void)v;
        CHECK(deg == 5);
    }
}

TEST_CASE("every vertex belongs to exactly five faces") {
    const IcosahedronBase& base = base_icosahedron();
    std::array<int, 12> count{};
    for (const auto& f : base.faces)
        for (std::uint32_t v : f) count[v] += 1;
    for (int c : count) CHECK(c == 5);
}

TEST_CASE("chord barycentrics: partition of unity, vertices, edge midpoints") {
    const IcosahedronBase& base = base_icosahedron();
    Rng rng(11);
    for (int i = 0; i < 10000; ++i) {
        Vec3 d = sample_uniform_sphere(rng);
        Located loc = icosahedron_intersection(d);
        CHECK(loc.bary.sum() == doctest::Approx(1.0).epsilon(1e-12));
        for (int k = 0; k < 3; ++k) CHECK(loc.bary[k] >= 0.0);
    }

    // A base vertex reconstructs with weight 1 on itself.
    Vec3 v0 = base.vertices[base.faces[0][0]];
    Located at_vertex = icosahedron_intersection(v0);
    double wmax = std::max({at_vertex.bary[0], at_vertex.bary[1], at_vertex.bary[2]});
    CHECK(wmax == doctest::Approx(1.0).epsilon(1e-9));

    // An edge midpoint direction splits evenly between the edge endpoints.
    Vec3 a = base.vertices[base.faces[0][0]];
    Vec3 b = base.vertices[base.faces[0][1]];
    Located at_mid = icosahedron_intersection(normalized(a + b));
    std::array<double, 3> w = {at_mid.bary[0], at_mid.bary[1], at_mid.bary[2]};
    std::sort(w.begin(), w.end());
    CHECK(w[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(w[2] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("barycentric reconstruction tracks the query direction to level 8") {
    Rng rng(13);
    for (int i = 0; i < 10000; ++i) {
        Vec3 d = sample_uniform_sphere(rng);
        Located loc = icosahedron_intersection(d);
        GeodesicTriangle tri = loc.tri;
        Barycentric bary = loc.bary;
        for (int level = 0; level <= 8; ++level) {
            Vec3 p = bary[0] * tri.v[0] + bary[1] * tri.v[1] + bary[2] * tri.v[2];
            CHECK(angle_between(normalized(p), d) < 1e-5);
            if (level == 8) break;
            Refined r = refine_triangle(tri, d);
            tri = r.tri;
            bary = r.bary;
        }
    }
}

TEST_CASE("base-face location matches the plain ordered scan") {
    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
        Vec3 d = sample_uniform_sphere(rng);
        int ref = reference_base_face(d);
        REQUIRE(ref >= 0);
        CHECK(icosahedron_intersection(d).tri.face_id == std::uint64_t(ref));
    }
}

TEST_CASE("ties on shared edges and vertices go to the lowest face id") {
    const IcosahedronBase& base = base_icosahedron();

    // All 30 edge midpoints sit exactly on a shared great circle.
    std::set<std::pair<std::uint32_t, std::uint32_t>> done;
    for (const auto& f : base.faces) {
        for (int i = 0; i < 3; ++i) {
            std::uint32_t lo = std::min(f[i], f[(i + 1) % 3]);
            std::uint32_t hi = std::max(f[i], f[(i + 1) % 3]);
            if (!done.insert({lo, hi}).second) continue;
            Vec3 mid = normalized(base.vertices[lo] + base.vertices[hi]);
            int ref = reference_base_face(mid);
            REQUIRE(ref >= 0);
            CHECK(icosahedron_intersection(mid).tri.face_id == std::uint64_t(ref));
        }
    }

    // The 12 vertices are shared by five faces each.
    for (const Vec3& v : base.vertices) {
        int ref = reference_base_face(v);
        REQUIRE(ref >= 0);
        CHECK(icosahedron_intersection(v).tri.face_id == std::uint64_t(ref));
    }
}

TEST_CASE("refinement nests children inside their parents") {
    Rng rng(17);
    for (int i = 0; i < 2000; ++i) {
        Vec3 d = sample_uniform_sphere(rng);
        Located loc = icosahedron_intersection(d);
        GeodesicTriangle tri = loc.tri;
        int target = 1 + int(rng.next_below(8));
        for (int level = 0; level < target; ++level) {
            GeodesicTriangle parent = tri;
            Refined r = refine_triangle(parent, d);
            CHECK(r.child_index >= 0);
            CHECK(r.child_index <= 3);
            CHECK(r.tri.face_id == parent.face_id * 4 + std::uint64_t(r.child_index));
            CHECK(r.tri.level == parent.level + 1);
            for (const Vec3& cv : r.tri.v)
                CHECK(inside_triangle(cv, parent.v[0], parent.v[1], parent.v[2], 1e-9));
            CHECK(inside_triangle(d, r.tri.v[0], r.tri.v[1], r.tri.v[2], 1e-6));
            tri = r.tri;
        }
    }
}

TEST_CASE("face ids decode to the subdivision path") {
    Rng rng(19);
    for (int i = 0; i < 200; ++i) {
        Vec3 d = sample_uniform_sphere(rng);
        Located loc = icosahedron_intersection(d);
        GeodesicTriangle tri = loc.tri;
        std::vector<int> expected = {int(tri.face_id)};
        for (int level = 0; level < 6; ++level) {
            Refined r = refine_triangle(tri, d);
            expected.push_back(r.child_index);
            tri = r.tri;
        }
        CHECK(tri.face_path() == expected);

        std::uint64_t id = std::uint64_t(expected[0]);
        for (std::size_t k = 1; k < expected.size(); ++k) id = id * 4 + std::uint64_t(expected[k]);
        CHECK(tri.face_id == id);
    }
}

TEST_CASE("traversal vertices and dense tables agree bitwise") {
    GeodesicGrid grid(5);
    const std::vector<Vec3>& verts = grid.vertices();
    Rng rng(23);
    for (int i = 0; i < 2000; ++i) {
        Vec3 d = sample_uniform_sphere(rng);
        Located loc = icosahedron_intersection(d);
        GeodesicTriangle tri = loc.tri;
        for (int level = 0; level <= 5; ++level) {
            const auto& idx = grid.face_vertices(level, tri.face_id);
            for (int k = 0; k < 3; ++k) {
                CHECK(verts[idx[k]].x == tri.v[k].x);
                CHECK(verts[idx[k]].y == tri.v[k].y);
                CHECK(verts[idx[k]].z == tri.v[k].z);
            }
            if (level == 5) break;
            tri = refine_triangle(tri, d).tri;
        }
    }
}

TEST_CASE("vertex numbering is nested across levels") {
    DenseVertexTables t5 = build_dense_tables(5);
    DenseVertexTables t3 = build_dense_tables(3);
    REQUIRE(t3.vertices.size() <= t5.vertices.size());
    for (std::size_t i = 0; i < t3.vertices.size(); ++i) {
        CHECK(t3.vertices[i].x == t5.vertices[i].x);
        CHECK(t3.vertices[i].y == t5.vertices[i].y);
        CHECK(t3.vertices[i].z == t5.vertices[i].z);
    }
    for (int l = 0; l <= 3; ++l) CHECK(t3.faces[std::size_t(l)] == t5.faces[std::size_t(l)]);
}

TEST_CASE("grid construction and bounds checks") {
    GeodesicGrid grid(2);
    CHECK(grid.max_dense_level() == 2);
    CHECK_THROWS_AS(grid.face_vertices(3, 0), config_error);
    CHECK_THROWS_AS(grid.face_vertices(2, face_count(2)), config_error);
    CHECK(grid.index_table_bytes() == 12 * (face_count(0) + face_count(1) + face_count(2)));

    GeodesicGrid none(-1);
    CHECK(none.max_dense_level() == -1);
    CHECK(none.vertices().empty());
    CHECK(none.index_table_bytes() == 0);
}

TEST_CASE("sanitize_direction") {
    CHECK_THROWS_AS(sanitize_direction({0.0, 0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(sanitize_direction({0.9, 0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(sanitize_direction({0.0, 1.1, 0.0}), std::invalid_argument);
    Vec3 d = sanitize_direction({1.0 + 5e-4, 0.0, 0.0});
    CHECK(std::abs(norm(d) - 1.0) < 1e-12);
    CHECK(d.x == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("obj export lists one mesh level") {
    GeodesicGrid grid(2);
    std::ostringstream os;
    write_obj(os, grid, 2);
    std::istringstream is(os.str());
    std::string line;
    std::uint64_t v_lines = 0, f_lines = 0;
    while (std::getline(is, line)) {
        if (line.rfind("v ", 0) == 0) {
            ++v_lines;
            std::istringstream ls(line.substr(2));
            double x, y, z;
            REQUIRE((ls >> x >> y >> z));
            CHECK(std::abs(std::sqrt(x * x + y * y + z * z) - 1.0) < 1e-12);
        } else if (line.rfind("f ", 0) == 0) {
            ++f_lines;
            std::istringstream ls(line.substr(2));
            std::uint32_t a, b, c;
            REQUIRE((ls >> a >> b >> c));
            for (std::uint32_t idx : {a, b, c}) {
                CHECK(idx >= 1);
                CHECK(idx <= vertex_count(2));
            }
        }
    }
    CHECK(v_lines == vertex_count(2));
    CHECK(f_lines == face_count(2));
}
