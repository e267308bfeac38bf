#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sphenc/vec.hpp"

namespace sphenc {

// Geodesic subdivision of the unit icosahedron. Level l has 20*4^l spherical
// triangles and 10*4^l + 2 distinct vertices. Face ids encode the subdivision
// path in base 4: id_l = base_face * 4^l + sum(child_digit_k * 4^(l-k)).

inline constexpr double kContainEps = 1e-9;
inline constexpr int kMaxTraversalLevel = 12;

std::uint64_t vertex_count(int level);
std::uint64_t face_count(int level);

struct Barycentric {
    double b[3] = {0.0, 0.0, 0.0};
    double operator[](int i) const { return b[i]; }
    double& operator[](int i) { return b[i]; }
    double sum() const { return b[0] + b[1] + b[2]; }
};

struct GeodesicTriangle {
    int level = 0;
    std::uint64_t face_id = 0;
    Vec3 v[3];

    // Subdivision path: base face id followed by one child digit per level.
    std::vector<int> face_path() const;
};

struct Located {
    GeodesicTriangle tri;
    Barycentric bary;
};

struct Refined {
    int child_index = 0;
    GeodesicTriangle tri;
    Barycentric bary;
};

struct IcosahedronBase {
    std::array<Vec3, 12> vertices;
    std::array<std::array<std::uint32_t, 3>, 20> faces;  // outward winding, canonical order
    std::array<Vec3, 20> centroids;                      // unit, for the nearest-face prefilter
    std::array<std::array<Vec3, 3>, 20> edge_normals;    // cross(v_i, v_{i+1}), unnormalized
};

// Canonical base icosahedron: golden-ratio construction, vertices normalized
// and sorted lexicographically, faces wound outward and sorted. Built once.
const IcosahedronBase& base_icosahedron();

// Renormalizes directions with |norm - 1| <= 1e-3, rejects anything further off.
Vec3 sanitize_direction(Vec3 d);

// Chord-triangle barycentric coordinates of the ray through d, clamped to be
// nonnegative and renormalized to sum to exactly 1.
Barycentric chord_barycentric(Vec3 d, const Vec3& a, const Vec3& b, const Vec3& c);

// Locates the base face containing d. Ties on shared edges/vertices go to the
// lowest face id. The nearest-centroid face is only a prefilter; containment
// is always decided by edge function signs.
Located icosahedron_intersection(Vec3 d);

// Splits tri into its four children (normalized edge midpoints) and descends
// into the child containing d. Children 0..2 keep parent vertex k first;
// child 3 is the central triangle (m12, m23, m31). First container in order
// 0,1,2,3 wins.
Refined refine_triangle(const GeodesicTriangle& tri, Vec3 d);

// Face id -> vertex index tables for the levels that are stored explicitly.
// Vertex numbering is nested: level-l vertices keep their indices at level l+1,
// midpoints are appended, so one position array serves every level.
struct DenseVertexTables {
    int max_level = -1;
    std::vector<Vec3> vertices;
    std::vector<std::vector<std::array<std::uint32_t, 3>>> faces;  // [level][face_id]
};

DenseVertexTables build_dense_tables(int max_level);

class GeodesicGrid {
public:
    static constexpr int kMaxDenseLevel = 8;

    // max_dense_level == -1 builds no tables (purely hashed traversal).
    explicit GeodesicGrid(int max_dense_level);

    int max_dense_level() const { return tables_.max_level; }
    const std::array<std::uint32_t, 3>& face_vertices(int level, std::uint64_t face_id) const;
    const std::vector<Vec3>& vertices() const { return tables_.vertices; }

    // Bytes held by the face -> vertex index tables (reported as metadata,
    // separate from learned-parameter memory).
    std::uint64_t index_table_bytes() const;

private:
    DenseVertexTables tables_;
};

// Wavefront-style mesh dump of one subdivision level ("v x y z" / "f a b c").
void write_obj(std::ostream& os, const GeodesicGrid& grid, int level);

}  // namespace sphenc
