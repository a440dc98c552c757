#pragma once

#include "rvc/core.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace rvc {

/// Triangulated surface: an ordered vertex list plus triangle index triples.
/// Immutable after construction; connectivity is built once and all queries
/// are safe for unrestricted concurrent reads.
class Mesh {
public:
    Mesh() = default;
    Mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles,
         std::vector<Vec3> normals = {});

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }

    /// Per-vertex normals if the mesh was constructed with them, else empty.
    const std::vector<Vec3>& stored_normals() const { return normals_; }

    int vertex_count() const { return int(vertices_.size()); }
    int triangle_count() const { return int(triangles_.size()); }

    /// One-ring vertex neighbours, sorted ascending.
    const std::vector<int>& vertex_neighbors(int v) const { return neighbors_[size_t(v)]; }
    /// Triangles incident to a vertex, sorted ascending.
    const std::vector<int>& vertex_triangles(int v) const { return vertex_tris_[size_t(v)]; }

    double triangle_area(int t) const;
    Vec3 triangle_normal(int t) const; // unit normal from the stored winding

    /// Mean of incident unit face normals, normalised.  Follows the stored
    /// triangle winding.  Throws on isolated vertices.
    Vec3 vertex_normal(int v) const;
    std::vector<Vec3> vertex_normals() const;

    /// Vertices reachable from `seed` through mesh edges where every visited
    /// vertex stays within Euclidean distance `radius` of the seed.  Includes
    /// the seed.  Traversal over edges (rather than a plain ball query) keeps
    /// the result from leaking across narrow spatial gaps.
    std::vector<int> neighborhood(int seed, double radius) const;

    /// Closest point on the surface to an arbitrary query point.
    struct SurfacePoint {
        Vec3 position;
        int triangle;
        std::array<double, 3> bary;
        double distance;
    };
    SurfacePoint closest_surface_point(const Vec3& query) const;

private:
    void validate_and_build();

    std::vector<Vec3> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<Vec3> normals_;
    std::vector<std::vector<int>> neighbors_;
    std::vector<std::vector<int>> vertex_tris_;
};

/// Named landmark points, each snapped to the closest mesh surface point.
class LandmarkSet {
public:
    LandmarkSet() = default;

    /// Snaps every point to the mesh surface.
    LandmarkSet(const std::map<std::string, Vec3>& raw, const Mesh& mesh);

    const Vec3& at(const std::string& name) const;
    bool contains(const std::string& name) const { return points_.count(name) > 0; }
    const std::map<std::string, Vec3>& points() const { return points_; }

private:
    std::map<std::string, Vec3> points_;
};

/// Polyline lying on a mesh, with cumulative arc lengths.
struct SurfaceCurve {
    std::vector<Vec3> points;
    std::vector<double> arc_lengths; // arc_lengths[0] == 0, strictly increasing

    static SurfaceCurve from_points(std::vector<Vec3> pts);

    double length() const { return arc_lengths.empty() ? 0.0 : arc_lengths.back(); }
    /// Point at arc length s by linear interpolation along the polyline.
    Vec3 point_at(double s) const;
};

struct BarycentricCoords {
    int triangle = -1;
    std::array<double, 3> weights{0, 0, 0};
};

/// Barycentric weights of a 2D query in a 2D triangle.  Throws on degenerate
/// (near-zero-area) triangles.
std::array<double, 3> barycentric_2d(const std::array<Vec2, 3>& tri, const Vec2& query);

/// Closest point on a 3D triangle to a query, with its barycentric weights.
Vec3 closest_point_on_triangle(const Vec3& a, const Vec3& b, const Vec3& c,
                               const Vec3& query, std::array<double, 3>* bary = nullptr);

} // namespace rvc
