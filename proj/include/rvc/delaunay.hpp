#pragma once

#include "rvc/core.hpp"
#include "rvc/mesh.hpp"

#include <array>
#include <vector>

namespace rvc {

/// Delaunay triangulation of a 2D point set (Bowyer–Watson).  Point indices
/// in the output refer to the input order.  Input order does not affect the
/// result: points are inserted in a canonical coordinate sort.  Throws if
/// fewer than 3 distinct points or all points collinear.
std::vector<std::array<int, 3>> delaunay_2d(const std::vector<Vec2>& points);

/// 2D triangulation whose vertices carry 3D positions, with O(1) expected
/// point location through a uniform grid bucket index.  This is the bridge
/// used to interpolate flattened-domain queries back to 3D space.
class FlatTriangulation {
public:
    FlatTriangulation() = default;
    FlatTriangulation(std::vector<Vec2> points2d, std::vector<std::array<int, 3>> triangles,
                      std::vector<Vec3> positions3d);

    const std::vector<Vec2>& points2d() const { return points2d_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<Vec3>& positions3d() const { return positions3d_; }

    /// Enclosing triangle and barycentric weights of a 2D query, or
    /// triangle = -1 when the query lies outside the hull (then
    /// `nearest_boundary` is filled with the closest point on the boundary).
    struct Location {
        int triangle = -1;
        std::array<double, 3> bary{0, 0, 0};
        Vec2 nearest_boundary{0, 0};
    };
    Location locate(const Vec2& query) const;

    /// Barycentric interpolation of the stored 3D positions, coordinate-wise.
    /// Throws when the query is outside the hull; the message carries the
    /// nearest boundary point.
    Vec3 to_3d(const Vec2& query) const;

    bool contains(const Vec2& query) const { return locate(query).triangle >= 0; }

private:
    void build_index();

    std::vector<Vec2> points2d_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<Vec3> positions3d_;

    // uniform grid bucket index over the bounding box
    double cell_ = 1.0;
    Vec2 grid_min_{0, 0};
    int nx_ = 0, ny_ = 0;
    std::vector<std::vector<int>> buckets_;
    std::vector<std::array<int, 2>> boundary_edges_;
};

} // namespace rvc
