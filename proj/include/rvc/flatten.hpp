#pragma once

#include "rvc/core.hpp"
#include "rvc/curvature.hpp"
#include "rvc/delaunay.hpp"
#include "rvc/refpath.hpp"

#include <string>
#include <vector>

namespace rvc {

struct FlatPoint {
    double s = 0;  // arc length of the closest point on the reference path
    double d = 0;  // signed perpendicular distance
    double nu = 0; // curvature strength carried from the source vertex
    int source_vertex = -1; // -1 for points taken from the reference path itself
};

/// Local (s, d) re-coordinatisation of a region around a reference path,
/// carrying a 2D triangulation and the 3D back-map used for interpolation.
struct FlatDomain {
    std::vector<FlatPoint> points;
    FlatTriangulation tri;
    double baseline_length = 0;
    bool d_flipped = false;         // recorded sign convention of d
    bool rebuilt_by_delaunay = false;

    double s_min() const { return 0; }
    double s_max() const { return baseline_length; }
    double d_min() const;
    double d_max() const;
};

/// Closest-point projection of every region vertex onto the reference path:
/// s is the foot arc length, d the Euclidean offset signed by the side of the
/// cutting plane (flip with d_flip).  The reference-path points themselves are
/// included with d = 0.  The 2D triangulation is inherited from the mesh
/// wherever the map is injective and rebuilt by Delaunay otherwise.
FlatDomain flatten_region(const Mesh& mesh, const LocalRegion& region, const PlaneCut& cut,
                          const CurvatureField& field, bool d_flip = false);

/// Debug export: vertex, s, d, nu.
void save_flat_csv(const FlatDomain& domain, const std::string& path);

} // namespace rvc
