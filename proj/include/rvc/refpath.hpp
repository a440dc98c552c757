#pragma once

#include "rvc/core.hpp"
#include "rvc/curvature.hpp"
#include "rvc/mesh.hpp"

#include <vector>

namespace rvc {

/// Subset of a mesh inside the landmark cylinder, restricted to the edge
/// component containing the first landmark.
struct LocalRegion {
    std::vector<int> vertices;  // kept vertex ids, ascending
    std::vector<int> triangles; // triangles with all three vertices kept
    std::vector<char> vertex_mask;
    Vec3 l1, l2;
    double radius = 0;
    double median_edge = 0;
    // gamma = 0 reference frame: unit axis l2 - l1, plus the projection of the
    // region mean normal onto the plane orthogonal to it
    Vec3 axis, e0, e90;
};

/// Cylinder mask of radius ||l2 - l1|| / 2 (or an explicit override) around
/// the landmark axis.  Pass radius = infinity to keep the whole connected
/// component.  Throws when the landmarks end up in different components.
LocalRegion localize(const Mesh& mesh, const Vec3& l1, const Vec3& l2, double radius = 0);

/// Intersection path of a plane through both landmarks with the region.
struct PlaneCut {
    double gamma = 0;
    Vec3 plane_point, plane_normal;
    SurfaceCurve path;       // from l1 to l2
    std::vector<double> nu;  // strength at each path point (0 without a field)

    double length() const { return path.length(); }
};

/// The cutting plane contains l1 and l2 and is rotated about their axis by
/// gamma from the region's reference orientation.  When the plane-mesh
/// intersection has several components, the one joining the landmarks is
/// returned; throws if none does.
PlaneCut plane_cut(const Mesh& mesh, const LocalRegion& region, double gamma,
                   const CurvatureField* field = nullptr);

/// Length-standardised curvature integral  sum_j w_j nu_j / sum_j w_j  over
/// the path's intersection points.
double standardized_curvature_integral(const PlaneCut& cut);

enum class PathObjective { MaxCurvature, MinLength };

struct ReferencePathResult {
    PlaneCut best;
    double objective = 0; // integral (MaxCurvature) or length (MinLength)
    /// every sampled (gamma, objective) pair that produced a valid cut
    std::vector<std::pair<double, double>> samples;
};

/// Scans gamma over {k pi / n_angles} and returns the cut maximising the
/// standardised integral (or minimising length), with one golden-section
/// refinement pass around the best grid angle.  Ties resolve to the smaller
/// gamma.
ReferencePathResult optimal_reference_path(const Mesh& mesh, const LocalRegion& region,
                                           const CurvatureField* field, PathObjective objective,
                                           int n_angles = 180, bool refine = true);

} // namespace rvc
