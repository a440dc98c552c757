#pragma once

#include "rvc/core.hpp"
#include "rvc/curvature.hpp"
#include "rvc/mesh.hpp"
#include "rvc/refpath.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace rvc {

/// n points equally spaced along the polyline's arc length (endpoints
/// included).
std::vector<Vec3> resample_equal_arclength(const SurfaceCurve& curve, int n);

/// Thin-plate spline interpolant between two labelled 3D point sets, with the
/// biharmonic kernel U(r) = -r (sign chosen so the bending-energy quadratic
/// form is positive semidefinite).
struct TpsMap {
    std::vector<Vec3> source;
    Eigen::MatrixXd kernel_weights; // k x 3
    Eigen::MatrixXd affine;         // 4 x 3 rows: constant, x, y, z
    double bending_energy = 0;      // summed over the three coordinate maps

    Vec3 apply(const Vec3& p) const;
};

/// Exact interpolant source -> target.  Throws on coincident source points
/// (naming them) or a singular system.
TpsMap tps_fit(const std::vector<Vec3>& source, const std::vector<Vec3>& target);

/// Bending energy as a quadratic form in the target points, for a fixed set
/// of source (template) points.  Evaluating many candidate targets against
/// one template costs O(k^2) each instead of a fresh solve.
class BendingEnergy {
public:
    explicit BendingEnergy(const std::vector<Vec3>& source);
    double operator()(const std::vector<Vec3>& target) const;
    int size() const { return int(form_.rows()); }

private:
    Eigen::MatrixXd form_; // k x k upper-left block of the TPS system inverse
};

struct SlideReport {
    double initial_energy = 0;
    double final_energy = 0;
    int sweeps = 0;
    bool converged = false;
};

/// Coordinate-descent sliding: every interior sample moves along the image
/// curve (golden-section search between its neighbours' current arc
/// positions) to minimise the bending energy of the template -> image map.
/// Anchor endpoints never move; the energy never increases.
std::vector<Vec3> slide_curve(const SurfaceCurve& image_curve,
                              std::vector<Vec3> image_points,
                              const std::vector<Vec3>& template_points,
                              SlideReport* report = nullptr, int max_sweeps = 50,
                              double rel_tol = 1e-6);

/// Labelled 3D point set with a semantic table (curve id + index along it).
struct PointLabel {
    std::string curve;
    int index = 0;
    bool operator==(const PointLabel& o) const = default;
    bool operator<(const PointLabel& o) const {
        return std::tie(curve, index) < std::tie(o.curve, o.index);
    }
};

struct ShapeConfiguration {
    std::vector<Vec3> points;
    std::vector<PointLabel> labels;

    bool same_layout(const ShapeConfiguration& o) const { return labels == o.labels; }
};

struct TemplateModel {
    ShapeConfiguration shape;
    std::map<std::string, std::string> pair_table; // bilateral relabelling involution
    bool symmetric = false;
};

/// Rigid (optionally similarity) fit  from -> to  by the orthogonal
/// Procrustes solution with det(R) = +1.
struct RigidFit {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Vec3 translation = Vec3::Zero();
    double scale = 1.0;

    Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
};
RigidFit procrustes_fit(const std::vector<Vec3>& from, const std::vector<Vec3>& to,
                        bool with_scale = false);

/// Reflect, relabel by the involution, Procrustes-align to the original and
/// average.  The result maps onto itself under reflection + relabelling.
TemplateModel symmetrize(const ShapeConfiguration& config,
                         const std::map<std::string, std::string>& pairs);

struct GpaResult {
    std::vector<ShapeConfiguration> aligned;
    ShapeConfiguration mean;
    int iterations = 0;
};

/// Generalised Procrustes alignment over translation and rotation (and scale
/// when requested), iterated until the mean stabilises.
GpaResult gpa(const std::vector<ShapeConfiguration>& configs, bool with_scale);

double centroid_size(const ShapeConfiguration& config);

/// One sample's estimated curves plus the shared sampling layout.
struct SampleCurves {
    std::map<std::string, SurfaceCurve> curves;
    std::vector<std::pair<std::string, int>> layout; // ordered (curve, samples)
};

/// Equal-arc-length discretisation of every curve in layout order.
ShapeConfiguration discretize(const SampleCurves& sample);

/// Slide every curve of the sample against the matching template points.
ShapeConfiguration build_model(const SampleCurves& sample, const ShapeConfiguration& templ,
                               std::vector<SlideReport>* reports = nullptr);

struct TemplateIterationResult {
    ShapeConfiguration mean;
    std::vector<ShapeConfiguration> models;
    int iterations = 0;
    bool converged = false;
};

/// Alternates sliding against the current template with recomputing the
/// Procrustes mean, until the mean shape stabilises (RMS change < tol) or the
/// iteration cap is hit.
TemplateIterationResult iterate_template_mean(const std::vector<SampleCurves>& samples,
                                              const ShapeConfiguration& initial_template,
                                              double rms_tol = 1e-4, int max_rounds = 10);

/// Min-length plane-cut transects between paired boundary samples, each
/// resampled and slid against the matching template transect.
struct TransectSpec {
    std::string name;
    Vec3 from, to;
    int samples = 0;
    double radius = 0; // localization cylinder override; 0 = ||to - from|| / 2
};
std::map<std::string, SurfaceCurve> make_intermediate_transects(
    const Mesh& mesh, const std::vector<TransectSpec>& specs, int n_angles = 60);

} // namespace rvc
