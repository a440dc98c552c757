#include "rvc/correspondence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace rvc {

std::vector<Vec3> resample_equal_arclength(const SurfaceCurve& curve, int n) {
    if (n < 2) throw Error("resample_equal_arclength: need n >= 2");
    const double length = curve.length();
    if (!(length > 0)) throw Error("resample_equal_arclength: zero-length curve");
    std::vector<Vec3> out;
    out.reserve(size_t(n));
    for (int k = 0; k < n; ++k) out.push_back(curve.point_at(length * k / (n - 1)));
    return out;
}

namespace {

Eigen::MatrixXd tps_system(const std::vector<Vec3>& source) {
    const int k = int(source.size());
    if (k < 5) throw Error("tps_fit: need at least 5 control points");
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            if ((source[size_t(i)] - source[size_t(j)]).norm() < 1e-12)
                throw Error("tps_fit: duplicate source points " + std::to_string(i) + " and " +
                            std::to_string(j));

    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(k + 4, k + 4);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            if (i != j) l(i, j) = -(source[size_t(i)] - source[size_t(j)]).norm();
    for (int i = 0; i < k; ++i) {
        l(i, k) = 1;
        l(i, k + 1) = source[size_t(i)].x();
        l(i, k + 2) = source[size_t(i)].y();
        l(i, k + 3) = source[size_t(i)].z();
        l(k, i) = 1;
        l(k + 1, i) = source[size_t(i)].x();
        l(k + 2, i) = source[size_t(i)].y();
        l(k + 3, i) = source[size_t(i)].z();
    }
    return l;
}

} // namespace

TpsMap tps_fit(const std::vector<Vec3>& source, const std::vector<Vec3>& target) {
    if (source.size() != target.size()) throw Error("tps_fit: point count mismatch");
    const int k = int(source.size());
    const Eigen::MatrixXd l = tps_system(source);

    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k + 4, 3);
    for (int i = 0; i < k; ++i) rhs.row(i) = target[size_t(i)].transpose();

    Eigen::FullPivLU<Eigen::MatrixXd> lu(l);
    if (!lu.isInvertible()) throw Error("tps_fit: singular interpolation system");
    const Eigen::MatrixXd sol = lu.solve(rhs);

    TpsMap map;
    map.source = source;
    map.kernel_weights = sol.topRows(k);
    map.affine = sol.bottomRows(4);
    double energy = 0;
    for (int c = 0; c < 3; ++c) {
        const Eigen::VectorXd w = map.kernel_weights.col(c);
        energy += w.dot(l.topLeftCorner(k, k) * w);
    }
    map.bending_energy = energy;
    return map;
}

Vec3 TpsMap::apply(const Vec3& p) const {
    Eigen::RowVector3d out = affine.row(0) + p.x() * affine.row(1) + p.y() * affine.row(2) +
                             p.z() * affine.row(3);
    for (size_t i = 0; i < source.size(); ++i)
        out += kernel_weights.row(int(i)) * -(p - source[i]).norm();
    return out.transpose();
}

BendingEnergy::BendingEnergy(const std::vector<Vec3>& source) {
    const int k = int(source.size());
    const Eigen::MatrixXd l = tps_system(source);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(l);
    if (!lu.isInvertible()) throw Error("BendingEnergy: singular TPS system");
    // upper-left k x k block of L^{-1}; the bending energy of the interpolant
    // to targets y is sum_c y_c^T B y_c
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k + 4, k);
    rhs.topLeftCorner(k, k).setIdentity();
    form_ = lu.solve(rhs).topRows(k);
    form_ = 0.5 * (form_ + form_.transpose().eval()); // symmetrise roundoff
}

double BendingEnergy::operator()(const std::vector<Vec3>& target) const {
    const int k = int(form_.rows());
    if (int(target.size()) != k) throw Error("BendingEnergy: point count mismatch");
    Eigen::MatrixXd y(k, 3);
    for (int i = 0; i < k; ++i) y.row(i) = target[size_t(i)].transpose();
    double energy = 0;
    for (int c = 0; c < 3; ++c) energy += y.col(c).dot(form_ * y.col(c));
    return energy;
}

std::vector<Vec3> slide_curve(const SurfaceCurve& image_curve, std::vector<Vec3> image_points,
                              const std::vector<Vec3>& template_points, SlideReport* report,
                              int max_sweeps, double rel_tol) {
    const int n = int(image_points.size());
    if (int(template_points.size()) != n)
        throw Error("slide_curve: template/image point count mismatch");
    if (n < 5) throw Error("slide_curve: need at least 5 samples");

    // arc-length parameters of the current samples
    std::vector<double> t(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        // projection of the sample onto the polyline
        double best_d = std::numeric_limits<double>::infinity();
        for (size_t i = 1; i < image_curve.points.size(); ++i) {
            const Vec3& a = image_curve.points[i - 1];
            const Vec3& b = image_curve.points[i];
            const Vec3 ab = b - a;
            double len2 = ab.squaredNorm();
            double u = len2 > 0
                           ? std::clamp((image_points[size_t(j)] - a).dot(ab) / len2, 0.0, 1.0)
                           : 0.0;
            double dist = (a + u * ab - image_points[size_t(j)]).norm();
            if (dist < best_d) {
                best_d = dist;
                t[size_t(j)] = image_curve.arc_lengths[i - 1] +
                               u * (image_curve.arc_lengths[i] - image_curve.arc_lengths[i - 1]);
            }
        }
    }

    const BendingEnergy energy(template_points);
    double current = energy(image_points);
    if (report) {
        report->initial_energy = current;
        report->converged = false;
    }

    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    const double guard = 1e-9 * std::max(1.0, image_curve.length());

    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        const double sweep_start = current;
        for (int j = 1; j < n - 1; ++j) {
            double lo = t[size_t(j - 1)] + guard;
            double hi = t[size_t(j + 1)] - guard;
            if (!(hi > lo)) continue;

            auto probe = [&](double arc) {
                const Vec3 saved = image_points[size_t(j)];
                image_points[size_t(j)] = image_curve.point_at(arc);
                double value = energy(image_points);
                image_points[size_t(j)] = saved;
                return value;
            };

            double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
            double f1 = probe(x1), f2 = probe(x2);
            double best_arc = f1 < f2 ? x1 : x2;
            double best_val = std::min(f1, f2);
            for (int it = 0; it < 40 && hi - lo > 1e-10 * image_curve.length(); ++it) {
                if (f1 > f2) {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + phi * (hi - lo);
                    f2 = probe(x2);
                } else {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - phi * (hi - lo);
                    f1 = probe(x1);
                }
                if (f1 < best_val) {
                    best_val = f1;
                    best_arc = x1;
                }
                if (f2 < best_val) {
                    best_val = f2;
                    best_arc = x2;
                }
            }
            // move only on a meaningful improvement, not golden-section noise
            if (best_val < current - 1e-12 * std::max(1.0, std::abs(current))) {
                image_points[size_t(j)] = image_curve.point_at(best_arc);
                t[size_t(j)] = best_arc;
                current = best_val;
            }
        }
        const double drop = sweep_start - current;
        if (drop <= rel_tol * std::max(std::abs(sweep_start), 1e-30)) {
            ++sweep;
            if (report) report->converged = true;
            break;
        }
    }
    if (report) {
        report->final_energy = current;
        report->sweeps = sweep;
    }
    return image_points;
}

RigidFit procrustes_fit(const std::vector<Vec3>& from, const std::vector<Vec3>& to,
                        bool with_scale) {
    if (from.size() != to.size() || from.size() < 3)
        throw Error("procrustes_fit: need matching point sets of size >= 3");
    const int n = int(from.size());
    Vec3 cf = Vec3::Zero(), ct = Vec3::Zero();
    for (int i = 0; i < n; ++i) {
        cf += from[size_t(i)];
        ct += to[size_t(i)];
    }
    cf /= n;
    ct /= n;

    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    double norm_from = 0;
    for (int i = 0; i < n; ++i) {
        const Vec3 x = from[size_t(i)] - cf;
        const Vec3 y = to[size_t(i)] - ct;
        h += x * y.transpose();
        norm_from += x.squaredNorm();
    }
    if (norm_from < 1e-300) throw Error("procrustes_fit: degenerate (coincident) points");

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0) d(2, 2) = -1;
    RigidFit fit;
    fit.rotation = svd.matrixV() * d * svd.matrixU().transpose();
    if (with_scale) {
        double trace = (svd.singularValues().asDiagonal() * d).trace();
        fit.scale = trace / norm_from;
    }
    fit.translation = ct - fit.scale * (fit.rotation * cf);
    return fit;
}

double centroid_size(const ShapeConfiguration& config) {
    if (config.points.empty()) throw Error("centroid_size of empty configuration");
    Vec3 c = Vec3::Zero();
    for (const Vec3& p : config.points) c += p;
    c /= double(config.points.size());
    double ss = 0;
    for (const Vec3& p : config.points) ss += (p - c).squaredNorm();
    return std::sqrt(ss);
}

TemplateModel symmetrize(const ShapeConfiguration& config,
                         const std::map<std::string, std::string>& pairs) {
    // the relabelling must be an involution covering every curve id
    std::set<std::string> curves;
    for (const auto& label : config.labels) curves.insert(label.curve);
    for (const std::string& c : curves) {
        auto it = pairs.find(c);
        if (it == pairs.end())
            throw Error("symmetrize: curve '" + c + "' missing from the pair table");
        auto back = pairs.find(it->second);
        if (back == pairs.end() || back->second != c)
            throw Error("symmetrize: pair table is not an involution at '" + c + "'");
    }

    // index lookup by label
    std::map<PointLabel, int> where;
    for (size_t i = 0; i < config.labels.size(); ++i) where[config.labels[i]] = int(i);

    // reflect through x = 0 and relabel
    std::vector<Vec3> reflected(config.points.size());
    for (size_t i = 0; i < config.points.size(); ++i) {
        PointLabel mirrored{pairs.at(config.labels[i].curve), config.labels[i].index};
        auto it = where.find(mirrored);
        if (it == where.end())
            throw Error("symmetrize: no point labelled (" + mirrored.curve + ", " +
                        std::to_string(mirrored.index) + ")");
        Vec3 p = config.points[size_t(it->second)];
        p.x() = -p.x();
        reflected[i] = p;
    }

    const RigidFit fit = procrustes_fit(reflected, config.points, false);
    TemplateModel model;
    model.shape.labels = config.labels;
    model.shape.points.resize(config.points.size());
    for (size_t i = 0; i < config.points.size(); ++i)
        model.shape.points[i] = 0.5 * (config.points[i] + fit.apply(reflected[i]));
    model.pair_table = pairs;
    model.symmetric = true;
    return model;
}

GpaResult gpa(const std::vector<ShapeConfiguration>& configs, bool with_scale) {
    if (configs.size() < 2) throw Error("gpa: need at least 2 configurations");
    const size_t np = configs[0].points.size();
    for (const auto& c : configs) {
        if (!c.same_layout(configs[0]))
            throw Error("gpa: configurations have different semantic tables");
        if (centroid_size(c) < 1e-12) throw Error("gpa: degenerate configuration");
    }

    GpaResult result;
    result.aligned = configs;
    // centre everything
    for (auto& c : result.aligned) {
        Vec3 centroid = Vec3::Zero();
        for (const Vec3& p : c.points) centroid += p;
        centroid /= double(np);
        for (Vec3& p : c.points) p -= centroid;
    }

    auto compute_mean = [&]() {
        ShapeConfiguration mean;
        mean.labels = configs[0].labels;
        mean.points.assign(np, Vec3::Zero());
        for (const auto& c : result.aligned)
            for (size_t i = 0; i < np; ++i) mean.points[i] += c.points[i];
        for (Vec3& p : mean.points) p /= double(result.aligned.size());
        return mean;
    };

    ShapeConfiguration mean = compute_mean();
    for (int iter = 0; iter < 1000; ++iter) {
        result.iterations = iter + 1;
        for (auto& c : result.aligned) {
            const RigidFit fit = procrustes_fit(c.points, mean.points, with_scale);
            for (Vec3& p : c.points) p = fit.apply(p);
        }
        ShapeConfiguration next = compute_mean();
        double change = 0;
        for (size_t i = 0; i < np; ++i) change += (next.points[i] - mean.points[i]).squaredNorm();
        change = std::sqrt(change / double(np));
        mean = std::move(next);
        if (change < 1e-10) break;
    }
    result.mean = std::move(mean);
    return result;
}

ShapeConfiguration discretize(const SampleCurves& sample) {
    ShapeConfiguration config;
    for (const auto& [name, count] : sample.layout) {
        auto it = sample.curves.find(name);
        if (it == sample.curves.end())
            throw Error("discretize: sample lacks curve '" + name + "'");
        const std::vector<Vec3> pts = resample_equal_arclength(it->second, count);
        for (int k = 0; k < count; ++k) {
            config.points.push_back(pts[size_t(k)]);
            config.labels.push_back(PointLabel{name, k});
        }
    }
    return config;
}

ShapeConfiguration build_model(const SampleCurves& sample, const ShapeConfiguration& templ,
                               std::vector<SlideReport>* reports) {
    ShapeConfiguration config;
    size_t offset = 0;
    for (const auto& [name, count] : sample.layout) {
        auto it = sample.curves.find(name);
        if (it == sample.curves.end())
            throw Error("build_model: sample lacks curve '" + name + "'");
        std::vector<Vec3> image_points = resample_equal_arclength(it->second, count);
        std::vector<Vec3> template_points;
        template_points.reserve(size_t(count));
        for (size_t i = 0; i < templ.labels.size(); ++i)
            if (templ.labels[i].curve == name) template_points.push_back(templ.points[i]);
        if (int(template_points.size()) != count)
            throw Error("build_model: template has " + std::to_string(template_points.size()) +
                        " samples for curve '" + name + "', expected " + std::to_string(count));
        SlideReport report;
        std::vector<Vec3> slid =
            slide_curve(it->second, std::move(image_points), template_points, &report);
        if (reports) reports->push_back(report);
        for (int k = 0; k < count; ++k) {
            config.points.push_back(slid[size_t(k)]);
            config.labels.push_back(PointLabel{name, k});
        }
        offset += size_t(count);
    }
    return config;
}

TemplateIterationResult iterate_template_mean(const std::vector<SampleCurves>& samples,
                                              const ShapeConfiguration& initial_template,
                                              double rms_tol, int max_rounds) {
    if (samples.empty()) throw Error("iterate_template_mean: no samples");

    TemplateIterationResult result;
    ShapeConfiguration current_template = initial_template;

    for (int round = 0; round < max_rounds; ++round) {
        result.iterations = round + 1;
        std::vector<ShapeConfiguration> models;
        models.reserve(samples.size());
        for (size_t i = 0; i < samples.size(); ++i) {
            try {
                models.push_back(build_model(samples[i], current_template));
            } catch (const Error& e) {
                throw Error("iterate_template_mean: sample " + std::to_string(i) +
                            " failed to build: " + e.what());
            }
        }

        ShapeConfiguration mean;
        if (models.size() == 1) {
            mean = models[0];
        } else {
            mean = gpa(models, false).mean;
        }

        result.models = std::move(models);
        // compare shapes across rounds in a common pose
        const RigidFit fit = procrustes_fit(mean.points, current_template.points, false);
        double rms = 0;
        for (size_t i = 0; i < mean.points.size(); ++i)
            rms += (fit.apply(mean.points[i]) - current_template.points[i]).squaredNorm();
        rms = std::sqrt(rms / double(mean.points.size()));
        current_template = mean;
        if (rms < rms_tol) {
            result.converged = true;
            break;
        }
    }
    result.mean = std::move(current_template);
    return result;
}

std::map<std::string, SurfaceCurve> make_intermediate_transects(
    const Mesh& mesh, const std::vector<TransectSpec>& specs, int n_angles) {
    std::map<std::string, SurfaceCurve> out;
    for (const auto& spec : specs) {
        // endpoints coming from adjusted curves already lie on the mesh and
        // pass through bitwise; anything else is snapped to the surface
        auto on_mesh = [&](const Vec3& p) {
            const auto sp = mesh.closest_surface_point(p);
            return sp.distance <= 1e-9 ? p : sp.position;
        };
        const Vec3 from = on_mesh(spec.from);
        const Vec3 to = on_mesh(spec.to);
        const LocalRegion region = localize(mesh, from, to, spec.radius);
        const ReferencePathResult path =
            optimal_reference_path(mesh, region, nullptr, PathObjective::MinLength, n_angles);
        out[spec.name] = path.best.path;
    }
    return out;
}

} // namespace rvc
