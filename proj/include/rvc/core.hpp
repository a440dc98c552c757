#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <stdexcept>
#include <string>

namespace rvc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Runtime failure carrying a human-readable description of what went wrong
/// and where.  All library operations report errors through this type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline double sqr(double x) { return x * x; }

} // namespace rvc
