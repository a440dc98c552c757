#pragma once

#include "rvc/mesh.hpp"

#include <map>
#include <string>

namespace rvc {

enum class MeshFormat { Auto, Obj, PlyAscii, PlyBinaryLE };

/// Reads an ASCII OBJ or a PLY (ascii 1.0 / binary_little_endian 1.0) mesh.
/// Faces must be triangles; parse problems are reported with their line or
/// record position.
Mesh load_mesh(const std::string& path, MeshFormat format = MeshFormat::Auto);

void save_mesh(const Mesh& mesh, const std::string& path,
               MeshFormat format = MeshFormat::Auto);

/// Landmark file: JSON object mapping name -> [x, y, z] in mm.
std::map<std::string, Vec3> load_landmarks(const std::string& path);
void save_landmarks(const std::map<std::string, Vec3>& landmarks, const std::string& path);

/// Curve CSV with columns index, s_mm, x_mm, y_mm, z_mm.
void save_curve_csv(const SurfaceCurve& curve, const std::string& path);
SurfaceCurve load_curve_csv(const std::string& path);

} // namespace rvc
