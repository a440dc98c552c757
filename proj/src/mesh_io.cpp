#include "rvc/mesh_io.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rvc {

namespace {

MeshFormat detect_format(const std::string& path) {
    auto dot = path.find_last_of('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    for (auto& c : ext) c = char(std::tolower(c));
    if (ext == "obj") return MeshFormat::Obj;
    if (ext == "ply") return MeshFormat::PlyAscii; // readers sniff the header anyway
    throw Error("cannot infer mesh format from '" + path + "' (use .obj or .ply)");
}

Mesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<Vec3> normals;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag.empty() || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ss >> p.x() >> p.y() >> p.z()))
                throw Error(path + ":" + std::to_string(lineno) + ": malformed vertex record");
            vertices.push_back(p);
        } else if (tag == "vn") {
            Vec3 n;
            if (!(ss >> n.x() >> n.y() >> n.z()))
                throw Error(path + ":" + std::to_string(lineno) + ": malformed normal record");
            normals.push_back(n);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string corner;
            while (ss >> corner) {
                // take the vertex index before any '/'
                size_t slash = corner.find('/');
                std::string head = slash == std::string::npos ? corner : corner.substr(0, slash);
                int v = 0;
                try {
                    v = std::stoi(head);
                } catch (...) {
                    throw Error(path + ":" + std::to_string(lineno) + ": malformed face corner '" +
                                corner + "'");
                }
                if (v < 0) v = int(vertices.size()) + v + 1; // negative = relative
                if (v < 1 || v > int(vertices.size()))
                    throw Error(path + ":" + std::to_string(lineno) + ": face index " +
                                std::to_string(v) + " out of range");
                idx.push_back(v - 1);
            }
            if (idx.size() != 3)
                throw Error(path + ":" + std::to_string(lineno) + ": non-triangular face (" +
                            std::to_string(idx.size()) + " corners)");
            triangles.push_back({idx[0], idx[1], idx[2]});
        }
        // ignore other records (vt, usemtl, g, ...)
    }
    if (!normals.empty() && normals.size() != vertices.size()) normals.clear();
    return Mesh(std::move(vertices), std::move(triangles), std::move(normals));
}

struct PlyProperty {
    std::string type;   // scalar type, or list count type
    std::string arg;    // list element type (lists only)
    std::string name;
    bool is_list = false;
};

struct PlyElement {
    std::string name;
    size_t count = 0;
    std::vector<PlyProperty> props;
};

size_t scalar_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
        t == "float32")
        return 4;
    if (t == "double" || t == "float64") return 8;
    throw Error("unsupported PLY scalar type '" + t + "'");
}

double read_binary_scalar(std::ifstream& in, const std::string& type) {
    unsigned char buf[8];
    size_t n = scalar_size(type);
    in.read(reinterpret_cast<char*>(buf), std::streamsize(n));
    if (!in) throw Error("unexpected end of PLY binary payload");
    auto as = [&](auto v) {
        std::memcpy(&v, buf, sizeof v);
        return double(v);
    };
    if (type == "char" || type == "int8") return as(std::int8_t{});
    if (type == "uchar" || type == "uint8") return as(std::uint8_t{});
    if (type == "short" || type == "int16") return as(std::int16_t{});
    if (type == "ushort" || type == "uint16") return as(std::uint16_t{});
    if (type == "int" || type == "int32") return as(std::int32_t{});
    if (type == "uint" || type == "uint32") return as(std::uint32_t{});
    if (type == "float" || type == "float32") return as(float{});
    return as(double{});
}

Mesh load_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply")
        throw Error(path + ": missing 'ply' magic");
    bool binary = false;
    std::vector<PlyElement> elements;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "comment" || tag == "obj_info") continue;
        if (tag == "format") {
            std::string fmt, version;
            ss >> fmt >> version;
            if (fmt == "ascii")
                binary = false;
            else if (fmt == "binary_little_endian")
                binary = true;
            else
                throw Error(path + ":" + std::to_string(lineno) + ": unsupported PLY format '" +
                            fmt + "' (ascii or binary_little_endian only)");
        } else if (tag == "element") {
            PlyElement e;
            ss >> e.name >> e.count;
            elements.push_back(e);
        } else if (tag == "property") {
            if (elements.empty())
                throw Error(path + ":" + std::to_string(lineno) + ": property before element");
            PlyProperty p;
            std::string t;
            ss >> t;
            if (t == "list") {
                p.is_list = true;
                ss >> p.type >> p.arg >> p.name;
            } else {
                p.type = t;
                ss >> p.name;
            }
            elements.back().props.push_back(p);
        } else if (tag == "end_header") {
            break;
        } else {
            throw Error(path + ":" + std::to_string(lineno) + ": unknown header record '" + tag +
                        "'");
        }
    }

    std::vector<Vec3> vertices;
    std::vector<Vec3> normals;
    std::vector<std::array<int, 3>> triangles;

    auto read_ascii_tokens = [&](size_t n, std::vector<double>& out) {
        out.clear();
        while (out.size() < n) {
            double v;
            if (!(in >> v)) throw Error(path + ": unexpected end of PLY ascii payload");
            out.push_back(v);
        }
    };

    for (const auto& elem : elements) {
        for (size_t i = 0; i < elem.count; ++i) {
            if (elem.name == "vertex") {
                double x = 0, y = 0, z = 0, nx = 0, ny = 0, nz = 0;
                bool has_n = false;
                if (binary) {
                    for (const auto& p : elem.props) {
                        if (p.is_list) throw Error(path + ": list property on vertex element");
                        double v = read_binary_scalar(in, p.type);
                        if (p.name == "x") x = v;
                        else if (p.name == "y") y = v;
                        else if (p.name == "z") z = v;
                        else if (p.name == "nx") { nx = v; has_n = true; }
                        else if (p.name == "ny") ny = v;
                        else if (p.name == "nz") nz = v;
                    }
                } else {
                    std::vector<double> vals;
                    read_ascii_tokens(elem.props.size(), vals);
                    for (size_t k = 0; k < elem.props.size(); ++k) {
                        const auto& p = elem.props[k];
                        if (p.name == "x") x = vals[k];
                        else if (p.name == "y") y = vals[k];
                        else if (p.name == "z") z = vals[k];
                        else if (p.name == "nx") { nx = vals[k]; has_n = true; }
                        else if (p.name == "ny") ny = vals[k];
                        else if (p.name == "nz") nz = vals[k];
                    }
                }
                vertices.emplace_back(x, y, z);
                if (has_n) normals.emplace_back(nx, ny, nz);
            } else if (elem.name == "face") {
                std::vector<long> idx;
                if (binary) {
                    for (const auto& p : elem.props) {
                        if (!p.is_list) {
                            read_binary_scalar(in, p.type);
                            continue;
                        }
                        long n = long(read_binary_scalar(in, p.type));
                        idx.clear();
                        for (long k = 0; k < n; ++k)
                            idx.push_back(long(read_binary_scalar(in, p.arg)));
                    }
                } else {
                    double n;
                    if (!(in >> n)) throw Error(path + ": unexpected end of PLY ascii payload");
                    idx.clear();
                    for (long k = 0; k < long(n); ++k) {
                        double v;
                        if (!(in >> v)) throw Error(path + ": truncated face record");
                        idx.push_back(long(v));
                    }
                }
                if (idx.size() != 3)
                    throw Error(path + ": face " + std::to_string(i) + " is non-triangular (" +
                                std::to_string(idx.size()) + " corners)");
                for (long v : idx)
                    if (v < 0 || v >= long(vertices.size()))
                        throw Error(path + ": face " + std::to_string(i) + " index " +
                                    std::to_string(v) + " out of range");
                triangles.push_back({int(idx[0]), int(idx[1]), int(idx[2])});
            } else {
                // skip unknown element payload
                if (binary) {
                    for (const auto& p : elem.props) {
                        if (p.is_list) {
                            long n = long(read_binary_scalar(in, p.type));
                            for (long k = 0; k < n; ++k) read_binary_scalar(in, p.arg);
                        } else {
                            read_binary_scalar(in, p.type);
                        }
                    }
                } else {
                    std::vector<double> vals;
                    for (const auto& p : elem.props) {
                        if (p.is_list) {
                            double n;
                            in >> n;
                            read_ascii_tokens(size_t(n), vals);
                        } else {
                            double v;
                            in >> v;
                        }
                    }
                }
            }
        }
    }
    if (normals.size() != vertices.size()) normals.clear();
    return Mesh(std::move(vertices), std::move(triangles), std::move(normals));
}

void save_obj(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out.precision(17);
    for (const auto& v : mesh.vertices())
        out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
    for (const auto& n : mesh.stored_normals())
        out << "vn " << n.x() << " " << n.y() << " " << n.z() << "\n";
    for (const auto& t : mesh.triangles())
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    if (!out) throw Error("write failure on '" + path + "'");
}

void save_ply(const Mesh& mesh, const std::string& path, bool binary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
    out << "element vertex " << mesh.vertex_count() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    out << "element face " << mesh.triangle_count() << "\n";
    out << "property list uchar int vertex_indices\n";
    out << "end_header\n";
    if (binary) {
        for (const auto& v : mesh.vertices()) {
            double xyz[3] = {v.x(), v.y(), v.z()};
            out.write(reinterpret_cast<const char*>(xyz), sizeof xyz);
        }
        for (const auto& t : mesh.triangles()) {
            unsigned char n = 3;
            std::int32_t idx[3] = {t[0], t[1], t[2]};
            out.write(reinterpret_cast<const char*>(&n), 1);
            out.write(reinterpret_cast<const char*>(idx), sizeof idx);
        }
    } else {
        out.precision(17);
        for (const auto& v : mesh.vertices())
            out << v.x() << " " << v.y() << " " << v.z() << "\n";
        for (const auto& t : mesh.triangles())
            out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    }
    if (!out) throw Error("write failure on '" + path + "'");
}

} // namespace

Mesh load_mesh(const std::string& path, MeshFormat format) {
    if (format == MeshFormat::Auto) format = detect_format(path);
    if (format == MeshFormat::Obj) return load_obj(path);
    return load_ply(path);
}

void save_mesh(const Mesh& mesh, const std::string& path, MeshFormat format) {
    if (format == MeshFormat::Auto) format = detect_format(path);
    switch (format) {
        case MeshFormat::Obj: save_obj(mesh, path); break;
        case MeshFormat::PlyAscii: save_ply(mesh, path, false); break;
        case MeshFormat::PlyBinaryLE: save_ply(mesh, path, true); break;
        default: throw Error("unresolved mesh format");
    }
}

std::map<std::string, Vec3> load_landmarks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(path + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw Error(path + ": landmark file must be a JSON object");
    std::map<std::string, Vec3> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& arr = it.value();
        if (!arr.is_array() || arr.size() != 3)
            throw Error(path + ": landmark '" + it.key() + "' must be [x, y, z]");
        out[it.key()] = Vec3(arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>());
    }
    return out;
}

void save_landmarks(const std::map<std::string, Vec3>& landmarks, const std::string& path) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, p] : landmarks) j[name] = {p.x(), p.y(), p.z()};
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

void save_curve_csv(const SurfaceCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out.precision(17);
    out << "index,s_mm,x_mm,y_mm,z_mm\n";
    for (size_t i = 0; i < curve.points.size(); ++i) {
        const Vec3& p = curve.points[i];
        out << i << "," << curve.arc_lengths[i] << "," << p.x() << "," << p.y() << ","
            << p.z() << "\n";
    }
}

SurfaceCurve load_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line); // header
    std::vector<Vec3> pts;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double idx, s, x, y, z;
        if (!(ss >> idx >> s >> x >> y >> z)) throw Error(path + ": malformed CSV row");
        pts.emplace_back(x, y, z);
    }
    return SurfaceCurve::from_points(std::move(pts));
}

} // namespace rvc
