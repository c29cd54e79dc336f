#include "refrakt/mesh_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "refrakt/errors.hpp"

namespace refrakt {

static_assert(std::endian::native == std::endian::little, "PLY writer assumes a little-endian host");

namespace {

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void write_vertex_block(std::ostream& out, const std::vector<Vec3>& pts, const std::vector<Vec3>& normals,
                        const std::vector<double>& quality) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
        put<float>(out, static_cast<float>(pts[i].x));
        put<float>(out, static_cast<float>(pts[i].y));
        put<float>(out, static_cast<float>(pts[i].z));
        if (!normals.empty()) {
            put<float>(out, static_cast<float>(normals[i].x));
            put<float>(out, static_cast<float>(normals[i].y));
            put<float>(out, static_cast<float>(normals[i].z));
        }
        if (!quality.empty()) put<float>(out, static_cast<float>(quality[i]));
    }
}

void write_header(std::ostream& out, std::size_t nv, std::size_t nf, bool normals, bool quality) {
    out << "ply\nformat binary_little_endian 1.0\ncomment refrakt\n";
    out << "element vertex " << nv << "\nproperty float x\nproperty float y\nproperty float z\n";
    if (normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
    if (quality) out << "property float quality\n";
    if (nf > 0) out << "element face " << nf << "\nproperty list uchar int vertex_indices\n";
    out << "end_header\n";
}

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType parse_type(const std::string& s) {
    if (s == "char" || s == "int8") return PlyType::Int8;
    if (s == "uchar" || s == "uint8") return PlyType::UInt8;
    if (s == "short" || s == "int16") return PlyType::Int16;
    if (s == "ushort" || s == "uint16") return PlyType::UInt16;
    if (s == "int" || s == "int32") return PlyType::Int32;
    if (s == "uint" || s == "uint32") return PlyType::UInt32;
    if (s == "float" || s == "float32") return PlyType::Float32;
    if (s == "double" || s == "float64") return PlyType::Float64;
    throw IoError("unsupported PLY type " + s);
}

double read_binary(std::istream& in, PlyType t) {
    auto get = [&](auto v) {
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in) throw IoError("truncated PLY body");
        return static_cast<double>(v);
    };
    switch (t) {
        case PlyType::Int8: return get(std::int8_t{});
        case PlyType::UInt8: return get(std::uint8_t{});
        case PlyType::Int16: return get(std::int16_t{});
        case PlyType::UInt16: return get(std::uint16_t{});
        case PlyType::Int32: return get(std::int32_t{});
        case PlyType::UInt32: return get(std::uint32_t{});
        case PlyType::Float32: return get(float{});
        case PlyType::Float64: return get(double{});
    }
    return 0.0;
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::Float32;
    bool isList = false;
    PlyType countType = PlyType::UInt8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> props;
};

}  // namespace

TriangleMesh read_obj(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::vector<Vec3> v, vn;
    std::vector<Face> faces;
    std::vector<int> normalOfVertex;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3 p;
            ls >> p.x >> p.y >> p.z;
            v.push_back(p);
        } else if (tag == "vn") {
            Vec3 n;
            ls >> n.x >> n.y >> n.z;
            vn.push_back(n);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                const int vi = std::stoi(tok.substr(0, tok.find('/')));
                const int resolved = vi > 0 ? vi - 1 : static_cast<int>(v.size()) + vi;
                idx.push_back(resolved);
                const auto last = tok.rfind('/');
                if (last != std::string::npos && last + 1 < tok.size()) {
                    const int ni = std::stoi(tok.substr(last + 1));
                    normalOfVertex.resize(v.size(), -1);
                    normalOfVertex[resolved] = ni > 0 ? ni - 1 : static_cast<int>(vn.size()) + ni;
                }
            }
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) faces.push_back({idx[0], idx[k], idx[k + 1]});
        }
    }
    std::vector<Vec3> normals;
    if (!vn.empty()) {
        if (vn.size() == v.size() && normalOfVertex.empty()) {
            normals = vn;
        } else {
            normalOfVertex.resize(v.size(), -1);
            bool complete = true;
            for (int ni : normalOfVertex) complete &= ni >= 0 && ni < static_cast<int>(vn.size());
            if (complete)
                for (int ni : normalOfVertex) normals.push_back(vn[ni]);
        }
    }
    return TriangleMesh::build(std::move(v), std::move(faces), std::move(normals));
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
    auto out = open_out(path);
    out.precision(10);
    for (const Vec3& p : mesh.vertices) out << "v " << p.x << ' ' << p.y << ' ' << p.z << '\n';
    for (const Vec3& n : mesh.vertexNormals) out << "vn " << n.x << ' ' << n.y << ' ' << n.z << '\n';
    const bool withNormals = mesh.has_normals();
    for (const Face& f : mesh.faces) {
        out << 'f';
        for (int i : f) {
            out << ' ' << i + 1;
            if (withNormals) out << "//" << i + 1;
        }
        out << '\n';
    }
}

void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh, const std::vector<double>& quality) {
    if (!quality.empty() && quality.size() != mesh.vertices.size())
        throw InvalidArgument("quality size does not match vertex count");
    auto out = open_out(path);
    write_header(out, mesh.vertices.size(), mesh.faces.size(), mesh.has_normals(), !quality.empty());
    write_vertex_block(out, mesh.vertices, mesh.vertexNormals, quality);
    for (const Face& f : mesh.faces) {
        put<std::uint8_t>(out, 3);
        for (int i : f) put<std::int32_t>(out, i);
    }
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, const std::vector<double>& quality) {
    if (!quality.empty() && quality.size() != cloud.size())
        throw InvalidArgument("quality size does not match point count");
    auto out = open_out(path);
    write_header(out, cloud.size(), 0, cloud.has_normals(), !quality.empty());
    write_vertex_block(out, cloud.points, cloud.normals, quality);
}

PlyData read_ply(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::in | std::ios::binary);
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) throw IoError(path.string() + " is not a PLY file");
    bool binary = false;
    std::vector<PlyElement> elements;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "binary_little_endian")
                binary = true;
            else if (fmt != "ascii")
                throw IoError("unsupported PLY format " + fmt);
        } else if (tag == "element") {
            PlyElement e;
            ls >> e.name >> e.count;
            elements.push_back(e);
        } else if (tag == "property") {
            if (elements.empty()) throw IoError("PLY property before element");
            PlyProperty p;
            std::string type;
            ls >> type;
            if (type == "list") {
                std::string ct, it;
                ls >> ct >> it >> p.name;
                p.isList = true;
                p.countType = parse_type(ct);
                p.type = parse_type(it);
            } else {
                p.type = parse_type(type);
                ls >> p.name;
            }
            elements.back().props.push_back(p);
        } else if (tag == "end_header") {
            break;
        }
    }

    auto read_value = [&](PlyType t) {
        if (binary) return read_binary(in, t);
        double v;
        if (!(in >> v)) throw IoError("truncated ASCII PLY body");
        return v;
    };

    std::vector<Vec3> verts, normals;
    std::vector<double> quality;
    std::vector<Face> faces;
    for (const PlyElement& e : elements) {
        for (std::size_t r = 0; r < e.count; ++r) {
            Vec3 p, n;
            bool hasN = false, hasQ = false;
            double q = 0.0;
            std::vector<int> list;
            for (const PlyProperty& prop : e.props) {
                if (prop.isList) {
                    const int cnt = static_cast<int>(read_value(prop.countType));
                    list.resize(cnt);
                    for (int k = 0; k < cnt; ++k) list[k] = static_cast<int>(read_value(prop.type));
                    continue;
                }
                const double v = read_value(prop.type);
                if (prop.name == "x") p.x = v;
                else if (prop.name == "y") p.y = v;
                else if (prop.name == "z") p.z = v;
                else if (prop.name == "nx") n.x = v, hasN = true;
                else if (prop.name == "ny") n.y = v, hasN = true;
                else if (prop.name == "nz") n.z = v, hasN = true;
                else if (prop.name == "quality" || prop.name == "scalar") q = v, hasQ = true;
            }
            if (e.name == "vertex") {
                verts.push_back(p);
                if (hasN) normals.push_back(n);
                if (hasQ) quality.push_back(q);
            } else if (e.name == "face") {
                for (std::size_t k = 1; k + 1 < list.size(); ++k) faces.push_back({list[0], list[k], list[k + 1]});
            }
        }
    }
    PlyData data;
    data.mesh = TriangleMesh::build(std::move(verts), std::move(faces), std::move(normals));
    data.quality = std::move(quality);
    return data;
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".obj" || ext == ".OBJ") return read_obj(path);
    if (ext == ".ply" || ext == ".PLY") return read_ply(path).mesh;
    throw IoError("unknown mesh extension " + ext);
}

void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
    const auto ext = path.extension().string();
    if (ext == ".obj" || ext == ".OBJ")
        write_obj(path, mesh);
    else
        write_ply(path, mesh);
}

}  // namespace refrakt
