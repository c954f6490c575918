#include "instex/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "instex/base64.hpp"
#include "instex/errors.hpp"

namespace instex {

namespace fs = std::filesystem;
using nlohmann::json;

Vec3 Mesh::face_normal(std::size_t tri) const {
    const auto [a, b, c] = corners(tri);
    const Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

std::vector<Vec3> Mesh::vertex_normals() const {
    std::vector<Vec3> normals(vertices.size(), Vec3::Zero());
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto [a, b, c] = corners(t);
        const Vec3 weighted = (b - a).cross(c - a);
        for (auto v : triangles[t]) normals[v] += weighted;
    }
    for (auto& n : normals) {
        const double len = n.norm();
        if (len > 0.0) n /= len;
    }
    return normals;
}

BoundingBox bounding_box(const Mesh& mesh) {
    BoundingBox box;
    for (const auto& v : mesh.vertices) box.extend(v);
    return box;
}

MeshReport validate_mesh(Mesh& mesh) {
    MeshReport report;

    for (auto& uv : mesh.uvs) {
        const Vec2 clamped = uv.cwiseMax(0.0).cwiseMin(1.0);
        if (clamped != uv) {
            uv = clamped;
            ++report.uvs_clamped;
        }
    }

    std::vector<Index3> kept;
    std::vector<Index3> kept_uv;
    kept.reserve(mesh.triangles.size());
    kept_uv.reserve(mesh.triangles.size());
    const bool with_uv = mesh.uv_triangles.size() == mesh.triangles.size();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto [a, b, c] = mesh.corners(t);
        const double area = 0.5 * (b - a).cross(c - a).norm();
        if (!(area > kDegenerateAreaTolerance)) {
            ++report.degenerate_dropped;
            continue;
        }
        kept.push_back(mesh.triangles[t]);
        if (with_uv) kept_uv.push_back(mesh.uv_triangles[t]);
    }
    mesh.triangles = std::move(kept);
    if (with_uv) mesh.uv_triangles = std::move(kept_uv);

    std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use;
    for (const auto& tri : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            auto a = tri[e];
            auto b = tri[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            ++edge_use[{a, b}];
        }
    }
    for (const auto& [edge, count] : edge_use) {
        if (count > 2) ++report.non_manifold_edges;
    }
    return report;
}

namespace {

void check_structure(const Mesh& mesh, const fs::path& path) {
    const std::string where = path.string();
    for (const auto& v : mesh.vertices) {
        if (!v.allFinite()) throw GeometryError(where + ": non-finite vertex");
    }
    for (const auto& uv : mesh.uvs) {
        if (!uv.allFinite()) throw GeometryError(where + ": non-finite UV coordinate");
    }
    for (const auto& tri : mesh.triangles) {
        for (auto i : tri) {
            if (i >= mesh.vertices.size()) throw GeometryError(where + ": triangle index out of range");
        }
    }
    if (!mesh.has_uvs()) throw GeometryError(where + ": mesh has no UV parameterization");
    for (const auto& tri : mesh.uv_triangles) {
        for (auto i : tri) {
            if (i >= mesh.uvs.size()) throw GeometryError(where + ": UV index out of range");
        }
    }
}

// OBJ indices are 1-based; negative values count back from the end.
std::uint32_t resolve_obj_index(long raw, std::size_t count, const std::string& where) {
    long idx = raw > 0 ? raw - 1 : static_cast<long>(count) + raw;
    if (raw == 0 || idx < 0 || static_cast<std::size_t>(idx) >= count) {
        throw GeometryError(where + ": face index out of range");
    }
    return static_cast<std::uint32_t>(idx);
}

}  // namespace

Mesh load_obj(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw GeometryError("cannot open mesh file: " + path.string());

    Mesh mesh;
    bool missing_uv = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);

        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x() >> p.y() >> p.z())) throw GeometryError(where + ": malformed vertex");
            mesh.vertices.push_back(p);
        } else if (tag == "vt") {
            Vec2 uv;
            if (!(ls >> uv.x() >> uv.y())) throw GeometryError(where + ": malformed texture coordinate");
            mesh.uvs.push_back(uv);
        } else if (tag == "f") {
            std::vector<std::uint32_t> pos;
            std::vector<std::uint32_t> tex;
            std::string corner;
            while (ls >> corner) {
                const auto slash = corner.find('/');
                const long vi = std::stol(corner.substr(0, slash));
                pos.push_back(resolve_obj_index(vi, mesh.vertices.size(), where));
                if (slash == std::string::npos || slash + 1 >= corner.size() || corner[slash + 1] == '/') {
                    missing_uv = true;
                    continue;
                }
                const auto second = corner.find('/', slash + 1);
                const long ti = std::stol(corner.substr(slash + 1, second - slash - 1));
                tex.push_back(resolve_obj_index(ti, mesh.uvs.size(), where));
            }
            if (pos.size() < 3) throw GeometryError(where + ": face with fewer than 3 corners");
            for (std::size_t k = 1; k + 1 < pos.size(); ++k) {
                mesh.triangles.push_back({pos[0], pos[k], pos[k + 1]});
                if (tex.size() == pos.size()) mesh.uv_triangles.push_back({tex[0], tex[k], tex[k + 1]});
            }
        }
    }
    if (missing_uv) throw GeometryError(path.string() + ": mesh has no UV parameterization");
    return mesh;
}

namespace {

struct GltfDocument {
    json doc;
    std::vector<std::vector<std::uint8_t>> buffers;
};

std::vector<std::uint8_t> read_binary(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GeometryError("cannot open file: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GltfDocument parse_gltf_container(const fs::path& path) {
    GltfDocument out;
    auto bytes = read_binary(path);
    std::vector<std::uint8_t> glb_bin;
    if (bytes.size() >= 12 && std::memcmp(bytes.data(), "glTF", 4) == 0) {
        std::size_t offset = 12;
        std::string json_text;
        while (offset + 8 <= bytes.size()) {
            std::uint32_t length = 0;
            std::uint32_t type = 0;
            std::memcpy(&length, bytes.data() + offset, 4);
            std::memcpy(&type, bytes.data() + offset + 4, 4);
            offset += 8;
            if (offset + length > bytes.size()) throw GeometryError(path.string() + ": truncated GLB chunk");
            if (type == 0x4E4F534A) {
                json_text.assign(reinterpret_cast<const char*>(bytes.data() + offset), length);
            } else if (type == 0x004E4942) {
                glb_bin.assign(bytes.begin() + static_cast<long>(offset),
                               bytes.begin() + static_cast<long>(offset + length));
            }
            offset += length;
        }
        out.doc = json::parse(json_text);
    } else {
        out.doc = json::parse(bytes.begin(), bytes.end());
    }

    for (const auto& buf : out.doc.value("buffers", json::array())) {
        if (!buf.contains("uri")) {
            out.buffers.push_back(glb_bin);
            continue;
        }
        const std::string uri = buf["uri"];
        if (uri.rfind("data:", 0) == 0) {
            const auto comma = uri.find(',');
            if (comma == std::string::npos || uri.find(";base64") == std::string::npos) {
                throw GeometryError(path.string() + ": unsupported data URI");
            }
            out.buffers.push_back(base64_decode(std::string_view(uri).substr(comma + 1)));
        } else {
            out.buffers.push_back(read_binary(path.parent_path() / uri));
        }
    }
    return out;
}

template <int N>
std::vector<Eigen::Matrix<double, N, 1>> read_float_accessor(const GltfDocument& g, int index,
                                                             const std::string& where) {
    const auto& acc = g.doc.at("accessors").at(index);
    if (acc.at("componentType").get<int>() != 5126) {
        throw GeometryError(where + ": only float POSITION/TEXCOORD_0 accessors are supported");
    }
    const auto& view = g.doc.at("bufferViews").at(acc.at("bufferView").get<int>());
    const auto& buffer = g.buffers.at(view.at("buffer").get<std::size_t>());
    const std::size_t count = acc.at("count");
    const std::size_t stride = view.value("byteStride", static_cast<std::size_t>(N * 4));
    const std::size_t base = view.value("byteOffset", std::size_t{0}) + acc.value("byteOffset", std::size_t{0});
    std::vector<Eigen::Matrix<double, N, 1>> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t at = base + i * stride;
        if (at + N * 4 > buffer.size()) throw GeometryError(where + ": accessor exceeds buffer");
        for (int c = 0; c < N; ++c) {
            float f = 0.0f;
            std::memcpy(&f, buffer.data() + at + static_cast<std::size_t>(c) * 4, 4);
            out[i][c] = f;
        }
    }
    return out;
}

std::vector<std::uint32_t> read_index_accessor(const GltfDocument& g, int index, const std::string& where) {
    const auto& acc = g.doc.at("accessors").at(index);
    const int type = acc.at("componentType");
    const std::size_t width = type == 5121 ? 1 : type == 5123 ? 2 : type == 5125 ? 4 : 0;
    if (width == 0) throw GeometryError(where + ": unsupported index component type");
    const auto& view = g.doc.at("bufferViews").at(acc.at("bufferView").get<int>());
    const auto& buffer = g.buffers.at(view.at("buffer").get<std::size_t>());
    const std::size_t count = acc.at("count");
    const std::size_t stride = view.value("byteStride", width);
    const std::size_t base = view.value("byteOffset", std::size_t{0}) + acc.value("byteOffset", std::size_t{0});
    std::vector<std::uint32_t> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t at = base + i * stride;
        if (at + width > buffer.size()) throw GeometryError(where + ": accessor exceeds buffer");
        std::uint32_t v = 0;
        std::memcpy(&v, buffer.data() + at, width);
        out[i] = v;
    }
    return out;
}

}  // namespace

Mesh load_gltf(const fs::path& path) {
    const std::string where = path.string();
    GltfDocument g;
    try {
        g = parse_gltf_container(path);
    } catch (const json::exception& e) {
        throw GeometryError(where + ": malformed glTF: " + e.what());
    }

    Mesh mesh;
    try {
        const auto& meshes = g.doc.at("meshes");
        if (meshes.empty()) throw GeometryError(where + ": glTF has no meshes");
        for (const auto& prim : meshes.at(0).at("primitives")) {
            if (prim.value("mode", 4) != 4) throw GeometryError(where + ": only triangle primitives are supported");
            const auto& attrs = prim.at("attributes");
            if (!attrs.contains("TEXCOORD_0")) throw GeometryError(where + ": mesh has no UV parameterization");
            const auto positions = read_float_accessor<3>(g, attrs.at("POSITION"), where);
            const auto texcoords = read_float_accessor<2>(g, attrs.at("TEXCOORD_0"), where);
            if (texcoords.size() != positions.size()) throw GeometryError(where + ": TEXCOORD_0 count mismatch");

            const auto offset = static_cast<std::uint32_t>(mesh.vertices.size());
            std::vector<std::uint32_t> indices;
            if (prim.contains("indices")) {
                indices = read_index_accessor(g, prim.at("indices"), where);
            } else {
                indices.resize(positions.size());
                for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<std::uint32_t>(i);
            }
            if (indices.size() % 3 != 0) throw GeometryError(where + ": index count not a multiple of 3");

            mesh.vertices.insert(mesh.vertices.end(), positions.begin(), positions.end());
            // glTF puts the UV origin at the top-left; flip to the bottom-left convention.
            for (const auto& uv : texcoords) mesh.uvs.emplace_back(uv.x(), 1.0 - uv.y());
            for (std::size_t i = 0; i < indices.size(); i += 3) {
                const Index3 tri{indices[i] + offset, indices[i + 1] + offset, indices[i + 2] + offset};
                mesh.triangles.push_back(tri);
                mesh.uv_triangles.push_back(tri);
            }
        }
    } catch (const json::exception& e) {
        throw GeometryError(where + ": malformed glTF: " + e.what());
    }
    return mesh;
}

Mesh load_mesh(const fs::path& path, MeshReport* report) {
    if (!fs::exists(path)) throw GeometryError("missing mesh file: " + path.string());
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });

    Mesh mesh;
    if (ext == ".obj") {
        mesh = load_obj(path);
    } else if (ext == ".gltf" || ext == ".glb") {
        mesh = load_gltf(path);
    } else {
        throw GeometryError("unsupported mesh format: " + path.string());
    }
    check_structure(mesh, path);
    const MeshReport r = validate_mesh(mesh);
    if (report != nullptr) *report = r;
    return mesh;
}

void save_obj(const Mesh& mesh, const fs::path& path, const std::string& material) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (f == nullptr) throw GeometryError("cannot write mesh file: " + path.string());
    if (!material.empty()) {
        std::fprintf(f, "mtllib %s.mtl\nusemtl %s\n", path.stem().string().c_str(), material.c_str());
    }
    for (const auto& v : mesh.vertices) std::fprintf(f, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    for (const auto& uv : mesh.uvs) std::fprintf(f, "vt %.17g %.17g\n", uv.x(), uv.y());
    const bool with_uv = mesh.has_uvs();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& p = mesh.triangles[t];
        if (with_uv) {
            const auto& q = mesh.uv_triangles[t];
            std::fprintf(f, "f %u/%u %u/%u %u/%u\n", p[0] + 1, q[0] + 1, p[1] + 1, q[1] + 1, p[2] + 1, q[2] + 1);
        } else {
            std::fprintf(f, "f %u %u %u\n", p[0] + 1, p[1] + 1, p[2] + 1);
        }
    }
    std::fclose(f);
}

}  // namespace instex
