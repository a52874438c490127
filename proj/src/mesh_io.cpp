#include "patchquilt/mesh_io.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "patchquilt/errors.hpp"

namespace patchquilt {

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
    throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

// OBJ face entries may be "i", "i/t", "i//n" or "i/t/n"; only the vertex
// index is used.
int parse_obj_index(const std::string& tok, int vertex_count, const std::string& path, int line) {
    size_t slash = tok.find('/');
    std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
    int idx = 0;
    try {
        idx = std::stoi(head);
    } catch (const std::exception&) {
        parse_fail(path, line, "bad face index '" + tok + "'");
    }
    if (idx == 0) parse_fail(path, line, "face index 0 (OBJ indices are 1-based)");
    if (idx < 0) idx = vertex_count + idx + 1;  // negative = relative to end
    if (idx < 1 || idx > vertex_count)
        parse_fail(path, line, "face index " + std::to_string(idx) + " out of range (have " +
                                   std::to_string(vertex_count) + " vertices)");
    return idx - 1;
}

void push_polygon(Mesh& mesh, const std::vector<int>& poly, const std::string& path, int line) {
    if (poly.size() < 3) parse_fail(path, line, "face with fewer than 3 vertices");
    if (poly.size() > 3)
        std::cerr << "warning: " << path << ":" << line << ": " << poly.size()
                  << "-gon fan-triangulated\n";
    for (size_t i = 1; i + 1 < poly.size(); ++i)
        mesh.faces.push_back({poly[0], static_cast<int>(poly[i]), static_cast<int>(poly[i + 1])});
}

Mesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    Mesh mesh;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ss >> v.x >> v.y >> v.z)) parse_fail(path, lineno, "bad vertex line");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ss >> tok)
                poly.push_back(parse_obj_index(tok, mesh.vertex_count(), path, lineno));
            push_polygon(mesh, poly, path, lineno);
        }
        // vn/vt/usemtl/etc. ignored
    }
    return mesh;
}

struct PlyProperty {
    std::string type;
    std::string name;
    bool is_list = false;
};

Mesh load_ply(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    int lineno = 0;

    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) parse_fail(path, lineno, std::string("unexpected EOF, expected ") + what);
        ++lineno;
    };

    next_line("ply magic");
    if (line.rfind("ply", 0) != 0) parse_fail(path, lineno, "not a PLY file");
    next_line("format line");
    if (line.rfind("format ascii", 0) != 0)
        parse_fail(path, lineno, "only ascii PLY is supported");

    size_t vertex_count = 0, face_count = 0;
    std::vector<PlyProperty> vertex_props;
    std::string current_element;
    while (true) {
        next_line("header line");
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "comment") continue;
        if (tag == "element") {
            std::string name;
            size_t count;
            if (!(ss >> name >> count)) parse_fail(path, lineno, "bad element line");
            current_element = name;
            if (name == "vertex") vertex_count = count;
            else if (name == "face") face_count = count;
            else parse_fail(path, lineno, "unsupported element '" + name + "'");
        } else if (tag == "property") {
            if (current_element == "vertex") {
                PlyProperty p;
                ss >> p.type;
                if (p.type == "list") {
                    parse_fail(path, lineno, "list property on vertex element unsupported");
                }
                ss >> p.name;
                vertex_props.push_back(p);
            }
            // face properties: assume the single standard vertex_indices list
        } else if (tag == "end_header") {
            break;
        } else {
            parse_fail(path, lineno, "unexpected header line '" + line + "'");
        }
    }

    int ix = -1, iy = -1, iz = -1, ivalid = -1;
    for (size_t i = 0; i < vertex_props.size(); ++i) {
        if (vertex_props[i].name == "x") ix = static_cast<int>(i);
        else if (vertex_props[i].name == "y") iy = static_cast<int>(i);
        else if (vertex_props[i].name == "z") iz = static_cast<int>(i);
        else if (vertex_props[i].name == "valid") ivalid = static_cast<int>(i);
    }
    if (ix < 0 || iy < 0 || iz < 0) parse_fail(path, lineno, "vertex element lacks x/y/z");

    Mesh mesh;
    mesh.vertices.reserve(vertex_count);
    if (ivalid >= 0) mesh.valid.reserve(vertex_count);
    std::vector<double> vals(vertex_props.size());
    for (size_t v = 0; v < vertex_count; ++v) {
        next_line("vertex row");
        std::istringstream ss(line);
        for (auto& d : vals)
            if (!(ss >> d)) parse_fail(path, lineno, "short vertex row");
        mesh.vertices.push_back({vals[ix], vals[iy], vals[iz]});
        if (ivalid >= 0) mesh.valid.push_back(vals[ivalid] != 0 ? 1 : 0);
    }
    for (size_t f = 0; f < face_count; ++f) {
        next_line("face row");
        std::istringstream ss(line);
        int n;
        if (!(ss >> n) || n < 3) parse_fail(path, lineno, "bad face row");
        std::vector<int> poly(n);
        for (int& idx : poly) {
            if (!(ss >> idx)) parse_fail(path, lineno, "short face row");
            if (idx < 0 || idx >= mesh.vertex_count())
                parse_fail(path, lineno, "face index " + std::to_string(idx) + " out of range");
        }
        push_polygon(mesh, poly, path, lineno);
    }
    return mesh;
}

void save_obj(const Mesh& mesh, const std::string& path) {
    if (!mesh.valid.empty())
        std::cerr << "warning: OBJ cannot store validity flags; saving " << path
                  << " drops them (use PLY)\n";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    char buf[128];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    if (!out) throw IoError("write failure on " + path);
}

void save_ply(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    bool flags = !mesh.valid.empty();
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << mesh.vertex_count() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    if (flags) out << "property uchar valid\n";
    out << "element face " << mesh.face_count() << "\n";
    out << "property list uchar int vertex_indices\n";
    out << "end_header\n";
    char buf[160];
    for (int i = 0; i < mesh.vertex_count(); ++i) {
        const Vec3& v = mesh.vertices[i];
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", v.x, v.y, v.z);
        out << buf;
        if (flags) out << ' ' << int(mesh.valid[i]);
        out << '\n';
    }
    for (const auto& f : mesh.faces)
        out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    if (!out) throw IoError("write failure on " + path);
}

}  // namespace

MeshFormat format_from_path(const std::string& path) {
    auto dotpos = path.find_last_of('.');
    std::string ext = dotpos == std::string::npos ? "" : path.substr(dotpos);
    for (auto& c : ext) c = static_cast<char>(std::tolower(c));
    if (ext == ".obj") return MeshFormat::OBJ;
    if (ext == ".ply") return MeshFormat::PLY;
    throw IoError("cannot infer mesh format from path: " + path);
}

Mesh load_mesh(const std::string& path, MeshFormat format) {
    Mesh mesh = format == MeshFormat::OBJ ? load_obj(path) : load_ply(path);
    mesh.validate();
    return mesh;
}

Mesh load_mesh(const std::string& path) { return load_mesh(path, format_from_path(path)); }

void save_mesh(const Mesh& mesh, const std::string& path, MeshFormat format) {
    mesh.validate();
    if (format == MeshFormat::OBJ) save_obj(mesh, path);
    else save_ply(mesh, path);
}

void save_mesh(const Mesh& mesh, const std::string& path) {
    save_mesh(mesh, path, format_from_path(path));
}

void save_removed_vertices(const std::vector<RemovedVertex>& removed, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    char buf[160];
    for (const auto& r : removed) {
        std::snprintf(buf, sizeof buf, "%d %.17g %.17g %.17g\n", r.index, r.position.x,
                      r.position.y, r.position.z);
        out << buf;
    }
}

std::vector<RemovedVertex> load_removed_vertices(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<RemovedVertex> removed;
    RemovedVertex r;
    int lineno = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        if (!(ss >> r.index >> r.position.x >> r.position.y >> r.position.z))
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad removed-vertex line");
        removed.push_back(r);
    }
    return removed;
}

}  // namespace patchquilt
