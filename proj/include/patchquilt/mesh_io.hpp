#pragma once
#include <string>

#include "patchquilt/mesh.hpp"

namespace patchquilt {

enum class MeshFormat { OBJ, PLY };

/// Picks OBJ for ".obj", PLY for ".ply"; throws IoError otherwise.
MeshFormat format_from_path(const std::string& path);

/// Loads an OBJ (v/f lines) or ascii PLY. Polygon faces are fan-triangulated
/// with a warning on stderr. Parse failures throw ParseError with the line
/// number. PLY meshes may carry a per-vertex uchar property `valid`.
Mesh load_mesh(const std::string& path, MeshFormat format);
Mesh load_mesh(const std::string& path);

/// Validity flags are only representable in PLY (property `valid`); saving a
/// flagged mesh as OBJ drops them with a warning.
void save_mesh(const Mesh& mesh, const std::string& path, MeshFormat format);
void save_mesh(const Mesh& mesh, const std::string& path);

/// Ground-truth removed-vertex files: one line per vertex, "index x y z".
struct RemovedVertex {
    int index;
    Vec3 position;
};
void save_removed_vertices(const std::vector<RemovedVertex>& removed, const std::string& path);
std::vector<RemovedVertex> load_removed_vertices(const std::string& path);

}  // namespace patchquilt
