#pragma once

#include <filesystem>
#include <iosfwd>

#include "deepcurrents/geometry.hpp"

namespace deepcurrents {

void write_obj(const TriangleMesh& mesh, std::ostream& out);
/// Binary little-endian PLY with float32 vertices and int32 face indices.
void write_ply(const TriangleMesh& mesh, std::ostream& out);

/// Reads the PLY subset produced by write_ply.
TriangleMesh read_ply(std::istream& in);

}  // namespace deepcurrents
