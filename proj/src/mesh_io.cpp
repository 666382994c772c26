#include "deepcurrents/mesh_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "deepcurrents/errors.hpp"

namespace deepcurrents {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

std::string_view next_token(std::string_view& line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
  std::size_t j = i;
  while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
  const std::string_view token = line.substr(i, j - i);
  line.remove_prefix(j);
  return token;
}

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& what) {
  throw FormatError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view token, std::string_view source, std::size_t line) {
  // std::from_chars for double is available in libstdc++ 11.
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    fail(source, line, "expected a number, got '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

TriangleMesh parse_obj(std::string_view text, MeshLoadStats* stats, std::string_view source) {
  TriangleMesh mesh;
  MeshLoadStats local;
  MeshLoadStats& st = stats ? *stats : local;
  st = {};

  std::vector<std::pair<Face, std::size_t>> raw_faces;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
    ++line_no;

    const std::string_view tag = next_token(line);
    if (tag == "v") {
      Vec3 p;
      for (int k = 0; k < 3; ++k) {
        const std::string_view tok = next_token(line);
        if (tok.empty()) fail(source, line_no, "vertex needs three coordinates");
        p[k] = parse_double(tok, source, line_no);
      }
      mesh.vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<int> poly;
      for (std::string_view tok = next_token(line); !tok.empty(); tok = next_token(line)) {
        const std::string_view head = tok.substr(0, tok.find('/'));
        long index = 0;
        const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), index);
        if (ec != std::errc() || ptr != head.data() + head.size() || index == 0) {
          fail(source, line_no, "bad face index '" + std::string(tok) + "'");
        }
        const long count = static_cast<long>(mesh.vertices.size());
        const long resolved = index > 0 ? index - 1 : count + index;
        if (resolved < 0 || resolved >= count) {
          fail(source, line_no, "face index " + std::to_string(index) + " out of range (" + std::to_string(count) +
                                    " vertices defined)");
        }
        poly.push_back(static_cast<int>(resolved));
      }
      if (poly.size() < 3) fail(source, line_no, "face needs at least three vertices");
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) raw_faces.push_back({{poly[0], poly[k], poly[k + 1]}, line_no});
    }
  }

  for (const auto& [face, line] : raw_faces) {
    const auto& [a, b, c] = face;
    const bool repeated = a == b || b == c || a == c;
    const Vec3 cross = (mesh.vertices[b] - mesh.vertices[a]).cross(mesh.vertices[c] - mesh.vertices[a]);
    if (repeated || !(cross.norm() > 0.0)) {
      ++st.dropped_faces;
      st.warnings.push_back(std::string(source) + ":" + std::to_string(line) + ": dropped zero-area face");
      continue;
    }
    mesh.faces.push_back(face);
  }
  if (mesh.vertices.empty() || mesh.faces.empty()) throw FormatError(std::string(source) + ": mesh is empty");
  st.vertex_count = mesh.vertices.size();
  st.face_count = mesh.faces.size();
  return mesh;
}

TriangleMesh load_mesh(const std::filesystem::path& path, MeshLoadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open mesh file " + path.string());
  if (path.extension() == ".ply") {
    TriangleMesh mesh = read_ply(in);
    if (stats) *stats = {mesh.vertices.size(), mesh.faces.size(), 0, {}};
    return mesh;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_obj(buffer.str(), stats, path.string());
}

void write_obj(const TriangleMesh& mesh, std::ostream& out) {
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& [a, b, c] : mesh.faces) out << "f " << a + 1 << ' ' << b + 1 << ' ' << c + 1 << '\n';
}

void write_ply(const TriangleMesh& mesh, std::ostream& out) {
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "element face " << mesh.faces.size() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  for (const auto& v : mesh.vertices) {
    const float xyz[3] = {static_cast<float>(v.x()), static_cast<float>(v.y()), static_cast<float>(v.z())};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
  for (const auto& f : mesh.faces) {
    const auto n = static_cast<std::uint8_t>(3);
    const std::int32_t idx[3] = {f[0], f[1], f[2]};
    out.write(reinterpret_cast<const char*>(&n), 1);
    out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
  }
}

TriangleMesh read_ply(std::istream& in) {
  std::string line;
  std::size_t vertices = 0;
  std::size_t faces = 0;
  if (!std::getline(in, line) || line != "ply") throw FormatError("not a PLY file");
  bool binary_le = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string kind;
      ls >> kind;
      binary_le = kind == "binary_little_endian";
    } else if (word == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      if (name == "vertex") vertices = count;
      if (name == "face") faces = count;
    } else if (word == "end_header") {
      break;
    }
  }
  if (!binary_le) throw FormatError("only binary_little_endian PLY is supported");
  TriangleMesh mesh;
  mesh.vertices.resize(vertices);
  for (auto& v : mesh.vertices) {
    float xyz[3];
    if (!in.read(reinterpret_cast<char*>(xyz), sizeof(xyz))) throw FormatError("PLY: truncated vertex data");
    v = Vec3(xyz[0], xyz[1], xyz[2]);
  }
  mesh.faces.resize(faces);
  for (auto& f : mesh.faces) {
    std::uint8_t n = 0;
    std::int32_t idx[3];
    if (!in.read(reinterpret_cast<char*>(&n), 1) || n != 3) throw FormatError("PLY: only triangles are supported");
    if (!in.read(reinterpret_cast<char*>(idx), sizeof(idx))) throw FormatError("PLY: truncated face data");
    f = {idx[0], idx[1], idx[2]};
  }
  try {
    mesh.check_indices();
  } catch (const InputError& e) {
    throw FormatError(std::string("PLY: ") + e.what());
  }
  return mesh;
}

}  // namespace deepcurrents
