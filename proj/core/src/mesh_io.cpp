#include "palpatron/mesh.hpp"

#include "palpatron/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>
#include <string>

namespace palpatron
{
namespace
{

constexpr std::string_view kMagic = "palpmesh v1";

void put_u32(std::ostream& out, std::uint32_t v)
{
  const std::array<char, 4> bytes{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                  static_cast<char>((v >> 16) & 0xff),
                                  static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes.data(), bytes.size());
}

void put_f64(std::ostream& out, double d)
{
  const auto bits = std::bit_cast<std::uint64_t>(d);
  put_u32(out, static_cast<std::uint32_t>(bits & 0xffffffffULL));
  put_u32(out, static_cast<std::uint32_t>(bits >> 32));
}

std::uint32_t get_u32(std::istream& in)
{
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), b.size()))
  {
    throw MeshError("palpmesh: unexpected end of binary data");
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& in)
{
  const std::uint64_t lo = get_u32(in);
  const std::uint64_t hi = get_u32(in);
  return std::bit_cast<double>(lo | (hi << 32));
}

void finish(SurfaceMesh& mesh)
{
  std::uint32_t max_patch = 0;
  for (const auto p : mesh.patch_ids)
  {
    max_patch = std::max(max_patch, p);
  }
  mesh.patch_count = mesh.patch_ids.empty() ? 0 : max_patch + 1;
  for (const auto& tri : mesh.triangles)
  {
    for (const auto idx : tri)
    {
      if (idx >= mesh.vertices.size())
      {
        throw MeshError("palpmesh: triangle references vertex out of range");
      }
    }
  }
  mesh.vertex_normals = angle_weighted_normals(mesh.vertices, mesh.triangles);
  validate_mesh(mesh);
}

}  // namespace

SurfaceMesh read_palpmesh(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw MeshError("cannot open mesh file '" + path.string() + "'");
  }
  std::string header;
  std::getline(in, header);
  if (!header.starts_with(kMagic))
  {
    throw MeshError("'" + path.string() + "' is not a palpmesh v1 file");
  }
  const auto encoding = header.substr(kMagic.size());

  SurfaceMesh mesh;
  if (encoding == " binary")
  {
    const auto nv = get_u32(in);
    const auto nt = get_u32(in);
    mesh.vertices.reserve(nv);
    for (std::uint32_t i = 0; i < nv; ++i)
    {
      const double x = get_f64(in);
      const double y = get_f64(in);
      const double z = get_f64(in);
      mesh.vertices.emplace_back(x, y, z);
    }
    mesh.triangles.reserve(nt);
    mesh.patch_ids.reserve(nt);
    for (std::uint32_t i = 0; i < nt; ++i)
    {
      Triangle tri{get_u32(in), get_u32(in), get_u32(in)};
      mesh.triangles.push_back(tri);
      mesh.patch_ids.push_back(get_u32(in));
    }
  }
  else if (encoding == " text" || encoding.empty())
  {
    std::size_t nv = 0;
    std::size_t nt = 0;
    if (!(in >> nv >> nt))
    {
      throw MeshError("palpmesh: missing vertex/triangle counts");
    }
    mesh.vertices.reserve(nv);
    for (std::size_t i = 0; i < nv; ++i)
    {
      double x = 0.0;
      double y = 0.0;
      double z = 0.0;
      if (!(in >> x >> y >> z))
      {
        throw MeshError("palpmesh: truncated vertex record " + std::to_string(i));
      }
      mesh.vertices.emplace_back(x, y, z);
    }
    for (std::size_t i = 0; i < nt; ++i)
    {
      std::uint32_t a = 0;
      std::uint32_t b = 0;
      std::uint32_t c = 0;
      std::uint32_t patch = 0;
      if (!(in >> a >> b >> c >> patch))
      {
        throw MeshError("palpmesh: truncated triangle record " + std::to_string(i));
      }
      mesh.triangles.push_back({a, b, c});
      mesh.patch_ids.push_back(patch);
    }
  }
  else
  {
    throw MeshError("palpmesh: unknown encoding '" + encoding + "'");
  }
  finish(mesh);
  return mesh;
}

void write_palpmesh(const SurfaceMesh& mesh, const std::filesystem::path& path,
                    MeshEncoding encoding)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
  {
    throw MeshError("cannot write mesh file '" + path.string() + "'");
  }
  if (encoding == MeshEncoding::Binary)
  {
    out << kMagic << " binary\n";
    put_u32(out, static_cast<std::uint32_t>(mesh.vertices.size()));
    put_u32(out, static_cast<std::uint32_t>(mesh.triangles.size()));
    for (const auto& v : mesh.vertices)
    {
      put_f64(out, v.x());
      put_f64(out, v.y());
      put_f64(out, v.z());
    }
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    {
      for (const auto idx : mesh.triangles[t])
      {
        put_u32(out, idx);
      }
      put_u32(out, mesh.patch_ids[t]);
    }
  }
  else
  {
    out << kMagic << " text\n" << mesh.vertices.size() << ' ' << mesh.triangles.size() << '\n';
    out.precision(17);
    for (const auto& v : mesh.vertices)
    {
      out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    }
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    {
      const auto& tri = mesh.triangles[t];
      out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << mesh.patch_ids[t] << '\n';
    }
  }
  if (!out)
  {
    throw MeshError("failed writing mesh file '" + path.string() + "'");
  }
}

}  // namespace palpatron
