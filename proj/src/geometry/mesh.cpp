#include "dcpose/geometry/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dcpose/errors.hpp"
#include "dcpose/random.hpp"

namespace dcpose {

double SurfaceModel::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

Eigen::Vector3d SurfaceModel::triangle_normal(std::size_t t) const {
  const auto& tri = triangles[t];
  const Eigen::Vector3d n = (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]);
  const double len = n.norm();
  return len > 0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::Zero();
}

void SurfaceModel::validate() const {
  if (vertices.empty() || triangles.empty()) throw InvalidArgument("SurfaceModel: empty mesh");
  const int n = static_cast<int>(vertices.size());
  for (const auto& t : triangles) {
    for (int i : t) {
      if (i < 0 || i >= n) throw InvalidArgument("SurfaceModel: triangle index out of range");
    }
  }
  if (!(diameter > 0)) throw InvalidArgument("SurfaceModel: diameter must be positive");
  if (normalized_vertices.size() != vertices.size()) {
    throw InvalidArgument("SurfaceModel: normalized vertex count mismatch");
  }
  for (const auto& v : normalized_vertices) {
    if (v.norm() > 0.5 + 1e-9) throw InvalidArgument("SurfaceModel: normalized vertex outside radius 0.5");
  }
}

SurfaceModel make_surface_model(std::vector<Eigen::Vector3d> vertices, std::vector<Triangle> triangles,
                                std::map<std::string, Eigen::Vector3d> keypoints) {
  SurfaceModel m;
  m.vertices = std::move(vertices);
  m.triangles = std::move(triangles);
  m.keypoints = std::move(keypoints);
  if (m.vertices.empty()) throw InvalidArgument("make_surface_model: no vertices");

  double d2 = 0;
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    for (std::size_t j = i + 1; j < m.vertices.size(); ++j) {
      d2 = std::max(d2, (m.vertices[i] - m.vertices[j]).squaredNorm());
    }
  }
  m.diameter = std::sqrt(d2);

  Eigen::Vector3d lo = m.vertices.front(), hi = m.vertices.front();
  for (const auto& v : m.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  m.center = 0.5 * (lo + hi);
  double radius = 0;
  for (const auto& v : m.vertices) radius = std::max(radius, (v - m.center).norm());
  if (!(radius > 0)) throw InvalidArgument("make_surface_model: degenerate (single point) mesh");
  // Largest normalized norm is exactly 0.5 up to rounding; shave one ulp-scale margin.
  m.scale = 0.5 / radius * (1.0 - 1e-12);
  m.normalized_vertices.reserve(m.vertices.size());
  for (const auto& v : m.vertices) m.normalized_vertices.push_back(m.normalize(v));
  m.validate();
  return m;
}

SurfaceModel merge_models(const std::vector<SurfaceModel>& parts) {
  std::vector<Eigen::Vector3d> verts;
  std::vector<Triangle> tris;
  std::map<std::string, Eigen::Vector3d> kps;
  for (const auto& p : parts) {
    const int offset = static_cast<int>(verts.size());
    verts.insert(verts.end(), p.vertices.begin(), p.vertices.end());
    for (const auto& t : p.triangles) tris.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
    kps.insert(p.keypoints.begin(), p.keypoints.end());
  }
  return make_surface_model(std::move(verts), std::move(tris), std::move(kps));
}

SurfaceModel load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_obj: cannot open " + path.string());
  std::vector<Eigen::Vector3d> verts;
  std::vector<Triangle> tris;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Eigen::Vector3d v;
      if (!(ss >> v.x() >> v.y() >> v.z())) throw DataError("load_obj: malformed vertex: " + line);
      verts.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        // v, v/vt, v//vn, v/vt/vn
        int i = std::stoi(tok.substr(0, tok.find('/')));
        idx.push_back(i < 0 ? static_cast<int>(verts.size()) + i : i - 1);
      }
      if (idx.size() < 3) throw DataError("load_obj: face with fewer than 3 vertices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) tris.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  return make_surface_model(std::move(verts), std::move(tris));
}

void save_ply(const SurfaceModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("save_ply: cannot write " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << model.vertices.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nelement face " << model.triangles.size()
      << "\nproperty list uchar int vertex_indices\nend_header\n";
  out.precision(17);
  for (const auto& v : model.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : model.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

SurfaceModel load_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_ply: cannot open " + path.string());
  std::string line;
  std::size_t nv = 0, nf = 0;
  bool header_done = false;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string a, b;
    ss >> a;
    if (a == "element") {
      std::size_t n;
      ss >> b >> n;
      (b == "vertex" ? nv : nf) = n;
    } else if (a == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw DataError("load_ply: missing end_header in " + path.string());
  std::vector<Eigen::Vector3d> verts(nv);
  for (auto& v : verts) {
    if (!(in >> v.x() >> v.y() >> v.z())) throw DataError("load_ply: truncated vertex list");
  }
  std::vector<Triangle> tris(nf);
  for (auto& t : tris) {
    int k;
    if (!(in >> k >> t[0] >> t[1] >> t[2]) || k != 3) throw DataError("load_ply: only triangle faces supported");
  }
  return make_surface_model(std::move(verts), std::move(tris));
}

SurfaceSampler::SurfaceSampler(const SurfaceModel& model) : model_(&model) {
  if (model.triangles.empty()) throw InvalidArgument("SurfaceSampler: empty mesh");
  cumulative_area_.reserve(model.triangles.size());
  double acc = 0;
  for (std::size_t t = 0; t < model.triangles.size(); ++t) {
    acc += model.triangle_area(t);
    cumulative_area_.push_back(acc);
  }
  if (!(acc > 0)) throw InvalidArgument("SurfaceSampler: zero surface area");
}

SurfaceSample SurfaceSampler::sample(std::mt19937_64& rng) const {
  const double r = uniform01(rng) * cumulative_area_.back();
  auto it = std::upper_bound(cumulative_area_.begin(), cumulative_area_.end(), r);
  if (it == cumulative_area_.end()) --it;
  SurfaceSample s;
  s.triangle = static_cast<int>(it - cumulative_area_.begin());
  const double r1 = std::sqrt(uniform01(rng));
  const double r2 = uniform01(rng);
  s.barycentric = {1.0 - r1, r1 * (1.0 - r2), r1 * r2};
  return s;
}

Eigen::Vector3d SurfaceSampler::point(const SurfaceSample& s) const {
  const auto& t = model_->triangles[s.triangle];
  return s.barycentric[0] * model_->vertices[t[0]] + s.barycentric[1] * model_->vertices[t[1]] +
         s.barycentric[2] * model_->vertices[t[2]];
}

Eigen::Vector3d SurfaceSampler::normalized_point(const SurfaceSample& s) const {
  const auto& t = model_->triangles[s.triangle];
  return s.barycentric[0] * model_->normalized_vertices[t[0]] +
         s.barycentric[1] * model_->normalized_vertices[t[1]] +
         s.barycentric[2] * model_->normalized_vertices[t[2]];
}

}  // namespace dcpose
