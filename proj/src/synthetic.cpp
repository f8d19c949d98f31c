// SPDX-License-Identifier: Apache-2.0
#include "synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "error.hpp"

namespace bg::synthetic {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMinVertices = 500;

// Cross-section point for sample j of `around` at normalized height t in [0, 1].
Vec3 section_point(BaseShape base, int j, int around, double t) {
  const double angle = 2.0 * kPi * j / around;
  switch (base) {
    case BaseShape::Cylinder:
      return {0.4 * std::cos(angle), 0.4 * std::sin(angle), -1.0 + 2.0 * t};
    case BaseShape::Sphere: {
      const double polar = kPi * t;
      return {std::sin(polar) * std::cos(angle), std::sin(polar) * std::sin(angle),
              -std::cos(polar)};
    }
    case BaseShape::Bar: {
      // Walk the perimeter of a square of half-width 0.3.
      const double s = 4.0 * j / around;
      const int side = static_cast<int>(s);
      const double u = -0.3 + 0.6 * (s - side);
      double x = 0, y = 0;
      switch (side) {
        case 0: x = 0.3; y = u; break;
        case 1: x = -u; y = 0.3; break;
        case 2: x = -0.3; y = -u; break;
        default: x = u; y = -0.3; break;
      }
      return {x, y, -1.0 + 2.0 * t};
    }
  }
  return {};
}

}  // namespace

std::string to_string(BaseShape base) {
  switch (base) {
    case BaseShape::Cylinder: return "cylinder";
    case BaseShape::Sphere: return "sphere";
    case BaseShape::Bar: return "bar";
  }
  return "cylinder";
}

BaseShape base_shape_from_string(const std::string& text) {
  if (text == "cylinder") return BaseShape::Cylinder;
  if (text == "sphere") return BaseShape::Sphere;
  if (text == "bar") return BaseShape::Bar;
  fail(ErrorCode::InvalidArgument, "unknown base shape '" + text + "'");
}

void Deformation::validate() const {
  if (!std::isfinite(bend_angle) || std::abs(bend_angle) > kPi) {
    fail(ErrorCode::InvalidArgument, "bend angle must lie in [-pi, pi] to avoid self-intersection");
  }
  if (!std::isfinite(twist_rate) || std::abs(twist_rate) > 2.0 * kPi) {
    fail(ErrorCode::InvalidArgument,
         "twist rate must lie in [-2 pi, 2 pi] per unit height to avoid self-intersection");
  }
  if (!std::isfinite(bump_amplitude) || !(bump_width > 0.0)) {
    fail(ErrorCode::InvalidArgument, "bump needs a finite amplitude and a positive width");
  }
}

mesh::TriangleMesh make_base_mesh(BaseShape base, int resolution) {
  if (resolution < 4) fail(ErrorCode::InvalidArgument, "resolution must be at least 4");
  const int around = base == BaseShape::Bar ? 4 * ((resolution + 3) / 4) : resolution;
  // Sphere rings exclude the poles, which become the cap vertices.
  const int rings = base == BaseShape::Sphere ? resolution - 1 : resolution + 1;
  const long long total = static_cast<long long>(around) * rings + 2;
  if (total < kMinVertices) {
    fail(ErrorCode::InvalidArgument, "resolution " + std::to_string(resolution) + " yields " +
                                         std::to_string(total) + " vertices; at least " +
                                         std::to_string(kMinVertices) + " are required");
  }
  mesh::TriangleMesh out;
  for (int r = 0; r < rings; ++r) {
    const double t = base == BaseShape::Sphere ? static_cast<double>(r + 1) / (rings + 1)
                                               : static_cast<double>(r) / (rings - 1);
    for (int j = 0; j < around; ++j) out.vertices.push_back(section_point(base, j, around, t));
  }
  const int bottom = static_cast<int>(out.vertices.size());
  out.vertices.push_back({0.0, 0.0, -1.0});
  out.vertices.push_back({0.0, 0.0, 1.0});
  const int top = bottom + 1;

  auto at = [around](int r, int j) { return r * around + (j % around); };
  for (int r = 0; r + 1 < rings; ++r) {
    for (int j = 0; j < around; ++j) {
      out.faces.push_back({at(r, j), at(r, j + 1), at(r + 1, j + 1)});
      out.faces.push_back({at(r, j), at(r + 1, j + 1), at(r + 1, j)});
    }
  }
  for (int j = 0; j < around; ++j) {
    out.faces.push_back({bottom, at(0, j + 1), at(0, j)});
    out.faces.push_back({top, at(rings - 1, j), at(rings - 1, j + 1)});
  }
  return out;
}

Vec3 bend_point(const Vec3& p, double angle) {
  if (angle == 0.0) return p;
  const double curvature = angle / kAxisLength;
  const double radius = 1.0 / curvature;
  const double phi = curvature * p.z();
  return {radius - (radius - p.x()) * std::cos(phi), p.y(), (radius - p.x()) * std::sin(phi)};
}

Vec3 twist_point(const Vec3& p, double rate) {
  const double a = rate * p.z();
  const double c = std::cos(a), s = std::sin(a);
  return {c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z()};
}

mesh::TriangleMesh deform(const mesh::TriangleMesh& base, const Deformation& d) {
  d.validate();
  mesh::TriangleMesh out = base;
  if (d.bump_amplitude != 0.0) {
    if (d.bump_vertex < 0 || static_cast<std::size_t>(d.bump_vertex) >= base.vertices.size()) {
      fail(ErrorCode::InvalidArgument, "bump center vertex out of range");
    }
    const Vec3 center = base.vertices[d.bump_vertex];
    for (auto& v : out.vertices) {
      const Eigen::Vector2d radial(v.x(), v.y());
      const double len = radial.norm();
      if (len == 0.0) continue;
      const double g = d.bump_amplitude *
                       std::exp(-(v - center).squaredNorm() / (2.0 * d.bump_width * d.bump_width));
      v.x() += g * radial.x() / len;
      v.y() += g * radial.y() / len;
    }
  }
  for (auto& v : out.vertices) v = bend_point(twist_point(v, d.twist_rate), d.bend_angle);
  return out;
}

ShapePairSample generate_synthetic_pair(BaseShape base, int resolution, Deformation deformation,
                                        diff::Rng& rng) {
  deformation.validate();
  const mesh::TriangleMesh raw = make_base_mesh(base, resolution);
  if (deformation.bump_amplitude != 0.0 && deformation.bump_vertex < 0) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(raw.vertices.size()) - 3);
    deformation.bump_vertex = pick(rng);
  }
  ShapePairSample sample;
  sample.deformation = deformation;
  sample.mesh_a = mesh::normalize_to_unit_ball(raw);
  sample.mesh_b = mesh::normalize_to_unit_ball(deform(raw, deformation));
  sample.correspondence.resize(raw.vertices.size());
  for (std::size_t v = 0; v < raw.vertices.size(); ++v) sample.correspondence[v] = static_cast<int>(v);
  return sample;
}

std::vector<ShapePairSample> generate_dataset(const DatasetSpec& spec) {
  if (spec.count < 1) fail(ErrorCode::InvalidArgument, "dataset needs at least one pair");
  if (spec.bend_max < spec.bend_min || spec.twist_max < 0.0 || spec.bump_max < 0.0) {
    fail(ErrorCode::InvalidArgument, "dataset parameter ranges are empty or negative");
  }
  diff::Rng rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ShapePairSample> out;
  for (int k = 0; k < spec.count; ++k) {
    Deformation d;
    d.bend_angle = spec.bend_min + (spec.bend_max - spec.bend_min) * unit(rng);
    d.twist_rate = spec.twist_max * (2.0 * unit(rng) - 1.0);
    d.bump_amplitude = spec.bump_max * unit(rng);
    auto sample = generate_synthetic_pair(spec.base, spec.resolution, d, rng);
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%04d", spec.prefix.c_str(), k);
    sample.name = name;
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace bg::synthetic
