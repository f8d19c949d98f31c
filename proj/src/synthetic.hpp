// SPDX-License-Identifier: Apache-2.0
//
// Procedural training pairs: a capped base solid and a smoothly deformed copy
// with identical topology, so the correspondence is the identity.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diff.hpp"
#include "mesh.hpp"

namespace bg::synthetic {

enum class BaseShape { Cylinder, Sphere, Bar };

std::string to_string(BaseShape base);
BaseShape base_shape_from_string(const std::string& text);

/// Applied in the order bump, twist, bend. The base solid spans z in [-1, 1].
struct Deformation {
  double bend_angle = 0.0;      // total turning of the axis, radians, |.| <= pi
  double twist_rate = 0.0;      // radians per unit height, |.| <= 2 pi
  double bump_amplitude = 0.0;  // radial offset at the bump center
  double bump_width = 0.25;     // Gaussian standard deviation
  int bump_vertex = -1;         // center vertex; -1 draws one from the rng

  void validate() const;
};

inline constexpr double kAxisLength = 2.0;

/// Capped sweep along z in [-1, 1]. `resolution` is the number of samples
/// around the axis; the ring count scales with it.
mesh::TriangleMesh make_base_mesh(BaseShape base, int resolution);

/// Circular-arc map of the z axis with curvature angle / kAxisLength. The
/// point at height z lands at (R - (R - x) cos(phi), y, (R - x) sin(phi)),
/// phi = z angle / kAxisLength, R = 1 / curvature.
Vec3 bend_point(const Vec3& p, double angle);
/// Rotation about z by rate * z.
Vec3 twist_point(const Vec3& p, double rate);

/// Deforms the raw base mesh; no normalization.
mesh::TriangleMesh deform(const mesh::TriangleMesh& base, const Deformation& deformation);

struct ShapePairSample {
  std::string name;
  mesh::TriangleMesh mesh_a;
  mesh::TriangleMesh mesh_b;
  std::vector<int> correspondence;  // A vertex -> B vertex
  Deformation deformation;
};

/// Both meshes are normalized to the unit ball independently.
ShapePairSample generate_synthetic_pair(BaseShape base, int resolution,
                                        Deformation deformation, diff::Rng& rng);

struct DatasetSpec {
  BaseShape base = BaseShape::Cylinder;
  int resolution = 24;
  int count = 10;
  double bend_min = 0.0;  // bend angles drawn uniformly from [bend_min, bend_max]
  double bend_max = 1.0471975511965976;
  double twist_max = 0.0;  // twist drawn from [-twist_max, twist_max]
  double bump_max = 0.0;   // bump amplitude drawn from [0, bump_max]
  std::uint64_t seed = 1;
  std::string prefix = "pair";
};

/// Samples named <prefix>_0000, <prefix>_0001, ...
std::vector<ShapePairSample> generate_dataset(const DatasetSpec& spec);

}  // namespace bg::synthetic
