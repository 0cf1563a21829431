#pragma once

#include "quadrics/cli/config.hpp"

#include <ostream>
#include <vector>

namespace quadrics::cli {

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;  // zero-based
};

/// Tessellates a plane, sphere, cylinder or cone over the padded bounding box
/// of its inliers and keeps the faces whose vertices all lie in that box.
/// Other types yield an empty mesh.
Mesh tessellate(const Quadric& q, const QuadricType& type, const Points& inliers,
                const StructureMapConfig& config = {});

/// One OBJ object per mesh, named segment_<k>.
void write_obj(std::ostream& out, const std::vector<Mesh>& meshes);

}  // namespace quadrics::cli
