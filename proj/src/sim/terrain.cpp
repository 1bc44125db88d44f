#include "emrs/sim/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace emrs::sim {

void SoilParams::validate() const {
  if (!(cohesion_kpa >= 0)) throw std::invalid_argument("soil cohesion must be non-negative");
  if (!(friction_angle_deg > 0 && friction_angle_deg <= 45)) {
    throw std::invalid_argument("soil friction angle must lie in (0, 45] deg");
  }
  if (!(slip_knee > 0 && slip_knee < 1)) throw std::invalid_argument("slip knee must lie in (0, 1)");
  if (!(density_kg_m3 > 0)) throw std::invalid_argument("soil density must be positive");
  if (granulometry_min_mm > granulometry_max_mm) throw std::invalid_argument("granulometry range is inverted");
}

Heightmap Heightmap::flat(double size_x_m, double size_y_m, double cell_size_m) {
  const auto nx = static_cast<Eigen::Index>(std::ceil(size_x_m / cell_size_m - 1e-9)) + 1;
  const auto ny = static_cast<Eigen::Index>(std::ceil(size_y_m / cell_size_m - 1e-9)) + 1;
  Heightmap map;
  map.cell_size_m = cell_size_m;
  map.heights_m = Eigen::MatrixXd::Zero(nx, ny);
  return map;
}

std::pair<double, Eigen::Vector2d> Heightmap::sample(double x, double y) const {
  const double gx = x / cell_size_m;
  const double gy = y / cell_size_m;
  const auto max_i = heights_m.rows() - 2;
  const auto max_j = heights_m.cols() - 2;
  const auto i = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(gx)), 0, max_i);
  const auto j = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(gy)), 0, max_j);
  const double u = gx - static_cast<double>(i);
  const double v = gy - static_cast<double>(j);
  const double h00 = heights_m(i, j);
  const double h10 = heights_m(i + 1, j);
  const double h01 = heights_m(i, j + 1);
  const double h11 = heights_m(i + 1, j + 1);
  const double h = h00 * (1 - u) * (1 - v) + h10 * u * (1 - v) + h01 * (1 - u) * v + h11 * u * v;
  const double dhdu = (h10 - h00) * (1 - v) + (h11 - h01) * v;
  const double dhdv = (h01 - h00) * (1 - u) + (h11 - h10) * u;
  return {h, Eigen::Vector2d(dhdu / cell_size_m, dhdv / cell_size_m)};
}

double TiltBed::height(double x) const {
  const double u = x - hinge_x_m;
  const double half = blend_width_m / 2;
  const double t = std::tan(angle_rad);
  if (u <= -half) return 0.0;
  if (u >= half) return t * u;
  return t * (u + half) * (u + half) / (2 * blend_width_m);
}

double TiltBed::slope(double x) const {
  const double u = x - hinge_x_m;
  const double half = blend_width_m / 2;
  const double t = std::tan(angle_rad);
  if (u <= -half) return 0.0;
  if (u >= half) return t;
  return t * (u + half) / blend_width_m;
}

bool Obstacle::contains(const Eigen::Vector2d& p) const {
  bool inside = false;
  const std::size_t n = footprint.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = footprint[i];
    const auto& b = footprint[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      inside = !inside;
    }
  }
  return inside;
}

void TerrainModel::validate() const {
  soil.validate();
  if (heightmap.heights_m.rows() < 2 || heightmap.heights_m.cols() < 2 || !(heightmap.cell_size_m > 0)) {
    throw TerrainError(TerrainError::Kind::InvalidTerrain, "heightmap needs at least 2x2 nodes and a positive cell");
  }
  if (!heightmap.heights_m.allFinite()) {
    throw TerrainError(TerrainError::Kind::InvalidTerrain, "heightmap contains non-finite heights");
  }
  if (tilt_bed) {
    if (!(tilt_bed->angle_rad >= 0) || tilt_bed->angle_rad > kMaxTiltDeg * std::numbers::pi / 180.0 + 1e-12) {
      throw TerrainError(TerrainError::Kind::InvalidTerrain, "tilt bed angle must lie in [0, 30] deg");
    }
    if (!(tilt_bed->blend_width_m > 0)) {
      throw TerrainError(TerrainError::Kind::InvalidTerrain, "tilt bed blend width must be positive");
    }
  }
  for (const auto& o : obstacles) {
    if (o.footprint.size() < 3 || !(o.height_m >= 0)) {
      throw TerrainError(TerrainError::Kind::InvalidTerrain, "obstacle needs a polygon and a non-negative height");
    }
  }
}

void TerrainModel::set_tilt(double angle_rad) {
  if (!tilt_bed) throw TerrainError(TerrainError::Kind::InvalidTerrain, "terrain '" + name + "' has no tilt bed");
  if (!(angle_rad >= 0) || angle_rad > kMaxTiltDeg * std::numbers::pi / 180.0 + 1e-12) {
    throw TerrainError(TerrainError::Kind::InvalidTerrain, "tilt bed angle must lie in [0, 30] deg");
  }
  tilt_bed->angle_rad = angle_rad;
}

bool TerrainModel::inside(double x, double y) const {
  return x >= 0 && y >= 0 && x <= heightmap.size_x_m() && y <= heightmap.size_y_m();
}

TerrainSample TerrainModel::query(double x, double y) const {
  if (!inside(x, y)) {
    throw TerrainError(TerrainError::Kind::OutOfBounds,
                       "point (" + std::to_string(x) + ", " + std::to_string(y) + ") outside terrain '" + name + "'");
  }
  auto [h, grad] = heightmap.sample(x, y);
  if (tilt_bed) {
    h += tilt_bed->height(x);
    grad.x() += tilt_bed->slope(x);
  }
  return {h, Eigen::Vector3d(-grad.x(), -grad.y(), 1.0).normalized(), &soil};
}

double TerrainModel::obstacle_height(const Eigen::Vector2d& p) const {
  double h = 0;
  for (const auto& o : obstacles) {
    if (o.height_m > h && o.contains(p)) h = o.height_m;
  }
  return h;
}

}  // namespace emrs::sim
