#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace emrs::sim {

inline constexpr double kMaxTiltDeg = 30.0;

/// Soil strength parameters used by the traction law.
struct SoilParams {
  double cohesion_kpa{10.0};
  double friction_angle_deg{28.0};
  double density_kg_m3{1300.0};
  double granulometry_min_mm{0.01};
  double granulometry_max_mm{5.0};
  /// Thrust ratio at which slip starts.
  double slip_knee{0.5};

  void validate() const;
};

class TerrainError : public std::runtime_error {
 public:
  enum class Kind { OutOfBounds, InvalidTerrain };
  TerrainError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Uniform grid of elevations; node (i, j) sits at (i * cell, j * cell).
struct Heightmap {
  double cell_size_m{1.0};
  Eigen::MatrixXd heights_m;  // rows along x, cols along y

  static Heightmap flat(double size_x_m, double size_y_m, double cell_size_m);

  double size_x_m() const { return cell_size_m * static_cast<double>(heights_m.rows() - 1); }
  double size_y_m() const { return cell_size_m * static_cast<double>(heights_m.cols() - 1); }

  /// Bilinear height and its gradient (dh/dx, dh/dy).
  std::pair<double, Eigen::Vector2d> sample(double x, double y) const;
};

/// Section of the bed that rotates about a hinge line x = hinge_x_m.
/// Ground beyond the hinge rises with the tilt; the hinge is rounded over
/// `blend_width_m` so height and normal stay continuous.
struct TiltBed {
  double hinge_x_m{6.5};
  double angle_rad{0};
  double blend_width_m{0.1};

  double height(double x) const;
  double slope(double x) const;
};

struct Obstacle {
  std::vector<Eigen::Vector2d> footprint;  // polygon, world frame
  double height_m{0};

  bool contains(const Eigen::Vector2d& p) const;
};

struct TerrainSample {
  double height_m;
  Eigen::Vector3d normal;
  const SoilParams* soil;
};

struct TerrainModel {
  std::string name;
  Heightmap heightmap;
  std::optional<TiltBed> tilt_bed;
  SoilParams soil;
  std::vector<Obstacle> obstacles;

  void validate() const;
  void set_tilt(double angle_rad);

  bool inside(double x, double y) const;
  TerrainSample query(double x, double y) const;
  /// Height of the tallest obstacle covering the point, zero if none.
  double obstacle_height(const Eigen::Vector2d& p) const;
};

inline TerrainSample terrain_query(const TerrainModel& terrain, double x, double y) { return terrain.query(x, y); }

}  // namespace emrs::sim
