#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "rfc/geometry.hpp"

namespace rfc::temporal {

struct Frame {
  double timestamp = 0.0;
  Pose pose;
  PointCloud cloud;
};

struct Trajectory {
  std::vector<Frame> frames;
  double frame_rate = 60.0;

  void validate() const;
};

/// Expresses every included frame's cloud in the first frame's coordinates
/// and concatenates them. Frames past `max_frames`, or past `max_path_length`
/// meters of cumulative translation, are left out; the first frame is always
/// included.
PointCloud accumulate(const Trajectory& traj, std::size_t max_frames = std::numeric_limits<std::size_t>::max(),
                      double max_path_length = std::numeric_limits<double>::infinity());

/// Number of leading frames that `accumulate` would use.
std::size_t included_frames(const Trajectory& traj, std::size_t max_frames, double max_path_length);

/// Cumulative translation arc length after each frame (first entry 0).
std::vector<double> path_lengths(const Trajectory& traj);

/// Perturbs reported poses with i.i.d. Gaussian noise: translation per axis
/// with `trans_rms`, rotation as an axis-angle vector with per-component
/// `rot_rms`. The first frame is kept exact so the reference stays put.
Trajectory add_pose_noise(const Trajectory& traj, double trans_rms, double rot_rms, std::uint64_t seed);

/// Text format, one frame per line: `t x y z qw qx qy qz [cloudfile]`.
/// Relative cloud paths resolve against the trajectory file's directory; a
/// line without one gives a frame with an empty cloud.
Trajectory load_trajectory(const std::filesystem::path& path);
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj, const std::vector<std::string>& cloud_files);

/// Straight-line poses from `start` along `direction` with `spacing` meters between frames.
std::vector<Pose> straight_line(const Pose& start, const Point3& direction, double spacing, std::size_t count);

}  // namespace rfc::temporal
