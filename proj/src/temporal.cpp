#include "rfc/temporal.hpp"

#include <cmath>
#include <sstream>

#include "rfc/errors.hpp"
#include "rfc/io.hpp"
#include "rfc/random.hpp"

namespace rfc::temporal {

void Trajectory::validate() const {
  if (frames.empty()) throw Error(Errc::EmptyTrajectory, "trajectory has no frames");
  for (const auto& f : frames)
    if (!f.pose.is_valid(1e-6)) throw Error(Errc::InvalidArgument, "trajectory contains an invalid pose");
}

std::vector<double> path_lengths(const Trajectory& traj) {
  std::vector<double> out;
  double acc = 0.0;
  for (std::size_t i = 0; i < traj.frames.size(); ++i) {
    if (i > 0) acc += (traj.frames[i].pose.translation() - traj.frames[i - 1].pose.translation()).norm();
    out.push_back(acc);
  }
  return out;
}

std::size_t included_frames(const Trajectory& traj, std::size_t max_frames, double max_path_length) {
  traj.validate();
  if (max_frames < 1) throw Error(Errc::InvalidArgument, "max_frames must be >= 1");
  const auto lengths = path_lengths(traj);
  std::size_t n = 1;
  while (n < traj.frames.size() && n < max_frames && lengths[n] <= max_path_length) ++n;
  return n;
}

PointCloud accumulate(const Trajectory& traj, std::size_t max_frames, double max_path_length) {
  const std::size_t n = included_frames(traj, max_frames, max_path_length);
  const Pose ref_inv = traj.frames.front().pose.inverse();
  PointCloud out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = traj.frames[i];
    out.append(transform_cloud(f.cloud, ref_inv * f.pose));
  }
  return out;
}

Trajectory add_pose_noise(const Trajectory& traj, double trans_rms, double rot_rms, std::uint64_t seed) {
  if (trans_rms < 0.0 || rot_rms < 0.0) throw Error(Errc::InvalidArgument, "noise rms must be >= 0");
  Trajectory out = traj;
  if (trans_rms == 0.0 && rot_rms == 0.0) return out;
  for (std::size_t i = 1; i < out.frames.size(); ++i) {
    Rng rng(derive_seed(seed, {i}));
    auto& pose = out.frames[i].pose;
    Point3 dt, dr;
    for (int c = 0; c < 3; ++c) dt[c] = gaussian(rng, trans_rms);
    for (int c = 0; c < 3; ++c) dr[c] = gaussian(rng, rot_rms);
    const auto q = rot_rms > 0.0 ? (Pose::from_axis_angle(dr).rotation() * pose.rotation()).normalized() : pose.rotation();
    pose = Pose(pose.translation() + dt, q);
  }
  return out;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  std::istringstream in(text);
  std::string line;
  Trajectory traj;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    std::istringstream ls(line);
    double t, x, y, z, qw, qx, qy, qz;
    std::string file;
    if (!(ls >> t >> x >> y >> z >> qw >> qx >> qy >> qz))
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) + ": expected `t x y z qw qx qy qz [cloudfile]`");
    ls >> file;
    Frame f;
    f.timestamp = t;
    try {
      f.pose = Pose({x, y, z}, Eigen::Quaterniond(qw, qx, qy, qz));
    } catch (const Error& e) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!file.empty()) {
      std::filesystem::path cloud_path(file);
      if (cloud_path.is_relative()) cloud_path = path.parent_path() / cloud_path;
      f.cloud = io::load_cloud(cloud_path);
    }
    traj.frames.push_back(std::move(f));
  }
  traj.validate();
  return traj;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj, const std::vector<std::string>& cloud_files) {
  if (cloud_files.size() != traj.frames.size()) throw Error(Errc::SizeMismatch, "one cloud file per frame required");
  std::ostringstream out;
  out.precision(12);
  for (std::size_t i = 0; i < traj.frames.size(); ++i) {
    const auto& f = traj.frames[i];
    const auto& t = f.pose.translation();
    const auto& q = f.pose.rotation();
    out << f.timestamp << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' ' << q.w() << ' ' << q.x() << ' '
        << q.y() << ' ' << q.z() << ' ' << cloud_files[i] << '\n';
  }
  io::write_file_atomic(path, out.str());
}

std::vector<Pose> straight_line(const Pose& start, const Point3& direction, double spacing, std::size_t count) {
  const double n = direction.norm();
  if (n == 0.0) throw Error(Errc::InvalidArgument, "zero direction");
  std::vector<Pose> out;
  for (std::size_t i = 0; i < count; ++i)
    out.emplace_back(start.translation() + direction / n * spacing * static_cast<double>(i), start.rotation());
  return out;
}

}  // namespace rfc::temporal
