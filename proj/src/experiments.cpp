#include "rfc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rfc/dataset.hpp"
#include "rfc/errors.hpp"
#include "rfc/mesh.hpp"
#include "rfc/metrics.hpp"
#include "rfc/random.hpp"
#include "rfc/temporal.hpp"

namespace rfc::experiments {

double cloud_spread(const PointCloud& pc) {
  if (pc.empty()) throw Error(Errc::EmptyCloud, "spread of an empty cloud");
  const Point3 c = centroid(pc);
  double s = 0.0;
  for (const auto& p : pc.points) s += (p - c).squaredNorm();
  return std::sqrt(s / static_cast<double>(pc.size()));
}

FramesAblationConfig FramesAblationConfig::from_config(const Config& c) {
  FramesAblationConfig f;
  f.rig = dataset::rig_from_config(c);
  f.cfar = dataset::cfar_from_config(c);
  f.fusion = dataset::fusion_from_config(c);
  f.frame_counts = c.get_sizes("experiment.frame_counts", f.frame_counts);
  f.n_frames = c.get_u64("experiment.n_frames", f.n_frames);
  f.path_length = c.get_double("experiment.path_length", f.path_length);
  f.standoff = c.get_double("experiment.standoff", f.standoff);
  f.n_scatterers = c.get_u64("experiment.n_scatterers", f.n_scatterers);
  f.n_reference = c.get_u64("experiment.n_reference", f.n_reference);
  f.n_scenes = c.get_u64("experiment.n_scenes", f.n_scenes);
  f.seed = c.get_u64("seed", f.seed);
  return f;
}

std::string FramesAblationResult::to_csv() const {
  std::ostringstream o;
  o.precision(10);
  o << "frames,path_length_m,points,chamfer_l1_m,chamfer_sq_m2\n";
  for (const auto& r : rows)
    o << r.frames << ',' << r.path_length << ',' << r.points << ',' << r.chamfer_l1 << ',' << r.chamfer_sq << '\n';
  return o.str();
}

double FramesAblationResult::metric_at(std::size_t frames) const {
  for (const auto& r : rows)
    if (r.frames == frames) return r.chamfer_l1;
  throw Error(Errc::InvalidArgument, "no row for " + std::to_string(frames) + " frames");
}

FramesAblationResult frames_ablation(const FramesAblationConfig& cfg) {
  if (cfg.frame_counts.empty() || cfg.n_frames == 0 || cfg.n_scenes == 0)
    throw Error(Errc::InvalidArgument, "frames ablation needs frame counts, frames and scenes");
  FramesAblationResult res;
  res.rows.resize(cfg.frame_counts.size());
  for (std::size_t k = 0; k < cfg.frame_counts.size(); ++k) res.rows[k].frames = cfg.frame_counts[k];

  const double h = cfg.fusion.mount_height;
  const double spacing = cfg.n_frames > 1 ? cfg.path_length / static_cast<double>(cfg.n_frames - 1) : 0.0;
  const auto poses = temporal::straight_line(Pose::from_translation(Point3(0.0, -0.5 * cfg.path_length, h)),
                                             Point3::UnitY(), spacing, cfg.n_frames);
  temporal::Trajectory shape;
  for (const auto& p : poses) shape.frames.push_back({0.0, p, {}});
  const auto lengths = temporal::path_lengths(shape);

  for (std::size_t s = 0; s < cfg.n_scenes; ++s) {
    const std::uint64_t seed = derive_seed(cfg.seed, {s});
    Rng rng(seed);
    // Car-sized box parked roughly parallel to the drive.
    const double yaw = uniform(rng, -0.3, 0.3);
    const Mesh object = transform_mesh(box_mesh(Point3::Zero(), Point3(0.9, 2.1, 0.7)),
                                       Pose::from_yaw(yaw, Point3(cfg.standoff + 0.9, 0.0, 0.75)));

    std::vector<radar::Scatterer> scene;
    for (const auto& smp : sample_surface_with_normals(object, cfg.n_scatterers, derive_seed(seed, {1})))
      scene.push_back({smp.position, 1.0, smp.normal});
    const PointCloud reference =
        transform_cloud(sample_surface_uniform(object, cfg.n_reference, derive_seed(seed, {2})), poses.front().inverse());

    temporal::Trajectory traj;
    for (std::size_t i = 0; i < poses.size(); ++i) {
      const auto frame = radar::simulate_frame(scene, cfg.rig, poses[i], static_cast<double>(i) / traj.frame_rate,
                                               derive_seed(seed, {3, i}));
      traj.frames.push_back({frame.timestamp, poses[i], fusion::fuse_frame(frame, cfg.cfar, cfg.fusion)});
    }
    for (std::size_t k = 0; k < cfg.frame_counts.size(); ++k) {
      const std::size_t n = std::min(cfg.frame_counts[k], cfg.n_frames);
      const PointCloud acc = temporal::accumulate(traj, n);
      auto& row = res.rows[k];
      row.path_length = lengths[n - 1];
      row.points += static_cast<double>(acc.size());
      if (acc.empty()) throw Error(Errc::EmptyCloud, "scene " + std::to_string(s) + " produced no points");
      row.chamfer_l1 += metrics::chamfer_l1(acc, reference);
      row.chamfer_sq += metrics::chamfer(acc, reference);
    }
  }
  for (auto& r : res.rows) {
    r.points /= static_cast<double>(cfg.n_scenes);
    r.chamfer_l1 /= static_cast<double>(cfg.n_scenes);
    r.chamfer_sq /= static_cast<double>(cfg.n_scenes);
  }
  return res;
}

SarVsFusionConfig SarVsFusionConfig::defaults() {
  SarVsFusionConfig c;
  c.sar_array = c.rig.horizontal;
  c.sar_array.fov_limit = radar::deg2rad(12.0);
  c.sar_array.n_angle_bins = 481;
  c.sar_array.n_range_bins = 128;
  return c;
}

SarVsFusionConfig SarVsFusionConfig::from_config(const Config& c) {
  SarVsFusionConfig s = defaults();
  s.rig = dataset::rig_from_config(c);
  s.cfar = dataset::cfar_from_config(c);
  s.fusion = dataset::fusion_from_config(c);
  s.sar_array = s.rig.horizontal;
  s.sar_array.fov_limit = radar::deg2rad(c.get_double("experiment.sar_fov_deg", 12.0));
  s.sar_array.n_angle_bins = c.get_u64("experiment.sar_angle_bins", 481);
  s.sar_array.n_range_bins = c.get_u64("experiment.sar_range_bins", 128);
  s.n_frames = c.get_u64("experiment.n_frames", s.n_frames);
  s.spacing = c.get_double("experiment.spacing", s.spacing);
  s.range = c.get_double("experiment.range", s.range);
  s.position_error_rms = c.get_double("experiment.position_error_rms", s.position_error_rms);
  s.n_seeds = c.get_u64("experiment.n_seeds", s.n_seeds);
  s.seed = c.get_u64("seed", s.seed);
  return s;
}

double SarRow::spread_change() const { return (spread_noisy - spread_clean) / spread_clean; }

std::string SarVsFusionResult::to_csv() const {
  std::ostringstream o;
  o.precision(10);
  o << "seed,single_width_rad,sar_width_rad,pslr_clean_db,pslr_noisy_db,pslr_degradation_db,spread_clean_m,"
       "spread_noisy_m,spread_change\n";
  for (const auto& r : rows)
    o << r.seed << ',' << r.single_width << ',' << r.sar_width << ',' << r.pslr_clean_db << ',' << r.pslr_noisy_db << ','
      << r.pslr_degradation_db() << ',' << r.spread_clean << ',' << r.spread_noisy << ',' << r.spread_change() << '\n';
  o << "mean," << mean_single_width << ',' << mean_sar_width << ",,," << mean_pslr_degradation_db << ",,,"
    << mean_abs_spread_change << '\n';
  return o.str();
}

namespace {

// Row with the most power at `angle_bin` among the range bins around `b`.
std::size_t target_row(const radar::Heatmap2D& hm, std::size_t b, std::size_t angle_bin) {
  std::size_t best = b;
  for (std::size_t r = b > 0 ? b - 1 : 0; r <= std::min(b + 1, hm.n_range_bins - 1); ++r)
    if (hm.power(r, angle_bin) > hm.power(best, angle_bin)) best = r;
  return best;
}

}  // namespace

SarVsFusionResult sar_vs_fusion(const SarVsFusionConfig& cfg) {
  if (cfg.n_frames < 2 || cfg.n_seeds == 0) throw Error(Errc::InvalidArgument, "sar_vs_fusion needs >= 2 frames and >= 1 seed");
  const auto& array = cfg.sar_array;
  const double aperture = cfg.spacing * static_cast<double>(cfg.n_frames - 1);
  const double bin_width = 2.0 * array.fov_limit / static_cast<double>(array.n_angle_bins - 1);
  const auto window = static_cast<std::size_t>(std::ceil(array.wavelength / (2.0 * aperture) / bin_width));
  const double h = cfg.fusion.mount_height;
  radar::RigConfig sar_rig = cfg.rig;
  sar_rig.horizontal = array;
  sar_rig.vertical = radar::VirtualArrayConfig::uniform(2, 0.5, radar::ArrayOrientation::Vertical);
  sar_rig.vertical.n_range_bins = array.n_range_bins;
  sar_rig.vertical.n_angle_bins = 3;

  SarVsFusionResult res;
  for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
    const std::uint64_t seed = derive_seed(cfg.seed, {s});
    Rng rng(seed);
    // Drive centred on the target; the target sits at the rig's height.
    const double range = cfg.range + uniform(rng, -0.1, 0.1);
    const double lateral = uniform(rng, -0.05, 0.05);
    const std::vector<radar::Scatterer> scene = {{Point3(range, lateral, h), 1.0, std::nullopt}};
    const auto poses = temporal::straight_line(Pose::from_translation(Point3(0.0, -0.5 * aperture, h)), Point3::UnitY(),
                                               cfg.spacing, cfg.n_frames);

    std::vector<radar::FrameCapture> frames;
    temporal::Trajectory traj;
    for (std::size_t i = 0; i < poses.size(); ++i) {
      frames.push_back(radar::simulate_frame(scene, sar_rig, poses[i], 0.0, derive_seed(seed, {1, i})));
      const auto fused = radar::simulate_frame(scene, cfg.rig, poses[i], 0.0, derive_seed(seed, {3, i}));
      traj.frames.push_back({0.0, poses[i], fusion::fuse_frame(fused, cfg.cfar, cfg.fusion)});
    }

    auto bins = [&](const radar::Heatmap2D& hm, const Pose& pose) {
      const Point3 local = pose.inverse().apply(scene[0].position);
      const std::size_t a = hm.nearest_angle_bin(std::asin(local.y() / local.norm()));
      const auto b = static_cast<std::size_t>(std::lround(local.norm() / array.range_resolution));
      return std::pair{target_row(hm, b, a), a};
    };
    const radar::Heatmap2D clean = radar::sar_combine(frames, array, 0.0, derive_seed(seed, {2}));
    const radar::Heatmap2D noisy = radar::sar_combine(frames, array, cfg.position_error_rms, derive_seed(seed, {2}));
    const std::size_t mid = frames.size() / 2;
    const auto [b_single, a_single] = bins(frames[mid].horizontal, poses[mid]);
    const auto [b_clean, a] = bins(clean, poses.front());
    const auto b_noisy = bins(noisy, poses.front()).first;
    const std::size_t lo = a >= window ? a - window : 0;
    const std::size_t hi = std::min(a + window, array.n_angle_bins - 1);

    SarRow row;
    row.seed = s;
    row.single_width = radar::mainlobe_width_3db(frames[mid].horizontal, b_single);
    row.sar_width = radar::mainlobe_width_3db(clean, b_clean);
    row.pslr_clean_db = radar::peak_to_sidelobe_db(clean, b_clean, lo, hi);
    row.pslr_noisy_db = radar::peak_to_sidelobe_db(noisy, b_noisy, lo, hi);

    const auto noisy_traj = temporal::add_pose_noise(traj, cfg.position_error_rms, 0.0, derive_seed(seed, {2}));
    row.spread_clean = cloud_spread(temporal::accumulate(traj));
    row.spread_noisy = cloud_spread(temporal::accumulate(noisy_traj));
    res.rows.push_back(row);
  }
  const double n = static_cast<double>(res.rows.size());
  for (const auto& r : res.rows) {
    res.mean_single_width += r.single_width / n;
    res.mean_sar_width += r.sar_width / n;
    res.mean_pslr_degradation_db += r.pslr_degradation_db() / n;
    res.mean_abs_spread_change += std::abs(r.spread_change()) / n;
  }
  return res;
}

std::string run_experiment(const std::string& name, const Config& cfg) {
  if (name == "frames_ablation") return frames_ablation(FramesAblationConfig::from_config(cfg)).to_csv();
  if (name == "sar_vs_fusion") return sar_vs_fusion(SarVsFusionConfig::from_config(cfg)).to_csv();
  throw Error(Errc::UnknownExperiment, "unknown experiment '" + name + "' (expected frames_ablation or sar_vs_fusion)");
}

}  // namespace rfc::experiments
