#include "rfc/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rfc/errors.hpp"

namespace rfc::fusion {

using detect::Detection;

void FusionConfig::validate() const {
  if (!(power_discrepancy_db > 0.0)) throw Error(Errc::InvalidArgument, "power_discrepancy_db must be positive");
  if (!(fov_limit > 0.0) || fov_limit > std::numbers::pi / 2)
    throw Error(Errc::InvalidArgument, "fov_limit must be in (0, pi/2]");
  if (!(min_height < max_height)) throw Error(Errc::InvalidArgument, "min_height must be below max_height");
}

FusionStats& FusionStats::operator+=(const FusionStats& o) {
  h_detections += o.h_detections;
  v_detections += o.v_detections;
  h_after_nms += o.h_after_nms;
  v_after_nms += o.v_after_nms;
  fov_rejected += o.fov_rejected;
  unpaired += o.unpaired;
  domain_dropped += o.domain_dropped;
  limit_dropped += o.limit_dropped;
  points += o.points;
  return *this;
}

std::vector<double> default_gain_table(const radar::VirtualArrayConfig& array) {
  std::vector<double> out;
  for (double a : array.angle_centers())
    out.push_back(radar::element_gain_db(array.element_halfpower, array.broadside_offset(a)));
  return out;
}

std::vector<double> default_gain_table(const radar::Heatmap2D& hm) {
  const double center = hm.orientation == radar::ArrayOrientation::Horizontal ? 0.0 : std::numbers::pi / 2;
  std::vector<double> out;
  for (double a : hm.angle_centers) out.push_back(radar::element_gain_db(hm.element_halfpower, a - center));
  return out;
}

std::vector<Detection> compensate_gain(std::vector<Detection> dets, const std::vector<double>& table_db) {
  for (auto& d : dets) {
    if (d.angle_bin >= table_db.size())
      throw Error(Errc::MissingGainEntry, "no gain entry for angle bin " + std::to_string(d.angle_bin));
    d.power_db -= table_db[d.angle_bin];
  }
  return dets;
}

std::vector<Pair> associate_range_bin(const std::vector<Detection>& h, const std::vector<Detection>& v,
                                      const FusionConfig& cfg) {
  std::vector<Pair> out;
  const std::size_t n = std::min(h.size(), v.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(h[i].power_db - v[i].power_db) > cfg.power_discrepancy_db) break;
    out.emplace_back(h[i], v[i]);
  }
  return out;
}

Point3 lift_to_3d(double psi, double theta, double side, double range) {
  const double phi_mag = azimuth_from_cone(psi, theta);
  return spherical_to_cartesian({range, side < 0.0 ? -phi_mag : phi_mag, theta});
}

Point3 lift_pair(const Pair& pair, double range) {
  const double alpha = pair.first.angle_rad;
  const double theta = pair.second.angle_rad;
  return lift_to_3d(cone_angle_from_broadside(alpha, theta), theta, alpha, range);
}

namespace {

// Power-sorted detections grouped by range bin; ties within a bin fall back
// to the angle bin through sort_by_power.
std::map<std::size_t, std::vector<Detection>> by_range_bin(std::vector<Detection> dets) {
  detect::sort_by_power(dets);
  std::map<std::size_t, std::vector<Detection>> out;
  for (const auto& d : dets) out[d.range_bin].push_back(d);
  return out;
}

}  // namespace

FusionResult fuse_frame_detailed(const radar::FrameCapture& frame, const detect::CfarConfig& cfar,
                                 const FusionConfig& cfg) {
  cfg.validate();
  const auto& hh = frame.horizontal;
  const auto& hv = frame.vertical;
  if (hh.n_range_bins != hv.n_range_bins || std::abs(hh.range_resolution - hv.range_resolution) > 1e-12)
    throw Error(Errc::ConfigMismatch, "heatmaps do not share a range axis");

  FusionResult res;
  auto& st = res.stats;

  auto nms_radius = [&](const radar::Heatmap2D& hm) -> std::size_t {
    if (cfg.nms_radius > 0) return cfg.nms_radius;
    if (hm.n_angle_bins < 2 || hm.n_elements == 0) return 1;
    const double bin = std::abs(hm.angle_centers[1] - hm.angle_centers[0]);
    return static_cast<std::size_t>(std::ceil((2.0 / static_cast<double>(hm.n_elements)) / bin));
  };

  auto h = detect::cfar_detect(hh, cfar);
  auto v = detect::cfar_detect(hv, cfar);
  st.h_detections = h.size();
  st.v_detections = v.size();
  h = detect::nms_peaks(std::move(h), cfg.nms_range_radius, nms_radius(hh));
  v = detect::nms_peaks(std::move(v), cfg.nms_range_radius, nms_radius(hv));
  st.h_after_nms = h.size();
  st.v_after_nms = v.size();

  const auto gain_h = cfg.gain_h_db.empty() ? default_gain_table(hh) : cfg.gain_h_db;
  const auto gain_v = cfg.gain_v_db.empty() ? default_gain_table(hv) : cfg.gain_v_db;
  h = compensate_gain(std::move(h), gain_h);
  v = compensate_gain(std::move(v), gain_v);

  auto in_fov_h = [&](const Detection& d) { return std::abs(d.angle_rad) <= cfg.fov_limit + 1e-12; };
  auto in_fov_v = [&](const Detection& d) {
    return std::abs(d.angle_rad - std::numbers::pi / 2) <= cfg.fov_limit + 1e-12;
  };
  const auto before = h.size() + v.size();
  std::erase_if(h, [&](const Detection& d) { return !in_fov_h(d); });
  std::erase_if(v, [&](const Detection& d) { return !in_fov_v(d); });
  st.fov_rejected += before - h.size() - v.size();

  auto h_bins = by_range_bin(std::move(h));
  auto v_bins = by_range_bin(std::move(v));

  for (auto& [bin, hd] : h_bins) {
    std::vector<Detection> vd;
    const std::size_t tol = cfg.range_bin_tolerance;
    for (std::size_t b = bin >= tol ? bin - tol : 0; b <= bin + tol; ++b) {
      auto it = v_bins.find(b);
      if (it == v_bins.end()) continue;
      vd.insert(vd.end(), it->second.begin(), it->second.end());
      it->second.clear();
    }
    detect::sort_by_power(vd);
    const auto pairs = associate_range_bin(hd, vd, cfg);
    st.unpaired += hd.size() + vd.size() - 2 * pairs.size();
    for (const auto& pair : pairs) {
      Point3 p;
      try {
        p = lift_pair(pair, pair.first.range_m);
      } catch (const Error& e) {
        if (e.code() != Errc::DomainError && e.code() != Errc::DegenerateElevation) throw;
        ++st.domain_dropped;
        continue;
      }
      const Spherical s = cartesian_to_spherical(p);
      const double height = p.z() + cfg.mount_height;
      if (std::abs(s.azimuth) > cfg.fov_limit + 1e-12 ||
          std::abs(s.elevation - std::numbers::pi / 2) > cfg.fov_limit + 1e-12 || height < cfg.min_height ||
          height > cfg.max_height) {
        ++st.limit_dropped;
        continue;
      }
      res.cloud.push_back(p, 0.5 * (pair.first.power_db + pair.second.power_db));
    }
  }
  for (const auto& [bin, vd] : v_bins) st.unpaired += vd.size();
  if (!res.cloud.powers) res.cloud.powers.emplace();
  st.points = res.cloud.size();
  return res;
}

PointCloud fuse_frame(const radar::FrameCapture& frame, const detect::CfarConfig& cfar, const FusionConfig& cfg) {
  return fuse_frame_detailed(frame, cfar, cfg).cloud;
}

}  // namespace rfc::fusion
