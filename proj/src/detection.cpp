#include "rfc/detection.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rfc/errors.hpp"
#include "rfc/io.hpp"

namespace rfc::detect {

void CfarConfig::validate() const {
  if (training_cells < 4) throw Error(Errc::InvalidArgument, "CFAR needs at least 4 training cells per axis");
  if (!(p_fa > 0.0 && p_fa < 0.5)) throw Error(Errc::InvalidArgument, "p_fa must be in (0, 0.5)");
  if (variant == CfarVariant::OS && !(os_rank > 0.0 && os_rank <= 1.0))
    throw Error(Errc::InvalidArgument, "os_rank must be in (0, 1]");
}

double ca_cfar_alpha(std::size_t training, double p_fa) {
  const double t = static_cast<double>(training);
  return t * (std::pow(p_fa, -1.0 / t) - 1.0);
}

double os_cfar_alpha(std::size_t training, std::size_t rank, double p_fa) {
  auto pfa_of = [&](double alpha) {
    double p = 1.0;
    for (std::size_t i = 0; i < rank; ++i) {
      const double ti = static_cast<double>(training - i);
      p *= ti / (ti + alpha);
    }
    return p;
  };
  double lo = 0.0, hi = 1.0;
  while (pfa_of(hi) > p_fa) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (pfa_of(mid) > p_fa ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void sort_by_power(std::vector<Detection>& dets) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.power_db != b.power_db) return a.power_db > b.power_db;
    if (a.range_bin != b.range_bin) return a.range_bin < b.range_bin;
    return a.angle_bin < b.angle_bin;
  });
}

namespace {

struct Hit {
  std::size_t b, a;
  double power;
};

std::vector<Hit> cfar_cells(const std::vector<double>& power, std::size_t nr, std::size_t na, const CfarConfig& cfg) {
  cfg.validate();
  const std::size_t min_size = 2 * (cfg.guard_cells + cfg.training_cells) + 1;
  if (nr < min_size || na < min_size)
    throw Error(Errc::HeatmapTooSmall, "heatmap " + std::to_string(nr) + "x" + std::to_string(na) +
                                           " smaller than CFAR window " + std::to_string(min_size));
  const std::size_t full = cfg.full_window_cells();
  std::vector<double> alpha(full + 1, 0.0);
  for (std::size_t t = 1; t <= full; ++t) {
    if (cfg.variant == CfarVariant::CA) {
      alpha[t] = ca_cfar_alpha(t, cfg.p_fa);
    } else {
      const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(cfg.os_rank * static_cast<double>(t))), 1, t);
      alpha[t] = os_cfar_alpha(t, k, cfg.p_fa);
    }
  }

  const auto g = static_cast<long>(cfg.guard_cells);
  const auto tr = static_cast<long>(cfg.training_cells);
  const auto lnr = static_cast<long>(nr), lna = static_cast<long>(na);
  std::vector<double> cells;
  cells.reserve(full);
  std::vector<Hit> hits;
  for (long b = 0; b < lnr; ++b) {
    for (long a = 0; a < lna; ++a) {
      const double p = power[static_cast<std::size_t>(b * lna + a)];
      if (!(p > 0.0)) continue;
      cells.clear();
      for (long d = g + 1; d <= g + tr; ++d) {
        if (b - d >= 0) cells.push_back(power[static_cast<std::size_t>((b - d) * lna + a)]);
        if (b + d < lnr) cells.push_back(power[static_cast<std::size_t>((b + d) * lna + a)]);
        if (a - d >= 0) cells.push_back(power[static_cast<std::size_t>(b * lna + a - d)]);
        if (a + d < lna) cells.push_back(power[static_cast<std::size_t>(b * lna + a + d)]);
      }
      const std::size_t t = cells.size();
      double noise = 0.0;
      if (cfg.variant == CfarVariant::CA) {
        for (double c : cells) noise += c;
        noise /= static_cast<double>(t);
      } else {
        const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(cfg.os_rank * static_cast<double>(t))), 1, t);
        std::nth_element(cells.begin(), cells.begin() + static_cast<long>(k - 1), cells.end());
        noise = cells[k - 1];
      }
      if (p > alpha[t] * noise) hits.push_back({static_cast<std::size_t>(b), static_cast<std::size_t>(a), p});
    }
  }
  return hits;
}

}  // namespace

std::vector<Detection> cfar_detect_power(const std::vector<double>& power, std::size_t n_range, std::size_t n_angle,
                                         const CfarConfig& cfg) {
  if (power.size() != n_range * n_angle) throw Error(Errc::ShapeMismatch, "power grid size mismatch");
  std::vector<Detection> out;
  for (const auto& h : cfar_cells(power, n_range, n_angle, cfg))
    out.push_back({h.b, h.a, 10.0 * std::log10(h.power), static_cast<double>(h.b), static_cast<double>(h.a)});
  sort_by_power(out);
  return out;
}

std::vector<Detection> cfar_detect(const radar::Heatmap2D& hm, const CfarConfig& cfg) {
  std::vector<double> power(hm.values.size());
  for (std::size_t i = 0; i < power.size(); ++i) power[i] = std::norm(hm.values[i]);
  std::vector<Detection> out;
  for (const auto& h : cfar_cells(power, hm.n_range_bins, hm.n_angle_bins, cfg))
    out.push_back({h.b, h.a, 10.0 * std::log10(h.power), hm.range_of_bin(h.b), hm.angle_centers[h.a]});
  sort_by_power(out);
  return out;
}

std::vector<Detection> nms_peaks(std::vector<Detection> dets, std::size_t radius) {
  return nms_peaks(std::move(dets), radius, radius);
}

std::vector<Detection> nms_peaks(std::vector<Detection> dets, std::size_t range_radius, std::size_t angle_radius) {
  sort_by_power(dets);
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      const auto dr = d.range_bin > k.range_bin ? d.range_bin - k.range_bin : k.range_bin - d.range_bin;
      const auto da = d.angle_bin > k.angle_bin ? d.angle_bin - k.angle_bin : k.angle_bin - d.angle_bin;
      return dr <= range_radius && da <= angle_radius;
    });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

std::size_t default_nms_radius(const radar::VirtualArrayConfig& array) {
  if (array.n_angle_bins < 2) return 1;
  const double bin = 2.0 * array.fov_limit / static_cast<double>(array.n_angle_bins - 1);
  const double lobe = 2.0 / static_cast<double>(array.n_elements());
  return static_cast<std::size_t>(std::ceil(lobe / bin));
}

std::string detections_to_csv(const std::vector<Detection>& dets) {
  std::ostringstream out;
  out.precision(10);
  out << "range_bin,angle_bin,range_m,angle_rad,power_db\n";
  for (const auto& d : dets)
    out << d.range_bin << ',' << d.angle_bin << ',' << d.range_m << ',' << d.angle_rad << ',' << d.power_db << '\n';
  return out.str();
}

void write_detections_csv(const std::filesystem::path& path, const std::vector<Detection>& dets) {
  io::write_file_atomic(path, detections_to_csv(dets));
}

}  // namespace rfc::detect
