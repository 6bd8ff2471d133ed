// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: rfc_acceptance <path-to-rfc-cli> <mesh-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <unistd.h>

#include "rfc/detection.hpp"
#include "rfc/experiments.hpp"
#include "rfc/fusion.hpp"
#include "rfc/io.hpp"
#include "rfc/metrics.hpp"
#include "rfc/radar.hpp"
#include "rfc/random.hpp"
#include "rfc/train.hpp"
#include "toy_data.hpp"

namespace fs = std::filesystem;
using namespace rfc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Outcome beamforming_resolution() {
  Outcome o{true, ""};
  for (std::size_t n : {8, 16, 64, 86}) {
    auto array = radar::VirtualArrayConfig::uniform(n);
    array.element_halfpower = 0.0;
    array.fov_limit = std::numbers::pi / 2 - 0.01;
    array.n_angle_bins = 3601;
    array.n_range_bins = 128;
    const std::vector<radar::Scatterer> s = {{Point3(3.0, 0.0, 0.0), 1.0, std::nullopt}};
    const auto hm = radar::beamform(radar::simulate_channel(array, s, Pose{}).samples, array);
    const double w = radar::mainlobe_width_3db(hm, 60);
    const double ratio = w / (2.0 / static_cast<double>(n));
    o.pass = o.pass && std::isfinite(w) && std::abs(ratio - 1.0) <= 0.25;
    o.detail += fmt("N=%.0f width/(2/N)=%.3f ", static_cast<double>(n), ratio);
  }
  return o;
}

Outcome cfar_calibration() {
  const std::size_t nr = 1000, na = 1000;
  std::vector<double> power(nr * na);
  Rng rng(20240601);
  std::exponential_distribution<double> expo(1.0);
  for (auto& p : power) p = expo(rng);
  detect::CfarConfig cfg;
  cfg.p_fa = 1e-3;
  const auto dets = detect::cfar_detect_power(power, nr, na, cfg);
  const double rate = static_cast<double>(dets.size()) / static_cast<double>(power.size());
  return {rate >= 3e-4 && rate <= 3e-3, fmt("empirical p_fa=%.3g over 1e6 cells", rate)};
}

Outcome fusion_localization() {
  radar::RigConfig rig;
  detect::CfarConfig cfar;
  fusion::FusionConfig fcfg;
  const double res_h = 2.0 / static_cast<double>(rig.horizontal.n_elements());
  const double res_v = 2.0 / static_cast<double>(rig.vertical.n_elements());
  const double dr = rig.horizontal.range_resolution;
  Rng rng(77);
  std::size_t ok = 0, violations = 0, empty = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Point3 p;
    do {
      const double r = uniform(rng, 1.0, 10.0);
      const double phi = uniform(rng, -radar::deg2rad(40), radar::deg2rad(40));
      const double th = uniform(rng, radar::deg2rad(50), radar::deg2rad(130));
      p = spherical_to_cartesian({r, phi, th});
    } while (p.z() + fcfg.mount_height < fcfg.min_height + 0.05 || p.z() + fcfg.mount_height > fcfg.max_height - 0.05);
    const std::vector<radar::Scatterer> scene = {{p, 1.0, std::nullopt}};
    const auto cloud = fusion::fuse_frame(radar::simulate_frame(scene, rig, Pose{}), cfar, fcfg);
    if (cloud.empty()) ++empty;
    bool good = !cloud.empty();
    for (const auto& q : cloud.points) {
      const Spherical s = cartesian_to_spherical(q);
      const double h = q.z() + fcfg.mount_height;
      if (std::abs(s.azimuth) > fcfg.fov_limit + 1e-9 || std::abs(s.elevation - std::numbers::pi / 2) > fcfg.fov_limit + 1e-9 ||
          h < fcfg.min_height || h > fcfg.max_height)
        ++violations;
      const double da = std::abs(std::asin(q.y() / q.norm()) - std::asin(p.y() / p.norm()));
      const double dt = std::abs(std::acos(q.z() / q.norm()) - std::acos(p.z() / p.norm()));
      if (std::abs(q.norm() - p.norm()) > dr || da > res_h || dt > res_v) good = false;
    }
    ok += good;
  }
  const double frac = static_cast<double>(ok) / 200.0;
  return {frac >= 0.95 && violations == 0,
          fmt("localized %.1f%% (empty %.0f), limit violations %.0f", 100.0 * frac, static_cast<double>(empty),
              static_cast<double>(violations))};
}

Outcome association_rule() {
  auto det = [](double p, std::size_t a) {
    detect::Detection d;
    d.power_db = p;
    d.angle_bin = a;
    return d;
  };
  fusion::FusionConfig cfg;
  const auto pairs = fusion::associate_range_bin({det(10, 0), det(7, 1), det(3, 2)}, {det(9.5, 0), det(6, 1), det(-1, 2)}, cfg);
  bool pass = pairs.size() == 2 && pairs[0].first.power_db == 10 && pairs[0].second.power_db == 9.5 &&
              pairs[1].first.power_db == 7 && pairs[1].second.power_db == 6;

  radar::RigConfig rig;
  detect::CfarConfig cfar;
  Rng rng(4);
  std::size_t worst_excess = 0, scenes = 0;
  for (int i = 0; i < 100; ++i) {
    const double r = uniform(rng, 2.0, 8.0), phi = uniform(rng, -0.5, 0.5), d = uniform(rng, radar::deg2rad(4), radar::deg2rad(12));
    const std::vector<radar::Scatterer> scene = {{spherical_to_cartesian({r, phi, std::numbers::pi / 2 - d}), 1.0, std::nullopt},
                                                 {spherical_to_cartesian({r, phi, std::numbers::pi / 2 + d}), 1.0, std::nullopt}};
    const auto res = fusion::fuse_frame_detailed(radar::simulate_frame(scene, rig, Pose{}), cfar, cfg);
    const std::size_t bound = std::min(res.stats.h_after_nms, res.stats.v_after_nms);
    worst_excess = std::max(worst_excess, res.cloud.size() > bound ? res.cloud.size() - bound : 0);
    ++scenes;
  }
  pass = pass && worst_excess == 0;
  return {pass, fmt("example pairs=%.0f; %.0f ambiguity scenes, max excess over min(detections)=%.0f",
                    static_cast<double>(pairs.size()), static_cast<double>(scenes), static_cast<double>(worst_excess))};
}

double brute_chamfer(const metrics::Points& a, const metrics::Points& b) {
  auto dir = [](const metrics::Points& x, const metrics::Points& y) {
    double s = 0;
    for (const auto& p : x) {
      double best = INFINITY;
      for (const auto& q : y) best = std::min(best, (p - q).squaredNorm());
      s += best;
    }
    return s / static_cast<double>(x.size());
  };
  return dir(a, b) + dir(b, a);
}

double brute_emd(const metrics::Points& a, const metrics::Points& b) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[perm[i]]).squaredNorm();
    best = std::min(best, s / static_cast<double>(a.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

metrics::Points random_cloud(Rng& rng, std::size_t n) {
  metrics::Points p;
  for (std::size_t i = 0; i < n; ++i) p.emplace_back(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
  return p;
}

Outcome metric_oracles() {
  Rng rng(5);
  double worst_cd = 0, worst_emd = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + t % 8, m = 1 + (t / 8) % 8;
    const auto a = random_cloud(rng, n), b = random_cloud(rng, m), c = random_cloud(rng, n);
    worst_cd = std::max(worst_cd, std::abs(metrics::chamfer(a, b) - brute_chamfer(a, b)));
    worst_emd = std::max(worst_emd, std::abs(metrics::emd_exact(a, c) - brute_emd(a, c)));
  }
  double worst_rel = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng r(derive_seed(99, {s}));
    const auto a = random_cloud(r, 64), b = random_cloud(r, 64);
    const double exact = metrics::emd_exact(a, b);
    worst_rel = std::max(worst_rel, std::abs(metrics::emd_approx(a, b) - exact) / exact);
  }
  return {worst_cd <= 1e-6 && worst_emd <= 1e-6 && worst_rel <= 0.05,
          fmt("max |CD-brute|=%.2g, max |EMD-brute|=%.2g, max approx rel err=%.3f%%", worst_cd, worst_emd, 100 * worst_rel)};
}

Outcome gradient_check() {
  auto mc = net::toy_config();
  mc.n_input = 16;
  mc.n_coarse = 4;
  mc.u = 2;
  mc.mlp1 = {8, 16};
  mc.mlp2 = {16, 32};
  mc.classifier_hidden = {16};
  mc.coarse_hidden = {32};
  mc.folding_hidden = {16};
  const auto item = toy::make_item(1, mc.n_input, 64, 5);
  auto model = net::Model::init(mc, 9);
  const auto emd_target = net::emd_subsample(item.train.target, mc.n_coarse, 3);
  auto loss = [&] {
    return model.loss(model.forward(item.train.input), item.train.target, emd_target, item.train.label, mc.alpha).total;
  };
  model.zero_grad();
  ad::backward(loss());
  const double h = 1e-5;
  double worst = 0;
  std::size_t checked = 0;
  for (const auto& [name, p] : model.params()) {
    const ad::Mat g = p->grad.size() ? p->grad : ad::Mat::Zero(p->rows(), p->cols());
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      double& v = p->value.data()[k];
      const double v0 = v;
      v = v0 + h;
      const double up = loss()->scalar();
      v = v0 - h;
      const double down = loss()->scalar();
      v = v0;
      const double num = (up - down) / (2 * h), ana = g.data()[k];
      worst = std::max(worst, std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), 1e-12}));
      ++checked;
    }
  }
  return {worst < 1e-4, fmt("%.0f parameters, max relative error %.3g", static_cast<double>(checked), worst)};
}

Outcome overfit() {
  const auto mc = net::toy_config();
  // Targets of n_coarse points make the coarse EMD target the full cloud, so
  // the loss can approach zero.
  const auto data = toy::make_set(10, mc.n_input, mc.n_coarse, 42);
  net::TrainConfig tc;
  tc.batch_size = 10;
  tc.epochs = 500;
  tc.seed = 3;
  auto run = [&] {
    auto m = net::Model::init(mc, 1);
    return net::train(m, data, tc);
  };
  const auto h1 = run(), h2 = run();
  const double start = h1.step_losses.at(9), end = h1.step_losses.back();
  const double reduction = 1.0 - end / start;
  const double acc = h1.epochs.back().accuracy;
  const bool same = h1.step_losses == h2.step_losses && h1.to_csv() == h2.to_csv();
  return {reduction >= 0.9 && acc == 1.0 && same,
          fmt("loss step10=%.4f step500=%.4f (-%.1f%%), train acc=%.2f", start, end, 100 * reduction, acc) +
              (same ? ", deterministic" : ", NOT deterministic")};
}

Outcome classifier_ablation() {
  double with = 0, without = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto mc = net::toy_config();
    const auto train = toy::make_set(60, mc.n_input, mc.n_fine(), derive_seed(seed, {1}));
    const auto test = toy::make_set(30, mc.n_input, mc.n_fine(), derive_seed(seed, {2}));
    for (double beta : {0.0, 0.1}) {
      mc.beta = beta;
      auto m = net::Model::init(mc, derive_seed(seed, {3}));
      net::TrainConfig tc;
      tc.epochs = 60;
      tc.batch_size = 8;
      tc.seed = seed;
      net::train(m, train, tc);
      double cd = 0;
      for (const auto& s : test) cd += metrics::chamfer(net::predict(m, s.input).fine, s.target) / static_cast<double>(test.size());
      (beta > 0 ? with : without) += cd / 3.0;
    }
  }
  return {with <= without, fmt("mean test CD beta=0.1: %.5f, beta=0: %.5f", with, without)};
}

Outcome frames_ablation() {
  const auto res = experiments::frames_ablation({});
  const double m1 = res.metric_at(1), m10 = res.metric_at(10), m20 = res.metric_at(20);
  return {m20 < m1 && (m10 - m20) < (m1 - m10), fmt("chamfer-L1 1/10/20 frames: %.4f / %.4f / %.4f m", m1, m10, m20)};
}

Outcome sar_sensitivity() {
  const auto res = experiments::sar_vs_fusion(experiments::SarVsFusionConfig::defaults());
  double worst_spread = 0;
  for (const auto& r : res.rows) worst_spread = std::max(worst_spread, std::abs(r.spread_change()));
  return {res.mean_pslr_degradation_db >= 6.0 && res.mean_abs_spread_change <= 0.10 &&
              res.mean_sar_width < res.mean_single_width,
          fmt("PSLR degradation %.2f dB, fused spread change mean %.2f%% (max %.2f%%), SAR/single width %.3f",
              res.mean_pslr_degradation_db, 100 * res.mean_abs_spread_change, 100 * worst_spread,
              res.mean_sar_width / res.mean_single_width)};
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::vector<fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb) {
    why = "file lists differ under " + a.filename().string();
    return false;
  }
  for (const auto& f : fa)
    if (io::read_file(a / f) != io::read_file(b / f)) {
      why = "bytes differ: " + f.string();
      return false;
    }
  return true;
}

Outcome determinism(const std::string& cli, const std::string& meshes) {
  const fs::path root = fs::temp_directory_path() / ("rfc_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  auto run = [&](const std::string& args) {
    const std::string cmd = "\"" + cli + "\" " + args + " 2>/dev/null";
    return std::system(cmd.c_str()) == 0;
  };
  bool ok = true;
  for (const char* tag : {"a", "b"}) {
    const fs::path d = root / tag;
    fs::create_directories(d);
    const std::string q = "\"" + d.string();
    ok = ok && run("gen-dataset --meshes \"" + meshes + "\" -o " + q + "/data\" --set dataset.per_object=2 --set seed=7");
    ok = ok && run("train --data " + q + "/data\" -o " + q + "/run\" --set model.preset=toy --set train.epochs=2 --set seed=7");
    ok = ok && run("experiment frames_ablation -o " + q + "/frames.csv\" --set seed=7");
    ok = ok && run("experiment sar_vs_fusion -o " + q + "/sar.csv\" --set seed=7 --set experiment.n_seeds=5");
  }
  if (!ok) {
    fs::remove_all(root);
    return {false, "a CLI run exited non-zero"};
  }
  std::string why = "dataset, checkpoint, history and both experiment CSVs identical";
  const bool same = same_tree(root / "a", root / "b", why);
  fs::remove_all(root);
  return {same, why};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: rfc_acceptance <rfc-cli> <mesh-dir>\n";
    return 2;
  }
  const std::string cli = argv[1], meshes = argv[2];
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"beamforming resolution", 10, beamforming_resolution},
      {"CFAR calibration", 30, cfar_calibration},
      {"fusion localization", 120, fusion_localization},
      {"association rule", 0, association_rule},
      {"metric oracles", 60, metric_oracles},
      {"gradient correctness", 120, gradient_check},
      {"overfit convergence", 600, overfit},
      {"classifier ablation trend", 0, classifier_ablation},
      {"frames ablation trend", 0, frames_ablation},
      {"SAR sensitivity", 300, sar_sensitivity},
      {"determinism", 0, [&] { return determinism(cli, meshes); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt(" [over %.0f s budget]", c.budget_s);
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
