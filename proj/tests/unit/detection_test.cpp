#include "helpers.hpp"

#include "rfc/detection.hpp"

using namespace rfc;
using namespace rfc::detect;
using doctest::Approx;

namespace {

std::vector<double> exp_field(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = e(rng);
  return v;
}

std::vector<std::pair<std::size_t, std::size_t>> cells(const std::vector<Detection>& d) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& x : d) out.emplace_back(x.range_bin, x.angle_bin);
  std::sort(out.begin(), out.end());
  return out;
}

Detection det(std::size_t b, std::size_t a, double p) { return {b, a, p, 0.0, 0.0}; }

}  // namespace

TEST_SUITE("detection") {
  TEST_CASE("single bright cell on a flat field") {
    std::vector<double> field(32 * 32, 1.0);
    field[16 * 32 + 16] = 100.0;
    CfarConfig cfg;
    cfg.training_cells = 4;
    cfg.p_fa = 1e-4;
    CHECK(cfg.full_window_cells() == 16);
    const auto d = cfar_detect_power(field, 32, 32, cfg);
    REQUIRE(d.size() == 1);
    CHECK(d[0].range_bin == 16);
    CHECK(d[0].angle_bin == 16);
    CHECK(d[0].power_db == Approx(20.0));
  }

  TEST_CASE("all-zero field") {
    CHECK(cfar_detect_power(std::vector<double>(40 * 40, 0.0), 40, 40, {}).empty());
  }

  TEST_CASE("false-alarm rate on exponential noise") {
    for (double pfa : {1e-2, 1e-3}) {
      const std::size_t n = 400;
      CfarConfig cfg;
      cfg.p_fa = pfa;
      const auto d = cfar_detect_power(exp_field(n * n, 11), n, n, cfg);
      const double rate = static_cast<double>(d.size()) / static_cast<double>(n * n);
      CAPTURE(pfa);
      CHECK(rate >= 0.3 * pfa);
      CHECK(rate <= 3.0 * pfa);
    }
  }

  TEST_CASE("scale invariance") {
    for (auto variant : {CfarVariant::CA, CfarVariant::OS}) {
      CfarConfig cfg;
      cfg.variant = variant;
      cfg.p_fa = 0.05;
      auto field = exp_field(60 * 50, 12);
      const auto base = cells(cfar_detect_power(field, 60, 50, cfg));
      CHECK_FALSE(base.empty());
      for (double c : {1e-6, 0.37, 42.0, 1e8}) {
        auto scaled = field;
        for (auto& x : scaled) x *= c;
        CHECK(cells(cfar_detect_power(scaled, 60, 50, cfg)) == base);
      }
    }
  }

  TEST_CASE("detections exceed their CA threshold") {
    CfarConfig cfg;
    cfg.p_fa = 0.05;
    cfg.guard_cells = 1;
    cfg.training_cells = 4;
    const long nr = 40, na = 30;
    const auto field = exp_field(nr * na, 13);
    for (const auto& d : cfar_detect_power(field, nr, na, cfg)) {
      const long b = static_cast<long>(d.range_bin), a = static_cast<long>(d.angle_bin);
      double sum = 0;
      std::size_t t = 0;
      for (long k = 2; k <= 5; ++k)
        for (auto [db, da] : {std::pair{-k, 0L}, {k, 0L}, {0L, -k}, {0L, k}})
          if (b + db >= 0 && b + db < nr && a + da >= 0 && a + da < na) sum += field[(b + db) * na + a + da], ++t;
      CHECK(field[b * na + a] > ca_cfar_alpha(t, cfg.p_fa) * sum / static_cast<double>(t));
    }
  }

  TEST_CASE("ordering by power then index") {
    Rng rng(14);
    std::vector<double> field(50 * 50);
    for (auto& x : field) x = std::pow(10.0, static_cast<double>(rng() % 4));
    CfarConfig cfg;
    cfg.p_fa = 0.2;
    const auto d = cfar_detect_power(field, 50, 50, cfg);
    REQUIRE(d.size() > 10);
    for (std::size_t i = 1; i < d.size(); ++i) {
      CHECK(d[i - 1].power_db >= d[i].power_db);
      if (d[i - 1].power_db == d[i].power_db)
        CHECK(std::pair(d[i - 1].range_bin, d[i - 1].angle_bin) < std::pair(d[i].range_bin, d[i].angle_bin));
    }
  }

  TEST_CASE("CFAR scales") {
    CHECK(ca_cfar_alpha(16, 1e-4) == Approx(16 * (std::pow(1e-4, -1.0 / 16) - 1)));
    const double a = os_cfar_alpha(24, 18, 1e-3);
    double p = 1;
    for (int i = 0; i < 18; ++i) p *= (24.0 - i) / (24.0 - i + a);
    CHECK(p == Approx(1e-3).epsilon(1e-6));
  }

  TEST_CASE("NMS rules") {
    CHECK(nms_peaks({det(5, 5, 3)}, 2).size() == 1);
    auto kept = nms_peaks({det(5, 5, 3), det(5, 6, 4)}, 2);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].angle_bin == 6);
    kept = nms_peaks({det(7, 8, 1), det(7, 7, 1), det(8, 7, 1), det(6, 9, 1)}, 2);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].range_bin == 6);
    CHECK(kept[0].angle_bin == 9);
    CHECK(nms_peaks({det(0, 0, 1), det(0, 3, 1)}, 2).size() == 2);
    CHECK(nms_peaks({det(0, 0, 1), det(3, 1, 1)}, 2, 1).size() == 2);
    CHECK(default_nms_radius(radar::VirtualArrayConfig::uniform(86)) == 3);
  }

  TEST_CASE("invalid configs") {
    CfarConfig cfg;
    cfg.training_cells = 3;
    CHECK(th::code_of([&] { cfg.validate(); }) == Errc::InvalidArgument);
    cfg = {};
    cfg.p_fa = 0.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    CHECK(th::code_of([] { cfar_detect_power(std::vector<double>(10 * 10, 1.0), 10, 10, {}); }) ==
          Errc::HeatmapTooSmall);
  }

  TEST_CASE("csv") {
    const auto s = detections_to_csv({det(1, 2, 3.5)});
    CHECK(s.rfind("range_bin,angle_bin,range_m,angle_rad,power_db\n", 0) == 0);
  }
}
