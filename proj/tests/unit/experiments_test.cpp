#include "helpers.hpp"

#include "rfc/experiments.hpp"

using namespace rfc;
using namespace rfc::experiments;
using doctest::Approx;

TEST_SUITE("experiments") {
  TEST_CASE("cloud spread") {
    PointCloud pc;
    pc.points = {{1, 0, 0}, {-1, 0, 0}, {0, 3, 0}, {0, -3, 0}};
    CHECK(cloud_spread(pc) == Approx(std::sqrt(5.0)));
    CHECK(th::code_of([] { cloud_spread(PointCloud{}); }) == Errc::EmptyCloud);
  }

  TEST_CASE("frames sweep") {
    const auto cfg = FramesAblationConfig::from_config(Config::parse(
        "experiment.frame_counts=1,4,10\nexperiment.n_frames=10\nexperiment.n_scenes=1\nexperiment.n_reference=1024\n"));
    CHECK(cfg.frame_counts == std::vector<std::size_t>{1, 4, 10});
    const auto r = frames_ablation(cfg);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[0].frames == 1);
    CHECK(r.rows[0].path_length == 0.0);
    CHECK(r.rows[0].points > 0);
    CHECK(r.rows[2].points >= r.rows[0].points);
    CHECK(r.metric_at(10) <= r.metric_at(1));
    CHECK(r.to_csv().rfind("frames,path_length_m,points,chamfer_l1_m,chamfer_sq_m2\n", 0) == 0);
    CHECK_THROWS_AS(r.metric_at(7), Error);
  }

  TEST_CASE("SAR against fusion") {
    auto cfg = SarVsFusionConfig::defaults();
    cfg.n_seeds = 2;
    const auto r = sar_vs_fusion(cfg);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.mean_sar_width < r.mean_single_width);
    for (const auto& row : r.rows) {
      CHECK(row.pslr_clean_db > row.pslr_noisy_db);
      CHECK(row.spread_clean > 0);
      const double sidelobe_growth = std::pow(10.0, row.pslr_degradation_db() / 10);
      CHECK(sidelobe_growth >= 5 * std::max(1.0, row.spread_noisy / row.spread_clean));
    }
    const auto csv = r.to_csv();
    CHECK(csv.rfind("seed,single_width_rad,sar_width_rad,", 0) == 0);
    CHECK(csv.find("\nmean,") != std::string::npos);
  }

  TEST_CASE("named experiments") {
    CHECK(th::code_of([] { run_experiment("nope", Config{}); }) == Errc::UnknownExperiment);
    const auto csv = run_experiment("frames_ablation", Config::parse("experiment.frame_counts=1,2\nexperiment.n_frames=2\n"
                                                                     "experiment.n_scenes=1\nexperiment.n_reference=256\n"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }
}
