#include "helpers.hpp"

#include <filesystem>
#include <map>
#include <numbers>

#include "rfc/augment.hpp"
#include "rfc/dataset.hpp"
#include "rfc/io.hpp"
#include "rfc/mesh.hpp"

using namespace rfc;
using namespace rfc::augment;
using doctest::Approx;

namespace {

Mesh unit_square() {
  Mesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

TrainingSample car_sample() {
  TrainingSample s;
  const Mesh car = box_mesh({1, 2, 3}, {2.0, 0.9, 0.7});
  s.complete = sample_surface_uniform(car, 4000, 1);
  s.partial = sample_surface_uniform(car, 500, 2);
  s.class_label = "car";
  return s;
}

const std::filesystem::path kMeshes = RFC_TEST_MESH_DIR;

}  // namespace

TEST_SUITE("mesh") {
  TEST_CASE("obj parsing") {
    const Mesh m = parse_obj("# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1 4/4/1\nf -4 -3 -2\n");
    CHECK(m.vertices.size() == 4);
    REQUIRE(m.triangles.size() == 3);
    CHECK(m.triangles[1] == std::array<std::uint32_t, 3>{0, 2, 3});
    CHECK(m.triangles[2] == std::array<std::uint32_t, 3>{0, 1, 2});
    CHECK(m.total_area() == Approx(1.5));
    CHECK((m.triangle_normal(0) - Point3(0, 0, 1)).norm() < 1e-12);
  }

  TEST_CASE("obj errors name the line") {
    for (const char* text : {"v 0 0 0\nv 1 0\n", "v 0 0 0\nf 1 2 3\n", "v 0 0 0\nf 1 1\n", "v 0 0 0\nf a b c\n"}) {
      try {
        parse_obj(text, "m.obj");
        FAIL("expected ParseError");
      } catch (const Error& e) {
        CHECK(e.code() == Errc::ParseError);
        CHECK(std::string(e.what()).find("m.obj:2") != std::string::npos);
      }
    }
  }

  TEST_CASE("class labels from paths") {
    CHECK(class_from_path("x/car/sedan.obj") == "car");
    CHECK(class_from_path("x/misc/bike_02.obj") == "bike");
    CHECK(class_from_path("human-7.obj") == "human");
    CHECK(load_obj(kMeshes / "human" / "walking.obj").class_label == "human");
  }

  TEST_CASE("box mesh is closed and outward") {
    const Mesh b = box_mesh({1, 1, 1}, {1, 0.5, 0.25});
    CHECK(b.triangles.size() == 12);
    CHECK(b.total_area() == Approx(7.0));
    for (std::size_t t = 0; t < b.triangles.size(); ++t) {
      const Point3 c = (b.vertices[b.triangles[t][0]] + b.vertices[b.triangles[t][1]] + b.vertices[b.triangles[t][2]]) / 3.0;
      CHECK(b.triangle_normal(t).dot(c - Point3(1, 1, 1)) > 0);
    }
  }

  TEST_CASE("uniform surface sampling") {
    const auto pc = sample_surface_uniform(unit_square(), 100000, 3);
    REQUIRE(pc.size() == 100000);
    std::array<double, 4> q{};
    for (const auto& p : pc.points) q[(p.x() >= 0.5) + 2 * (p.y() >= 0.5)] += 1;
    const double sigma = std::sqrt(1e5 * 0.25 * 0.75);
    for (double c : q) CHECK(std::abs(c - 25000) <= 3 * sigma);

    Mesh tri;
    tri.vertices = {{0, 0, 0}, {2, 0, 0}, {0, 1, 1}};
    tri.triangles = {{0, 1, 2}};
    for (const auto& p : sample_surface_uniform(tri, 2000, 4).points) {
      const double b1 = p.x() / 2, b2 = p.z();
      CHECK(b1 >= -1e-12);
      CHECK(b2 >= -1e-12);
      CHECK(1 - b1 - b2 >= -1e-12);
      CHECK(std::abs(p.y() - p.z()) < 1e-12);
    }
    CHECK(sample_surface_uniform(tri, 0, 5).empty());
    tri.vertices[2] = {1, 0, 0};
    CHECK(th::code_of([&] { sample_surface_uniform(tri, 3, 5); }) == Errc::DegenerateMesh);
  }

  TEST_CASE("samples with normals lie on their faces") {
    const Mesh b = box_mesh(Point3::Zero(), {1, 2, 3});
    for (const auto& s : sample_surface_with_normals(b, 500, 6)) {
      CHECK(s.normal.norm() == Approx(1.0));
      Eigen::Index axis = 0;
      s.normal.cwiseAbs().maxCoeff(&axis);
      CHECK(s.position[axis] * s.normal[axis] == Approx(axis + 1.0));
    }
  }
}

TEST_SUITE("augment") {
  TEST_CASE("sphere renders only its near hemisphere") {
    const Mesh sphere = ellipsoid_mesh({0.5, -0.2, 1.0}, {1, 1, 1}, 24, 48);
    Rng rng(41);
    for (int k = 0; k < 10; ++k) {
      const Point3 dir = th::random_point(rng).normalized();
      const Point3 eye = Point3(0.5, -0.2, 1.0) + uniform(rng, 3, 8) * dir;
      const auto pc = render_partial(sphere, look_at(eye, {0.5, -0.2, 1.0}), 2000, k);
      CHECK(pc.size() > 100);
      for (const auto& p : pc.points) CHECK((p - Point3(0.5, -0.2, 1.0)).dot(-dir) < 0);
    }
  }

  TEST_CASE("distant plane has constant axial depth") {
    Mesh plane;
    plane.vertices = {{0, -1, -1}, {0, 1, -1}, {0, 1, 1}, {0, -1, 1}};
    plane.triangles = {{0, 1, 2}, {0, 2, 3}};
    const auto dm = render_depth(plane, Pose::from_translation({-1000, 0, 0}));
    CHECK(dm.valid() > 100);
    for (double d : dm.depth)
      if (!std::isnan(d)) CHECK(std::abs(d - 1000) < 1e-6);
  }

  TEST_CASE("side view of a car sees no far side") {
    const Mesh car = box_mesh({0, 0, 0}, {2.0, 0.9, 0.7});
    const auto pc = render_partial(car, look_at({0, -8, 0}, {0, 0, 0}), 5000, 1);
    CHECK(pc.size() > 100);
    for (const auto& p : pc.points) CHECK(std::abs(p.y() + 0.9) < 1e-9);
    CHECK(th::code_of([&] { render_partial(car, look_at({0, -8, 0}, {0, -20, 0}), 10, 1); }) == Errc::NoVisibleSurface);
  }

  TEST_CASE("jitter") {
    PointCloud src;
    for (int i = 0; i < 2000; ++i) src.push_back(Point3(i, 0, 0), -i);
    const auto copies = jitter_noise(src, 3, 0.0, 1);
    REQUIRE(copies.size() == 6000);
    for (std::size_t i = 0; i < copies.size(); ++i) CHECK(copies.points[i] == src.points[i / 3]);
    CHECK((*copies.powers)[5] == -1);

    const auto j = jitter_noise(src, 3, 0.05, 2);
    REQUIRE(j.size() == 6000);
    double sum = 0;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const double d = (j.points[i] - src.points[i / 3]).norm();
      CHECK(d <= 0.05 + 1e-12);
      sum += d;
    }
    CHECK(sum / 6000 == Approx(0.025).epsilon(0.05));
    CHECK_THROWS_AS(jitter_noise(src, 3, -1.0, 0), Error);
  }

  TEST_CASE("specularity crop removes only") {
    Rng rng(42);
    PointCloud pc;
    pc.points = th::random_points(rng, 3000);
    const auto same = specularity_crop(pc, 1, 0.0, 0.0, 1);
    CHECK(pc.size() - same.size() <= 1);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto out = specularity_crop(pc, 4, 0.1, 0.4, s);
      CHECK(out.size() < pc.size());
      std::size_t k = 0;
      for (const auto& p : out.points) {
        while (k < pc.size() && pc.points[k] != p) ++k;
        CHECK(k < pc.size());
      }
    }
    CHECK(th::code_of([&] { specularity_crop(pc, 1, 10.0, 10.0, 1); }) == Errc::AllPointsRemoved);
  }

  TEST_CASE("normalization") {
    const auto s = car_sample();
    const auto w = normalize(s, NormalizationMode::WithBBox);
    double r = 0;
    for (const auto& p : w.complete.points) r = std::max(r, p.norm());
    CHECK(r == Approx(1.0).epsilon(1e-12));
    CHECK(w.bbox.extents().x() == Approx(4.0).epsilon(1e-2));

    const auto n = normalize(s, NormalizationMode::NoBBox);
    CHECK((bounding_box(n.complete).extents() - bounding_box(s.complete).extents()).norm() < 1e-9);
    CHECK(centroid(n.complete).norm() < 1e-9);

    const auto back = denormalize(w);
    CHECK(th::max_dist(back.complete.points, s.complete.points) < 1e-9);
    CHECK(th::max_dist(back.partial.points, s.partial.points) < 1e-9);
    CHECK(parse_normalization_mode(to_string(NormalizationMode::NoBBox)) == NormalizationMode::NoBBox);
  }

  TEST_CASE("resample sizes") {
    Rng rng(43);
    PointCloud pc;
    pc.points = th::random_points(rng, 10);
    CHECK(resample(pc, 4, 1).size() == 4);
    const auto up = resample(pc, 25, 1);
    REQUIRE(up.size() == 25);
    CHECK(th::max_dist(std::vector<Point3>(up.points.begin(), up.points.begin() + 10), pc.points) == 0.0);
    CHECK(th::code_of([] { resample(PointCloud{}, 3, 1); }) == Errc::EmptyCloud);
  }
}

TEST_SUITE("dataset") {
  TEST_CASE("make_dataset contract") {
    std::vector<Mesh> meshes;
    for (const char* f : {"car/sedan.obj", "bike/road.obj", "human/standing.obj"}) meshes.push_back(load_obj(kMeshes / f));
    const std::vector<std::string> ids{"sedan", "road", "standing"};
    dataset::DatasetConfig cfg;
    cfg.seed = 5;
    const auto res = dataset::make_dataset(meshes, ids, cfg);
    CHECK(res.failures.empty());
    REQUIRE(res.samples.size() == 48);
    std::map<std::string, int> classes;
    std::map<dataset::Recipe, int> recipes;
    for (const auto& g : res.samples) {
      const auto& s = g.sample;
      CHECK_FALSE(s.partial.empty());
      CHECK(s.complete.size() == kCompletePoints);
      ++classes[s.class_label];
      ++recipes[g.key.recipe];
      double r = 0;
      for (const auto& p : s.complete.points) r = std::max(r, p.norm());
      CHECK(r <= 1.0 + 1e-9);
      for (const auto& p : s.partial.points) CHECK(p.norm() <= 1.25);
    }
    CHECK(classes == std::map<std::string, int>{{"bike", 16}, {"car", 16}, {"human", 16}});
    CHECK(recipes[dataset::Recipe::Synthetic] == 24);

    const auto again = dataset::make_dataset(meshes, ids, cfg);
    for (std::size_t i = 0; i < 48; i += 7) {
      CHECK(again.samples[i].id == res.samples[i].id);
      CHECK(io::encode_rfpc(again.samples[i].sample.partial) == io::encode_rfpc(res.samples[i].sample.partial));
      CHECK(io::encode_rfpc(again.samples[i].sample.complete) == io::encode_rfpc(res.samples[i].sample.complete));
    }
  }

  TEST_CASE("object rotations are yaw only") {
    Mesh tall = box_mesh({0, 0, 0}, {0.4, 0.3, 1.0});
    tall.class_label = "human";
    dataset::DatasetConfig cfg;
    cfg.per_object = 6;
    cfg.radar = false;
    cfg.mode = NormalizationMode::NoBBox;
    for (const auto& g : dataset::make_dataset({tall}, {"tall"}, cfg).samples) {
      double zmin = 1e9, zmax = -1e9;
      for (const auto& p : g.sample.complete.points) zmin = std::min(zmin, p.z()), zmax = std::max(zmax, p.z());
      CHECK(zmax - zmin == Approx(2.0).epsilon(1e-9));
      std::size_t on_top = 0;
      for (const auto& p : g.sample.complete.points) on_top += std::abs(p.z() - zmax) < 1e-9;
      CHECK(static_cast<double>(on_top) / kCompletePoints == Approx(0.24 / 6.44).epsilon(0.1));
    }
  }

  TEST_CASE("sample files round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "rfc_unit_ds";
    std::filesystem::remove_all(dir);
    dataset::SampleKey key{"car", "obj", dataset::Recipe::Radar, 3};
    CHECK(key.id(8) == "car/obj/sample_11");
    auto s = normalize(car_sample(), NormalizationMode::WithBBox);
    CHECK_FALSE(dataset::sample_exists(dir, key.id(8)));
    dataset::write_sample(dir, key.id(8), key, s);
    CHECK(dataset::sample_exists(dir, key.id(8)));
    const auto back = dataset::read_sample(dir, key.id(8));
    CHECK(back.class_label == "car");
    CHECK(th::max_dist(back.complete.points, s.complete.points) < 1e-5);
    dataset::write_manifest(dir, {{key.id(8), "car", "obj", dataset::Recipe::Radar}});
    const auto m = dataset::read_manifest(dir);
    REQUIRE(m.size() == 1);
    CHECK(m[0].recipe == dataset::Recipe::Radar);
    std::filesystem::remove_all(dir);
  }
}
