// Error norms against closed-form values, FE-vs-FE comparison on nested
// meshes, and the run-configuration parser.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "doctest.h"
#include "ltn/config.hpp"
#include "ltn/errors.hpp"
#include "ltn/experiments.hpp"
#include "test_util.hpp"

using namespace ltn;

TEST_CASE("norms of simple differences have closed forms") {
  auto mesh =
      std::make_shared<Mesh>(uniformIntervalMesh(0.0, 1.0, 0.1, 0.0, 0.0));
  const FESpace space = buildSpace(mesh, SpaceKind::P1, allElems(*mesh));

  SUBCASE("u = ref gives zero") {
    const auto ref = [](const Vec2& p) { return 3.0 * p.x - 0.7; };
    const Eigen::VectorXd u = interpolate(space, ref);
    for (const NormKind nk : {NormKind::L1, NormKind::L2, NormKind::Linf})
      CHECK(errorNorm(space, u, ref, nk) <= 1e-13);
    CHECK(maxNodalError(space, u, ref) <= 1e-14);
  }

  SUBCASE("constant difference") {
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(space.numDofs(), -2.5);
    const auto zero = [](const Vec2&) { return 0.0; };
    CHECK(errorNorm(space, u, zero, NormKind::L1) == doctest::Approx(2.5));
    CHECK(errorNorm(space, u, zero, NormKind::L2) ==
          doctest::Approx(2.5));  // |c| sqrt(|domain|), domain measure 1
    CHECK(errorNorm(space, u, zero, NormKind::Linf) == doctest::Approx(2.5));
  }

  SUBCASE("single hat function") {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(space.numDofs());
    u[5] = 1.0;  // interior hat, support width 2h
    const auto zero = [](const Vec2&) { return 0.0; };
    const double h = 0.1;
    CHECK(errorNorm(space, u, zero, NormKind::L2) ==
          doctest::Approx(std::sqrt(2.0 * h / 3.0)).epsilon(1e-12));
    CHECK(errorNorm(space, u, zero, NormKind::L1) == doctest::Approx(h));
    CHECK(errorNorm(space, u, zero, NormKind::Linf) == doctest::Approx(1.0));
  }

  SUBCASE("region restriction") {
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(space.numDofs(), 1.0);
    const auto zero = [](const Vec2&) { return 0.0; };
    const double l2_half =
        errorNorm(space, u, zero, NormKind::L2, Region::interval(0.0, 0.25));
    CHECK(l2_half == doctest::Approx(std::sqrt(0.25)));
    // Disjoint-union recombination.
    const double a =
        errorNorm(space, u, zero, NormKind::L2, Region::interval(0.0, 0.25));
    const double b =
        errorNorm(space, u, zero, NormKind::L2, Region::interval(0.25, 1.0));
    CHECK(combineNorms(NormKind::L2, a, b) == doctest::Approx(1.0));
    CHECK(combineNorms(NormKind::L1, 0.25, 0.75) == doctest::Approx(1.0));
    CHECK(combineNorms(NormKind::Linf, 0.3, 0.8) == doctest::Approx(0.8));
  }
}

TEST_CASE("2D constant difference over the square") {
  auto mesh = std::make_shared<Mesh>(
      structuredTriangleMesh(-1.0, 1.0, -1.0, 1.0, 0.25, 0.0));
  const FESpace space = buildSpace(mesh, SpaceKind::P1, allElems(*mesh));
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(space.numDofs(), 0.5);
  const auto zero = [](const Vec2&) { return 0.0; };
  CHECK(errorNorm(space, u, zero, NormKind::L2) ==
        doctest::Approx(0.5 * 2.0));  // |c| sqrt(4)
  CHECK(errorNorm(space, u, zero, NormKind::L1) == doctest::Approx(0.5 * 4.0));
}

TEST_CASE("FE-vs-FE norm on nested meshes") {
  auto coarse_mesh =
      std::make_shared<Mesh>(uniformIntervalMesh(0.0, 1.0, 0.2, 0.0, 0.0));
  auto fine_mesh =
      std::make_shared<Mesh>(uniformIntervalMesh(0.0, 1.0, 0.05, 0.0, 0.0));
  const FESpace coarse = buildSpace(coarse_mesh, SpaceKind::P1, allElems(*coarse_mesh));
  const FESpace fine = buildSpace(fine_mesh, SpaceKind::P1, allElems(*fine_mesh));
  const auto lin = [](const Vec2& p) { return 2.0 * p.x - 1.0; };
  const Eigen::VectorXd uc = interpolate(coarse, lin);
  const Eigen::VectorXd uf = interpolate(fine, lin);
  // Same linear function on both spaces: difference is zero.
  CHECK(errorNormFE(coarse, uc, fine, uf, NormKind::L2) <= 1e-13);
  // Shifted coarse function: constant difference.
  const Eigen::VectorXd uc_shift = uc.array() + 1.0;
  CHECK(errorNormFE(coarse, uc_shift, fine, uf, NormKind::L2) ==
        doctest::Approx(1.0).epsilon(1e-12));
  // Region restriction applies before point location, so a fine mesh that
  // extends past the coarse one can still be compared on the common part.
  auto wide_mesh =
      std::make_shared<Mesh>(uniformIntervalMesh(0.0, 2.0, 0.05, 0.0, 0.0));
  const FESpace wide = buildSpace(wide_mesh, SpaceKind::P1, allElems(*wide_mesh));
  const Eigen::VectorXd uw = interpolate(wide, lin);
  CHECK(errorNormFE(coarse, uc, wide, uw, NormKind::L2,
                    Region::interval(0.0, 1.0)) <= 1e-13);
}

TEST_CASE("config parsing and schema") {
  const std::string text =
      "# a comment\n"
      "h = 0.05\n"
      "name = \"patch run\"  # trailing comment\n"
      "deltas = [1, 0.5, 0.25]\n"
      "threads = 2\n"
      "gate = true\n"
      "schema_version = 1\n";
  Config cfg = Config::fromText(text);
  CHECK(cfg.has("h"));
  CHECK(!cfg.has("missing"));
  CHECK(cfg.getDouble("h", 1.0) == doctest::Approx(0.05));
  CHECK(cfg.getString("name", "") == "patch run");
  CHECK(cfg.getInt("threads", 1) == 2);
  CHECK(cfg.getBool("gate", false));
  const auto deltas = cfg.getDoubleList("deltas", {});
  REQUIRE(deltas.size() == 3);
  CHECK(deltas[1] == doctest::Approx(0.5));
  // Defaults are recorded and reported.
  CHECK(cfg.getDouble("tolerance", 0.125) == doctest::Approx(0.125));
  const std::string resolved = cfg.resolvedText();
  CHECK(resolved.find("tolerance") != std::string::npos);
  CHECK(resolved.find("h = 0.05") != std::string::npos);

  // Validation: every explicit key must be known.
  CHECK_NOTHROW(cfg.validate({"h", "name", "deltas", "threads", "gate"}));
  CHECK_THROWS_AS(cfg.validate({"h", "name"}), Error);
  Config bad = Config::fromText("schema_version = 7\n");
  CHECK_THROWS_AS(bad.validate({}), Error);

  // set() overrides.
  cfg.set("h", "0.5");
  CHECK(cfg.getDouble("h", 1.0) == doctest::Approx(0.5));
}

TEST_CASE("config from file") {
  const std::filesystem::path dir = test_util::freshDir("config");
  const std::string path = (dir / "run.cfg").string();
  {
    std::ofstream out(path);
    out << "h = 0.1\nkernel = \"fractional\"\n";
  }
  Config cfg = Config::fromFile(path);
  CHECK(cfg.getDouble("h", 0.0) == doctest::Approx(0.1));
  CHECK(cfg.getString("kernel", "") == "fractional");
  CHECK_THROWS_AS(Config::fromFile((dir / "absent.cfg").string()), Error);
}
