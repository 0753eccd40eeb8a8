#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "clvq/source.hpp"

using namespace clvq;

TEST_CASE("gaussian rate-distortion reference", "[source]") {
  CHECK(gaussian_rd(0.0) == 1.0);
  CHECK(gaussian_rd(1.0) == 0.25);
  CHECK(gaussian_rd(0.5) == 0.5);
  CHECK_THROWS_AS(gaussian_rd(-0.1), std::invalid_argument);

  double prev = gaussian_rd(0.0);
  for (double r = 0.1; r <= 4.0; r += 0.1) {
    const double cur = gaussian_rd(r);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("total source variance", "[source]") {
  CHECK(source_variance_total({SourceKind::gaussian_iid, 2}) == 2.0);
  CHECK(source_variance_total({SourceKind::gaussian_iid, 1}) == 1.0);
  CHECK(source_variance_total({SourceKind::uniform_iid, 2}) ==
        Catch::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(source_variance_total({SourceKind::gaussian_iid, 0}),
                  std::invalid_argument);
}

TEST_CASE("uniform draws stay inside the support", "[source]") {
  SampleStream stream({SourceKind::uniform_iid, 2}, 123);
  const Eigen::MatrixXd pts = stream.sample(10000);
  CHECK(pts.minCoeff() >= -1.0);
  CHECK(pts.maxCoeff() <= 1.0);
}

TEST_CASE("streams are pure functions of (source, seed, counter)", "[source]") {
  const SourceModel model{SourceKind::gaussian_iid, 3};

  SampleStream a(model, 99), b(model, 99);
  CHECK(a.sample(257) == b.sample(257));

  // splitting the draw does not change the sequence
  SampleStream c(model, 99);
  Eigen::MatrixXd first = c.sample(100), second = c.sample(157);
  SampleStream d(model, 99);
  const Eigen::MatrixXd whole = d.sample(257);
  CHECK(whole.leftCols(100) == first);
  CHECK(whole.rightCols(157) == second);

  SampleStream e(model, 100);
  CHECK(e.sample(10) != SampleStream(model, 99).sample(10));
}

TEST_CASE("gaussian sample moments", "[source]") {
  SampleStream stream({SourceKind::gaussian_iid, 1}, 2024);
  const Eigen::MatrixXd pts = stream.sample(1000000);
  const double mean = pts.mean();
  const double var = (pts.array() - mean).square().mean();
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("uniform sample moments within 3 sigma", "[source]") {
  SampleStream stream({SourceKind::uniform_iid, 2}, 555);
  const long long n = 1000000;
  const Eigen::MatrixXd pts = stream.sample(n);
  for (int c = 0; c < 2; ++c) {
    const double mean = pts.row(c).mean();
    const double var = (pts.row(c).array() - mean).square().mean();
    // sd(mean) = sqrt(1/3)/sqrt(n); sd(var-hat) = sqrt(4/45)/sqrt(n)
    CHECK(std::abs(mean) < 3.0 * std::sqrt(1.0 / 3.0 / n));
    CHECK(std::abs(var - 1.0 / 3.0) < 3.0 * std::sqrt(4.0 / 45.0 / n));
  }
}
