#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "clvq/arrangement.hpp"
#include "clvq/genetic.hpp"

using namespace clvq;

namespace {

Arrangement make(std::initializer_list<std::initializer_list<double>> rows,
                 std::initializer_list<double> offsets) {
  const int k = static_cast<int>(rows.size());
  const int d = static_cast<int>(rows.begin()->size());
  Eigen::MatrixXd V(k, d);
  Eigen::VectorXd t(k);
  int j = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (double v : row) V(j, c++) = v;
    ++j;
  }
  j = 0;
  for (double v : offsets) t(j++) = v;
  return Arrangement(V, t);
}

Eigen::Vector2d pt(double x, double y) { return Eigen::Vector2d(x, y); }

const Arrangement kAxis2 = make({{1, 0}, {0, 1}}, {0, 0});
// x = 0, y = 0, x + y = 1: three lines in general position
const Arrangement kGp3 = make({{1, 0}, {0, 1}, {1, 1}}, {0, 0, -1});

}  // namespace

TEST_CASE("covector sign patterns", "[arrangement]") {
  const Arrangement line = make({{1, 0}}, {0});
  CHECK(covector(line, pt(0, 0), 1e-9) == Covector{0});
  CHECK(covector(line, pt(2, 5), 1e-9) == Covector{+1});
  CHECK(covector(kAxis2, pt(-1, 3), 1e-9) == Covector{-1, +1});

  // tolerance scales with the row norm
  const Arrangement scaled = make({{1000, 0}}, {0});
  CHECK(covector(scaled, pt(1e-10, 0), 1e-9) == Covector{0});
  CHECK(covector(scaled, pt(1e-8, 0), 1e-9) == Covector{+1});
}

TEST_CASE("strict labels and the boundary tie-break", "[arrangement]") {
  const RegionLabel l = label(kAxis2, pt(-1, 3));
  CHECK(l.sign(0) == -1);
  CHECK(l.sign(1) == +1);
  CHECK(l.to_string() == "-+");
  CHECK(RegionLabel::from_string("-+") == l);

  // exactly on the first hyperplane: maps to +1
  CHECK(label(kAxis2, pt(0, -2)).sign(0) == +1);

  // permuting rows permutes label coordinates identically
  const Arrangement swapped = make({{0, 1}, {1, 0}}, {0, 0});
  const RegionLabel ls = label(swapped, pt(-1, 3));
  CHECK(ls.sign(0) == l.sign(1));
  CHECK(ls.sign(1) == l.sign(0));
}

TEST_CASE("region-count bounds", "[arrangement]") {
  CHECK(max_regions(2, 3) == 7);
  CHECK(max_regions(3, 5) == 26);
  for (int m = 1; m <= 5; ++m)
    for (int n = 0; n <= m; ++n)
      CHECK(max_regions(m, n) == (std::uint64_t{1} << n));

  CHECK(max_regions_central(1, 2) == 2);
  CHECK(max_regions_central(3, 2) == 6);
  CHECK(max_regions_central(2, 2) == 4);
  for (int m = 1; m <= 6; ++m)
    for (int n = 1; n <= 6; ++n)
      CHECK(max_regions_central(n, m) <= max_regions(m, n));

  CHECK(max_regions_parallel(2, 2, 2) == 9);
  for (int m = 1; m <= 5; ++m)
    for (int l = 1; l <= 5; ++l)
      CHECK(max_regions_parallel(m, l, 1) == max_regions(m, l));
  for (int l = 1; l <= 4; ++l) {
    std::uint64_t pow = 1;
    for (int i = 0; i < l; ++i) pow *= 3;
    CHECK(max_regions_parallel(l + 1, l, 2) == pow);  // m >= l saturates
  }
}

TEST_CASE("general position detection", "[arrangement]") {
  const Arrangement parallel = make({{1, 0}, {1, 0}}, {0, 1});
  CHECK_FALSE(is_general_position(parallel, 1e-9));

  const Arrangement concurrent = make({{1, 0}, {0, 1}, {1, 1}}, {0, 0, 0});
  CHECK_FALSE(is_general_position(concurrent, 1e-9));

  CHECK(is_general_position(kGp3, 1e-9));

  SampleStream stream({SourceKind::gaussian_iid, 2}, 31337);
  const Arrangement random3 = random_init({SourceKind::gaussian_iid, 2}, 3, stream);
  CHECK(is_general_position(random3, 1e-9));
}

TEST_CASE("sampled region enumeration", "[arrangement]") {
  const Arrangement central = make({{1, 0}}, {0});
  SampleStream s1({SourceKind::gaussian_iid, 2}, 1);
  const auto halves = enumerate_regions(central, s1, 100000);
  REQUIRE(halves.size() == 2);
  for (const auto& [l, mass] : halves) CHECK(mass == Catch::Approx(0.5).margin(0.01));

  SampleStream s2({SourceKind::gaussian_iid, 2}, 2);
  CHECK(enumerate_regions(kGp3, s2, 200000).size() == 7);

  const Arrangement strips =
      make({{1, 0}, {1, 0}, {1, 0}}, {-0.5, 0.0, 0.5});
  SampleStream s3({SourceKind::uniform_iid, 2}, 3);
  const auto bands = enumerate_regions(strips, s3, 100000);
  CHECK(bands.size() == 4);
  double total = 0.0;
  for (const auto& [l, mass] : bands) total += mass;
  CHECK(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("exact planar enumeration", "[arrangement]") {
  CHECK(enumerate_regions_exact_2d(kGp3).size() == 7);
  CHECK(enumerate_regions_exact_2d(make({{1, 0}}, {0})).size() == 2);
  CHECK(enumerate_regions_exact_2d(make({{1, 0}, {1, 0}}, {0, 1})).size() == 3);
  CHECK(enumerate_regions_exact_2d(kAxis2).size() == 4);

  // concurrent lines fall short of the bound
  CHECK(enumerate_regions_exact_2d(make({{1, 0}, {0, 1}, {1, 1}}, {0, 0, 0}))
            .size() == 6);
}

TEST_CASE("exact enumeration dominates sampling and meets the GP bound",
          "[arrangement]") {
  for (int i = 0; i < 20; ++i) {
    const int k = 1 + i % 5;
    SampleStream init({SourceKind::gaussian_iid, 2}, 7000 + i);
    const Arrangement arr = random_init({SourceKind::gaussian_iid, 2}, k, init);
    const std::set<RegionLabel> exact = enumerate_regions_exact_2d(arr);

    CHECK(exact.size() <= max_regions(2, k));
    if (is_general_position(arr, 1e-9))
      CHECK(exact.size() == max_regions(2, k));

    SampleStream mc({SourceKind::gaussian_iid, 2}, 8000 + i);
    for (const auto& [l, mass] : enumerate_regions(arr, mc, 20000))
      CHECK(exact.count(l) == 1);
  }
}

TEST_CASE("label equals the zero-free covector off the boundary",
          "[arrangement]") {
  for (int i = 0; i < 20; ++i) {
    SampleStream init({SourceKind::gaussian_iid, 3}, 100 + i);
    const Arrangement arr = random_init({SourceKind::gaussian_iid, 3}, 4, init);
    SampleStream pts({SourceKind::gaussian_iid, 3}, 200 + i);
    for (int p = 0; p < 500; ++p) {
      const Eigen::VectorXd x = pts.next();
      const Covector cov = covector(arr, x, 1e-12);
      const RegionLabel lab = label(arr, x);
      for (int j = 0; j < arr.resolution(); ++j)
        if (cov[j] != 0) CHECK(cov[j] == lab.sign(j));
    }
  }
}

TEST_CASE("arrangement validation", "[arrangement]") {
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(1, 2);
  Eigen::VectorXd t = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(Arrangement(V, t), std::invalid_argument);
  CHECK_THROWS_AS(label(kAxis2, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}
