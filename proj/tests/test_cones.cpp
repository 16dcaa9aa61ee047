#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rf/cones.hpp"

using namespace rf;

namespace {

std::mt19937_64 rng(20240817);

Vec randomVec(int n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

}  // namespace

TEST_CASE("hermitian coordinate round trip and inner product") {
  for (int d : {2, 3, 5}) {
    for (int rep = 0; rep < 20; ++rep) {
      const Vec v = randomVec(d * d);
      const CMat h = vecToHerm(v);
      CHECK((h - h.adjoint()).norm() < 1e-14);
      CHECK((hermToVec(h) - v).norm() < 1e-13);
      const Vec w = randomVec(d * d);
      const double dot_coords = v.dot(w);
      const double dot_hs = (vecToHerm(v) * vecToHerm(w)).trace().real();
      CHECK(dot_coords == doctest::Approx(dot_hs).epsilon(1e-12));
    }
  }
}

TEST_CASE("orthant membership at the boundary") {
  const auto cone = ConeSpec::orthant(2);
  Vec x(2);
  x << 1, 0;
  CHECK(member(cone, x, 1e-9));
}

TEST_CASE("psd membership rejects an indefinite matrix") {
  // [[1,2],[2,1]] has eigenvalues 3 and -1
  const auto cone = ConeSpec::psd(2);
  CMat h(2, 2);
  h << 1, 2, 2, 1;
  const Vec x = hermToVec(h);
  CHECK_FALSE(member(cone, x, 1e-9));
  CHECK(hermEigenvalues(x).minCoeff() == doctest::Approx(-1.0));
  CHECK(hermEigenvalues(x).maxCoeff() == doctest::Approx(3.0));
}

TEST_CASE("generated membership by explicit combination") {
  Mat g(2, 2);
  g << 1, 1, 0, 1;  // generators (1,0), (1,1)
  const auto cone = ConeSpec::generated(g);
  Vec x(2);
  x << 2, 1;  // 1*(1,0) + 1*(1,1)
  CHECK(member(cone, x, 1e-9));
  Vec y(2);
  y << -1, 0.5;
  CHECK_FALSE(member(cone, y, 1e-9));
}

TEST_CASE("dual membership") {
  Mat g(2, 2);
  g << 1, 0, 0, 1;
  const auto axes = ConeSpec::generated(g);
  Vec e(2);
  e << 1, 1;
  CHECK(dualMember(axes, e, 1e-9));

  Mat g2(2, 2);
  g2 << 1, 1, 0, 1;
  const auto cone = ConeSpec::generated(g2);
  Vec f(2);
  f << 0, -1;  // <f,(1,1)> = -1
  CHECK_FALSE(dualMember(cone, f, 1e-9));

  const auto psd = ConeSpec::psd(2);
  CHECK(dualMember(psd, hermToVec(CMat::Identity(2, 2)), 1e-9));
}

TEST_CASE("projection onto orthant and psd") {
  Vec x(3);
  x << 1, -2, 0;
  Vec px = project(ConeSpec::orthant(3), x);
  CHECK(px(0) == 1.0);
  CHECK(px(1) == 0.0);
  CHECK(px(2) == 0.0);

  CMat diag(2, 2);
  diag << 1, 0, 0, -1;
  Vec pd = project(ConeSpec::psd(2), hermToVec(diag));
  CMat expect(2, 2);
  expect << 1, 0, 0, 0;
  CHECK((vecToHerm(pd) - expect).norm() < 1e-12);

  CMat paulix(2, 2);
  paulix << 0, 1, 1, 0;
  Vec ppx = project(ConeSpec::psd(2), hermToVec(paulix));
  CMat expect2(2, 2);
  expect2 << 0.5, 0.5, 0.5, 0.5;
  CHECK((vecToHerm(ppx) - expect2).norm() < 1e-12);
}

TEST_CASE("projection on generated cones is unsupported") {
  Mat g(2, 1);
  g << 1, 1;
  CHECK_THROWS_AS(project(ConeSpec::generated(g), Vec::Ones(2)), UnsupportedOperation);
}

TEST_CASE("projection idempotence") {
  for (int rep = 0; rep < 50; ++rep) {
    const Vec x = randomVec(9, 2.0);
    const auto cone = ConeSpec::psd(3);
    const Vec p1 = project(cone, x);
    const Vec p2 = project(cone, p1);
    CHECK((p1 - p2).norm() < 1e-12);

    const Vec y = randomVec(6, 2.0);
    const auto orth = ConeSpec::orthant(6);
    CHECK((project(orth, project(orth, y)) - project(orth, y)).norm() == 0.0);
  }
}

TEST_CASE("self-duality of orthant and psd on random vectors") {
  for (int rep = 0; rep < 1000; ++rep) {
    const Vec x = randomVec(4);
    const double tol = defaultMemberTol(x);
    CHECK(member(ConeSpec::orthant(4), x, tol) == dualMember(ConeSpec::orthant(4), x, tol));
    CHECK(member(ConeSpec::psd(2), x, tol) == dualMember(ConeSpec::psd(2), x, tol));
  }
}

TEST_CASE("moreau decomposition for self-dual variants") {
  for (int rep = 0; rep < 200; ++rep) {
    for (const auto& cone : {ConeSpec::orthant(9), ConeSpec::psd(3)}) {
      const Vec x = randomVec(9, 3.0);
      const Vec p = project(cone, x);
      const Vec pd = project(cone, -x);  // self-dual: project onto K* of -x
      CHECK((x - (p - pd)).norm() < 1e-9);
      CHECK(std::abs(p.dot(pd)) < 1e-9);
    }
  }
}

TEST_CASE("generated-cone duality against brute-force sign checks") {
  std::uniform_int_distribution<int> dims(2, 4), counts(2, 6);
  for (int rep = 0; rep < 100; ++rep) {
    const int d = dims(rng);
    const int k = counts(rng);
    Mat g(d, k);
    for (int j = 0; j < k; ++j) g.col(j) = randomVec(d).cwiseAbs() + Vec::Constant(d, 0.05);
    const auto cone = ConeSpec::generated(g);
    for (int t = 0; t < 10; ++t) {
      const Vec e = randomVec(d);
      bool brute = true;
      for (int j = 0; j < k; ++j) brute = brute && g.col(j).dot(e) >= -1e-9;
      CHECK(dualMember(cone, e, 1e-9) == brute);
    }
  }
}

TEST_CASE("cone invariants: zero generators and non-pointed cones rejected") {
  Mat z(2, 1);
  z << 0, 0;
  CHECK_THROWS_AS(ConeSpec::generated(z), ContractViolation);

  Mat line(2, 2);
  line << 1, -1, 0, 0;  // contains +/- e1
  CHECK_THROWS_AS(ConeSpec::generated(line), ContractViolation);
}

TEST_CASE("non-full-dimensional generated cone warns but is accepted") {
  std::string got;
  auto old = setWarnHandler([&](const std::string& m) { got = m; });
  Mat g(3, 1);
  g << 1, 1, 0;
  const auto cone = ConeSpec::generated(g);
  setWarnHandler(old);
  CHECK(cone.ambientDim() == 3);
  CHECK(got.find("full-dimensional") != std::string::npos);
}

TEST_CASE("dimension mismatch raises contract violation") {
  CHECK_THROWS_AS(member(ConeSpec::orthant(3), Vec::Ones(2), 1e-9), ContractViolation);
  Vec bad(2);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(member(ConeSpec::orthant(2), bad, 1e-9), ContractViolation);
}

TEST_CASE("nnls solves small nonnegative systems") {
  for (int rep = 0; rep < 50; ++rep) {
    Mat a = Mat::Random(5, 3);
    Vec lambda_true = Vec::Random(3).cwiseAbs();
    Vec b = a * lambda_true;
    Vec lambda = nnls(a, b);
    CHECK((a * lambda - b).norm() < 1e-8);
  }
}

TEST_CASE("product cone projection and distances") {
  ProductCone pc;
  pc.free_dim = 2;
  pc.factors = {ConeSpec::orthant(2), ConeSpec::psd(2)};
  Vec x = randomVec(pc.ambientDim(), 2.0);
  const Vec p = pc.project(x);
  CHECK((p.head(2) - x.head(2)).norm() == 0.0);
  CHECK(pc.distance(p) < 1e-12);
  const Vec pd = pc.projectDual(x);
  CHECK(pd.head(2).norm() == 0.0);
  CHECK(pc.dualDistance(pd) < 1e-12);
}
