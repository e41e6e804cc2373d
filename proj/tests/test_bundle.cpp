#include "hym/bundle.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace hym;
using Catch::Approx;

TEST_CASE("make_bundle basics and degree") {
  CHECK_THROWS_AS(make_bundle({}), std::invalid_argument);

  auto triv = make_bundle({0});
  CHECK(triv.rank() == 1);
  CHECK(degree(triv) == 0);

  auto b = make_bundle({1, -1});
  CHECK(b.rank() == 2);
  CHECK(degree(b) == 0);

  CHECK(degree(make_bundle({2, 2})) == 4);
  CHECK(degree(make_bundle({3})) == 3);
  CHECK(degree(make_bundle({2, 0, -1})) == 1);
}

TEST_CASE("transition matrix is diagonal, invertible, and inverts under z -> 1/z") {
  auto b = make_bundle({2, 0, -1});
  Complex z(0.7, -0.4);
  Eigen::MatrixXcd g = b.transition(z);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(std::abs(g(i, j)) == 0.0);
  CHECK(std::abs(g(0, 0) - std::pow(z, -2)) < 1e-14);
  CHECK(std::abs(g(1, 1) - 1.0) < 1e-14);
  CHECK(std::abs(g(2, 2) - z) < 1e-14);

  Eigen::MatrixXcd gi = b.transition(1.0 / z);
  CHECK((g * gi - Eigen::MatrixXcd::Identity(3, 3)).norm() < 1e-12);
  CHECK_THROWS_AS(b.transition(0.0), std::invalid_argument);
}

TEST_CASE("make_filtration validates nesting and weights") {
  auto b = make_bundle({1, -1});

  auto f = make_filtration(b, {{0, 1}, {0}}, {1.0, 0.0});
  CHECK(f.numStages() == 2);
  CHECK(f.quotientRank(0) == 1);
  CHECK(f.quotientRank(1) == 1);
  // F_1 = E/E_2 = O(-1), F_2 = E_2 = O(1).
  CHECK(f.quotientDegree(0) == -1);
  CHECK(f.quotientDegree(1) == 1);
  CHECK(f.weightGap() == Approx(1.0));

  auto b3 = make_bundle({2, 1, 0});
  auto f3 = make_filtration(b3, {{0, 1, 2}, {0, 1}, {0}}, {2.0, 1.0, 0.0});
  for (int i = 0; i < 3; ++i) CHECK(f3.quotientRank(i) == 1);

  CHECK_THROWS_AS(make_filtration(b, {{0, 1}, {0}}, {0.0, 1.0}),
                  std::invalid_argument);  // weights must strictly decrease
  CHECK_THROWS_AS(make_filtration(b, {{0}, {0}}, {1.0, 0.0}),
                  std::invalid_argument);  // first stage must be everything
  CHECK_THROWS_AS(make_filtration(b, {{0, 1}, {0, 1}}, {1.0, 0.0}),
                  std::invalid_argument);  // strict nesting
  CHECK_THROWS_AS(make_filtration(b, {{0, 1}, {5}}, {1.0, 0.0}),
                  std::invalid_argument);  // index out of range
}

TEST_CASE("subbundle slopes and slope additivity") {
  auto b = make_bundle({1, -1});
  auto f = make_filtration(b, {{0, 1}, {0}}, {1.0, 0.0});
  auto s = subbundle_slopes(f);
  // mu_E, mu_{E_2}, mu_{F_1}, mu_{F_2}
  CHECK(s[0] == Approx(0.0));
  CHECK(s[1] == Approx(1.0));
  CHECK(s[2] == Approx(-1.0));
  CHECK(s[3] == Approx(1.0));

  auto b22 = make_bundle({2, 2});
  auto f22 = make_filtration(b22, {{0, 1}, {0}}, {1.0, 0.0});
  auto s22 = subbundle_slopes(f22);
  CHECK(s22[1] == Approx(2.0));
  CHECK(s22[0] == Approx(2.0));

  auto b10m1 = make_bundle({1, 0, -1});
  auto fd = make_filtration(b10m1, {{0, 1, 2}, {0, 1}}, {1.0, 0.0});
  auto sd = subbundle_slopes(fd);
  CHECK(sd[1] == Approx(0.5));  // destabilizing: mu_{E_2} > mu_E = 0
  CHECK(sd[0] == Approx(0.0));

  // rk(E) mu_E = rk(E_2) mu_{E_2} + rk(F) mu_F for two-stage filtrations.
  for (auto& spl : std::vector<std::vector<int>>{{1, -1}, {2, 2}, {3, 0, -2}}) {
    auto bb = make_bundle(spl);
    std::vector<int> all(spl.size());
    for (size_t i = 0; i < spl.size(); ++i) all[i] = static_cast<int>(i);
    auto ff = make_filtration(bb, {all, {0}}, {1.0, 0.0});
    auto ss = subbundle_slopes(ff);
    double lhs = bb.rank() * ss[0];
    double rhs = 1 * ss[1] + (bb.rank() - 1) * ss[2];
    CHECK(lhs == Approx(rhs).margin(1e-12));
  }
}

TEST_CASE("stability classifier on splitting integers") {
  // Equal splitting: every coordinate subbundle slope equals mu_E.
  auto b = make_bundle({2, 2, 2});
  double mu = static_cast<double>(degree(b)) / b.rank();
  for (int i = 0; i < b.rank(); ++i) CHECK(b.splitting[i] == Approx(mu));

  // Distinct splitting: the max-k line is destabilizing.
  auto u = make_bundle({3, 1, 0});
  double muU = static_cast<double>(degree(u)) / u.rank();
  int kmax = *std::max_element(u.splitting.begin(), u.splitting.end());
  CHECK(kmax > muU);
}
