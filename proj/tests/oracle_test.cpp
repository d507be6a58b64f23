#include <cmath>

#include "doctest.h"
#include "censmte/error.hpp"
#include "censmte/oracle.hpp"
#include "support.hpp"

using namespace censmte;

namespace {

// Marginal integer masses straight from the joint table.
long long marginal(const DiscretePmf& p, int d, std::size_t idx) {
  long long m = 0;
  for (std::size_t i = 0; i < p.y1.size(); ++i)
    for (std::size_t j = 0; j < p.y0.size(); ++j)
      if ((d == 1 && i == idx) || (d == 0 && j == idx)) m += p.mass[i][j];
  return m;
}

double simpson(auto&& f, double a, double b, int panels = 2000) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("toy fixture reproduces the four headline numbers exactly") {
  auto r = runToyCheck();
  CHECK(r.pass);
  CHECK(r.dmte1 == 0.05);
  CHECK(r.dmte2 == 0.10);
  CHECK(r.medianQte == 7.0);
  CHECK(r.ate == 5.55);
}

TEST_CASE("toy marginals agree with direct enumeration of the joint table") {
  auto p = toyPmf();
  long long total = 0;
  for (const auto& row : p.mass)
    for (long long m : row) total += m;
  CHECK(total == p.denominator);
  for (int d = 0; d < 2; ++d)
    for (std::size_t i = 0; i < 5; ++i) CHECK(p.marginalMass(d, i) == marginal(p, d, i));
  // E[Y(1)] - E[Y(0)] with integer arithmetic: (1160 - 605) / 100
  long long e1 = 0, e0 = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    e1 += marginal(p, 1, i) * static_cast<long long>(p.y1[i]);
    e0 += marginal(p, 0, i) * static_cast<long long>(p.y0[i]);
  }
  CHECK(e1 == 1160);
  CHECK(e0 == 605);
}

TEST_CASE("a perturbed fixture fails the check") {
  auto p = toyPmf();
  p.mass[0][0] -= 1;
  p.mass[4][1] += 1;
  auto r = runToyCheck(p);
  CHECK_FALSE(r.pass);
}

TEST_CASE("fixture json round trip and validation") {
  auto p = toyPmf();
  auto q = pmfFromJson(pmfToJson(p));
  CHECK(q.mass == p.mass);
  CHECK(q.denominator == p.denominator);
  auto bad = pmfToJson(p);
  bad["denominator"] = 99;
  CHECK_THROWS_AS(pmfFromJson(bad), Error);
}

TEST_CASE("restricted means under a horizon") {
  auto b = bruteForceCurves(toyPmf(), {1.0}, {0.5}, 10.0);
  // Y(1) capped at 10: (20*1 + 20*2 + 60*10) / 100
  CHECK(b.restrictedMean[1] == doctest::Approx(6.6));
  CHECK(b.restrictedMean[0] == doctest::Approx(6.05));
}

TEST_CASE("reference oracle: exponential CDF, quantile and means") {
  auto s = referenceDgpSpec();
  for (double v : {0.1, 0.5, 0.9}) {
    for (int d = 0; d < 2; ++d) {
      const double rate = d ? 0.5 + 2.0 * v : 1.0 + v;
      CHECK(trueDmtr(s, d, 1.3, v) == doctest::Approx(1.0 - std::exp(-rate * 1.3)).epsilon(1e-14));
      CHECK(trueQmtr(s, d, 0.4, v) == doctest::Approx(-std::log(0.6) / rate).epsilon(1e-14));
      CHECK(trueRestrictedMean(s, d, v, INFINITY) == doctest::Approx(1.0 / rate).epsilon(1e-14));
      CHECK(trueRestrictedMean(s, d, v, 10.0) ==
            doctest::Approx((1.0 - std::exp(-rate * 10.0)) / rate).epsilon(1e-12));
    }
    CHECK(trueMte(s, v) == doctest::Approx(1.0 / (0.5 + 2 * v) - 1.0 / (1.0 + v)).epsilon(1e-14));
  }
}

TEST_CASE("dependent censoring: marginal CDF integrates the conditional one") {
  auto s = referenceDgpSpec();
  s.dependence = Dependence::kNegRegDep;
  s.kappa = 0.8;
  for (double y : {0.5, 1.5, 3.0}) {
    const double v = 0.4;
    const double direct = simpson([&](double c) { return trueConditionalDmtr(s, 1, y, v, c); }, 2.0, 10.0) / 8.0;
    CHECK(trueDmtr(s, 1, y, v) == doctest::Approx(direct).epsilon(1e-9));
    const double q = trueQmtr(s, 1, trueDmtr(s, 1, y, v), v);
    CHECK(q == doctest::Approx(y).epsilon(1e-8));
  }
  // rate grows with c, so the conditional CDF increases in c
  CHECK(trueConditionalDmtr(s, 0, 1.0, 0.5, 9.0) > trueConditionalDmtr(s, 0, 1.0, 0.5, 3.0));
}

TEST_CASE("spec json round trip and invalid specs") {
  auto s = referenceDgpSpec();
  s.censoring = CensoringLaw::kCohort;
  s.cohortValues = {3.0, 6.0, 9.0};
  s.levels = {{"a", 0.4, 0.0, 1.0}, {"b", 0.6, 0.1, 1.5}};
  auto back = dgpSpecFromJson(dgpSpecToJson(s));
  CHECK(dgpSpecToJson(back) == dgpSpecToJson(s));

  auto j = dgpSpecToJson(referenceDgpSpec());
  j["censoring"] = {{"law", "uniform"}, {"lo", 5.0}, {"hi", 3.0}};
  CHECK_THROWS_AS(dgpSpecFromJson(j), Error);
  auto k = dgpSpecToJson(referenceDgpSpec());
  k["dependence"] = {{"type", "sideways"}};
  CHECK_THROWS_AS(dgpSpecFromJson(k), Error);
}

TEST_CASE("simulation is consistent with its latent draws") {
  auto s = referenceDgpSpec();
  auto sim = simulate(s, 20000, 77);
  const auto& t = sim.table;
  const auto& l = sim.latent;
  REQUIRE(t.size() == 20000);
  double treated = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& o = t[i];
    CHECK(o.d == (l.p[i] >= l.v[i] ? 1 : 0));
    CHECK(l.p[i] == doctest::Approx(0.2 + 0.6 * o.z).epsilon(1e-14));
    CHECK(o.y == std::min(o.d ? l.y1[i] : l.y0[i], o.c));
    CHECK(o.c >= 2.0);
    CHECK(o.c <= 10.0);
    treated += o.d;
  }
  CHECK(treated / 20000.0 == doctest::Approx(0.5).epsilon(0.03));

  // P[Y(1) <= 1 | V near 0.3] against the closed form
  double hit = 0.0, count = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::abs(l.v[i] - 0.3) < 0.05) {
      count += 1.0;
      hit += l.y1[i] <= 1.0;
    }
  }
  const double truth = trueDmtr(s, 1, 1.0, 0.3);
  CHECK(std::abs(hit / count - truth) < 4.0 * std::sqrt(truth * (1 - truth) / count) + 0.01);
}

TEST_CASE("simulation is a pure function of the seed") {
  auto s = referenceDgpSpec();
  s.clusters = 13;
  auto a = simulate(s, 9000, 5, 1);
  auto b = simulate(s, 9000, 5, 4);
  auto c = simulate(s, 9000, 6, 1);
  bool same = true, differs = false;
  for (std::size_t i = 0; i < a.table.size(); ++i) {
    same = same && a.table[i].y == b.table[i].y && a.table[i].z == b.table[i].z &&
           a.table[i].cluster == b.table[i].cluster;
    differs = differs || a.table[i].y != c.table[i].y;
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("degenerate censoring leaves durations uncensored") {
  auto s = referenceDgpSpec();
  s.censoring = CensoringLaw::kDegenerate;
  s.c0 = 50.0;
  auto sim = simulate(s, 5000, 3);
  std::size_t censored = 0;
  for (const auto& o : sim.table.rows()) censored += o.y == o.c;
  CHECK(censored == 0);
}

TEST_CASE("the positive-MTE rule is the best union of cells") {
  auto s = referenceDgpSpec();
  auto rule = positiveMteRule(s);
  REQUIRE(rule.size() == 1);
  CHECK(rule[0].lo == 0.0);
  CHECK(rule[0].hi == doctest::Approx(0.5).epsilon(1e-12));
  // integral of 1/(0.5+2v) - 1/(1+v) over (0, 1/2) = log(4/3) / 2
  CHECK(policyValue(s, rule) == doctest::Approx(0.5 * std::log(4.0 / 3.0)).epsilon(1e-13));
  auto search = searchPolicies(s, 20);
  CHECK(search.optimal);
  CHECK(search.bestMask == 0x3FFu);
  CHECK(search.bestValue == doctest::Approx(search.thresholdValue).epsilon(1e-13));
}

TEST_CASE("policy value has no closed form under dependence") {
  auto s = referenceDgpSpec();
  s.dependence = Dependence::kNegRegDep;
  s.kappa = 0.5;
  CHECK_THROWS_AS(policyValue(s, {{0.0, 0.5}}), Error);
}
