#include "censmte/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "censmte/error.hpp"
#include "censmte/parallel.hpp"
#include "censmte/rng.hpp"

namespace censmte {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stream ids: one per simulated variable.
enum Stream : std::uint64_t {
  kStreamV = 1,
  kStreamZ = 2,
  kStreamC = 3,
  kStreamY0 = 4,
  kStreamY1 = 5,
  kStreamX = 6,
  kStreamMix = 7,
  kStreamCluster = 8,
};

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidSpec, what); }

const char* lawName(CensoringLaw law) {
  switch (law) {
    case CensoringLaw::kDegenerate: return "degenerate";
    case CensoringLaw::kUniform: return "uniform";
    case CensoringLaw::kCohort: return "cohort";
  }
  return "?";
}

const char* dependenceName(Dependence dep) {
  switch (dep) {
    case Dependence::kIndependent: return "independent";
    case Dependence::kNegRegDep: return "negRegDep";
    case Dependence::kRelaxed: return "relaxed";
  }
  return "?";
}

// Composite Simpson rule on [a, b] with an even number of panels.
template <class F>
double simpson(F&& f, double a, double b, int panels = 2000) {
  const double h = (b - a) / panels;
  double acc = f(a) + f(b);
  for (int i = 1; i < panels; ++i) acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// E over the censoring law of g(c).
template <class G>
double overCensoring(const DgpSpec& s, G&& g) {
  switch (s.censoring) {
    case CensoringLaw::kDegenerate: return g(s.c0);
    case CensoringLaw::kUniform:
      return simpson(g, s.cLo, s.cHi) / (s.cHi - s.cLo);
    case CensoringLaw::kCohort: {
      double acc = 0.0;
      for (double c : s.cohortValues) acc += g(c);
      return acc / static_cast<double>(s.cohortValues.size());
    }
  }
  return 0.0;
}

double censoringMin(const DgpSpec& s) {
  switch (s.censoring) {
    case CensoringLaw::kDegenerate: return s.c0;
    case CensoringLaw::kUniform: return s.cLo;
    case CensoringLaw::kCohort: return *std::min_element(s.cohortValues.begin(), s.cohortValues.end());
  }
  return 0.0;
}

// Point-mass probability at zero for the relaxed design, given C = c.
double relaxedMass(const DgpSpec& s, double c) {
  if (s.dependence != Dependence::kRelaxed) return 0.0;
  const double range = s.censoringRange();
  if (!(range > 0.0)) return 0.0;
  return s.bbar * (c - censoringMin(s)) / range;
}

double relaxedMeanMass(const DgpSpec& s) {
  if (s.dependence != Dependence::kRelaxed || !(s.censoringRange() > 0.0)) return 0.0;
  return s.bbar * (s.censoringMean() - censoringMin(s)) / s.censoringRange();
}

double rateAt(const DgpSpec& s, int d, double v, double c, int x) {
  double r = s.arm[d].rate(v) * s.levels[static_cast<std::size_t>(x)].rateScale;
  if (s.dependence == Dependence::kNegRegDep) r *= 1.0 + s.kappa * s.centeredPosition(c);
  return r;
}

double baseRate(const DgpSpec& s, int d, double v, int x) {
  return s.arm[d].rate(v) * s.levels[static_cast<std::size_t>(x)].rateScale;
}

void checkLevel(const DgpSpec& s, int x) {
  if (x < 0 || static_cast<std::size_t>(x) >= s.levels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "covariate level out of range", {{"x", x}});
  }
}

}  // namespace

void DgpSpec::validate() const {
  for (int d = 0; d < 2; ++d) {
    if (!(arm[d].a > 0.0) || !(arm[d].b >= 0.0)) invalid("arm rates need a > 0 and b >= 0");
  }
  if (!(zHi >= zLo)) invalid("instrument range is reversed");
  if (instrument == InstrumentLaw::kDeciders && deciders < 2) invalid("need at least two deciders");
  switch (censoring) {
    case CensoringLaw::kDegenerate:
      if (!(c0 >= 0.0) || !std::isfinite(c0)) invalid("degenerate censoring needs c0 >= 0");
      break;
    case CensoringLaw::kUniform:
      if (!(cLo >= 0.0) || !(cHi > cLo) || !std::isfinite(cHi)) invalid("uniform censoring needs 0 <= lo < hi");
      break;
    case CensoringLaw::kCohort:
      if (cohortValues.empty()) invalid("cohort censoring needs at least one value");
      for (double c : cohortValues) {
        if (!(c >= 0.0) || !std::isfinite(c)) invalid("cohort censoring values must be finite and >= 0");
      }
      break;
  }
  if (dependence == Dependence::kNegRegDep && !(kappa >= 0.0 && kappa < 2.0)) {
    invalid("negRegDep needs 0 <= kappa < 2 so rates stay positive");
  }
  if (dependence == Dependence::kRelaxed && !(bbar >= 0.0 && bbar <= 1.0)) invalid("relaxed needs bbar in [0, 1]");
  if (levels.empty()) invalid("at least one covariate level is required");
  double total = 0.0;
  for (const auto& l : levels) {
    if (!(l.share > 0.0)) invalid("level shares must be positive");
    if (!(l.rateScale > 0.0)) invalid("level rate scales must be positive");
    total += l.share;
  }
  if (std::abs(total - 1.0) > 1e-9) invalid("level shares must sum to 1");
  if (clusters < 0) invalid("cluster count must be >= 0");
  if (!(scale > 0.0)) invalid("scale must be positive");
}

double DgpSpec::propensity(double z, double c, int x) const {
  return p0 + pz * z + pz2 * z * z + pc * c + levels[static_cast<std::size_t>(x)].propensityShift;
}

double DgpSpec::censoringMean() const {
  switch (censoring) {
    case CensoringLaw::kDegenerate: return c0;
    case CensoringLaw::kUniform: return 0.5 * (cLo + cHi);
    case CensoringLaw::kCohort: {
      double acc = 0.0;
      for (double c : cohortValues) acc += c;
      return acc / static_cast<double>(cohortValues.size());
    }
  }
  return 0.0;
}

double DgpSpec::censoringMax() const {
  switch (censoring) {
    case CensoringLaw::kDegenerate: return c0;
    case CensoringLaw::kUniform: return cHi;
    case CensoringLaw::kCohort: return *std::max_element(cohortValues.begin(), cohortValues.end());
  }
  return 0.0;
}

double DgpSpec::censoringRange() const { return censoringMax() - censoringMin(*this); }

double DgpSpec::centeredPosition(double c) const {
  const double range = censoringRange();
  if (!(range > 0.0)) return 0.0;
  return (c - censoringMean()) / range;
}

DgpSpec referenceDgpSpec() { return DgpSpec{}; }

DgpSpec dgpSpecFromJson(const json& j) {
  DgpSpec s;
  try {
    if (j.contains("propensity")) {
      const auto& p = j.at("propensity");
      s.p0 = p.value("intercept", s.p0);
      s.pz = p.value("z", s.pz);
      s.pz2 = p.value("z2", s.pz2);
      s.pc = p.value("c", s.pc);
    }
    if (j.contains("instrument")) {
      const auto& z = j.at("instrument");
      const std::string law = z.value("law", "uniform");
      if (law == "uniform") {
        s.instrument = InstrumentLaw::kUniform;
      } else if (law == "deciders") {
        s.instrument = InstrumentLaw::kDeciders;
        s.deciders = z.at("count").get<int>();
      } else {
        invalid("unknown instrument law '" + law + "'");
      }
      s.zLo = z.value("lo", s.zLo);
      s.zHi = z.value("hi", s.zHi);
    }
    if (j.contains("censoring")) {
      const auto& c = j.at("censoring");
      const std::string law = c.at("law").get<std::string>();
      if (law == "degenerate") {
        s.censoring = CensoringLaw::kDegenerate;
        s.c0 = c.at("value").get<double>();
      } else if (law == "uniform") {
        s.censoring = CensoringLaw::kUniform;
        s.cLo = c.at("lo").get<double>();
        s.cHi = c.at("hi").get<double>();
      } else if (law == "cohort") {
        s.censoring = CensoringLaw::kCohort;
        s.cohortValues = c.at("values").get<std::vector<double>>();
      } else {
        invalid("unknown censoring law '" + law + "'");
      }
    }
    if (j.contains("outcome")) {
      const auto& o = j.at("outcome");
      for (int d = 0; d < 2; ++d) {
        const auto& a = o.at(d == 0 ? "arm0" : "arm1");
        if (a.value("law", "exponential") != "exponential") invalid("only exponential arm laws simulate");
        s.arm[d].a = a.at("a").get<double>();
        s.arm[d].b = a.value("b", 0.0);
      }
    }
    if (j.contains("dependence")) {
      const auto& dep = j.at("dependence");
      const std::string type = dep.at("type").get<std::string>();
      if (type == "independent") {
        s.dependence = Dependence::kIndependent;
      } else if (type == "negRegDep") {
        s.dependence = Dependence::kNegRegDep;
        s.kappa = dep.at("kappa").get<double>();
      } else if (type == "relaxed") {
        s.dependence = Dependence::kRelaxed;
        s.bbar = dep.at("bbar").get<double>();
      } else {
        invalid("unknown dependence type '" + type + "'");
      }
    }
    if (j.contains("levels")) {
      s.levels.clear();
      for (const auto& l : j.at("levels")) {
        s.levels.push_back({l.at("label").get<std::string>(), l.value("share", 1.0),
                            l.value("propensityShift", 0.0), l.value("rateScale", 1.0)});
      }
    }
    s.clusters = j.value("clusters", 0);
    s.scale = j.value("scale", 1.0);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, std::string("malformed DGP spec: ") + e.what());
  }
  s.validate();
  return s;
}

json dgpSpecToJson(const DgpSpec& s) {
  json j;
  j["propensity"] = {{"intercept", s.p0}, {"z", s.pz}, {"z2", s.pz2}, {"c", s.pc}};
  json z = {{"law", s.instrument == InstrumentLaw::kUniform ? "uniform" : "deciders"},
            {"lo", s.zLo},
            {"hi", s.zHi}};
  if (s.instrument == InstrumentLaw::kDeciders) z["count"] = s.deciders;
  j["instrument"] = z;
  json c = {{"law", lawName(s.censoring)}};
  switch (s.censoring) {
    case CensoringLaw::kDegenerate: c["value"] = s.c0; break;
    case CensoringLaw::kUniform: c["lo"] = s.cLo; c["hi"] = s.cHi; break;
    case CensoringLaw::kCohort: c["values"] = s.cohortValues; break;
  }
  j["censoring"] = c;
  j["outcome"] = {{"arm0", {{"law", "exponential"}, {"a", s.arm[0].a}, {"b", s.arm[0].b}}},
                  {"arm1", {{"law", "exponential"}, {"a", s.arm[1].a}, {"b", s.arm[1].b}}}};
  json dep = {{"type", dependenceName(s.dependence)}};
  if (s.dependence == Dependence::kNegRegDep) dep["kappa"] = s.kappa;
  if (s.dependence == Dependence::kRelaxed) dep["bbar"] = s.bbar;
  j["dependence"] = dep;
  j["levels"] = json::array();
  for (const auto& l : s.levels) {
    j["levels"].push_back({{"label", l.label},
                           {"share", l.share},
                           {"propensityShift", l.propensityShift},
                           {"rateScale", l.rateScale}});
  }
  j["clusters"] = s.clusters;
  j["scale"] = s.scale;
  return j;
}

DgpSpec loadDgpSpec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open spec file '" + path + "'", {{"path", path}});
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("spec is not valid JSON: ") + e.what(), {{"path", path}});
  }
  return dgpSpecFromJson(j);
}

Simulation simulate(const DgpSpec& spec, std::size_t n, std::uint64_t seed, unsigned threads) {
  spec.validate();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "n must be positive");
  const CounterRng rv(seed, kStreamV), rz(seed, kStreamZ), rc(seed, kStreamC), ry0(seed, kStreamY0),
      ry1(seed, kStreamY1), rx(seed, kStreamX), rmix(seed, kStreamMix), rcl(seed, kStreamCluster);

  std::vector<double> cumShare;
  double acc = 0.0;
  for (const auto& l : spec.levels) cumShare.push_back(acc += l.share);

  std::vector<Observation> rows(n);
  Simulation sim;
  sim.latent.v.resize(n);
  sim.latent.y0.resize(n);
  sim.latent.y1.resize(n);
  sim.latent.p.resize(n);

  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  parallelFor(blocks, threads, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      Observation& o = rows[i];
      const double ux = rx.uniform(i);
      o.x = static_cast<int>(std::lower_bound(cumShare.begin(), cumShare.end(), ux * acc) - cumShare.begin());
      o.x = std::min<int>(o.x, static_cast<int>(spec.levels.size()) - 1);
      if (spec.instrument == InstrumentLaw::kDeciders) {
        const int j = std::min(spec.deciders - 1, static_cast<int>(rz.uniform(i) * spec.deciders));
        o.decider = j;
        o.z = spec.zLo + (spec.zHi - spec.zLo) * (j + 0.5) / spec.deciders;
      } else {
        o.z = rz.uniform(i, spec.zLo, spec.zHi);
      }
      double c = 0.0;
      switch (spec.censoring) {
        case CensoringLaw::kDegenerate: c = spec.c0; break;
        case CensoringLaw::kUniform: c = rc.uniform(i, spec.cLo, spec.cHi); break;
        case CensoringLaw::kCohort: {
          const auto m = spec.cohortValues.size();
          c = spec.cohortValues[std::min(m - 1, static_cast<std::size_t>(rc.uniform(i) * static_cast<double>(m)))];
          break;
        }
      }
      const double v = rv.uniform(i);
      const double p = spec.propensity(o.z, c, o.x);
      o.d = p >= v ? 1 : 0;
      double ys[2];
      for (int d = 0; d < 2; ++d) {
        const CounterRng& r = d == 0 ? ry0 : ry1;
        ys[d] = r.exponential(i, rateAt(spec, d, v, c, o.x));
      }
      if (spec.dependence == Dependence::kRelaxed && rmix.uniform(i) < relaxedMass(spec, c)) {
        ys[0] = ys[1] = 0.0;
      }
      o.c = c * spec.scale;
      o.y = std::min(ys[o.d] * spec.scale, o.c);
      o.cluster = spec.clusters > 0
                      ? std::min(spec.clusters - 1, static_cast<int>(rcl.uniform(i) * spec.clusters))
                      : o.x;
      sim.latent.v[i] = v;
      sim.latent.y0[i] = ys[0] * spec.scale;
      sim.latent.y1[i] = ys[1] * spec.scale;
      sim.latent.p[i] = p;
    }
  });

  std::vector<std::string> xLabels, clusterLabels, deciderLabels;
  for (const auto& l : spec.levels) xLabels.push_back(l.label);
  if (spec.clusters > 0) {
    for (int g = 0; g < spec.clusters; ++g) clusterLabels.push_back("g" + std::to_string(g));
  } else {
    clusterLabels = xLabels;
  }
  if (spec.instrument == InstrumentLaw::kDeciders) {
    for (int j = 0; j < spec.deciders; ++j) deciderLabels.push_back("j" + std::to_string(j));
  }
  ObservationTable full(std::move(rows), std::move(xLabels), std::move(clusterLabels),
                        std::move(deciderLabels));
  // Compact labels into first-appearance order, as a CSV reload would.
  sim.table = full.subset(std::vector<bool>(n, true));
  return sim;
}

void saveLatentCsv(const LatentDraws& latent, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorCode::kIo, "cannot write '" + path + "'", {{"path", path}});
  std::fprintf(f, "v,y0,y1,p\n");
  char buf[128];
  for (std::size_t i = 0; i < latent.v.size(); ++i) {
    char* p = buf;
    for (double x : {latent.v[i], latent.y0[i], latent.y1[i], latent.p[i]}) {
      if (p != buf) *p++ = ',';
      p = std::to_chars(p, buf + sizeof buf, x).ptr;
    }
    *p++ = '\n';
    std::fwrite(buf, 1, static_cast<std::size_t>(p - buf), f);
  }
  if (std::fclose(f) != 0) throw Error(ErrorCode::kIo, "failed writing '" + path + "'", {{"path", path}});
}

double trueConditionalDmtr(const DgpSpec& s, int d, double y, double v, double c, int x) {
  checkLevel(s, x);
  if (y < 0.0) return 0.0;
  const double pi = relaxedMass(s, c);
  return pi + (1.0 - pi) * -std::expm1(-rateAt(s, d, v, c, x) * y);
}

double trueDmtr(const DgpSpec& s, int d, double y, double v, int x) {
  checkLevel(s, x);
  if (y < 0.0) return 0.0;
  const double lambda = baseRate(s, d, v, x);
  switch (s.dependence) {
    case Dependence::kIndependent: return -std::expm1(-lambda * y);
    case Dependence::kRelaxed: {
      const double pi = relaxedMeanMass(s);
      return pi + (1.0 - pi) * -std::expm1(-lambda * y);
    }
    case Dependence::kNegRegDep:
      if (s.censoring == CensoringLaw::kUniform) {
        // E[exp(-lambda y (1 + kappa u))], u ~ U(-1/2, 1/2).
        const double h = 0.5 * lambda * y * s.kappa;
        const double ratio = h == 0.0 ? 1.0 : std::sinh(h) / h;
        return 1.0 - std::exp(-lambda * y) * ratio;
      }
      return overCensoring(s, [&](double c) { return trueConditionalDmtr(s, d, y, v, c, x); });
  }
  return 0.0;
}

double trueQmtr(const DgpSpec& s, int d, double tau, double v, int x) {
  checkLevel(s, x);
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::kInvalidArgument, "tau must lie in (0, 1)");
  const double lambda = baseRate(s, d, v, x);
  if (s.dependence == Dependence::kIndependent) return -std::log1p(-tau) / lambda;
  if (s.dependence == Dependence::kRelaxed) {
    const double pi = relaxedMeanMass(s);
    if (tau <= pi) return 0.0;
    return -std::log1p(-(tau - pi) / (1.0 - pi)) / lambda;
  }
  double lo = 0.0, hi = 1.0 / lambda;
  while (trueDmtr(s, d, hi, v, x) < tau) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (trueDmtr(s, d, mid, v, x) >= tau ? hi : lo) = mid;
  }
  return hi;
}

double trueRestrictedMean(const DgpSpec& s, int d, double v, double horizon, int x) {
  checkLevel(s, x);
  auto capped = [&](double rate) {
    return std::isinf(horizon) ? 1.0 / rate : -std::expm1(-rate * horizon) / rate;
  };
  switch (s.dependence) {
    case Dependence::kIndependent: return capped(baseRate(s, d, v, x));
    case Dependence::kRelaxed: return (1.0 - relaxedMeanMass(s)) * capped(baseRate(s, d, v, x));
    case Dependence::kNegRegDep:
      return overCensoring(s, [&](double c) { return capped(rateAt(s, d, v, c, x)); });
  }
  return 0.0;
}

double trueMte(const DgpSpec& s, double v, int x) {
  return trueRestrictedMean(s, 1, v, kInf, x) - trueRestrictedMean(s, 0, v, kInf, x);
}

double trueMteAvg(const DgpSpec& s, double v) {
  double acc = 0.0;
  for (std::size_t x = 0; x < s.levels.size(); ++x) acc += s.levels[x].share * trueMte(s, v, static_cast<int>(x));
  return acc;
}

OracleCurves trueCurves(const DgpSpec& s, const EvalDesign& design, std::optional<double> gammaC) {
  s.validate();
  const std::size_t K = design.y.size(), V = design.v.size(), T = design.tau.size(), X = s.levels.size();
  OracleCurves o;
  o.design = design;
  o.gammaC = gammaC.value_or(s.censoringMax());
  for (int d = 0; d < 2; ++d) {
    o.dmtr[d] = Array3(K, V, X);
    o.qmtr[d] = Array3(T, V, X);
  }
  o.dmte = Array3(K, V, X);
  o.qmte = Array3(T, V, X);
  o.tauBar = Array3(V, X, 1);
  o.rmte = Array3(V, X, 1);
  o.mte = Array3(V, X, 1);
  o.dmteAvg = Array3(K, V, 1, 0.0);
  o.rmteAvg = Array3(V, 1, 1, 0.0);
  o.mteAvg = Array3(V, 1, 1, 0.0);
  for (std::size_t j = 0; j < V; ++j) {
    const double v = design.v[j];
    for (std::size_t x = 0; x < X; ++x) {
      const int xi = static_cast<int>(x);
      const double w = s.levels[x].share;
      for (std::size_t k = 0; k < K; ++k) {
        for (int d = 0; d < 2; ++d) o.dmtr[d](k, j, x) = trueDmtr(s, d, design.y[k], v, xi);
        o.dmte(k, j, x) = o.dmtr[1](k, j, x) - o.dmtr[0](k, j, x);
        o.dmteAvg(k, j, 0) += w * o.dmte(k, j, x);
      }
      const double tb = std::min(trueDmtr(s, 0, o.gammaC, v, xi), trueDmtr(s, 1, o.gammaC, v, xi));
      o.tauBar(j, x, 0) = tb;
      for (std::size_t t = 0; t < T; ++t) {
        for (int d = 0; d < 2; ++d) o.qmtr[d](t, j, x) = trueQmtr(s, d, design.tau[t], v, xi);
        o.qmte(t, j, x) = o.qmtr[1](t, j, x) - o.qmtr[0](t, j, x);
      }
      o.rmte(j, x, 0) = trueRestrictedMean(s, 1, v, o.gammaC, xi) - trueRestrictedMean(s, 0, v, o.gammaC, xi);
      o.mte(j, x, 0) = trueMte(s, v, xi);
      o.rmteAvg(j, 0, 0) += w * o.rmte(j, x, 0);
      o.mteAvg(j, 0, 0) += w * o.mte(j, x, 0);
    }
  }
  return o;
}

void DiscretePmf::validate() const {
  if (y0.empty() || y1.empty()) invalid("PMF supports must be nonempty");
  if (denominator <= 0) invalid("PMF denominator must be positive");
  if (mass.size() != y1.size()) invalid("PMF needs one mass row per Y*(1) support point");
  long long total = 0;
  for (const auto& row : mass) {
    if (row.size() != y0.size()) invalid("PMF needs one mass column per Y*(0) support point");
    for (long long m : row) {
      if (m < 0) invalid("PMF masses must be nonnegative");
      total += m;
    }
  }
  if (total != denominator) invalid("PMF masses must sum to the denominator");
  for (const auto* s : {&y0, &y1}) {
    for (std::size_t i = 0; i < s->size(); ++i) {
      if (!((*s)[i] >= 0.0) || (i > 0 && !((*s)[i] > (*s)[i - 1]))) {
        invalid("PMF support must be nonnegative and strictly increasing");
      }
    }
  }
}

long long DiscretePmf::marginalMass(int d, std::size_t index) const {
  long long m = 0;
  if (d == 1) {
    for (long long v : mass[index]) m += v;
  } else {
    for (const auto& row : mass) m += row[index];
  }
  return m;
}

DiscretePmf toyPmf() {
  DiscretePmf p;
  p.y0 = {1, 2, 3, 10, 20};
  p.y1 = {1, 2, 3, 10, 20};
  p.mass = {
      {10, 0, 10, 0, 0},
      {0, 10, 10, 0, 0},
      {0, 0, 0, 0, 0},
      {0, 0, 0, 10, 0},
      {5, 5, 0, 40, 0},
  };
  p.denominator = 100;
  return p;
}

DiscretePmf pmfFromJson(const json& j) {
  DiscretePmf p;
  try {
    p.y0 = j.at("y0").get<std::vector<double>>();
    p.y1 = j.at("y1").get<std::vector<double>>();
    p.mass = j.at("mass").get<std::vector<std::vector<long long>>>();
    p.denominator = j.at("denominator").get<long long>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, std::string("malformed PMF fixture: ") + e.what());
  }
  p.validate();
  return p;
}

json pmfToJson(const DiscretePmf& p) {
  return {{"y0", p.y0}, {"y1", p.y1}, {"mass", p.mass}, {"denominator", p.denominator}};
}

BruteForceCurves bruteForceCurves(const DiscretePmf& pmf, std::vector<double> y,
                                  std::vector<double> tau, double horizon) {
  pmf.validate();
  const double den = static_cast<double>(pmf.denominator);
  const std::vector<double>* support[2] = {&pmf.y0, &pmf.y1};
  BruteForceCurves r;
  r.y = std::move(y);
  r.tau = std::move(tau);
  // Integer CDF numerators per support point.
  std::vector<long long> cum[2];
  for (int d = 0; d < 2; ++d) {
    long long acc = 0;
    for (std::size_t i = 0; i < support[d]->size(); ++i) cum[d].push_back(acc += pmf.marginalMass(d, i));
  }
  auto cdfMass = [&](int d, double at) {
    long long m = 0;
    for (std::size_t i = 0; i < support[d]->size(); ++i) {
      if ((*support[d])[i] <= at) m = cum[d][i];
    }
    return m;
  };
  for (double at : r.y) {
    const long long m0 = cdfMass(0, at), m1 = cdfMass(1, at);
    r.cdf[0].push_back(static_cast<double>(m0) / den);
    r.cdf[1].push_back(static_cast<double>(m1) / den);
    r.dmte.push_back(static_cast<double>(m1 - m0) / den);
  }
  for (double t : r.tau) {
    double q[2];
    for (int d = 0; d < 2; ++d) {
      q[d] = std::numeric_limits<double>::quiet_NaN();
      for (std::size_t i = 0; i < support[d]->size(); ++i) {
        // Compare integer masses: cum / den >= t.
        if (static_cast<double>(cum[d][i]) >= t * den) {
          q[d] = (*support[d])[i];
          break;
        }
      }
      r.quantile[d].push_back(q[d]);
    }
    r.qte.push_back(q[1] - q[0]);
  }
  double num[2] = {0.0, 0.0}, rnum[2] = {0.0, 0.0};
  for (int d = 0; d < 2; ++d) {
    for (std::size_t i = 0; i < support[d]->size(); ++i) {
      const double m = static_cast<double>(pmf.marginalMass(d, i));
      num[d] += m * (*support[d])[i];
      rnum[d] += m * std::min((*support[d])[i], horizon);
    }
    r.mean[d] = num[d] / den;
    r.restrictedMean[d] = rnum[d] / den;
  }
  r.ate = (num[1] - num[0]) / den;
  r.rmte = (rnum[1] - rnum[0]) / den;
  return r;
}

json ToyCheck::toJson() const {
  return {{"dmte_1", dmte1},
          {"dmte_2", dmte2},
          {"median_qte", medianQte},
          {"ate", ate},
          {"expected", {{"dmte_1", 0.05}, {"dmte_2", 0.10}, {"median_qte", 7.0}, {"ate", 5.55}}},
          {"pass", pass}};
}

ToyCheck runToyCheck(const DiscretePmf& pmf) {
  const auto r = bruteForceCurves(pmf, {1.0, 2.0}, {0.5}, kInf);
  ToyCheck t;
  t.dmte1 = r.dmte[0];
  t.dmte2 = r.dmte[1];
  t.medianQte = r.qte[0];
  t.ate = r.ate;
  t.pass = t.dmte1 == 0.05 && t.dmte2 == 0.10 && t.medianQte == 7.0 && t.ate == 5.55;
  return t;
}

namespace {

// Antiderivative of 1 / (a + b v) in v.
double inverseRateIntegral(const ExponentialArm& arm, double scale, double v) {
  const double a = arm.a * scale, b = arm.b * scale;
  return b == 0.0 ? v / a : std::log(a + b * v) / b;
}

}  // namespace

double policyValue(const DgpSpec& s, const std::vector<Interval>& rule) {
  if (s.dependence != Dependence::kIndependent) {
    throw Error(ErrorCode::kNoClosedForm, "policy value needs independent censoring");
  }
  double total = 0.0;
  for (const auto& iv : rule) {
    const double lo = std::clamp(iv.lo, 0.0, 1.0), hi = std::clamp(iv.hi, 0.0, 1.0);
    if (!(hi > lo)) continue;
    for (const auto& l : s.levels) {
      const double m1 = inverseRateIntegral(s.arm[1], l.rateScale, hi) - inverseRateIntegral(s.arm[1], l.rateScale, lo);
      const double m0 = inverseRateIntegral(s.arm[0], l.rateScale, hi) - inverseRateIntegral(s.arm[0], l.rateScale, lo);
      total += l.share * (m1 - m0);
    }
  }
  return total;
}

std::vector<Interval> positiveMteRule(const DgpSpec& s) {
  // Locate sign changes on a fine grid, then bisect each.
  constexpr int kSteps = 10000;
  std::vector<double> roots;
  double prevV = 0.0, prev = trueMteAvg(s, 0.0);
  for (int i = 1; i <= kSteps; ++i) {
    const double v = static_cast<double>(i) / kSteps;
    const double cur = trueMteAvg(s, v);
    if ((prev > 0.0) != (cur > 0.0)) {
      double lo = prevV, hi = v;
      const bool loPositive = prev > 0.0;
      for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        ((trueMteAvg(s, mid) > 0.0) == loPositive ? lo : hi) = mid;
      }
      roots.push_back(hi);
    }
    prevV = v;
    prev = cur;
  }
  std::vector<Interval> rule;
  double start = 0.0;
  bool positive = trueMteAvg(s, 0.0) > 0.0;
  for (double r : roots) {
    if (positive) rule.push_back({start, r});
    start = r;
    positive = !positive;
  }
  if (positive) rule.push_back({start, 1.0});
  return rule;
}

PolicySearch searchPolicies(const DgpSpec& s, int cells, double tol) {
  if (cells < 1 || cells > 30) throw Error(ErrorCode::kInvalidArgument, "cells must lie in [1, 30]");
  std::vector<double> value(static_cast<std::size_t>(cells));
  for (int j = 0; j < cells; ++j) {
    value[static_cast<std::size_t>(j)] =
        policyValue(s, {{static_cast<double>(j) / cells, static_cast<double>(j + 1) / cells}});
  }
  PolicySearch out;
  out.thresholdValue = policyValue(s, positiveMteRule(s));
  out.bestValue = 0.0;
  const std::uint32_t total = 1u << cells;
  for (std::uint32_t mask = 1; mask < total; ++mask) {
    double v = 0.0;
    for (int j = 0; j < cells; ++j) {
      if (mask & (1u << j)) v += value[static_cast<std::size_t>(j)];
    }
    if (v > out.bestValue) {
      out.bestValue = v;
      out.bestMask = mask;
    }
  }
  out.optimal = out.bestValue <= out.thresholdValue + tol;
  return out;
}

}  // namespace censmte
