#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fd.hpp"
#include "programs.hpp"
#include "invdes/circuit_ir/graph.hpp"
#include "invdes/circuit_ir/netlist.hpp"
#include "invdes/diffnum/init.hpp"
#include "invdes/diffnum/ops.hpp"
#include "invdes/error.hpp"
#include "invdes/layout/layout.hpp"

namespace ci = invdes::circuit_ir;
namespace dn = invdes::diffnum;
namespace ly = invdes::layout;
using ly::PassiveKind;

namespace {

// Independent re-statement of the simplified single-cell models.
double cap_w(double c) { return (c - 4.4) / 6.92; }
double cap_a(double w) { return 22.0 * w + 44.0; }
double res_l(double r) { return (r - 2.917) / 3.5007; }
double res_a(double l) { return 5.2 * l + 8.362; }
double ind_r(double l) { return std::pow(l / 2.337e-3, 1.0 / 1.164); }
double ind_a(double r) { return 4.0 * r * r + 108.0 * r + 440.0; }

ci::BoundGraph bound(const std::string& body) {
  return ci::bind_parameters(ci::build_graph(ci::parse_netlist(".name t\n" + body), 0), {});
}

/// Log-uniform draw spanning several decades around the single-cell range.
double draw(dn::Rng& rng, PassiveKind kind) {
  const double lo = ly::cell_value_min(kind) / 100.0;
  const double hi = (kind == PassiveKind::inductor ? 50.0 : ly::cell_value_max(kind)) * 100.0;
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

}  // namespace

TEST(SingleCell, CapacitorExamples) {
  EXPECT_NEAR(ly::cap_from_width(150.0), 1042.4, 1e-9);
  EXPECT_NEAR(ly::cap_width(1042.4), 150.0, 1e-9);
  EXPECT_NEAR(ly::cap_from_width(100.0), 696.4, 1e-9);
  EXPECT_NEAR(ly::cap_area(150.0), 3344.0, 1e-9);
  EXPECT_NEAR(ly::cap_area(6.05), 177.1, 1e-9);
  EXPECT_NEAR(ly::cap_area(100.0), 2244.0, 1e-9);
  EXPECT_THROW((void)ly::cap_from_width(151.0), invdes::DomainError);
  EXPECT_THROW((void)ly::cap_area(6.0), invdes::DomainError);
}

TEST(SingleCell, ResistorExamples) {
  EXPECT_NEAR(ly::res_from_length(5.0), 20.4205, 1e-9);
  EXPECT_NEAR(ly::res_from_length(0.4), 4.31728, 1e-9);
  EXPECT_NEAR(ly::res_length(12.0), (12.0 - 2.917) / 3.5007, 1e-12);
  EXPECT_NEAR(ly::res_length(12.0), 2.5946, 1e-4);
  EXPECT_NEAR(ly::res_area(0.4), 10.442, 1e-9);
  EXPECT_NEAR(ly::res_area(5.0), 34.362, 1e-9);
  EXPECT_NEAR(ly::res_area(2.0), 18.762, 1e-9);
  EXPECT_THROW((void)ly::res_from_length(5.5), invdes::DomainError);
}

TEST(SingleCell, InductorExamples) {
  EXPECT_NEAR(ly::ind_from_radius(30.0), 0.123, 0.01 * 0.123);
  EXPECT_NEAR(ly::ind_from_radius(60.0), 0.276, 0.01 * 0.276);
  EXPECT_NEAR(ly::ind_radius(0.22), ind_r(0.22), 1e-12);
  EXPECT_NEAR(ly::ind_radius(0.22), 49.62, 0.01);
  EXPECT_DOUBLE_EQ(ly::ind_area(30.0), 7280.0);
  EXPECT_NEAR(ly::ind_area(ly::ind_radius(0.1)), 5705.0, 5.0);
  EXPECT_NEAR(ly::ind_area(ly::ind_radius(0.1)), ly::spiral::kTableAreaMin, 0.02 * ly::spiral::kTableAreaMin);
  EXPECT_THROW((void)ly::ind_from_radius(0.0), invdes::DomainError);
  EXPECT_THROW((void)ly::ind_area(-1.0), invdes::DomainError);
}

TEST(SingleCell, InversionRoundTrip) {
  dn::Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double c = rng.uniform(ly::mim::kValueMin, ly::mim::kValueMax);
    EXPECT_LT(std::abs(ly::cap_from_width(ly::cap_width(c)) - c) / c, 1e-9);
    const double r = rng.uniform(ly::poly::kValueMin, ly::poly::kValueMax);
    EXPECT_LT(std::abs(ly::res_from_length(ly::res_length(r)) - r) / r, 1e-9);
    const double l = rng.uniform(0.1, 20.0);
    EXPECT_LT(std::abs(ly::ind_from_radius(ly::ind_radius(l)) - l) / l, 1e-9);
  }
}

TEST(FullPhysics, MimReducesExactly) {
  const auto red = ly::mim_reduction(20);
  EXPECT_EQ(red.slope, (ly::Rational{173, 25}));  // 6.92
  EXPECT_EQ(red.offset, (ly::Rational{22, 5}));   // 4.4
  EXPECT_NEAR(ly::mim_capacitance(20.0, 100.0), ly::cap_from_width(100.0), 1e-9);
}

TEST(FullPhysics, PolyAndSpiralAreClose) {
  // The full resistor slope 17.6/5.048 differs from the simplified 3.5007 by under 1%.
  EXPECT_NEAR(ly::poly_resistance(3.0), ly::res_from_length(3.0), 0.01 * ly::res_from_length(3.0));
  EXPECT_GT(ly::monomial_inductance(100.0, 10.0, 90.0, 2.0), 0.0);
  EXPECT_THROW((void)ly::monomial_inductance(100.0, 10.0, 90.0, 0.0), invdes::DomainError);
}

TEST(Decompose, ResistorSeries) {
  const auto p = ly::decompose(50.0, PassiveKind::resistor);
  EXPECT_EQ(p.n, 3U);
  EXPECT_EQ(p.arrangement, ly::Arrangement::series);
  EXPECT_NEAR(p.cell_value, 50.0 / 3.0, 1e-12);
  EXPECT_NEAR(p.geometry, res_l(50.0 / 3.0), 1e-12);
  EXPECT_NEAR(p.geometry, 3.9277, 1e-4);
  EXPECT_NEAR(p.cell_area, 28.786, 1e-3);
  EXPECT_NEAR(p.area, 3.0 * res_a(res_l(50.0 / 3.0)), 1e-9);
  EXPECT_NEAR(p.area, 86.36, 1e-2);
}

TEST(Decompose, ResistorParallel) {
  const auto p = ly::decompose(2.0, PassiveKind::resistor);
  EXPECT_EQ(p.n, 3U);
  EXPECT_EQ(p.arrangement, ly::Arrangement::parallel);
  EXPECT_NEAR(p.cell_value, 6.0, 1e-12);
}

TEST(Decompose, CapacitorParallelAndSingle) {
  const auto big = ly::decompose(2000.0, PassiveKind::capacitor);
  EXPECT_EQ(big.n, 2U);
  EXPECT_EQ(big.arrangement, ly::Arrangement::parallel);
  EXPECT_NEAR(big.geometry, 143.87, 1e-2);
  EXPECT_NEAR(big.area, 2.0 * cap_a(cap_w(1000.0)), 1e-9);
  const auto mid = ly::decompose(500.0, PassiveKind::capacitor);
  EXPECT_EQ(mid.n, 1U);
  EXPECT_EQ(mid.arrangement, ly::Arrangement::single);
  EXPECT_NEAR(mid.geometry, 71.62, 1e-2);
  EXPECT_NEAR(mid.area, cap_a(cap_w(500.0)), 1e-9);
  const auto small = ly::decompose(10.0, PassiveKind::capacitor);
  EXPECT_EQ(small.n, 5U);
  EXPECT_EQ(small.arrangement, ly::Arrangement::series);
  EXPECT_NEAR(small.cell_value, 50.0, 1e-12);
}

TEST(Decompose, InductorContinuous) {
  const auto p = ly::decompose(0.5, PassiveKind::inductor);
  EXPECT_EQ(p.n, 1U);
  EXPECT_NEAR(p.area, ind_a(ind_r(0.5)), 1e-9);
  EXPECT_THROW((void)ly::decompose(0.0, PassiveKind::inductor), invdes::DomainError);
  EXPECT_THROW((void)ly::decompose(-1.0, PassiveKind::resistor), invdes::DomainError);
}

TEST(Decompose, EveryCellInRange) {
  dn::Rng rng(2);
  for (PassiveKind kind : {PassiveKind::resistor, PassiveKind::capacitor, PassiveKind::inductor}) {
    for (int i = 0; i < 10000; ++i) {
      const double v = draw(rng, kind);
      const auto p = ly::decompose(v, kind);
      ASSERT_GE(p.n, 1U);
      EXPECT_GE(p.cell_value, ly::cell_value_min(kind) * (1 - 1e-12)) << v;
      EXPECT_LE(p.cell_value, ly::cell_value_max(kind) * (1 + 1e-12)) << v;
      EXPECT_TRUE(ly::drc_check(kind, p.geometry).pass) << v;
      EXPECT_GT(p.area, 0.0);
    }
  }
}

TEST(Decompose, AreaNondecreasingInValue) {
  dn::Rng rng(3);
  for (PassiveKind kind : {PassiveKind::resistor, PassiveKind::capacitor, PassiveKind::inductor}) {
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
      double a = draw(rng, kind), b = draw(rng, kind);
      if (a > b) std::swap(a, b);
      const auto pa = ly::decompose(a, kind), pb = ly::decompose(b, kind);
      // Ties and drops are allowed only where the cell count steps.
      if (pb.area < pa.area && pa.n == pb.n && pa.arrangement == pb.arrangement) ++violations;
    }
    EXPECT_EQ(violations, 0) << ly::to_string(kind);
  }
}

TEST(Drc, Boundaries) {
  EXPECT_TRUE(ly::drc_check(PassiveKind::capacitor, 150.0).pass);
  const auto bad = ly::drc_check(PassiveKind::capacitor, 151.0);
  EXPECT_FALSE(bad.pass);
  ASSERT_EQ(bad.violations.size(), 1U);
  EXPECT_EQ(bad.violations[0], "W_MAX");
  EXPECT_TRUE(ly::drc_check(PassiveKind::resistor, 2.0).pass);
  EXPECT_EQ(ly::drc_check(PassiveKind::resistor, 0.3).violations, std::vector<std::string>{"L_MIN"});
}

TEST(Loss, SingleCapacitor) {
  const auto g = bound("C1 capacitor a 0 C=500f\n");
  EXPECT_NEAR(ly::layout_loss(g), cap_a(cap_w(500.0)) / 1e6, 1e-15);
  EXPECT_NEAR(ly::layout_loss(g), 1.6197e-3, 1e-6);
}

TEST(Loss, NoPassivesIsZero) {
  EXPECT_EQ(ly::layout_loss(bound("M1 nmos d g 0 W=1u L=45n\nV1 vsource d 0 V=1 type=dc\n")), 0.0);
}

TEST(Loss, AdditiveOverComponents) {
  const double one = ly::layout_loss(bound("C1 capacitor a 0 C=500f\n"));
  EXPECT_EQ(ly::layout_loss(bound("C1 capacitor a 0 C=500f\nC2 capacitor a 0 C=500f\n")), 2.0 * one);
  const auto g = bound("C1 capacitor a 0 C=500f\nR1 resistor a b R=50\nL1 inductor b 0 L=0.5n\n");
  const auto est = ly::estimate_layout(g);
  ASSERT_EQ(est.components.size(), 3U);
  double total = 0.0;
  for (const auto& c : est.components) total += c.plan.area;
  EXPECT_NEAR(est.total_area_um2, total, 1e-9);
  EXPECT_NEAR(ly::layout_loss(g), total / 1e6, 1e-15);
}

TEST(Loss, ReportJsonShape) {
  const auto est = ly::drc_report(bound("C1 capacitor a 0 C=2p\n"));
  const std::string json = est.to_json();
  for (const char* key : {"components", "total_area_um2", "normalized_loss", "arrangement", "drc", "area_um2"}) {
    EXPECT_NE(json.find(key), std::string::npos) << key;
  }
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  dn::Rng rng(4);
  int checked = 0;
  for (PassiveKind kind : {PassiveKind::resistor, PassiveKind::capacitor, PassiveKind::inductor}) {
    for (int i = 0; i < 2000; ++i) {
      const double v = draw(rng, kind);
      const double h = 1e-6 * v;
      if (ly::decompose(v - h, kind).n != ly::decompose(v + h, kind).n) continue;
      dn::Tensor x = dn::Tensor::scalar(v, true);
      ly::area_tensor(x, kind).backward();
      const double fd = (ly::decompose(v + h, kind).area - ly::decompose(v - h, kind).area) / (2.0 * h);
      EXPECT_LT(invdes::testing::rel_err(x.grad()[0], fd, 1e-12), 1e-4) << ly::to_string(kind) << " " << v;
      EXPECT_NEAR(ly::area_tensor(x, kind).item(), ly::decompose(v, kind).area, 1e-9 * ly::decompose(v, kind).area);
      ++checked;
    }
  }
  EXPECT_GT(checked, 5000);
}

TEST(Loss, ParametricTermsDifferentiable) {
  const auto netlist = ci::parse_netlist(
      ".name t\n.param R 10 200 1000\n.param C 2e-14 5e-12 1e-13\n"
      "R1 resistor a b R=R\nC1 capacitor b 0 C=C\nC2 capacitor a 0 C=1p\n");
  const auto g = ci::build_graph(netlist, 0);
  const auto terms = ly::passive_terms(g, {"R", "C"}, {1000.0, 1e-13});
  ASSERT_EQ(terms.size(), 3U);
  const std::vector<double> x0 = {0.05, 7.3};
  dn::Tensor x = dn::Tensor::vector(x0, true);
  const dn::Tensor loss = ly::layout_loss(terms, x);
  const auto b = ci::bind_parameters(g, ci::ParameterVector({"R", "C"}, {50.0, 7.3e-13}));
  EXPECT_NEAR(loss.item(), ly::layout_loss(b), 1e-15);
  loss.backward();
  auto f = [&](const std::vector<double>& v) { return ly::layout_loss(terms, dn::Tensor::vector(v)).item(); };
  EXPECT_LT(invdes::testing::vector_rel_err(x.grad(), invdes::testing::central_diff(f, x0, 1e-7)), 1e-4);
}
