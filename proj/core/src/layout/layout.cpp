#include "invdes/layout/layout.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "invdes/diffnum/ops.hpp"
#include "invdes/error.hpp"
#include "json.hpp"

namespace invdes::layout {

using diffnum::Tensor;

namespace {

constexpr double kSlack = 1e-12;

void require_range(double v, double lo, double hi, const char* what) {
  if (!std::isfinite(v) || v < lo - kSlack * std::abs(lo) || v > hi + kSlack * std::abs(hi)) {
    throw DomainError(std::string(what) + " = " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive");
}

Rational reduce(std::int64_t num, std::int64_t den) {
  const std::int64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

Rational add(Rational a, Rational b) { return reduce(a.num * b.den + b.num * a.den, a.den * b.den); }
Rational scale(Rational a, std::int64_t k) { return reduce(a.num * k, a.den); }

// Affine geometry model of one kind: geometry = (cell - offset) / slope,
// cell area = area_slope * geometry + area_offset.
struct Affine {
  double slope, offset, area_slope, area_offset;
};

Affine affine_of(PassiveKind kind) {
  if (kind == PassiveKind::capacitor) return {mim::kSlope, mim::kOffset, 22.0, 44.0};
  return {poly::kSlope, poly::kOffset, 5.2, 8.362};
}

const char* value_key(PassiveKind kind) {
  switch (kind) {
    case PassiveKind::resistor: return "R";
    case PassiveKind::capacitor: return "C";
    case PassiveKind::inductor: return "L";
  }
  return "?";
}

}  // namespace

double cap_from_width(double w_um) {
  require_range(w_um, mim::kWidthMin, mim::kWidthMax, "capacitor width");
  return mim::kSlope * w_um + mim::kOffset;
}

double cap_width(double c_ff) {
  const double w = (c_ff - mim::kOffset) / mim::kSlope;
  require_range(w, mim::kWidthMin, mim::kWidthMax, "capacitor width");
  return w;
}

double cap_area(double w_um) {
  require_range(w_um, mim::kWidthMin, mim::kWidthMax, "capacitor width");
  return 22.0 * w_um + 44.0;
}

double res_from_length(double l_um) {
  require_range(l_um, poly::kLengthMin, poly::kLengthMax, "resistor length");
  return poly::kSlope * l_um + poly::kOffset;
}

double res_length(double r_ohm) {
  const double l = (r_ohm - poly::kOffset) / poly::kSlope;
  require_range(l, poly::kLengthMin, poly::kLengthMax, "resistor length");
  return l;
}

double res_area(double l_um) {
  require_range(l_um, poly::kLengthMin, poly::kLengthMax, "resistor length");
  return 5.2 * l_um + 8.362;
}

double ind_from_radius(double r_um) {
  require_positive(r_um, "inductor radius");
  return spiral::kCoeff * std::pow(r_um, spiral::kExponent);
}

double ind_radius(double l_nh) {
  require_positive(l_nh, "inductance");
  return std::pow(l_nh / spiral::kCoeff, 1.0 / spiral::kExponent);
}

double ind_area(double r_um) {
  require_positive(r_um, "inductor radius");
  return 4.0 * r_um * r_um + 108.0 * r_um + 440.0;
}

double mim_capacitance(double l_um, double w_um) {
  require_positive(l_um, "plate length");
  require_positive(w_um, "plate width");
  return mim::kCa * l_um * w_um + mim::kCp * 2.0 * (l_um + w_um);
}

double poly_resistance(double l_um) {
  require_positive(l_um, "resistor length");
  return poly::kSheet * l_um / (poly::kWidth + poly::kDeltaW) + 2.0 * poly::kEnd + poly::kResidual;
}

double monomial_inductance(double d_out, double w, double d_avg, double s) {
  require_positive(d_out, "outer diameter");
  require_positive(w, "trace width");
  require_positive(d_avg, "average diameter");
  require_positive(s, "turn spacing");
  return 2.454e-4 * std::pow(d_out, -1.21) * std::pow(w, -0.163) * std::pow(d_avg, 2.836) * std::pow(s, -0.049);
}

MimReduction mim_reduction(std::int64_t length_um) {
  // C = Ca*L*W + 2*Cp*(L + W) = (Ca*L + 2*Cp) * W + 2*Cp*L
  return {add(scale(mim::kCaExact, length_um), scale(mim::kCpExact, 2)), scale(mim::kCpExact, 2 * length_um)};
}

std::string to_string(PassiveKind k) {
  switch (k) {
    case PassiveKind::resistor: return "resistor";
    case PassiveKind::capacitor: return "capacitor";
    case PassiveKind::inductor: return "inductor";
  }
  return "?";
}

std::string to_string(Arrangement a) {
  switch (a) {
    case Arrangement::single: return "single";
    case Arrangement::series: return "series";
    case Arrangement::parallel: return "parallel";
  }
  return "?";
}

double cell_value_min(PassiveKind kind) {
  switch (kind) {
    case PassiveKind::resistor: return poly::kValueMin;
    case PassiveKind::capacitor: return mim::kValueMin;
    case PassiveKind::inductor: return spiral::kValueMin;
  }
  return 0.0;
}

double cell_value_max(PassiveKind kind) {
  switch (kind) {
    case PassiveKind::resistor: return poly::kValueMax;
    case PassiveKind::capacitor: return mim::kValueMax;
    case PassiveKind::inductor: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

CellPlan decompose(double value, PassiveKind kind) {
  require_positive(value, "component value");
  CellPlan p;
  p.kind = kind;
  p.value = value;
  const double lo = cell_value_min(kind);
  const double hi = cell_value_max(kind);
  if (value > hi) {
    p.n = static_cast<std::size_t>(std::ceil(value / hi));
    p.arrangement = kind == PassiveKind::resistor ? Arrangement::series : Arrangement::parallel;
    p.cell_value = value / static_cast<double>(p.n);
  } else if (value < lo) {
    p.n = static_cast<std::size_t>(std::ceil(lo / value));
    // Capacitors shrink in series; resistors and inductors use parallel
    // copies of a larger value.
    p.arrangement = kind == PassiveKind::capacitor ? Arrangement::series : Arrangement::parallel;
    p.cell_value = value * static_cast<double>(p.n);
  } else {
    p.cell_value = value;
  }

  switch (kind) {
    case PassiveKind::capacitor:
      p.geometry = cap_width(p.cell_value);
      p.cell_area = cap_area(p.geometry);
      break;
    case PassiveKind::resistor:
      p.geometry = res_length(p.cell_value);
      p.cell_area = res_area(p.geometry);
      break;
    case PassiveKind::inductor:
      p.geometry = ind_radius(p.cell_value);
      p.cell_area = ind_area(p.geometry);
      break;
  }
  p.area = static_cast<double>(p.n) * p.cell_area;
  return p;
}

DrcResult drc_check(PassiveKind kind, double geometry_um) {
  DrcResult r;
  auto fail = [&r](const char* rule) {
    r.pass = false;
    r.violations.emplace_back(rule);
  };
  auto below = [](double v, double lo) { return v < lo - kSlack * lo; };
  auto above = [](double v, double hi) { return v > hi + kSlack * hi; };
  switch (kind) {
    case PassiveKind::capacitor:
      if (below(geometry_um, mim::kWidthMin)) fail("W_MIN");
      if (above(geometry_um, mim::kWidthMax)) fail("W_MAX");
      break;
    case PassiveKind::resistor:
      if (below(geometry_um, poly::kLengthMin)) fail("L_MIN");
      if (above(geometry_um, poly::kLengthMax)) fail("L_MAX");
      break;
    case PassiveKind::inductor:
      if (below(geometry_um, ind_radius(spiral::kValueMin))) fail("R_MIN");
      break;
  }
  return r;
}

bool passive_kind(const std::string& etype, PassiveKind& out) {
  if (etype == "resistor") {
    out = PassiveKind::resistor;
  } else if (etype == "capacitor") {
    out = PassiveKind::capacitor;
  } else if (etype == "inductor") {
    out = PassiveKind::inductor;
  } else {
    return false;
  }
  return true;
}

double to_native(PassiveKind kind, double si) {
  switch (kind) {
    case PassiveKind::resistor: return si;
    case PassiveKind::capacitor: return si * 1e15;
    case PassiveKind::inductor: return si * 1e9;
  }
  return si;
}

LayoutEstimate estimate_layout(const circuit_ir::BoundGraph& graph) {
  LayoutEstimate est;
  for (std::size_t i = 0; i < graph.graph.edges.size(); ++i) {
    const auto& e = graph.graph.edges[i];
    PassiveKind kind;
    if (!passive_kind(e.etype, kind)) continue;
    ComponentLayout c;
    c.id = e.label;
    c.kind = kind;
    c.value_si = graph.value(i, value_key(kind));
    c.plan = decompose(to_native(kind, c.value_si), kind);
    c.drc = drc_check(kind, c.plan.geometry);
    est.total_area_um2 += c.plan.area;
    est.components.push_back(std::move(c));
  }
  est.normalized_loss = est.total_area_um2 / 1e6;
  return est;
}

double layout_loss(const circuit_ir::BoundGraph& graph) { return estimate_layout(graph).normalized_loss; }

LayoutEstimate drc_report(const circuit_ir::BoundGraph& graph) { return estimate_layout(graph); }

std::string LayoutEstimate::to_json() const {
  using nlohmann::ordered_json;
  ordered_json j;
  j["components"] = ordered_json::array();
  for (const auto& c : components) {
    ordered_json e;
    e["id"] = c.id;
    e["kind"] = to_string(c.kind);
    e["value"] = c.value_si;
    e["n"] = c.plan.n;
    e["arrangement"] = to_string(c.plan.arrangement);
    const char* gkey = c.kind == PassiveKind::capacitor ? "W_um" : (c.kind == PassiveKind::resistor ? "L_um" : "radius_um");
    e["geometry"] = {{gkey, c.plan.geometry}, {"cell_value", c.plan.cell_value}};
    e["area_um2"] = c.plan.area;
    if (c.drc.pass) {
      e["drc"] = "pass";
    } else {
      std::string rules;
      for (const auto& v : c.drc.violations) rules += (rules.empty() ? "" : ",") + v;
      e["drc"] = "fail(" + rules + ")";
    }
    j["components"].push_back(std::move(e));
  }
  j["total_area_um2"] = total_area_um2;
  j["normalized_loss"] = normalized_loss;
  j["advisory"] = {{"inductor_spacing_um", advisory::kInductorSpacingUm},
                   {"guardring_spacing_um", advisory::kGuardringSpacingUm},
                   {"diff_pair_delta_l_um", advisory::kDiffPairDeltaLUm}};
  return j.dump(2);
}

Tensor area_tensor(const Tensor& value, PassiveKind kind) {
  const CellPlan plan = decompose(value.item(), kind);
  const double n = static_cast<double>(plan.n);
  Tensor cell = value;
  if (plan.n > 1) {
    const bool divided = plan.value > cell_value_max(kind);
    cell = diffnum::mul_scalar(value, divided ? 1.0 / n : n);
  }
  if (kind == PassiveKind::inductor) {
    Tensor r = diffnum::pow(diffnum::mul_scalar(cell, 1.0 / spiral::kCoeff), 1.0 / spiral::kExponent);
    Tensor a = diffnum::add_scalar(diffnum::add(diffnum::mul_scalar(diffnum::square(r), 4.0), diffnum::mul_scalar(r, 108.0)), 440.0);
    return diffnum::mul_scalar(a, n);
  }
  const Affine f = affine_of(kind);
  // n * (area_slope * (cell - offset) / slope + area_offset)
  Tensor geom = diffnum::mul_scalar(diffnum::add_scalar(cell, -f.offset), 1.0 / f.slope);
  return diffnum::mul_scalar(diffnum::add_scalar(diffnum::mul_scalar(geom, f.area_slope), f.area_offset), n);
}

std::vector<PassiveTerm> passive_terms(const circuit_ir::CircuitGraph& graph,
                                       const std::vector<std::string>& param_order,
                                       const std::vector<double>& param_scales) {
  if (param_order.size() != param_scales.size()) throw ShapeError("parameter names and scales differ in length");
  std::vector<PassiveTerm> out;
  for (const auto& e : graph.edges) {
    PassiveTerm t;
    if (!passive_kind(e.etype, t.kind)) continue;
    t.id = e.label;
    const std::string key = value_key(t.kind);
    if (auto it = e.numeric.find(key); it != e.numeric.end()) {
      t.constant = to_native(t.kind, it->second);
    } else {
      const std::string& sym = e.parametric.at(key);
      std::size_t j = 0;
      while (j < param_order.size() && param_order[j] != sym) ++j;
      if (j == param_order.size()) throw Error("parameter '" + sym + "' missing from parameter order");
      t.param = static_cast<std::ptrdiff_t>(j);
      t.coef = to_native(t.kind, param_scales[j]);
    }
    out.push_back(std::move(t));
  }
  return out;
}

Tensor layout_loss(const std::vector<PassiveTerm>& terms, const Tensor& x_scaled) {
  if (terms.empty()) return Tensor::scalar(0.0);
  std::vector<Tensor> areas;
  areas.reserve(terms.size());
  for (const auto& t : terms) {
    Tensor v = t.param < 0 ? Tensor::vector({t.constant})
                           : diffnum::mul_scalar(diffnum::index_select(x_scaled, {static_cast<std::size_t>(t.param)}), t.coef);
    areas.push_back(area_tensor(v, t.kind));
  }
  return diffnum::mul_scalar(diffnum::sum(diffnum::concat(areas, 0)), 1e-6);
}

}  // namespace invdes::layout
