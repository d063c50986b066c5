#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "invdes/circuit_ir/graph.hpp"
#include "invdes/diffnum/tensor.hpp"

namespace invdes::layout {

// Native units: capacitance fF, resistance ohm, inductance nH, lengths um.

/// Exact rational a/b with a reduced denominator.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  friend bool operator==(const Rational&, const Rational&) = default;
};

namespace mim {
inline constexpr double kCa = 0.335;      ///< fF/um^2
inline constexpr double kCp = 0.11;       ///< fF/um
inline constexpr Rational kCaExact{335, 1000};
inline constexpr Rational kCpExact{11, 100};
inline constexpr double kLength = 20.0;   ///< fixed plate length, um
inline constexpr double kWidthMin = 6.05;
inline constexpr double kWidthMax = 150.0;
inline constexpr double kSlope = 6.92;    ///< fF/um
inline constexpr double kOffset = 4.4;    ///< fF
inline constexpr double kValueMin = 46.32;
inline constexpr double kValueMax = 1042.4;
}  // namespace mim

namespace poly {
inline constexpr double kSheet = 17.6;    ///< ohm/square
inline constexpr double kWidth = 5.0;     ///< um
inline constexpr double kDeltaW = 0.048;  ///< um
inline constexpr double kEnd = 1.0;       ///< ohm per terminal
inline constexpr double kResidual = 0.917;
inline constexpr double kLengthMin = 0.4;
inline constexpr double kLengthMax = 5.0;
inline constexpr double kSlope = 3.5007;  ///< ohm/um
inline constexpr double kOffset = 2.917;  ///< ohm
inline constexpr double kValueMin = 4.32;
inline constexpr double kValueMax = 20.42;
}  // namespace poly

namespace spiral {
inline constexpr double kCoeff = 2.337e-3;  ///< nH
inline constexpr double kExponent = 1.164;
inline constexpr double kTraceWidth = 10.0;  ///< um
inline constexpr double kSpacing = 0.0;      ///< um
inline constexpr double kValueMin = 0.1;     ///< nH
inline constexpr double kTableAreaMin = 5640.0;
}  // namespace spiral

/// Circuit-level guidelines, echoed in reports only.
namespace advisory {
inline constexpr double kInductorSpacingUm = 35.0;
inline constexpr double kGuardringSpacingUm = 5.0;
inline constexpr double kDiffPairDeltaLUm = 0.5;
}  // namespace advisory

// Simplified single-cell models. Out-of-range inputs throw DomainError.
double cap_from_width(double w_um);
double cap_width(double c_ff);
double cap_area(double w_um);
double res_from_length(double l_um);
double res_length(double r_ohm);
double res_area(double l_um);
/// Requires r > 0.
double ind_from_radius(double r_um);
double ind_radius(double l_nh);
double ind_area(double r_um);

// Full-physics alternates.
double mim_capacitance(double l_um, double w_um);
/// Drawn width fixed at poly::kWidth.
double poly_resistance(double l_um);
/// Monomial spiral model; all arguments in um, spacing must be positive.
double monomial_inductance(double d_out, double w, double d_avg, double s);

/// Slope and offset of the full MIM model at a fixed plate length, computed
/// in exact integer arithmetic from the process constants.
struct MimReduction {
  Rational slope;   ///< fF/um
  Rational offset;  ///< fF
};
MimReduction mim_reduction(std::int64_t length_um = 20);

enum class PassiveKind { resistor, capacitor, inductor };
enum class Arrangement { single, series, parallel };

std::string to_string(PassiveKind k);
std::string to_string(Arrangement a);

/// Single-cell value range in native units (inductor max is +inf).
double cell_value_min(PassiveKind kind);
double cell_value_max(PassiveKind kind);

/// Realization of one component value as n identical cells.
struct CellPlan {
  PassiveKind kind = PassiveKind::resistor;
  double value = 0.0;       ///< requested, native units
  std::size_t n = 1;
  Arrangement arrangement = Arrangement::single;
  double cell_value = 0.0;  ///< native units
  double geometry = 0.0;    ///< cap W, resistor L or inductor radius, um
  double cell_area = 0.0;   ///< um^2
  double area = 0.0;        ///< n * cell_area
};

/// Resistor: series above max, parallel below min. Capacitor: parallel above
/// max, series below min. Inductor: continuous radius; below 0.1 nH, parallel
/// cells of n times the value.
CellPlan decompose(double value, PassiveKind kind);

struct DrcResult {
  bool pass = true;
  std::vector<std::string> violations;  ///< rule names, e.g. W_MAX
};

/// Checks one cell geometry against the single-cell rules.
DrcResult drc_check(PassiveKind kind, double geometry_um);

struct ComponentLayout {
  std::string id;  ///< edge label
  PassiveKind kind = PassiveKind::resistor;
  double value_si = 0.0;
  CellPlan plan;
  DrcResult drc;
};

struct LayoutEstimate {
  std::vector<ComponentLayout> components;
  double total_area_um2 = 0.0;
  double normalized_loss = 0.0;  ///< total / 1e6 um^2

  [[nodiscard]] std::string to_json() const;
};

/// Passive kind of an etype; false for active devices and sources.
bool passive_kind(const std::string& etype, PassiveKind& out);

/// SI value of a component to native units (ohm, fF, nH).
double to_native(PassiveKind kind, double si);

/// Every resistor, capacitor and inductor edge of the bound graph.
LayoutEstimate estimate_layout(const circuit_ir::BoundGraph& graph);
/// Sum of passive areas in mm^2.
double layout_loss(const circuit_ir::BoundGraph& graph);
/// Same estimate as estimate_layout, returned as a report.
LayoutEstimate drc_report(const circuit_ir::BoundGraph& graph);

/// Differentiable bounding area (um^2) of a scalar native value. The cell
/// count comes from the forward value and is held constant for the gradient.
diffnum::Tensor area_tensor(const diffnum::Tensor& value, PassiveKind kind);

/// A passive edge whose value is constant or an affine image of one parameter.
struct PassiveTerm {
  std::string id;
  PassiveKind kind = PassiveKind::resistor;
  std::ptrdiff_t param = -1;  ///< index into the scaled parameter vector, -1 if fixed
  double coef = 0.0;          ///< native value per scaled unit
  double constant = 0.0;      ///< native value when fixed
};

/// Terms for every passive edge; `param_order` fixes the parameter indices and
/// `param_scales` converts scaled values back to SI.
std::vector<PassiveTerm> passive_terms(const circuit_ir::CircuitGraph& graph,
                                       const std::vector<std::string>& param_order,
                                       const std::vector<double>& param_scales);

/// Differentiable layout loss in mm^2 as a function of scaled parameters {p}.
diffnum::Tensor layout_loss(const std::vector<PassiveTerm>& terms, const diffnum::Tensor& x_scaled);

}  // namespace invdes::layout
