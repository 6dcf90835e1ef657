#pragma once
// Planar amplitude system derived from the four-dimensional normal form,
// classification into the twelve unfoldings, bifurcation-set geometry, and
// amplitude-flow equilibria.

#include <iosfwd>

#include "dhopf/normalform.hpp"

namespace dhopf {

struct AmplitudeSystem {
  double eps1, eps2;          // signs of Re B2100, Re B0021
  double b0, c0, d0, disc;    // disc = d0 - b0*c0
  // c1 = eps1 (Re B11 a1 + Re B21 a2), c2 = eps1 (Re B13 a1 + Re B23 a2)
  double c1_coeff[2], c2_coeff[2];
  Param mu0{0.0, 0.0};

  double c1(double a1, double a2) const { return c1_coeff[0] * a1 + c1_coeff[1] * a2; }
  double c2(double a1, double a2) const { return c2_coeff[0] * a1 + c2_coeff[1] * a2; }
};

AmplitudeSystem reduce(const NormalFormCoeffs& coeffs, const Param& mu0 = {0.0, 0.0});

enum class UnfoldingCase { Ia, Ib, II, III, IVa, IVb, V, VIa, VIb, VIIa, VIIb, VIII };
std::string to_string(UnfoldingCase c);

struct UnfoldingClass {
  UnfoldingCase label;
  std::array<int, 4> signs;  // sign(d0), sign(b0), sign(c0), sign(disc)
  int region_count;
};

UnfoldingClass classify(const AmplitudeSystem& amp, double sign_tol = 1e-9);

struct BifLine {
  std::string name;
  double normal[2];    // n1*c1 + n2*c2 = 0 in (c1, c2) coordinates
  double alpha_dir[2];  // direction of the line in (alpha1, alpha2)
  double mu_dir[2];     // same direction attached at mu0 in original parameters
  bool approximate = false;  // valid only to o(c1)
  std::string side_note;
};

std::vector<BifLine> bifurcation_lines(const AmplitudeSystem& amp, const UnfoldingClass& cls);

struct RegionInfo {
  std::string label;       // D1..D6 / D1..D8 for the curated cases, sign-region otherwise
  std::string prediction;  // attractor prose (curated cases) or computed summary
};

RegionInfo region_of(const AmplitudeSystem& amp, const UnfoldingClass& cls,
                     double alpha1, double alpha2, double line_tol = 1e-9);

struct AmpEquilibrium {
  double r1sq, r2sq;
  std::array<cd, 2> jac_eig;
  bool stable;
  std::string kind;  // origin / mode-1 / mode-2 / interior
};

// Equilibria of r1' = r1(c1 + r1^2 + b0 r2^2), r2' = r2(c2 + c0 r1^2 + d0 r2^2).
std::vector<AmpEquilibrium> amplitude_flow(const AmplitudeSystem& amp, double c1, double c2);

nlohmann::json unfolding_to_json(const AmplitudeSystem& amp, const UnfoldingClass& cls,
                                 const std::vector<BifLine>& lines);
void export_lines_csv(const AmplitudeSystem& amp, const std::vector<BifLine>& lines,
                      double span, std::ostream& os);
void export_lines_gnuplot(const AmplitudeSystem& amp, const std::vector<BifLine>& lines,
                          double span, const std::string& csv_path, std::ostream& os);

}  // namespace dhopf
