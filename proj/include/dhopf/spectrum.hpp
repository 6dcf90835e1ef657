#pragma once
// Per-wave-number characteristic equations, pure-imaginary root finding,
// Hopf curve construction, transversality, and double-Hopf point location
// with nondegeneracy verification.

#include <iosfwd>

#include "dhopf/model.hpp"

namespace dhopf {

// Scalar characteristic factor p(lambda) + q(lambda) e^{-lambda*rho} = 0 with
// p monic quadratic and q linear; rho is the critical (delay-like) parameter
// mu1 in original time units. Both built-ins expose their Hopf-carrying factor
// in this form, which yields closed-form frequencies and critical delays.
struct ScalarDelayFactor {
  double p1, p0;  // p(x) = x^2 + p1 x + p0
  double q1, q0;  // q(x) = q1 x + q0
};

struct ClosedFormSpectrum {
  // factor(m, mu2): the scalar factor for wave number m at swept parameter mu2
  std::function<ScalarDelayFactor(int m, double mu2)> factor;
};

// Frequencies z > 0 solving |p(iz)| = |q(iz)| (candidates for imaginary roots),
// returned ascending; 0, 1 or 2 of them.
std::vector<double> factor_frequencies(const ScalarDelayFactor& f);
// Critical delay for root index `root` (into factor_frequencies) and branch j,
// using the quadrant-correct sin/cos inversion.
double factor_critical_delay(const ScalarDelayFactor& f, int root, int j);
// d(Re lambda)/d(rho) at the crossing (original time).
double factor_transversality(const ScalarDelayFactor& f, int root, double rho);

// ---- characteristic matrices ------------------------------------------------

// Delta_m(lambda) = lambda*I + (m^2/l^2) D(mu) - A(mu) - sum_k G_k(mu) e^{-lambda r_k}
Eigen::MatrixXcd char_matrix(const ModelSpec& spec, int m, const Param& mu, cd lambda);
cd char_residual(const ModelSpec& spec, int m, const Param& mu, cd lambda);

// ---- imaginary roots ---------------------------------------------------------

struct ImagRoot {
  double freq_orig;   // crossing frequency in original time units
  double freq_model;  // same in model time (freq_orig * mu1 when mu1 rescales time)
  double mu1;         // critical value of the delay-like parameter (branch j = 0)
  double residual;    // |det Delta_m(i freq_model)| at (mu1, mu2)
  int root;           // index among ascending candidate frequencies
};

struct RootSearchOpts {
  double mu1_lo = 1e-3, mu1_hi = 0.0;  // mu1_hi <= 0 -> auto from spec.param
  int freq_grid = 400, mu1_grid = 200;
  double z_max = 0.0;                  // 0 -> auto bound
  int newton_max_iter = 50;
  double tol = 1e-11;
};

// Closed-form path (requires spec.closed_form).
std::vector<ImagRoot> imaginary_roots_closed(const ModelSpec& spec, int m, double mu2);
// Generic path: joint (freq, mu1) grid scan + Newton polish at fixed mu2.
std::vector<ImagRoot> imaginary_roots_generic(const ModelSpec& spec, int m, double mu2,
                                              const RootSearchOpts& opts = {});
// Front door: runs the closed form when available, the generic path otherwise;
// when both run they must agree to `agree_tol` (throws otherwise).
std::vector<ImagRoot> imaginary_roots(const ModelSpec& spec, int m, const Param& mu,
                                      const RootSearchOpts& opts = {},
                                      double agree_tol = 1e-8);

// ---- Hopf branches -----------------------------------------------------------

struct BranchId {
  int m = 0;     // wave number
  int root = 0;  // frequency index (ascending; predator-prey: 0 = omega-, 1 = omega+)
  int j = 0;     // delay branch index
};

struct HopfSample {
  double mu2, mu1;          // swept parameter, critical delay-like parameter
  double freq_orig, freq_model;
  int transversality_sign;
  double residual;
};

struct HopfBranch {
  BranchId id;
  std::vector<HopfSample> samples;
};

HopfBranch hopf_curve(const ModelSpec& spec, BranchId id, double mu2_lo, double mu2_hi,
                      int steps, const RootSearchOpts& opts = {});

// d(Re lambda)/d(mu1) at an imaginary root, via implicit differentiation of
// det Delta = 0 (returned in original time units). The closed-form value,
// when available, must agree to 1e-8 unless check_closed_form is false.
double transversality(const ModelSpec& spec, int m, const Param& mu, double freq_model,
                      bool check_closed_form = true, double agree_tol = 1e-8);

// ---- double Hopf points -------------------------------------------------------

struct HypothesisReport {
  bool H1 = false;  // simplicity + rest of spectrum off the imaginary axis
  bool H2 = false;  // weak nonresonance
  bool H3 = false;  // transversal crossings on both branches
  double resonance_margin = 0.0;            // min |w1/w2 - i/j| over 1<=i<=j<=4
  std::pair<int, int> nearest_ratio{0, 0};
  int m_checked = 0;                        // wave numbers counted by contour
  int tail_threshold = 0;                   // first m certified by the decay bound
  std::vector<int> axis_root_count;         // per m: roots inside the contour
  std::string detail;
};

struct DoubleHopfPoint {
  Param mu0{0.0, 0.0};
  int n1 = 0, n2 = 0;        // wave numbers in (branch_a, branch_b) order
  double w1 = 0, w2 = 0;     // model-time frequencies, same order
  double w1_orig = 0, w2_orig = 0;
  BranchId a, b;
  double residual1 = 0, residual2 = 0;
  HypothesisReport hyp;
};

struct NondegeneracyOpts {
  double eps_res = 1e-3;   // weak-resonance margin
  double delta = 1e-2;     // contour half-width around the axis
  double omega_cap = 0.0;  // 0 -> 4 * max frequency
  int contour_nodes = 4000;
  int m_max = -1;          // -1 -> tail-bound threshold, capped at 200
};

DoubleHopfPoint find_double_hopf(const ModelSpec& spec, BranchId branch_a, BranchId branch_b,
                                 double mu2_lo, double mu2_hi,
                                 const RootSearchOpts& opts = {},
                                 const NondegeneracyOpts& nopts = {});

HypothesisReport verify_nondegeneracy(const ModelSpec& spec, const DoubleHopfPoint& point,
                                      const NondegeneracyOpts& opts = {});

// Roots of det Delta_m inside the rectangle [re_lo, re_hi] x [im_lo, im_hi],
// counted by the argument principle (phase winding along the contour).
int count_roots_rect(const ModelSpec& spec, int m, const Param& mu,
                     double re_lo, double re_hi, double im_lo, double im_hi,
                     int nodes = 4000);

// Smallest m for which -d_min m^2/l^2 + ||A|| + sum ||G_k|| < 0 (capped).
int tail_wave_threshold(const ModelSpec& spec, const Param& mu, int cap = 200);

// ---- export -------------------------------------------------------------------

void export_branch_csv(const HopfBranch& branch, std::ostream& os);
nlohmann::json point_to_json(const DoubleHopfPoint& point);

}  // namespace dhopf
