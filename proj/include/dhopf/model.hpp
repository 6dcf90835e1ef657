#pragma once
// Delayed reaction-diffusion model description: diffusion, delayed linear part,
// reaction Taylor tensors, parameter dependence, and the two built-in systems.

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace dhopf {

using cd = std::complex<double>;
using Param = std::array<double, 2>;  // (mu1, mu2): mu1 is the delay-like parameter

// History segment sampled where the equations read it: theta = 0 and theta = -r_k.
struct Hist {
  Eigen::VectorXcd at0;
  std::vector<Eigen::VectorXcd> at_delay;

  static Hist zero(int n, int n_delays);
  Hist scaled(cd c) const;
};

// Delayed linear operator L u_t = A u(0) + sum_k G_k u(-r_k).
struct LinearOp {
  Eigen::MatrixXd A;
  std::vector<Eigen::MatrixXd> G;
};

// First-order Taylor data of (D, L) in the two parameters at a base point.
struct ParamExpansion {
  Eigen::VectorXd D0;                  // diagonal of the diffusion matrix
  LinearOp L0;
  std::array<Eigen::VectorXd, 2> D1;   // d/dmu_i of the diffusion diagonal
  std::array<LinearOp, 2> L1;
  std::vector<double> delays;
  Param mu0{0.0, 0.0};
};

// Symmetric multilinear reaction forms acting on history samples.
using Tensor2 = std::function<Eigen::VectorXcd(const Hist&, const Hist&)>;
using Tensor3 = std::function<Eigen::VectorXcd(const Hist&, const Hist&, const Hist&)>;
// Full nonlinear reaction for the simulator; values[0] = u(t), values[k] = u(t - r_k).
using Reaction = std::function<Eigen::VectorXd(const std::vector<Eigen::VectorXd>&)>;

struct ClosedFormSpectrum;  // optional analytic spectral data (spectrum.hpp)

struct ModelSpec {
  std::string name;
  int n_components = 0;
  double domain_scale = 1.0;           // domain is (0, l*pi)
  Param param{0.0, 0.0};               // current base parameter values

  std::function<std::vector<double>(const Param&)> delays;
  std::function<Eigen::VectorXd(const Param&)> diffusion;   // diagonal entries
  std::function<Eigen::MatrixXd(const Param&)> linear_at0;  // A(mu)
  std::function<std::vector<Eigen::MatrixXd>(const Param&)> linear_delayed;  // G_k(mu)
  std::function<Tensor2(const Param&)> reaction_tensor2;    // may be empty
  std::function<Tensor3(const Param&)> reaction_tensor3;    // may be empty
  std::function<Reaction(const Param&)> reaction_full;      // may be empty

  // Analytic first-order parameter data; empty -> central differences in expand_at.
  std::function<ParamExpansion(const Param&)> analytic_expansion;

  // True when mu1 rescales time (model time = original time / mu1), so reported
  // model-time frequencies convert back as freq_original = freq_model / mu1.
  bool mu1_rescales_time = false;
  double time_scale = 1.0;             // fixed extra rescale factor (prepare_critical)

  std::shared_ptr<ClosedFormSpectrum> closed_form;  // optional analytic root data
  nlohmann::json source;               // serialization record

  std::vector<double> delays_at(const Param& mu) const { return delays(mu); }
  bool has_tensor2() const { return static_cast<bool>(reaction_tensor2); }
  bool has_tensor3() const { return static_cast<bool>(reaction_tensor3); }
};

struct ValidationIssue {
  std::string what;
  double residual;
};
struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool valid() const { return issues.empty(); }
  std::string summary() const;
};

ValidationReport validate_model(const ModelSpec& spec, unsigned rng_seed = 12345);

// First-order Taylor data of D(mu), L(mu) at mu0 (analytic when the model
// provides it, otherwise central differences of step h).
ParamExpansion expand_at(const ModelSpec& spec, const Param& mu0, double h = 1e-6);

// Symmetric multilinear form applied to 2 or 3 complex history directions,
// scaled as the second (resp. third) Frechet derivative of the reaction at 0.
Eigen::VectorXcd taylor_coeff(const ModelSpec& spec, const Param& mu,
                              const std::vector<Hist>& directions);

// Finite-difference fallback evaluating the same form from reaction_full.
Eigen::VectorXcd taylor_coeff_fd(const ModelSpec& spec, const Param& mu,
                                 const std::vector<Hist>& directions, double step = 1e-5);

// Time rescaling t -> t/factor: delays divide by factor, D/L/tensors multiply.
ModelSpec rescale_time(const ModelSpec& spec, double factor);

// Rescale so the chosen delay (index into delays(mu0)) equals 1.
ModelSpec prepare_critical(const ModelSpec& spec, int which_delay);

// ---- built-in models -------------------------------------------------------

struct EpidemicParams {
  double alpha = 2.1, d = 0.5, mu = 0.5, gamma = 0.1, beta = 0.3, tau = 1.0;
  double d1 = 0.05, d2 = 5.23, d3 = 0.06;  // d2 doubles as the default mu2
  double l = 3.0;
};
struct EpidemicModel {
  ModelSpec spec;          // time rescaled so the transmission delay equals 1
  double S_star, I_star, y_star, R0;
};
// Three-component epidemic system with two delays; parameters mu = (omega, d2).
EpidemicModel builtin_epidemic(const EpidemicParams& p = {});

struct PredPreyParams {
  double r1 = 0.6739271475, r2 = 1.0;
  double a11 = 1.0, a12 = 1.2, a21 = 2.8, a22 = 1.0;
  double d1 = 0.1, d2 = 0.2;
  double l = 3.0;
};
struct PredPreyModel {
  ModelSpec spec;          // time rescaled so the feedback delay equals 1
  double X_star, Y_star;
};
// Two-component predator-prey system with one delay; parameters mu = (tau, r1).
PredPreyModel builtin_predprey(const PredPreyParams& p = {});

// ---- JSON serialization ----------------------------------------------------

nlohmann::json model_to_json(const ModelSpec& spec);
ModelSpec model_from_json(const nlohmann::json& j);

}  // namespace dhopf
