#pragma once
// Second- and third-order normal-form coefficients on the center manifold at a
// double Hopf point, with the quadratic/cubic breakdown and audit export.

#include <map>
#include <stdexcept>

#include "dhopf/eigenbasis.hpp"

namespace dhopf {

// Errors carry the pipeline stage that produced them.
struct PipelineError : std::runtime_error {
  std::string stage;
  PipelineError(std::string st, const std::string& what)
      : std::runtime_error(st + ": " + what), stage(std::move(st)) {}
};

using QIdx = std::array<int, 4>;  // monomial exponents (q1,q2,q3,q4) of (z1, z1c, z2, z2c)

struct SpatialIntegrals {
  double gamma40, gamma04, gamma22;        // quartic eigenfunction products
  double beta30, beta21, beta12, beta03;   // cubic eigenfunction products
  int n1, n2;
  double l;
  // b(j, na, nb) = integral of gamma_j gamma_na gamma_nb over (0, l*pi)
  double b(int j, int na, int nb) const;
};

SpatialIntegrals spatial_integrals(int n1, int n2, double l);

// Quadrature oracle for the same integrals (composite Simpson, `nodes` panels).
double cosine_product_quadrature(const std::vector<int>& waves,
                                 const std::vector<int>& powers, double l,
                                 int nodes = 10000);

struct NormalFormCoeffs {
  cd B11, B21, B13, B23;                 // linear-in-parameter coefficients
  cd B2100, B1011, B0021, B1110;         // cubic coefficients
  cd C2100, C1011, C0021, C1110;         // cubic-tensor part
  cd D2100, D1011, D0021, D1110;         // quadratic-cascade part
  cd E2100, E1011, E0021, E1110;         // center-manifold correction part
  std::string case_tag;                  // wave-number case dispatch record
};

std::string wave_case_tag(int n1, int n2);

// Exponential polynomial sum_p c_p e^{sigma_p theta} (vector coefficients).
struct ExpPoly {
  std::vector<std::pair<Eigen::VectorXcd, cd>> terms;
};

// One polarized second-derivative operator: S(h) = M0 h(0) + sum_k Mk h(-r_k).
struct SOperator {
  Eigen::MatrixXcd at0;
  std::vector<Eigen::MatrixXcd> at_delay;
  Eigen::VectorXcd apply(const Hist& h) const;
};

// The shared state of one normal-form computation.
struct NFContext {
  const ModelSpec* spec;
  DoubleHopfPoint point;
  EigenData basis;
  ParamExpansion expansion;
  SpatialIntegrals si;
  std::array<Hist, 4> H;       // history samples of phi_1, conj, phi_3, conj
  std::array<cd, 4> lam;       // i w1, -i w1, i w2, -i w2
  std::array<int, 4> wav;      // n1, n1, n2, n2
  std::vector<double> delays;
  double eps_res = 1e-3;
  double cond_cap = 1e12;

  cd sigma(const QIdx& q) const;
  Hist hist_of(int xi) const { return H[xi]; }
};

NFContext make_context(const ModelSpec& spec, const DoubleHopfPoint& point);

// Quadratic reaction coefficients F_q (|q| = 2) with multinomial factors.
std::map<QIdx, Eigen::VectorXcd> quadratic_F(const NFContext& cx);

// The forty projected scalars f^{1(xi)}_q, xi = 1..4, |q| = 2.
std::map<std::pair<int, QIdx>, cd> f2_line(const NFContext& cx,
                                           const std::map<QIdx, Eigen::VectorXcd>& F);

void second_order(const NFContext& cx, NormalFormCoeffs& out);
void third_order_C(const NFContext& cx, NormalFormCoeffs& out);
void third_order_D(const NFContext& cx,
                   const std::map<std::pair<int, QIdx>, cd>& f, NormalFormCoeffs& out);

std::array<SOperator, 4> S_operators(const NFContext& cx);

// Center-manifold quadratic component at wave number j and monomial q.
ExpPoly h_solution(const NFContext& cx,
                   const std::map<QIdx, Eigen::VectorXcd>& F,
                   const std::map<std::pair<int, QIdx>, cd>& f, int j, const QIdx& q);

void third_order_E(const NFContext& cx,
                   const std::map<QIdx, Eigen::VectorXcd>& F,
                   const std::map<std::pair<int, QIdx>, cd>& f,
                   const std::array<SOperator, 4>& S, NormalFormCoeffs& out);

// Full pipeline: basis, expansion, quadratic line, C/D/E, assembled B's.
NormalFormCoeffs assemble(const ModelSpec& spec, const DoubleHopfPoint& point);

nlohmann::json coeffs_to_json(const NormalFormCoeffs& c);
// Audit export: coefficients plus every intermediate f-scalar.
nlohmann::json audit_json(const ModelSpec& spec, const DoubleHopfPoint& point);

}  // namespace dhopf
