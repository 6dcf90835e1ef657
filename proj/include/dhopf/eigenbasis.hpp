#pragma once
// Center-subspace basis (phi_1, conj phi_1, phi_3, conj phi_3) and the adjoint
// basis normalized by the bilinear pairing, for discrete-delay systems.

#include "dhopf/model.hpp"
#include "dhopf/spectrum.hpp"

namespace dhopf {

struct EigenData {
  // k in {0,1} indexes the two frequency pairs (paper-style phi_1 / phi_3).
  Eigen::VectorXcd phi[2];   // right eigenvectors at theta = 0
  Eigen::RowVectorXcd psi[2];  // left (adjoint) rows, normalized so (psi,phi)=1
  cd norm_const[2];          // the normalization constants (1/pairing before scaling)
  double w[2];               // model-time frequencies
  int n[2];                  // wave numbers
};

// Null direction of Delta_m(i w), first nonzero component scaled to 1.
Eigen::VectorXcd right_eigvec(const ModelSpec& spec, int m, const Param& mu, double w);
// Left null row of Delta_m(i w), same normalization, before pairing scaling.
Eigen::RowVectorXcd left_eigvec(const ModelSpec& spec, int m, const Param& mu, double w);

// Discrete-delay closed form of the adjoint pairing:
//   (psi, phi) = psi [I + sum_k r_k G_k(mu) e^{-i w r_k}] phi
cd bilinear_pair(const ModelSpec& spec, const Eigen::RowVectorXcd& psi,
                 const Eigen::VectorXcd& phi, double w, const Param& mu);

EigenData build_basis(const ModelSpec& spec, const DoubleHopfPoint& point);

nlohmann::json eigendata_to_json(const EigenData& basis);

}  // namespace dhopf
