#include "dhopf/eigenbasis.hpp"

#include <stdexcept>

namespace dhopf {

namespace {

Eigen::VectorXcd normalize_first_nonzero(Eigen::VectorXcd v) {
  int idx = 0;
  while (idx < v.size() && std::abs(v[idx]) < 1e-8 * v.norm()) ++idx;
  if (idx == v.size()) throw std::runtime_error("eigenbasis: zero null vector");
  return v / v[idx];
}

}  // namespace

Eigen::VectorXcd right_eigvec(const ModelSpec& spec, int m, const Param& mu, double w) {
  Eigen::MatrixXcd M = char_matrix(spec, m, mu, cd(0.0, w));
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const int n = static_cast<int>(sv.size());
  if (n > 1 && sv[n - 2] < 1e-6 * sv[0])
    throw std::runtime_error("right_eigvec: rank deficiency exceeds 1 (eigenvalue not simple)");
  return normalize_first_nonzero(svd.matrixV().col(n - 1));
}

Eigen::RowVectorXcd left_eigvec(const ModelSpec& spec, int m, const Param& mu, double w) {
  Eigen::MatrixXcd M = char_matrix(spec, m, mu, cd(0.0, w));
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const int n = static_cast<int>(sv.size());
  if (n > 1 && sv[n - 2] < 1e-6 * sv[0])
    throw std::runtime_error("left_eigvec: rank deficiency exceeds 1 (eigenvalue not simple)");
  Eigen::VectorXcd u = svd.matrixU().col(n - 1).conjugate();
  return normalize_first_nonzero(u).transpose();
}

cd bilinear_pair(const ModelSpec& spec, const Eigen::RowVectorXcd& psi,
                 const Eigen::VectorXcd& phi, double w, const Param& mu) {
  cd pair = psi * phi;
  const auto G = spec.linear_delayed(mu);
  const auto rs = spec.delays(mu);
  for (size_t k = 0; k < G.size(); ++k)
    pair += rs[k] * std::exp(cd(0.0, -w * rs[k])) * (psi * G[k].cast<cd>() * phi)(0);
  return pair;
}

EigenData build_basis(const ModelSpec& spec, const DoubleHopfPoint& point) {
  EigenData out;
  const Param mu = point.mu0;
  const int nk[2] = {point.n1, point.n2};
  const double wk[2] = {point.w1, point.w2};
  for (int k = 0; k < 2; ++k) {
    out.n[k] = nk[k];
    out.w[k] = wk[k];
    out.phi[k] = right_eigvec(spec, nk[k], mu, wk[k]);
    Eigen::RowVectorXcd psi = left_eigvec(spec, nk[k], mu, wk[k]);
    const cd pair = bilinear_pair(spec, psi, out.phi[k], wk[k], mu);
    if (std::abs(pair) < 1e-12)
      throw std::runtime_error("build_basis: defective pairing (near non-semisimple)");
    out.psi[k] = psi / pair;
    out.norm_const[k] = 1.0 / pair;
  }
  return out;
}

nlohmann::json eigendata_to_json(const EigenData& basis) {
  auto cvec = [](const Eigen::VectorXcd& v) {
    nlohmann::json j = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) j.push_back({v[i].real(), v[i].imag()});
    return j;
  };
  nlohmann::json j;
  for (int k = 0; k < 2; ++k) {
    const std::string tag = k == 0 ? "pair1" : "pair2";
    j[tag] = {{"wave_number", basis.n[k]},
              {"frequency", basis.w[k]},
              {"phi", cvec(basis.phi[k])},
              {"psi", cvec(basis.psi[k].transpose())},
              {"norm_const", {basis.norm_const[k].real(), basis.norm_const[k].imag()}}};
  }
  return j;
}

}  // namespace dhopf
