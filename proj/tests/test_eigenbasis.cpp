#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "dhopf/eigenbasis.hpp"
#include "doctest.h"

using namespace dhopf;

namespace {

DoubleHopfPoint predator_point() {
  static DoubleHopfPoint pt =
      find_double_hopf(builtin_predprey().spec, {0, 1, 1}, {0, 0, 0}, 0.5, 0.8);
  return pt;
}

}  // namespace

TEST_CASE("right/left eigenvectors annihilate the characteristic matrix") {
  auto pp = builtin_predprey();
  const DoubleHopfPoint pt = predator_point();
  for (int k = 0; k < 2; ++k) {
    const int m = k == 0 ? pt.n1 : pt.n2;
    const double w = k == 0 ? pt.w1 : pt.w2;
    const Eigen::VectorXcd phi = right_eigvec(pp.spec, m, pt.mu0, w);
    const Eigen::RowVectorXcd psi = left_eigvec(pp.spec, m, pt.mu0, w);
    const Eigen::MatrixXcd M = char_matrix(pp.spec, m, pt.mu0, cd(0, w));
    CHECK((M * phi).norm() < 1e-9);
    CHECK((psi * M).norm() < 1e-9);
    CHECK(phi(0) == cd(1.0, 0.0));  // first nonzero component scaled to 1
  }
}

TEST_CASE("bilinear pairing normalizes the basis to (psi,phi)=1") {
  for (auto spec : {builtin_predprey().spec, builtin_epidemic().spec}) {
    DoubleHopfPoint pt =
        spec.n_components == 2
            ? predator_point()
            : find_double_hopf(spec, {1, 0, 0}, {2, 0, 0}, 4.0, 7.0);
    const EigenData basis = build_basis(spec, pt);
    for (int k = 0; k < 2; ++k) {
      const cd pair = bilinear_pair(spec, basis.psi[k], basis.phi[k], basis.w[k], pt.mu0);
      CHECK(std::abs(pair - cd(1.0, 0.0)) < 1e-10);
      CHECK(std::abs(basis.norm_const[k]) > 0);
    }
    CHECK(basis.n[0] == pt.n1);
    CHECK(basis.n[1] == pt.n2);
    CHECK(basis.w[0] == doctest::Approx(pt.w1));
    CHECK(basis.w[1] == doctest::Approx(pt.w2));
  }
}

TEST_CASE("pairing is invariant under opposite rescalings") {
  auto pp = builtin_predprey();
  const DoubleHopfPoint pt = predator_point();
  const EigenData basis = build_basis(pp.spec, pt);
  const cd c(0.7, -1.3);
  const cd pair = bilinear_pair(pp.spec, Eigen::RowVectorXcd(basis.psi[0] / c),
                                Eigen::VectorXcd(basis.phi[0] * c), basis.w[0], pt.mu0);
  CHECK(std::abs(pair - cd(1.0, 0.0)) < 1e-10);
}

TEST_CASE("eigendata exports to json") {
  auto pp = builtin_predprey();
  const EigenData basis = build_basis(pp.spec, predator_point());
  const auto j = eigendata_to_json(basis);
  CHECK(j.contains("pair1"));
  CHECK(j["pair1"].contains("phi"));
  CHECK(j["pair2"].contains("psi"));
}
