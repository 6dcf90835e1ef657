#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "dhopf/normalform.hpp"
#include "dhopf/unfolding.hpp"
#include "doctest.h"

using namespace dhopf;

namespace {

DoubleHopfPoint predator_point() {
  static DoubleHopfPoint pt =
      find_double_hopf(builtin_predprey().spec, {0, 1, 1}, {0, 0, 0}, 0.5, 0.8);
  return pt;
}

DoubleHopfPoint epidemic_point() {
  static DoubleHopfPoint pt =
      find_double_hopf(builtin_epidemic().spec, {1, 0, 0}, {2, 0, 0}, 4.0, 7.0);
  return pt;
}

// run the pipeline stages on an already-built (possibly modified) context
NormalFormCoeffs run_stages(const NFContext& cx) {
  NormalFormCoeffs out{};
  out.case_tag = wave_case_tag(cx.si.n1, cx.si.n2);
  second_order(cx, out);
  auto F = quadratic_F(cx);
  auto f = f2_line(cx, F);
  third_order_C(cx, out);
  third_order_D(cx, f, out);
  auto S = S_operators(cx);
  third_order_E(cx, F, f, S, out);
  out.B2100 = out.C2100 + 1.5 * (out.D2100 + out.E2100);
  out.B1011 = out.C1011 + 1.5 * (out.D1011 + out.E1011);
  out.B0021 = out.C0021 + 1.5 * (out.D0021 + out.E0021);
  out.B1110 = out.C1110 + 1.5 * (out.D1110 + out.E1110);
  return out;
}

void rescale_pair(NFContext& cx, int k, cd c) {
  cx.basis.phi[k] *= c;
  cx.basis.psi[k] /= c;
  for (int xi = 2 * k; xi < 2 * k + 2; ++xi) {
    Eigen::VectorXcd phi = cx.basis.phi[k];
    cd lam = cx.lam[xi];
    if (xi % 2) phi = phi.conjugate();
    cx.H[xi].at0 = phi;
    for (size_t r = 0; r < cx.delays.size(); ++r)
      cx.H[xi].at_delay[r] = std::exp(-lam * cx.delays[r]) * phi;
  }
}

}  // namespace

TEST_CASE("spatial integral closed forms match quadrature") {
  for (double l : {1.0, 3.0, 5.5}) {
    for (auto [n1, n2] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}, {0, 0},
                                                          {1, 1}, {1, 3}, {2, 4}}) {
      const SpatialIntegrals si = spatial_integrals(n1, n2, l);
      CHECK(si.gamma40 ==
            doctest::Approx(cosine_product_quadrature({n1}, {4}, l)).epsilon(1e-10));
      CHECK(si.gamma04 ==
            doctest::Approx(cosine_product_quadrature({n2}, {4}, l)).epsilon(1e-10));
      CHECK(si.gamma22 ==
            doctest::Approx(cosine_product_quadrature({n1, n2}, {2, 2}, l)).epsilon(1e-10));
      for (int j = 0; j <= 2 * n2 + 1; ++j) {
        const double closed = si.b(j, n1, n2);
        const double quad = cosine_product_quadrature({j, n1, n2}, {1, 1, 1}, l);
        CHECK(std::abs(closed - quad) < 1e-10);
      }
    }
  }
}

TEST_CASE("wave case tags") {
  CHECK(wave_case_tag(0, 0) == "n1=n2=0");
  CHECK(wave_case_tag(0, 2) == "n1=0,n2!=0");
  CHECK(wave_case_tag(1, 2) == "n1!=0,n2!=0:n2=2n1");
  CHECK(wave_case_tag(1, 3) == "n1!=0,n2!=0:generic");
}

TEST_CASE("predator-prey cubic coefficients match the published values") {
  auto pp = builtin_predprey();
  const NormalFormCoeffs nf = assemble(pp.spec, predator_point());
  CHECK(std::abs(nf.B11 - cd(0.17069, 0.12592)) < 1e-3);
  CHECK(std::abs(nf.B21 - cd(1.97884, 2.26811)) < 1e-3);
  CHECK(std::abs(nf.B13 - cd(-0.11732, 0.09868)) < 1e-3);
  CHECK(std::abs(nf.B23 - cd(-3.48553, 1.52722)) < 1e-3);
  CHECK(std::abs(nf.B2100 - cd(-0.58923, -0.57368)) < 1e-3);
  CHECK(std::abs(nf.B1011 - cd(-7.57432, 11.46887)) < 1e-3);
  CHECK(std::abs(nf.B0021 - cd(3.603569, -7.55242)) < 1e-3);
  CHECK(std::abs(nf.B1110 - cd(0.374678, 2.89123)) < 1e-3);
  CHECK(nf.case_tag == "n1=n2=0");
}

TEST_CASE("cubic coefficients recompose exactly from the C/D/E parts") {
  auto pp = builtin_predprey();
  const NormalFormCoeffs nf = assemble(pp.spec, predator_point());
  CHECK(nf.B2100 == nf.C2100 + 1.5 * (nf.D2100 + nf.E2100));
  CHECK(nf.B1011 == nf.C1011 + 1.5 * (nf.D1011 + nf.E1011));
  CHECK(nf.B0021 == nf.C0021 + 1.5 * (nf.D0021 + nf.E0021));
  CHECK(nf.B1110 == nf.C1110 + 1.5 * (nf.D1110 + nf.E1110));
}

TEST_CASE("epidemic HH2 pipeline output (frozen) and linear coefficients") {
  auto epi = builtin_epidemic();
  const NormalFormCoeffs nf = assemble(epi.spec, epidemic_point());
  // parameter-direction coefficients for the swept diffusion parameter
  CHECK(std::abs(nf.B21 - cd(0.0021, 0.0042)) < 1e-3);
  CHECK(std::abs(nf.B23 - cd(-0.0037, 0.0101)) < 1e-3);
  // frozen pipeline values for the delay direction and the cubics
  CHECK(std::abs(nf.B11 - cd(1.34149, 0.93203)) < 1e-4);
  CHECK(std::abs(nf.B13 - cd(1.25441, 1.00091)) < 1e-4);
  CHECK(std::abs(nf.B2100 - cd(-0.00128, -0.00070)) < 2e-5);
  CHECK(std::abs(nf.B1011 - cd(-0.00116, 0.00118)) < 2e-5);
  CHECK(std::abs(nf.B0021 - cd(-0.00074, 0.00048)) < 2e-5);
  CHECK(std::abs(nf.B1110 - cd(-0.00162, -0.00101)) < 2e-5);
  const AmplitudeSystem amp = reduce(nf, epidemic_point().mu0);
  CHECK(amp.eps1 == -1);
  CHECK(amp.eps2 == -1);
  CHECK(amp.b0 == doctest::Approx(1.5728).epsilon(1e-3));
  CHECK(amp.c0 == doctest::Approx(1.2718).epsilon(1e-3));
  CHECK(amp.d0 == 1);
  CHECK(amp.disc == doctest::Approx(-1.0003).epsilon(1e-3));
  CHECK(classify(amp).label == UnfoldingCase::Ib);
  CHECK(nf.case_tag == "n1!=0,n2!=0:n2=2n1");
}

TEST_CASE("reduced quantities are invariant under eigenvector rescaling") {
  auto pp = builtin_predprey();
  const DoubleHopfPoint pt = predator_point();
  const NormalFormCoeffs base = assemble(pp.spec, pt);
  const AmplitudeSystem amp0 = reduce(base, pt.mu0);
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> mag(0.3, 3.0), arg(-3.1, 3.1);
  for (int rep = 0; rep < 20; ++rep) {
    NFContext cx = make_context(pp.spec, pt);
    rescale_pair(cx, 0, std::polar(mag(rng), arg(rng)));
    rescale_pair(cx, 1, std::polar(mag(rng), arg(rng)));
    const NormalFormCoeffs nf = run_stages(cx);
    const AmplitudeSystem amp = reduce(nf, pt.mu0);
    CHECK(amp.eps1 == amp0.eps1);
    CHECK(amp.eps2 == amp0.eps2);
    CHECK(std::abs(amp.b0 - amp0.b0) < 1e-8);
    CHECK(std::abs(amp.c0 - amp0.c0) < 1e-8);
    CHECK(classify(amp).label == classify(amp0).label);
  }
}

TEST_CASE("audit export exposes the forty projected scalars") {
  auto pp = builtin_predprey();
  const auto j = audit_json(pp.spec, predator_point());
  CHECK(j.contains("f_scalars"));
  CHECK(j["f_scalars"].size() == 40);
  CHECK(j.contains("B2100"));
  CHECK(j.contains("point"));
}
