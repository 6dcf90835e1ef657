#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sstream>

#include "dhopf/spectrum.hpp"
#include "doctest.h"

using namespace dhopf;

TEST_CASE("scalar factor: predator-prey frequencies and critical delay at r1*") {
  auto pp = builtin_predprey();
  REQUIRE(pp.spec.closed_form);
  const double r1s = 0.6739271475;
  const ScalarDelayFactor f = pp.spec.closed_form->factor(0, r1s);
  const auto z = factor_frequencies(f);
  REQUIRE(z.size() == 2);
  CHECK(z[0] == doctest::Approx(0.362170).epsilon(1e-4));
  CHECK(z[1] == doctest::Approx(0.77444).epsilon(1e-4));
  // the two critical delays coincide at the double Hopf point
  const double tau_minus = factor_critical_delay(f, 0, 0);
  const double tau_plus = factor_critical_delay(f, 1, 1);
  CHECK(tau_minus == doctest::Approx(10.4238045).epsilon(1e-4));
  CHECK(tau_plus == doctest::Approx(10.4238045).epsilon(1e-4));
  // transversality: the fast pair crosses rightward with increasing delay,
  // the slow pair leftward (sign of omega^2 difference in the scalar factor)
  CHECK(factor_transversality(f, 0, tau_minus) < 0);
  CHECK(factor_transversality(f, 1, tau_plus) > 0);
}

TEST_CASE("closed-form and generic imaginary roots agree on the built-ins") {
  for (auto spec : {builtin_epidemic().spec, builtin_predprey().spec}) {
    for (int m : {0, 1, 2}) {
      // the front door cross-checks the two paths and throws on disagreement
      const auto roots = imaginary_roots(spec, m, spec.param);
      for (const auto& r : roots) {
        CHECK(r.residual < 1e-10);
        CHECK(r.freq_orig > 0);
        CHECK(r.mu1 > 0);
        const cd res = char_residual(spec, m, {r.mu1, spec.param[1]}, cd(0, r.freq_model));
        CHECK(std::abs(res) < 1e-8);
      }
    }
  }
}

TEST_CASE("transversality agrees between implicit and closed-form routes") {
  auto pp = builtin_predprey();
  const auto roots = imaginary_roots(pp.spec, 0, pp.spec.param);
  REQUIRE(roots.size() >= 2);
  for (const auto& r : roots) {
    // throws if the two routes disagree beyond 1e-8
    const double t = transversality(pp.spec, 0, {r.mu1, pp.spec.param[1]}, r.freq_model);
    CHECK(std::abs(t) > 1e-10);  // nonzero crossing speed (sign depends on the pair)
  }
}

TEST_CASE("hopf curves are continuous in the swept parameter") {
  auto pp = builtin_predprey();
  HopfBranch br = hopf_curve(pp.spec, {0, 0, 0}, 0.5, 0.8, 16);
  REQUIRE(br.samples.size() >= 10);
  for (size_t i = 1; i < br.samples.size(); ++i) {
    CHECK(br.samples[i].mu2 > br.samples[i - 1].mu2);
    CHECK(std::abs(br.samples[i].mu1 - br.samples[i - 1].mu1) < 6.0);
    CHECK(br.samples[i].residual < 1e-10);
  }
  std::ostringstream os;
  export_branch_csv(br, os);
  CHECK(os.str().find(',') != std::string::npos);
}

TEST_CASE("predator-prey double Hopf point matches the published locus") {
  auto pp = builtin_predprey();
  DoubleHopfPoint pt = find_double_hopf(pp.spec, {0, 1, 1}, {0, 0, 0}, 0.5, 0.8);
  CHECK(pt.mu0[1] == doctest::Approx(0.6739271475).epsilon(1e-4));
  CHECK(pt.mu0[0] == doctest::Approx(10.4238045).epsilon(1e-4));
  CHECK(pt.w1_orig == doctest::Approx(0.77444).epsilon(1e-4));
  CHECK(pt.w2_orig == doctest::Approx(0.362170).epsilon(1e-4));
  CHECK(pt.n1 == 0);
  CHECK(pt.n2 == 0);
  CHECK(pt.residual1 < 1e-9);
  CHECK(pt.residual2 < 1e-9);
  CHECK(pt.hyp.H1);
  CHECK(pt.hyp.H2);
  CHECK(pt.hyp.H3);
  const auto j = point_to_json(pt);
  CHECK(j.contains("hypotheses"));
}

TEST_CASE("argument-principle count sees the imaginary pairs") {
  auto pp = builtin_predprey();
  DoubleHopfPoint pt = find_double_hopf(pp.spec, {0, 1, 1}, {0, 0, 0}, 0.5, 0.8);
  const double cap = 4.0 * std::max(pt.w1, pt.w2);
  // both critical pairs live at m = 0: four roots in the axis strip
  CHECK(count_roots_rect(pp.spec, 0, pt.mu0, -1e-2, 1e-2, -cap, cap) == 4);
  // away from criticality, wave number 5 has no roots near the axis
  CHECK(count_roots_rect(pp.spec, 5, pt.mu0, -1e-2, 1e-2, -cap, cap) == 0);
}

TEST_CASE("tail bound threshold grows with the linear part") {
  auto pp = builtin_predprey();
  const int m0 = tail_wave_threshold(pp.spec, pp.spec.param);
  CHECK(m0 > 0);
  CHECK(m0 <= 200);
  auto epi = builtin_epidemic();
  CHECK(tail_wave_threshold(epi.spec, epi.spec.param) > 0);
}

TEST_CASE("epidemic double Hopf HH2 frequencies") {
  auto epi = builtin_epidemic();
  DoubleHopfPoint pt = find_double_hopf(epi.spec, {1, 0, 0}, {2, 0, 0}, 4.0, 7.0);
  CHECK(pt.mu0[1] == doctest::Approx(5.21844).epsilon(1e-3));
  CHECK(pt.mu0[0] == doctest::Approx(0.52901).epsilon(1e-3));
  CHECK(pt.w1_orig == doctest::Approx(2.99284).epsilon(1e-3));
  CHECK(pt.w2_orig == doctest::Approx(3.10359).epsilon(1e-3));
}
