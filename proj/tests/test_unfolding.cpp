#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sstream>

#include "dhopf/unfolding.hpp"
#include "doctest.h"

using namespace dhopf;

namespace {

// coefficients chosen so that reduce() gives prescribed (eps1, eps2, b0, c0)
NormalFormCoeffs synth(double P, double Q, double R, double S) {
  NormalFormCoeffs nf{};
  nf.B2100 = P;
  nf.B1011 = Q;
  nf.B1110 = R;
  nf.B0021 = S;
  nf.B11 = cd(1.0, 0.0);
  nf.B21 = cd(0.0, 0.0);
  nf.B13 = cd(0.0, 0.0);
  nf.B23 = cd(1.0, 0.0);
  return nf;
}

AmplitudeSystem ident_amp(double eps1, double b0, double c0, double d0) {
  AmplitudeSystem amp{};
  amp.eps1 = eps1;
  amp.eps2 = eps1 * d0;
  amp.b0 = b0;
  amp.c0 = c0;
  amp.d0 = d0;
  amp.disc = d0 - b0 * c0;
  amp.c1_coeff[0] = 1.0;
  amp.c1_coeff[1] = 0.0;
  amp.c2_coeff[0] = 0.0;
  amp.c2_coeff[1] = 1.0;
  return amp;
}

}  // namespace

TEST_CASE("reduce computes the scaled amplitude coefficients") {
  // Re B2100 = -2, Re B0021 = 4 -> eps1 = -1, eps2 = +1, d0 = -1
  const NormalFormCoeffs nf = synth(-2.0, 6.0, 3.0, 4.0);
  const AmplitudeSystem amp = reduce(nf, {1.0, 2.0});
  CHECK(amp.eps1 == -1);
  CHECK(amp.eps2 == 1);
  CHECK(amp.d0 == -1);
  CHECK(amp.b0 == doctest::Approx(-6.0 / 4.0));
  CHECK(amp.c0 == doctest::Approx(3.0 / -2.0));
  CHECK(amp.disc == doctest::Approx(-1.0 - (-1.5) * (-1.5)));
  CHECK(amp.c1(1.0, 0.0) == doctest::Approx(-1.0));  // eps1 * Re B11
  CHECK(amp.c2(0.0, 1.0) == doctest::Approx(-1.0));  // eps1 * Re B23
  CHECK(amp.mu0[0] == 1.0);
}

TEST_CASE("degenerate cubic coefficient is rejected") {
  NormalFormCoeffs nf = synth(1e-12, 1.0, 1.0, 1.0);
  CHECK_THROWS_WITH_AS(reduce(nf), doctest::Contains("degenerate cubic"), PipelineError);
}

TEST_CASE("all twelve sign patterns classify to the published table") {
  struct Row {
    double d0, b0, c0;
    bool disc_pos;
    UnfoldingCase expect;
  };
  // disc = d0 - b0 c0; magnitudes picked to force the wanted sign
  const std::vector<Row> rows = {
      {1, 0.5, 0.5, true, UnfoldingCase::Ia},    {1, 2.0, 2.0, false, UnfoldingCase::Ib},
      {1, 1.0, -1.0, true, UnfoldingCase::II},   {1, -1.0, 1.0, true, UnfoldingCase::III},
      {1, -0.5, -0.5, true, UnfoldingCase::IVa}, {1, -2.0, -2.0, false, UnfoldingCase::IVb},
      {-1, 1.0, 1.0, false, UnfoldingCase::V},   {-1, 2.0, -1.0, true, UnfoldingCase::VIa},
      {-1, 0.5, -0.5, false, UnfoldingCase::VIb}, {-1, -2.0, 1.0, true, UnfoldingCase::VIIa},
      {-1, -0.5, 0.5, false, UnfoldingCase::VIIb}, {-1, -1.0, -1.0, false, UnfoldingCase::VIII}};
  for (const auto& r : rows) {
    const AmplitudeSystem amp = ident_amp(-1.0, r.b0, r.c0, r.d0);
    CHECK((amp.disc > 0) == r.disc_pos);
    const UnfoldingClass cls = classify(amp);
    CHECK(to_string(cls.label) == to_string(r.expect));
    CHECK(cls.signs[0] == (r.d0 > 0 ? 1 : -1));
  }
}

TEST_CASE("sign boundaries are reported, not guessed") {
  AmplitudeSystem amp = ident_amp(-1.0, 1.0, 1.0, 1.0);
  amp.disc = 1e-12;
  CHECK_THROWS_AS(classify(amp), PipelineError);
}

TEST_CASE("case Ib region map (eps1 = -1)") {
  // b0 = 2, c0 = 1 -> b0 c0 > 1, disc = -1: case Ib
  const AmplitudeSystem amp = ident_amp(-1.0, 2.0, 1.0, 1.0);
  const UnfoldingClass cls = classify(amp);
  REQUIRE(cls.label == UnfoldingCase::Ib);
  CHECK(cls.region_count == 6);
  auto region = [&](double c1, double c2) { return region_of(amp, cls, c1, c2).label; };
  CHECK(region(1.0, 1.0) == "D1");
  CHECK(region(-1.0, 1.0) == "D2");
  CHECK(region(-1.0, -0.2) == "D3");   // between c2 = 0 and c2 = c1/b0 = -0.5
  CHECK(region(-1.0, -0.7) == "D4");   // between c1/b0 and c0 c1 = -1
  CHECK(region(-1.0, -1.5) == "D5");
  CHECK(region(1.0, -1.0) == "D6");
  CHECK(region_of(amp, cls, -1.0, -0.7).prediction.find("coexist") != std::string::npos);
}

TEST_CASE("case VIa region map (eps1 = -1, predator-prey shape)") {
  const AmplitudeSystem amp = ident_amp(-1.0, 2.10189, -0.63587, -1.0);
  const UnfoldingClass cls = classify(amp);
  REQUIRE(cls.label == UnfoldingCase::VIa);
  CHECK(cls.region_count == 8);
  auto region = [&](double c1, double c2) { return region_of(amp, cls, c1, c2).label; };
  // wedge slopes at c1 = -1: top = 0.63587, mid = 0.52738, bot = 0.47576
  CHECK(region(1.0, -1.0) == "D1");
  CHECK(region(1.0, 1.0) == "D2");
  CHECK(region(-1.0, 0.70) == "D3");
  CHECK(region(-1.0, 0.58) == "D4");
  CHECK(region(-1.0, 0.50) == "D5/D6");
  CHECK(region(-1.0, 0.30) == "D7");
  CHECK(region(-1.0, -1.0) == "D8");
  CHECK(region_of(amp, cls, -1.0, 0.58).prediction.find("2-torus") != std::string::npos);
  CHECK(region_of(amp, cls, -1.0, 0.50).prediction.find("3-torus") != std::string::npos);
}

TEST_CASE("bifurcation lines: counts, slopes, and parameter directions") {
  const AmplitudeSystem ib = ident_amp(-1.0, 2.0, 1.0, 1.0);
  auto lines_ib = bifurcation_lines(ib, classify(ib));
  CHECK(lines_ib.size() == 4);

  const AmplitudeSystem via = ident_amp(-1.0, 2.10189, -0.63587, -1.0);
  auto lines_via = bifurcation_lines(via, classify(via));
  REQUIRE(lines_via.size() == 6);
  int approx_count = 0;
  for (const auto& l : lines_via) {
    // with the identity c-map the alpha direction lies along the line itself
    const double along = l.alpha_dir[0] * l.normal[0] + l.alpha_dir[1] * l.normal[1];
    CHECK(std::abs(along) < 1e-12);
    if (l.approximate) ++approx_count;
  }
  CHECK(approx_count == 1);  // only the heteroclinic line is order-limited

  std::ostringstream csv, gp;
  export_lines_csv(via, lines_via, 0.1, csv);
  CHECK(csv.str().find("hopf-interior") != std::string::npos);
  export_lines_gnuplot(via, lines_via, 0.1, "lines.csv", gp);
  CHECK(gp.str().find("plot") != std::string::npos);

  const auto j = unfolding_to_json(via, classify(via), lines_via);
  CHECK(j["case"] == "VIa");
  CHECK(j["lines"].size() == 6);
}

TEST_CASE("degenerate parameter map is rejected") {
  AmplitudeSystem amp = ident_amp(-1.0, 2.0, 1.0, 1.0);
  amp.c2_coeff[0] = amp.c1_coeff[0];
  amp.c2_coeff[1] = amp.c1_coeff[1];  // c-map rank 1
  CHECK_THROWS_WITH_AS(bifurcation_lines(amp, classify(amp)),
                       doctest::Contains("degenerate"), PipelineError);
}

TEST_CASE("amplitude flow finds the expected equilibria") {
  const AmplitudeSystem amp = ident_amp(-1.0, 2.0, 1.0, 1.0);  // case Ib
  // D4 point: c1 = -1, c2 = -0.7: origin, both pure modes, and the mixed state
  auto eqs = amplitude_flow(amp, -1.0, -0.7);
  REQUIRE(eqs.size() == 4);
  CHECK(eqs[0].kind == "origin");
  CHECK(eqs[1].kind == "mode-1");
  CHECK(eqs[1].r1sq == doctest::Approx(1.0));
  CHECK(eqs[2].kind == "mode-2");
  CHECK(eqs[2].r2sq == doctest::Approx(0.7));
  CHECK(eqs[3].kind == "interior");
  CHECK(eqs[3].r1sq > 0);
  CHECK(eqs[3].r2sq > 0);
  // scaled-time stability: with eps1 = -1 the true flow reverses these signs;
  // in D4 both pure modes are true-stable, hence scaled-unstable
  CHECK(!eqs[1].stable);
  CHECK(!eqs[2].stable);
  // in the first quadrant only the origin remains
  CHECK(amplitude_flow(amp, 1.0, 1.0).size() == 1);
}
