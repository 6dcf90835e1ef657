#include "dhopf/unfolding.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace dhopf {

// ---- reduction to the planar amplitude system --------------------------------

AmplitudeSystem reduce(const NormalFormCoeffs& c, const Param& mu0) {
  const double P = c.B2100.real();
  const double S = c.B0021.real();
  if (std::abs(P) < 1e-10 || std::abs(S) < 1e-10)
    throw PipelineError("unfolding", "degenerate cubic coefficient (Re B2100 or Re B0021 ~ 0)");
  AmplitudeSystem amp;
  amp.eps1 = P > 0 ? 1.0 : -1.0;
  amp.eps2 = S > 0 ? 1.0 : -1.0;
  amp.d0 = amp.eps1 * amp.eps2;
  amp.b0 = amp.eps1 * amp.eps2 * c.B1011.real() / S;
  amp.c0 = c.B1110.real() / P;
  amp.disc = amp.d0 - amp.b0 * amp.c0;
  amp.c1_coeff[0] = amp.eps1 * c.B11.real();
  amp.c1_coeff[1] = amp.eps1 * c.B21.real();
  amp.c2_coeff[0] = amp.eps1 * c.B13.real();
  amp.c2_coeff[1] = amp.eps1 * c.B23.real();
  amp.mu0 = mu0;
  return amp;
}

// ---- classification ------------------------------------------------------------

std::string to_string(UnfoldingCase c) {
  switch (c) {
    case UnfoldingCase::Ia: return "Ia";
    case UnfoldingCase::Ib: return "Ib";
    case UnfoldingCase::II: return "II";
    case UnfoldingCase::III: return "III";
    case UnfoldingCase::IVa: return "IVa";
    case UnfoldingCase::IVb: return "IVb";
    case UnfoldingCase::V: return "V";
    case UnfoldingCase::VIa: return "VIa";
    case UnfoldingCase::VIb: return "VIb";
    case UnfoldingCase::VIIa: return "VIIa";
    case UnfoldingCase::VIIb: return "VIIb";
    case UnfoldingCase::VIII: return "VIII";
  }
  return "?";
}

UnfoldingClass classify(const AmplitudeSystem& amp, double sign_tol) {
  auto sgn = [&](double v, const char* what) {
    if (std::abs(v) < sign_tol) {
      std::ostringstream os;
      os << "sign of " << what << " is below the boundary tolerance (" << v << ")";
      throw PipelineError("unfolding", os.str());
    }
    return v > 0 ? 1 : -1;
  };
  const int sd = sgn(amp.d0, "d0"), sb = sgn(amp.b0, "b0");
  const int sc = sgn(amp.c0, "c0"), sD = sgn(amp.disc, "d0 - b0*c0");
  UnfoldingClass out;
  out.signs = {sd, sb, sc, sD};
  if (sd > 0) {
    if (sb > 0 && sc > 0)
      out.label = sD > 0 ? UnfoldingCase::Ia : UnfoldingCase::Ib;
    else if (sb > 0)
      out.label = UnfoldingCase::II;
    else if (sc > 0)
      out.label = UnfoldingCase::III;
    else
      out.label = sD > 0 ? UnfoldingCase::IVa : UnfoldingCase::IVb;
  } else {
    if (sb > 0 && sc > 0)
      out.label = UnfoldingCase::V;
    else if (sb > 0)
      out.label = sD > 0 ? UnfoldingCase::VIa : UnfoldingCase::VIb;
    else if (sc > 0)
      out.label = sD > 0 ? UnfoldingCase::VIIa : UnfoldingCase::VIIb;
    else
      out.label = UnfoldingCase::VIII;
  }
  out.region_count =
      (out.label == UnfoldingCase::VIa || out.label == UnfoldingCase::VIIa) ? 8 : 6;
  return out;
}

// ---- bifurcation lines -----------------------------------------------------------

namespace {

// alpha-plane direction of a line with (c1,c2)-normal (n1,n2), through the map
// c = K alpha with K = [[c1_coeff],[c2_coeff]].
void attach_alpha_dir(const AmplitudeSystem& amp, BifLine& line) {
  const double k11 = amp.c1_coeff[0], k12 = amp.c1_coeff[1];
  const double k21 = amp.c2_coeff[0], k22 = amp.c2_coeff[1];
  const double det = k11 * k22 - k12 * k21;
  if (std::abs(det) < 1e-14)
    throw PipelineError("unfolding", "parameter directions degenerate (c-map not invertible)");
  // direction along the line in (c1,c2): rotate the normal by 90 degrees
  const double d1 = line.normal[1], d2 = -line.normal[0];
  double a1 = (k22 * d1 - k12 * d2) / det;
  double a2 = (-k21 * d1 + k11 * d2) / det;
  const double nrm = std::hypot(a1, a2);
  line.alpha_dir[0] = a1 / nrm;
  line.alpha_dir[1] = a2 / nrm;
  line.mu_dir[0] = line.alpha_dir[0];
  line.mu_dir[1] = line.alpha_dir[1];
}

BifLine make_line(const AmplitudeSystem& amp, const std::string& name, double n1, double n2,
                  bool approx, const std::string& note) {
  BifLine l;
  l.name = name;
  const double nn = std::hypot(n1, n2);
  l.normal[0] = n1 / nn;
  l.normal[1] = n2 / nn;
  l.approximate = approx;
  l.side_note = note;
  attach_alpha_dir(amp, l);
  return l;
}

}  // namespace

std::vector<BifLine> bifurcation_lines(const AmplitudeSystem& amp, const UnfoldingClass& cls) {
  std::vector<BifLine> lines;
  lines.push_back(make_line(amp, "hopf-mode-1", 1.0, 0.0, false,
                            "first critical mode bifurcates crossing c1 = 0"));
  lines.push_back(make_line(amp, "hopf-mode-2", 0.0, 1.0, false,
                            "second critical mode bifurcates crossing c2 = 0"));
  // mixed-mode branch meets the pure-mode branches: c2 = c0 c1 and d0 c1 = b0 c2
  lines.push_back(make_line(amp, "torus-from-mode-1", amp.c0, -1.0, false,
                            "c2 = c0 c1; mixed-mode state meets the first-mode branch"));
  lines.push_back(make_line(amp, "torus-from-mode-2", amp.d0, -amp.b0, false,
                            "d0 c1 = b0 c2; mixed-mode state meets the second-mode branch"));
  if (cls.label == UnfoldingCase::VIa || cls.label == UnfoldingCase::VIIa) {
    if (std::abs(amp.b0 + 1.0) < 1e-12)
      throw PipelineError("unfolding", "interior Hopf line degenerate (b0 ~ -1)");
    lines.push_back(make_line(amp, "hopf-interior", amp.c0 - 1.0, -(amp.b0 + 1.0), false,
                              "c2 = (c0-1)/(b0+1) c1; Hopf of the mixed-mode state"));
    BifLine het = make_line(amp, "heteroclinic", amp.c0 - 1.0, -(amp.b0 + 1.0), true,
                            "o(c1)-close to hopf-interior; destroys the invariant torus");
    lines.push_back(het);
  }
  return lines;
}

// ---- region lookup ---------------------------------------------------------------

namespace {

RegionInfo generic_region(const AmplitudeSystem& amp, double c1, double c2) {
  RegionInfo r;
  std::ostringstream lab, pred;
  lab << "c1" << (c1 > 0 ? ">0" : "<0") << ",c2" << (c2 > 0 ? ">0" : "<0");
  r.label = lab.str();
  auto eqs = amplitude_flow(amp, c1, c2);
  int stable = 0;
  pred << "amplitude equilibria:";
  for (const auto& e : eqs) {
    pred << " " << e.kind << (e.stable ? "(stable)" : "(unstable)");
    if (e.stable) ++stable;
  }
  if (stable == 0) pred << "; no stable amplitude state";
  r.prediction = pred.str();
  return r;
}

RegionInfo region_Ib(const AmplitudeSystem& amp, double c1, double c2, double tol) {
  // six regions delimited by the axes and the third-quadrant lines
  // c2 = c1/b0 (upper) and c2 = c0 c1 (lower); stability stated for eps1 = -1.
  const double scale = std::hypot(c1, c2);
  auto on = [&](double f) { return std::abs(f) < tol * scale; };
  if (on(c1) || on(c2)) return {"boundary", "on a primary bifurcation line"};
  if (c1 > 0 && c2 > 0) return {"D1", "the spatially homogeneous steady state is a sink"};
  if (c1 < 0 && c2 > 0)
    return {"D2", "one stable periodic solution with the spatial profile of mode n1"};
  if (c1 > 0 && c2 < 0)
    return {"D6", "one stable periodic solution with the spatial profile of mode n2"};
  // third quadrant: c0 c1 < c1/b0 < 0 for c1 < 0 (since b0 c0 > 1 in case Ib)
  const double upper = c1 / amp.b0, lower = amp.c0 * c1;
  if (on(c2 - upper) || on(c2 - lower)) return {"boundary", "on a secondary bifurcation line"};
  if (c2 > upper)
    return {"D3", "stable mode-n1 periodic solution; the mode-n2 periodic state is a saddle"};
  if (c2 < lower)
    return {"D5", "stable mode-n2 periodic solution; the mode-n1 periodic state is a saddle"};
  return {"D4",
          "two stable periodic solutions with different spatial profiles coexist, "
          "separated by an unstable mixed-mode (quasi-periodic) state"};
}

RegionInfo region_VIa(const AmplitudeSystem& amp, double c1, double c2, double tol) {
  // eight regions; the interesting wedge sits at c1 < 0, c2 > 0 between
  // c2 = c0 c1 (top), c2 = (c0-1)/(b0+1) c1 (interior Hopf), c2 = -c1/b0 (bottom).
  const double scale = std::hypot(c1, c2);
  auto on = [&](double f) { return std::abs(f) < tol * scale; };
  if (on(c1) || on(c2)) return {"boundary", "on a primary bifurcation line"};
  if (c1 > 0 && c2 < 0) return {"D1", "only the saddle steady state; no local attractor"};
  if (c1 > 0 && c2 > 0) return {"D2", "the spatially homogeneous steady state is a sink"};
  if (c1 < 0 && c2 < 0) return {"D8", "no stable invariant set near the bifurcation point"};
  const double top = amp.c0 * c1;                             // > 0 for c1 < 0, c0 < 0
  const double mid = (amp.c0 - 1.0) / (amp.b0 + 1.0) * c1;    // interior Hopf line
  const double bot = -c1 / amp.b0;
  if (on(c2 - top) || on(c2 - mid) || on(c2 - bot))
    return {"boundary", "on a secondary bifurcation line"};
  if (c2 > top) return {"D3", "one stable periodic solution (first critical mode)"};
  if (c2 > mid)
    return {"D4", "stable quasi-periodic solution on a 2-torus (both modes active)"};
  if (c2 > bot)
    return {"D5/D6",
            "a 3-torus state born at the interior Hopf line, destroyed along a nearby "
            "heteroclinic line (o(c1)-close, not resolvable at cubic order); past it, "
            "irregular or chaotic motion may appear"};
  return {"D7", "no stable invariant set; the mixed-mode state has left through the "
                "second-mode branch"};
}

}  // namespace

RegionInfo region_of(const AmplitudeSystem& amp, const UnfoldingClass& cls, double alpha1,
                     double alpha2, double line_tol) {
  const double c1 = amp.c1(alpha1, alpha2);
  const double c2 = amp.c2(alpha1, alpha2);
  if (amp.eps1 < 0) {
    if (cls.label == UnfoldingCase::Ib) return region_Ib(amp, c1, c2, line_tol);
    if (cls.label == UnfoldingCase::VIa) return region_VIa(amp, c1, c2, line_tol);
  }
  return generic_region(amp, c1, c2);
}

// ---- amplitude flow ---------------------------------------------------------------

namespace {

AmpEquilibrium eq_at(const AmplitudeSystem& amp, double c1, double c2, double x, double y,
                     std::string kind) {
  AmpEquilibrium e;
  e.r1sq = x;
  e.r2sq = y;
  e.kind = std::move(kind);
  const double r1 = std::sqrt(std::max(0.0, x)), r2 = std::sqrt(std::max(0.0, y));
  // Jacobian of r1' = r1(c1 + r1^2 + b0 r2^2), r2' = r2(c2 + c0 r1^2 + d0 r2^2)
  Eigen::Matrix2d J;
  J(0, 0) = c1 + 3 * x + amp.b0 * y;
  J(0, 1) = 2 * amp.b0 * r1 * r2;
  J(1, 0) = 2 * amp.c0 * r1 * r2;
  J(1, 1) = c2 + amp.c0 * x + 3 * amp.d0 * y;
  Eigen::EigenSolver<Eigen::Matrix2d> es(J);
  e.jac_eig = {es.eigenvalues()(0), es.eigenvalues()(1)};
  e.stable = e.jac_eig[0].real() < 0 && e.jac_eig[1].real() < 0;
  return e;
}

}  // namespace

std::vector<AmpEquilibrium> amplitude_flow(const AmplitudeSystem& amp, double c1, double c2) {
  std::vector<AmpEquilibrium> eqs;
  eqs.push_back(eq_at(amp, c1, c2, 0.0, 0.0, "origin"));
  if (-c1 > 0) eqs.push_back(eq_at(amp, c1, c2, -c1, 0.0, "mode-1"));
  if (-c2 / amp.d0 > 0) eqs.push_back(eq_at(amp, c1, c2, 0.0, -c2 / amp.d0, "mode-2"));
  if (std::abs(amp.disc) > 1e-14) {
    const double x = (amp.b0 * c2 - amp.d0 * c1) / amp.disc;
    const double y = (amp.c0 * c1 - c2) / amp.disc;
    if (x > 0 && y > 0) eqs.push_back(eq_at(amp, c1, c2, x, y, "interior"));
  }
  return eqs;
}

// ---- export -------------------------------------------------------------------------

nlohmann::json unfolding_to_json(const AmplitudeSystem& amp, const UnfoldingClass& cls,
                                 const std::vector<BifLine>& lines) {
  nlohmann::json j;
  j["case"] = to_string(cls.label);
  j["signs"] = {cls.signs[0], cls.signs[1], cls.signs[2], cls.signs[3]};
  j["region_count"] = cls.region_count;
  j["eps1"] = amp.eps1;
  j["eps2"] = amp.eps2;
  j["b0"] = amp.b0;
  j["c0"] = amp.c0;
  j["d0"] = amp.d0;
  j["disc"] = amp.disc;
  j["c1_coeff"] = {amp.c1_coeff[0], amp.c1_coeff[1]};
  j["c2_coeff"] = {amp.c2_coeff[0], amp.c2_coeff[1]};
  j["mu0"] = {amp.mu0[0], amp.mu0[1]};
  nlohmann::json ls = nlohmann::json::array();
  for (const auto& l : lines) {
    ls.push_back({{"name", l.name},
                  {"normal", {l.normal[0], l.normal[1]}},
                  {"alpha_dir", {l.alpha_dir[0], l.alpha_dir[1]}},
                  {"mu_dir", {l.mu_dir[0], l.mu_dir[1]}},
                  {"approximate", l.approximate},
                  {"side_note", l.side_note}});
  }
  j["lines"] = ls;
  return j;
}

void export_lines_csv(const AmplitudeSystem& amp, const std::vector<BifLine>& lines,
                      double span, std::ostream& os) {
  os << "line,s,alpha1,alpha2,mu1,mu2,c1,c2\n";
  const int steps = 50;
  for (const auto& l : lines)
    for (int i = 0; i <= steps; ++i) {
      const double s = -span + 2.0 * span * i / steps;
      const double a1 = s * l.alpha_dir[0], a2 = s * l.alpha_dir[1];
      os << l.name << ',' << s << ',' << a1 << ',' << a2 << ',' << amp.mu0[0] + a1 << ','
         << amp.mu0[1] + a2 << ',' << amp.c1(a1, a2) << ',' << amp.c2(a1, a2) << '\n';
    }
}

void export_lines_gnuplot(const AmplitudeSystem& amp, const std::vector<BifLine>& lines,
                          double span, const std::string& csv_path, std::ostream& os) {
  os << "# bifurcation lines near mu0 = (" << amp.mu0[0] << ", " << amp.mu0[1] << ")\n";
  os << "set datafile separator ','\n";
  os << "set xlabel 'mu1'\nset ylabel 'mu2'\n";
  os << "set xrange [" << amp.mu0[0] - span << ':' << amp.mu0[0] + span << "]\n";
  os << "set yrange [" << amp.mu0[1] - span << ':' << amp.mu0[1] + span << "]\n";
  os << "plot ";
  bool first = true;
  for (const auto& l : lines) {
    if (!first) os << ", \\\n     ";
    first = false;
    os << "'" << csv_path << "' using 5:(strcol(1) eq '" << l.name
       << "' ? $6 : 1/0) with lines title '" << l.name << (l.approximate ? " (approx)" : "")
       << "'";
  }
  os << "\n";
}

}  // namespace dhopf
