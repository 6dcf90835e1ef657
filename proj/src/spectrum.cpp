#include "dhopf/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace dhopf {

namespace {
constexpr double kPi = std::numbers::pi;

double model_freq_factor(const ModelSpec& spec, const Param& mu) {
  return (spec.mu1_rescales_time ? mu[0] : 1.0) * spec.time_scale;
}

Eigen::VectorXcd smallest_right_singular(const Eigen::MatrixXcd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
  return svd.matrixV().col(M.cols() - 1);
}
Eigen::VectorXcd smallest_left_singular(const Eigen::MatrixXcd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullU);
  return svd.matrixU().col(M.rows() - 1).conjugate();
}
}  // namespace

std::vector<double> factor_frequencies(const ScalarDelayFactor& f) {
  const double P = f.p1 * f.p1 - 2.0 * f.p0 - f.q1 * f.q1;
  const double Q = f.p0 * f.p0 - f.q0 * f.q0;
  const double disc = P * P - 4.0 * Q;
  std::vector<double> out;
  if (disc < 0.0) return out;
  const double s = std::sqrt(disc);
  for (double z2 : {(-P - s) / 2.0, (-P + s) / 2.0})
    if (z2 > 0.0) out.push_back(std::sqrt(z2));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double factor_critical_delay(const ScalarDelayFactor& f, int root, int j) {
  auto zs = factor_frequencies(f);
  if (root < 0 || root >= static_cast<int>(zs.size()))
    throw std::out_of_range("factor_critical_delay: no such frequency root");
  const double z = zs[root];
  const cd p = cd(f.p0 - z * z, f.p1 * z);
  const cd q = cd(f.q0, f.q1 * z);
  const cd w = -p / q;  // = e^{-i z rho}
  double theta = std::fmod(-std::arg(w), 2.0 * kPi);
  if (theta < 0.0) theta += 2.0 * kPi;
  return (theta + 2.0 * kPi * j) / z;
}

double factor_transversality(const ScalarDelayFactor& f, int root, double rho) {
  auto zs = factor_frequencies(f);
  const double z = zs.at(root);
  const cd lam(0.0, z);
  const cd p = lam * lam + f.p1 * lam + f.p0;
  const cd q = f.q1 * lam + f.q0;
  const cd E = -p / q;  // e^{-lam rho} on the crossing
  const cd dp = 2.0 * lam + f.p1;
  const cd num = lam * q * E;
  const cd den = dp + (cd(f.q1) - rho * q) * E;
  return (num / den).real();
}

Eigen::MatrixXcd char_matrix(const ModelSpec& spec, int m, const Param& mu, cd lambda) {
  const int n = spec.n_components;
  const double k = double(m) * double(m) / (spec.domain_scale * spec.domain_scale);
  Eigen::MatrixXcd M = lambda * Eigen::MatrixXcd::Identity(n, n);
  M += (k * spec.diffusion(mu)).asDiagonal().toDenseMatrix().cast<cd>();
  M -= spec.linear_at0(mu).cast<cd>();
  const auto G = spec.linear_delayed(mu);
  const auto rs = spec.delays(mu);
  for (size_t i = 0; i < G.size(); ++i) M -= std::exp(-lambda * rs[i]) * G[i].cast<cd>();
  return M;
}

cd char_residual(const ModelSpec& spec, int m, const Param& mu, cd lambda) {
  return char_matrix(spec, m, mu, lambda).determinant();
}

std::vector<ImagRoot> imaginary_roots_closed(const ModelSpec& spec, int m, double mu2) {
  if (!spec.closed_form) throw std::invalid_argument("imaginary_roots_closed: no closed form");
  ScalarDelayFactor f = spec.closed_form->factor(m, mu2);
  std::vector<ImagRoot> out;
  auto zs = factor_frequencies(f);
  for (int r = 0; r < static_cast<int>(zs.size()); ++r) {
    ImagRoot ir;
    ir.freq_orig = zs[r];
    ir.mu1 = factor_critical_delay(f, r, 0);
    Param mu{ir.mu1, mu2};
    ir.freq_model = ir.freq_orig * model_freq_factor(spec, mu);
    ir.residual = std::abs(char_residual(spec, m, mu, cd(0.0, ir.freq_model)));
    ir.root = r;
    out.push_back(ir);
  }
  return out;
}

namespace {

// Newton polish on (freq_model, mu1) for Re/Im det Delta_m(i w) = 0 at fixed mu2.
bool newton_polish(const ModelSpec& spec, int m, double mu2, double& w, double& mu1,
                   const RootSearchOpts& opts) {
  for (int it = 0; it < opts.newton_max_iter; ++it) {
    const Param mu{mu1, mu2};
    const cd g = char_residual(spec, m, mu, cd(0.0, w));
    if (std::abs(g) < opts.tol) return true;
    const double hw = 1e-7 * (1.0 + std::abs(w));
    const double hm = 1e-7 * (1.0 + std::abs(mu1));
    const cd gw = (char_residual(spec, m, mu, cd(0.0, w + hw)) -
                   char_residual(spec, m, mu, cd(0.0, w - hw))) /
                  (2.0 * hw);
    const cd gm = (char_residual(spec, m, {mu1 + hm, mu2}, cd(0.0, w)) -
                   char_residual(spec, m, {mu1 - hm, mu2}, cd(0.0, w))) /
                  (2.0 * hm);
    // solve [Re gw Re gm; Im gw Im gm] [dw dmu] = -[Re g; Im g]
    const double a = gw.real(), b = gm.real(), c = gw.imag(), d = gm.imag();
    const double det = a * d - b * c;
    if (std::abs(det) < 1e-300) return false;
    const double dw = (-g.real() * d + g.imag() * b) / det;
    const double dmu = (-g.imag() * a + g.real() * c) / det;
    w += dw;
    mu1 += dmu;
    if (!(w > 0.0) || !std::isfinite(w) || !std::isfinite(mu1)) return false;
  }
  return false;
}

}  // namespace

std::vector<ImagRoot> imaginary_roots_generic(const ModelSpec& spec, int m, double mu2,
                                              const RootSearchOpts& opts) {
  RootSearchOpts o = opts;
  if (o.mu1_hi <= 0.0) o.mu1_hi = 4.0 * std::max(1.0, spec.param[0]);
  double z_max = o.z_max;
  if (z_max <= 0.0) {
    // imaginary roots satisfy |w| <= k d_max + ||A|| + sum ||G_k||
    const Param hi{o.mu1_hi, mu2};
    const double k = double(m) * double(m) / (spec.domain_scale * spec.domain_scale);
    double bound = k * spec.diffusion(hi).maxCoeff() + spec.linear_at0(hi).norm();
    for (const auto& G : spec.linear_delayed(hi)) bound += G.norm();
    z_max = 1.5 * bound;
  }

  std::vector<ImagRoot> out;
  const int nw = o.freq_grid, nm = o.mu1_grid;
  std::vector<double> mag((nw + 1) * (nm + 1));
  auto idx = [nm](int iw, int im) { return iw * (nm + 1) + im; };
  for (int iw = 0; iw <= nw; ++iw) {
    const double w = z_max * (iw + 0.5) / (nw + 1);
    for (int im = 0; im <= nm; ++im) {
      const double mu1 = o.mu1_lo + (o.mu1_hi - o.mu1_lo) * im / nm;
      mag[idx(iw, im)] = std::abs(char_residual(spec, m, {mu1, mu2}, cd(0.0, w)));
    }
  }
  for (int iw = 1; iw < nw; ++iw)
    for (int im = 1; im < nm; ++im) {
      const double v = mag[idx(iw, im)];
      if (v <= mag[idx(iw - 1, im)] && v <= mag[idx(iw + 1, im)] &&
          v <= mag[idx(iw, im - 1)] && v <= mag[idx(iw, im + 1)]) {
        double w = z_max * (iw + 0.5) / (nw + 1);
        double mu1 = o.mu1_lo + (o.mu1_hi - o.mu1_lo) * im / nm;
        if (newton_polish(spec, m, mu2, w, mu1, o) && w > 0.0 && mu1 > o.mu1_lo / 2 &&
            mu1 < o.mu1_hi * 1.05) {
          bool dup = false;
          for (const auto& r : out)
            if (std::abs(r.freq_model - w) < 1e-6 * (1 + std::abs(w)) &&
                std::abs(r.mu1 - mu1) < 1e-6 * (1 + std::abs(mu1)))
              dup = true;
          if (!dup) {
            ImagRoot ir;
            ir.freq_model = w;
            ir.mu1 = mu1;
            ir.freq_orig = w / model_freq_factor(spec, {mu1, mu2});
            ir.residual = std::abs(char_residual(spec, m, {mu1, mu2}, cd(0.0, w)));
            ir.root = 0;
            out.push_back(ir);
          }
        }
      }
    }
  std::sort(out.begin(), out.end(),
            [](const ImagRoot& a, const ImagRoot& b) { return a.mu1 < b.mu1; });
  return out;
}

std::vector<ImagRoot> imaginary_roots(const ModelSpec& spec, int m, const Param& mu,
                                      const RootSearchOpts& opts, double agree_tol) {
  if (!spec.closed_form) return imaginary_roots_generic(spec, m, mu[1], opts);
  auto closed = imaginary_roots_closed(spec, m, mu[1]);
  RootSearchOpts o = opts;
  if (o.mu1_hi <= 0.0) {
    o.mu1_hi = 4.0 * std::max(1.0, spec.param[0]);
    for (const auto& r : closed) o.mu1_hi = std::max(o.mu1_hi, 1.5 * r.mu1);
  }
  auto generic = imaginary_roots_generic(spec, m, mu[1], o);
  for (const auto& c : closed) {
    if (c.mu1 > o.mu1_hi) continue;  // outside the generic search window
    bool matched = false;
    for (const auto& g : generic)
      if (std::abs(g.freq_orig - c.freq_orig) < agree_tol * (1 + std::abs(c.freq_orig)) &&
          std::abs(g.mu1 - c.mu1) < agree_tol * (1 + std::abs(c.mu1)))
        matched = true;
    if (!matched)
      throw std::runtime_error("imaginary_roots: closed-form and generic root paths disagree");
  }
  return closed;
}

HopfBranch hopf_curve(const ModelSpec& spec, BranchId id, double mu2_lo, double mu2_hi,
                      int steps, const RootSearchOpts& opts) {
  HopfBranch br;
  br.id = id;
  double prev_mu1 = -1.0, prev_freq = -1.0;
  for (int i = 0; i <= steps; ++i) {
    const double mu2 = mu2_lo + (mu2_hi - mu2_lo) * i / std::max(1, steps);
    HopfSample s;
    s.mu2 = mu2;
    if (spec.closed_form) {
      ScalarDelayFactor f = spec.closed_form->factor(id.m, mu2);
      auto zs = factor_frequencies(f);
      if (id.root >= static_cast<int>(zs.size())) continue;  // branch terminates here
      s.freq_orig = zs[id.root];
      s.mu1 = factor_critical_delay(f, id.root, id.j);
      s.transversality_sign =
          factor_transversality(f, id.root, s.mu1) > 0.0 ? +1 : -1;
    } else {
      auto roots = imaginary_roots_generic(spec, id.m, mu2, opts);
      if (roots.empty()) continue;
      // track the sample continuing the branch (nearest in (mu1, freq))
      size_t best = 0;
      double best_d = 1e300;
      for (size_t r = 0; r < roots.size(); ++r) {
        double dcur = (prev_mu1 < 0)
                          ? static_cast<double>(r)
                          : std::abs(roots[r].mu1 - prev_mu1) +
                                std::abs(roots[r].freq_orig - prev_freq);
        if (dcur < best_d) {
          best_d = dcur;
          best = r;
        }
      }
      s.freq_orig = roots[best].freq_orig;
      s.mu1 = roots[best].mu1;
      s.transversality_sign =
          transversality(spec, id.m, {s.mu1, mu2}, roots[best].freq_model, false) > 0 ? +1 : -1;
    }
    const Param mu{s.mu1, mu2};
    s.freq_model = s.freq_orig * model_freq_factor(spec, mu);
    s.residual = std::abs(char_residual(spec, id.m, mu, cd(0.0, s.freq_model)));
    prev_mu1 = s.mu1;
    prev_freq = s.freq_orig;
    br.samples.push_back(s);
  }
  return br;
}

double transversality(const ModelSpec& spec, int m, const Param& mu, double freq_model,
                      bool check_closed_form, double agree_tol) {
  const cd lam(0.0, freq_model);
  Eigen::MatrixXcd M = char_matrix(spec, m, mu, lam);
  Eigen::VectorXcd phi = smallest_right_singular(M);
  Eigen::VectorXcd psi = smallest_left_singular(M);

  // d Delta / d lambda = I + sum r_k G_k e^{-lam r_k}
  const int n = spec.n_components;
  Eigen::MatrixXcd dL = Eigen::MatrixXcd::Identity(n, n);
  const auto G = spec.linear_delayed(mu);
  const auto rs = spec.delays(mu);
  for (size_t k = 0; k < G.size(); ++k)
    dL += rs[k] * std::exp(-lam * rs[k]) * G[k].cast<cd>();

  const double h = 1e-6 * (1.0 + std::abs(mu[0]));
  Eigen::MatrixXcd dM = (char_matrix(spec, m, {mu[0] + h, mu[1]}, lam) -
                         char_matrix(spec, m, {mu[0] - h, mu[1]}, lam)) /
                        (2.0 * h);
  const cd dlam_model = -(psi.transpose() * dM * phi)(0) / (psi.transpose() * dL * phi)(0);
  const double factor = model_freq_factor(spec, mu);
  const double val = dlam_model.real() / factor;  // d Re(lambda_orig)/d mu1 at the crossing

  if (check_closed_form && spec.closed_form) {
    ScalarDelayFactor f = spec.closed_form->factor(m, mu[1]);
    auto zs = factor_frequencies(f);
    const double z = freq_model / factor;
    int root = -1;
    for (int r = 0; r < static_cast<int>(zs.size()); ++r)
      if (std::abs(zs[r] - z) < 1e-6 * (1 + z)) root = r;
    if (root >= 0) {
      const double cfv = factor_transversality(f, root, mu[0]);
      if (std::abs(cfv - val) > agree_tol * (1.0 + std::abs(cfv)))
        throw std::runtime_error(
            "transversality: closed-form and implicit-differentiation values disagree");
    }
  }
  return val;
}

int tail_wave_threshold(const ModelSpec& spec, const Param& mu, int cap) {
  const double dmin = spec.diffusion(mu).minCoeff();
  double bound = spec.linear_at0(mu).norm();
  for (const auto& G : spec.linear_delayed(mu)) bound += G.norm();
  const double l = spec.domain_scale;
  for (int m = 1; m <= cap; ++m)
    if (dmin * m * m / (l * l) > bound) return m;
  return cap;
}

int count_roots_rect(const ModelSpec& spec, int m, const Param& mu, double re_lo,
                     double re_hi, double im_lo, double im_hi, int nodes) {
  // phase winding of det Delta_m along the rectangle boundary
  for (int attempt = 0; attempt < 3; ++attempt) {
    const int per_side = nodes / 4;
    std::vector<cd> pts;
    pts.reserve(4 * per_side + 1);
    auto push_side = [&](cd a, cd b) {
      for (int i = 0; i < per_side; ++i) pts.push_back(a + (b - a) * (double(i) / per_side));
    };
    const cd c1(re_lo, im_lo), c2(re_hi, im_lo), c3(re_hi, im_hi), c4(re_lo, im_hi);
    push_side(c1, c2);
    push_side(c2, c3);
    push_side(c3, c4);
    push_side(c4, c1);
    pts.push_back(c1);

    double total = 0.0;
    bool ok = true;
    cd prev = char_residual(spec, m, mu, pts[0]);
    for (size_t i = 1; i < pts.size() && ok; ++i) {
      cd cur = char_residual(spec, m, mu, pts[i]);
      if (std::abs(cur) == 0.0) {
        ok = false;
        break;
      }
      double d = std::arg(cur / prev);
      if (std::abs(d) > kPi / 2) ok = false;  // phase step too coarse
      total += d;
      prev = cur;
    }
    if (ok) {
      const double winding = total / (2.0 * kPi);
      const double nearest = std::round(winding);
      if (std::abs(winding - nearest) < 1e-3) return static_cast<int>(nearest);
    }
    nodes *= 4;
  }
  throw std::runtime_error("count_roots_rect: non-integral winding number (root near contour)");
}

HypothesisReport verify_nondegeneracy(const ModelSpec& spec, const DoubleHopfPoint& point,
                                      const NondegeneracyOpts& opts) {
  HypothesisReport rep;
  const Param mu = point.mu0;

  // (H2) weak nonresonance
  const double ratio = std::min(point.w1, point.w2) / std::max(point.w1, point.w2);
  rep.resonance_margin = 1e300;
  for (int i = 1; i <= 4; ++i)
    for (int j = i; j <= 4; ++j) {
      const double d = std::abs(ratio - double(i) / double(j));
      if (d < rep.resonance_margin) {
        rep.resonance_margin = d;
        rep.nearest_ratio = {i, j};
      }
    }
  rep.H2 = rep.resonance_margin > opts.eps_res;

  // (H3) transversal crossings on both branches
  try {
    const double t1 = transversality(spec, point.n1, mu, point.w1, false);
    const double t2 = transversality(spec, point.n2, mu, point.w2, false);
    rep.H3 = std::abs(t1) > 1e-8 && std::abs(t2) > 1e-8;
  } catch (const std::exception& e) {
    rep.H3 = false;
    rep.detail += std::string("transversality: ") + e.what() + "; ";
  }

  // (H1) exactly the four known roots near the axis; tail certified by decay bound
  rep.tail_threshold = tail_wave_threshold(spec, mu, 200);
  const int m_max = opts.m_max >= 0 ? opts.m_max : rep.tail_threshold;
  rep.m_checked = m_max;
  const double Omega =
      opts.omega_cap > 0 ? opts.omega_cap : 4.0 * std::max(point.w1, point.w2);

  bool h1 = true;
  for (int m = 0; m <= m_max; ++m) {
    int expected = 0;
    if (m == point.n1) expected += 2;
    if (m == point.n2) expected += 2;
    int got = 0;
    double delta = opts.delta;
    for (int attempt = 0;; ++attempt) {
      try {
        got = count_roots_rect(spec, m, mu, -delta, delta, -Omega, Omega, opts.contour_nodes);
        break;
      } catch (const std::exception&) {
        if (attempt >= 1) {
          rep.detail += "contour failure at m=" + std::to_string(m) + "; ";
          got = -1;
          break;
        }
        delta *= 1.5;  // auto-inflate once
      }
    }
    rep.axis_root_count.push_back(got);
    if (got != expected) {
      h1 = false;
      rep.detail += "m=" + std::to_string(m) + " rect count " + std::to_string(got) +
                    " (expected " + std::to_string(expected) + "); ";
    }
  }
  // simplicity of the two critical roots (well-separated smallest singular value)
  for (int k = 0; k < 2; ++k) {
    const int m = k == 0 ? point.n1 : point.n2;
    const double w = k == 0 ? point.w1 : point.w2;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(char_matrix(spec, m, mu, cd(0.0, w)));
    const auto& sv = svd.singularValues();
    if (sv[sv.size() - 1] > 1e-6 * sv[0] ||
        (sv.size() > 1 && sv[sv.size() - 2] < 1e-6 * sv[0])) {
      h1 = false;
      rep.detail += "critical root at m=" + std::to_string(m) + " not simple; ";
    }
  }
  rep.H1 = h1;
  return rep;
}

DoubleHopfPoint find_double_hopf(const ModelSpec& spec, BranchId branch_a, BranchId branch_b,
                                 double mu2_lo, double mu2_hi, const RootSearchOpts& opts,
                                 const NondegeneracyOpts& nopts) {
  auto crit = [&](const BranchId& id, double mu2) -> std::pair<double, double> {
    // returns (critical mu1, original-time frequency)
    if (spec.closed_form) {
      ScalarDelayFactor f = spec.closed_form->factor(id.m, mu2);
      auto zs = factor_frequencies(f);
      if (id.root >= static_cast<int>(zs.size()))
        throw std::runtime_error("find_double_hopf: branch has no root at mu2=" +
                                 std::to_string(mu2));
      return {factor_critical_delay(f, id.root, id.j), zs[id.root]};
    }
    auto roots = imaginary_roots_generic(spec, id.m, mu2, opts);
    if (roots.empty()) throw std::runtime_error("find_double_hopf: no roots on branch");
    size_t pick = std::min<size_t>(id.j, roots.size() - 1);
    return {roots[pick].mu1, roots[pick].freq_orig};
  };
  auto diff = [&](double mu2) { return crit(branch_a, mu2).first - crit(branch_b, mu2).first; };

  // bracket the sign change
  const int scan = 128;
  double lo = mu2_lo, hi = mu2_hi, flo = diff(lo);
  bool bracketed = false;
  for (int i = 1; i <= scan; ++i) {
    const double x = mu2_lo + (mu2_hi - mu2_lo) * i / scan;
    const double fx = diff(x);
    if (flo == 0.0 || flo * fx <= 0.0) {
      hi = x;
      lo = mu2_lo + (mu2_hi - mu2_lo) * (i - 1) / scan;
      flo = diff(lo);
      bracketed = true;
      break;
    }
    flo = fx;
  }
  if (!bracketed)
    throw std::runtime_error("find_double_hopf: branches do not intersect in the sweep window");

  // bisection then secant refinement
  double fhi = diff(hi);
  for (int it = 0; it < 60 && (hi - lo) > 1e-6 * (1 + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = diff(mid);
    if (flo * fm <= 0.0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  double x0 = lo, x1 = hi, f0 = flo, f1 = fhi;
  for (int it = 0; it < 60 && std::abs(x1 - x0) > 1e-10 * (1 + std::abs(x1)); ++it) {
    if (f1 == f0) break;
    const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = diff(x1);
  }

  DoubleHopfPoint pt;
  const double mu2s = x1;
  auto ca = crit(branch_a, mu2s), cb = crit(branch_b, mu2s);
  pt.mu0 = {ca.first, mu2s};
  pt.n1 = branch_a.m;
  pt.n2 = branch_b.m;
  pt.a = branch_a;
  pt.b = branch_b;
  pt.w1_orig = ca.second;
  pt.w2_orig = cb.second;
  const double factor = model_freq_factor(spec, pt.mu0);
  pt.w1 = ca.second * factor;
  pt.w2 = cb.second * factor;
  pt.residual1 = std::abs(char_residual(spec, pt.n1, pt.mu0, cd(0.0, pt.w1)));
  pt.residual2 = std::abs(char_residual(spec, pt.n2, pt.mu0, cd(0.0, pt.w2)));
  pt.hyp = verify_nondegeneracy(spec, pt, nopts);
  return pt;
}

void export_branch_csv(const HopfBranch& branch, std::ostream& os) {
  os << "sweep-param,critical-delay,frequency,transversality-sign,residual\n";
  for (const auto& s : branch.samples)
    os << s.mu2 << "," << s.mu1 << "," << s.freq_orig << "," << s.transversality_sign << ","
       << s.residual << "\n";
}

nlohmann::json point_to_json(const DoubleHopfPoint& p) {
  return {{"mu0", {p.mu0[0], p.mu0[1]}},
          {"wave_numbers", {p.n1, p.n2}},
          {"freq_model", {p.w1, p.w2}},
          {"freq_original", {p.w1_orig, p.w2_orig}},
          {"residuals", {p.residual1, p.residual2}},
          {"hypotheses",
           {{"H1", p.hyp.H1},
            {"H2", p.hyp.H2},
            {"H3", p.hyp.H3},
            {"resonance_margin", p.hyp.resonance_margin},
            {"nearest_ratio", {p.hyp.nearest_ratio.first, p.hyp.nearest_ratio.second}},
            {"m_checked", p.hyp.m_checked},
            {"tail_threshold", p.hyp.tail_threshold},
            {"detail", p.hyp.detail}}}};
}

}  // namespace dhopf
