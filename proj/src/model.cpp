#include "dhopf/model.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dhopf/spectrum.hpp"

namespace dhopf {

Hist Hist::zero(int n, int n_delays) {
  Hist h;
  h.at0 = Eigen::VectorXcd::Zero(n);
  h.at_delay.assign(n_delays, Eigen::VectorXcd::Zero(n));
  return h;
}

Hist Hist::scaled(cd c) const {
  Hist h;
  h.at0 = c * at0;
  h.at_delay.reserve(at_delay.size());
  for (const auto& v : at_delay) h.at_delay.push_back(c * v);
  return h;
}

std::string ValidationReport::summary() const {
  if (issues.empty()) return "valid";
  std::ostringstream os;
  os << issues.size() << " issue(s):";
  for (const auto& i : issues) os << " [" << i.what << " residual=" << i.residual << "]";
  return os.str();
}

namespace {

Hist real_hist(const Eigen::VectorXd& at0, const std::vector<Eigen::VectorXd>& at_delay) {
  Hist h;
  h.at0 = at0.cast<cd>();
  for (const auto& v : at_delay) h.at_delay.push_back(v.cast<cd>());
  return h;
}

void split_hist(const Hist& h, Eigen::VectorXd& re0, std::vector<Eigen::VectorXd>& re_d,
                Eigen::VectorXd& im0, std::vector<Eigen::VectorXd>& im_d) {
  re0 = h.at0.real();
  im0 = h.at0.imag();
  re_d.clear();
  im_d.clear();
  for (const auto& v : h.at_delay) {
    re_d.push_back(v.real());
    im_d.push_back(v.imag());
  }
}

std::vector<Eigen::VectorXd> combine(double a, const Eigen::VectorXd& u0,
                                     const std::vector<Eigen::VectorXd>& ud, double b,
                                     const Eigen::VectorXd& v0,
                                     const std::vector<Eigen::VectorXd>& vd) {
  std::vector<Eigen::VectorXd> vals;
  vals.push_back(a * u0 + b * v0);
  for (size_t k = 0; k < ud.size(); ++k) vals.push_back(a * ud[k] + b * vd[k]);
  return vals;
}

// Mixed second partial of reaction_full along two real history directions.
Eigen::VectorXd fd_bilinear(const Reaction& F, const Eigen::VectorXd& u0,
                            const std::vector<Eigen::VectorXd>& ud, const Eigen::VectorXd& v0,
                            const std::vector<Eigen::VectorXd>& vd, double eps) {
  Eigen::VectorXd pp = F(combine(eps, u0, ud, eps, v0, vd));
  Eigen::VectorXd pm = F(combine(eps, u0, ud, -eps, v0, vd));
  Eigen::VectorXd mp = F(combine(-eps, u0, ud, eps, v0, vd));
  Eigen::VectorXd mm = F(combine(-eps, u0, ud, -eps, v0, vd));
  return (pp - pm - mp + mm) / (4.0 * eps * eps);
}

}  // namespace

ValidationReport validate_model(const ModelSpec& spec, unsigned rng_seed) {
  ValidationReport rep;
  const Param mu = spec.param;
  const int n = spec.n_components;
  const auto rs = spec.delays(mu);

  Eigen::VectorXd d = spec.diffusion(mu);
  for (int i = 0; i < n; ++i)
    if (d[i] <= 0.0) rep.issues.push_back({"diffusion not positive", d[i]});
  for (double r : rs)
    if (r < 0.0) rep.issues.push_back({"negative delay", r});

  if (spec.reaction_full) {
    Reaction F = spec.reaction_full(mu);
    std::vector<Eigen::VectorXd> zero(rs.size() + 1, Eigen::VectorXd::Zero(n));
    double f0 = F(zero).norm();
    if (f0 > 1e-12) rep.issues.push_back({"reaction nonzero at equilibrium", f0});
    // finite-difference Jacobian at zero must vanish
    double worst = 0.0;
    const double h = 1e-6;
    for (size_t slot = 0; slot <= rs.size(); ++slot) {
      for (int c = 0; c < n; ++c) {
        auto plus = zero, minus = zero;
        plus[slot][c] = h;
        minus[slot][c] = -h;
        worst = std::max(worst, ((F(plus) - F(minus)) / (2 * h)).norm());
      }
    }
    if (worst > 1e-6) rep.issues.push_back({"reaction Jacobian nonzero at equilibrium", worst});
  }

  std::mt19937 rng(rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto rand_hist = [&]() {
    Hist h = Hist::zero(n, static_cast<int>(rs.size()));
    for (int c = 0; c < n; ++c) {
      h.at0[c] = cd(gauss(rng), gauss(rng));
      for (auto& v : h.at_delay) v[c] = cd(gauss(rng), gauss(rng));
    }
    return h;
  };
  if (spec.reaction_tensor2) {
    Tensor2 T2 = spec.reaction_tensor2(mu);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      Hist u = rand_hist(), v = rand_hist();
      worst = std::max(worst, (T2(u, v) - T2(v, u)).norm());
    }
    if (worst > 1e-10) rep.issues.push_back({"tensor2 asymmetric", worst});
  }
  if (spec.reaction_tensor3) {
    Tensor3 T3 = spec.reaction_tensor3(mu);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      Hist u = rand_hist(), v = rand_hist(), w = rand_hist();
      worst = std::max(worst, (T3(u, v, w) - T3(v, u, w)).norm());
      worst = std::max(worst, (T3(u, v, w) - T3(u, w, v)).norm());
    }
    if (worst > 1e-10) rep.issues.push_back({"tensor3 asymmetric", worst});
  }
  return rep;
}

ParamExpansion expand_at(const ModelSpec& spec, const Param& mu0, double h) {
  if (spec.analytic_expansion) return spec.analytic_expansion(mu0);

  ParamExpansion e;
  e.mu0 = mu0;
  e.delays = spec.delays(mu0);
  e.D0 = spec.diffusion(mu0);
  e.L0.A = spec.linear_at0(mu0);
  e.L0.G = spec.linear_delayed(mu0);
  for (int i = 0; i < 2; ++i) {
    Param plus = mu0, minus = mu0;
    plus[i] += h;
    minus[i] -= h;
    e.D1[i] = (spec.diffusion(plus) - spec.diffusion(minus)) / (2 * h);
    e.L1[i].A = (spec.linear_at0(plus) - spec.linear_at0(minus)) / (2 * h);
    auto gp = spec.linear_delayed(plus), gm = spec.linear_delayed(minus);
    for (size_t k = 0; k < gp.size(); ++k) e.L1[i].G.push_back((gp[k] - gm[k]) / (2 * h));
  }
  return e;
}

Eigen::VectorXcd taylor_coeff(const ModelSpec& spec, const Param& mu,
                              const std::vector<Hist>& directions) {
  if (directions.size() == 2) {
    if (!spec.reaction_tensor2) return Eigen::VectorXcd::Zero(spec.n_components);
    return spec.reaction_tensor2(mu)(directions[0], directions[1]);
  }
  if (directions.size() == 3) {
    if (!spec.reaction_tensor3) return Eigen::VectorXcd::Zero(spec.n_components);
    return spec.reaction_tensor3(mu)(directions[0], directions[1], directions[2]);
  }
  throw std::invalid_argument("taylor_coeff: expected 2 or 3 directions");
}

Eigen::VectorXcd taylor_coeff_fd(const ModelSpec& spec, const Param& mu,
                                 const std::vector<Hist>& directions, double step) {
  if (!spec.reaction_full) throw std::invalid_argument("taylor_coeff_fd: no reaction_full");
  Reaction F = spec.reaction_full(mu);
  const int n = spec.n_components;

  if (directions.size() == 2) {
    Eigen::VectorXd ur0, ui0, vr0, vi0;
    std::vector<Eigen::VectorXd> urd, uid, vrd, vid;
    split_hist(directions[0], ur0, urd, ui0, uid);
    split_hist(directions[1], vr0, vrd, vi0, vid);
    double su = std::max(1.0, directions[0].at0.norm());
    double sv = std::max(1.0, directions[1].at0.norm());
    double eps = step * std::sqrt(su * sv);
    Eigen::VectorXd rr = fd_bilinear(F, ur0, urd, vr0, vrd, eps);
    Eigen::VectorXd ii = fd_bilinear(F, ui0, uid, vi0, vid, eps);
    Eigen::VectorXd ri = fd_bilinear(F, ur0, urd, vi0, vid, eps);
    Eigen::VectorXd ir = fd_bilinear(F, ui0, uid, vr0, vrd, eps);
    Eigen::VectorXcd out(n);
    for (int c = 0; c < n; ++c) out[c] = cd(rr[c] - ii[c], ri[c] + ir[c]);
    return out;
  }
  if (directions.size() == 3) {
    // third mixed partial via an 8-point stencil, complex by trilinearity
    auto real_form = [&](const Eigen::VectorXd& a0, const std::vector<Eigen::VectorXd>& ad,
                         const Eigen::VectorXd& b0, const std::vector<Eigen::VectorXd>& bd,
                         const Eigen::VectorXd& c0, const std::vector<Eigen::VectorXd>& cdl,
                         double eps) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
      for (int sa : {1, -1})
        for (int sb : {1, -1})
          for (int sc : {1, -1}) {
            std::vector<Eigen::VectorXd> vals;
            vals.push_back(eps * (sa * a0 + sb * b0 + sc * c0));
            for (size_t k = 0; k < ad.size(); ++k)
              vals.push_back(eps * (sa * ad[k] + sb * bd[k] + sc * cdl[k]));
            acc += double(sa * sb * sc) * F(vals);
          }
      return Eigen::VectorXd((acc / (8.0 * eps * eps * eps)).eval());
    };
    Eigen::VectorXd re[3], im[3];
    std::vector<Eigen::VectorXd> red[3], imd[3];
    for (int i = 0; i < 3; ++i) split_hist(directions[i], re[i], red[i], im[i], imd[i]);
    double eps = std::cbrt(step);  // h^3 truncation vs eps^3 roundoff balance
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
    // expand product of (re + i*im) over the three slots
    for (int ma = 0; ma < 2; ++ma)
      for (int mb = 0; mb < 2; ++mb)
        for (int mc = 0; mc < 2; ++mc) {
          const auto& a0 = ma ? im[0] : re[0];
          const auto& ad = ma ? imd[0] : red[0];
          const auto& b0 = mb ? im[1] : re[1];
          const auto& bd = mb ? imd[1] : red[1];
          const auto& c0 = mc ? im[2] : re[2];
          const auto& cdl = mc ? imd[2] : red[2];
          Eigen::VectorXd v = real_form(a0, ad, b0, bd, c0, cdl, eps);
          cd unit = std::pow(cd(0, 1), ma + mb + mc);
          out += unit * v.cast<cd>();
        }
    return out;
  }
  throw std::invalid_argument("taylor_coeff_fd: expected 2 or 3 directions");
}

ModelSpec rescale_time(const ModelSpec& spec, double factor) {
  if (factor <= 0.0) throw std::invalid_argument("rescale_time: factor must be positive");
  ModelSpec out = spec;
  const double s = factor;
  out.time_scale = spec.time_scale * s;
  out.delays = [f = spec.delays, s](const Param& mu) {
    auto rs = f(mu);
    for (double& r : rs) r /= s;
    return rs;
  };
  out.diffusion = [f = spec.diffusion, s](const Param& mu) {
    return Eigen::VectorXd(s * f(mu));
  };
  out.linear_at0 = [f = spec.linear_at0, s](const Param& mu) {
    return Eigen::MatrixXd(s * f(mu));
  };
  out.linear_delayed = [f = spec.linear_delayed, s](const Param& mu) {
    auto gs = f(mu);
    for (auto& g : gs) g *= s;
    return gs;
  };
  if (spec.reaction_tensor2)
    out.reaction_tensor2 = [f = spec.reaction_tensor2, s](const Param& mu) {
      Tensor2 t = f(mu);
      return Tensor2([t, s](const Hist& u, const Hist& v) {
        return Eigen::VectorXcd(s * t(u, v));
      });
    };
  if (spec.reaction_tensor3)
    out.reaction_tensor3 = [f = spec.reaction_tensor3, s](const Param& mu) {
      Tensor3 t = f(mu);
      return Tensor3([t, s](const Hist& u, const Hist& v, const Hist& w) {
        return Eigen::VectorXcd(s * t(u, v, w));
      });
    };
  if (spec.reaction_full)
    out.reaction_full = [f = spec.reaction_full, s](const Param& mu) {
      Reaction r = f(mu);
      return Reaction([r, s](const std::vector<Eigen::VectorXd>& vals) {
        return Eigen::VectorXd(s * r(vals));
      });
    };
  if (spec.analytic_expansion)
    out.analytic_expansion = [f = spec.analytic_expansion, s](const Param& mu) {
      ParamExpansion e = f(mu);
      e.D0 *= s;
      e.L0.A *= s;
      for (auto& g : e.L0.G) g *= s;
      for (int i = 0; i < 2; ++i) {
        e.D1[i] *= s;
        e.L1[i].A *= s;
        for (auto& g : e.L1[i].G) g *= s;
      }
      for (double& r : e.delays) r /= s;
      return e;
    };
  return out;
}

ModelSpec prepare_critical(const ModelSpec& spec, int which_delay) {
  auto rs = spec.delays(spec.param);
  if (which_delay < 0 || which_delay >= static_cast<int>(rs.size()))
    throw std::invalid_argument("prepare_critical: delay index out of range");
  if (rs[which_delay] <= 0.0)
    throw std::invalid_argument("prepare_critical: chosen delay is zero");
  return rescale_time(spec, rs[which_delay]);
}

// ---- epidemic built-in ------------------------------------------------------

namespace {

struct EpidemicEq {
  double S, I, y, R0;
};

EpidemicEq epidemic_equilibrium(const EpidemicParams& p) {
  EpidemicEq e;
  double edt = std::exp(-p.d * p.tau);
  e.R0 = p.mu * p.alpha * p.alpha * edt * (1.0 - edt) / (p.d * p.beta * (p.d + p.gamma));
  e.S = (p.d + p.gamma) / p.mu;
  e.I = e.S * (e.R0 - 1.0);
  e.y = p.alpha * edt / p.beta;
  return e;
}

}  // namespace

EpidemicModel builtin_epidemic(const EpidemicParams& p) {
  EpidemicEq eq = epidemic_equilibrium(p);
  if (eq.R0 <= 1.0) throw std::invalid_argument("builtin_epidemic: no positive equilibrium (R0 <= 1)");

  const double mu_r = p.mu, beta = p.beta, alpha = p.alpha, d = p.d, gamma = p.gamma;
  const double Is = eq.I, Ss = eq.S, ys = eq.y, tau = p.tau;
  const double aedt = alpha * std::exp(-d * tau);
  const double d1 = p.d1, d3 = p.d3;

  Eigen::MatrixXd A(3, 3), G1(3, 3), G2(3, 3);
  A << -d, -mu_r * Ss + gamma, alpha, 0, mu_r * Ss - d - gamma, 0, 0, 0, -2 * beta * ys;
  G1 << -mu_r * Is, 0, 0, mu_r * Is, 0, 0, 0, 0, 0;
  G2 << 0, 0, -aedt, 0, 0, 0, 0, 0, aedt;

  EpidemicModel model;
  ModelSpec& s = model.spec;
  s.name = "epidemic";
  s.n_components = 3;
  s.domain_scale = p.l;
  s.param = {1.0, p.d2};  // mu1 = transmission delay, mu2 = d2 (placeholder mu1)
  s.mu1_rescales_time = true;

  s.delays = [tau](const Param& mu) { return std::vector<double>{1.0, tau / mu[0]}; };
  s.diffusion = [d1, d3](const Param& mu) {
    return Eigen::VectorXd(mu[0] * Eigen::Vector3d(d1, mu[1], d3));
  };
  s.linear_at0 = [A](const Param& mu) { return Eigen::MatrixXd(mu[0] * A); };
  s.linear_delayed = [G1, G2](const Param& mu) {
    return std::vector<Eigen::MatrixXd>{mu[0] * G1, mu[0] * G2};
  };
  s.reaction_tensor2 = [mu_r, beta](const Param& mu) {
    double w = mu[0];
    return Tensor2([mu_r, beta, w](const Hist& u, const Hist& v) {
      cd bil = u.at_delay[0][0] * v.at0[1] + v.at_delay[0][0] * u.at0[1];
      Eigen::VectorXcd out(3);
      out << -mu_r * bil, mu_r * bil, -2.0 * beta * u.at0[2] * v.at0[2];
      return Eigen::VectorXcd(w * out);
    });
  };
  s.reaction_full = [mu_r, beta](const Param& mu) {
    double w = mu[0];
    return Reaction([mu_r, beta, w](const std::vector<Eigen::VectorXd>& vals) {
      double bil = vals[1][0] * vals[0][1];
      Eigen::Vector3d out(-mu_r * bil, mu_r * bil, -beta * vals[0][2] * vals[0][2]);
      return Eigen::VectorXd(w * out);
    });
  };
  s.analytic_expansion = [A, G1, G2, d1, d3, tau](const Param& mu) {
    ParamExpansion e;
    e.mu0 = mu;
    e.delays = {1.0, tau / mu[0]};
    e.D0 = mu[0] * Eigen::Vector3d(d1, mu[1], d3);
    e.L0 = {mu[0] * A, {mu[0] * G1, mu[0] * G2}};
    // derivative along mu1 holds the rescaled delay ratio fixed (the operator
    // form cannot represent the delay-drift term)
    e.D1[0] = Eigen::Vector3d(d1, mu[1], d3);
    e.L1[0] = {A, {G1, G2}};
    e.D1[1] = mu[0] * Eigen::Vector3d(0, 1, 0);
    e.L1[1] = {Eigen::MatrixXd::Zero(3, 3),
               {Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(3, 3)}};
    return e;
  };
  auto cf = std::make_shared<ClosedFormSpectrum>();
  double l = p.l;
  cf->factor = [d, d1, mu_r, Is, l](int m, double mu2) {
    double k = m * m / (l * l);
    ScalarDelayFactor f;
    f.p1 = d + d1 * k + mu2 * k;
    f.p0 = mu2 * k * (d + d1 * k);
    f.q1 = mu_r * Is;
    f.q0 = mu_r * Is * (d + mu2 * k);
    return f;
  };
  s.closed_form = cf;
  s.source = {{"builtin", "epidemic"},
              {"params",
               {{"alpha", p.alpha}, {"d", p.d}, {"mu", p.mu}, {"gamma", p.gamma},
                {"beta", p.beta}, {"tau", p.tau}, {"d1", p.d1}, {"d2", p.d2},
                {"d3", p.d3}, {"l", p.l}}}};

  model.S_star = Ss;
  model.I_star = Is;
  model.y_star = ys;
  model.R0 = eq.R0;
  return model;
}

// ---- predator-prey built-in -------------------------------------------------

PredPreyModel builtin_predprey(const PredPreyParams& p) {
  const double den = p.a11 * p.a22 + p.a12 * p.a21;
  auto Xs = [p, den](double r1) { return (r1 * p.a22 + p.r2 * p.a12) / den; };
  auto Ys = [p, den](double r1) { return (r1 * p.a21 - p.r2 * p.a11) / den; };
  if (Ys(p.r1) <= 0.0)
    throw std::invalid_argument("builtin_predprey: nonpositive equilibrium (r1 a21 <= r2 a11)");

  const double a11 = p.a11, a12 = p.a12, a21 = p.a21, a22 = p.a22, d1 = p.d1, d2 = p.d2;

  auto Amat = [=](double r1) {
    Eigen::MatrixXd A(2, 2);
    A << 0, -a12 * Xs(r1), a21 * Ys(r1), -a22 * Ys(r1);
    return A;
  };
  auto Gmat = [=](double r1) {
    Eigen::MatrixXd G(2, 2);
    G << -a11 * Xs(r1), 0, 0, 0;
    return G;
  };

  PredPreyModel model;
  ModelSpec& s = model.spec;
  s.name = "predprey";
  s.n_components = 2;
  s.domain_scale = p.l;
  s.param = {1.0, p.r1};  // mu1 = tau, mu2 = r1 (placeholder mu1)
  s.mu1_rescales_time = true;

  s.delays = [](const Param&) { return std::vector<double>{1.0}; };
  s.diffusion = [d1, d2](const Param& mu) {
    return Eigen::VectorXd(mu[0] * Eigen::Vector2d(d1, d2));
  };
  s.linear_at0 = [Amat](const Param& mu) { return Eigen::MatrixXd(mu[0] * Amat(mu[1])); };
  s.linear_delayed = [Gmat](const Param& mu) {
    return std::vector<Eigen::MatrixXd>{mu[0] * Gmat(mu[1])};
  };
  s.reaction_tensor2 = [a11, a12, a21, a22](const Param& mu) {
    double t = mu[0];
    return Tensor2([=](const Hist& u, const Hist& v) {
      cd s01 = u.at0[0] * v.at0[1] + v.at0[0] * u.at0[1];
      cd sd0 = u.at_delay[0][0] * v.at0[0] + v.at_delay[0][0] * u.at0[0];
      Eigen::VectorXcd out(2);
      out << -a11 * sd0 - a12 * s01, a21 * s01 - 2.0 * a22 * u.at0[1] * v.at0[1];
      return Eigen::VectorXcd(t * out);
    });
  };
  s.reaction_full = [a11, a12, a21, a22](const Param& mu) {
    double t = mu[0];
    return Reaction([=](const std::vector<Eigen::VectorXd>& vals) {
      double u = vals[0][0], v = vals[0][1], ud = vals[1][0];
      Eigen::Vector2d out(u * (-a11 * ud - a12 * v), v * (a21 * u - a22 * v));
      return Eigen::VectorXd(t * out);
    });
  };
  s.analytic_expansion = [=](const Param& mu) {
    ParamExpansion e;
    e.mu0 = mu;
    e.delays = {1.0};
    e.D0 = mu[0] * Eigen::Vector2d(d1, d2);
    e.L0 = {mu[0] * Amat(mu[1]), {mu[0] * Gmat(mu[1])}};
    e.D1[0] = Eigen::Vector2d(d1, d2);
    e.L1[0] = {Amat(mu[1]), {Gmat(mu[1])}};
    e.D1[1] = Eigen::Vector2d::Zero();
    Eigen::MatrixXd dA(2, 2), dG(2, 2);
    dA << 0, -a12 * a22 / den, a21 * a21 / den, -a22 * a21 / den;
    dG << -a11 * a22 / den, 0, 0, 0;
    e.L1[1] = {mu[0] * dA, {mu[0] * dG}};
    return e;
  };
  auto cf = std::make_shared<ClosedFormSpectrum>();
  double l = p.l;
  cf->factor = [=](int m, double mu2) {
    double k = m * m / (l * l);
    double X = Xs(mu2), Y = Ys(mu2);
    ScalarDelayFactor f;
    f.p1 = (d1 + d2) * k + a22 * Y;
    f.p0 = d1 * k * (a22 * Y + d2 * k) + a12 * a21 * X * Y;
    f.q1 = a11 * X;
    f.q0 = (a22 * Y + d2 * k) * a11 * X;
    return f;
  };
  s.closed_form = cf;
  s.source = {{"builtin", "predprey"},
              {"params",
               {{"r1", p.r1}, {"r2", p.r2}, {"a11", p.a11}, {"a12", p.a12}, {"a21", p.a21},
                {"a22", p.a22}, {"d1", p.d1}, {"d2", p.d2}, {"l", p.l}}}};

  model.X_star = Xs(p.r1);
  model.Y_star = Ys(p.r1);
  return model;
}

// ---- JSON (tabular generic models + built-ins by name) ----------------------

namespace {

Eigen::MatrixXd mat_from_json(const nlohmann::json& j, int rows, int cols) {
  Eigen::MatrixXd M(rows, cols);
  int idx = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) M(r, c) = j.at(idx++).get<double>();
  return M;
}

nlohmann::json mat_to_json(const Eigen::MatrixXd& M) {
  nlohmann::json j = nlohmann::json::array();
  for (int r = 0; r < M.rows(); ++r)
    for (int c = 0; c < M.cols(); ++c) j.push_back(M(r, c));
  return j;
}

// Affine-in-mu table: value = const + mu1*d_mu1 + mu2*d_mu2 (derivative blocks optional).
struct AffineMat {
  Eigen::MatrixXd c, d1, d2;
  Eigen::MatrixXd at(const Param& mu) const { return c + mu[0] * d1 + mu[1] * d2; }
};

AffineMat affine_from_json(const nlohmann::json& j, int rows, int cols) {
  AffineMat a;
  a.c = mat_from_json(j.at("const"), rows, cols);
  a.d1 = j.contains("d_mu1") ? mat_from_json(j.at("d_mu1"), rows, cols)
                             : Eigen::MatrixXd::Zero(rows, cols);
  a.d2 = j.contains("d_mu2") ? mat_from_json(j.at("d_mu2"), rows, cols)
                             : Eigen::MatrixXd::Zero(rows, cols);
  return a;
}

// Sparse symmetric tensor entries: [out, slot_a, comp_a, slot_b, comp_b, value]
// (quadratic) and with a third (slot, comp) pair (cubic).
struct Tensor2Table {
  struct Entry {
    int out, sa, ca, sb, cb;
    double v;
  };
  std::vector<Entry> entries;
  int n;
  Eigen::VectorXcd eval(const Hist& u, const Hist& v) const {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
    auto pick = [](const Hist& h, int slot, int comp) {
      return slot == 0 ? h.at0[comp] : h.at_delay[slot - 1][comp];
    };
    for (const auto& e : entries)
      out[e.out] += e.v * (pick(u, e.sa, e.ca) * pick(v, e.sb, e.cb) +
                           pick(v, e.sa, e.ca) * pick(u, e.sb, e.cb));
    return out;
  }
};

struct Tensor3Table {
  struct Entry {
    int out, sa, ca, sb, cb, sc, cc;
    double v;
  };
  std::vector<Entry> entries;
  int n;
  Eigen::VectorXcd eval(const Hist& u, const Hist& v, const Hist& w) const {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
    auto pick = [](const Hist& h, int slot, int comp) {
      return slot == 0 ? h.at0[comp] : h.at_delay[slot - 1][comp];
    };
    for (const auto& e : entries) {
      // symmetrize over the 6 argument orders
      const Hist* hs[3] = {&u, &v, &w};
      static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                      {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
      cd acc = 0.0;
      for (auto& pm : perms)
        acc += pick(*hs[pm[0]], e.sa, e.ca) * pick(*hs[pm[1]], e.sb, e.cb) *
               pick(*hs[pm[2]], e.sc, e.cc);
      out[e.out] += e.v * acc;
    }
    return out;
  }
};

}  // namespace

nlohmann::json model_to_json(const ModelSpec& spec) {
  if (!spec.source.is_null() && !spec.source.empty()) return spec.source;
  throw std::invalid_argument("model_to_json: model has no serialization record");
}

ModelSpec model_from_json(const nlohmann::json& j) {
  if (j.contains("builtin")) {
    const std::string which = j.at("builtin").get<std::string>();
    const auto& q = j.contains("params") ? j.at("params") : nlohmann::json::object();
    auto get = [&](const char* key, double dflt) {
      return q.contains(key) ? q.at(key).get<double>() : dflt;
    };
    if (which == "epidemic") {
      EpidemicParams p;
      p.alpha = get("alpha", p.alpha);
      p.d = get("d", p.d);
      p.mu = get("mu", p.mu);
      p.gamma = get("gamma", p.gamma);
      p.beta = get("beta", p.beta);
      p.tau = get("tau", p.tau);
      p.d1 = get("d1", p.d1);
      p.d2 = get("d2", p.d2);
      p.d3 = get("d3", p.d3);
      p.l = get("l", p.l);
      return builtin_epidemic(p).spec;
    }
    if (which == "predprey") {
      PredPreyParams p;
      p.r1 = get("r1", p.r1);
      p.r2 = get("r2", p.r2);
      p.a11 = get("a11", p.a11);
      p.a12 = get("a12", p.a12);
      p.a21 = get("a21", p.a21);
      p.a22 = get("a22", p.a22);
      p.d1 = get("d1", p.d1);
      p.d2 = get("d2", p.d2);
      p.l = get("l", p.l);
      return builtin_predprey(p).spec;
    }
    throw std::invalid_argument("model_from_json: unknown builtin '" + which + "'");
  }

  ModelSpec s;
  s.name = j.value("name", "table-model");
  s.n_components = j.at("n_components").get<int>();
  s.domain_scale = j.at("domain_scale").get<double>();
  if (j.contains("param")) s.param = {j["param"][0].get<double>(), j["param"][1].get<double>()};
  const int n = s.n_components;

  std::vector<double> delays = j.at("delays").get<std::vector<double>>();
  s.delays = [delays](const Param&) { return delays; };
  const int m = static_cast<int>(delays.size());

  AffineMat D = affine_from_json(j.at("diffusion"), n, 1);
  s.diffusion = [D](const Param& mu) { return Eigen::VectorXd(D.at(mu)); };
  AffineMat A = affine_from_json(j.at("A"), n, n);
  s.linear_at0 = [A](const Param& mu) { return A.at(mu); };
  std::vector<AffineMat> G;
  for (const auto& gj : j.at("G")) G.push_back(affine_from_json(gj, n, n));
  if (static_cast<int>(G.size()) != m)
    throw std::invalid_argument("model_from_json: G count does not match delays");
  s.linear_delayed = [G](const Param& mu) {
    std::vector<Eigen::MatrixXd> out;
    for (const auto& g : G) out.push_back(g.at(mu));
    return out;
  };

  auto t2 = std::make_shared<Tensor2Table>();
  t2->n = n;
  if (j.contains("tensor2"))
    for (const auto& e : j.at("tensor2"))
      t2->entries.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), e[3].get<int>(),
                             e[4].get<int>(), e[5].get<double>()});
  auto t3 = std::make_shared<Tensor3Table>();
  t3->n = n;
  if (j.contains("tensor3"))
    for (const auto& e : j.at("tensor3"))
      t3->entries.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), e[3].get<int>(),
                             e[4].get<int>(), e[5].get<int>(), e[6].get<int>(),
                             e[7].get<double>()});
  if (!t2->entries.empty())
    s.reaction_tensor2 = [t2](const Param&) {
      return Tensor2([t2](const Hist& u, const Hist& v) { return t2->eval(u, v); });
    };
  if (!t3->entries.empty())
    s.reaction_tensor3 = [t3](const Param&) {
      return Tensor3([t3](const Hist& u, const Hist& v, const Hist& w) {
        return t3->eval(u, v, w);
      });
    };
  // full reaction from the tensors (quadratic + cubic truncation)
  s.reaction_full = [t2, t3, n, m](const Param&) {
    return Reaction([t2, t3, n, m](const std::vector<Eigen::VectorXd>& vals) {
      Hist h = Hist::zero(n, m);
      h.at0 = vals[0].cast<cd>();
      for (int k = 0; k < m; ++k) h.at_delay[k] = vals[k + 1].cast<cd>();
      Eigen::VectorXcd out = 0.5 * t2->eval(h, h);
      if (!t3->entries.empty()) out += (1.0 / 6.0) * t3->eval(h, h, h);
      return Eigen::VectorXd(out.real());
    });
  };
  s.source = j;
  return s;
}

}  // namespace dhopf
