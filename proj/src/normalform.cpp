#include "dhopf/normalform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace dhopf {

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<QIdx> all_q2() {
  std::vector<QIdx> qs;
  for (int a = 0; a <= 2; ++a)
    for (int b = 0; b <= 2 - a; ++b)
      for (int c = 0; c <= 2 - a - b; ++c) qs.push_back({a, b, c, 2 - a - b - c});
  return qs;
}

int multinomial(int total, const QIdx& q) {
  auto fact = [](int k) {
    int f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  };
  int denom = 1;
  for (int x : q) denom *= fact(x);
  return fact(total) / denom;
}

std::string qname(const QIdx& q) {
  std::string s;
  for (int x : q) s += char('0' + x);
  return s;
}

cd dot(const Eigen::RowVectorXcd& psi, const Eigen::VectorXcd& v) { return (psi * v)(0); }

}  // namespace

// ---- spatial integrals -------------------------------------------------------

double SpatialIntegrals::b(int j, int na, int nb) const {
  const double s1 = std::sqrt(1.0 / (l * kPi));
  const double s2 = std::sqrt(1.0 / (2.0 * l * kPi));
  if (na > nb) std::swap(na, nb);
  if (na == 0 && nb == 0) return j == 0 ? s1 : 0.0;
  if (na == 0) return j == nb ? s1 : 0.0;
  if (na == nb) return j == 0 ? s1 : (j == 2 * na ? s2 : 0.0);
  return (j == na + nb || j == nb - na) ? s2 : 0.0;
}

SpatialIntegrals spatial_integrals(int n1, int n2, double l) {
  if (n1 > n2) throw std::invalid_argument("spatial_integrals: requires n1 <= n2");
  if (l <= 0) throw std::invalid_argument("spatial_integrals: requires l > 0");
  SpatialIntegrals si;
  si.n1 = n1;
  si.n2 = n2;
  si.l = l;
  const double lp = l * kPi;
  auto quartic_same = [&](int n) { return n == 0 ? 1.0 / lp : 1.5 / lp; };
  si.gamma40 = quartic_same(n1);
  si.gamma04 = quartic_same(n2);
  si.gamma22 = (n1 == n2) ? quartic_same(n1) : 1.0 / lp;
  si.beta30 = si.b(n1, n1, n1);
  si.beta21 = si.b(n2, n1, n1);
  si.beta12 = si.b(n1, n2, n2);
  si.beta03 = si.b(n2, n2, n2);
  return si;
}

double cosine_product_quadrature(const std::vector<int>& waves, const std::vector<int>& powers,
                                 double l, int nodes) {
  if (waves.size() != powers.size())
    throw std::invalid_argument("cosine_product_quadrature: size mismatch");
  const double lp = l * kPi;
  auto gamma = [&](int n, double x) {
    const double norm = n == 0 ? std::sqrt(1.0 / lp) : std::sqrt(2.0 / lp);
    return norm * std::cos(n * x / l);
  };
  auto f = [&](double x) {
    double v = 1.0;
    for (size_t i = 0; i < waves.size(); ++i) v *= std::pow(gamma(waves[i], x), powers[i]);
    return v;
  };
  // composite Simpson
  if (nodes % 2 != 0) ++nodes;
  const double h = lp / nodes;
  double acc = f(0.0) + f(lp);
  for (int i = 1; i < nodes; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

std::string wave_case_tag(int n1, int n2) {
  if (n1 == 0 && n2 == 0) return "n1=n2=0";
  if (n1 == 0) return "n1=0,n2!=0";
  if (n1 == n2) return "n1!=0,n2!=0:n2=n1";
  if (n2 == 2 * n1) return "n1!=0,n2!=0:n2=2n1";
  return "n1!=0,n2!=0:generic";
}

// ---- context -----------------------------------------------------------------

cd NFContext::sigma(const QIdx& q) const {
  return lam[0] * double(q[0] - q[1]) + lam[2] * double(q[2] - q[3]);
}

NFContext make_context(const ModelSpec& spec, const DoubleHopfPoint& point) {
  NFContext cx;
  cx.spec = &spec;
  cx.point = point;
  cx.basis = build_basis(spec, point);
  cx.expansion = expand_at(spec, point.mu0);
  cx.si = spatial_integrals(point.n1, point.n2, spec.domain_scale);
  cx.delays = spec.delays(point.mu0);
  cx.lam = {cd(0, point.w1), cd(0, -point.w1), cd(0, point.w2), cd(0, -point.w2)};
  cx.wav = {point.n1, point.n1, point.n2, point.n2};
  for (int xi = 0; xi < 4; ++xi) {
    const int k = xi / 2;
    Eigen::VectorXcd phi = cx.basis.phi[k];
    cd lam = cx.lam[xi];
    if (xi % 2) phi = phi.conjugate();
    Hist h;
    h.at0 = phi;
    for (double r : cx.delays) h.at_delay.push_back(std::exp(-lam * r) * phi);
    cx.H[xi] = h;
  }
  return cx;
}

namespace {

Eigen::RowVectorXcd psi_row(const NFContext& cx, int xi) {
  const int k = xi / 2;
  return xi % 2 ? cx.basis.psi[k].conjugate() : cx.basis.psi[k];
}

Eigen::MatrixXcd char_matrix_at(const NFContext& cx, int j, cd lambda) {
  return char_matrix(*cx.spec, j, cx.point.mu0, lambda);
}

}  // namespace

// ---- quadratic line ------------------------------------------------------------

std::map<QIdx, Eigen::VectorXcd> quadratic_F(const NFContext& cx) {
  std::map<QIdx, Eigen::VectorXcd> F;
  const int n = cx.spec->n_components;
  Tensor2 T2;
  if (cx.spec->has_tensor2()) T2 = cx.spec->reaction_tensor2(cx.point.mu0);
  for (const QIdx& q : all_q2()) {
    if (!T2) {
      F[q] = Eigen::VectorXcd::Zero(n);
      continue;
    }
    std::vector<int> dirs;
    for (int i = 0; i < 4; ++i)
      for (int c = 0; c < q[i]; ++c) dirs.push_back(i);
    F[q] = double(multinomial(2, q)) * T2(cx.H[dirs[0]], cx.H[dirs[1]]);
  }
  return F;
}

std::map<std::pair<int, QIdx>, cd> f2_line(const NFContext& cx,
                                           const std::map<QIdx, Eigen::VectorXcd>& F) {
  std::map<std::pair<int, QIdx>, cd> f;
  for (int xi = 0; xi < 4; ++xi) {
    const Eigen::RowVectorXcd psi = psi_row(cx, xi);
    for (const auto& [q, Fq] : F) {
      double integral;  // gamma_n1^{q1+q2} gamma_n2^{q3+q4} gamma_{wav(xi)}
      if (q[0] + q[1] == 2)
        integral = cx.si.b(cx.wav[xi], cx.si.n1, cx.si.n1);
      else if (q[2] + q[3] == 2)
        integral = cx.si.b(cx.wav[xi], cx.si.n2, cx.si.n2);
      else
        integral = cx.si.b(cx.wav[xi], cx.si.n1, cx.si.n2);
      f[{xi, q}] = dot(psi, Fq) * integral;
    }
  }
  return f;
}

// ---- second order ---------------------------------------------------------------

void second_order(const NFContext& cx, NormalFormCoeffs& out) {
  const double l = cx.spec->domain_scale;
  auto coeff = [&](int xi, int param) {
    const int nk = cx.wav[xi];
    const Eigen::VectorXd& D1 = cx.expansion.D1[param];
    const LinearOp& L1 = cx.expansion.L1[param];
    Eigen::VectorXcd v =
        -(double(nk * nk) / (l * l)) * D1.cast<cd>().asDiagonal() * cx.H[xi].at0;
    v += L1.A.cast<cd>() * cx.H[xi].at0;
    for (size_t k = 0; k < L1.G.size(); ++k) v += L1.G[k].cast<cd>() * cx.H[xi].at_delay[k];
    return dot(psi_row(cx, xi), v);
  };
  out.B11 = coeff(0, 0);
  out.B21 = coeff(0, 1);
  out.B13 = coeff(2, 0);
  out.B23 = coeff(2, 1);
}

// ---- third order: cubic tensor part ---------------------------------------------

void third_order_C(const NFContext& cx, NormalFormCoeffs& out) {
  out.C2100 = out.C1011 = out.C0021 = out.C1110 = 0.0;
  if (!cx.spec->has_tensor3()) return;
  Tensor3 T3 = cx.spec->reaction_tensor3(cx.point.mu0);
  auto F3 = [&](const QIdx& q) {
    std::vector<int> dirs;
    for (int i = 0; i < 4; ++i)
      for (int c = 0; c < q[i]; ++c) dirs.push_back(i);
    return Eigen::VectorXcd(double(multinomial(3, q)) *
                            T3(cx.H[dirs[0]], cx.H[dirs[1]], cx.H[dirs[2]]));
  };
  out.C2100 = dot(psi_row(cx, 0), F3({2, 1, 0, 0})) * cx.si.gamma40 / 6.0;
  out.C1011 = dot(psi_row(cx, 0), F3({1, 0, 1, 1})) * cx.si.gamma22 / 6.0;
  out.C0021 = dot(psi_row(cx, 2), F3({0, 0, 2, 1})) * cx.si.gamma04 / 6.0;
  out.C1110 = dot(psi_row(cx, 2), F3({1, 1, 1, 0})) * cx.si.gamma22 / 6.0;
}

// ---- third order: quadratic cascade part -----------------------------------------

void third_order_D(const NFContext& cx, const std::map<std::pair<int, QIdx>, cd>& f,
                   NormalFormCoeffs& out) {
  const double wmin = std::min(cx.point.w1, cx.point.w2);
  auto Dcoef = [&](int xi, const QIdx& t) {
    cd tot = 0.0;
    for (int m = 0; m < 4; ++m) {
      for (const QIdx& q : all_q2()) {
        if (q[m] == 0) continue;
        QIdx qp;
        bool valid = true;
        int sum = 0;
        for (int i = 0; i < 4; ++i) {
          qp[i] = t[i] - q[i] + (i == m ? 1 : 0);
          if (qp[i] < 0) valid = false;
          sum += qp[i];
        }
        if (!valid || sum != 2) continue;
        const cd denom = cx.sigma(qp) - cx.lam[m];
        if (std::abs(denom) < cx.eps_res * wmin) {
          std::ostringstream os;
          os << "near-resonant denominator in D" << qname(t) << " term q=" << qname(q)
             << " m=" << (m + 1);
          throw PipelineError("third_order_D", os.str());
        }
        tot += double(q[m]) * f.at({xi, q}) * f.at({m, qp}) / denom;
      }
    }
    return tot / 6.0;
  };
  out.D2100 = Dcoef(0, {2, 1, 0, 0});
  out.D1011 = Dcoef(0, {1, 0, 1, 1});
  out.D0021 = Dcoef(2, {0, 0, 2, 1});
  out.D1110 = Dcoef(2, {1, 1, 1, 0});
}

// ---- S operators -------------------------------------------------------------------

Eigen::VectorXcd SOperator::apply(const Hist& h) const {
  Eigen::VectorXcd v = at0 * h.at0;
  for (size_t k = 0; k < at_delay.size(); ++k) v += at_delay[k] * h.at_delay[k];
  return v;
}

std::array<SOperator, 4> S_operators(const NFContext& cx) {
  const int n = cx.spec->n_components;
  const int nd = static_cast<int>(cx.delays.size());
  std::array<SOperator, 4> S;
  Tensor2 T2;
  if (cx.spec->has_tensor2()) T2 = cx.spec->reaction_tensor2(cx.point.mu0);
  for (int i = 0; i < 4; ++i) {
    S[i].at0 = Eigen::MatrixXcd::Zero(n, n);
    S[i].at_delay.assign(nd, Eigen::MatrixXcd::Zero(n, n));
    if (!T2) continue;
    for (int slot = 0; slot <= nd; ++slot)
      for (int c = 0; c < n; ++c) {
        Hist e = Hist::zero(n, nd);
        if (slot == 0)
          e.at0[c] = 1.0;
        else
          e.at_delay[slot - 1][c] = 1.0;
        Eigen::VectorXcd col = 2.0 * T2(cx.H[i], e);
        if (slot == 0)
          S[i].at0.col(c) = col;
        else
          S[i].at_delay[slot - 1].col(c) = col;
      }
  }
  return S;
}

// ---- center-manifold quadratic components -------------------------------------------

ExpPoly h_solution(const NFContext& cx, const std::map<QIdx, Eigen::VectorXcd>& F,
                   const std::map<std::pair<int, QIdx>, cd>& f, int j, const QIdx& q) {
  ExpPoly h;
  const cd sq = cx.sigma(q);
  // projections onto the center eigenfunctions living at wave number j
  for (int xi = 0; xi < 4; ++xi) {
    if (cx.wav[xi] != j) continue;
    const cd denom = cx.lam[xi] - sq;
    if (std::abs(denom) < 1e-14)
      throw PipelineError("h_solutions", "vanishing projection denominator (resonant monomial)");
    Eigen::VectorXcd phi = cx.H[xi].at0;
    h.terms.push_back({Eigen::VectorXcd(phi * (f.at({xi, q}) / denom)), cx.lam[xi]});
  }
  // particular solution through the resolvent of the j-th slice
  double bb;
  if (q[0] + q[1] == 2)
    bb = cx.si.b(j, cx.si.n1, cx.si.n1);
  else if (q[2] + q[3] == 2)
    bb = cx.si.b(j, cx.si.n2, cx.si.n2);
  else
    bb = cx.si.b(j, cx.si.n1, cx.si.n2);
  if (bb != 0.0) {
    Eigen::MatrixXcd M = char_matrix_at(cx, j, sq);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    const auto& sv = svd.singularValues();
    const double cond = sv[0] / sv[sv.size() - 1];
    if (!(cond < cx.cond_cap)) {
      std::ostringstream os;
      os << "resolvent resonance at (j=" << j << ", sigma=" << sq.real() << "+" << sq.imag()
         << "i)";
      throw PipelineError("h_solutions", os.str());
    }
    const Eigen::VectorXcd rhs = bb * F.at(q);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    Eigen::VectorXcd x = lu.solve(rhs);
    x += lu.solve(rhs - M * x);  // one step of iterative refinement
    const double rel = (M * x - rhs).norm() / std::max(1e-300, rhs.norm());
    if (rel > 1e-10)
      throw PipelineError("h_solutions", "resolvent solve residual above tolerance");
    h.terms.push_back({x, sq});
  }
  return h;
}

// ---- third order: center-manifold correction part ------------------------------------

void third_order_E(const NFContext& cx, const std::map<QIdx, Eigen::VectorXcd>& F,
                   const std::map<std::pair<int, QIdx>, cd>& f,
                   const std::array<SOperator, 4>& S, NormalFormCoeffs& out) {
  const int n1 = cx.si.n1, n2 = cx.si.n2;
  std::set<int> jset{0, 2 * n1, 2 * n2, n1 + n2, std::abs(n2 - n1)};

  auto sample = [&](const Eigen::VectorXcd& c, cd sigma) {
    Hist h;
    h.at0 = c;
    for (double r : cx.delays) h.at_delay.push_back(std::exp(-sigma * r) * c);
    return h;
  };
  struct Entry {
    int bn_a, bn_b;  // b(j, bn_a, bn_b) weight
    int i;           // S operator index
    QIdx q;          // h monomial
  };
  auto Ecoef = [&](int xi, const std::vector<Entry>& entries) {
    Eigen::VectorXcd tot = Eigen::VectorXcd::Zero(cx.spec->n_components);
    for (int j : jset) {
      for (const auto& e : entries) {
        const double bb = cx.si.b(j, e.bn_a, e.bn_b);
        if (bb == 0.0) continue;
        ExpPoly h = h_solution(cx, F, f, j, e.q);
        for (const auto& [c, sg] : h.terms) tot += bb * S[e.i].apply(sample(c, sg));
      }
    }
    return dot(psi_row(cx, xi), tot) / 6.0;
  };

  out.E2100 = Ecoef(0, {{n1, n1, 0, {1, 1, 0, 0}}, {n1, n1, 1, {2, 0, 0, 0}}});
  out.E1011 = Ecoef(0, {{n1, n1, 0, {0, 0, 1, 1}},
                        {n2, n1, 2, {1, 0, 0, 1}},
                        {n2, n1, 3, {1, 0, 1, 0}}});
  out.E0021 = Ecoef(2, {{n2, n2, 2, {0, 0, 1, 1}}, {n2, n2, 3, {0, 0, 2, 0}}});
  out.E1110 = Ecoef(2, {{n1, n2, 0, {0, 1, 1, 0}},
                        {n1, n2, 1, {1, 0, 1, 0}},
                        {n2, n2, 2, {1, 1, 0, 0}}});
}

// ---- assembly ---------------------------------------------------------------------

NormalFormCoeffs assemble(const ModelSpec& spec, const DoubleHopfPoint& point) {
  NormalFormCoeffs out{};
  out.case_tag = wave_case_tag(point.n1, point.n2);
  NFContext cx = make_context(spec, point);
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

// ---- export -----------------------------------------------------------------------

namespace {
nlohmann::json cplx(cd z) { return {z.real(), z.imag()}; }
}  // namespace

nlohmann::json coeffs_to_json(const NormalFormCoeffs& c) {
  return {{"case", c.case_tag},
          {"B11", cplx(c.B11)},     {"B21", cplx(c.B21)},
          {"B13", cplx(c.B13)},     {"B23", cplx(c.B23)},
          {"B2100", cplx(c.B2100)}, {"B1011", cplx(c.B1011)},
          {"B0021", cplx(c.B0021)}, {"B1110", cplx(c.B1110)},
          {"C2100", cplx(c.C2100)}, {"C1011", cplx(c.C1011)},
          {"C0021", cplx(c.C0021)}, {"C1110", cplx(c.C1110)},
          {"D2100", cplx(c.D2100)}, {"D1011", cplx(c.D1011)},
          {"D0021", cplx(c.D0021)}, {"D1110", cplx(c.D1110)},
          {"E2100", cplx(c.E2100)}, {"E1011", cplx(c.E1011)},
          {"E0021", cplx(c.E0021)}, {"E1110", cplx(c.E1110)}};
}

nlohmann::json audit_json(const ModelSpec& spec, const DoubleHopfPoint& point) {
  NFContext cx = make_context(spec, point);
  NormalFormCoeffs out{};
  out.case_tag = wave_case_tag(point.n1, point.n2);
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

  nlohmann::json j = coeffs_to_json(out);
  j["point"] = point_to_json(point);
  j["basis"] = eigendata_to_json(cx.basis);
  nlohmann::json fs = nlohmann::json::object();
  for (const auto& [key, val] : f)
    fs["f1(" + std::to_string(key.first + 1) + ")_" + qname(key.second)] = cplx(val);
  j["f_scalars"] = fs;
  return j;
}

}  // namespace dhopf
