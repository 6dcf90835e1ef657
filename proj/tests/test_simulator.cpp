#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <numbers>
#include <sstream>

#include "dhopf/simulator.hpp"
#include "doctest.h"

using namespace dhopf;

namespace {

// single-component diffusion-only model on (0, l*pi)
ModelSpec diffusion_only(double d, double l) {
  ModelSpec s;
  s.name = "diffusion-only";
  s.n_components = 1;
  s.domain_scale = l;
  s.delays = [](const Param&) { return std::vector<double>{}; };
  s.diffusion = [d](const Param&) { return Eigen::VectorXd::Constant(1, d); };
  s.linear_at0 = [](const Param&) { return Eigen::MatrixXd::Zero(1, 1); };
  s.linear_delayed = [](const Param&) { return std::vector<Eigen::MatrixXd>{}; };
  return s;
}

// scalar delayed feedback u' = d u_xx - a u(t-1) [+ quadratic term]
ModelSpec delayed_feedback(double a, double d, double l, bool logistic) {
  ModelSpec s;
  s.name = "delayed-feedback";
  s.n_components = 1;
  s.domain_scale = l;
  s.delays = [](const Param&) { return std::vector<double>{1.0}; };
  s.diffusion = [d](const Param&) { return Eigen::VectorXd::Constant(1, d); };
  s.linear_at0 = [](const Param&) { return Eigen::MatrixXd::Zero(1, 1); };
  s.linear_delayed = [a](const Param&) {
    return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Constant(1, 1, -a)};
  };
  if (logistic)
    s.reaction_full = [a](const Param&) {
      return Reaction([a](const std::vector<Eigen::VectorXd>& v) {
        return Eigen::VectorXd::Constant(1, -a * v[0][0] * v[1][0]);
      });
    };
  return s;
}

InitProfile const_init(double v) {
  return [v](double) { return Eigen::VectorXd::Constant(1, v); };
}

}  // namespace

TEST_CASE("neumann laplacian: constants and cosine modes") {
  const Grid g = Grid::make(201, 2.0);
  std::vector<double> u(g.N), out(g.N);
  for (int i = 0; i < g.N; ++i) u[i] = 3.7;
  neumann_laplacian(g, u.data(), out.data());
  for (int i = 0; i < g.N; ++i) CHECK(std::abs(out[i]) < 1e-12);
  const int m = 2;
  for (int i = 0; i < g.N; ++i) u[i] = std::cos(m * (i * g.h) / g.l);
  neumann_laplacian(g, u.data(), out.data());
  const double k2 = double(m * m) / (g.l * g.l);
  for (int i = 0; i < g.N; ++i) CHECK(out[i] == doctest::Approx(-k2 * u[i]).epsilon(5e-3));
}

TEST_CASE("stable_dt combines the diffusion and delay bounds") {
  auto pp = builtin_predprey();
  const Grid g = Grid::make(40, pp.spec.domain_scale);
  const double dt = stable_dt(pp.spec, pp.spec.param, g);
  const double dmax = pp.spec.diffusion(pp.spec.param).maxCoeff();
  CHECK(dt <= g.h * g.h / (2 * dmax) + 1e-15);
  CHECK(dt <= 0.25);
}

TEST_CASE("diffusion-only run conserves mass and decays to the mean") {
  ModelSpec s = diffusion_only(0.5, 1.0);
  SimOpts opts;
  opts.N = 41;
  InitProfile init = [](double x) {
    return Eigen::VectorXd::Constant(1, 1.0 + 0.3 * std::cos(x));
  };
  SimRun run = integrate(s, {0, 0}, init, 12.0, opts);
  REQUIRE(!run.blew_up);
  auto mass = [&](const std::vector<double>& u) {
    double acc = 0.5 * (u.front() + u.back());
    for (int i = 1; i < run.grid.N - 1; ++i) acc += u[i];
    return acc * run.grid.h;
  };
  const double m0 = mass(run.states.front());
  for (const auto& st : run.states) CHECK(std::abs(mass(st) - m0) < 1e-8);
  // the cosine component decays like exp(-d t / l^2)
  auto amps = mode_amplitudes(run, {0, 1});
  CHECK(std::abs(amps[1][0].back()) < 1e-2 * std::abs(amps[1][0].front()));
  CHECK(std::abs(amps[0][0].back() - amps[0][0].front()) < 1e-8);
}

TEST_CASE("mode projections recover a pure cosine profile") {
  ModelSpec s = diffusion_only(0.1, 3.0);
  SimOpts opts;
  opts.N = 60;
  opts.stride = 1000000;  // keep only endpoints
  InitProfile init = [](double x) {
    return Eigen::VectorXd::Constant(1, 0.25 * std::cos(2.0 * x / 3.0));
  };
  SimRun run = integrate(s, {0, 0}, init, 1e-3, opts);
  auto amps = mode_amplitudes(run, {0, 1, 2, 3});
  const double lp = 3.0 * std::numbers::pi;
  CHECK(amps[2][0].front() == doctest::Approx(0.25 * std::sqrt(lp / 2)).epsilon(1e-3));
  CHECK(std::abs(amps[1][0].front()) < 1e-6);
  CHECK(std::abs(amps[3][0].front()) < 1e-6);
}

TEST_CASE("linear delayed feedback oscillates at the spectral frequency") {
  // u' = -a u(t-1) with a = pi/2: neutral oscillation at omega = pi/2
  ModelSpec s = delayed_feedback(std::numbers::pi / 2, 0.01, 1.0, false);
  SimOpts opts;
  opts.N = 8;
  SimRun run = integrate(s, {0, 0}, const_init(0.01), 120.0, opts);
  REQUIRE(!run.blew_up);
  PoincareSection sec;
  sec.component = 0;
  sec.node = 0;
  sec.proj_component_x = 0;
  sec.proj_component_y = 0;
  PoincarePoints pts = poincare(run, sec, 0.25);
  REQUIRE(pts.t.size() >= 10);
  double period = 0;
  for (size_t i = 1; i < pts.t.size(); ++i) period += pts.t[i] - pts.t[i - 1];
  period /= (pts.t.size() - 1);
  const double omega = 2 * std::numbers::pi / period;
  CHECK(omega == doctest::Approx(std::numbers::pi / 2).epsilon(0.01));
}

TEST_CASE("attractor classification: equilibrium and periodic") {
  PoincareSection sec;
  sec.component = 0;
  sec.node = 0;
  sec.proj_component_x = 0;
  sec.proj_component_y = 0;
  {
    // subcritical delayed feedback decays to the equilibrium
    ModelSpec s = delayed_feedback(1.0, 0.05, 1.0, true);
    SimRun run = integrate(s, {0, 0}, const_init(0.05), 400.0, SimOpts{.N = 10});
    const AttractorReport rep = classify_attractor(run, sec);
    CHECK(to_string(rep.kind) == "equilibrium");
  }
  {
    // supercritical delayed logistic settles on a limit cycle
    ModelSpec s = delayed_feedback(2.0, 0.05, 1.0, true);
    SimRun run = integrate(s, {0, 0}, const_init(0.1), 400.0, SimOpts{.N = 10});
    REQUIRE(!run.blew_up);
    const AttractorReport rep = classify_attractor(run, sec);
    CHECK(to_string(rep.kind) == "periodic");
    CHECK(rep.crossings >= 8);
  }
}

TEST_CASE("blowup is detected and reported") {
  ModelSpec s = diffusion_only(0.01, 1.0);
  s.linear_at0 = [](const Param&) { return Eigen::MatrixXd::Constant(1, 1, 1.0); };
  s.reaction_full = [](const Param&) {
    return Reaction([](const std::vector<Eigen::VectorXd>& v) {
      return Eigen::VectorXd::Constant(1, v[0][0] * v[0][0]);
    });
  };
  SimOpts opts;
  opts.N = 10;
  opts.blowup_norm = 1e6;
  SimRun run = integrate(s, {0, 0}, const_init(2.0), 50.0, opts);
  CHECK(run.blew_up);
  CHECK(run.blowup_time > 0);
}

TEST_CASE("parallel kernel is bitwise equal to the serial reference") {
  auto pp = builtin_predprey();
  InitProfile init = [&](double x) {
    Eigen::VectorXd v(2);
    v << 0.02 * std::cos(x / 3.0), -0.01 * std::cos(x / 3.0);
    return v;
  };
  SimOpts par, ser;
  par.N = ser.N = 32;
  par.parallel = true;
  ser.parallel = false;
  SimRun a = integrate(pp.spec, pp.spec.param, init, 5.0, par);
  SimRun b = integrate(pp.spec, pp.spec.param, init, 5.0, ser);
  REQUIRE(a.states.size() == b.states.size());
  for (size_t j = 0; j < a.states.size(); ++j)
    CHECK(std::memcmp(a.states[j].data(), b.states[j].data(),
                      a.states[j].size() * sizeof(double)) == 0);
}

TEST_CASE("csv and gnuplot exports are well formed") {
  ModelSpec s = diffusion_only(0.5, 1.0);
  SimOpts opts;
  opts.N = 11;
  SimRun run = integrate(s, {0, 0}, const_init(1.0), 0.1, opts);
  std::ostringstream csv;
  export_run_csv(run, csv);
  CHECK(csv.str().rfind("t,u0_0", 0) == 0);
  PoincarePoints pts;
  pts.t = {1.0};
  pts.x = {2.0};
  pts.y = {3.0};
  std::ostringstream pcsv;
  export_poincare_csv(pts, pcsv);
  CHECK(pcsv.str().find("1,2,3") != std::string::npos);
  std::ostringstream gp;
  export_heatmap_gnuplot(run, 0, "run.csv", gp);
  CHECK(gp.str().find("with image") != std::string::npos);
}
