// Command-line front end: Hopf branch sweeps, double-Hopf location, normal-form
// classification, and delayed-PDE simulation with attractor reports.
//
// Exit codes: 0 success, 2 nondegeneracy-hypothesis failure, 3 numerical
// degeneracy (pipeline error), 64 usage / configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dhopf/normalform.hpp"
#include "dhopf/simulator.hpp"
#include "dhopf/spectrum.hpp"
#include "dhopf/unfolding.hpp"

namespace fs = std::filesystem;
using namespace dhopf;

namespace {

constexpr int kExitOk = 0, kExitHypothesis = 2, kExitDegenerate = 3, kExitUsage = 64;

struct RunConfig {
  std::string model = "epidemic";
  std::string params;        // comma-separated key=value overrides for built-ins
  std::string out = ".";
  double tol_res = 1e-3;     // weak-resonance / near-resonance margin
  double tol_agree = 1e-8;   // closed-form vs generic agreement
};

std::map<std::string, double> parse_kv(const std::string& s) {
  std::map<std::string, double> kv;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--params", "expected key=value");
    kv[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  return kv;
}

ModelSpec load_model(const RunConfig& cfg, Param* default_mu = nullptr,
                     BranchId* def_a = nullptr, BranchId* def_b = nullptr,
                     double* sweep_lo = nullptr, double* sweep_hi = nullptr) {
  auto kv = parse_kv(cfg.params);
  auto get = [&](const char* k, double fallback) {
    auto it = kv.find(k);
    return it == kv.end() ? fallback : it->second;
  };
  if (cfg.model == "epidemic") {
    EpidemicParams p;
    p.alpha = get("alpha", p.alpha); p.d = get("d", p.d); p.mu = get("mu", p.mu);
    p.gamma = get("gamma", p.gamma); p.beta = get("beta", p.beta); p.tau = get("tau", p.tau);
    p.d1 = get("d1", p.d1); p.d2 = get("d2", p.d2); p.d3 = get("d3", p.d3);
    p.l = get("l", p.l);
    auto m = builtin_epidemic(p);
    if (default_mu) *default_mu = m.spec.param;
    if (def_a) *def_a = {1, 0, 0};
    if (def_b) *def_b = {2, 0, 0};
    if (sweep_lo) *sweep_lo = 4.0;
    if (sweep_hi) *sweep_hi = 7.0;
    return m.spec;
  }
  if (cfg.model == "predprey") {
    PredPreyParams p;
    p.r1 = get("r1", p.r1); p.r2 = get("r2", p.r2);
    p.a11 = get("a11", p.a11); p.a12 = get("a12", p.a12);
    p.a21 = get("a21", p.a21); p.a22 = get("a22", p.a22);
    p.d1 = get("d1", p.d1); p.d2 = get("d2", p.d2); p.l = get("l", p.l);
    auto m = builtin_predprey(p);
    if (default_mu) *default_mu = m.spec.param;
    if (def_a) *def_a = {0, 1, 1};
    if (def_b) *def_b = {0, 0, 0};
    if (sweep_lo) *sweep_lo = 0.4;
    if (sweep_hi) *sweep_hi = 0.9;
    return m.spec;
  }
  // otherwise: JSON model file
  std::ifstream in(cfg.model);
  if (!in) throw CLI::ValidationError("--model", "not a built-in name and not a readable file");
  nlohmann::json j;
  in >> j;
  ModelSpec spec = model_from_json(j);
  if (default_mu) *default_mu = spec.param;
  return spec;
}

bool parse_sweep(const std::string& s, std::string& name, double& lo, double& hi, int& steps) {
  std::stringstream ss(s);
  std::string a, b, c, d;
  if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c, ':'))
    return false;
  name = a;
  lo = std::stod(b);
  hi = std::stod(c);
  steps = std::getline(ss, d, ':') ? std::stoi(d) : 100;
  return true;
}

bool parse_branch(const std::string& s, BranchId& id) {
  int m, r, j;
  if (std::sscanf(s.c_str(), "%d:%d:%d", &m, &r, &j) != 3) return false;
  id = {m, r, j};
  return true;
}

std::ofstream open_out(const RunConfig& cfg, const std::string& file) {
  fs::create_directories(cfg.out);
  std::ofstream os(fs::path(cfg.out) / file);
  if (!os) throw std::runtime_error("cannot write " + (fs::path(cfg.out) / file).string());
  return os;
}

// ---- commands -----------------------------------------------------------------

int cmd_hopf(const RunConfig& cfg, const std::string& sweep,
             const std::vector<std::string>& branches) {
  std::string name;
  double lo, hi;
  int steps;
  if (!parse_sweep(sweep, name, lo, hi, steps) || steps < 1 || !(lo < hi)) {
    std::cerr << "hopf: bad or empty --sweep (want name:lo:hi[:steps])\n";
    return kExitUsage;
  }
  ModelSpec spec = load_model(cfg);
  for (const std::string& bs : branches) {
    BranchId id;
    if (!parse_branch(bs, id)) {
      std::cerr << "hopf: bad --branch '" << bs << "' (want m:root:j)\n";
      return kExitUsage;
    }
    std::ostringstream fname;
    fname << "branch_m" << id.m << "_r" << id.root << "_j" << id.j << ".csv";
    auto os = open_out(cfg, fname.str());
    try {
      HopfBranch br = hopf_curve(spec, id, lo, hi, steps);
      if (br.samples.empty())
        std::cerr << "warning: branch " << bs << " has no imaginary roots over the sweep\n";
      export_branch_csv(br, os);
      std::cout << "wrote " << fname.str() << " (" << br.samples.size() << " samples)\n";
    } catch (const std::exception& e) {
      std::cerr << "hopf: " << e.what() << "\n";
      return kExitDegenerate;
    }
  }
  return kExitOk;
}

DoubleHopfPoint locate(const RunConfig& cfg, const ModelSpec& spec, BranchId a, BranchId b,
                       double lo, double hi) {
  RootSearchOpts ropts;
  NondegeneracyOpts nopts;
  nopts.eps_res = cfg.tol_res;
  return find_double_hopf(spec, a, b, lo, hi, ropts, nopts);
}

int cmd_doublehopf(const RunConfig& cfg, const std::string& ba, const std::string& bb,
                   const std::string& sweep) {
  Param mu;
  BranchId a, b;
  double lo, hi;
  ModelSpec spec = load_model(cfg, &mu, &a, &b, &lo, &hi);
  if (!ba.empty() && !parse_branch(ba, a)) return kExitUsage;
  if (!bb.empty() && !parse_branch(bb, b)) return kExitUsage;
  if (!sweep.empty()) {
    std::string name;
    int steps;
    if (!parse_sweep(sweep, name, lo, hi, steps)) return kExitUsage;
  }
  try {
    DoubleHopfPoint pt = locate(cfg, spec, a, b, lo, hi);
    auto os = open_out(cfg, "double_hopf.json");
    os << point_to_json(pt).dump(2) << "\n";
    std::cout << "double Hopf at mu = (" << pt.mu0[0] << ", " << pt.mu0[1] << "), waves ("
              << pt.n1 << ", " << pt.n2 << "), frequencies (" << pt.w1_orig << ", "
              << pt.w2_orig << ")\n";
    if (!(pt.hyp.H1 && pt.hyp.H2 && pt.hyp.H3)) {
      std::cerr << "nondegeneracy hypotheses failed: " << pt.hyp.detail << "\n";
      return kExitHypothesis;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "doublehopf: " << e.what() << "\n";
    return kExitDegenerate;
  }
}

int cmd_normalform(const RunConfig& cfg, const std::string& ba, const std::string& bb,
                   const std::string& sweep, double span) {
  Param mu;
  BranchId a, b;
  double lo, hi;
  ModelSpec spec = load_model(cfg, &mu, &a, &b, &lo, &hi);
  if (!ba.empty() && !parse_branch(ba, a)) return kExitUsage;
  if (!bb.empty() && !parse_branch(bb, b)) return kExitUsage;
  if (!sweep.empty()) {
    std::string name;
    int steps;
    if (!parse_sweep(sweep, name, lo, hi, steps)) return kExitUsage;
  }
  try {
    DoubleHopfPoint pt = locate(cfg, spec, a, b, lo, hi);
    if (!(pt.hyp.H1 && pt.hyp.H2 && pt.hyp.H3)) {
      std::cerr << "nondegeneracy hypotheses failed: " << pt.hyp.detail << "\n";
      return kExitHypothesis;
    }
    NormalFormCoeffs nf = assemble(spec, pt);
    AmplitudeSystem amp = reduce(nf, pt.mu0);
    UnfoldingClass cls = classify(amp);
    auto lines = bifurcation_lines(amp, cls);
    open_out(cfg, "normal_form.json") << coeffs_to_json(nf).dump(2) << "\n";
    open_out(cfg, "unfolding.json") << unfolding_to_json(amp, cls, lines).dump(2) << "\n";
    {
      auto os = open_out(cfg, "bifurcation_lines.csv");
      export_lines_csv(amp, lines, span, os);
    }
    {
      auto os = open_out(cfg, "bifurcation_lines.gp");
      export_lines_gnuplot(amp, lines, span, "bifurcation_lines.csv", os);
    }
    std::cout << "unfolding case " << to_string(cls.label) << "  (b0=" << amp.b0
              << ", c0=" << amp.c0 << ", d0=" << amp.d0 << ", d0-b0c0=" << amp.disc << ")\n";
    return kExitOk;
  } catch (const PipelineError& e) {
    std::cerr << "normalform [" << e.stage << "]: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "normalform: " << e.what() << "\n";
    return kExitDegenerate;
  }
}

int cmd_simulate(const RunConfig& cfg, const std::string& point, const std::string& offset,
                 const std::string& init, double horizon, int grid, double dt,
                 const std::string& section, bool serial) {
  Param mu;
  ModelSpec spec = load_model(cfg, &mu);
  if (!point.empty()) {
    if (std::sscanf(point.c_str(), "%lf:%lf", &mu[0], &mu[1]) != 2) {
      std::cerr << "simulate: bad --point (want mu1:mu2)\n";
      return kExitUsage;
    }
  }
  if (!offset.empty()) {
    double a1, a2;
    if (std::sscanf(offset.c_str(), "%lf:%lf", &a1, &a2) != 2) {
      std::cerr << "simulate: bad --offset (want da1:da2)\n";
      return kExitUsage;
    }
    mu[0] += a1;
    mu[1] += a2;
  }
  // init: per-component "base:amp:k" (deviation from the equilibrium), ';'-separated
  std::vector<std::array<double, 3>> profs;
  {
    std::stringstream ss(init);
    std::string item;
    while (std::getline(ss, item, ';')) {
      std::array<double, 3> p{0, 0, 0};
      const int got = std::sscanf(item.c_str(), "%lf:%lf:%lf", &p[0], &p[1], &p[2]);
      if (got == 2) {  // amp:k shorthand
        p[2] = p[1];
        p[1] = p[0];
        p[0] = 0.0;
      } else if (got != 3) {
        std::cerr << "simulate: bad --init component '" << item << "'\n";
        return kExitUsage;
      }
      profs.push_back(p);
    }
  }
  if (profs.empty()) {
    // default: small homogeneous deviation from the equilibrium
    profs.assign(spec.n_components, {0.01, 0.0, 0.0});
  }
  if (static_cast<int>(profs.size()) != spec.n_components) {
    std::cerr << "simulate: --init needs " << spec.n_components << " components\n";
    return kExitUsage;
  }
  const double l = spec.domain_scale;
  InitProfile ip = [profs, l](double x) {
    Eigen::VectorXd v(profs.size());
    for (size_t c = 0; c < profs.size(); ++c)
      v[c] = profs[c][0] + profs[c][1] * std::cos(profs[c][2] * x / l);
    return v;
  };
  SimOpts opts;
  opts.N = grid;
  opts.dt = dt;
  opts.parallel = !serial;
  PoincareSection sec;
  if (!section.empty() &&
      std::sscanf(section.c_str(), "%d:%d:%lf:%lf:%d", &sec.component, &sec.node, &sec.delay,
                  &sec.level, &sec.direction) < 2) {
    std::cerr << "simulate: bad --section (want comp:node[:delay[:level[:dir]]])\n";
    return kExitUsage;
  }
  sec.proj_component_x = 0;
  sec.proj_component_y = spec.n_components > 1 ? 1 : 0;
  try {
    SimRun run = integrate(spec, mu, ip, horizon, opts);
    {
      auto os = open_out(cfg, "run.csv");
      export_run_csv(run, os);
    }
    {
      auto os = open_out(cfg, "heatmap.gp");
      export_heatmap_gnuplot(run, 0, "run.csv", os);
    }
    PoincarePoints pts = poincare(run, sec);
    {
      auto os = open_out(cfg, "poincare.csv");
      export_poincare_csv(pts, os);
    }
    AttractorReport rep = classify_attractor(run, sec);
    nlohmann::json rj{{"kind", to_string(rep.kind)},
                      {"state_range", rep.state_variance},
                      {"poincare_diameter", rep.poincare_diameter},
                      {"thickness_ratio", rep.thickness_ratio},
                      {"crossings", rep.crossings},
                      {"evidence", rep.evidence},
                      {"blew_up", run.blew_up}};
    open_out(cfg, "attractor.json") << rj.dump(2) << "\n";
    std::cout << "attractor: " << to_string(rep.kind) << "  (" << rep.evidence << ")\n";
    return run.blew_up ? kExitDegenerate : kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return kExitDegenerate;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"double Hopf analysis of delayed reaction-diffusion systems"};
  app.require_subcommand(1);
  RunConfig cfg;
  app.fallthrough();  // allow the global options after a subcommand name
  app.add_option("--model", cfg.model, "built-in name (epidemic, predprey) or JSON file");
  app.add_option("--params", cfg.params, "built-in parameter overrides: key=value,...");
  app.add_option("--out", cfg.out, "output directory");
  app.add_option("--tol.res", cfg.tol_res, "resonance margin");
  app.add_option("--tol.agree", cfg.tol_agree, "closed-form vs generic agreement tolerance");

  auto* hopf = app.add_subcommand("hopf", "sweep Hopf branches, one CSV per branch");
  std::string sweep;
  std::vector<std::string> branches;
  hopf->add_option("--sweep", sweep, "name:lo:hi[:steps] over the swept parameter")
      ->required();
  hopf->add_option("--branch", branches, "branch id m:root:j (repeatable)")->required();

  auto* dh = app.add_subcommand("doublehopf", "locate a double Hopf point");
  std::string ba, bb, dsweep;
  dh->add_option("--branch-a", ba, "first branch m:root:j (default per model)");
  dh->add_option("--branch-b", bb, "second branch m:root:j");
  dh->add_option("--sweep", dsweep, "name:lo:hi bracket for the swept parameter");

  auto* nf = app.add_subcommand("normalform", "normal form + unfolding at the located point");
  std::string nba, nbb, nsweep;
  double span = 0.05;
  nf->add_option("--branch-a", nba, "first branch m:root:j");
  nf->add_option("--branch-b", nbb, "second branch m:root:j");
  nf->add_option("--sweep", nsweep, "name:lo:hi bracket");
  nf->add_option("--span", span, "half-width of the exported bifurcation-line segments");

  auto* sim = app.add_subcommand("simulate", "integrate the PDE and classify the attractor");
  std::string point, offset, init, section;
  double horizon = 500.0, dt = 0.0;
  int grid = 40;
  bool serial = false;
  sim->add_option("--point", point, "parameter point mu1:mu2 (default: model base)");
  sim->add_option("--offset", offset, "parameter offset da1:da2");
  sim->add_option("--init", init, "per-component base:amp:k profile, ';'-separated");
  sim->add_option("--horizon", horizon, "integration time");
  sim->add_option("--grid", grid, "number of spatial nodes");
  sim->add_option("--dt", dt, "time step (0 = half the stability bound)");
  sim->add_option("--section", section, "Poincare section comp:node[:delay[:level[:dir]]]");
  sim->add_flag("--serial", serial, "use the serial reference kernel");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (hopf->parsed()) return cmd_hopf(cfg, sweep, branches);
  if (dh->parsed()) return cmd_doublehopf(cfg, ba, bb, dsweep);
  if (nf->parsed()) return cmd_normalform(cfg, nba, nbb, nsweep, span);
  if (sim->parsed())
    return cmd_simulate(cfg, point, offset, init, horizon, grid, dt, section, serial);
  return kExitUsage;
}
