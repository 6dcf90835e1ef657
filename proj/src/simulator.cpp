#include "dhopf/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#ifdef DHOPF_HAVE_OPENMP
#include <omp.h>
#endif

namespace dhopf {

namespace {
constexpr double kPi = std::numbers::pi;
}

Grid Grid::make(int N, double l) {
  if (N < 3) throw std::invalid_argument("Grid: need at least 3 nodes");
  Grid g;
  g.N = N;
  g.l = l;
  g.h = l * kPi / (N - 1);
  return g;
}

void neumann_laplacian(const Grid& g, const double* u, double* out) {
  const double ih2 = 1.0 / (g.h * g.h);
  const int N = g.N;
  out[0] = 2.0 * (u[1] - u[0]) * ih2;  // ghost node: u[-1] = u[1]
  for (int i = 1; i < N - 1; ++i) out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * ih2;
  out[N - 1] = 2.0 * (u[N - 2] - u[N - 1]) * ih2;
}

double stable_dt(const ModelSpec& spec, const Param& mu, const Grid& g) {
  double dt = std::numeric_limits<double>::infinity();
  const Eigen::VectorXd D = spec.diffusion(mu);
  const double dmax = D.size() ? D.maxCoeff() : 0.0;
  if (dmax > 0) dt = std::min(dt, g.h * g.h / (2.0 * dmax));
  for (double r : spec.delays(mu))
    if (r > 0) dt = std::min(dt, r / 4.0);
  if (!std::isfinite(dt))
    throw std::invalid_argument("stable_dt: no diffusion and no positive delay");
  return dt;
}

// ---- integrator ----------------------------------------------------------------

namespace {

// Circular buffer of accepted steps; step j holds the state at time j*dt.
struct History {
  int cap = 0;
  int n_state = 0;
  std::vector<std::vector<double>> ring;
  std::vector<double> initial;
  double dt = 0.0;
  long last_step = -1;

  void push(long step, const std::vector<double>& s) {
    ring[step % cap] = s;
    last_step = step;
  }
  const std::vector<double>& at_step(long j) const {
    if (j <= 0) return initial;
    return ring[j % cap];
  }
  // linear interpolation at time t <= last completed step time
  void lookup(double t, std::vector<double>& out) const {
    if (t <= 0.0) {
      out = initial;
      return;
    }
    const double s = t / dt;
    long j = static_cast<long>(std::floor(s));
    double w = s - j;
    if (j >= last_step) {
      j = last_step;
      w = 0.0;
    }
    const std::vector<double>& a = at_step(j);
    const std::vector<double>& b = at_step(j + 1 > last_step ? last_step : j + 1);
    for (int i = 0; i < n_state; ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
  }
};

struct RhsWork {
  const ModelSpec* spec;
  Grid grid;
  int n;
  Eigen::VectorXd D;
  Eigen::MatrixXd A;
  std::vector<Eigen::MatrixXd> G;
  Reaction reaction;  // may be empty
  int nd;
  bool parallel;

  // out = D lap u + A u + sum_k G_k u_k + f(u, u_1, ..., u_m), all nodewise
  void eval(const double* u, const std::vector<std::vector<double>>& ud, double* out) const {
    const int N = grid.N;
    const bool par = parallel;
#ifdef DHOPF_HAVE_OPENMP
#pragma omp parallel if (par)
#endif
    {
      std::vector<double> lap(N);
      std::vector<Eigen::VectorXd> vals(nd + 1, Eigen::VectorXd(n));
#ifdef DHOPF_HAVE_OPENMP
#pragma omp for
#endif
      for (int c = 0; c < n; ++c) {
        neumann_laplacian(grid, u + c * N, lap.data());
        for (int i = 0; i < N; ++i) {
          double v = D[c] * lap[i];
          for (int b = 0; b < n; ++b) v += A(c, b) * u[b * N + i];
          for (int k = 0; k < nd; ++k)
            for (int b = 0; b < n; ++b) v += G[k](c, b) * ud[k][b * N + i];
          out[c * N + i] = v;
        }
      }
      if (reaction) {
#ifdef DHOPF_HAVE_OPENMP
#pragma omp for
#endif
        for (int i = 0; i < N; ++i) {
          for (int b = 0; b < n; ++b) vals[0][b] = u[b * N + i];
          for (int k = 0; k < nd; ++k)
            for (int b = 0; b < n; ++b) vals[k + 1][b] = ud[k][b * N + i];
          const Eigen::VectorXd f = reaction(vals);
          for (int c = 0; c < n; ++c) out[c * N + i] += f[c];
        }
      }
    }
    (void)par;
  }
};

}  // namespace

SimRun integrate(const ModelSpec& spec, const Param& mu, const InitProfile& init, double T,
                 const SimOpts& opts) {
  SimRun run;
  run.grid = Grid::make(opts.N, spec.domain_scale);
  run.n_components = spec.n_components;
  const int N = run.grid.N, n = spec.n_components;
  const int n_state = n * N;

  const std::vector<double> delays = spec.delays(mu);
  const double dt = opts.dt > 0 ? opts.dt : 0.5 * stable_dt(spec, mu, run.grid);
  run.dt = dt;
  const long steps = static_cast<long>(std::ceil(T / dt));
  run.stride = opts.stride > 0 ? opts.stride : std::max<long>(1, steps / 4000);

  RhsWork w;
  w.spec = &spec;
  w.grid = run.grid;
  w.n = n;
  w.D = spec.diffusion(mu);
  w.A = spec.linear_at0(mu);
  w.G = spec.linear_delayed(mu);
  w.reaction = spec.reaction_full ? spec.reaction_full(mu) : Reaction{};
  w.nd = static_cast<int>(delays.size());
  w.parallel = opts.parallel;

  // constant-in-time initial history from the x-profiles
  std::vector<double> u0(n_state);
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd v = init(i * run.grid.h);
    if (v.size() != n) throw std::invalid_argument("integrate: init profile has wrong size");
    for (int c = 0; c < n; ++c) u0[c * N + i] = v[c];
  }

  double rmax = 0.0;
  for (double r : delays) rmax = std::max(rmax, r);
  History hist;
  hist.n_state = n_state;
  hist.dt = dt;
  hist.cap = static_cast<int>(std::ceil(rmax / dt)) + 4;
  hist.ring.assign(hist.cap, std::vector<double>(n_state));
  hist.initial = u0;
  hist.push(0, u0);

  std::vector<double> u = u0, k1(n_state), k2(n_state), k3(n_state), k4(n_state),
                      tmp(n_state);
  std::vector<std::vector<double>> ud(w.nd, std::vector<double>(n_state));
  auto fetch_delayed = [&](double t) {
    for (int k = 0; k < w.nd; ++k) hist.lookup(t - delays[k], ud[k]);
  };
  auto sample = [&](long step) {
    run.times.push_back(step * dt);
    run.states.push_back(u);
  };
  sample(0);

  for (long s = 0; s < steps; ++s) {
    const double t = s * dt;
    fetch_delayed(t);
    w.eval(u.data(), ud, k1.data());
    fetch_delayed(t + 0.5 * dt);
    for (int i = 0; i < n_state; ++i) tmp[i] = u[i] + 0.5 * dt * k1[i];
    w.eval(tmp.data(), ud, k2.data());
    for (int i = 0; i < n_state; ++i) tmp[i] = u[i] + 0.5 * dt * k2[i];
    w.eval(tmp.data(), ud, k3.data());
    fetch_delayed(t + dt);
    for (int i = 0; i < n_state; ++i) tmp[i] = u[i] + dt * k3[i];
    w.eval(tmp.data(), ud, k4.data());
    double umax = 0.0;
    for (int i = 0; i < n_state; ++i) {
      u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      umax = std::max(umax, std::abs(u[i]));
    }
    hist.push(s + 1, u);
    if (umax > opts.blowup_norm) {
      run.blew_up = true;
      run.blowup_time = (s + 1) * dt;
      sample(s + 1);
      return run;
    }
    if ((s + 1) % run.stride == 0 || s + 1 == steps) sample(s + 1);
  }
  return run;
}

// ---- diagnostics ------------------------------------------------------------------

std::vector<std::vector<std::vector<double>>> mode_amplitudes(const SimRun& run,
                                                              const std::vector<int>& modes) {
  const int N = run.grid.N, n = run.n_components;
  const double lp = run.grid.l * kPi;
  const size_t nt = run.times.size();
  std::vector<std::vector<std::vector<double>>> out(
      modes.size(), std::vector<std::vector<double>>(n, std::vector<double>(nt)));
  for (size_t m = 0; m < modes.size(); ++m) {
    const int mode = modes[m];
    const double norm = std::sqrt(mode == 0 ? lp : lp / 2.0);
    std::vector<double> g(N);
    for (int i = 0; i < N; ++i)
      g[i] = std::cos(mode * (i * run.grid.h) / run.grid.l) / norm;
    for (int c = 0; c < n; ++c)
      for (size_t t = 0; t < nt; ++t) {
        const double* u = run.states[t].data() + c * N;
        double acc = 0.5 * (u[0] * g[0] + u[N - 1] * g[N - 1]);
        for (int i = 1; i < N - 1; ++i) acc += u[i] * g[i];
        out[m][c][t] = acc * run.grid.h;
      }
  }
  return out;
}

namespace {

// sampled value of one state entry, linearly interpolated in time
double value_at(const SimRun& run, int entry, double t) {
  const auto& ts = run.times;
  if (t <= ts.front()) return run.states.front()[entry];
  if (t >= ts.back()) return run.states.back()[entry];
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const size_t j = static_cast<size_t>(it - ts.begin());
  const double w = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
  return (1.0 - w) * run.states[j - 1][entry] + w * run.states[j][entry];
}

}  // namespace

PoincarePoints poincare(const SimRun& run, const PoincareSection& sec, double transient_frac,
                        int min_crossings) {
  (void)min_crossings;
  PoincarePoints pts;
  if (run.times.size() < 3) return pts;
  const int N = run.grid.N;
  const int esec = sec.component * N + sec.node;
  const int ex = sec.proj_component_x * N + sec.node;
  const int ey = sec.proj_component_y * N + sec.node;
  const double t0 = run.times.front() + transient_frac * (run.times.back() - run.times.front());
  double prev = 0.0;
  bool have_prev = false;
  double prev_t = 0.0;
  for (size_t j = 0; j < run.times.size(); ++j) {
    const double t = run.times[j];
    if (t < t0 || t - sec.delay < run.times.front()) continue;
    const double v = value_at(run, esec, t - sec.delay) - sec.level;
    if (have_prev) {
      const bool up = prev < 0.0 && v >= 0.0;
      const bool down = prev > 0.0 && v <= 0.0;
      if ((sec.direction >= 0 && up) || (sec.direction < 0 && down)) {
        const double theta = prev / (prev - v);
        const double tc = prev_t + theta * (t - prev_t);
        pts.t.push_back(tc);
        pts.x.push_back(value_at(run, ex, tc));
        pts.y.push_back(value_at(run, ey, tc));
      }
    }
    prev = v;
    prev_t = t;
    have_prev = true;
  }
  return pts;
}

std::string to_string(AttractorKind k) {
  switch (k) {
    case AttractorKind::Equilibrium: return "equilibrium";
    case AttractorKind::Periodic: return "periodic";
    case AttractorKind::TorusLike: return "torus-like";
    case AttractorKind::Irregular: return "irregular";
    case AttractorKind::Inconclusive: return "inconclusive";
  }
  return "?";
}

AttractorReport classify_attractor(const SimRun& run, const PoincareSection& sec,
                                   double transient_frac, double equilibrium_tol,
                                   double periodic_tol, double thickness_tol) {
  AttractorReport rep{};
  rep.kind = AttractorKind::Inconclusive;
  if (run.blew_up) {
    rep.evidence = "trajectory blew up";
    return rep;
  }
  const size_t nt = run.times.size();
  const size_t j0 = static_cast<size_t>(transient_frac * nt);
  if (nt - j0 < 10) {
    rep.evidence = "too few samples after transient";
    return rep;
  }
  // largest per-entry range over the tail
  double range = 0.0;
  const size_t ne = run.states.front().size();
  for (size_t e = 0; e < ne; ++e) {
    double lo = run.states[j0][e], hi = lo;
    for (size_t j = j0; j < nt; ++j) {
      lo = std::min(lo, run.states[j][e]);
      hi = std::max(hi, run.states[j][e]);
    }
    range = std::max(range, hi - lo);
  }
  rep.state_variance = range;
  if (range < equilibrium_tol) {
    rep.kind = AttractorKind::Equilibrium;
    rep.evidence = "state range below equilibrium tolerance";
    return rep;
  }

  PoincarePoints pts = poincare(run, sec, transient_frac);
  rep.crossings = static_cast<int>(pts.t.size());
  if (rep.crossings < 8) {
    rep.evidence = "fewer than 8 section crossings";
    return rep;
  }
  // diameter of the section points relative to the projection scale
  double cxm = 0.0, cym = 0.0;
  for (size_t i = 0; i < pts.x.size(); ++i) {
    cxm += pts.x[i];
    cym += pts.y[i];
  }
  cxm /= pts.x.size();
  cym /= pts.y.size();
  double diam = 0.0;
  for (size_t i = 0; i < pts.x.size(); ++i)
    for (size_t j = i + 1; j < pts.x.size(); ++j)
      diam = std::max(diam, std::hypot(pts.x[i] - pts.x[j], pts.y[i] - pts.y[j]));
  rep.poincare_diameter = diam;
  if (diam < periodic_tol * range) {
    rep.kind = AttractorKind::Periodic;
    rep.evidence = "section crossings collapse to one point";
    return rep;
  }

  // closed-curve test: a 2-torus fills a thin closed curve in the section, so
  // the local transverse spread of each point's neighborhood stays tiny
  // relative to the curve diameter; an irregular attractor fattens it.
  const size_t n = pts.x.size();
  const size_t k = std::min<size_t>(10, n - 1);
  std::vector<double> thick;
  std::vector<double> d2(n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j)
      d2[j] = (pts.x[i] - pts.x[j]) * (pts.x[i] - pts.x[j]) +
              (pts.y[i] - pts.y[j]) * (pts.y[i] - pts.y[j]);
    std::vector<size_t> ord(n);
    for (size_t j = 0; j < n; ++j) ord[j] = j;
    std::nth_element(ord.begin(), ord.begin() + k, ord.end(),
                     [&](size_t a, size_t b) { return d2[a] < d2[b]; });
    // PCA of the k+1 nearest points: the small singular value is the
    // rms spread perpendicular to the local curve direction
    double mx = 0, my = 0;
    for (size_t j = 0; j <= k; ++j) {
      mx += pts.x[ord[j]];
      my += pts.y[ord[j]];
    }
    mx /= k + 1;
    my /= k + 1;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t j = 0; j <= k; ++j) {
      const double dx = pts.x[ord[j]] - mx, dy = pts.y[ord[j]] - my;
      sxx += dx * dx;
      sxy += dx * dy;
      syy += dy * dy;
    }
    const double tr2 = (sxx + syy) / 2;
    const double det = sxx * syy - sxy * sxy;
    const double lam_min = std::max(0.0, tr2 - std::sqrt(std::max(0.0, tr2 * tr2 - det)));
    thick.push_back(std::sqrt(lam_min / (k + 1)));
  }
  std::sort(thick.begin(), thick.end());
  const double med_thick = thick[thick.size() / 2];
  rep.thickness_ratio = diam > 0 ? med_thick / diam : std::numeric_limits<double>::infinity();
  std::ostringstream ev;
  ev << "crossings=" << rep.crossings << " diameter=" << diam
     << " thickness_ratio=" << rep.thickness_ratio;
  rep.evidence = ev.str();
  rep.kind =
      rep.thickness_ratio < thickness_tol ? AttractorKind::TorusLike : AttractorKind::Irregular;
  return rep;
}

// ---- export -------------------------------------------------------------------------

void export_run_csv(const SimRun& run, std::ostream& os) {
  const int N = run.grid.N;
  os << "t";
  for (int c = 0; c < run.n_components; ++c)
    for (int i = 0; i < N; ++i) os << ",u" << c << "_" << i;
  os << "\n";
  for (size_t j = 0; j < run.times.size(); ++j) {
    os << run.times[j];
    for (double v : run.states[j]) os << ',' << v;
    os << "\n";
  }
}

void export_poincare_csv(const PoincarePoints& pts, std::ostream& os) {
  os << "t,x,y\n";
  for (size_t i = 0; i < pts.t.size(); ++i)
    os << pts.t[i] << ',' << pts.x[i] << ',' << pts.y[i] << "\n";
}

void export_heatmap_gnuplot(const SimRun& run, int component, const std::string& csv_path,
                            std::ostream& os) {
  const int N = run.grid.N;
  const int c0 = 1 + component * N;  // first csv column of the component block
  os << "# space-time heatmap of component " << component << " from " << csv_path << "\n";
  os << "set datafile separator ','\n";
  os << "set xlabel 'node'\nset ylabel 'sample'\n";
  os << "set view map\n";
  os << "splot '" << csv_path << "' matrix every ::" << c0 << ":1:" << (c0 + N - 1)
     << " with image notitle\n";
}

}  // namespace dhopf
