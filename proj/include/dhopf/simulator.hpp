#pragma once
// Method-of-lines integrator for the delayed reaction-diffusion system with
// Neumann boundary conditions, plus diagnostics: spatial mode projections,
// Poincare sections, and attractor classification.

#include <iosfwd>

#include "dhopf/model.hpp"

namespace dhopf {

struct Grid {
  int N;          // nodes on [0, l*pi], inclusive of both boundaries
  double l;
  double h;       // spacing l*pi/(N-1)
  static Grid make(int N, double l);
};

// Second-difference Neumann Laplacian (ghost-node reflection) applied per row.
void neumann_laplacian(const Grid& g, const double* u, double* out);

// State layout: component-major, state[c*N + i] = component c at node i.
struct SimRun {
  Grid grid;
  int n_components;
  double dt;
  int stride;
  std::vector<double> times;               // sample times
  std::vector<std::vector<double>> states; // sampled full states
  bool blew_up = false;
  double blowup_time = 0.0;
};

struct SimOpts {
  int N = 40;
  double dt = 0.0;        // 0 -> half the stability bound
  int stride = 0;         // 0 -> about 4000 stored samples
  double blowup_norm = 1e8;
  bool parallel = true;   // OpenMP right-hand side; false = serial reference
};

// Initial history: x-profile for each component on [-r_max, 0] (time-constant
// histories cover the caption-style initial data).
using InitProfile = std::function<Eigen::VectorXd(double x)>;

SimRun integrate(const ModelSpec& spec, const Param& mu, const InitProfile& init,
                 double T, const SimOpts& opts = {});

// Stability-bound step size min(h^2/(2 max d_i), r_min/4) at the given mu.
double stable_dt(const ModelSpec& spec, const Param& mu, const Grid& g);

// Projections onto normalized cosine modes gamma_n, per component:
// result[mode][component] is a time series aligned with run.times.
std::vector<std::vector<std::vector<double>>> mode_amplitudes(const SimRun& run,
                                                              const std::vector<int>& modes);

struct PoincareSection {
  int component = 0;    // section variable: component value at node `node`...
  int node = 0;
  double delay = 0.0;   // ...evaluated at t - delay (0 = instantaneous)
  double level = 0.0;
  int direction = +1;   // sign of crossing
  int proj_component_x = 0, proj_component_y = 1;  // projection at the same node
};

struct PoincarePoints {
  std::vector<double> t, x, y;
};

// Linear-interpolated section crossings after discarding `transient_frac` of the run.
PoincarePoints poincare(const SimRun& run, const PoincareSection& sec,
                        double transient_frac = 0.5, int min_crossings = 50);

enum class AttractorKind { Equilibrium, Periodic, TorusLike, Irregular, Inconclusive };
std::string to_string(AttractorKind k);

struct AttractorReport {
  AttractorKind kind;
  double state_variance;
  double poincare_diameter;
  double thickness_ratio;  // median local transverse spread / diameter (torus test)
  int crossings;
  std::string evidence;
};

AttractorReport classify_attractor(const SimRun& run, const PoincareSection& sec,
                                   double transient_frac = 0.5,
                                   double equilibrium_tol = 1e-8,
                                   double periodic_tol = 1e-3,
                                   double thickness_tol = 0.0035);

void export_run_csv(const SimRun& run, std::ostream& os);
void export_poincare_csv(const PoincarePoints& pts, std::ostream& os);
void export_heatmap_gnuplot(const SimRun& run, int component, const std::string& csv_path,
                            std::ostream& os);

}  // namespace dhopf
