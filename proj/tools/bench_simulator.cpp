// Benchmark: OpenMP-parallel right-hand-side kernel vs the serial reference.
// The two must agree bitwise; timings are reported for both.

#include <chrono>
#include <cstring>
#include <iostream>

#include "dhopf/simulator.hpp"

using namespace dhopf;

namespace {

double run_once(const ModelSpec& spec, const Param& mu, bool parallel, double T, int N,
                SimRun& out) {
  SimOpts opts;
  opts.N = N;
  opts.parallel = parallel;
  InitProfile init = [&](double x) {
    Eigen::VectorXd v(spec.n_components);
    for (int c = 0; c < spec.n_components; ++c)
      v[c] = 0.01 * std::cos(x / spec.domain_scale) / (c + 1);
    return v;
  };
  const auto t0 = std::chrono::steady_clock::now();
  out = integrate(spec, mu, init, T, opts);
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

bool bitwise_equal(const SimRun& a, const SimRun& b) {
  if (a.states.size() != b.states.size()) return false;
  for (size_t j = 0; j < a.states.size(); ++j)
    if (std::memcmp(a.states[j].data(), b.states[j].data(),
                    a.states[j].size() * sizeof(double)) != 0)
      return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  double T = 20.0;
  int N = 40;
  if (argc > 1) T = std::atof(argv[1]);
  if (argc > 2) N = std::atoi(argv[2]);

  auto model = builtin_predprey();
  const Param mu = model.spec.param;

  SimRun serial_run, parallel_run;
  const double ts = run_once(model.spec, mu, false, T, N, serial_run);
  const double tp = run_once(model.spec, mu, true, T, N, parallel_run);

  std::cout << "predprey, T=" << T << ", N=" << N << "\n";
  std::cout << "serial reference: " << ts << " s\n";
  std::cout << "openmp kernel:    " << tp << " s  (speedup " << ts / tp << "x)\n";
  const bool same = bitwise_equal(serial_run, parallel_run);
  std::cout << "bitwise equal:    " << (same ? "yes" : "NO") << "\n";
  return same ? 0 : 1;
}
