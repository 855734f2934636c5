// Microbenchmark comparing the serial reference kernels against the OpenMP
// variants, plus a composed reverse-pass timing. Run with a thread count:
//   lsap_bench [threads] [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include <omp.h>

#include "lsap/denoiser.hpp"
#include "lsap/kernels.hpp"
#include "lsap/parallel.hpp"
#include "lsap/reverse.hpp"
#include "lsap/rng.hpp"

using namespace lsap;

namespace {

double time_ms(const std::function<void()>& fn, int repeats) {
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < repeats; ++i) fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / repeats;
}

void report(const char* name, double serial_ms, double omp_ms) {
  std::printf("%-24s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx\n", name,
              serial_ms, omp_ms, serial_ms / omp_ms);
}

}  // namespace

int main(int argc, char** argv) {
  int threads = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
  int repeats = argc > 2 ? std::atoi(argv[2]) : 20;
  set_threads(threads);
  std::printf("threads=%d repeats=%d\n", threads, repeats);

  Rng rng(7);
  const std::size_t rows = 512, cols = 2064;
  std::vector<double> a(rows * cols), x(cols), y(rows), gx(cols);
  for (auto& v : a) v = rng.gaussian();
  for (auto& v : x) v = rng.gaussian();

  report("matvec 512x2064",
         time_ms([&] { kernels::matvec_serial(a.data(), x.data(), y.data(), rows, cols); }, repeats),
         time_ms([&] { kernels::matvec_omp(a.data(), x.data(), y.data(), rows, cols); }, repeats));

  report("matvec_t 512x2064",
         time_ms([&] { kernels::matvec_t_serial(a.data(), y.data(), gx.data(), rows, cols); }, repeats),
         time_ms([&] { kernels::matvec_t_omp(a.data(), y.data(), gx.data(), rows, cols); }, repeats));

  const std::size_t n = 8192, frame = 256, hop = 64, brows = 129;
  const std::size_t nframes = (n - frame) / hop + 1;
  std::vector<double> basis(brows * frame), sig(n), spec(nframes * brows),
      gsig(n, 0.0);
  for (auto& v : basis) v = rng.gaussian();
  for (auto& v : sig) v = rng.gaussian();

  report("framed 129x256 @8k",
         time_ms([&] { kernels::framed_apply_serial(basis.data(), sig.data(), spec.data(), nframes, brows, frame, hop); }, repeats),
         time_ms([&] { kernels::framed_apply_omp(basis.data(), sig.data(), spec.data(), nframes, brows, frame, hop); }, repeats));

  report("framed_t 129x256 @8k",
         time_ms([&] {
           std::fill(gsig.begin(), gsig.end(), 0.0);
           kernels::framed_apply_t_serial(basis.data(), spec.data(), gsig.data(), n, nframes, brows, frame, hop);
         }, repeats),
         time_ms([&] {
           std::fill(gsig.begin(), gsig.end(), 0.0);
           kernels::framed_apply_t_omp(basis.data(), spec.data(), gsig.data(), n, nframes, brows, frame, hop);
         }, repeats));

  // Composed reverse pass with the toy MLP at corpus scale: the per-sample
  // loops of the attack stages parallelize over samples, so this measures
  // the per-sample unit of work.
  {
    const std::size_t dim = 2048;
    NoiseSchedule s = build_schedule(ScheduleKind::kLinear, 100, 1e-4, 0.02);
    MlpArch arch;
    arch.input_dim = dim;
    MlpDenoiser den(DenoiserParams::init(arch, 11), s.T);
    Rng g(3);
    Array x_t = g.gaussian_array({dim});
    ReverseConfig rc;
    rc.stride = 6;
    auto run = [&] {
      ComputeLedger ledger;
      reverse_from(x_t, 60, den, s, rc, &ledger);
    };
    double serial = [&] {
      set_threads(1);
      return time_ms(run, repeats);
    }();
    double par = [&] {
      set_threads(threads);
      return time_ms(run, repeats);
    }();
    report("reverse pass t=60", serial, par);
  }

  return 0;
}
