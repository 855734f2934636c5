#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "lsap/kernels.hpp"
#include "lsap/parallel.hpp"
#include "lsap/rng.hpp"

using namespace lsap;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.gaussian();
  return v;
}

}  // namespace

TEST_CASE("matvec serial and omp are bitwise identical") {
  set_threads(4);
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    std::size_t rows = 1 + trial * 13, cols = 1 + trial * 29;
    auto a = random_vec(rows * cols, trial);
    auto x = random_vec(cols, trial + 100);
    std::vector<double> y1(rows), y2(rows);
    kernels::matvec_serial(a.data(), x.data(), y1.data(), rows, cols);
    kernels::matvec_omp(a.data(), x.data(), y2.data(), rows, cols);
    CHECK(y1 == y2);
  }
  set_threads(0);
}

TEST_CASE("matvec_t serial and omp are bitwise identical") {
  set_threads(4);
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    std::size_t rows = 3 + trial * 17, cols = 2 + trial * 11;
    auto a = random_vec(rows * cols, trial);
    auto g = random_vec(rows, trial + 50);
    std::vector<double> g1(cols), g2(cols);
    kernels::matvec_t_serial(a.data(), g.data(), g1.data(), rows, cols);
    kernels::matvec_t_omp(a.data(), g.data(), g2.data(), rows, cols);
    CHECK(g1 == g2);
  }
  set_threads(0);
}

TEST_CASE("matmul serial and omp are bitwise identical") {
  set_threads(4);
  auto a = random_vec(37 * 19, 1);
  auto b = random_vec(19 * 23, 2);
  std::vector<double> c1(37 * 23), c2(37 * 23);
  kernels::matmul_serial(a.data(), b.data(), c1.data(), 37, 19, 23);
  kernels::matmul_omp(a.data(), b.data(), c2.data(), 37, 19, 23);
  CHECK(c1 == c2);
  set_threads(0);
}

TEST_CASE("framed apply and transpose match serial references bitwise") {
  set_threads(4);
  const std::size_t n = 512, frame = 64, hop = 16, rows = 33;
  const std::size_t nframes = (n - frame) / hop + 1;
  auto basis = random_vec(rows * frame, 3);
  auto x = random_vec(n, 4);
  std::vector<double> y1(nframes * rows), y2(nframes * rows);
  kernels::framed_apply_serial(basis.data(), x.data(), y1.data(), nframes,
                               rows, frame, hop);
  kernels::framed_apply_omp(basis.data(), x.data(), y2.data(), nframes, rows,
                            frame, hop);
  CHECK(y1 == y2);

  auto gy = random_vec(nframes * rows, 5);
  std::vector<double> gx1(n, 0.0), gx2(n, 0.0);
  kernels::framed_apply_t_serial(basis.data(), gy.data(), gx1.data(), n,
                                 nframes, rows, frame, hop);
  kernels::framed_apply_t_omp(basis.data(), gy.data(), gx2.data(), n, nframes,
                              rows, frame, hop);
  CHECK(gx1 == gx2);
  set_threads(0);
}

TEST_CASE("framed transpose agrees with dense adjoint") {
  // Independent oracle: materialize the framed map as a dense matrix and
  // compare <y, A x> with <A^T y, x>.
  const std::size_t n = 96, frame = 16, hop = 8, rows = 9;
  const std::size_t nframes = (n - frame) / hop + 1;
  auto basis = random_vec(rows * frame, 7);
  auto x = random_vec(n, 8);
  auto gy = random_vec(nframes * rows, 9);
  std::vector<double> y(nframes * rows), gx(n, 0.0);
  kernels::framed_apply_serial(basis.data(), x.data(), y.data(), nframes, rows,
                               frame, hop);
  kernels::framed_apply_t_serial(basis.data(), gy.data(), gx.data(), n,
                                 nframes, rows, frame, hop);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += gy[i] * y[i];
  for (std::size_t i = 0; i < n; ++i) rhs += gx[i] * x[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}
