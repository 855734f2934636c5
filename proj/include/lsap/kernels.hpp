#pragma once

#include <cstddef>

namespace lsap::kernels {

// Dense kernels behind the autodiff ops. Every kernel has a serial reference
// and an OpenMP variant that assigns each output element to exactly one
// thread with a fixed-order inner loop, so both produce bitwise-identical
// results (the unit tests assert this). The unsuffixed entry points dispatch
// on the configured thread count and on whether we are already inside a
// parallel region.

// y = A x, A is rows x cols row-major.
void matvec_serial(const double* a, const double* x, double* y,
                   std::size_t rows, std::size_t cols);
void matvec_omp(const double* a, const double* x, double* y,
                std::size_t rows, std::size_t cols);
void matvec(const double* a, const double* x, double* y,
            std::size_t rows, std::size_t cols);

// gx = A^T gy.
void matvec_t_serial(const double* a, const double* gy, double* gx,
                     std::size_t rows, std::size_t cols);
void matvec_t_omp(const double* a, const double* gy, double* gx,
                  std::size_t rows, std::size_t cols);
void matvec_t(const double* a, const double* gy, double* gx,
              std::size_t rows, std::size_t cols);

// C = A B, A rows x inner, B inner x cols, all row-major.
void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t rows, std::size_t inner, std::size_t cols);
void matmul_omp(const double* a, const double* b, double* c,
                std::size_t rows, std::size_t inner, std::size_t cols);
void matmul(const double* a, const double* b, double* c,
            std::size_t rows, std::size_t inner, std::size_t cols);

// Framed linear map: y[f, r] = sum_l B[r, l] * x[f*hop + l] for nframes
// frames. B is rows x frame_len row-major.
void framed_apply_serial(const double* basis, const double* x, double* y,
                         std::size_t nframes, std::size_t rows,
                         std::size_t frame_len, std::size_t hop);
void framed_apply_omp(const double* basis, const double* x, double* y,
                      std::size_t nframes, std::size_t rows,
                      std::size_t frame_len, std::size_t hop);
void framed_apply(const double* basis, const double* x, double* y,
                  std::size_t nframes, std::size_t rows,
                  std::size_t frame_len, std::size_t hop);

// Transpose of framed_apply: gx[f*hop + l] += sum_r B[r, l] * gy[f, r].
// Frames overlap when hop < frame_len, so frames are processed in residue
// classes mod ceil(frame_len/hop); within a class the touched sample ranges
// are disjoint. Serial and OpenMP variants share that order, which fixes the
// floating-point accumulation order. gx must be zeroed (length n) on entry.
void framed_apply_t_serial(const double* basis, const double* gy, double* gx,
                           std::size_t n, std::size_t nframes, std::size_t rows,
                           std::size_t frame_len, std::size_t hop);
void framed_apply_t_omp(const double* basis, const double* gy, double* gx,
                        std::size_t n, std::size_t nframes, std::size_t rows,
                        std::size_t frame_len, std::size_t hop);
void framed_apply_t(const double* basis, const double* gy, double* gx,
                    std::size_t n, std::size_t nframes, std::size_t rows,
                    std::size_t frame_len, std::size_t hop);

}  // namespace lsap::kernels
