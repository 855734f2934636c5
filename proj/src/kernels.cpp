#include "lsap/kernels.hpp"

#include <omp.h>

#include "lsap/parallel.hpp"

namespace lsap::kernels {

namespace {

bool use_parallel() {
  return lsap::detail::effective_threads() > 1 && !omp_in_parallel();
}

inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return ((s0 + s1) + (s2 + s3));
}

}  // namespace

void matvec_serial(const double* a, const double* x, double* y,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a + r * cols, x, cols);
}

void matvec_omp(const double* a, const double* x, double* y,
                std::size_t rows, std::size_t cols) {
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < static_cast<long long>(rows); ++r)
    y[r] = dot(a + static_cast<std::size_t>(r) * cols, x, cols);
}

void matvec(const double* a, const double* x, double* y,
            std::size_t rows, std::size_t cols) {
  if (use_parallel() && rows * cols >= 1u << 16)
    matvec_omp(a, x, y, rows, cols);
  else
    matvec_serial(a, x, y, rows, cols);
}

void matvec_t_serial(const double* a, const double* gy, double* gx,
                     std::size_t rows, std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) gx[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = gy[r];
    const double* row = a + r * cols;
    for (std::size_t c = 0; c < cols; ++c) gx[c] += g * row[c];
  }
}

void matvec_t_omp(const double* a, const double* gy, double* gx,
                  std::size_t rows, std::size_t cols) {
  // One thread per output column; row loop order matches the serial kernel.
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < static_cast<long long>(cols); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += gy[r] * a[r * cols + c];
    gx[c] = s;
  }
}

void matvec_t(const double* a, const double* gy, double* gx,
              std::size_t rows, std::size_t cols) {
  if (use_parallel() && rows * cols >= 1u << 16) {
    // The omp kernel sums each column independently in row order, exactly the
    // order a per-column serial sum would use; matvec_t_serial instead
    // accumulates row-major for cache reasons, which is the same order per
    // column. Both are bitwise identical.
    matvec_t_omp(a, gy, gx, rows, cols);
  } else {
    matvec_t_serial(a, gy, gx, rows, cols);
  }
}

void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t rows, std::size_t inner, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* out = c + r * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
    const double* arow = a + r * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double av = arow[k];
      const double* brow = b + k * cols;
      for (std::size_t j = 0; j < cols; ++j) out[j] += av * brow[j];
    }
  }
}

void matmul_omp(const double* a, const double* b, double* c,
                std::size_t rows, std::size_t inner, std::size_t cols) {
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < static_cast<long long>(rows); ++r) {
    double* out = c + static_cast<std::size_t>(r) * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
    const double* arow = a + static_cast<std::size_t>(r) * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double av = arow[k];
      const double* brow = b + k * cols;
      for (std::size_t j = 0; j < cols; ++j) out[j] += av * brow[j];
    }
  }
}

void matmul(const double* a, const double* b, double* c,
            std::size_t rows, std::size_t inner, std::size_t cols) {
  if (use_parallel() && rows * inner * cols >= 1u << 18)
    matmul_omp(a, b, c, rows, inner, cols);
  else
    matmul_serial(a, b, c, rows, inner, cols);
}

void framed_apply_serial(const double* basis, const double* x, double* y,
                         std::size_t nframes, std::size_t rows,
                         std::size_t frame_len, std::size_t hop) {
  for (std::size_t f = 0; f < nframes; ++f) {
    const double* xf = x + f * hop;
    double* yf = y + f * rows;
    for (std::size_t r = 0; r < rows; ++r)
      yf[r] = dot(basis + r * frame_len, xf, frame_len);
  }
}

void framed_apply_omp(const double* basis, const double* x, double* y,
                      std::size_t nframes, std::size_t rows,
                      std::size_t frame_len, std::size_t hop) {
#pragma omp parallel for schedule(static)
  for (long long f = 0; f < static_cast<long long>(nframes); ++f) {
    const double* xf = x + static_cast<std::size_t>(f) * hop;
    double* yf = y + static_cast<std::size_t>(f) * rows;
    for (std::size_t r = 0; r < rows; ++r)
      yf[r] = dot(basis + r * frame_len, xf, frame_len);
  }
}

void framed_apply(const double* basis, const double* x, double* y,
                  std::size_t nframes, std::size_t rows,
                  std::size_t frame_len, std::size_t hop) {
  if (use_parallel() && nframes * rows * frame_len >= 1u << 18)
    framed_apply_omp(basis, x, y, nframes, rows, frame_len, hop);
  else
    framed_apply_serial(basis, x, y, nframes, rows, frame_len, hop);
}

namespace {

inline void frame_accumulate(const double* basis, const double* gyf,
                             double* gxf, std::size_t rows,
                             std::size_t frame_len) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = gyf[r];
    const double* brow = basis + r * frame_len;
    for (std::size_t l = 0; l < frame_len; ++l) gxf[l] += g * brow[l];
  }
}

}  // namespace

void framed_apply_t_serial(const double* basis, const double* gy, double* gx,
                           std::size_t n, std::size_t nframes,
                           std::size_t rows, std::size_t frame_len,
                           std::size_t hop) {
  (void)n;
  const std::size_t ncolors = (frame_len + hop - 1) / hop;
  for (std::size_t color = 0; color < ncolors; ++color)
    for (std::size_t f = color; f < nframes; f += ncolors)
      frame_accumulate(basis, gy + f * rows, gx + f * hop, rows, frame_len);
}

void framed_apply_t_omp(const double* basis, const double* gy, double* gx,
                        std::size_t n, std::size_t nframes, std::size_t rows,
                        std::size_t frame_len, std::size_t hop) {
  (void)n;
  const std::size_t ncolors = (frame_len + hop - 1) / hop;
  for (std::size_t color = 0; color < ncolors; ++color) {
#pragma omp parallel for schedule(static)
    for (long long f = static_cast<long long>(color);
         f < static_cast<long long>(nframes);
         f += static_cast<long long>(ncolors)) {
      frame_accumulate(basis, gy + static_cast<std::size_t>(f) * rows,
                       gx + static_cast<std::size_t>(f) * hop, rows, frame_len);
    }
  }
}

void framed_apply_t(const double* basis, const double* gy, double* gx,
                    std::size_t n, std::size_t nframes, std::size_t rows,
                    std::size_t frame_len, std::size_t hop) {
  if (use_parallel() && nframes * rows * frame_len >= 1u << 18)
    framed_apply_t_omp(basis, gy, gx, n, nframes, rows, frame_len, hop);
  else
    framed_apply_t_serial(basis, gy, gx, n, nframes, rows, frame_len, hop);
}

}  // namespace lsap::kernels
