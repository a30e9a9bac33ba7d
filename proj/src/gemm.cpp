#include "gemm.hpp"

#include <algorithm>
#include <cstring>

namespace rigscan::gemm {
namespace {

// Eight doubles; lowered to narrower registers on targets without AVX-512.
typedef double v8d __attribute__((vector_size(64)));

inline v8d load(const double* p) {
  v8d v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store(double* p, v8d v) { std::memcpy(p, &v, sizeof v); }

inline v8d splat(double x) { return v8d{x, x, x, x, x, x, x, x}; }

inline double hsum(v8d v) { return ((v[0] + v[1]) + (v[2] + v[3])) + ((v[4] + v[5]) + (v[6] + v[7])); }

constexpr std::size_t MR = 4;   // rows of C per micro-tile
constexpr std::size_t NR = 16;  // columns of C per micro-tile (two vectors)

// Full 4 x 16 tile of rows().
void tile_rows_4x16(std::size_t depth, const double* a, std::size_t lda, const double* const* b, std::size_t j0,
                    double* c, std::size_t ldc) {
  v8d c00 = load(c), c01 = load(c + 8);
  v8d c10 = load(c + ldc), c11 = load(c + ldc + 8);
  v8d c20 = load(c + 2 * ldc), c21 = load(c + 2 * ldc + 8);
  v8d c30 = load(c + 3 * ldc), c31 = load(c + 3 * ldc + 8);
  for (std::size_t k = 0; k < depth; ++k) {
    const double* bk = b[k] + j0;
    const v8d b0 = load(bk), b1 = load(bk + 8);
    const v8d a0 = splat(a[k]), a1 = splat(a[lda + k]), a2 = splat(a[2 * lda + k]), a3 = splat(a[3 * lda + k]);
    c00 += a0 * b0; c01 += a0 * b1;
    c10 += a1 * b0; c11 += a1 * b1;
    c20 += a2 * b0; c21 += a2 * b1;
    c30 += a3 * b0; c31 += a3 * b1;
  }
  store(c, c00); store(c + 8, c01);
  store(c + ldc, c10); store(c + ldc + 8, c11);
  store(c + 2 * ldc, c20); store(c + 2 * ldc + 8, c21);
  store(c + 3 * ldc, c30); store(c + 3 * ldc + 8, c31);
}

// One row of C over [j0, j0 + width) with width <= NR.
void tile_rows_1xn(std::size_t depth, const double* a, const double* const* b, std::size_t j0, std::size_t width,
                   double* c) {
  double acc[NR];
  std::copy(c, c + width, acc);
  for (std::size_t k = 0; k < depth; ++k) {
    const double* bk = b[k] + j0;
    const double ak = a[k];
    for (std::size_t j = 0; j < width; ++j) acc[j] += ak * bk[j];
  }
  std::copy(acc, acc + width, c);
}

// 4 x 4 block of dots().
void tile_dots_4x4(std::size_t length, const double* const* a, const double* const* b, double* c, std::size_t ldc) {
  v8d acc[4][4];
  for (auto& row : acc)
    for (auto& v : row) v = splat(0.0);
  const double* a0 = a[0]; const double* a1 = a[1]; const double* a2 = a[2]; const double* a3 = a[3];
  const double* b0 = b[0]; const double* b1 = b[1]; const double* b2 = b[2]; const double* b3 = b[3];
  std::size_t t = 0;
  for (; t + 8 <= length; t += 8) {
    const v8d x0 = load(a0 + t), x1 = load(a1 + t), x2 = load(a2 + t), x3 = load(a3 + t);
    const v8d y0 = load(b0 + t), y1 = load(b1 + t), y2 = load(b2 + t), y3 = load(b3 + t);
    acc[0][0] += x0 * y0; acc[0][1] += x0 * y1; acc[0][2] += x0 * y2; acc[0][3] += x0 * y3;
    acc[1][0] += x1 * y0; acc[1][1] += x1 * y1; acc[1][2] += x1 * y2; acc[1][3] += x1 * y3;
    acc[2][0] += x2 * y0; acc[2][1] += x2 * y1; acc[2][2] += x2 * y2; acc[2][3] += x2 * y3;
    acc[3][0] += x3 * y0; acc[3][1] += x3 * y1; acc[3][2] += x3 * y2; acc[3][3] += x3 * y3;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      double s = hsum(acc[i][j]);
      for (std::size_t u = t; u < length; ++u) s += a[i][u] * b[j][u];
      c[i * ldc + j] += s;
    }
  }
}

double dot_one(std::size_t length, const double* x, const double* y) {
  v8d acc = splat(0.0);
  std::size_t t = 0;
  for (; t + 8 <= length; t += 8) acc += load(x + t) * load(y + t);
  double s = hsum(acc);
  for (; t < length; ++t) s += x[t] * y[t];
  return s;
}

}  // namespace

void rows(std::size_t m, std::size_t n, std::size_t depth, const double* a, std::size_t lda, const double* const* b,
          double* c, std::size_t ldc) {
  std::size_t i = 0;
  for (; i + MR <= m; i += MR) {
    std::size_t j = 0;
    for (; j + NR <= n; j += NR) tile_rows_4x16(depth, a + i * lda, lda, b, j, c + i * ldc + j, ldc);
    if (j < n)
      for (std::size_t r = 0; r < MR; ++r)
        tile_rows_1xn(depth, a + (i + r) * lda, b, j, n - j, c + (i + r) * ldc + j);
  }
  for (; i < m; ++i)
    for (std::size_t j = 0; j < n; j += NR)
      tile_rows_1xn(depth, a + i * lda, b, j, std::min(NR, n - j), c + i * ldc + j);
}

void dots(std::size_t m, std::size_t n, std::size_t length, const double* const* a, const double* const* b,
          double* c, std::size_t ldc) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) tile_dots_4x4(length, a + i, b + j, c + i * ldc + j, ldc);
    for (; j < n; ++j)
      for (std::size_t r = 0; r < 4; ++r) c[(i + r) * ldc + j] += dot_one(length, a[i + r], b[j]);
  }
  for (; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] += dot_one(length, a[i], b[j]);
}

}  // namespace rigscan::gemm
