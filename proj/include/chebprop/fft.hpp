#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "chebprop/common.hpp"

namespace chebprop::fft {

// FFTW's planner is not thread-safe; executing distinct plans is. Plans and
// their buffers are cached per thread, plan creation/destruction is serialized.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

namespace detail {

struct C2cEntry {
  fftw_plan plan = nullptr;
  fftw_complex* buf = nullptr;
  ~C2cEntry() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plan) fftw_destroy_plan(plan);
    if (buf) fftw_free(buf);
  }
};

struct R2rEntry {
  fftw_plan plan = nullptr;
  double* in = nullptr;
  double* out = nullptr;
  ~R2rEntry() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plan) fftw_destroy_plan(plan);
    if (in) fftw_free(in);
    if (out) fftw_free(out);
  }
};

inline C2cEntry& c2c_plan(int n, int sign) {
  thread_local std::map<std::pair<int, int>, C2cEntry> cache;
  auto& e = cache[{n, sign}];
  if (!e.plan) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    e.buf = fftw_alloc_complex(n);
    e.plan = fftw_plan_dft_1d(n, e.buf, e.buf, sign, FFTW_ESTIMATE);
  }
  return e;
}

inline R2rEntry& r2r_plan(int n, fftw_r2r_kind kind) {
  thread_local std::map<std::pair<int, int>, R2rEntry> cache;
  auto& e = cache[{n, static_cast<int>(kind)}];
  if (!e.plan) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    e.in = fftw_alloc_real(n);
    e.out = fftw_alloc_real(n);
    e.plan = fftw_plan_r2r_1d(n, e.in, e.out, kind, FFTW_ESTIMATE);
  }
  return e;
}

}  // namespace detail

// In-place DFT, unnormalized: X_k = sum_j x_j exp(sign * 2*pi*i*j*k / n).
// sign = -1 is the forward transform.
inline void transform(std::vector<Complex>& data, int sign) {
  const int n = static_cast<int>(data.size());
  if (n == 0) throw DimensionError("fft: empty input");
  auto& e = detail::c2c_plan(n, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD);
  for (int i = 0; i < n; ++i) {
    e.buf[i][0] = data[i].real();
    e.buf[i][1] = data[i].imag();
  }
  fftw_execute(e.plan);
  for (int i = 0; i < n; ++i) data[i] = Complex(e.buf[i][0], e.buf[i][1]);
}

inline std::vector<Complex> forward(std::vector<Complex> data) {
  transform(data, -1);
  return data;
}

// Inverse DFT including the 1/n normalization.
inline std::vector<Complex> inverse(std::vector<Complex> data) {
  transform(data, +1);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data) v *= scale;
  return data;
}

// DCT-II (FFTW REDFT10): out_k = 2 * sum_j in_j cos(pi*(j+1/2)*k/n).
inline std::vector<double> dct2(const std::vector<double>& in) {
  const int n = static_cast<int>(in.size());
  if (n == 0) throw DimensionError("dct2: empty input");
  auto& e = detail::r2r_plan(n, FFTW_REDFT10);
  for (int i = 0; i < n; ++i) e.in[i] = in[i];
  fftw_execute(e.plan);
  return std::vector<double>(e.out, e.out + n);
}

// DCT-I (FFTW REDFT00): out_k = in_0 + (-1)^k in_{n-1}
//                              + 2 * sum_{j=1}^{n-2} in_j cos(pi*j*k/(n-1)).
inline std::vector<double> dct1(const std::vector<double>& in) {
  const int n = static_cast<int>(in.size());
  if (n < 2) throw DimensionError("dct1: need at least 2 samples");
  auto& e = detail::r2r_plan(n, FFTW_REDFT00);
  for (int i = 0; i < n; ++i) e.in[i] = in[i];
  fftw_execute(e.plan);
  return std::vector<double>(e.out, e.out + n);
}

}  // namespace chebprop::fft
