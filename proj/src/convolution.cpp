#include <algorithm>

#include <fftw3.h>

#include "brw/oracle.hpp"

namespace brw {

std::vector<double> convolve_direct(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

std::vector<double> convolve_fft(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t n_out = a.size() + b.size() - 1;
  std::size_t n = 1;
  while (n < n_out) n <<= 1;
  const std::size_t nc = n / 2 + 1;

  double* ra = fftw_alloc_real(n);
  double* rb = fftw_alloc_real(n);
  fftw_complex* ca = fftw_alloc_complex(nc);
  fftw_complex* cb = fftw_alloc_complex(nc);
  const int ni = static_cast<int>(n);
  fftw_plan pa = fftw_plan_dft_r2c_1d(ni, ra, ca, FFTW_ESTIMATE);
  fftw_plan pb = fftw_plan_dft_r2c_1d(ni, rb, cb, FFTW_ESTIMATE);
  fftw_plan inv = fftw_plan_dft_c2r_1d(ni, ca, ra, FFTW_ESTIMATE);

  std::fill(ra, ra + n, 0.0);
  std::fill(rb, rb + n, 0.0);
  std::copy(a.begin(), a.end(), ra);
  std::copy(b.begin(), b.end(), rb);
  fftw_execute(pa);
  fftw_execute(pb);
  for (std::size_t i = 0; i < nc; ++i) {
    const double re = ca[i][0] * cb[i][0] - ca[i][1] * cb[i][1];
    const double im = ca[i][0] * cb[i][1] + ca[i][1] * cb[i][0];
    ca[i][0] = re;
    ca[i][1] = im;
  }
  fftw_execute(inv);
  std::vector<double> out(ra, ra + n_out);
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= scale;

  fftw_destroy_plan(pa);
  fftw_destroy_plan(pb);
  fftw_destroy_plan(inv);
  fftw_free(ra);
  fftw_free(rb);
  fftw_free(ca);
  fftw_free(cb);
  return out;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  if (a.size() + b.size() > kFftThreshold && std::min(a.size(), b.size()) > 64) return convolve_fft(a, b);
  return convolve_direct(a, b);
}

}  // namespace brw
