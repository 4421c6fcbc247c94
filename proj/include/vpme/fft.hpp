#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace vpme::fft {

using cplx = std::complex<double>;

// Process-wide cache of FFTW plans keyed by (dims, sign). Plans are built
// with FFTW_ESTIMATE | FFTW_UNALIGNED so the new-array execute interface can
// run them on arbitrary buffers. Plan creation is serialized (FFTW planning
// is not thread safe); execution on distinct buffers is safe concurrently.
class PlanCache {
 public:
  static fftw_plan get(const std::vector<int>& dims, int sign) {
    static PlanCache inst;
    std::scoped_lock lk(inst.mu_);
    const auto key = std::make_pair(dims, sign);
    if (auto it = inst.cache_.find(key); it != inst.cache_.end())
      return it->second;
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    std::vector<cplx> in(n), out(n);
    fftw_plan p = fftw_plan_dft(
        static_cast<int>(dims.size()), dims.data(),
        reinterpret_cast<fftw_complex*>(in.data()),
        reinterpret_cast<fftw_complex*>(out.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    inst.cache_.emplace(key, p);
    return p;
  }

 private:
  PlanCache() = default;
  std::mutex mu_;
  std::map<std::pair<std::vector<int>, int>, fftw_plan> cache_;
};

// Out-of-place c2c transform; `in` is not modified.
inline void transform(const std::vector<int>& dims, const cplx* in, cplx* out,
                      int sign) {
  fftw_plan p = PlanCache::get(dims, sign);
  fftw_execute_dft(p,
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

// Forward transform of real nodal values, normalized so that
//   f_j = sum_k c_k exp(+2*pi*i k.j / n).
// Coefficients use the standard layout: frequency k at index k mod n.
inline std::vector<cplx> forward(const std::vector<int>& dims,
                                 const std::vector<double>& values) {
  std::vector<cplx> in(values.begin(), values.end());
  std::vector<cplx> out(values.size());
  transform(dims, in.data(), out.data(), FFTW_FORWARD);
  const double scale = 1.0 / static_cast<double>(values.size());
  for (auto& c : out) c *= scale;
  return out;
}

// Inverse of forward(); returns the real part of the synthesized signal.
inline std::vector<double> backward_real(const std::vector<int>& dims,
                                         const std::vector<cplx>& coeffs) {
  std::vector<cplx> out(coeffs.size());
  transform(dims, coeffs.data(), out.data(), FFTW_BACKWARD);
  std::vector<double> values(coeffs.size());
  for (std::size_t i = 0; i < out.size(); ++i) values[i] = out[i].real();
  return values;
}

}  // namespace vpme::fft
