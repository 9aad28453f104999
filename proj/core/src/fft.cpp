#include "tlsim/fft.hpp"

#include <fftw3.h>

#include <bit>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace tlsim {

namespace detail {
void* fft_alloc(std::size_t bytes) { return fftw_malloc(bytes); }
void fft_free(void* p) noexcept { fftw_free(p); }
}  // namespace detail

namespace {

// FFTW planning is not thread-safe, execution is. Plans are made once per
// (size, direction) with FFTW_ESTIMATE so the chosen algorithm, and hence
// every rounding, is the same on every run.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    CVector scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign, FFTW_ESTIMATE);
    if (plan == nullptr) throw std::runtime_error("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void execute(std::span<cplx> data, int sign) {
  const std::size_t n = data.size();
  if (n == 0 || !std::has_single_bit(n)) throw std::invalid_argument("FFT length must be a power of two");
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan = cache().get(n, sign);
  if (fftw_alignment_of(reinterpret_cast<double*>(buf)) != 0) {
    // Plan was made for aligned storage; fall back to an aligned copy.
    CVector tmp(data.begin(), data.end());
    auto* tbuf = reinterpret_cast<fftw_complex*>(tmp.data());
    fftw_execute_dft(plan, tbuf, tbuf);
    std::copy(tmp.begin(), tmp.end(), data.begin());
    return;
  }
  fftw_execute_dft(plan, buf, buf);
}

}  // namespace

void fft_forward(std::span<cplx> data) { execute(data, FFTW_FORWARD); }

void fft_inverse(std::span<cplx> data) {
  execute(data, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data) v *= scale;
}

}  // namespace tlsim
