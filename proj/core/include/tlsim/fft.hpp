#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <new>
#include <span>
#include <vector>

namespace tlsim {

using cplx = std::complex<double>;

namespace detail {
void* fft_alloc(std::size_t bytes);
void fft_free(void* p) noexcept;
}  // namespace detail

/// Allocator returning SIMD-aligned storage so every buffer shares one FFT plan.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    if (n > std::numeric_limits<std::size_t>::max() / sizeof(T)) throw std::bad_array_new_length();
    void* p = detail::fft_alloc(n * sizeof(T));
    if (p == nullptr) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { detail::fft_free(p); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using CVector = std::vector<cplx, AlignedAllocator<cplx>>;

/// In-place forward DFT, X[k] = sum_j x[j] exp(-2 pi i jk/n). n must be a power of two.
void fft_forward(std::span<cplx> data);
/// In-place inverse DFT including the 1/n normalisation.
void fft_inverse(std::span<cplx> data);

/// Spatial frequency (cycles per unit length) of DFT bin k for n samples of spacing dx.
inline double dft_frequency(std::size_t k, std::size_t n, double dx) {
  const auto sk = static_cast<double>(k);
  const auto sn = static_cast<double>(n);
  return (k < (n + 1) / 2 ? sk : sk - sn) / (sn * dx);
}

}  // namespace tlsim
