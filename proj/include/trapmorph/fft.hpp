#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "trapmorph/errors.hpp"

namespace trapmorph {

inline bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

/// Iterative radix-2 complex FFT for power-of-two sizes.
/// Twiddles and the bit-reversal permutation are precomputed once so the plan
/// can be reused across many propagation steps.
class FftPlan {
  public:
    explicit FftPlan(std::size_t n) : n_(n) {
        if (!is_power_of_two(n)) throw NumericError("FFT size must be a power of two, got " + std::to_string(n));
        bitrev_.resize(n);
        std::size_t log2n = 0;
        while ((std::size_t{1} << log2n) < n) ++log2n;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < log2n; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
            bitrev_[i] = r;
        }
        // one twiddle table per butterfly stage
        twiddle_.resize(log2n);
        for (std::size_t s = 0; s < log2n; ++s) {
            const std::size_t m = std::size_t{1} << (s + 1);
            twiddle_[s].resize(m / 2);
            for (std::size_t j = 0; j < m / 2; ++j) {
                const double ang = -2.0 * M_PI * static_cast<double>(j) / static_cast<double>(m);
                twiddle_[s][j] = {std::cos(ang), std::sin(ang)};
            }
        }
    }

    std::size_t size() const { return n_; }

    /// In-place forward DFT: X_k = sum_j x_j exp(-2*pi*i*j*k/n).
    void forward(std::vector<std::complex<double>>& a) const { transform(a, false); }

    /// In-place inverse DFT (normalized by 1/n).
    void inverse(std::vector<std::complex<double>>& a) const {
        transform(a, true);
        const double inv = 1.0 / static_cast<double>(n_);
        for (auto& v : a) v *= inv;
    }

  private:
    void transform(std::vector<std::complex<double>>& a, bool conj) const {
        if (a.size() != n_) throw NumericError("FFT input size mismatch");
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j = bitrev_[i];
            if (i < j) std::swap(a[i], a[j]);
        }
        for (std::size_t s = 0; s < twiddle_.size(); ++s) {
            const std::size_t m = std::size_t{1} << (s + 1);
            const auto& w = twiddle_[s];
            for (std::size_t k = 0; k < n_; k += m) {
                for (std::size_t j = 0; j < m / 2; ++j) {
                    const std::complex<double> wj = conj ? std::conj(w[j]) : w[j];
                    const std::complex<double> t = wj * a[k + j + m / 2];
                    const std::complex<double> u = a[k + j];
                    a[k + j] = u + t;
                    a[k + j + m / 2] = u - t;
                }
            }
        }
    }

    std::size_t n_;
    std::vector<std::size_t> bitrev_;
    std::vector<std::vector<std::complex<double>>> twiddle_;
};

}  // namespace trapmorph
