#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace audiotrap {

/// In-place iterative radix-2 FFT. Size must be a power of two.
/// Forward transform is unscaled; the inverse applies the 1/N factor.
inline void fft_inplace(std::vector<std::complex<double>>& data, bool inverse = false) {
    const std::size_t n = data.size();
    if (n == 0) return;
    if ((n & (n - 1)) != 0) {
        throw std::invalid_argument("fft size must be a power of two, got " + std::to_string(n));
    }

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    const double pi = 3.14159265358979323846;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = data[i + k];
                const std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& c : data) c *= inv_n;
    }
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Forward FFT of a real signal zero-padded to fft_size; returns the
/// fft_size/2 + 1 non-redundant bins.
inline std::vector<std::complex<double>> real_fft(const std::vector<double>& x,
                                                  std::size_t fft_size) {
    std::vector<std::complex<double>> buf(fft_size);
    const std::size_t m = x.size() < fft_size ? x.size() : fft_size;
    for (std::size_t i = 0; i < m; ++i) buf[i] = std::complex<double>(x[i], 0.0);
    fft_inplace(buf);
    buf.resize(fft_size / 2 + 1);
    return buf;
}

}  // namespace audiotrap
