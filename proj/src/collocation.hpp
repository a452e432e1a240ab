#pragma once

// Collocation grids shifted into the complex domain. Quadrant q samples
// theta + i*eta_q with eta_q = -(shift / 2 pi) (s1, s2), so a mode k whose
// signs match (s1, s2) is seen with weight e^{shift |k|_1}; reading each mode
// from its own quadrant keeps round-off relative to the weighted norm.

#include <fftw3.h>

#include <array>
#include <complex>
#include <vector>

#include "torusrg/fourier_field.hpp"

namespace torusrg::detail {

class GridBuffer {
 public:
  GridBuffer() = default;
  explicit GridBuffer(std::size_t n);
  GridBuffer(const GridBuffer& other);
  GridBuffer(GridBuffer&& other) noexcept : data_(other.data_), n_(other.n_) {
    other.data_ = nullptr;
    other.n_ = 0;
  }
  GridBuffer& operator=(GridBuffer other) noexcept {
    std::swap(data_, other.data_);
    std::swap(n_, other.n_);
    return *this;
  }
  ~GridBuffer();

  Complex* data() { return data_; }
  const Complex* data() const { return data_; }
  std::size_t size() const { return n_; }
  Complex& operator[](std::size_t i) { return data_[i]; }
  const Complex& operator[](std::size_t i) const { return data_[i]; }
  void zero();

 private:
  Complex* data_ = nullptr;
  std::size_t n_ = 0;
};

// Smallest 2,3,5-smooth integer >= n.
int smooth_size(int n);

class Collocation {
 public:
  Collocation(int size, double shift, bool real);

  int size() const { return m_; }
  std::size_t points() const { return static_cast<std::size_t>(m_) * m_; }
  int quadrants() const { return real_ ? 2 : 4; }
  bool real() const { return real_; }
  double shift() const { return shift_; }
  std::array<int, 2> signs(int q) const;
  double weight(int q, const Mode& k) const;
  std::size_t index(const Mode& k) const;

  // Values of sum_k c_k (2 pi i k1)^a (2 pi i k2)^b e^{2 pi i k.z} on quadrant q.
  void synthesize(const std::vector<Mode>& modes, const std::vector<Complex>& coeffs, int a, int b,
                  int q, GridBuffer& out) const;
  // In place: grid values -> M^2 * c_k * weight(q, k) at index(k).
  void analyze(GridBuffer& values) const;

  // Quadrant from which mode k is read; in real mode modes with k1 < 0 (and
  // (0, k2 < 0)) are not read but recovered by conjugation.
  int owner(const Mode& k) const;
  bool read_directly(const Mode& k) const;

  // c_k from analysed spectra (one per quadrant).
  Complex coefficient(const std::vector<GridBuffer>& spectra, const Mode& k) const;

 private:
  int m_;
  double shift_;
  bool real_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

// Dense view of one component of a field.
struct ModeList {
  std::vector<Mode> modes;
  std::array<std::vector<Complex>, 2> coeffs;

  static ModeList from(const FourierVectorField& x);
};

}  // namespace torusrg::detail
