#include "collocation.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>

#include "torusrg/error.hpp"

namespace torusrg::detail {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanPair {
  fftw_plan forward;
  fftw_plan backward;
};

// Plans are created once per size with FFTW_ESTIMATE so results do not depend
// on timing measurements.
const PlanPair& plans_for(int m) {
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;
  GridBuffer scratch(static_cast<std::size_t>(m) * m);
  auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
  PlanPair pair{fftw_plan_dft_2d(m, m, p, p, FFTW_FORWARD, FFTW_ESTIMATE),
                fftw_plan_dft_2d(m, m, p, p, FFTW_BACKWARD, FFTW_ESTIMATE)};
  if (!pair.forward || !pair.backward) fail(ErrorCode::Internal, "FFTW planning failed");
  return cache.emplace(m, pair).first->second;
}

}  // namespace

GridBuffer::GridBuffer(std::size_t n) : n_(n) {
  data_ = reinterpret_cast<Complex*>(fftw_malloc(sizeof(Complex) * n));
  if (!data_) throw std::bad_alloc();
  zero();
}

GridBuffer::GridBuffer(const GridBuffer& other) : GridBuffer(other.n_) {
  if (n_) std::memcpy(data_, other.data_, sizeof(Complex) * n_);
}

GridBuffer::~GridBuffer() {
  if (data_) fftw_free(data_);
}

void GridBuffer::zero() {
  if (n_) std::memset(static_cast<void*>(data_), 0, sizeof(Complex) * n_);
}

int smooth_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

Collocation::Collocation(int size, double shift, bool real)
    : m_(size), shift_(shift), real_(real) {
  if (size < 3) fail(ErrorCode::InvalidArgument, "collocation grid needs at least 3 points");
  if (shift < 0) fail(ErrorCode::InvalidArgument, "grid shift must be >= 0");
  const PlanPair& p = plans_for(size);
  forward_ = p.forward;
  backward_ = p.backward;
}

std::array<int, 2> Collocation::signs(int q) const {
  static constexpr std::array<std::array<int, 2>, 4> table{{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
  return table[static_cast<std::size_t>(q)];
}

double Collocation::weight(int q, const Mode& k) const {
  auto s = signs(q);
  return std::exp(shift_ * (s[0] * k.k1 + s[1] * k.k2));
}

std::size_t Collocation::index(const Mode& k) const {
  int i = ((k.k1 % m_) + m_) % m_;
  int j = ((k.k2 % m_) + m_) % m_;
  return static_cast<std::size_t>(i) * m_ + j;
}

void Collocation::synthesize(const std::vector<Mode>& modes, const std::vector<Complex>& coeffs,
                             int a, int b, int q, GridBuffer& out) const {
  out.zero();
  const Complex i2pi(0.0, kTwoPi);
  for (std::size_t n = 0; n < modes.size(); ++n) {
    const Mode& k = modes[n];
    if (2 * std::abs(k.k1) >= m_ || 2 * std::abs(k.k2) >= m_) {
      fail(ErrorCode::InvalidArgument, "mode outside the collocation grid");
    }
    Complex c = coeffs[n] * weight(q, k);
    if (a) c *= std::pow(i2pi * double(k.k1), a);
    if (b) c *= std::pow(i2pi * double(k.k2), b);
    out[index(k)] += c;
  }
  auto* p = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(backward_, p, p);
}

void Collocation::analyze(GridBuffer& values) const {
  auto* p = reinterpret_cast<fftw_complex*>(values.data());
  fftw_execute_dft(forward_, p, p);
}

bool Collocation::read_directly(const Mode& k) const {
  if (!real_) return true;
  return k.k1 > 0 || (k.k1 == 0 && k.k2 >= 0);
}

int Collocation::owner(const Mode& k) const {
  if (real_ && !read_directly(k)) return owner(-k);
  int s1 = k.k1 >= 0 ? 0 : 1;
  int s2 = k.k2 >= 0 ? 0 : 1;
  return 2 * s1 + s2;
}

Complex Collocation::coefficient(const std::vector<GridBuffer>& spectra, const Mode& k) const {
  if (!read_directly(k)) return std::conj(coefficient(spectra, -k));
  int q = owner(k);
  Complex c = spectra[static_cast<std::size_t>(q)][index(k)] /
              (static_cast<double>(points()) * weight(q, k));
  if (real_ && k.k1 == 0 && k.k2 == 0) c = c.real();
  return c;
}

ModeList ModeList::from(const FourierVectorField& x) {
  ModeList out;
  for (const auto& [k, f] : x.modes()) {
    out.modes.push_back(k);
    out.coeffs[0].push_back(f[0]);
    out.coeffs[1].push_back(f[1]);
  }
  return out;
}

}  // namespace torusrg::detail
