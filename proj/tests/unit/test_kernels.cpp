#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "modeflux/kernels.hpp"

using namespace modeflux;

namespace {
std::vector<double> random_vec(size_t n, uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(eng);
  return v;
}
}  // namespace

TEST_CASE("all kernel variants agree") {
  auto tables = kernels::all_available();
  REQUIRE(!tables.empty());
  const auto& ref = kernels::scalar();
  for (int n : {1, 3, 5, 8, 17, 40, 41}) {
    auto a = random_vec(size_t(n) * n, 11 + n);
    auto b = random_vec(size_t(n) * n, 23 + n);
    auto x = random_vec(n, 37 + n);
    std::vector<double> y0(n), y1(n), c0(size_t(n) * n), c1(size_t(n) * n);
    ref.dgemv(n, a.data(), x.data(), y0.data());
    ref.dgemm(n, a.data(), b.data(), c0.data());
    double e0 = ref.error_norm(n, x.data(), a.data(), b.data(), 1e-12, 1e-8);
    for (const auto* t : tables) {
      INFO("kernel table ", t->name, " n=", n);
      t->dgemv(n, a.data(), x.data(), y1.data());
      for (int i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y0[i]) <= 1e-13 * n);
      t->dgemm(n, a.data(), b.data(), c1.data());
      for (int i = 0; i < n * n; ++i) CHECK(std::abs(c1[i] - c0[i]) <= 1e-13 * n);
      double e1 = t->error_norm(n, x.data(), a.data(), b.data(), 1e-12, 1e-8);
      CHECK(e1 == doctest::Approx(e0).epsilon(1e-12));
    }
  }
}

TEST_CASE("dgemm matches a naive triple loop") {
  const int n = 7;
  auto a = random_vec(n * n, 5);
  auto b = random_vec(n * n, 6);
  std::vector<double> c(n * n), ref(n * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) ref[i * n + j] += a[i * n + k] * b[k * n + j];
  kernels::active().dgemm(n, a.data(), b.data(), c.data());
  for (int i = 0; i < n * n; ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-13));
}
