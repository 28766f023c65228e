#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "sociolex/kernels.hpp"
#include "sociolex/rng.hpp"

using namespace sociolex;

namespace {

std::vector<float> random_vec(Rng& rng, std::size_t n) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.next_double() * 2.0 - 1.0);
  return v;
}

}  // namespace

TEST_CASE("scalar and avx2 kernels agree on random vectors") {
  if (!kern::avx2_supported()) return;  // nothing to compare on this CPU
  Rng rng(99);
  for (const std::size_t n : {1u, 3u, 7u, 8u, 15u, 31u, 32u, 100u, 300u, 1021u}) {
    const auto a = random_vec(rng, n);
    const auto b = random_vec(rng, n);

    const auto& s = kern::detail::scalar_ops();
    const auto& v = kern::detail::avx2_ops();

    const float ds = s.dot(a.data(), b.data(), n);
    const float dv = v.dot(a.data(), b.data(), n);
    CHECK(std::abs(ds - dv) <= 1e-4f * (1.0f + std::abs(ds)));

    const double das = s.dot_acc(a.data(), b.data(), n);
    const double dav = v.dot_acc(a.data(), b.data(), n);
    CHECK(std::abs(das - dav) <= 1e-12 * (1.0 + std::abs(das)));

    const double ss = s.sumsq_acc(a.data(), n);
    const double sv = v.sumsq_acc(a.data(), n);
    CHECK(std::abs(ss - sv) <= 1e-12 * (1.0 + ss));

    auto y1 = b, y2 = b;
    s.axpy(0.37f, a.data(), y1.data(), n);
    v.axpy(0.37f, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(y1[i] - y2[i]) <= 1e-6f * (1.0f + std::abs(y1[i])));
    }

    auto z1 = a, z2 = a;
    s.scal(1.618f, z1.data(), n);
    v.scal(1.618f, z2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(z1[i] == doctest::Approx(z2[i]));

    auto w1 = b, w2 = b;
    s.add(a.data(), w1.data(), n);
    v.add(a.data(), w2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(w1[i] == w2[i]);
  }
}

TEST_CASE("cosine basics") {
  Rng rng(7);
  const auto a = random_vec(rng, 128);
  CHECK(kern::cosine(a.data(), a.data(), a.size()) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<float> e1(8, 0.0f), e2(8, 0.0f);
  e1[0] = 2.0f;
  e2[1] = 5.0f;
  CHECK(kern::cosine(e1.data(), e2.data(), 8) == doctest::Approx(0.0));

  const auto b = random_vec(rng, 128);
  CHECK(kern::cosine(a.data(), b.data(), 128) ==
        doctest::Approx(kern::cosine(b.data(), a.data(), 128)).epsilon(1e-15));
}

TEST_CASE("backend forcing") {
  const auto original = kern::active_backend();
  CHECK(kern::set_backend(kern::Backend::scalar));
  CHECK(kern::active_backend() == kern::Backend::scalar);
  std::vector<float> a{1.0f, 2.0f, 3.0f}, b{4.0f, 5.0f, 6.0f};
  CHECK(kern::dot(a.data(), b.data(), 3) == doctest::Approx(32.0f));
  if (kern::avx2_supported()) {
    CHECK(kern::set_backend(kern::Backend::avx2));
    CHECK(kern::dot(a.data(), b.data(), 3) == doctest::Approx(32.0f));
  } else {
    CHECK_FALSE(kern::set_backend(kern::Backend::avx2));
  }
  kern::set_backend(original);
}
