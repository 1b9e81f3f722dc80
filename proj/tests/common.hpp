#pragma once

#include <cstdlib>
#include <map>
#include <memory>
#include <random>

#include <doctest.h>

#include "kinspec/cache.hpp"
#include "kinspec/mode.hpp"

namespace testing {

using namespace kinspec;

struct Fixture {
  CollisionMatrices c;
  MacroMoments m;
  std::unique_ptr<ModeContext> ctx;
};

/// Collision data at N nodes per axis, shared across test cases and cached on disk when KINSPEC_CACHE is set.
inline const Fixture& fixture(int n = 8) {
  static std::map<int, std::unique_ptr<Fixture>> store;
  auto it = store.find(n);
  if (it != store.end()) return *it->second;
  set_blas_single_thread();
  const char* dir = std::getenv("KINSPEC_CACHE");
  auto f = std::make_unique<Fixture>();
  auto [c, m] = cached_collision(dir ? dir : "", n);
  f->c = std::move(c);
  f->m = m;
  f->ctx = std::make_unique<ModeContext>(make_mode_context(f->c));
  return *(store[n] = std::move(f));
}

inline Vec random_real(int n, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d;
  Vec v(n);
  for (int k = 0; k < n; ++k) v(k) = d(g);
  return v;
}

inline CVec random_complex(int n, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d;
  CVec v(n);
  for (int k = 0; k < n; ++k) {
    const double re = d(g);
    const double im = d(g);
    v(k) = cplx(re, im);
  }
  return v;
}

}  // namespace testing
