// tests/rng_test.cc

// Copyright 2026  selfecho authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "doctest.h"
#include "selfecho/rng.h"

using namespace selfecho;

TEST_SUITE("rng") {

TEST_CASE("uniform and normal moments") {
  Rng rng(2024);
  const int n = 1000000;
  double su = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.Uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
  }
  CHECK(std::abs(su / n - 0.5) < 0.01);

  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.Normal();
    s += z;
    s2 += z * z;
  }
  const double mean = s / n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(s2 / n - mean * mean - 1.0) < 0.02);
}

TEST_CASE("same seed, same stream") {
  Rng a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.Normal();
    CHECK(x == b.Normal());
    differs |= (x != c.Normal());
  }
  CHECK(differs);
}

TEST_CASE("state round trip resumes the stream") {
  Rng a(11);
  for (int i = 0; i < 5; ++i) a.Normal();  // leaves a cached normal
  const std::string st = a.SaveState();
  Rng b(0);
  b.LoadState(st);
  for (int i = 0; i < 20; ++i) CHECK(a.Normal() == b.Normal());
  CHECK(a.NextU64() == b.NextU64());
}

TEST_CASE("below stays in range and covers it") {
  Rng rng(3);
  int hist[7] = {};
  for (int i = 0; i < 7000; ++i) {
    const uint64_t k = rng.Below(7);
    REQUIRE(k < 7);
    hist[k]++;
  }
  for (int h : hist) CHECK(h > 800);
}

TEST_CASE("seed mixing") {
  CHECK(MixSeed(1, 2) == MixSeed(1, 2));
  CHECK(MixSeed(1, 2) != MixSeed(2, 1));
  CHECK(HashString("abc") == HashString("abc"));
  CHECK(HashString("abc") != HashString("abd"));
}

}
