// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

#include <string>

#include "deeppsl/checks.hpp"
#include "deeppsl/error.hpp"
#include "doctest.h"

using namespace deeppsl;

TEST_CASE("every check mode passes on several seeds") {
  for (const auto& mode : check_modes()) {
    if (mode == "all") continue;
    for (std::uint64_t seed : {1u, 2u}) {
      CAPTURE(mode);
      CAPTURE(seed);
      auto report = run_check(mode, {seed, false});
      INFO(report.to_text());
      CHECK(report.passed());
      CHECK_FALSE(report.results.empty());
    }
  }
}

TEST_CASE("corrupted gradients are caught") {
  CheckOptions opts;
  opts.corrupt_gradients = true;
  CHECK_FALSE(check_gradients(opts).passed());
  auto surrogate = check_surrogate(opts);
  const auto* first = surrogate.find("first_order");
  REQUIRE(first != nullptr);
  CHECK_FALSE(first->passed);
}

TEST_CASE("unknown mode is an input error") {
  CHECK_THROWS_AS(run_check("nonsense", {}), InputError);
}

TEST_CASE("report text has one line per result") {
  auto r = check_convexity({});
  auto text = r.to_text();
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == r.results.size());
  CHECK(text.find("PASS convexity/") != std::string::npos);
}
