#include <atomic>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mvtp/parallel.hpp"

using namespace mvtp;

TEST_CASE("parallel_for visits every index once") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  parallel_for(0, [](std::size_t) { FAIL("called"); });
}

TEST_CASE("parallel_for rethrows the lowest failing index") {
  try {
    parallel_for(100, [](std::size_t i) {
      if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
    });
    FAIL("no exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "17");
  }
}

TEST_CASE("thread_count is positive") { CHECK(thread_count() >= 1); }
