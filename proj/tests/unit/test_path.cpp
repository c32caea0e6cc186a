#include <sstream>

#include "doctest.h"

#include "bridgekit/errors.hpp"
#include "bridgekit/path.hpp"

using namespace bridgekit;

TEST_SUITE("path") {
  TEST_CASE("uniform grid") {
    const auto g = uniform_grid(1.0, 5);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 1.0);
    CHECK(g[2] == doctest::Approx(0.5));
    CHECK_THROWS_AS(uniform_grid(1.0, 1), DomainError);
    CHECK_THROWS_AS(uniform_grid(0.0, 3), DomainError);
  }

  TEST_CASE("grid lookup") {
    PathSample p{{0.0, 0.1, 0.3}, {1.0, 2.0, 3.0}, false};
    CHECK(p.index_of(0.1) == 1);
    CHECK(p.value_at(0.1 + 1e-15) == 2.0);
    CHECK(p.value_at(0.3) == 3.0);
    CHECK_THROWS_AS(p.index_of(0.2), MissingGridPointError);
    CHECK_THROWS_AS(p.index_of(0.5), MissingGridPointError);
  }

  TEST_CASE("validation") {
    CHECK_THROWS_AS(validate(PathSample{{0.0, 0.1}, {1.0}, false}), GridMismatchError);
    CHECK_THROWS_AS(validate(PathSample{{0.0, 0.1, 0.1}, {1.0, 2.0, 3.0}, false}), GridMismatchError);
    CHECK_NOTHROW(validate(PathSample{{0.0, 0.1}, {1.0, 2.0}, false}));
  }

  TEST_CASE("reversal is an involution") {
    PathSample p{{0.0, 0.25, 1.0}, {0.0, -1.0, 2.0}, true};
    const auto r = reverse(p, 1.0);
    CHECK(r.times == std::vector<double>{0.0, 0.75, 1.0});
    CHECK(r.values == std::vector<double>{2.0, -1.0, 0.0});
    CHECK(reverse(r, 1.0) == p);
  }

  TEST_CASE("shift") {
    PathSample p{{0.0, 0.5, 1.0, 1.5}, {0.0, 1.0, 2.0, 3.0}, false};
    const auto s = shift(p, 0.5);
    CHECK(s.times == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(s.values == std::vector<double>{1.0, 2.0, 3.0});
    CHECK_THROWS_AS(shift(p, 0.7), MissingGridPointError);
  }

  TEST_CASE("pool access and csv") {
    PathPool pool;
    pool.times = {0.0, 1.0};
    pool.values = {1.0, 2.0, 3.0, 4.0};
    pool.draws = 2;
    CHECK(pool.column(1) == std::vector<double>{2.0, 4.0});
    CHECK(pool.path(1).values == std::vector<double>{3.0, 4.0});
    std::ostringstream out;
    write_csv(out, pool);
    CHECK(out.str() == "draw_id,time,value\n0,0,1\n0,1,2\n1,0,3\n1,1,4\n");
  }
}
