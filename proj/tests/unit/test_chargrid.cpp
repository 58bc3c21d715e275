#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "grid_fixtures.hpp"
#include "vwp/chargrid.hpp"
#include "vwp/errors.hpp"

using namespace vwp;
using testing::brute_dot;
using testing::random_record;

TEST_CASE("grid equals brute-force dot products") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng.below(6), m = 1 + rng.below(5), d = 1 + rng.below(12);
    const auto r = random_record(rng, n, m, rng.below(4), d);
    const auto g = compute_grid(r);
    REQUIRE(g.values.rows() == n);
    REQUIRE(g.values.cols() == m);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < m; ++b)
        CHECK(g.values(a, b) == brute_dot(r.images[a].global_feat, r.characters[b].representative_feat));
    const auto og = compute_object_grid(r);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < r.objects.size(); ++b)
        CHECK(og.values(a, b) == brute_dot(r.images[a].global_feat, r.objects[b].feat));
  }
}

TEST_CASE("grid construction examples") {
  Rng rng(1);
  auto r = random_record(rng, 3, 2, 0, 4);
  r.characters[1].representative_feat.assign(4, 0.0);
  auto g = compute_grid(r);
  for (std::size_t a = 0; a < 3; ++a) CHECK(g.values(a, 1) == 0.0);

  r.images[0].global_feat = {0.0, 1.0, 0.0, 0.0};
  r.characters[0].representative_feat = {0.0, 1.0, 0.0, 0.0};
  CHECK(compute_grid(r).values(0, 0) == 1.0);

  CHECK(compute_object_grid(r).columns() == 0);
  auto with_objects = random_record(rng, 5, 2, 3, 4);
  const auto e = compute_entity_grid(with_objects);
  CHECK(e.columns() == 5);
  CHECK(e.column_ids[2] == "obj0");
  const auto c = compute_grid(with_objects);
  const auto o = compute_object_grid(with_objects);
  for (std::size_t a = 0; a < 5; ++a) {
    CHECK(e.values(a, 1) == c.values(a, 1));
    CHECK(e.values(a, 4) == o.values(a, 2));
  }

  r.characters[0].representative_feat.push_back(1.0);
  try {
    compute_grid(r);
    FAIL("expected data error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::kData);
  }
}

TEST_CASE("permuting characters permutes columns") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto r = random_record(rng, 6, 4, 0, 7);
    const auto g = compute_grid(r);
    std::vector<std::size_t> perm(4);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 3; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    auto p = r;
    for (std::size_t b = 0; b < 4; ++b) p.characters[b] = r.characters[perm[b]];
    const auto h = compute_grid(p);
    for (std::size_t a = 0; a < 6; ++a)
      for (std::size_t b = 0; b < 4; ++b) CHECK(h.values(a, b) == g.values(a, perm[b]));
  }
}

TEST_CASE("scaling an image scales its row") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    auto r = random_record(rng, 5, 3, 0, 6);
    const auto g = compute_grid(r);
    const std::size_t a = rng.below(5);
    // powers of two scale exactly
    const double s = std::ldexp(1.0, static_cast<int>(rng.below(9)) - 4);
    for (auto& x : r.images[a].global_feat) x *= s;
    const auto h = compute_grid(r);
    for (std::size_t b = 0; b < 3; ++b) {
      CHECK(h.values(a, b) == s * g.values(a, b));
      for (std::size_t other = 0; other < 5; ++other)
        if (other != a) CHECK(h.values(other, b) == g.values(other, b));
    }
    const double t = 0.1 + 3.0 * rng.uniform();
    for (auto& x : r.images[a].global_feat) x *= t;
    const auto k = compute_grid(r);
    for (std::size_t b = 0; b < 3; ++b)
      CHECK(k.values(a, b) == doctest::Approx(t * h.values(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("flatten_pad layout") {
  CharacterGrid g;
  g.values = Tensor::from_rows({{1, 2}, {3, 4}});
  g.image_ids = {"a", "b"};
  g.column_ids = {"x", "y"};
  const auto v = flatten_pad(g, 10, 5);
  REQUIRE(v.size() == 50);
  CHECK(v[0] == 1);
  CHECK(v[1] == 2);
  CHECK(v[5] == 3);
  CHECK(v[6] == 4);
  CHECK(std::accumulate(v.begin(), v.end(), 0.0) == 10.0);

  CharacterGrid zero = g;
  zero.values.fill(0.0);
  for (double x : flatten_pad(zero, 10, 5)) CHECK(x == 0.0);

  Rng rng(2);
  const auto full = compute_grid(random_record(rng, 10, 5, 0, 3));
  const auto fv = flatten_pad(full, 10, 5);
  CHECK(std::equal(fv.begin(), fv.end(), full.values.data().begin()));

  try {
    flatten_pad(full, 9, 5);
    FAIL("expected size error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSize);
  }
  CHECK_THROWS_AS(flatten_pad(full, 10, 4), Error);
}

TEST_CASE("flatten_pad is injective for a fixed occupancy") {
  Rng rng(3);
  const auto base = compute_grid(random_record(rng, 6, 3, 0, 4));
  const auto v = flatten_pad(base, 10, 5);
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 3; ++b) {
      auto changed = base;
      changed.values(a, b) += 1.0;
      CHECK(flatten_pad(changed, 10, 5) != v);
      CHECK(flatten_pad(changed, 10, 5)[a * 5 + b] == changed.values(a, b));
    }
}

TEST_CASE("shading buckets") {
  CharacterGrid c;
  c.values = Tensor::matrix(2, 3, 4.2);
  c.image_ids = {"a", "b"};
  c.column_ids = {"x", "y", "z"};
  for (const auto& row : shade_buckets(c))
    for (int b : row) CHECK(b == 0);

  CharacterGrid inc;
  inc.values = Tensor::from_rows({{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}});
  inc.image_ids = {"a"};
  for (int i = 0; i < 10; ++i) inc.column_ids.push_back(std::to_string(i));
  const auto buckets = shade_buckets(inc)[0];
  CHECK(std::is_sorted(buckets.begin(), buckets.end()));
  CHECK(buckets.front() == 0);
  CHECK(buckets.back() == 4);
}

TEST_CASE("grid CSV round-trips") {
  Rng rng(8);
  const auto g = compute_grid(random_record(rng, 7, 4, 0, 5));
  const auto report = grid_report(g);
  CHECK(report.csv.rfind("image_id,char0,char1,char2,char3\n", 0) == 0);
  const auto back = parse_grid_csv(report.csv);
  CHECK(back.values == g.values);
  CHECK(back.image_ids == g.image_ids);
  CHECK(back.column_ids == g.column_ids);
  CHECK(report.table.find("img6") != std::string::npos);
}
