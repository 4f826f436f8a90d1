#include <doctest.h>

#include "perclab/error.hpp"
#include "perclab/series.hpp"

using namespace perc;

namespace {

Series sample_series(std::int64_t shift) {
  Series s;
  s.command = "incipient";
  s.config_hash = "00000000deadbeef";
  for (int n : {4, 8}) {
    SeriesRow r;
    r.n = n;
    r.m = 2 * n;
    r.observable = "T_mean";
    for (std::int64_t v = 0; v < 10; ++v) r.sums.add(v * n + shift);
    r.attempts = 13 + n;
    r.finalize();
    s.rows.push_back(r);
    SeriesRow v = r;
    v.observable = "T_var";
    v.finalize();
    s.rows.push_back(v);
  }
  SeriesRow x;
  x.n = 1;
  x.m = 1;
  x.observable = "T_exact_mean";
  x.estimate = 5.784375;
  x.samples = 4096;
  s.rows.push_back(x);
  SeriesRow d;
  d.n = 2;
  d.m = 2;
  d.observable = "delta_sq_sum";
  d.real.add(0.1 + shift);
  d.real.add(1.0 / 3);
  d.finalize();
  s.rows.push_back(d);
  s.sort_rows();
  return s;
}

}  // namespace

TEST_SUITE("series") {
  TEST_CASE("row kinds") {
    CHECK(row_kind("T_mean") == RowKind::count_mean);
    CHECK(row_kind("T_m2") == RowKind::second_moment);
    CHECK(row_kind("S_var") == RowKind::variance);
    CHECK(row_kind("T_exact_var") == RowKind::exact);
    CHECK(row_kind("T_atom_4") == RowKind::exact);
    CHECK(row_kind("identity_orthogonality") == RowKind::exact);
    CHECK(row_kind("delta_sq_sum") == RowKind::real_mean);
  }

  TEST_CASE("csv round trip is lossless") {
    const Series s = sample_series(3);
    const std::string text = write_csv(s);
    CHECK(text.rfind("# perclab schema=1 command=incipient config_hash=00000000deadbeef\n", 0) == 0);
    CHECK(text.find("\nn,samples,estimate,stderr,observable,m,attempts,s1,s2,s3,s4\n") != std::string::npos);
    const Series back = parse_csv(text);
    CHECK(write_csv(back) == text);
    REQUIRE(back.rows.size() == s.rows.size());
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      CHECK(back.rows[i].estimate == s.rows[i].estimate);
      CHECK(back.rows[i].se == s.rows[i].se);
      CHECK(back.rows[i].sums == s.rows[i].sums);
      CHECK(back.rows[i].attempts == s.rows[i].attempts);
    }
  }

  TEST_CASE("format_double keeps every bit") {
    for (double v : {0.1, 1.0 / 3, 1e-300, 6.02214076e23, -0.0, 5.784375}) {
      CHECK(std::stod(format_double(v)) == v);
    }
  }

  TEST_CASE("merge laws") {
    const Series a = sample_series(0), b = sample_series(5), c = sample_series(-2);
    CHECK(write_csv(merge(a, b)) == write_csv(merge(b, a)));
    CHECK(write_csv(merge(a, Series{})) == write_csv(a));
    CHECK(write_csv(merge(Series{}, a)) == write_csv(a));
    CHECK(write_csv(merge(merge(a, b), c)) == write_csv(merge(a, merge(b, c))));
    const Series ab = merge(a, b);
    const SeriesRow* r = ab.find("T_mean", 4);
    REQUIRE(r);
    CHECK(r->samples == 20);
    CHECK(r->attempts == 34);
    CHECK(ab.find("T_exact_mean", 1)->estimate == 5.784375);
  }

  TEST_CASE("merge refuses mismatches") {
    Series a = sample_series(0), b = sample_series(0);
    b.config_hash = "0000000000000001";
    try {
      merge(a, b);
      FAIL("expected config mismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::config_mismatch);
    }
    Series c = sample_series(0);
    for (auto& r : c.rows)
      if (r.observable == "T_exact_mean") r.estimate = 1.0;
    CHECK_THROWS_AS(merge(a, c), Error);
  }

  TEST_CASE("parser rejects damage") {
    const std::string good = write_csv(sample_series(0));
    CHECK_THROWS_AS(parse_csv(""), Error);
    CHECK_THROWS_AS(parse_csv("n,samples\n1,2\n"), Error);
    std::string bad = good;
    bad.replace(bad.find("T_mean"), 6, "T_mean,extra");
    CHECK_THROWS_AS(parse_csv(bad), Error);
    std::string inconsistent = good;
    // samples column disagrees with the sums
    const auto pos = inconsistent.find("\n4,10,");
    REQUIRE(pos != std::string::npos);
    inconsistent.replace(pos, 6, "\n4,11,");
    CHECK_THROWS_AS(parse_csv(inconsistent), Error);
  }

  TEST_CASE("file io errors") {
    CHECK_THROWS_AS(read_text_file("/nonexistent/dir/file.csv"), Error);
    CHECK_THROWS_AS(write_text_file("/nonexistent/dir/file.csv", "x"), Error);
  }
}
