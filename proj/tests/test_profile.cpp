#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "tdcosim/common/errors.hpp"
#include "tdcosim/scenario/profile.hpp"

using namespace tdcosim;
using namespace tdcosim::scenario;

namespace {

Profile make(const std::string& id, double interval_s, int window_start_s,
             std::vector<double> samples, Profile::Kind kind = Profile::Kind::pv) {
  Profile p;
  p.id = id;
  p.kind = kind;
  p.interval_s = interval_s;
  p.window_start_s = window_start_s;
  p.samples = std::move(samples);
  return p;
}

}  // namespace

TEST_CASE("clock strings parse and format") {
  CHECK(parse_clock("00:00") == 0);
  CHECK(parse_clock("06:30") == 6 * 3600 + 30 * 60);
  CHECK(parse_clock("23:59:59") == 86399);
  CHECK(parse_clock("12:00:30") == 12 * 3600 + 30);
  CHECK(format_clock(6 * 3600 + 30 * 60) == "06:30:00");
  CHECK(format_clock(86399) == "23:59:59");
  CHECK(parse_clock(format_clock(45296)) == 45296);
  CHECK_THROWS_AS(parse_clock("noon"), ConfigError);
  CHECK_THROWS_AS(parse_clock("25:00"), ConfigError);
  CHECK_THROWS_AS(parse_clock("12:61"), ConfigError);
  CHECK_THROWS_AS(parse_clock(""), ConfigError);
}

TEST_CASE("zero-order hold lookup clamps at the edges") {
  const Profile p = make("zoh", 10.0, 0, {1.0, 2.0, 3.0});
  CHECK(p.value_at(0.0) == 1.0);
  CHECK(p.value_at(9.999) == 1.0);
  CHECK(p.value_at(10.0) == 2.0);
  CHECK(p.value_at(25.0) == 3.0);
  CHECK(p.value_at(-5.0) == 1.0);
  CHECK(p.value_at(500.0) == 3.0);
  CHECK(p.duration_s() == 30.0);
}

TEST_CASE("window end accounts for the sample count") {
  const Profile p = make("w", 1.0, 6 * 3600, std::vector<double>(3600, 0.5));
  CHECK(p.window_end_s() == 7 * 3600);
}

TEST_CASE("validation rejects broken profiles") {
  CHECK_THROWS_AS(make("", 1.0, 0, {1.0}).validate(), ConfigError);
  CHECK_THROWS_AS(make("x", 0.0, 0, {1.0}).validate(), ConfigError);
  CHECK_THROWS_AS(make("x", 1.0, 0, {}).validate(), ConfigError);
  CHECK_THROWS_AS(make("x", 1.0, 0, {1.0, -0.1}).validate(), ConfigError);
  CHECK_THROWS_AS(make("x", 1.0, 0, {1.0, std::nan("")}).validate(), ConfigError);
  CHECK_NOTHROW(make("x", 1.0, 0, {0.0, 2.5}).validate());
}

TEST_CASE("profile files round-trip exactly") {
  std::vector<Profile> in;
  in.push_back(make("pv-a", 1.0, 6 * 3600, {0.0, 0.123456789012345678, 1.15}));
  in.push_back(make("load-1", 60.0, 0, {1.0, 1.02, 0.98, 1.0}, Profile::Kind::load));
  std::ostringstream os;
  write_profiles(os, in);
  std::istringstream is(os.str());
  const auto out = read_profiles(is, "mem");
  REQUIRE(out.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(out[i].id == in[i].id);
    CHECK(out[i].kind == in[i].kind);
    CHECK(out[i].interval_s == in[i].interval_s);
    CHECK(out[i].window_start_s == in[i].window_start_s);
    REQUIRE(out[i].samples.size() == in[i].samples.size());
    for (std::size_t k = 0; k < in[i].samples.size(); ++k) {
      CHECK(out[i].samples[k] == in[i].samples[k]);  // bit-exact through %.17g
    }
  }
}

TEST_CASE("profile parser reports the offending line") {
  std::istringstream is("profile p\nkind pv\ninterval_s 1\nwindow 06:00 06:00:02\n0.5\nbanana\n");
  try {
    read_profiles(is, "bad.prof");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.file() == "bad.prof");
    CHECK(e.line() == 6);
  }
}

TEST_CASE("resample holds the midpoint value") {
  const Profile p = make("r", 1.0, 0, {0.0, 1.0, 2.0, 3.0, 4.0, 5.0});
  const Profile r = resample(p, 2.0);
  REQUIRE(r.samples.size() == 3);
  CHECK(r.samples[0] == 1.0);
  CHECK(r.samples[1] == 3.0);
  CHECK(r.samples[2] == 5.0);
  CHECK(r.interval_s == 2.0);
  CHECK(r.window_start_s == p.window_start_s);

  const Profile up = resample(p, 0.5);
  REQUIRE(up.samples.size() == 12);
  CHECK(up.samples[0] == 0.0);
  CHECK(up.samples[1] == 0.0);
  CHECK(up.samples[2] == 1.0);
  CHECK(up.samples[11] == 5.0);

  CHECK_THROWS_AS(resample(p, 7.0), ConfigError);
  CHECK_THROWS_AS(resample(p, -1.0), ConfigError);
}

TEST_CASE("variability index on hand-checked series") {
  // One-minute samples; the numbers below were worked out offline from the
  // definition (path length in percent-of-reference-peak vs minutes).
  const Profile cs = make("cs", 60.0, 12 * 3600, {0.0, 0.5, 1.0, 0.5, 0.0});
  const Profile p = make("p", 60.0, 12 * 3600, {0.0, 0.9, 0.2, 1.0, 0.0});
  CHECK(variability_index(p, cs) == doctest::Approx(1.6997798155643442).epsilon(1e-12));
  CHECK(variability_index(cs, cs) == doctest::Approx(1.0).epsilon(1e-15));

  // A constant offset leaves the step sequence, and so the index, unchanged.
  const Profile shifted = make("s", 60.0, 12 * 3600, {0.1, 0.6, 1.1, 0.6, 0.1});
  CHECK(variability_index(shifted, cs) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("variability index is evaluated on a one-minute view") {
  // 1 s samples: the function must agree with an explicit 60 s resample.
  const Profile base = clear_sky_profile("cs", 11 * 3600, 3600.0, 1.0);
  Profile wobble = base;
  for (std::size_t k = 0; k < wobble.samples.size(); ++k) {
    wobble.samples[k] *= 1.0 + 0.2 * std::sin(static_cast<double>(k) / 7.0);
  }
  const double direct = variability_index(wobble, base);
  const double coarse = variability_index(resample(wobble, 60.0), resample(base, 60.0));
  CHECK(direct == doctest::Approx(coarse).epsilon(1e-15));
  CHECK(direct > 1.0);
}

TEST_CASE("variability index conventions and errors") {
  const Profile dark = make("night", 60.0, 0, {0.0, 0.0, 0.0, 0.0});
  CHECK(variability_index(dark, dark) == 1.0);

  const Profile cs = make("cs", 60.0, 12 * 3600, {0.0, 0.5, 1.0, 0.5, 0.0});
  const Profile wrong_window = make("w", 60.0, 13 * 3600, {0.0, 0.5, 1.0, 0.5, 0.0});
  const Profile wrong_rate = make("w", 30.0, 12 * 3600, {0.0, 0.5, 1.0, 0.5, 0.0});
  const Profile one = make("w", 60.0, 12 * 3600, {0.5});
  CHECK_THROWS_AS(variability_index(wrong_window, cs), ConfigError);
  CHECK_THROWS_AS(variability_index(wrong_rate, cs), ConfigError);
  CHECK_THROWS_AS(variability_index(one, cs), ConfigError);
}

TEST_CASE("clear-sky shape: night zero, noon peak, sine-squared flanks") {
  const Profile day = clear_sky_profile("day", 0, 86400.0, 60.0);
  REQUIRE(day.samples.size() == 1440);
  auto at_clock = [&](int h, int m) { return day.samples[static_cast<std::size_t>(h * 60 + m)]; };
  CHECK(at_clock(3, 0) == 0.0);
  CHECK(at_clock(5, 59) == 0.0);
  CHECK(at_clock(18, 30) == 0.0);
  CHECK(at_clock(12, 0) == doctest::Approx(1.0).epsilon(1e-9));
  // sin^2(pi*(9-6)/12) = 1/2 at 09:00, mirrored at 15:00.
  CHECK(at_clock(9, 0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(at_clock(15, 0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(at_clock(10, 30) == doctest::Approx(at_clock(13, 30)).epsilon(1e-9));
  for (double v : day.samples) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(clear_sky_profile("bad", 0, 100.0, 60.0), ConfigError);
}

TEST_CASE("generated irradiance hits the requested variability") {
  const Profile base = clear_sky_profile("cs", 11 * 3600, 3600.0, 1.0);
  for (double target : {1.33, 6.29, 15.58}) {
    CAPTURE(target);
    const Profile out = generate_pv_profile(base, target, 42);
    const double vi = variability_index(out, base);
    CHECK(std::abs(vi / target - 1.0) <= 0.02);
    REQUIRE(out.samples.size() == base.samples.size());
    for (std::size_t k = 0; k < out.samples.size(); ++k) {
      CHECK(out.samples[k] >= 0.0);
      CHECK(out.samples[k] <= 1.15 * base.samples[k] + 1e-12);
    }
  }
}

TEST_CASE("generated irradiance is seed-deterministic") {
  const Profile base = clear_sky_profile("cs", 11 * 3600, 1800.0, 1.0);
  const Profile a = generate_pv_profile(base, 6.29, 7);
  const Profile b = generate_pv_profile(base, 6.29, 7);
  const Profile c = generate_pv_profile(base, 6.29, 8);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) CHECK(a.samples[k] == b.samples[k]);
  bool differs = false;
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    if (a.samples[k] != c.samples[k]) {
      differs = true;
      break;
    }
  }
  CHECK(differs);
}

TEST_CASE("unreachable variability targets are refused with the ceiling named") {
  const Profile base = clear_sky_profile("cs", 11 * 3600, 1800.0, 1.0);
  CHECK_THROWS_AS(generate_pv_profile(base, 1000.0, 1), ConfigError);
  CHECK_THROWS_AS(generate_pv_profile(base, 0.5, 1), ConfigError);
}
