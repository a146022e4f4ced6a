#include <catch2/catch_amalgamated.hpp>

#include "generators.hpp"
#include "pplat/io.hpp"
#include "pplat/reduction.hpp"
#include "pplat/repeated.hpp"

using namespace pplat;

namespace {

Errc parse_code(const std::string& text) {
  try {
    io::parse_instance(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse/validation error");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("canonical number formatting") {
  REQUIRE(io::canon(0.5) == "0.5");
  REQUIRE(io::canon(-0.0) == "0");
  REQUIRE(io::canon(1.0) == "1");
  REQUIRE(io::canon(1.0 / 3.0) == "0.333333333333");
  REQUIRE(io::canon(0.12) == "0.12");
  REQUIRE(io::canon_array({0.0, 0.25}) == "[0, 0.25]");
}

TEST_CASE("instance files parse, validate, and report field errors") {
  const PersuasionInstance inst = io::parse_instance(
      R"({"theta": [0.2, 0.8], "prior": [0.2, 0.8], "mu": 0.5,
          "repeated": {"delta": 0.9, "u_bar": 0.3}})");
  REQUIRE(inst.n() == 2);
  REQUIRE(inst.repeated.has_value());
  REQUIRE(inst.repeated->delta == 0.9);

  REQUIRE(parse_code("not json at all") == Errc::ParseError);
  REQUIRE(parse_code(R"({"prior": [1.0], "mu": 0.5})") == Errc::ParseError);
  REQUIRE(parse_code(R"({"theta": [0.2, "x"], "prior": [0.2, 0.8], "mu": 0.5})") ==
          Errc::ParseError);
  REQUIRE(parse_code(R"({"theta": [0.2], "prior": [0.2, 0.8], "mu": 0.5})") ==
          Errc::SizeMismatch);
  REQUIRE(parse_code(R"({"theta": [0.2, 0.8], "prior": [0.2, 0.8], "mu": 1.5})") ==
          Errc::MuOutOfRange);
}

TEST_CASE("market files parse and validate") {
  const Market m = io::parse_market(R"({"values": [0.6, 0.9], "masses": [0.2, 0.8]})");
  REQUIRE(m.n() == 2);
  REQUIRE_THROWS_AS(io::parse_market(R"({"values": [0.9, 0.6], "masses": [0.2, 0.8]})"),
                    Error);
}

TEST_CASE("policy files round-trip byte for byte") {
  const PersuasionInstance inst = testgen::instance_a();
  const OneShotSolution sol = solve_one_shot(inst);
  const std::string once = io::policy_to_json(sol.policy, sol.sender, sol.utilities);
  const io::PolicyData data = io::parse_policy(once, inst);
  const std::string twice =
      io::policy_to_json(data.policy, data.sender, data.utilities);
  REQUIRE(once == twice);
}

TEST_CASE("repeated-solver policy files round-trip byte for byte") {
  const PersuasionInstance inst = testgen::instance_a_repeated(0.75, 0.3);
  const SolveResult r = solve_repeated(inst);
  const UtilityReport utilities =
      policy_utilities(inst, r.policy.base, r.sender);
  const std::string once = io::policy_to_json(r.policy.base, r.sender, utilities);
  const io::PolicyData data = io::parse_policy(once, inst);
  REQUIRE(data.policy.truthful_index.has_value());
  const std::string twice =
      io::policy_to_json(data.policy, data.sender, data.utilities);
  REQUIRE(once == twice);
}

TEST_CASE("policy files are validated against the instance") {
  const PersuasionInstance inst = testgen::instance_a();
  // mean posterior (0.5, 0.5) differs from the prior (0.2, 0.8)
  const std::string corrupted = R"({
    "segments": [
      {"weight": 1.0, "posterior": [0.5, 0.5], "lie_prob": 0.2, "truthful": false}
    ],
    "utilities": {"sender": 0, "platform": 0, "per_type": [0, 0]}
  })";
  try {
    io::parse_policy(corrupted, inst);
    FAIL("expected NotBayesPlausible");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::NotBayesPlausible);
  }

  const std::string two_truthful = R"({
    "segments": [
      {"weight": 0.5, "posterior": [0.4, 0.6], "lie_prob": 0, "truthful": true},
      {"weight": 0.5, "posterior": [0, 1], "lie_prob": 0, "truthful": true}
    ]
  })";
  try {
    io::parse_policy(two_truthful, inst);
    FAIL("expected TooManyTruthful");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::TooManyTruthful);
  }

  const std::string bad_lie = R"({
    "segments": [
      {"weight": 1.0, "posterior": [0.2, 0.8], "lie_prob": 1.4, "truthful": false}
    ]
  })";
  REQUIRE_THROWS_AS(io::parse_policy(bad_lie, inst), Error);
}

TEST_CASE("segmentation serialization is stable") {
  const Market m = make_market({0.6, 0.9}, {0.2, 0.8});
  const Segmentation seg = consumer_optimal_segmentation(m);
  const std::string a = io::segmentation_to_json(seg, surpluses(seg));
  const std::string b = io::segmentation_to_json(seg, surpluses(seg));
  REQUIRE(a == b);
  REQUIRE(a.find("\"consumer\": 0.12") != std::string::npos);
  REQUIRE(a.find("\"producer\": 0.72") != std::string::npos);
}

TEST_CASE("missing files raise io errors") {
  REQUIRE_THROWS_AS(io::load_instance("/nonexistent/path.json"), io::IoError);
  REQUIRE_THROWS_AS(io::write_file("/nonexistent/dir/out.json", "x"), io::IoError);
}
