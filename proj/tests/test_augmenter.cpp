#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>

#include "helpers.hpp"
#include "rrm/augmenter.hpp"
#include "rrm/corpus.hpp"
#include "rrm/error.hpp"

using namespace rrm;
using augmenter::Origin;

namespace {

ExampleTriple sample_triple() {
  return {{"i", "prompt-i", "wi", "li"},
          {"j", "prompt-j", "wj", "lj"},
          {"k", "prompt-k", "wk", "lk"}};
}

// Canonical form of a candidate that ignores the positional coin flip:
// (prompt, lexicographically smaller response first, label oriented to match).
std::tuple<std::string, std::string, std::string, double> canonical(
    const CandidateTriplet& c) {
  if (c.response_a <= c.response_b)
    return {c.prompt, c.response_a, c.response_b, c.label.p_first_wins};
  return {c.prompt, c.response_b, c.response_a, 1.0 - c.label.p_first_wins};
}

// A response's origin tag ("<id>:w" / "<id>:l") as recorded in source_ids.
std::string tag(const CandidateTriplet& c, bool second) {
  REQUIRE(c.source_ids.size() == 3);
  return c.source_ids[second ? 2 : 1];
}

}  // namespace

TEST_CASE("label_triplet implements the contextual rules") {
  const Origin wi{"i", Origin::Role::Winner};
  const Origin li{"i", Origin::Role::Loser};
  const Origin wj{"j", Origin::Role::Winner};
  const Origin lj{"j", Origin::Role::Loser};

  // Both contextual: the dataset winner wins.
  CHECK(augmenter::label_triplet("i", wi, li).p_first_wins == 1.0);
  CHECK(augmenter::label_triplet("i", li, wi).p_first_wins == 0.0);
  // Exactly one contextual: it wins regardless of its original role.
  CHECK(augmenter::label_triplet("i", wi, wj).p_first_wins == 1.0);
  CHECK(augmenter::label_triplet("i", li, wj).p_first_wins == 1.0);
  CHECK(augmenter::label_triplet("i", wj, li).p_first_wins == 0.0);
  // Neither contextual: tie.
  CHECK(augmenter::label_triplet("i", wj, lj).p_first_wins == 0.5);
}

TEST_CASE("augment_example emits the 14 expected rows in order") {
  const auto triple = sample_triple();
  const auto out = augmenter::augment_example(triple, 11);
  REQUIRE(out.size() == 14);

  // Independently-stated row table: contextual-vs-peer pairs first, then the
  // six peer-vs-peer pairs.
  const std::pair<std::string, std::string> expected[] = {
      {"i:w", "j:w"}, {"i:w", "k:w"}, {"i:w", "j:l"}, {"i:w", "k:l"},
      {"i:l", "j:w"}, {"i:l", "k:w"}, {"i:l", "j:l"}, {"i:l", "k:l"},
      {"j:w", "j:l"}, {"k:w", "k:l"}, {"j:w", "k:w"}, {"j:w", "k:l"},
      {"k:w", "j:l"}, {"j:l", "k:l"}};

  for (std::size_t row = 0; row < 14; ++row) {
    const auto& c = out[row];
    CHECK(c.id == "i-aug-" + std::to_string(row));
    CHECK(c.prompt == "prompt-i");
    const std::set<std::string> got{tag(c, false), tag(c, true)};
    const std::set<std::string> want{expected[row].first,
                                     expected[row].second};
    CHECK(got == want);
    CHECK(c.source_ids[0] == "i");

    if (row < 8) {
      CHECK(c.provenance == Provenance::NonContextual);
      // The contextual response is labeled the winner.
      const bool first_is_contextual = tag(c, false).starts_with("i:");
      CHECK(c.label.p_first_wins == (first_is_contextual ? 1.0 : 0.0));
    } else {
      CHECK(c.provenance == Provenance::Neutral);
      CHECK(c.label.p_first_wins == 0.5);
    }
  }
}

TEST_CASE("augment_example is deterministic and seed-sensitive") {
  const auto triple = sample_triple();
  const auto a = augmenter::augment_example(triple, 5);
  const auto b = augmenter::augment_example(triple, 5);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].response_a == b[i].response_a);
    CHECK(a[i].label.p_first_wins == b[i].label.p_first_wins);
  }
  // Across many seeds, both response orders must occur for some row.
  bool saw_swap = false;
  for (std::uint64_t seed = 0; seed < 32 && !saw_swap; ++seed) {
    const auto c = augmenter::augment_example(triple, seed);
    if (c[0].response_a != a[0].response_a) saw_swap = true;
  }
  CHECK(saw_swap);
}

TEST_CASE("enumerate_all yields 45 and contains the base-prompt family") {
  const auto triple = sample_triple();
  const std::uint64_t seed = 3;
  const auto all = augmenter::enumerate_all(triple, seed);
  REQUIRE(all.size() == 45);

  // 3 prompts x C(6,2) pairs; 15 per prompt.
  std::map<std::string, int> per_prompt;
  for (const auto& c : all) ++per_prompt[c.prompt];
  for (const auto& [prompt, count] : per_prompt) CHECK(count == 15);

  // The base-prompt slice equals {original} + augment_example, compared in
  // coin-invariant canonical form.
  std::set<std::tuple<std::string, std::string, std::string, double>> slice;
  for (const auto& c : all)
    if (c.prompt == triple.base.prompt) slice.insert(canonical(c));

  std::set<std::tuple<std::string, std::string, std::string, double>> expected;
  expected.insert(canonical(augmenter::original_candidate(triple.base, seed)));
  for (const auto& c : augmenter::augment_example(triple, seed))
    expected.insert(canonical(c));

  CHECK(slice == expected);
}

TEST_CASE("degenerate triples are rejected") {
  ExampleTriple t = sample_triple();
  t.peer1.id = "i";
  CHECK_THROWS_AS(augmenter::augment_example(t, 0), DataError);
  CHECK_THROWS_AS(augmenter::enumerate_all(t, 0), DataError);
}

TEST_CASE("original_candidate keeps the label aligned under the coin flip") {
  const PreferenceExample ex{"e1", "p", "good", "bad"};
  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    const auto c = augmenter::original_candidate(ex, seed);
    CHECK(c.provenance == Provenance::Original);
    if (c.response_a == "good") {
      CHECK(c.label.p_first_wins == 1.0);
    } else {
      CHECK(c.response_a == "bad");
      CHECK(c.label.p_first_wins == 0.0);
    }
  }
}

namespace {

std::vector<CandidateTriplet> some_candidates(std::size_t n) {
  std::vector<CandidateTriplet> out;
  for (std::size_t i = 0; i < n; ++i) {
    CandidateTriplet c;
    c.id = "c" + std::to_string(i);
    c.prompt = "p";
    c.response_a = "a" + std::to_string(i);
    c.response_b = "b" + std::to_string(i);
    c.label.p_first_wins = i % 2 ? 1.0 : 0.5;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

TEST_CASE("filter_by_difficulty keeps hard candidates from the subsample") {
  const auto candidates = some_candidates(100);

  SUBCASE("a perfect scorer keeps nothing") {
    auto scorer = [](const CandidateTriplet& c) {
      return c.label.p_first_wins;
    };
    CHECK(augmenter::filter_by_difficulty(candidates, scorer, 0.2, 1.0, 0)
              .empty());
  }

  SUBCASE("a maximally wrong scorer keeps every scored decisive candidate") {
    auto scorer = [](const CandidateTriplet& c) {
      return 1.0 - c.label.p_first_wins;
    };
    const auto kept =
        augmenter::filter_by_difficulty(candidates, scorer, 0.2, 1.0, 0);
    CHECK(kept.size() == 50);  // ties score exactly right, decisives wrong
    // Input order is preserved.
    for (std::size_t i = 1; i < kept.size(); ++i)
      CHECK(std::stoi(kept[i - 1].id.substr(1)) <
            std::stoi(kept[i].id.substr(1)));
  }

  SUBCASE("sample_fraction bounds how many can be scored") {
    auto scorer = [](const CandidateTriplet&) { return 0.0; };
    const auto kept =
        augmenter::filter_by_difficulty(candidates, scorer, 0.2, 0.3, 7);
    CHECK(kept.size() <= 30);
    CHECK(!kept.empty());
    const auto again =
        augmenter::filter_by_difficulty(candidates, scorer, 0.2, 0.3, 7);
    REQUIRE(again.size() == kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i)
      CHECK(again[i].id == kept[i].id);
  }

  SUBCASE("invalid parameters") {
    auto scorer = [](const CandidateTriplet&) { return 0.5; };
    CHECK_THROWS_AS(
        augmenter::filter_by_difficulty(candidates, scorer, 0.0, 1.0, 0),
        UsageError);
    CHECK_THROWS_AS(
        augmenter::filter_by_difficulty(candidates, scorer, 1.0, 1.0, 0),
        UsageError);
    CHECK_THROWS_AS(
        augmenter::filter_by_difficulty(candidates, scorer, 0.2, 0.0, 0),
        UsageError);
    CHECK_THROWS_AS(
        augmenter::filter_by_difficulty(candidates, scorer, 0.2, 1.5, 0),
        UsageError);
  }

  SUBCASE("scorer failures are wrapped with the candidate id") {
    auto scorer = [](const CandidateTriplet& c) -> double {
      if (c.id == "c3") throw std::runtime_error("boom");
      return 0.5;
    };
    CHECK_THROWS_WITH_AS(
        augmenter::filter_by_difficulty(candidates, scorer, 0.2, 1.0, 0),
        doctest::Contains("c3"), DataError);
  }
}

TEST_CASE("merge concatenates and shuffle_training is deterministic") {
  auto originals = some_candidates(5);
  const auto extra = some_candidates(3);
  auto merged = augmenter::merge(originals, extra);
  CHECK(merged.size() == 8);

  auto a = merged;
  auto b = merged;
  augmenter::shuffle_training(a, 9);
  augmenter::shuffle_training(b, 9);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);
  auto c = merged;
  augmenter::shuffle_training(c, 10);
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].id != c[i].id) same = false;
  CHECK_FALSE(same);
}

TEST_CASE("candidate save/load round trip preserves labels and signals") {
  auto candidates = some_candidates(4);
  candidates[1].provenance = Provenance::NonContextual;
  candidates[2].provenance = Provenance::Neutral;
  candidates[2].signals = SyntheticSignals{0.25, -1.5};
  candidates[3].source_ids = {"x", "y:w", "z:l"};

  testutil::TempPath tmp("cands");
  augmenter::save_candidates(candidates, tmp.str());
  const auto loaded = augmenter::load_candidates(tmp.str());
  REQUIRE(loaded.size() == candidates.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].id == candidates[i].id);
    CHECK(loaded[i].prompt == candidates[i].prompt);
    CHECK(loaded[i].response_a == candidates[i].response_a);
    CHECK(loaded[i].response_b == candidates[i].response_b);
    CHECK(loaded[i].label.p_first_wins == candidates[i].label.p_first_wins);
    CHECK(loaded[i].provenance == candidates[i].provenance);
    CHECK(loaded[i].source_ids == candidates[i].source_ids);
    CHECK(loaded[i].signals.has_value() == candidates[i].signals.has_value());
  }
  CHECK(loaded[2].signals->s == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(loaded[2].signals->a == doctest::Approx(-1.5).epsilon(1e-15));
}
