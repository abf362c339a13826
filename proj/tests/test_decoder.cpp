#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "charparse/decoder/decode.hpp"
#include "charparse/util/rng.hpp"
#include "support/oracles.hpp"

using namespace charparse;
using decoder::Heads;
using decoder::ScoreMatrix;

namespace {

ScoreMatrix random_scores(int n, Rng& rng, double lo = -5, double hi = 5) {
  ScoreMatrix m(n);
  for (int d = 1; d <= n; ++d)
    for (int h = 0; h <= n; ++h)
      if (h != d) m.at(d, h) = rng.uniform(lo, hi);
  return m;
}

}  // namespace

TEST_CASE("tree validity and scoring") {
  // 1 <- 2 -> 3, 2 <- root
  Heads good{-1, 2, 0, 2};
  CHECK(decoder::is_valid_tree(good));
  CHECK(!decoder::is_valid_tree({-1, 2, 1, 2}));  // 1<->2 cycle
  CHECK(!decoder::is_valid_tree({-1, 1, 0, 2}));  // self-head
  CHECK(!decoder::is_valid_tree({-1, 4, 0, 2}));  // head out of range
  CHECK(!decoder::is_valid_tree({-1}));           // empty sentence

  ScoreMatrix m(3);
  m.at(1, 2) = 1.5;
  m.at(2, 0) = 2.5;
  m.at(3, 2) = 3.0;
  CHECK(decoder::tree_score(m, good) == doctest::Approx(7.0));
}

TEST_CASE("greedy takes the row argmax with ties to the lower head") {
  ScoreMatrix m(2);
  m.at(1, 0) = 1.0;
  m.at(1, 2) = 1.0;  // tie: head 0 wins
  m.at(2, 0) = 0.0;
  m.at(2, 1) = 2.0;
  Heads h = decoder::greedy_heads(m);
  CHECK(h[1] == 0);
  CHECK(h[2] == 1);
}

TEST_CASE("exact decoder matches brute force on random matrices") {
  Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 240; ++trial) {
    int n = 1 + static_cast<int>(rng.below(5));  // up to 5 words
    ScoreMatrix m = random_scores(n, rng);
    Heads got = decoder::cle_heads(m);
    REQUIRE(decoder::is_valid_tree(got));
    Heads want;
    double best = oracles::best_tree_bruteforce(m, &want);
    // scores must match exactly up to float noise; the argmax tree is
    // unique with probability 1 for continuous scores
    CHECK(decoder::tree_score(m, got) == doctest::Approx(best).epsilon(1e-9));
    ++checked;
  }
  CHECK(checked == 240);
}

TEST_CASE("exact decoder handles adversarial near-tie grids") {
  // integer-ish scores produce plenty of ties and cycles
  Rng rng(99);
  for (int trial = 0; trial < 120; ++trial) {
    int n = 2 + static_cast<int>(rng.below(4));
    ScoreMatrix m(n);
    for (int d = 1; d <= n; ++d)
      for (int h = 0; h <= n; ++h)
        if (h != d) m.at(d, h) = static_cast<double>(rng.below(4));
    Heads got = decoder::cle_heads(m);
    REQUIRE(decoder::is_valid_tree(got));
    double best = oracles::best_tree_bruteforce(m, nullptr);
    CHECK(decoder::tree_score(m, got) == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("greedy never beats exact search") {
  Rng rng(31337);
  int valid_greedy = 0;
  for (int trial = 0; trial < 200; ++trial) {
    int n = 1 + static_cast<int>(rng.below(9));
    ScoreMatrix m = random_scores(n, rng);
    Heads g = decoder::greedy_heads(m);
    Heads c = decoder::cle_heads(m);
    REQUIRE(decoder::is_valid_tree(c));
    if (decoder::is_valid_tree(g)) {
      // among trees the exact decoder is optimal
      CHECK(decoder::tree_score(m, g) <= decoder::tree_score(m, c) + 1e-9);
      ++valid_greedy;
    } else {
      // a cyclic greedy pick is the row-max upper bound, so it dominates
      CHECK(decoder::tree_score(m, g) >= decoder::tree_score(m, c) - 1e-9);
    }
  }
  CHECK(valid_greedy > 0);  // both branches exercised
}

TEST_CASE("single-root decoding attaches exactly one word to the root") {
  Rng rng(55);
  for (int trial = 0; trial < 150; ++trial) {
    int n = 1 + static_cast<int>(rng.below(5));
    ScoreMatrix m = random_scores(n, rng);
    Heads h = decoder::cle_heads_single_root(m);
    REQUIRE(decoder::is_valid_tree(h));
    int roots = 0;
    for (int d = 1; d <= n; ++d)
      if (h[d] == 0) ++roots;
    CHECK(roots == 1);

    // optimal among single-root trees: brute force with the same filter
    Heads heads(static_cast<size_t>(n) + 1, -1);
    std::vector<int> digit(static_cast<size_t>(n), 0);
    double best = -1e300;
    while (true) {
      for (int d = 1; d <= n; ++d) {
        int cand = digit[static_cast<size_t>(d - 1)];
        if (cand >= d) ++cand;
        heads[static_cast<size_t>(d)] = cand;
      }
      int rc = 0;
      for (int d = 1; d <= n; ++d)
        if (heads[static_cast<size_t>(d)] == 0) ++rc;
      if (rc == 1 && decoder::is_valid_tree(heads))
        best = std::max(best, decoder::tree_score(m, heads));
      int p = 0;
      while (p < n && ++digit[static_cast<size_t>(p)] == n) digit[static_cast<size_t>(p++)] = 0;
      if (p == n) break;
    }
    CHECK(decoder::tree_score(m, h) == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("single word sentence must attach to the root") {
  ScoreMatrix m(1);
  m.at(1, 0) = -3.0;
  Heads h = decoder::cle_heads(m);
  REQUIRE(h.size() == 2);
  CHECK(h[1] == 0);
  CHECK(decoder::cle_heads_single_root(m)[1] == 0);
  CHECK(decoder::greedy_heads(m)[1] == 0);
}

TEST_CASE("cycle-inducing scores are resolved optimally") {
  // classic case: 1 and 2 strongly prefer each other, the root arc is weak
  ScoreMatrix m(2);
  m.at(1, 0) = 1.0;
  m.at(1, 2) = 10.0;
  m.at(2, 0) = 2.0;
  m.at(2, 1) = 10.0;
  Heads g = decoder::greedy_heads(m);
  CHECK(!decoder::is_valid_tree(g));  // greedy picks the 1<->2 cycle
  Heads c = decoder::cle_heads(m);
  REQUIRE(decoder::is_valid_tree(c));
  // best tree: break the cycle on the cheaper side: 2<-0 (2) + 1<-2 (10) = 12
  CHECK(decoder::tree_score(m, c) == doctest::Approx(12.0));
  CHECK(c[1] == 2);
  CHECK(c[2] == 0);
}

TEST_CASE("nested cycles collapse correctly") {
  // 1->2->3->1 cycle plus strong pairwise links; forces recursive contraction
  ScoreMatrix m(3);
  for (int d = 1; d <= 3; ++d)
    for (int h = 0; h <= 3; ++h)
      if (h != d) m.at(d, h) = 0.0;
  m.at(1, 3) = 9.0;
  m.at(2, 1) = 9.0;
  m.at(3, 2) = 9.0;
  m.at(1, 0) = 1.0;
  m.at(2, 0) = 0.5;
  m.at(3, 0) = 0.25;
  Heads c = decoder::cle_heads(m);
  REQUIRE(decoder::is_valid_tree(c));
  double best = oracles::best_tree_bruteforce(m, nullptr);
  CHECK(decoder::tree_score(m, c) == doctest::Approx(best));
  CHECK(c[1] == 0);  // cheapest cycle break enters at word 1
}

TEST_CASE("decoder comparison harness summarizes disagreement") {
  Rng rng(7);
  std::vector<ScoreMatrix> ms;
  for (int i = 0; i < 60; ++i) ms.push_back(random_scores(3 + static_cast<int>(rng.below(5)), rng));
  auto cmp = decoder::compare_decoders(ms);
  CHECK(cmp.sentences == 60);
  CHECK(cmp.greedy_nontree >= 0);
  CHECK(cmp.identical >= 0);
  CHECK(cmp.identical <= 60);
  CHECK(cmp.mean_score_gap >= -1e-12);

  // all-identical case: diagonal-dominant root scores, no cycles possible
  std::vector<ScoreMatrix> easy;
  for (int i = 0; i < 5; ++i) {
    ScoreMatrix m(3);
    for (int d = 1; d <= 3; ++d) m.at(d, 0) = 100.0;
    easy.push_back(m);
  }
  auto cmp2 = decoder::compare_decoders(easy);
  CHECK(cmp2.identical == 5);
  CHECK(cmp2.greedy_nontree == 0);
  CHECK(cmp2.mean_score_gap == doctest::Approx(0.0));
}
