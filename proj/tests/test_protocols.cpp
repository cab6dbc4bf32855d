#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <vector>

#include "popsim/engine.hpp"
#include "popsim/protocols/elimination.hpp"
#include "popsim/protocols/epidemic.hpp"
#include "popsim/protocols/leader_election.hpp"
#include "popsim/protocols/pse.hpp"
#include "test_support.hpp"

using namespace popsim;
using popsim::test::ForcedRng;

namespace {

ForcedRng no_rng;  // rules that do not randomize never touch it

bool wins_tuple(const LeState& s, const LeTuple& t) {
  return s.kind != LeState::Kind::fresh && le_tuple_wins(s.tuple, t);
}

// Maximum tuple in the population under the win order; fresh agents rank
// below every tuple.
LeTuple max_tuple(const std::vector<LeState>& agents) {
  LeTuple best{0, 0};
  for (const auto& s : agents) {
    if (wins_tuple(s, best)) {
      best = s.tuple;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("pse delta implements the listed rules in order", "[protocols]") {
  const Pse p;

  SECTION("initial infection, both orientations") {
    auto [x, y] = p.delta(PseState::Leader(0, 0), PseState::Q(), no_rng);
    REQUIRE(x == PseState::Leader(1, 0));
    REQUIRE(y == PseState::A());
    auto [x2, y2] = p.delta(PseState::Q(), PseState::Leader(0, 0), no_rng);
    REQUIRE(x2 == PseState::A());
    REQUIRE(y2 == PseState::Leader(1, 0));
  }
  SECTION("the infection rule shadows the halt rule for L(0,0)") {
    auto [x, y] = p.delta(PseState::Leader(0, 0), PseState::Q(), no_rng);
    REQUIRE(x.kind == PseState::Kind::leader);
  }
  SECTION("epidemic spread") {
    auto [x, y] = p.delta(PseState::A(), PseState::Q(), no_rng);
    REQUIRE(x == PseState::A());
    REQUIRE(y == PseState::A());
  }
  SECTION("leader counts q nodes while cq > ca") {
    auto [x, y] = p.delta(PseState::Leader(3, 2), PseState::Q(), no_rng);
    REQUIRE(x == PseState::Leader(4, 2));
    REQUIRE(y == PseState::Q());
  }
  SECTION("leader counts a nodes while cq > ca, then halts on equality") {
    auto [x, y] = p.delta(PseState::Leader(3, 2), PseState::A(), no_rng);
    REQUIRE(x == PseState::Leader(3, 3));
    REQUIRE(y == PseState::A());
    auto [x2, y2] = p.delta(x, PseState::A(), no_rng);
    REQUIRE(x2 == PseState::Halt(3));
    auto [x3, y3] = p.delta(PseState::Q(), x, no_rng);
    REQUIRE(x3 == PseState::Q());
    REQUIRE(y3 == PseState::Halt(3));
  }
  SECTION("unmatched pairs are identity") {
    auto [x, y] = p.delta(PseState::A(), PseState::A(), no_rng);
    REQUIRE(x == PseState::A());
    REQUIRE(y == PseState::A());
    auto [q1, q2] = p.delta(PseState::Q(), PseState::Q(), no_rng);
    REQUIRE(q1 == PseState::Q());
    auto [h, a] = p.delta(PseState::Halt(5), PseState::Q(), no_rng);
    REQUIRE(h == PseState::Halt(5));
    REQUIRE(a == PseState::Q());
  }
  SECTION("a leader with equal nonzero counters halts on any partner") {
    for (const auto& partner :
         {PseState::Q(), PseState::A(), PseState::Halt(1)}) {
      auto [x, y] = p.delta(PseState::Leader(2, 2), partner, no_rng);
      REQUIRE(x == PseState::Halt(2));
      REQUIRE(y == partner);
    }
  }
}

TEST_CASE("pse estimate reads 2^(cq+1) out of a halted leader", "[protocols]") {
  REQUIRE(pse_estimate(PseState::Halt(0)) == 2);
  REQUIRE(pse_estimate(PseState::Halt(9)) == 1024);
  REQUIRE_THROWS_AS(pse_estimate(PseState::Leader(3, 3)), std::logic_error);
  REQUIRE_THROWS_AS(pse_estimate(PseState::Q()), std::logic_error);
}

TEST_CASE("tuple win order: round first, then random number", "[protocols]") {
  REQUIRE_FALSE(le_tuple_wins({5, 2}, {2, 3}));
  REQUIRE(le_tuple_wins({2, 3}, {5, 2}));
  REQUIRE(le_tuple_wins({5, 2}, {3, 2}));
  REQUIRE_FALSE(le_tuple_wins({4, 1}, {4, 1}));
}

TEST_CASE("tuple win order is a strict total order", "[protocols]") {
  for (std::int32_t r1 = 1; r1 <= 5; ++r1) {
    for (std::int32_t e1 = 1; e1 <= 4; ++e1) {
      for (std::int32_t r2 = 1; r2 <= 5; ++r2) {
        for (std::int32_t e2 = 1; e2 <= 4; ++e2) {
          const LeTuple a{r1, e1};
          const LeTuple b{r2, e2};
          const int outcomes = (le_tuple_wins(a, b) ? 1 : 0) +
                               (le_tuple_wins(b, a) ? 1 : 0) +
                               (a == b ? 1 : 0);
          REQUIRE(outcomes == 1);
        }
      }
    }
  }
}

TEST_CASE("round cap and counter threshold formulas", "[protocols]") {
  REQUIRE(le_round_cap(1024, 2.0, 10) == 10);
  REQUIRE(le_round_cap(16, 1.0, 2) == 4);
  REQUIRE(le_round_cap(64, 2.0, 10) == 6);
  REQUIRE(le_round_cap(2, 1.0, 1024) == 1);  // clamped to >= 1
  REQUIRE_THROWS_AS(le_round_cap(1024, 2.0, 1), std::invalid_argument);
  REQUIRE(le_counter_threshold(1024, 2.0) == 20);
  REQUIRE(le_counter_threshold(64, 2.0) == 12);
  REQUIRE(le_counter_threshold(2, 1.0) == 1);
}

TEST_CASE("le delta implements the listed rules", "[protocols]") {
  const LeParams params{10, 6, 4, false};  // m=10, T=6, R=4
  const LeaderElection p(params);

  SECTION("two fresh agents: initiator leads with a drawn number") {
    ForcedRng rng{7};
    auto [x, y] = p.delta(LeState::Fresh(), LeState::Fresh(), rng);
    REQUIRE(x == LeState::Leader({7, 1}, 0));
    REQUIRE(y == LeState::Follower({7, 1}));
    REQUIRE(rng.consumed);
  }
  SECTION("follower converts fresh, either orientation") {
    const auto f = LeState::Follower({3, 2});
    auto [x, y] = p.delta(f, LeState::Fresh(), no_rng);
    REQUIRE(x == f);
    REQUIRE(y == LeState::Follower({3, 2}));
    auto [x2, y2] = p.delta(LeState::Fresh(), f, no_rng);
    REQUIRE(x2 == LeState::Follower({3, 2}));
    REQUIRE(y2 == f);
  }
  SECTION("leader converts fresh and increments its counter") {
    auto [x, y] = p.delta(LeState::Leader({4, 2}, 1), LeState::Fresh(), no_rng);
    REQUIRE(x == LeState::Leader({4, 2}, 2));
    REQUIRE(y == LeState::Follower({4, 2}));
  }
  SECTION("followers propagate the winning tuple") {
    auto [x, y] = p.delta(LeState::Follower({2, 1}), LeState::Follower({9, 1}),
                          no_rng);
    REQUIRE(x == LeState::Follower({9, 1}));
    REQUIRE(y == LeState::Follower({9, 1}));
  }
  SECTION("leader loses to a follower with a winning tuple") {
    auto [x, y] = p.delta(LeState::Leader({3, 2}, 5), LeState::Follower({8, 2}),
                          no_rng);
    REQUIRE(x == LeState::Follower({8, 2}));
    REQUIRE(y == LeState::Follower({8, 2}));
  }
  SECTION("leader beats a follower: follower adopts, counter increments") {
    auto [x, y] = p.delta(LeState::Leader({8, 2}, 0), LeState::Follower({3, 2}),
                          no_rng);
    REQUIRE(x == LeState::Leader({8, 2}, 1));
    REQUIRE(y == LeState::Follower({8, 2}));
    auto [x2, y2] = p.delta(LeState::Follower({3, 2}),
                            LeState::Leader({8, 2}, 0), no_rng);
    REQUIRE(x2 == LeState::Follower({8, 2}));
    REQUIRE(y2 == LeState::Leader({8, 2}, 1));
  }
  SECTION("same tuple: counter increments, tuples unchanged") {
    auto [x, y] = p.delta(LeState::Leader({5, 1}, 0), LeState::Follower({5, 1}),
                          no_rng);
    REQUIRE(x == LeState::Leader({5, 1}, 1));
    REQUIRE(y == LeState::Follower({5, 1}));
  }
  SECTION("leader-leader: winner survives with counter++, loser follows") {
    auto [x, y] = p.delta(LeState::Leader({2, 2}, 3), LeState::Leader({7, 2}, 0),
                          no_rng);
    REQUIRE(x == LeState::Follower({7, 2}));
    REQUIRE(y == LeState::Leader({7, 2}, 1));
  }
  SECTION("leader-leader tie keeps the initiator") {
    auto [x, y] = p.delta(LeState::Leader({4, 2}, 0), LeState::Leader({4, 2}, 5),
                          no_rng);
    REQUIRE(x == LeState::Leader({4, 2}, 1));
    REQUIRE(y == LeState::Follower({4, 2}));
  }
  SECTION("counter reaching T advances the round with a fresh number") {
    ForcedRng rng{9};
    auto [x, y] = p.delta(LeState::Leader({5, 1}, params.T - 1),
                          LeState::Follower({5, 1}), rng);
    REQUIRE(x == LeState::Leader({9, 2}, 0));
    REQUIRE(y == LeState::Follower({5, 1}));  // pre-advance tuple
  }
  SECTION("at the round cap the counter clamps and the state freezes") {
    ForcedRng rng{9};
    auto [x, y] = p.delta(LeState::Leader({5, params.R}, params.T - 1),
                          LeState::Follower({5, params.R}), rng);
    REQUIRE(x == LeState::Leader({5, params.R}, params.T));
    REQUIRE_FALSE(rng.consumed);
    auto [x2, y2] = p.delta(x, y, rng);
    REQUIRE(x2 == x);  // ineffective at the fixed point
    REQUIRE(y2 == y);
  }
}

TEST_CASE("cap-reentry variant allows one more round after a leader meeting",
          "[protocols]") {
  const LeParams params{10, 3, 2, true};
  const LeaderElection p(params);
  ForcedRng rng{4};
  // a capped leader that survives a leader-leader meeting may advance again
  auto [x, y] = p.delta(LeState::Leader({9, 2}, params.T - 1),
                        LeState::Leader({1, 2}, 0), rng);
  REQUIRE(y == LeState::Follower({9, 2}));
  REQUIRE(x == LeState::Leader({4, 3}, 0));  // round beyond the cap
  REQUIRE(rng.consumed);

  // without the flag the same meeting clamps at the cap
  const LeaderElection frozen({10, 3, 2, false});
  ForcedRng rng2{4};
  auto [x2, y2] = frozen.delta(LeState::Leader({9, 2}, params.T - 1),
                               LeState::Leader({1, 2}, 0), rng2);
  REQUIRE(x2 == LeState::Leader({9, 2}, params.T));
  REQUIRE_FALSE(rng2.consumed);
}

TEST_CASE("le stabilization predicate", "[protocols]") {
  const LeParams params{10, 6, 4, false};
  const LeaderElection p(params);
  const std::int32_t R = params.R;

  const auto stable = std::vector<LeState>{LeState::Leader({4, R}, 2),
                                           LeState::Follower({4, R}),
                                           LeState::Follower({4, R})};
  REQUIRE(p.stabilized(std::span<const LeState>(stable)));

  const auto two_leaders = std::vector<LeState>{LeState::Leader({4, R}, 2),
                                                LeState::Leader({4, R}, 0),
                                                LeState::Follower({4, R})};
  REQUIRE_FALSE(p.stabilized(std::span<const LeState>(two_leaders)));

  const auto below_cap = std::vector<LeState>{LeState::Leader({4, R - 1}, 2),
                                              LeState::Follower({4, R - 1}),
                                              LeState::Follower({4, R - 1})};
  REQUIRE_FALSE(p.stabilized(std::span<const LeState>(below_cap)));

  const auto fresh_left = std::vector<LeState>{LeState::Leader({4, R}, 2),
                                               LeState::Follower({4, R}),
                                               LeState::Fresh()};
  REQUIRE_FALSE(p.stabilized(std::span<const LeState>(fresh_left)));

  const auto mismatched = std::vector<LeState>{LeState::Leader({4, R}, 2),
                                               LeState::Follower({4, R}),
                                               LeState::Follower({3, R})};
  REQUIRE_FALSE(p.stabilized(std::span<const LeState>(mismatched)));
}

TEST_CASE("le stabilization on counts agrees with the direct scan", "[protocols]") {
  const LeParams params{3, 2, 2, false};
  const LeaderElection p(params);
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    Population pop(p, 6);
    for (int s = 0; s < 300; ++s) {
      pop.step(p, rng);
      REQUIRE(p.stabilized(pop.counts()) ==
              p.stabilized(std::span<const LeState>(pop.agents())));
    }
  }
}

TEST_CASE("a configuration that stabilized stays stabilized", "[protocols]") {
  const LeParams params{3, 2, 2, false};
  const LeaderElection p(params);
  Rng rng(77);
  Population pop(p, 8);
  while (!p.stabilized(pop.counts())) {
    pop.step(p, rng);
  }
  const auto frozen = pop.agents();
  for (int s = 0; s < 2000; ++s) {
    pop.step(p, rng);
  }
  // counters may clamp upward but leadership and tuples never move
  REQUIRE(p.stabilized(pop.counts()));
  for (std::size_t i = 0; i < frozen.size(); ++i) {
    REQUIRE(pop.agents()[i].kind == frozen[i].kind);
    REQUIRE(pop.agents()[i].tuple == frozen[i].tuple);
  }
}

TEST_CASE("epidemic and elimination deltas", "[protocols]") {
  const Epidemic ep;
  using E = Epidemic::State;
  ForcedRng rng;
  REQUIRE(ep.delta(E::susceptible, E::infected, rng) ==
          std::pair{E::infected, E::infected});
  REQUIRE(ep.delta(E::infected, E::susceptible, rng) ==
          std::pair{E::infected, E::infected});
  REQUIRE(ep.delta(E::susceptible, E::susceptible, rng) ==
          std::pair{E::susceptible, E::susceptible});
  REQUIRE(ep.delta(E::infected, E::infected, rng) ==
          std::pair{E::infected, E::infected});

  const Elimination el;
  using L = Elimination::State;
  REQUIRE(el.delta(L::leader, L::leader, rng) == std::pair{L::leader, L::follower});
  REQUIRE(el.delta(L::leader, L::follower, rng) ==
          std::pair{L::leader, L::follower});
  REQUIRE(el.delta(L::follower, L::follower, rng) ==
          std::pair{L::follower, L::follower});
}

TEST_CASE("pse run invariants hold along random trajectories", "[protocols]") {
  const Pse p;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    Population pop(p, 48);
    std::int64_t last_infected = 0;
    while (!p.halted(pop.counts())) {
      pop.step(p, rng);
      REQUIRE(pop.counts().leaders + pop.counts().halts == 1);
      REQUIRE(pop.counts().a >= last_infected);
      last_infected = pop.counts().a;
      for (const auto& s : pop.agents()) {
        if (s.kind == PseState::Kind::leader) {
          REQUIRE(s.cq >= s.ca);
        }
      }
    }
  }
}

TEST_CASE("le run invariants hold along random trajectories", "[protocols]") {
  const LeParams params{4, 3, 3, false};
  const LeaderElection p(params);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    Population pop(p, 24);
    std::int64_t last_pool = pop.counts().fresh + pop.counts().leaders;
    LeTuple last_max{0, 0};
    std::vector<bool> was_follower(pop.size(), false);
    for (int s = 0; s < 6000; ++s) {
      pop.step(p, rng);
      const auto pool = pop.counts().fresh + pop.counts().leaders;
      REQUIRE(pool >= 1);
      REQUIRE(pool <= last_pool);
      last_pool = pool;
      const auto best = max_tuple(pop.agents());
      REQUIRE_FALSE(le_tuple_wins(last_max, best));
      last_max = best;
      for (std::size_t i = 0; i < pop.size(); ++i) {
        const auto& a = pop.agents()[i];
        if (was_follower[i]) {
          REQUIRE(a.kind == LeState::Kind::follower);
        }
        if (a.kind == LeState::Kind::follower) {
          was_follower[i] = true;
        }
        if (a.kind == LeState::Kind::leader) {
          REQUIRE(a.counter >= 0);
          REQUIRE(a.counter <= params.T);
          REQUIRE(a.tuple.e >= 1);
          REQUIRE(a.tuple.e <= params.R);
          REQUIRE(a.tuple.r >= 1);
          REQUIRE(a.tuple.r <= params.m);
        }
      }
    }
  }
}

TEST_CASE("elimination leader count is non-increasing and positive", "[protocols]") {
  const Elimination p;
  Rng rng(5);
  Population pop(p, 32);
  std::int64_t last = pop.counts().leaders;
  while (!p.stabilized(pop.counts())) {
    pop.step(p, rng);
    REQUIRE(pop.counts().leaders >= 1);
    REQUIRE(pop.counts().leaders <= last);
    last = pop.counts().leaders;
  }
}
