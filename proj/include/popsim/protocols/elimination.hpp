#pragma once

#include <cstdint>
#include <string_view>
#include <utility>

namespace popsim {

// Pairwise-elimination baseline: every agent starts as a leader and the
// only effective transition is (l, l) -> (l, f), the initiator surviving.
// Stabilizes, on average in linear parallel time, once one leader remains.
class Elimination {
 public:
  enum class State : std::uint8_t { leader, follower };

  struct Counts {
    std::int64_t leaders = 0;
    std::int64_t followers = 0;
    bool operator==(const Counts&) const = default;
  };

  static constexpr std::string_view name = "elimination";

  State initial_state(std::size_t) const { return State::leader; }

  Counts make_empty_counts() const { return {}; }

  void count_add(Counts& c, const State& s) const {
    (s == State::leader ? c.leaders : c.followers) += 1;
  }

  void count_remove(Counts& c, const State& s) const {
    (s == State::leader ? c.leaders : c.followers) -= 1;
  }

  template <typename R>
  std::pair<State, State> delta(const State& x, const State& y, R&) const {
    if (x == State::leader && y == State::leader) {
      return {State::leader, State::follower};
    }
    return {x, y};
  }

  bool halted(const Counts&) const { return false; }
  bool stabilized(const Counts& c) const { return c.leaders == 1; }
};

}  // namespace popsim
