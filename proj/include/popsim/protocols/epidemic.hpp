#pragma once

#include <cstdint>
#include <string_view>
#include <utility>

namespace popsim {

// One-way epidemic: (a, b) -> (a, a). Agent 0 starts infected; the infected
// count is non-decreasing and the run stabilizes when it reaches n.
class Epidemic {
 public:
  enum class State : std::uint8_t { infected, susceptible };

  struct Counts {
    std::int64_t infected = 0;
    std::int64_t susceptible = 0;
    bool operator==(const Counts&) const = default;
  };

  static constexpr std::string_view name = "epidemic";

  State initial_state(std::size_t index) const {
    return index == 0 ? State::infected : State::susceptible;
  }

  Counts make_empty_counts() const { return {}; }

  void count_add(Counts& c, const State& s) const {
    (s == State::infected ? c.infected : c.susceptible) += 1;
  }

  void count_remove(Counts& c, const State& s) const {
    (s == State::infected ? c.infected : c.susceptible) -= 1;
  }

  template <typename R>
  std::pair<State, State> delta(const State& x, const State& y, R&) const {
    if (x == State::infected && y == State::susceptible) {
      return {State::infected, State::infected};
    }
    if (x == State::susceptible && y == State::infected) {
      return {State::infected, State::infected};
    }
    return {x, y};
  }

  bool halted(const Counts&) const { return false; }
  bool stabilized(const Counts& c) const { return c.susceptible == 0; }
};

}  // namespace popsim
