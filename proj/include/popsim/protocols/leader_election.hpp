#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

namespace popsim {

// A leader's random number r in [1, m] and round e >= 1.
struct LeTuple {
  std::int32_t r = 0;
  std::int32_t e = 0;
  bool operator==(const LeTuple&) const = default;
};

// (r1,e1) wins (r2,e2) iff it is in a later round, or in the same round
// with a larger random number. Strict: a tuple never wins itself.
inline bool le_tuple_wins(const LeTuple& t1, const LeTuple& t2) {
  return t1.e > t2.e || (t1.e == t2.e && t1.r > t2.r);
}

struct LeState {
  enum class Kind : std::uint8_t { fresh, leader, follower };

  Kind kind = Kind::fresh;
  LeTuple tuple{};
  std::int32_t counter = 0;  // leader only
  // Set when a capped leader meets another leader and the cap-reentry
  // variant is enabled; permits one further round increment.
  bool cap_unlocked = false;

  bool operator==(const LeState&) const = default;

  static LeState Fresh() { return {}; }
  static LeState Leader(LeTuple t, std::int32_t counter) {
    return {Kind::leader, t, counter, false};
  }
  static LeState Follower(LeTuple t) { return {Kind::follower, t, 0, false}; }
};

// Counter threshold ceil(b * log2 n): the number of counter increments a
// leader accumulates before moving to the next round.
inline std::int32_t le_counter_threshold(std::size_t n, double b) {
  if (n < 2) {
    throw std::invalid_argument("le_counter_threshold: n must be >= 2");
  }
  if (b < 1.0) {
    throw std::invalid_argument("le_counter_threshold: b must be >= 1");
  }
  const double t = std::ceil(b * std::log2(static_cast<double>(n)));
  return std::max(1, static_cast<std::int32_t>(t));
}

// Round cap ceil((2b*log2 n - log2(b*log2^2 n)) / log2 m), clamped to >= 1.
// Once a leader's round reaches the cap, counter-driven round increments
// freeze, which makes the final configuration silent.
inline std::int32_t le_round_cap(std::size_t n, double b, std::int32_t m) {
  if (m < 2) {
    throw std::invalid_argument("le_round_cap: m must be >= 2");
  }
  if (n < 2) {
    throw std::invalid_argument("le_round_cap: n must be >= 2");
  }
  if (b < 1.0) {
    throw std::invalid_argument("le_round_cap: b must be >= 1");
  }
  const double lg = std::log2(static_cast<double>(n));
  const double cap =
      (2.0 * b * lg - std::log2(b * lg * lg)) / std::log2(static_cast<double>(m));
  return std::max(1, static_cast<std::int32_t>(std::ceil(cap)));
}

struct LeParams {
  std::int32_t m = 2;  // random numbers drawn uniformly from [1, m]
  std::int32_t T = 1;  // counter threshold per round
  std::int32_t R = 1;  // round cap
  // Alternative reading of the cap rule: a capped leader that survives a
  // leader-leader meeting may increment its round once more (rounds can
  // then exceed R). Off by default.
  bool cap_reentry = false;
};

class LeaderElection {
 public:
  using State = LeState;

  // Aggregates sufficient to evaluate the stabilization predicate in O(1):
  // class tallies, a histogram of follower tuples, and the sum of leader
  // tuple keys (which equals the unique leader's key when leaders == 1).
  struct Counts {
    std::int64_t fresh = 0;
    std::int64_t leaders = 0;
    std::int64_t followers = 0;
    std::int64_t leader_key_sum = 0;
    std::vector<std::int32_t> follower_hist;

    bool operator==(const Counts& o) const {
      if (fresh != o.fresh || leaders != o.leaders || followers != o.followers ||
          leader_key_sum != o.leader_key_sum) {
        return false;
      }
      const std::size_t len = std::max(follower_hist.size(), o.follower_hist.size());
      for (std::size_t k = 0; k < len; ++k) {
        const std::int32_t a = k < follower_hist.size() ? follower_hist[k] : 0;
        const std::int32_t b = k < o.follower_hist.size() ? o.follower_hist[k] : 0;
        if (a != b) {
          return false;
        }
      }
      return true;
    }
  };

  static constexpr std::string_view name = "le";

  explicit LeaderElection(LeParams p) : p_(p) {
    if (p_.m < 2 || p_.T < 1 || p_.R < 1) {
      throw std::invalid_argument("LeaderElection: require m >= 2, T >= 1, R >= 1");
    }
  }

  const LeParams& params() const { return p_; }

  State initial_state(std::size_t) const { return State::Fresh(); }

  Counts make_empty_counts() const {
    Counts c;
    c.follower_hist.assign(static_cast<std::size_t>(p_.R + 2) *
                               static_cast<std::size_t>(p_.m + 1),
                           0);
    return c;
  }

  void count_add(Counts& c, const State& s) const {
    switch (s.kind) {
      case LeState::Kind::fresh:
        ++c.fresh;
        break;
      case LeState::Kind::leader:
        ++c.leaders;
        c.leader_key_sum += static_cast<std::int64_t>(key(s.tuple));
        break;
      case LeState::Kind::follower: {
        ++c.followers;
        const std::size_t k = key(s.tuple);
        if (k >= c.follower_hist.size()) {
          c.follower_hist.resize(k + 1, 0);
        }
        ++c.follower_hist[k];
        break;
      }
    }
  }

  void count_remove(Counts& c, const State& s) const {
    switch (s.kind) {
      case LeState::Kind::fresh:
        --c.fresh;
        break;
      case LeState::Kind::leader:
        --c.leaders;
        c.leader_key_sum -= static_cast<std::int64_t>(key(s.tuple));
        break;
      case LeState::Kind::follower:
        --c.followers;
        --c.follower_hist[key(s.tuple)];
        break;
    }
  }

  // Rules, first match applies; symmetric patterns put the initiator in the
  // left slot, and leader-leader ties keep the initiator as leader:
  //   1. (fresh, fresh)  -> (leader(r,1), follower(r,1)),  r drawn from [1,m]
  //   2. (follower, fresh) -> both followers with the follower's tuple
  //   3. (leader, fresh)   -> fresh follows the leader's tuple, counter++
  //   4. (follower, follower) -> both adopt the winning tuple
  //   5. (leader, leader)  -> winner (ties: initiator) stays leader with
  //                           counter++, loser follows the winning tuple
  //   6. (leader, follower), follower tuple wins -> both follow it
  //   7. (leader, follower), leader tuple wins   -> follower adopts, counter++
  //   8. (leader, follower), equal tuples        -> counter++ only
  // A counter that reaches T advances the round: e+1, fresh r, counter 0 --
  // unless e is at the cap R, where the counter clamps at T instead.
  template <typename Rand>
  std::pair<State, State> delta(const State& x, const State& y, Rand& rng) const {
    using K = LeState::Kind;
    const K kx = x.kind;
    const K ky = y.kind;

    if (kx == K::fresh && ky == K::fresh) {
      const LeTuple t{draw_r(rng), 1};
      return {State::Leader(t, 0), State::Follower(t)};
    }
    if (kx == K::follower && ky == K::fresh) {
      return {x, State::Follower(x.tuple)};
    }
    if (kx == K::fresh && ky == K::follower) {
      return {State::Follower(y.tuple), y};
    }
    if (kx == K::leader && ky == K::fresh) {
      return {bump_counter(x, rng), State::Follower(x.tuple)};
    }
    if (kx == K::fresh && ky == K::leader) {
      return {State::Follower(y.tuple), bump_counter(y, rng)};
    }
    if (kx == K::follower && ky == K::follower) {
      const LeTuple w = le_tuple_wins(x.tuple, y.tuple) ? x.tuple : y.tuple;
      return {State::Follower(w), State::Follower(w)};
    }
    if (kx == K::leader && ky == K::leader) {
      if (le_tuple_wins(y.tuple, x.tuple)) {
        return {State::Follower(y.tuple), bump_counter(unlock(y), rng)};
      }
      return {bump_counter(unlock(x), rng), State::Follower(x.tuple)};
    }

    // leader-follower, in either orientation
    const State& l = kx == K::leader ? x : y;
    const State& f = kx == K::leader ? y : x;
    State nl;
    State nf;
    if (le_tuple_wins(f.tuple, l.tuple)) {
      nl = State::Follower(f.tuple);
      nf = f;
    } else if (le_tuple_wins(l.tuple, f.tuple)) {
      nf = State::Follower(l.tuple);
      nl = bump_counter(l, rng);
    } else {
      nf = f;
      nl = bump_counter(l, rng);
    }
    if (kx == K::leader) {
      return {nl, nf};
    }
    return {nf, nl};
  }

  bool halted(const Counts&) const { return false; }

  // Final configuration: a single leader at the round cap, no fresh agents,
  // and every follower holding exactly the leader's tuple. Leadership and
  // tuples can never change from here.
  bool stabilized(const Counts& c) const {
    if (c.fresh != 0 || c.leaders != 1) {
      return false;
    }
    const auto k = static_cast<std::size_t>(c.leader_key_sum);
    const auto e = static_cast<std::int32_t>(k / static_cast<std::size_t>(p_.m + 1));
    if (e < p_.R) {
      return false;
    }
    const std::int64_t matching =
        k < c.follower_hist.size() ? c.follower_hist[k] : 0;
    return matching == c.followers;
  }

  // Same predicate evaluated directly on the agent states.
  bool stabilized(std::span<const LeState> agents) const {
    const LeState* leader = nullptr;
    for (const auto& s : agents) {
      if (s.kind == LeState::Kind::fresh) {
        return false;
      }
      if (s.kind == LeState::Kind::leader) {
        if (leader != nullptr) {
          return false;
        }
        leader = &s;
      }
    }
    if (leader == nullptr || leader->tuple.e < p_.R) {
      return false;
    }
    for (const auto& s : agents) {
      if (s.kind == LeState::Kind::follower && !(s.tuple == leader->tuple)) {
        return false;
      }
    }
    return true;
  }

  // Fresh agents are uninitialized leaders, so they count as leaders.
  std::int64_t leader_count(const Counts& c) const { return c.fresh + c.leaders; }

 private:
  std::size_t key(const LeTuple& t) const {
    return static_cast<std::size_t>(t.e) * static_cast<std::size_t>(p_.m + 1) +
           static_cast<std::size_t>(t.r);
  }

  template <typename Rand>
  std::int32_t draw_r(Rand& rng) const {
    return static_cast<std::int32_t>(rng.uniform_int(1, p_.m));
  }

  State unlock(const State& s) const {
    State out = s;
    if (p_.cap_reentry) {
      out.cap_unlocked = true;
    }
    return out;
  }

  template <typename Rand>
  State bump_counter(State l, Rand& rng) const {
    ++l.counter;
    if (l.counter >= p_.T) {
      const bool may_advance =
          l.tuple.e < p_.R || (p_.cap_reentry && l.cap_unlocked);
      if (may_advance) {
        ++l.tuple.e;
        l.tuple.r = draw_r(rng);
        l.counter = 0;
        l.cap_unlocked = false;
      } else {
        l.counter = p_.T;  // frozen at the cap
      }
    }
    return l;
  }

  LeParams p_;
};

}  // namespace popsim
