#pragma once

#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <utility>

namespace popsim {

// Agent state for the size-estimation protocol. A unique leader counts its
// meetings with uninfected (q) and infected (a) nodes in two counters and
// halts once they meet; the halted state keeps cq so the estimate can be
// read out afterwards.
struct PseState {
  enum class Kind : std::uint8_t { q, a, leader, halt };

  Kind kind = Kind::q;
  std::int32_t cq = 0;  // leader and halt
  std::int32_t ca = 0;  // leader only

  bool operator==(const PseState&) const = default;

  static PseState Q() { return {Kind::q, 0, 0}; }
  static PseState A() { return {Kind::a, 0, 0}; }
  static PseState Leader(std::int32_t cq, std::int32_t ca) {
    return {Kind::leader, cq, ca};
  }
  static PseState Halt(std::int32_t cq) { return {Kind::halt, cq, 0}; }
};

// Population-size upper bound read out of a halted leader: 2^(cq+1).
inline std::int64_t pse_estimate(const PseState& s) {
  if (s.kind != PseState::Kind::halt) {
    throw std::logic_error("pse_estimate requires a halted leader state");
  }
  if (s.cq < 0 || s.cq >= 62) {
    throw std::overflow_error("pse_estimate: counter out of range");
  }
  return std::int64_t{1} << (s.cq + 1);
}

class Pse {
 public:
  using State = PseState;

  struct Counts {
    std::int64_t q = 0;
    std::int64_t a = 0;
    std::int64_t leaders = 0;
    std::int64_t halts = 0;
    bool operator==(const Counts&) const = default;
  };

  static constexpr std::string_view name = "pse";

  State initial_state(std::size_t index) const {
    return index == 0 ? State::Leader(0, 0) : State::Q();
  }

  Counts make_empty_counts() const { return {}; }

  void count_add(Counts& c, const State& s) const { bucket(c, s) += 1; }
  void count_remove(Counts& c, const State& s) const { bucket(c, s) -= 1; }

  // Rules, first match applies; each rule is tried against both
  // orientations of the drawn pair:
  //   1. (L(0,0), q)   -> (L(1,0), a)              initial infection
  //   2. (a, q)        -> (a, a)                   epidemic spread
  //   3. (L(cq,ca), q) -> (L(cq+1,ca), q)          if cq > ca
  //   4. (L(cq,ca), a) -> (L(cq,ca+1), a)          if cq > ca
  //   5. (L(cq,ca), *) -> (halt(cq), *)            if cq == ca
  template <typename R>
  std::pair<State, State> delta(const State& x, const State& y, R&) const {
    using K = PseState::Kind;
    if (x.kind == K::leader && x.cq == 0 && x.ca == 0 && y.kind == K::q) {
      return {State::Leader(1, 0), State::A()};
    }
    if (y.kind == K::leader && y.cq == 0 && y.ca == 0 && x.kind == K::q) {
      return {State::A(), State::Leader(1, 0)};
    }
    if (x.kind == K::a && y.kind == K::q) {
      return {State::A(), State::A()};
    }
    if (x.kind == K::q && y.kind == K::a) {
      return {State::A(), State::A()};
    }
    if (x.kind == K::leader && x.cq > x.ca && y.kind == K::q) {
      return {State::Leader(x.cq + 1, x.ca), y};
    }
    if (y.kind == K::leader && y.cq > y.ca && x.kind == K::q) {
      return {x, State::Leader(y.cq + 1, y.ca)};
    }
    if (x.kind == K::leader && x.cq > x.ca && y.kind == K::a) {
      return {State::Leader(x.cq, x.ca + 1), y};
    }
    if (y.kind == K::leader && y.cq > y.ca && x.kind == K::a) {
      return {x, State::Leader(y.cq, y.ca + 1)};
    }
    if (x.kind == K::leader && x.cq == x.ca) {
      return {State::Halt(x.cq), y};
    }
    if (y.kind == K::leader && y.cq == y.ca) {
      return {x, State::Halt(y.cq)};
    }
    return {x, y};
  }

  bool halted(const Counts& c) const { return c.halts > 0; }
  bool stabilized(const Counts&) const { return false; }

 private:
  static std::int64_t& bucket(Counts& c, const State& s) {
    switch (s.kind) {
      case PseState::Kind::q:
        return c.q;
      case PseState::Kind::a:
        return c.a;
      case PseState::Kind::leader:
        return c.leaders;
      case PseState::Kind::halt:
        return c.halts;
    }
    return c.q;  // unreachable
  }
};

}  // namespace popsim
