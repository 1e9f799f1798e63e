#pragma once

#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace llglab {

/// Time-indexed sequence of states with step metadata.
template <class State>
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::string scheme;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }
  const State& back() const { return states.back(); }

  void push(double t, State s) {
    if (!(t >= 0.0)) throw InvalidArgument("trajectory times must be nonnegative");
    if (!times.empty() && !(t > times.back())) throw InvalidArgument("trajectory times must increase strictly");
    times.push_back(t);
    states.push_back(std::move(s));
  }
};

/// Applies fn to every state, keeping the time grid.
template <class State, class Fn>
auto map_states(const Trajectory<State>& traj, Fn&& fn) {
  Trajectory<decltype(fn(traj.states.front()))> out;
  out.scheme = traj.scheme;
  out.times = traj.times;
  out.states.reserve(traj.size());
  for (const auto& s : traj.states) out.states.push_back(fn(s));
  return out;
}

} // namespace llglab
