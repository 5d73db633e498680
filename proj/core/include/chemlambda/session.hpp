#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "chemlambda/chemistry.hpp"
#include "chemlambda/engine.hpp"

namespace chemlambda {

/// A live, steerable reduction. Commands and events are JSON objects, see
/// docs/protocol.md. Commands act between cycles; every command that changes
/// the run is recorded as a trace annotation holding the command itself, so
/// replay() can rebuild the trace. Not thread-safe: callers serialize
/// handle() and tick().
class Session {
 public:
  using Sink = std::function<void(const std::string&)>;

  explicit Session(std::string id, Sink sink = {});

  const std::string& id() const { return id_; }
  void set_sink(Sink sink) { sink_ = std::move(sink); }

  /// Parses and executes one command, emitting ack/error and any resulting
  /// snapshot or cycle-report events.
  void handle(std::string_view message);

  /// Runs one cycle when the session is running. Returns whether it still is.
  bool tick();

  bool loaded() const { return state_ != nullptr; }
  bool running() const { return running_; }
  std::size_t cycle_index() const;

  /// JSON text of the current snapshot event.
  std::string snapshot() const;

  /// The run since the last load, with its annotations.
  Trace trace() const;

 private:
  struct State;

  void emit(const std::string& event) const;
  void advance();
  void annotate(const std::string& command_json);

  std::string id_;
  Sink sink_;
  std::shared_ptr<State> state_;
  bool running_ = false;
};

/// Re-runs a session trace from its initial molecule, applying the recorded
/// set-weights, set-policy and reseed annotations at their cycle boundaries.
Trace replay(const Trace& t, const Chemistry& c);

}  // namespace chemlambda
