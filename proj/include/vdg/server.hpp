#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "vdg/errors.hpp"
#include "vdg/io.hpp"
#include "vdg/sim.hpp"

namespace vdg {

class PortInUse : public Error {
 public:
  using Error::Error;
};

/// Fixed-capacity FIFO that discards its oldest element when full. Thread-safe.
template <class T>
class DropOldestQueue {
 public:
  explicit DropOldestQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  /// Returns true if an element was dropped to make room.
  bool push(T value) {
    std::lock_guard lock(mutex_);
    bool dropped = false;
    if (items_.size() == capacity_) {
      items_.pop_front();
      ++dropped_;
      dropped = true;
    }
    items_.push_back(std::move(value));
    return dropped;
  }

  std::optional<T> pop() {
    std::lock_guard lock(mutex_);
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }
  std::size_t dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::deque<T> items_;
  std::size_t dropped_ = 0;
};

/// Wire form of a snapshot: the `state` message.
json state_message(const Snapshot& s);

/// A live simulation driven by wire commands. Not thread-safe; the server owns it on the simulation thread.
class LiveSession {
 public:
  static constexpr double kStateRate = 20.0;

  LiveSession(Scenario scenario, int trial);

  /// Applies one client command and returns the `ack` or `err` reply.
  json command(const json& message);
  /// Advances one control step unless paused. Returns true if a state message is due.
  bool tick();

  bool paused() const { return paused_; }
  const Simulation& simulation() const { return *sim_; }
  Snapshot snapshot() const { return sim_->snapshot(); }

 private:
  void set_param(const std::string& path, const json& value);

  Scenario scenario_;
  int trial_;
  std::unique_ptr<Simulation> sim_;
  bool paused_ = false;
  std::int64_t steps_ = 0;
  std::int64_t decimation_;
};

struct ServeOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  ///< 0 picks a free port
  std::size_t queue_depth = 8;
  int trial = 0;
};

/// Websocket endpoint: one simulation thread stepping at real time, one thread for sockets.
class StateServer {
 public:
  /// Binds immediately; throws PortInUse if the port is taken.
  StateServer(Scenario scenario, ServeOptions options);
  ~StateServer();
  StateServer(const StateServer&) = delete;
  StateServer& operator=(const StateServer&) = delete;

  unsigned short port() const;
  /// Serves until stop() or, with `handle_signals`, SIGINT/SIGTERM.
  void run(bool handle_signals = true);
  /// Safe to call from any thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vdg
