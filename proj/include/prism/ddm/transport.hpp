// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <vector>

namespace prism::ddm {

struct Envelope {
  int from = 0;
  std::vector<std::uint8_t> bytes;
};

/// One participant's view of a message-passing group. Rank 0 is the
/// coordinator, ranks 1..N the workers. Delivery is FIFO per (sender,
/// receiver) pair; no order holds across senders.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual int rank() const = 0;
  virtual int size() const = 0;
  virtual void send(int to, std::vector<std::uint8_t> bytes) = 0;
  /// Waits up to `timeout` for a message.
  virtual std::optional<Envelope> receive(std::chrono::microseconds timeout) = 0;
  /// Blocks until everything queued by send() has been handed to the peer.
  virtual void flush() {}
};

/// Random per-message delivery delay for schedule stress tests.
struct DelayInjection {
  std::uint64_t seed = 0;
  std::chrono::microseconds max_delay{0};
};

/// Shared mailboxes for endpoints living in one process.
class InProcessHub : public std::enable_shared_from_this<InProcessHub> {
 public:
  static std::shared_ptr<InProcessHub> create(int size, DelayInjection delays = {});
  std::unique_ptr<Endpoint> endpoint(int rank);

  void post(int from, int to, std::vector<std::uint8_t> bytes);
  std::optional<Envelope> take(int rank, std::chrono::microseconds timeout);

 private:
  using Clock = std::chrono::steady_clock;
  struct Item {
    Clock::time_point deliver_at;
    std::vector<std::uint8_t> bytes;
  };
  struct Mailbox {
    std::mutex mutex;
    std::condition_variable cv;
    std::vector<std::deque<Item>> from;  // per sender, FIFO
    std::vector<Clock::time_point> last;  // last deliver_at per sender
    int cursor = 0;
  };

  InProcessHub(int size, DelayInjection delays);

  int size_;
  DelayInjection delays_;
  std::vector<std::unique_ptr<Mailbox>> boxes_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

/// Full mesh of AF_UNIX stream socket pairs, created before forking so every
/// process inherits its ends. Frames are a little-endian u32 length followed
/// by the payload.
class SocketMesh {
 public:
  explicit SocketMesh(int size);
  ~SocketMesh();
  SocketMesh(const SocketMesh&) = delete;
  SocketMesh& operator=(const SocketMesh&) = delete;

  /// Endpoint for `rank`; closes every descriptor that rank does not use.
  /// Call once per process after fork().
  std::unique_ptr<Endpoint> endpoint(int rank);

 private:
  int size_;
  // fds_[i][j]: descriptor rank i uses to talk to rank j (-1 on the diagonal).
  std::vector<std::vector<int>> fds_;
};

}  // namespace prism::ddm
