// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include "prism/ddm/transport.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <string>
#include <system_error>

namespace prism::ddm {

// ---------------------------------------------------------------------------
// In-process

namespace {

class HubEndpoint final : public Endpoint {
 public:
  HubEndpoint(std::shared_ptr<InProcessHub> hub, int rank, int size)
      : hub_(std::move(hub)), rank_(rank), size_(size) {}
  int rank() const override { return rank_; }
  int size() const override { return size_; }
  void send(int to, std::vector<std::uint8_t> bytes) override {
    hub_->post(rank_, to, std::move(bytes));
  }
  std::optional<Envelope> receive(std::chrono::microseconds timeout) override {
    return hub_->take(rank_, timeout);
  }

 private:
  std::shared_ptr<InProcessHub> hub_;
  int rank_;
  int size_;
};

}  // namespace

InProcessHub::InProcessHub(int size, DelayInjection delays)
    : size_(size), delays_(delays), rng_(delays.seed) {
  for (int i = 0; i < size; ++i) {
    auto box = std::make_unique<Mailbox>();
    box->from.resize(static_cast<std::size_t>(size));
    box->last.assign(static_cast<std::size_t>(size), Clock::time_point{});
    boxes_.push_back(std::move(box));
  }
}

std::shared_ptr<InProcessHub> InProcessHub::create(int size, DelayInjection delays) {
  if (size < 1) throw std::invalid_argument("hub needs at least one endpoint");
  return std::shared_ptr<InProcessHub>(new InProcessHub(size, delays));
}

std::unique_ptr<Endpoint> InProcessHub::endpoint(int rank) {
  if (rank < 0 || rank >= size_) throw std::out_of_range("hub rank out of range");
  return std::make_unique<HubEndpoint>(shared_from_this(), rank, size_);
}

void InProcessHub::post(int from, int to, std::vector<std::uint8_t> bytes) {
  if (to < 0 || to >= size_) throw std::out_of_range("send to unknown rank " + std::to_string(to));
  auto now = Clock::now();
  if (delays_.max_delay.count() > 0) {
    std::lock_guard lock(rng_mutex_);
    std::uniform_int_distribution<std::int64_t> dist(0, delays_.max_delay.count());
    now += std::chrono::microseconds(dist(rng_));
  }
  Mailbox& box = *boxes_[static_cast<std::size_t>(to)];
  {
    std::lock_guard lock(box.mutex);
    auto& last = box.last[static_cast<std::size_t>(from)];
    last = std::max(last, now);
    box.from[static_cast<std::size_t>(from)].push_back({last, std::move(bytes)});
  }
  box.cv.notify_all();
}

std::optional<Envelope> InProcessHub::take(int rank, std::chrono::microseconds timeout) {
  Mailbox& box = *boxes_[static_cast<std::size_t>(rank)];
  const auto deadline = Clock::now() + timeout;
  std::unique_lock lock(box.mutex);
  while (true) {
    const auto now = Clock::now();
    auto earliest = Clock::time_point::max();
    for (int n = 0; n < size_; ++n) {
      const int s = (box.cursor + n) % size_;
      auto& q = box.from[static_cast<std::size_t>(s)];
      if (q.empty()) continue;
      if (q.front().deliver_at <= now) {
        Envelope e{s, std::move(q.front().bytes)};
        q.pop_front();
        box.cursor = (s + 1) % size_;
        return e;
      }
      earliest = std::min(earliest, q.front().deliver_at);
    }
    if (now >= deadline) return std::nullopt;
    box.cv.wait_until(lock, std::min(earliest, deadline));
  }
}

// ---------------------------------------------------------------------------
// Sockets

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

class SocketEndpoint final : public Endpoint {
 public:
  SocketEndpoint(int rank, std::vector<int> fds) : rank_(rank), fds_(std::move(fds)) {
    peers_.resize(fds_.size());
    for (int fd : fds_) {
      if (fd < 0) continue;
      const int flags = fcntl(fd, F_GETFL, 0);
      if (flags < 0 || fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) throw_errno("fcntl");
    }
  }
  ~SocketEndpoint() override {
    try {
      flush();
    } catch (...) {
    }
    for (int fd : fds_) {
      if (fd >= 0) ::close(fd);
    }
  }

  int rank() const override { return rank_; }
  int size() const override { return static_cast<int>(fds_.size()); }

  void send(int to, std::vector<std::uint8_t> bytes) override {
    if (to < 0 || to >= size() || fds_[static_cast<std::size_t>(to)] < 0) {
      throw std::out_of_range("send to unknown rank " + std::to_string(to));
    }
    std::vector<std::uint8_t> frame(4 + bytes.size());
    const auto n = static_cast<std::uint32_t>(bytes.size());
    for (int i = 0; i < 4; ++i) frame[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(n >> (8 * i));
    std::copy(bytes.begin(), bytes.end(), frame.begin() + 4);
    Peer& p = peers_[static_cast<std::size_t>(to)];
    p.outbox.push_back(std::move(frame));
    write_some(to);
  }

  std::optional<Envelope> receive(std::chrono::microseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    bool polled = false;
    while (true) {
      if (!ready_.empty()) {
        Envelope e = std::move(ready_.front());
        ready_.pop_front();
        return e;
      }
      const auto left = deadline - std::chrono::steady_clock::now();
      if (polled && left.count() <= 0) return std::nullopt;
      const auto ms = std::chrono::ceil<std::chrono::milliseconds>(std::max(left, decltype(left){0}));
      pump(static_cast<int>(ms.count()));
      polled = true;
    }
  }

  void flush() override {
    while (std::any_of(peers_.begin(), peers_.end(), [](const Peer& p) { return !p.outbox.empty() && !p.closed; })) {
      pump(50);
    }
  }

 private:
  struct Peer {
    std::deque<std::vector<std::uint8_t>> outbox;
    std::size_t sent = 0;  // bytes of outbox.front() already written
    std::vector<std::uint8_t> inbuf;
    bool closed = false;
  };

  void write_some(int to) {
    Peer& p = peers_[static_cast<std::size_t>(to)];
    const int fd = fds_[static_cast<std::size_t>(to)];
    while (!p.outbox.empty() && !p.closed) {
      const auto& f = p.outbox.front();
      const ssize_t w = ::send(fd, f.data() + p.sent, f.size() - p.sent, MSG_NOSIGNAL);
      if (w < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK) return;
        if (errno == EINTR) continue;
        if (errno == EPIPE || errno == ECONNRESET) {
          p.closed = true;
          return;
        }
        throw_errno("send");
      }
      p.sent += static_cast<std::size_t>(w);
      if (p.sent == f.size()) {
        p.outbox.pop_front();
        p.sent = 0;
      }
    }
  }

  void read_some(int from) {
    Peer& p = peers_[static_cast<std::size_t>(from)];
    const int fd = fds_[static_cast<std::size_t>(from)];
    std::uint8_t buf[1 << 16];
    while (true) {
      const ssize_t r = ::recv(fd, buf, sizeof buf, 0);
      if (r < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK) break;
        if (errno == EINTR) continue;
        if (errno == ECONNRESET) {
          p.closed = true;
          break;
        }
        throw_errno("recv");
      }
      if (r == 0) {
        p.closed = true;
        break;
      }
      p.inbuf.insert(p.inbuf.end(), buf, buf + r);
    }
    std::size_t off = 0;
    while (p.inbuf.size() - off >= 4) {
      std::uint32_t n = 0;
      for (int i = 0; i < 4; ++i) n |= std::uint32_t{p.inbuf[off + static_cast<std::size_t>(i)]} << (8 * i);
      if (p.inbuf.size() - off - 4 < n) break;
      ready_.push_back({from, std::vector<std::uint8_t>(p.inbuf.begin() + static_cast<std::ptrdiff_t>(off + 4),
                                                        p.inbuf.begin() + static_cast<std::ptrdiff_t>(off + 4 + n))});
      off += 4 + n;
    }
    p.inbuf.erase(p.inbuf.begin(), p.inbuf.begin() + static_cast<std::ptrdiff_t>(off));
  }

  void pump(int timeout_ms) {
    std::vector<pollfd> pfds;
    std::vector<int> ranks;
    for (std::size_t i = 0; i < fds_.size(); ++i) {
      if (fds_[i] < 0 || peers_[i].closed) continue;
      short events = POLLIN;
      if (!peers_[i].outbox.empty()) events |= POLLOUT;
      pfds.push_back({fds_[i], events, 0});
      ranks.push_back(static_cast<int>(i));
    }
    if (pfds.empty()) return;
    const int n = ::poll(pfds.data(), pfds.size(), timeout_ms);
    if (n < 0) {
      if (errno == EINTR) return;
      throw_errno("poll");
    }
    for (std::size_t i = 0; i < pfds.size(); ++i) {
      if (pfds[i].revents & POLLOUT) write_some(ranks[i]);
      if (pfds[i].revents & (POLLIN | POLLHUP | POLLERR)) read_some(ranks[i]);
    }
  }

  int rank_;
  std::vector<int> fds_;
  std::vector<Peer> peers_;
  std::deque<Envelope> ready_;
};

}  // namespace

SocketMesh::SocketMesh(int size) : size_(size) {
  if (size < 1) throw std::invalid_argument("socket mesh needs at least one endpoint");
  fds_.assign(static_cast<std::size_t>(size), std::vector<int>(static_cast<std::size_t>(size), -1));
  for (int i = 0; i < size; ++i) {
    for (int j = i + 1; j < size; ++j) {
      int sv[2];
      if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) throw_errno("socketpair");
      fds_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = sv[0];
      fds_[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = sv[1];
    }
  }
}

SocketMesh::~SocketMesh() {
  for (auto& row : fds_) {
    for (int fd : row) {
      if (fd >= 0) ::close(fd);
    }
  }
}

std::unique_ptr<Endpoint> SocketMesh::endpoint(int rank) {
  if (rank < 0 || rank >= size_) throw std::out_of_range("mesh rank out of range");
  std::vector<int> mine = fds_[static_cast<std::size_t>(rank)];
  for (int i = 0; i < size_; ++i) {
    for (int j = 0; j < size_; ++j) {
      int& fd = fds_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (i != rank && fd >= 0) ::close(fd);
      fd = -1;
    }
  }
  return std::make_unique<SocketEndpoint>(rank, std::move(mine));
}

}  // namespace prism::ddm
