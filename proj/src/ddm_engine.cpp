// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include "prism/ddm/engine.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <deque>
#include <future>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

namespace prism::ddm {

std::uint32_t Registry::owner(std::int32_t domain) const {
  if (domain < 0 || static_cast<std::size_t>(domain) >= owners_.size()) {
    throw ProtocolError("record routed to unknown sub-domain " + std::to_string(domain));
  }
  return owners_[static_cast<std::size_t>(domain)];
}

bool Registry::apply(const OwnershipUpdate& update) {
  if (update.version <= version_) return false;
  if (update.domain >= owners_.size()) {
    throw ProtocolError("ownership update for unknown sub-domain " + std::to_string(update.domain));
  }
  owners_[update.domain] = update.owner;
  version_ = update.version;
  return true;
}

std::vector<std::uint32_t> assign_homes(const Partition& part, int workers) {
  if (workers < 1) throw ConfigError("need at least one worker");
  std::vector<std::uint32_t> order(part.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return part.domains[a].footprint_bytes > part.domains[b].footprint_bytes;
  });
  std::vector<std::uint32_t> owners(part.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    owners[order[i]] = static_cast<std::uint32_t>(i % static_cast<std::size_t>(workers));
  }
  return owners;
}

RouteTarget route(const BoundaryRayRecord& record, const Registry& registry) {
  if (record.destination == kExterior) return {true, 0};
  return {false, registry.owner(record.destination)};
}

namespace {

constexpr int kCoordinator = 0;
int rank_of(std::uint32_t worker) { return static_cast<int>(worker) + 1; }

RecordId id_of(const BoundaryRayRecord& r) { return {r.pixel, r.path_key}; }
RecordId id_of(const ShadowProbeRecord& p) { return {p.pixel, p.path_key}; }

struct RunContext {
  const Scene& scene;
  const Partition& part;
  const DdmConfig& config;
  const RenderSettings& settings;
  std::vector<std::uint32_t> homes;
  std::uint32_t max_crossings = 0;
};

// ---------------------------------------------------------------------------
// Worker

class Worker {
 public:
  Worker(const RunContext& ctx, Endpoint& ep, std::uint32_t index)
      : ctx_(ctx), ep_(ep), index_(index), registry_(ctx.homes),
        queues_(ctx.part.size()), loaded_(ctx.part.size()) {}

  void run() {
    try {
      handshake();
      loop();
    } catch (const std::exception& e) {
      Status s;
      s.worker = index_;
      s.error = e.what();
      s.final = true;
      send(kCoordinator, s);
      ep_.flush();
      throw;
    }
  }

 private:
  struct Queue {
    std::deque<BoundaryRayRecord> rays;
    std::deque<ShadowProbeRecord> probes;
    std::size_t size() const { return rays.size() + probes.size(); }
  };

  void send(int to, const Message& m) {
    auto bytes = encode(m, index_);
    ++counters_.messages_sent;
    counters_.bytes_sent += bytes.size();
    ep_.send(to, std::move(bytes));
  }

  void handshake() {
    while (true) {
      auto env = ep_.receive(ctx_.config.watchdog);
      if (!env) throw ProtocolError("worker: no handshake from coordinator");
      Decoded d = decode(env->bytes, ctx_.scene.grid());
      const auto* h = std::get_if<Handshake>(&d.message);
      if (!h) throw ProtocolError("worker: expected handshake");
      if (h->version != kProtocolVersion || !(h->grid == ctx_.scene.grid()) ||
          h->domains != ctx_.part.size()) {
        throw ProtocolError("worker: handshake mismatch");
      }
      send(kCoordinator, Handshake{kProtocolVersion, ctx_.scene.grid(),
                                   static_cast<std::uint32_t>(ctx_.part.size())});
      return;
    }
  }

  bool owns(std::uint32_t d) const { return registry_.owners()[d] == index_; }
  std::size_t footprint(std::uint32_t d) const { return ctx_.part.domains[d].footprint_bytes; }

  void loop() {
    // Preload home sub-domains that fit.
    std::vector<std::uint32_t> mine;
    for (std::uint32_t d = 0; d < ctx_.part.size(); ++d) {
      if (owns(d)) mine.push_back(d);
    }
    std::stable_sort(mine.begin(), mine.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return footprint(a) > footprint(b); });
    for (auto d : mine) {
      if (resident_ + footprint(d) <= ctx_.config.budget_bytes) start_load(d);
    }

    auto last_message = std::chrono::steady_clock::now();
    while (!terminate_) {
      while (auto env = ep_.receive(std::chrono::microseconds(0))) {
        handle(*env);
        last_message = std::chrono::steady_clock::now();
      }
      if (terminate_) break;
      poll_loads(false);
      schedule();

      if (auto d = pick()) {
        process(*d);
        report(false);
        continue;
      }
      const bool idle = total_pending() == 0;
      if (!created_.empty() || !completed_.empty() || (idle && !idle_reported_)) {
        report(idle);
      }
      ep_.flush();
      const auto wait = loading_.empty() ? std::chrono::microseconds(20000)
                                         : std::chrono::microseconds(500);
      if (auto env = ep_.receive(wait)) {
        handle(*env);
        last_message = std::chrono::steady_clock::now();
      } else {
        // Re-announce idleness so the coordinator can retry a migration.
        idle_reported_ = false;
        if (std::chrono::steady_clock::now() - last_message > ctx_.config.watchdog) {
          throw ProtocolError("worker " + std::to_string(index_) + ": watchdog expired");
        }
      }
    }
    poll_loads(true);
    Status s;
    s.worker = index_;
    s.final = true;
    s.registry_version = registry_.version();
    s.counters = counters_;
    send(kCoordinator, s);
    ep_.flush();
  }

  std::size_t total_pending() const {
    std::size_t n = 0;
    for (const auto& q : queues_) n += q.size();
    return n;
  }

  void handle(const Envelope& env) {
    Decoded d = decode(env.bytes, ctx_.scene.grid());
    std::visit(
        [&](auto&& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, BoundaryRayRecord>) {
            accept(std::move(m), true);
          } else if constexpr (std::is_same_v<T, ShadowProbeRecord>) {
            accept(std::move(m), true);
          } else if constexpr (std::is_same_v<T, OwnershipUpdate>) {
            on_update(m);
          } else if constexpr (std::is_same_v<T, Terminate>) {
            terminate_ = true;
          } else {
            throw ProtocolError("worker: unexpected message kind " +
                                std::to_string(static_cast<int>(kind_of(Message(m)))));
          }
        },
        std::move(d.message));
  }

  template <typename Rec>
  void accept(Rec&& rec, bool from_network) {
    const std::uint32_t owner = registry_.owner(rec.destination);
    if (owner == index_) {
      auto& q = queues_[static_cast<std::size_t>(rec.destination)];
      if constexpr (std::is_same_v<std::decay_t<Rec>, BoundaryRayRecord>) {
        q.rays.push_back(std::forward<Rec>(rec));
      } else {
        q.probes.push_back(std::forward<Rec>(rec));
      }
      idle_reported_ = false;
      return;
    }
    if (from_network) ++counters_.forwarded;
    send(rank_of(owner), Message(std::forward<Rec>(rec)));
  }

  void on_update(const OwnershipUpdate& u) {
    if (!registry_.apply(u)) return;
    if (u.owner == index_) return;
    // Lost the sub-domain: drop its geometry and pass queued work on.
    evict(u.domain);
    auto& q = queues_[u.domain];
    while (!q.rays.empty()) {
      ++counters_.forwarded;
      send(rank_of(u.owner), Message(std::move(q.rays.front())));
      q.rays.pop_front();
    }
    while (!q.probes.empty()) {
      ++counters_.forwarded;
      send(rank_of(u.owner), Message(std::move(q.probes.front())));
      q.probes.pop_front();
    }
  }

  void start_load(std::uint32_t d) {
    if (resident_ + footprint(d) > ctx_.config.budget_bytes) ++counters_.budget_violations;
    resident_ += footprint(d);
    counters_.peak_loaded_bytes = std::max<std::uint64_t>(counters_.peak_loaded_bytes, resident_);
    const Scene& scene = ctx_.scene;
    const SubDomain& sd = ctx_.part.domains[d];
    loading_.emplace(d, std::async(std::launch::async,
                                   [&scene, &sd] { return load_subdomain(scene, sd); }));
  }

  void poll_loads(bool wait) {
    for (auto it = loading_.begin(); it != loading_.end();) {
      if (wait || it->second.wait_for(std::chrono::seconds(0)) == std::future_status::ready) {
        auto sd = std::make_unique<LoadedSubDomain>(it->second.get());
        if (sd->bvh.footprint_bytes() > footprint(it->first)) ++counters_.budget_violations;
        ++counters_.loads;
        if (owns(it->first)) {
          loaded_[it->first] = std::move(sd);
        } else {
          resident_ -= footprint(it->first);
          ++counters_.unloads;
        }
        it = loading_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void evict(std::uint32_t d) {
    if (loaded_[d]) {
      loaded_[d].reset();
      resident_ -= footprint(d);
      ++counters_.unloads;
    }
    // A pending load for a lost sub-domain is discarded when it completes.
  }

  // Load/unload decisions for owned sub-domains with queued work.
  void schedule() {
    for (int guard = 0; guard < 64; ++guard) {
      std::optional<std::uint32_t> want;
      for (std::uint32_t d = 0; d < ctx_.part.size(); ++d) {
        if (!owns(d) || loaded_[d] || loading_.count(d) || queues_[d].size() == 0) continue;
        if (!want || queues_[d].size() > queues_[*want].size()) want = d;
      }
      if (!want) return;
      if (resident_ + footprint(*want) <= ctx_.config.budget_bytes) {
        start_load(*want);
        continue;
      }
      std::optional<std::uint32_t> victim;
      bool loaded_work = !loading_.empty();
      for (std::uint32_t d = 0; d < ctx_.part.size(); ++d) {
        if (!loaded_[d]) continue;
        if (queues_[d].size() > 0) loaded_work = true;
        if (!victim || queues_[d].size() < queues_[*victim].size()) victim = d;
      }
      if (!victim) return;
      const bool hysteresis = queues_[*victim].size() < ctx_.config.unload_low &&
                              queues_[*want].size() > ctx_.config.unload_high;
      if (!hysteresis && loaded_work) return;
      evict(*victim);
    }
  }

  std::optional<std::uint32_t> pick() const {
    std::optional<std::uint32_t> best;
    for (std::uint32_t d = 0; d < ctx_.part.size(); ++d) {
      if (!loaded_[d] || queues_[d].size() == 0) continue;
      if (!best || queues_[d].size() > queues_[*best].size()) best = d;
    }
    return best;
  }

  void process(std::uint32_t d) {
    const LoadedSubDomain& sd = *loaded_[d];
    auto& q = queues_[d];
    const ShadowMode mode{ctx_.config.approximate_shadows};
    for (std::size_t n = 0; n < ctx_.config.batch_size && q.size() > 0; ++n) {
      if (!q.probes.empty()) {
        ShadowProbeRecord p = std::move(q.probes.front());
        q.probes.pop_front();
        if (p.crossings > ctx_.max_crossings) {
          ++counters_.dropped;
          completed_.push_back(id_of(p));
          continue;
        }
        ++counters_.probes_traced;
        ProbeResult r = resolve_probe(ctx_.part, sd, p);
        if (r.kind == ProbeResult::Kind::forwarded) {
          ++counters_.probe_crossings;
          accept(std::move(*r.next), false);
          continue;
        }
        const bool visible = r.kind == ProbeResult::Kind::visible;
        send(kCoordinator, ShadowAnswer{p.pixel, p.path_key, visible,
                                        visible ? std::move(p.contribution) : Spectrum(ctx_.scene.grid())});
        completed_.push_back(id_of(p));
        continue;
      }
      BoundaryRayRecord rec = std::move(q.rays.front());
      q.rays.pop_front();
      if (rec.crossings > ctx_.max_crossings) {
        ++counters_.dropped;
        completed_.push_back(id_of(rec));
        continue;
      }
      ++counters_.rays_traced;
      TraceOutcome out = trace_in_subdomain(ctx_.scene, ctx_.part, sd, rec, ctx_.settings, mode);
      for (auto& c : out.contributions) send(kCoordinator, std::move(c));
      for (auto& p : out.probes) {
        created_.push_back(id_of(p));
        ++counters_.probe_crossings;
        accept(std::move(p), false);
      }
      for (auto& child : out.local) {
        created_.push_back(id_of(child));
        accept(std::move(child), false);
      }
      if (out.crossing) {
        ++counters_.crossings;
        accept(std::move(*out.crossing), false);
      } else {
        completed_.push_back(id_of(rec));
      }
    }
  }

  void report(bool idle) {
    Status s;
    s.worker = index_;
    s.idle = idle;
    s.registry_version = registry_.version();
    s.created = std::move(created_);
    s.completed = std::move(completed_);
    created_.clear();
    completed_.clear();
    for (std::uint32_t d = 0; d < ctx_.part.size(); ++d) {
      if (!owns(d)) continue;
      s.backlog.push_back({d, static_cast<std::uint32_t>(queues_[d].size()), loaded_[d] != nullptr});
    }
    s.counters = counters_;
    send(kCoordinator, s);
    idle_reported_ = idle;
  }

  const RunContext& ctx_;
  Endpoint& ep_;
  std::uint32_t index_;
  Registry registry_;
  std::vector<Queue> queues_;
  std::vector<std::unique_ptr<LoadedSubDomain>> loaded_;
  std::map<std::uint32_t, std::future<LoadedSubDomain>> loading_;
  std::size_t resident_ = 0;
  std::vector<RecordId> created_;
  std::vector<RecordId> completed_;
  WorkerCounters counters_;
  bool terminate_ = false;
  bool idle_reported_ = false;
};

// ---------------------------------------------------------------------------
// Coordinator and gatherer

class Coordinator {
 public:
  Coordinator(const RunContext& ctx, Endpoint& ep)
      : ctx_(ctx), ep_(ep), registry_(ctx.homes), workers_(ctx.config.workers),
        backlog_(ctx.part.size()), migrating_(ctx.part.size(), 0),
        contributions_(ctx.scene.camera().pixel_count()) {}

  SpectralImage run(RunStats& stats) {
    try {
      handshake();
      emit_primaries();
      gather();
    } catch (...) {
      broadcast_terminate();
      throw;
    }
    broadcast_terminate();
    collect_finals();
    if (!error_.empty()) throw std::runtime_error("worker failed: " + error_);

    stats.ledger = ledger_;
    stats.primary_rays = primaries_;
    stats.contributions = contribution_count_;
    stats.duplicate_contributions = duplicate_contributions_;
    stats.migrations = migrations_;
    stats.workers = finals_;
    for (const auto& c : finals_) add(stats.total, c);
    return assemble();
  }

 private:
  struct Backlog {
    std::uint32_t pending = 0;
    bool loaded = false;
  };

  static void add(WorkerCounters& a, const WorkerCounters& b) {
    a.rays_traced += b.rays_traced;
    a.probes_traced += b.probes_traced;
    a.crossings += b.crossings;
    a.probe_crossings += b.probe_crossings;
    a.loads += b.loads;
    a.unloads += b.unloads;
    a.forwarded += b.forwarded;
    a.dropped += b.dropped;
    a.peak_loaded_bytes = std::max(a.peak_loaded_bytes, b.peak_loaded_bytes);
    a.budget_violations += b.budget_violations;
    a.messages_sent += b.messages_sent;
    a.bytes_sent += b.bytes_sent;
  }

  void send(int to, const Message& m) { ep_.send(to, encode(m, 0)); }

  void handshake() {
    const Handshake h{kProtocolVersion, ctx_.scene.grid(), static_cast<std::uint32_t>(ctx_.part.size())};
    for (int w = 0; w < workers_; ++w) send(rank_of(static_cast<std::uint32_t>(w)), h);
    int acks = 0;
    while (acks < workers_) {
      auto env = ep_.receive(std::chrono::duration_cast<std::chrono::microseconds>(ctx_.config.watchdog));
      if (!env) throw ProtocolError("coordinator: handshake timed out");
      Decoded d = decode(env->bytes, ctx_.scene.grid());
      if (const auto* s = std::get_if<Status>(&d.message); s && !s->error.empty()) {
        throw std::runtime_error("worker failed: " + s->error);
      }
      const auto* reply = std::get_if<Handshake>(&d.message);
      if (!reply) {
        // A worker that already finished its handshake may report early.
        early_.push_back(std::move(*env));
        continue;
      }
      if (reply->version != kProtocolVersion || !(reply->grid == ctx_.scene.grid())) {
        throw ProtocolError("coordinator: bad handshake reply");
      }
      ++acks;
    }
  }

  void create(const RecordId& id) {
    if (!created_seen_.insert(id).second) ++ledger_.duplicate_ids;
    if (id.is_probe()) {
      ++ledger_.probes_created;
    } else {
      ++ledger_.rays_created;
    }
    if (++balance_[id] == 0) balance_.erase(id);
  }

  void complete(const RecordId& id) {
    if (!completed_seen_.insert(id).second) ++ledger_.duplicate_ids;
    if (id.is_probe()) {
      ++ledger_.probes_completed;
    } else {
      ++ledger_.rays_completed;
    }
    if (--balance_[id] == 0) balance_.erase(id);
  }

  void emit_primaries() {
    const Camera& cam = ctx_.scene.camera();
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        const Ray r = generate_primary_ray(cam, ctx_.scene.grid(), x, y);
        ++primaries_;
        const RecordId id{r.pixel, r.path_key};
        const SlabSpan span = slab_span(ctx_.part.box, r.origin, reciprocal(r.direction));
        const double t0 = std::max(span.t_enter, r.t_min);
        create(id);
        if (!span.hit || span.t_exit < t0 || t0 > r.t_max) {
          complete(id);
          continue;
        }
        const auto dest = static_cast<std::int32_t>(ctx_.part.locate(r.origin + r.direction * t0));
        BoundaryRayRecord rec = BoundaryRayRecord::from_ray(r, dest);
        rec.t_entry = t0;
        send(rank_of(registry_.owner(dest)), rec);
      }
    }
  }

  void gather() {
    auto last = std::chrono::steady_clock::now();
    while (!balance_.empty()) {
      std::optional<Envelope> env;
      if (!early_.empty()) {
        env = std::move(early_.front());
        early_.pop_front();
      } else {
        env = ep_.receive(std::chrono::microseconds(50000));
      }
      if (!env) {
        if (std::chrono::steady_clock::now() - last > ctx_.config.watchdog) {
          throw ProtocolError("coordinator: watchdog expired with " +
                              std::to_string(balance_.size()) + " records outstanding");
        }
        continue;
      }
      last = std::chrono::steady_clock::now();
      Decoded d = decode(env->bytes, ctx_.scene.grid());
      std::visit(
          [&](auto&& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Contribution>) {
              store(m.pixel, m.path_key, std::move(m.value));
            } else if constexpr (std::is_same_v<T, ShadowAnswer>) {
              if (m.visible) store(m.pixel, m.path_key, std::move(m.contribution));
            } else if constexpr (std::is_same_v<T, Status>) {
              on_status(m);
            } else {
              throw ProtocolError("coordinator: unexpected message kind");
            }
          },
          std::move(d.message));
      if (!error_.empty()) throw std::runtime_error("worker failed: " + error_);
    }
  }

  void store(std::uint32_t pixel, std::uint64_t key, Spectrum value) {
    if (pixel >= contributions_.size()) throw ProtocolError("contribution for unknown pixel");
    if (!contribution_seen_.insert(RecordId{pixel, key}).second) ++duplicate_contributions_;
    ++contribution_count_;
    contributions_[pixel].emplace_back(key, std::move(value));
  }

  void on_status(const Status& s) {
    if (!s.error.empty()) {
      error_ = s.error;
      return;
    }
    if (s.final) {
      finals_by_worker_[s.worker] = s.counters;
      return;
    }
    // Creations first: a batch may create and complete the same record.
    for (const auto& id : s.created) create(id);
    for (const auto& id : s.completed) complete(id);
    for (const auto& b : s.backlog) {
      if (registry_.owner(static_cast<std::int32_t>(b.domain)) != s.worker) continue;
      backlog_[b.domain] = {b.pending, b.loaded};
      if (migrating_[b.domain] && s.registry_version >= migrating_[b.domain]) migrating_[b.domain] = 0;
    }
    if (s.idle) migrate_to(s.worker);
  }

  // Hands the busiest eligible sub-domain to an idle worker.
  void migrate_to(std::uint32_t idle_worker) {
    if (!ctx_.config.migration || workers_ < 2 || balance_.empty()) return;
    std::vector<std::uint32_t> busy(static_cast<std::size_t>(workers_), 0);
    for (std::uint32_t d = 0; d < backlog_.size(); ++d) {
      if (backlog_[d].pending > 0) ++busy[registry_.owners()[d]];
    }
    std::optional<std::uint32_t> best;
    for (std::uint32_t d = 0; d < backlog_.size(); ++d) {
      const std::uint32_t owner = registry_.owners()[d];
      if (owner == idle_worker || migrating_[d]) continue;
      const Backlog& b = backlog_[d];
      const bool stuck = !b.loaded && b.pending > ctx_.config.unload_high;
      const bool shared = b.pending > ctx_.config.unload_low && busy[owner] > 1;
      if (!stuck && !shared) continue;
      if (!best || b.pending > backlog_[*best].pending) best = d;
    }
    if (!best) return;
    const OwnershipUpdate u{registry_.version() + 1, *best, idle_worker};
    registry_.apply(u);
    migrating_[*best] = u.version;
    backlog_[*best] = {};
    ++migrations_;
    for (int w = 0; w < workers_; ++w) send(rank_of(static_cast<std::uint32_t>(w)), u);
  }

  void broadcast_terminate() {
    if (terminated_) return;
    terminated_ = true;
    for (int w = 0; w < workers_; ++w) {
      try {
        send(rank_of(static_cast<std::uint32_t>(w)), Terminate{});
      } catch (...) {
      }
    }
  }

  void collect_finals() {
    const auto deadline = std::chrono::steady_clock::now() + ctx_.config.watchdog;
    while (static_cast<int>(finals_by_worker_.size()) < workers_ && error_.empty()) {
      std::optional<Envelope> env;
      if (!early_.empty()) {
        env = std::move(early_.front());
        early_.pop_front();
      } else {
        env = ep_.receive(std::chrono::microseconds(50000));
      }
      if (!env) {
        if (std::chrono::steady_clock::now() > deadline) throw ProtocolError("coordinator: workers did not stop");
        continue;
      }
      Decoded d = decode(env->bytes, ctx_.scene.grid());
      if (auto* s = std::get_if<Status>(&d.message)) {
        if (!s->error.empty()) error_ = s->error;
        if (s->final) finals_by_worker_[s->worker] = s->counters;
      }
    }
    ep_.flush();
    for (const auto& [w, c] : finals_by_worker_) finals_.push_back(c);
  }

  SpectralImage assemble() {
    const Camera& cam = ctx_.scene.camera();
    SpectralImage img(cam.width, cam.height, ctx_.scene.grid());
    for (std::size_t p = 0; p < contributions_.size(); ++p) {
      auto& list = contributions_[p];
      if (list.empty()) continue;
      if (ctx_.config.ordered) {
        std::sort(list.begin(), list.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
      }
      Spectrum acc(ctx_.scene.grid());
      for (const auto& [key, v] : list) acc += v;
      img.set(p, acc);
    }
    return img;
  }

  const RunContext& ctx_;
  Endpoint& ep_;
  Registry registry_;
  int workers_;
  std::deque<Envelope> early_;
  std::vector<Backlog> backlog_;
  std::vector<std::uint64_t> migrating_;  // pending update version, 0 if none
  std::vector<std::vector<std::pair<std::uint64_t, Spectrum>>> contributions_;
  std::unordered_set<RecordId, RecordIdHash> contribution_seen_;
  std::unordered_map<RecordId, std::int64_t, RecordIdHash> balance_;
  std::unordered_set<RecordId, RecordIdHash> created_seen_;
  std::unordered_set<RecordId, RecordIdHash> completed_seen_;
  LedgerCounters ledger_;
  std::uint64_t primaries_ = 0;
  std::uint64_t contribution_count_ = 0;
  std::uint64_t duplicate_contributions_ = 0;
  std::uint64_t migrations_ = 0;
  std::map<std::uint32_t, WorkerCounters> finals_by_worker_;
  std::vector<WorkerCounters> finals_;
  std::string error_;
  bool terminated_ = false;
};

void validate(const Scene& scene, const Partition& part, const DdmConfig& config) {
  if (config.workers < 1) throw ConfigError("workers must be >= 1");
  if (config.batch_size < 1) throw ConfigError("batch size must be >= 1");
  for (const auto& d : part.domains) {
    if (d.footprint_bytes > config.budget_bytes) {
      throw ConfigError("memory budget of " + std::to_string(config.budget_bytes) +
                        " bytes cannot hold sub-domain " + std::to_string(d.id) + " (" +
                        std::to_string(d.footprint_bytes) + " bytes)");
    }
  }
  if (scene.render_settings().max_bounces > kMaxPathDepth) throw ConfigError("max_bounces too large");
}

}  // namespace

SpectralImage run_distributed(const Scene& scene, const DdmConfig& config,
                              const RenderSettings& settings, RunStats* stats) {
  const auto start = std::chrono::steady_clock::now();
  for (int s : config.splits) {
    if (s < 1) throw ConfigError("split counts must be >= 1");
  }
  if (settings.max_bounces > kMaxPathDepth) throw ConfigError("max_bounces exceeds path key capacity");
  const Partition part = partition(scene, config.splits);
  validate(scene, part, config);

  RunContext ctx{scene, part, config, settings, assign_homes(part, config.workers), 0};
  ctx.max_crossings = config.max_crossings
                          ? config.max_crossings
                          : static_cast<std::uint32_t>(4 * (config.splits[0] + config.splits[1] +
                                                            config.splits[2]) + 8);
  RunStats local_stats;
  RunStats& st = stats ? *stats : local_stats;
  st = RunStats{};
  st.domains = part.size();
  st.triangle_references = part.triangle_references();
  const int ranks = config.workers + 1;
  SpectralImage image;

  if (config.transport == TransportKind::in_process) {
    auto hub = InProcessHub::create(ranks, config.delays);
    std::vector<std::unique_ptr<Endpoint>> eps;
    for (int r = 0; r < ranks; ++r) eps.push_back(hub->endpoint(r));
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(config.workers));
    for (int w = 0; w < config.workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          Worker(ctx, *eps[static_cast<std::size_t>(w) + 1], static_cast<std::uint32_t>(w)).run();
        } catch (...) {
          failures[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    std::exception_ptr coordinator_failure;
    try {
      image = Coordinator(ctx, *eps[0]).run(st);
    } catch (...) {
      coordinator_failure = std::current_exception();
    }
    for (auto& t : threads) t.join();
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
    if (coordinator_failure) std::rethrow_exception(coordinator_failure);
  } else {
    SocketMesh mesh(ranks);
    std::vector<pid_t> children;
    for (int w = 0; w < config.workers; ++w) {
      const pid_t pid = ::fork();
      if (pid < 0) throw std::runtime_error("fork failed");
      if (pid == 0) {
        int code = 0;
        try {
          auto ep = mesh.endpoint(w + 1);
          Worker(ctx, *ep, static_cast<std::uint32_t>(w)).run();
        } catch (const std::exception& e) {
          spdlog::error("worker {}: {}", w, e.what());
          code = 1;
        }
        ::_exit(code);
      }
      children.push_back(pid);
    }
    std::exception_ptr coordinator_failure;
    {
      auto ep = mesh.endpoint(0);
      try {
        image = Coordinator(ctx, *ep).run(st);
      } catch (...) {
        coordinator_failure = std::current_exception();
      }
    }
    bool child_failed = false;
    for (pid_t pid : children) {
      int status = 0;
      ::waitpid(pid, &status, 0);
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) child_failed = true;
    }
    if (coordinator_failure) std::rethrow_exception(coordinator_failure);
    if (child_failed) throw std::runtime_error("a worker process exited abnormally");
  }
  st.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return image;
}

}  // namespace prism::ddm
