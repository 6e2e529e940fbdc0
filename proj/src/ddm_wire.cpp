// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include "prism/ddm/wire.hpp"

#include "prism/bytes.hpp"

namespace prism::ddm {

namespace {

constexpr std::uint8_t kHandshakeMagic[4] = {'P', 'R', 'D', 'M'};

void put_vec(ByteWriter& w, const Vec3& v) {
  w.put_f64(v.x);
  w.put_f64(v.y);
  w.put_f64(v.z);
}

Vec3 get_vec(ByteReader& r) {
  Vec3 v;
  v.x = r.get_f64();
  v.y = r.get_f64();
  v.z = r.get_f64();
  return v;
}

void put_spectrum(ByteWriter& w, const Spectrum& s) {
  for (double v : s.samples()) w.put_f64(v);
}

Spectrum get_spectrum(ByteReader& r, const WavelengthGrid& grid) {
  std::vector<double> s(grid.bin_count);
  for (auto& v : s) v = r.get_f64();
  return Spectrum(grid, std::move(s));
}

void put_ids(ByteWriter& w, const std::vector<RecordId>& ids) {
  w.put(static_cast<std::uint32_t>(ids.size()));
  for (const auto& id : ids) {
    w.put(id.pixel);
    w.put(id.key);
  }
}

std::vector<RecordId> get_ids(ByteReader& r) {
  const auto n = r.get<std::uint32_t>();
  if (n > r.remaining() / 12) throw ProtocolError("status: id list longer than message");
  std::vector<RecordId> ids(n);
  for (auto& id : ids) {
    id.pixel = r.get<std::uint32_t>();
    id.key = r.get<std::uint64_t>();
  }
  return ids;
}

void put_counters(ByteWriter& w, const WorkerCounters& c) {
  for (std::uint64_t v : {c.rays_traced, c.probes_traced, c.crossings, c.probe_crossings, c.loads,
                          c.unloads, c.forwarded, c.dropped, c.peak_loaded_bytes,
                          c.budget_violations, c.messages_sent, c.bytes_sent}) {
    w.put(v);
  }
}

WorkerCounters get_counters(ByteReader& r) {
  WorkerCounters c;
  for (std::uint64_t* v : {&c.rays_traced, &c.probes_traced, &c.crossings, &c.probe_crossings,
                           &c.loads, &c.unloads, &c.forwarded, &c.dropped, &c.peak_loaded_bytes,
                           &c.budget_violations, &c.messages_sent, &c.bytes_sent}) {
    *v = r.get<std::uint64_t>();
  }
  return c;
}

struct Encoder {
  ByteWriter& w;

  void operator()(const BoundaryRayRecord& rec) const {
    w.put(rec.destination);
    w.put(rec.pixel);
    w.put(rec.path_key);
    w.put(rec.depth);
    w.put(static_cast<std::uint8_t>(rec.tag));
    w.put(rec.crossings);
    put_vec(w, rec.origin);
    put_vec(w, rec.direction);
    w.put_f64(rec.t_entry);
    w.put_f64(rec.t_min);
    w.put_f64(rec.t_max);
    put_spectrum(w, rec.throughput);
  }
  void operator()(const ShadowProbeRecord& p) const {
    w.put(p.destination);
    w.put(p.pixel);
    w.put(p.path_key);
    w.put(p.crossings);
    put_vec(w, p.origin);
    put_vec(w, p.direction);
    w.put_f64(p.t_entry);
    w.put_f64(p.t_min);
    w.put_f64(p.t_max);
    put_spectrum(w, p.contribution);
  }
  void operator()(const ShadowAnswer& a) const {
    w.put(a.pixel);
    w.put(a.path_key);
    w.put(static_cast<std::uint8_t>(a.visible ? 1 : 0));
    put_spectrum(w, a.contribution);
  }
  void operator()(const Contribution& c) const {
    w.put(c.pixel);
    w.put(c.path_key);
    put_spectrum(w, c.value);
  }
  void operator()(const OwnershipUpdate& u) const {
    w.put(u.version);
    w.put(u.domain);
    w.put(u.owner);
  }
  void operator()(const Terminate&) const {}
  void operator()(const Status& s) const {
    w.put(s.worker);
    w.put(static_cast<std::uint8_t>((s.idle ? 1 : 0) | (s.final ? 2 : 0)));
    w.put(s.registry_version);
    put_ids(w, s.created);
    put_ids(w, s.completed);
    w.put(static_cast<std::uint32_t>(s.backlog.size()));
    for (const auto& b : s.backlog) {
      w.put(b.domain);
      w.put(b.pending);
      w.put(static_cast<std::uint8_t>(b.loaded ? 1 : 0));
    }
    put_counters(w, s.counters);
    w.put_string(s.error);
  }
  void operator()(const Handshake& h) const {
    for (auto b : kHandshakeMagic) w.put(b);
    w.put(h.version);
    w.put_f64(h.grid.start_nm);
    w.put_f64(h.grid.end_nm);
    w.put(static_cast<std::uint32_t>(h.grid.bin_count));
    w.put(h.domains);
  }
};

}  // namespace

MessageKind kind_of(const Message& m) { return static_cast<MessageKind>(m.index()); }

std::vector<std::uint8_t> encode(const Message& m, std::uint32_t sender) {
  ByteWriter w;
  w.put(static_cast<std::uint8_t>(kind_of(m)));
  w.put(sender);
  std::visit(Encoder{w}, m);
  return w.take();
}

Decoded decode(std::span<const std::uint8_t> bytes, const WavelengthGrid& grid) {
  try {
    ByteReader r(bytes);
    const auto kind = r.get<std::uint8_t>();
    Decoded d;
    d.sender = r.get<std::uint32_t>();
    switch (static_cast<MessageKind>(kind)) {
      case MessageKind::ray: {
        BoundaryRayRecord rec;
        rec.destination = r.get<std::int32_t>();
        rec.pixel = r.get<std::uint32_t>();
        rec.path_key = r.get<std::uint64_t>();
        rec.depth = r.get<std::int32_t>();
        const auto tag = r.get<std::uint8_t>();
        if (tag > static_cast<std::uint8_t>(PathTag::shadow)) throw ProtocolError("ray: bad path tag");
        rec.tag = static_cast<PathTag>(tag);
        rec.crossings = r.get<std::uint32_t>();
        rec.origin = get_vec(r);
        rec.direction = get_vec(r);
        rec.t_entry = r.get_f64();
        rec.t_min = r.get_f64();
        rec.t_max = r.get_f64();
        rec.throughput = get_spectrum(r, grid);
        d.message = std::move(rec);
        break;
      }
      case MessageKind::shadow_probe: {
        ShadowProbeRecord p;
        p.destination = r.get<std::int32_t>();
        p.pixel = r.get<std::uint32_t>();
        p.path_key = r.get<std::uint64_t>();
        p.crossings = r.get<std::uint32_t>();
        p.origin = get_vec(r);
        p.direction = get_vec(r);
        p.t_entry = r.get_f64();
        p.t_min = r.get_f64();
        p.t_max = r.get_f64();
        p.contribution = get_spectrum(r, grid);
        d.message = std::move(p);
        break;
      }
      case MessageKind::shadow_answer: {
        ShadowAnswer a;
        a.pixel = r.get<std::uint32_t>();
        a.path_key = r.get<std::uint64_t>();
        a.visible = r.get<std::uint8_t>() != 0;
        a.contribution = get_spectrum(r, grid);
        d.message = std::move(a);
        break;
      }
      case MessageKind::pixel_contrib: {
        Contribution c;
        c.pixel = r.get<std::uint32_t>();
        c.path_key = r.get<std::uint64_t>();
        c.value = get_spectrum(r, grid);
        d.message = std::move(c);
        break;
      }
      case MessageKind::ownership_update: {
        OwnershipUpdate u;
        u.version = r.get<std::uint64_t>();
        u.domain = r.get<std::uint32_t>();
        u.owner = r.get<std::uint32_t>();
        d.message = u;
        break;
      }
      case MessageKind::terminate:
        d.message = Terminate{};
        break;
      case MessageKind::status: {
        Status s;
        s.worker = r.get<std::uint32_t>();
        const auto flags = r.get<std::uint8_t>();
        s.idle = flags & 1;
        s.final = flags & 2;
        s.registry_version = r.get<std::uint64_t>();
        s.created = get_ids(r);
        s.completed = get_ids(r);
        const auto nb = r.get<std::uint32_t>();
        if (nb > r.remaining() / 9) throw ProtocolError("status: backlog list longer than message");
        s.backlog.resize(nb);
        for (auto& b : s.backlog) {
          b.domain = r.get<std::uint32_t>();
          b.pending = r.get<std::uint32_t>();
          b.loaded = r.get<std::uint8_t>() != 0;
        }
        s.counters = get_counters(r);
        s.error = r.get_string();
        d.message = std::move(s);
        break;
      }
      case MessageKind::handshake: {
        for (auto b : kHandshakeMagic) {
          if (r.get<std::uint8_t>() != b) throw ProtocolError("handshake: bad magic");
        }
        Handshake h;
        h.version = r.get<std::uint32_t>();
        const double start = r.get_f64();
        const double end = r.get_f64();
        const auto bins = r.get<std::uint32_t>();
        h.grid = WavelengthGrid::make(start, end, bins);
        h.domains = r.get<std::uint32_t>();
        d.message = h;
        break;
      }
      default:
        throw ProtocolError("unknown message kind " + std::to_string(kind));
    }
    if (!r.done()) throw ProtocolError("trailing bytes after message");
    return d;
  } catch (const TruncatedInput&) {
    throw ProtocolError("truncated message");
  } catch (const std::invalid_argument& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what());
  }
}

}  // namespace prism::ddm
