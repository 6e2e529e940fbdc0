// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "prism/ddm/partition.hpp"

namespace prism::ddm {

/// Byte layout: docs/wire_protocol.md.
inline constexpr std::uint32_t kProtocolVersion = 1;

enum class MessageKind : std::uint8_t {
  ray = 0,
  shadow_probe = 1,
  shadow_answer = 2,
  pixel_contrib = 3,
  ownership_update = 4,
  terminate = 5,
  status = 6,
  handshake = 7,
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ledger identity of a ray or shadow probe. Rays use kRayKeySuffix in the
/// low 16 bits of the key, probes the light index.
struct RecordId {
  std::uint32_t pixel = 0;
  std::uint64_t key = 0;
  friend bool operator==(const RecordId&, const RecordId&) = default;
  bool is_probe() const { return (key & kRayKeySuffix) != kRayKeySuffix; }
};

struct RecordIdHash {
  std::size_t operator()(const RecordId& id) const {
    std::uint64_t h = id.key * 0x9E3779B97F4A7C15ull ^ (std::uint64_t{id.pixel} + 0x632BE59BD9B4E019ull);
    h ^= h >> 29;
    return static_cast<std::size_t>(h * 0xBF58476D1CE4E5B9ull);
  }
};

struct ShadowAnswer {
  std::uint32_t pixel = 0;
  std::uint64_t path_key = 0;
  bool visible = false;
  Spectrum contribution;
};

struct OwnershipUpdate {
  std::uint64_t version = 0;
  std::uint32_t domain = 0;
  std::uint32_t owner = 0;  // worker index
};

struct Terminate {};

struct DomainBacklog {
  std::uint32_t domain = 0;
  std::uint32_t pending = 0;
  bool loaded = false;
};

struct WorkerCounters {
  std::uint64_t rays_traced = 0;     // ray segments traced (one per sub-domain visit)
  std::uint64_t probes_traced = 0;   // forwarded probe segments tested
  std::uint64_t crossings = 0;       // ray records sent across an interface
  std::uint64_t probe_crossings = 0;
  std::uint64_t loads = 0;
  std::uint64_t unloads = 0;
  std::uint64_t forwarded = 0;       // records relayed after an ownership change
  std::uint64_t dropped = 0;         // records stopped by the crossing guard
  std::uint64_t peak_loaded_bytes = 0;
  std::uint64_t budget_violations = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t bytes_sent = 0;
};

struct Status {
  std::uint32_t worker = 0;
  bool idle = false;
  bool final = false;
  std::uint64_t registry_version = 0;
  std::vector<RecordId> created;
  std::vector<RecordId> completed;
  std::vector<DomainBacklog> backlog;
  WorkerCounters counters;
  std::string error;
};

struct Handshake {
  std::uint32_t version = kProtocolVersion;
  WavelengthGrid grid;
  std::uint32_t domains = 0;
};

using Message = std::variant<BoundaryRayRecord, ShadowProbeRecord, ShadowAnswer, Contribution,
                             OwnershipUpdate, Terminate, Status, Handshake>;

MessageKind kind_of(const Message& m);

/// Spectra are written without a length; `bins` comes from the handshake.
std::vector<std::uint8_t> encode(const Message& m, std::uint32_t sender);

struct Decoded {
  std::uint32_t sender = 0;
  Message message;
};

/// Throws ProtocolError on malformed input, unknown kinds or trailing bytes.
Decoded decode(std::span<const std::uint8_t> bytes, const WavelengthGrid& grid);

}  // namespace prism::ddm
